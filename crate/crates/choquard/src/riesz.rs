//! Angular-reduced Riesz kernels, Riesz potentials of radial densities, and
//! the Hardy-Littlewood double integrals behind the ||.||_HL norm.
//!
//! For radial densities the 3-D convolution collapses to one dimension:
//! with A_alpha(r, s) the spherical average of |x-y|^{-alpha} over |y| = s
//! at |x| = r,
//!
//!   (I_alpha f)(r)  = int f(s) A_alpha(r, s) s^2 ds,
//!   int int f(x) g(y) |x-y|^{-alpha} dx dy
//!                   = 4 pi int f(r) (I_alpha g)(r) r^2 dr.
//!
//! A_alpha is closed-form, so the only numerical difficulty is the
//! |r-s|^{2-alpha} kink on the diagonal. Quadrature panels are split at
//! s = r and refined geometrically toward the split, which keeps every
//! sub-integrand smooth.

use crate::constants::Alpha;
use crate::error::{Error, Result};
use crate::grid::{Boundary, GridKind, Panel, RadialField, RadialGrid};
use crate::par::{map_indexed, map_indexed_seq, pairwise_sum};
use std::f64::consts::PI;

/// Geometric ratio of the diagonal refinement ladder.
const DIAG_RATIO: f64 = 0.3;
/// Default number of refinement levels toward the diagonal.
pub const DIAG_LEVELS: usize = 26;
/// Tolerance on |alpha - 2| that selects the logarithmic branch.
const LOG_BRANCH_TOL: f64 = 1e-9;

/// Branch of the angular reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelBranch {
    Generic,
    AlphaEqualsTwo,
}

/// Spherical average of |x-y|^{-exponent} over directions of y.
///
/// A negative exponent gives the reversed-HLS kernel |x-y|^{+|exponent|}.
#[derive(Debug, Clone, Copy)]
pub struct AngularKernel {
    exponent: f64,
    branch: KernelBranch,
}

impl AngularKernel {
    pub fn riesz(alpha: Alpha) -> Self {
        Self::with_exponent(alpha.get())
    }

    pub(crate) fn with_exponent(exponent: f64) -> Self {
        let branch = if (exponent - 2.0).abs() <= LOG_BRANCH_TOL {
            KernelBranch::AlphaEqualsTwo
        } else {
            KernelBranch::Generic
        };
        Self { exponent, branch }
    }

    pub fn branch(&self) -> KernelBranch {
        self.branch
    }

    /// A(r, s) for r, s > 0. Returns +infinity on the diagonal when the
    /// kernel is non-integrable there (exponent >= 2); quadrature never
    /// places a node on the diagonal.
    pub fn eval(&self, r: f64, s: f64) -> f64 {
        debug_assert!(r > 0.0 && s > 0.0);
        // log of |r-s|/(r+s); -inf on the diagonal, which the stable
        // exp_m1 form below propagates correctly.
        let l = ((r - s).abs() / (r + s)).ln();
        match self.branch {
            KernelBranch::AlphaEqualsTwo => -2.0 * PI * l / (r * s),
            KernelBranch::Generic => {
                let beta = 2.0 - self.exponent;
                -(2.0 * PI / (r * s * beta)) * (r + s).powf(beta) * f64::exp_m1(beta * l)
            }
        }
    }
}

/// Public entry for the angular reduction A_alpha(r, s).
pub fn angular_kernel(alpha: Alpha, r: f64, s: f64) -> f64 {
    AngularKernel::riesz(alpha).eval(r, s)
}

fn graded_subdivision(a: f64, b: f64, toward_b: bool, levels: usize) -> Vec<(f64, f64)> {
    // Geometric ladder of sub-intervals accumulating at the singular end.
    let mut cuts = Vec::with_capacity(levels + 1);
    let width = b - a;
    if width <= 0.0 {
        return Vec::new();
    }
    let mut frac = 1.0;
    cuts.push(0.0);
    for _ in 0..levels {
        frac *= DIAG_RATIO;
        if frac * width < 1e-15 * (a.abs() + b.abs() + width) {
            break;
        }
        cuts.push(1.0 - frac);
    }
    cuts.push(1.0);
    let mut out = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (lo, hi) = if toward_b {
            (a + w[0] * width, a + w[1] * width)
        } else {
            (b - w[1] * width, b - w[0] * width)
        };
        out.push((lo, hi));
    }
    out
}

/// Off-node density evaluator for the diagonal refinement of one panel.
///
/// Whole-space panels cover decades of radius (the last one reaches to
/// infinity), and a sign-definite density can fall through many orders
/// within a panel; plain polynomial interpolation is then useless and its
/// noise gets amplified by the s^2 map Jacobian. For such panels the
/// density is interpolated as ln|f| against ln s, which is exact on
/// power-law tails, with linear log-log extension beyond the node hull.
enum PanelInterp {
    /// Standard parameter-space barycentric, with a floating-point floor.
    Linear { floor: f64 },
    LogLog {
        sign: f64,
        sigma: Vec<f64>,
        z: Vec<f64>,
        bary: Vec<f64>,
        /// Panel edges map to s = 0 / s = infinity (log coordinate
        /// unbounded there); only then is hull extrapolation replaced by a
        /// linear log-log extension.
        open_below: bool,
        open_above: bool,
    },
}

impl PanelInterp {
    fn build(grid: &RadialGrid, panel: &Panel, values: &[f64]) -> Self {
        let p = grid.points_per_panel();
        let vals = &values[panel.first..panel.first + p];
        let mut max = 0.0_f64;
        for &v in vals {
            max = max.max(v.abs());
        }
        let sign_definite = vals.iter().all(|&v| v > 0.0) || vals.iter().all(|&v| v < 0.0);
        if !grid.is_whole_space() || !sign_definite {
            return PanelInterp::Linear { floor: 1e-13 * max };
        }
        let sign = vals[0].signum();
        let sigma: Vec<f64> = (0..p)
            .map(|j| grid.nodes()[panel.first + j].ln())
            .collect();
        let z: Vec<f64> = vals.iter().map(|&v| v.abs().ln()).collect();
        let mut bary = vec![1.0; p];
        for j in 0..p {
            for k in 0..p {
                if k != j {
                    bary[j] /= sigma[j] - sigma[k];
                }
            }
        }
        PanelInterp::LogLog {
            sign,
            sigma,
            z,
            bary,
            open_below: panel.a == 0.0,
            open_above: panel.b >= 1.0,
        }
    }

    fn eval(&self, grid: &RadialGrid, panel: &Panel, values: &[f64], u: f64, s: f64) -> f64 {
        match self {
            PanelInterp::Linear { floor } => {
                let f = grid.panel_interp(panel, values, u);
                if f.abs() < *floor {
                    0.0
                } else {
                    f
                }
            }
            PanelInterp::LogLog {
                sign,
                sigma,
                z,
                bary,
                open_below,
                open_above,
            } => {
                let x = s.ln();
                let p = sigma.len();
                let zq = if *open_above && x > sigma[p - 1] {
                    let slope = (z[p - 1] - z[p - 2]) / (sigma[p - 1] - sigma[p - 2]);
                    z[p - 1] + slope * (x - sigma[p - 1])
                } else if *open_below && x < sigma[0] {
                    let slope = (z[1] - z[0]) / (sigma[1] - sigma[0]);
                    z[0] + slope * (x - sigma[0])
                } else {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    let mut hit = None;
                    for j in 0..p {
                        let d = x - sigma[j];
                        if d == 0.0 {
                            hit = Some(z[j]);
                            break;
                        }
                        let c = bary[j] / d;
                        num += c * z[j];
                        den += c;
                    }
                    hit.unwrap_or(num / den)
                };
                sign * zq.exp()
            }
        }
    }
}

/// Integral of values(s) s^2 A(r, s) ds over one sub-interval of a host
/// panel, with nodal values interpolated off the host panel.
fn subinterval_integral(
    grid: &RadialGrid,
    panel: &Panel,
    values: &[f64],
    interp: &PanelInterp,
    kernel: AngularKernel,
    r: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let (gx, gw) = grid.reference_rule();
    let half = (hi - lo) / 2.0;
    let mut acc = 0.0;
    for q in 0..gx.len() {
        let u = lo + (gx[q] + 1.0) * half;
        let s = grid.radius_of_param(u);
        if s == r {
            continue; // measure-zero diagonal hit
        }
        let f = interp.eval(grid, panel, values, u, s);
        acc += gw[q] * half * grid.jacobian(u) * f * s * s * kernel.eval(r, s);
    }
    acc
}

/// (I f)(r) = int f(s) A(r, s) s^2 ds over the grid's radial domain.
pub(crate) fn potential_at(
    grid: &RadialGrid,
    values: &[f64],
    kernel: AngularKernel,
    r: f64,
    levels: usize,
) -> f64 {
    let u_r = grid.param_of_radius(r);
    let nodes = grid.nodes();
    let weights = grid.weights();
    let mut parts = Vec::with_capacity(grid.panels().len() + 4);
    for panel in grid.panels() {
        let width = panel.b - panel.a;
        if u_r > panel.a && u_r < panel.b {
            // split the containing panel at s = r and refine toward it
            let interp = PanelInterp::build(grid, panel, values);
            for (lo, hi) in graded_subdivision(panel.a, u_r, true, levels) {
                parts.push(subinterval_integral(grid, panel, values, &interp, kernel, r, lo, hi));
            }
            for (lo, hi) in graded_subdivision(u_r, panel.b, false, levels) {
                parts.push(subinterval_integral(grid, panel, values, &interp, kernel, r, lo, hi));
            }
        } else if u_r <= panel.a && panel.a - u_r < width {
            let interp = PanelInterp::build(grid, panel, values);
            for (lo, hi) in graded_subdivision(panel.a, panel.b, false, levels) {
                parts.push(subinterval_integral(grid, panel, values, &interp, kernel, r, lo, hi));
            }
        } else if u_r >= panel.b && u_r - panel.b < width {
            let interp = PanelInterp::build(grid, panel, values);
            for (lo, hi) in graded_subdivision(panel.a, panel.b, true, levels) {
                parts.push(subinterval_integral(grid, panel, values, &interp, kernel, r, lo, hi));
            }
        } else {
            // well separated: the stored rule is already spectral here
            let mut acc = 0.0;
            for j in panel.first..panel.first + grid.points_per_panel() {
                let s = nodes[j];
                acc += weights[j] * values[j] * s * s * kernel.eval(r, s);
            }
            parts.push(acc);
        }
    }
    pairwise_sum(&parts)
}

pub(crate) fn potential_values(
    grid: &RadialGrid,
    values: &[f64],
    kernel: AngularKernel,
    levels: usize,
) -> Vec<f64> {
    map_indexed(grid.len(), |i| {
        potential_at(grid, values, kernel, grid.nodes()[i], levels)
    })
}

/// Sequential twin of [`potential_values`], kept for benchmarks.
pub fn riesz_potential_serial(f: &RadialField, alpha: Alpha) -> Result<RadialField> {
    let kernel = AngularKernel::riesz(alpha);
    let grid = f.grid();
    let vals = map_indexed_seq(grid.len(), |i| {
        potential_at(grid, f.values(), kernel, grid.nodes()[i], DIAG_LEVELS)
    });
    finish_potential(f, vals)
}

/// Riesz potential I_alpha f of a radial density (nodal evaluation).
pub fn riesz_potential(f: &RadialField, alpha: Alpha) -> Result<RadialField> {
    let kernel = AngularKernel::riesz(alpha);
    let grid = f.grid();
    let vals = potential_values(grid, f.values(), kernel, DIAG_LEVELS);
    finish_potential(f, vals)
}

fn finish_potential(f: &RadialField, vals: Vec<f64>) -> Result<RadialField> {
    let grid = f.grid();
    let boundary = match grid.kind() {
        GridKind::WholeSpace { .. } => Boundary::Decaying,
        GridKind::UnitBall => Boundary::Value(grid.interpolate(&vals, 1.0)),
    };
    RadialField::from_values(grid, boundary, vals)
}

fn paired_integral(f: &RadialField, g: &RadialField, kernel: AngularKernel, levels: usize) -> f64 {
    // 4 pi int f(r) (I g)(r) r^2 dr, one row per outer node.
    let grid = f.grid();
    let rows: Vec<f64> = map_indexed(grid.len(), |i| {
        let r = grid.nodes()[i];
        let pot = potential_at(grid, g.values(), kernel, r, levels);
        grid.weights()[i] * 4.0 * PI * r * r * f.values()[i] * pot
    });
    pairwise_sum(&rows)
}

pub fn hl_double_integral_with(
    f: &RadialField,
    g: &RadialField,
    kernel: AngularKernel,
    levels: usize,
) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    if std::ptr::eq(f, g) || f.values() == g.values() {
        return Ok(paired_integral(f, g, kernel, levels));
    }
    // one triangle mirrored: symmetrization makes D(f,g) == D(g,f) exact
    let a = paired_integral(f, g, kernel, levels);
    let b = paired_integral(g, f, kernel, levels);
    Ok(0.5 * (a + b))
}

/// D_alpha(f, g) = int int f(x) g(y) |x-y|^{-alpha} dx dy for radial
/// densities f, g on a shared grid.
pub fn hl_double_integral(f: &RadialField, g: &RadialField, alpha: Alpha) -> Result<f64> {
    hl_double_integral_with(f, g, AngularKernel::riesz(alpha), DIAG_LEVELS)
}

/// ||u||_HL = D_alpha(|u|^{6-alpha}, |u|^{6-alpha})^{1/(2(6-alpha))}.
pub fn hls_norm(u: &RadialField, alpha: Alpha) -> Result<f64> {
    let q = 6.0 - alpha.get();
    let powered = u.map(|v| v.abs().powf(q))?;
    let d = hl_double_integral(&powered, &powered, alpha)?;
    Ok(d.max(0.0).powf(1.0 / (2.0 * q)))
}

/// Reversed-HLS double integral: int int |f(x) g(y)| |x-y|^{+alpha} dx dy
/// for compactly supported (unit-ball) densities.
pub fn rhls_double_integral(f: &RadialField, g: &RadialField, alpha: Alpha) -> Result<f64> {
    if !f.grid().is_unit_ball() || !g.grid().is_unit_ball() {
        return Err(Error::WrongDomain {
            expected: GridKind::UnitBall,
        });
    }
    let fa = f.map(f64::abs)?;
    let ga = g.map(f64::abs)?;
    hl_double_integral_with(&fa, &ga, AngularKernel::with_exponent(-alpha.get()), DIAG_LEVELS)
}


/// Test-only access to the raw potential evaluator.
#[doc(hidden)]
pub fn potential_at_for_test(
    grid: &RadialGrid,
    values: &[f64],
    kernel: AngularKernel,
    r: f64,
    levels: usize,
) -> f64 {
    potential_at(grid, values, kernel, r, levels)
}
