//! Radial quadrature grids and sampled radial fields.
//!
//! A grid is a composite Gauss–Legendre rule, geometrically graded toward
//! r = 0 (and toward r = 1 on the unit ball). Whole space is covered through
//! the algebraic map r = L t/(1-t), t in (0,1); all panel bookkeeping happens
//! in the parameter variable so interpolation and differentiation stay
//! spectrally accurate on algebraically decaying profiles.

use crate::error::{Error, Result};
use crate::par::pairwise_sum;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Gauss points per quadrature panel.
pub const POINTS_PER_PANEL: usize = 12;

/// Domain covered by a radial grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    /// The unit ball; the radial parameter is r itself on [0, 1].
    UnitBall,
    /// All of R^3 through r = scale * t/(1-t) with parameter t on [0, 1).
    WholeSpace { scale: f64 },
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridKind::UnitBall => write!(f, "unit-ball"),
            GridKind::WholeSpace { scale } => write!(f, "whole-space(L={scale})"),
        }
    }
}

/// One Gauss–Legendre panel, stored in parameter coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    /// Parameter interval [a, b].
    pub a: f64,
    pub b: f64,
    /// Radius interval [ra, rb] (image of [a, b]).
    pub ra: f64,
    pub rb: f64,
    /// Index of the panel's first node in the grid arrays.
    pub first: usize,
}

/// Reference Gauss–Legendre data shared by all panels.
#[derive(Debug, Clone)]
struct Reference {
    /// Nodes on [-1, 1].
    x: Vec<f64>,
    /// Weights on [-1, 1].
    w: Vec<f64>,
    /// Barycentric weights for the nodes.
    bary: Vec<f64>,
    /// Differentiation matrix (row-major p x p).
    diff: Vec<f64>,
    /// Cumulative integration matrix: (C v)_k = integral from -1 to x_k of
    /// the interpolant of v.
    cumul: Vec<f64>,
}

/// Composite graded Gauss–Legendre grid for radial integrals on the ball or
/// the whole space.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    kind: GridKind,
    /// Radii, strictly increasing, all > 0.
    nodes: Vec<f64>,
    /// Weights for the line measure dr (map Jacobian included).
    weights: Vec<f64>,
    /// Parameter coordinate of each node.
    params: Vec<f64>,
    panels: Vec<Panel>,
    reference: Reference,
    grading: f64,
}

fn gauss_legendre(p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; p];
    let mut w = vec![0.0; p];
    let m = p.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (p as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..p {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = p as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[p - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[p - 1 - i] = wi;
    }
    (x, w)
}

fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let p = x.len();
    let mut bw = vec![1.0; p];
    for j in 0..p {
        for k in 0..p {
            if k != j {
                bw[j] /= x[j] - x[k];
            }
        }
    }
    bw
}

/// Evaluates the interpolant of nodal values `v` (nodes `x`, barycentric
/// weights `bw`) at `t`. Exact passthrough when `t` hits a node.
fn bary_eval(x: &[f64], bw: &[f64], v: &[f64], t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..x.len() {
        let d = t - x[j];
        if d == 0.0 {
            return v[j];
        }
        let c = bw[j] / d;
        num += c * v[j];
        den += c;
    }
    num / den
}

fn differentiation_matrix(x: &[f64], bw: &[f64]) -> Vec<f64> {
    let p = x.len();
    let mut d = vec![0.0; p * p];
    for i in 0..p {
        let mut diag = 0.0;
        for j in 0..p {
            if i != j {
                let v = (bw[j] / bw[i]) / (x[i] - x[j]);
                d[i * p + j] = v;
                diag -= v;
            }
        }
        d[i * p + i] = diag;
    }
    d
}

/// C_kj = integral_{-1}^{x_k} of the j-th Lagrange basis function, computed
/// with an oversampled Gauss rule on each partial interval.
fn cumulative_matrix(x: &[f64], bw: &[f64]) -> Vec<f64> {
    let p = x.len();
    let (qx, qw) = gauss_legendre(2 * p);
    let mut c = vec![0.0; p * p];
    let mut unit = vec![0.0; p];
    for j in 0..p {
        unit[j] = 1.0;
        for k in 0..p {
            let half = (x[k] + 1.0) / 2.0;
            let mut acc = 0.0;
            for q in 0..qx.len() {
                let t = -1.0 + (qx[q] + 1.0) * half;
                acc += qw[q] * half * bary_eval(x, bw, &unit, t);
            }
            c[k * p + j] = acc;
        }
        unit[j] = 0.0;
    }
    c
}

/// Two-sided geometric panel boundaries on [0, 1]: `m0` panels shrinking
/// toward 0 with ratio `g`, `m1` panels shrinking toward 1.
fn graded_boundaries(m0: usize, m1: usize, g: f64) -> Vec<f64> {
    let mut b = Vec::with_capacity(m0 + m1 + 1);
    b.push(0.0);
    for j in (0..m0 - 1).rev() {
        b.push(0.5 * g.powi(j as i32 + 1));
    }
    b.push(0.5);
    for j in 1..m1 {
        b.push(1.0 - 0.5 * g.powi(j as i32));
    }
    b.push(1.0);
    b
}

impl RadialGrid {
    /// Builds a graded composite grid with at least `n` nodes.
    ///
    /// `grading` is the geometric panel ratio in (0, 1); smaller values
    /// grade harder toward the origin (and the boundary on the ball).
    pub fn new(kind: GridKind, n: usize, grading: f64) -> Result<Arc<Self>> {
        if n < 16 {
            return Err(Error::GridTooSmall { requested: n });
        }
        if !(grading > 0.0 && grading < 1.0) || !grading.is_finite() {
            return Err(Error::InvalidGrading { value: grading });
        }
        if let GridKind::WholeSpace { scale } = kind {
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::InvalidMapScale { value: scale });
            }
        }
        let p = POINTS_PER_PANEL;
        let total_panels = (n.div_ceil(p)).max(4);
        // Concentration happens at the origin: bias the panel budget there.
        let m0 = ((total_panels * 3) / 5).max(2);
        let m1 = (total_panels - m0).max(2);
        let bounds = graded_boundaries(m0, m1, grading);

        let (x, w) = gauss_legendre(p);
        let bary = barycentric_weights(&x);
        let diff = differentiation_matrix(&x, &bary);
        let cumul = cumulative_matrix(&x, &bary);

        let mut nodes = Vec::with_capacity(bounds.len() * p);
        let mut weights = Vec::with_capacity(bounds.len() * p);
        let mut params = Vec::with_capacity(bounds.len() * p);
        let mut panels = Vec::with_capacity(bounds.len());
        for win in bounds.windows(2) {
            let (a, b) = (win[0], win[1]);
            let first = nodes.len();
            let half = (b - a) / 2.0;
            for i in 0..p {
                let u = a + (x[i] + 1.0) * half;
                let (r, jac) = match kind {
                    GridKind::UnitBall => (u, 1.0),
                    GridKind::WholeSpace { scale } => {
                        (scale * u / (1.0 - u), scale / ((1.0 - u) * (1.0 - u)))
                    }
                };
                params.push(u);
                nodes.push(r);
                weights.push(w[i] * half * jac);
            }
            let ra = match kind {
                GridKind::UnitBall => a,
                GridKind::WholeSpace { scale } => scale * a / (1.0 - a),
            };
            let rb = match kind {
                GridKind::UnitBall => b,
                GridKind::WholeSpace { scale } => {
                    if b >= 1.0 {
                        f64::INFINITY
                    } else {
                        scale * b / (1.0 - b)
                    }
                }
            };
            panels.push(Panel { a, b, ra, rb, first });
        }

        Ok(Arc::new(Self {
            kind,
            nodes,
            weights,
            params,
            panels,
            reference: Reference {
                x,
                w,
                bary,
                diff,
                cumul,
            },
            grading,
        }))
    }

    pub fn unit_ball(n: usize, grading: f64) -> Result<Arc<Self>> {
        Self::new(GridKind::UnitBall, n, grading)
    }

    pub fn whole_space(n: usize, grading: f64, scale: f64) -> Result<Arc<Self>> {
        Self::new(GridKind::WholeSpace { scale }, n, grading)
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn points_per_panel(&self) -> usize {
        POINTS_PER_PANEL
    }

    pub fn is_unit_ball(&self) -> bool {
        matches!(self.kind, GridKind::UnitBall)
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self.kind, GridKind::WholeSpace { .. })
    }

    /// Parameter coordinate of a radius.
    pub fn param_of_radius(&self, r: f64) -> f64 {
        match self.kind {
            GridKind::UnitBall => r,
            GridKind::WholeSpace { scale } => r / (scale + r),
        }
    }

    /// Radius of a parameter value.
    pub(crate) fn radius_of_param(&self, u: f64) -> f64 {
        match self.kind {
            GridKind::UnitBall => u,
            GridKind::WholeSpace { scale } => scale * u / (1.0 - u),
        }
    }

    /// dr/du at a parameter value.
    pub(crate) fn jacobian(&self, u: f64) -> f64 {
        match self.kind {
            GridKind::UnitBall => 1.0,
            GridKind::WholeSpace { scale } => scale / ((1.0 - u) * (1.0 - u)),
        }
    }

    /// Barycentric interpolation restricted to one panel's nodal values.
    pub(crate) fn panel_interp(&self, panel: &Panel, values: &[f64], u: f64) -> f64 {
        let t = 2.0 * (u - panel.a) / (panel.b - panel.a) - 1.0;
        bary_eval(
            &self.reference.x,
            &self.reference.bary,
            &values[panel.first..panel.first + POINTS_PER_PANEL],
            t,
        )
    }

    /// Reference Gauss nodes/weights on [-1, 1].
    pub(crate) fn reference_rule(&self) -> (&[f64], &[f64]) {
        (&self.reference.x, &self.reference.w)
    }

    fn panel_index_of_param(&self, u: f64) -> usize {
        let mut lo = 0usize;
        let mut hi = self.panels.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if u <= self.panels[mid].b {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// Interpolates nodal `values` at radius `r` (panel-local barycentric).
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let u = self.param_of_radius(r).clamp(0.0, 1.0);
        let panel = &self.panels[self.panel_index_of_param(u)];
        let t = 2.0 * (u - panel.a) / (panel.b - panel.a) - 1.0;
        let p = POINTS_PER_PANEL;
        bary_eval(
            &self.reference.x,
            &self.reference.bary,
            &values[panel.first..panel.first + p],
            t,
        )
    }

    /// d/dr of the field described by `values`, returned at every node.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let p = POINTS_PER_PANEL;
        let mut out = vec![0.0; values.len()];
        for panel in &self.panels {
            let scale = 2.0 / (panel.b - panel.a);
            for i in 0..p {
                let mut acc = 0.0;
                for j in 0..p {
                    acc += self.reference.diff[i * p + j] * values[panel.first + j];
                }
                let u = self.params[panel.first + i];
                out[panel.first + i] = acc * scale / self.jacobian(u);
            }
        }
        out
    }

    /// Antiderivative from r = 0 (in the line measure dr) evaluated at
    /// every node, plus the total integral.
    pub fn cumulative_integral(&self, values: &[f64]) -> (Vec<f64>, f64) {
        let p = POINTS_PER_PANEL;
        let mut out = vec![0.0; values.len()];
        let mut carried = 0.0;
        for panel in &self.panels {
            let half = (panel.b - panel.a) / 2.0;
            // Jacobian-weighted samples so the cumulative matrix integrates dr.
            let mut samples = [0.0; POINTS_PER_PANEL];
            for j in 0..p {
                samples[j] = values[panel.first + j] * self.jacobian(self.params[panel.first + j]);
            }
            let mut full = 0.0;
            for j in 0..p {
                full += self.reference.w[j] * half * samples[j];
            }
            for i in 0..p {
                let mut acc = 0.0;
                for j in 0..p {
                    acc += self.reference.cumul[i * p + j] * samples[j];
                }
                out[panel.first + i] = carried + acc * half;
            }
            carried += full;
        }
        (out, carried)
    }

    /// Largest gap between consecutive nodes (the origin counts as a node)
    /// among radii below `r_limit`.
    fn max_gap_below(&self, r_limit: f64) -> f64 {
        let mut prev = 0.0;
        let mut gap: f64 = 0.0;
        for &r in &self.nodes {
            if prev > r_limit {
                break;
            }
            gap = gap.max(r - prev);
            prev = r;
        }
        gap
    }

    /// Checks that a bubble of concentration `lambda` is resolved: node
    /// spacing at most 1/(8 lambda) for radii up to 1/lambda.
    pub fn check_resolution(&self, lambda: f64) -> Result<()> {
        let required = 1.0 / (8.0 * lambda);
        let spacing = self.max_gap_below(1.0 / lambda);
        if spacing > required {
            Err(Error::Resolution {
                lambda,
                spacing,
                required,
            })
        } else {
            Ok(())
        }
    }

    /// Largest concentration this grid resolves (bisection on the guard).
    pub fn max_resolved_lambda(&self) -> f64 {
        let mut lo = 1.0_f64;
        let mut hi = 1e9_f64;
        if self.check_resolution(lo).is_err() {
            return 0.0;
        }
        for _ in 0..64 {
            let mid = (lo * hi).sqrt();
            if self.check_resolution(mid).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// 32-point Gauss rule on [-1, 1] for test oracles.
#[cfg(test)]
pub(crate) fn test_reference_rule() -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(32)
}

/// Boundary class of a sampled field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Ball field vanishing at r = 1.
    Dirichlet,
    /// Ball field with the given trace at r = 1.
    Value(f64),
    /// Whole-space field decaying at least like 1/r.
    Decaying,
}

/// A radial function sampled on a grid's nodes.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    boundary: Boundary,
}

impl RadialField {
    pub fn from_fn<F: Fn(f64) -> f64>(
        grid: &Arc<RadialGrid>,
        boundary: Boundary,
        f: F,
    ) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::from_values(grid, boundary, values)
    }

    pub fn from_values(
        grid: &Arc<RadialGrid>,
        boundary: Boundary,
        values: Vec<f64>,
    ) -> Result<Self> {
        assert_eq!(values.len(), grid.len(), "value/node count mismatch");
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteField {
                    index,
                    radius: grid.nodes()[index],
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            boundary,
        })
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            boundary: if grid.is_unit_ball() {
                Boundary::Dirichlet
            } else {
                Boundary::Decaying
            },
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    /// Interpolated value at radius `r`.
    pub fn eval(&self, r: f64) -> f64 {
        self.grid.interpolate(&self.values, r)
    }

    /// Value extrapolated to r = 0.
    pub fn value_at_origin(&self) -> f64 {
        self.eval(0.0)
    }

    /// Trace at r = 1 for ball fields (panel extrapolation).
    pub fn boundary_trace(&self) -> f64 {
        self.eval(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise map, keeping the boundary tag.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::from_values(&self.grid, self.boundary, self.values.iter().map(|&v| f(v)).collect())
    }

    /// self + c * other on a shared grid.
    pub fn add_scaled(&self, other: &RadialField, c: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + c * b)
            .collect();
        let boundary = match (self.boundary, other.boundary) {
            (Boundary::Dirichlet, Boundary::Dirichlet) => Boundary::Dirichlet,
            (Boundary::Decaying, Boundary::Decaying) => Boundary::Decaying,
            (x, Boundary::Dirichlet) => x,
            _ => Boundary::Value(self.boundary_value_or_trace() + c * other.boundary_value_or_trace()),
        };
        Self::from_values(&self.grid, boundary, values)
    }

    fn boundary_value_or_trace(&self) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => 0.0,
            Boundary::Value(v) => v,
            Boundary::Decaying => 0.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let boundary = match self.boundary {
            Boundary::Value(v) => Boundary::Value(c * v),
            b => b,
        };
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| c * v).collect(),
            boundary,
        }
    }
}

/// Integral of `f` over its radial domain in the solid measure 4 pi r^2 dr.
pub fn integrate_ball(f: &RadialField) -> f64 {
    let grid = f.grid();
    let terms: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(f.values())
        .map(|((&r, &w), &v)| w * 4.0 * PI * r * r * v)
        .collect();
    pairwise_sum(&terms)
}

/// Integral of `f` in the plain line measure dr (no 4 pi r^2 factor).
pub fn integrate_line(f: &RadialField) -> f64 {
    let terms: Vec<f64> = f
        .grid()
        .weights()
        .iter()
        .zip(f.values())
        .map(|(&w, &v)| w * v)
        .collect();
    pairwise_sum(&terms)
}

/// Dirichlet energy of a radial field: integral of |u'(r)|^2 4 pi r^2 dr.
///
/// Ball fields tagged Dirichlet are rejected when their boundary trace is
/// not numerically zero.
pub fn dirichlet_energy(u: &RadialField) -> Result<f64> {
    if u.grid().is_unit_ball() && u.boundary() == Boundary::Dirichlet {
        let trace = u.boundary_trace();
        let scale = u.max_abs().max(1.0);
        if trace.abs() > 1e-7 * scale {
            return Err(Error::BoundaryViolation { value: trace });
        }
    }
    let du = u.grid().derivative(u.values());
    let grid = u.grid();
    let terms: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(&du)
        .map(|((&r, &w), &d)| w * 4.0 * PI * r * r * d * d)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// -Laplacian of a radial field: -(1/r) d^2(r u)/dr^2 at every node.
pub fn neg_laplacian(u: &RadialField) -> Vec<f64> {
    let grid = u.grid();
    let ru: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u.values())
        .map(|(&r, &v)| r * v)
        .collect();
    let d1 = grid.derivative(&ru);
    let d2 = grid.derivative(&d1);
    grid.nodes()
        .iter()
        .zip(&d2)
        .map(|(&r, &w)| -w / r)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(12);
        // degree 23 monomial chosen below the exactness limit
        let int: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(22)).sum();
        assert_relative_eq!(int, 2.0 / 23.0, max_relative = 1e-13);
    }

    #[test]
    fn ball_volume_is_exact() {
        let grid = RadialGrid::unit_ball(256, 0.7).unwrap();
        let one = RadialField::from_fn(&grid, Boundary::Value(1.0), |_| 1.0).unwrap();
        assert_relative_eq!(integrate_ball(&one), 4.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn whole_space_integrates_bubble_powers() {
        let grid = RadialGrid::whole_space(512, 0.7, 1.0).unwrap();
        let u6 = RadialField::from_fn(&grid, Boundary::Decaying, |r| (1.0 + r * r).powi(-3)).unwrap();
        assert_relative_eq!(integrate_ball(&u6), PI * PI / 4.0, max_relative = 1e-10);
        let u5 = RadialField::from_fn(&grid, Boundary::Decaying, |r| {
            (1.0 + r * r).powf(-2.5)
        })
        .unwrap();
        assert_relative_eq!(integrate_ball(&u5), 4.0 * PI / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn line_integral_flag_drops_solid_measure() {
        let grid = RadialGrid::unit_ball(128, 0.7).unwrap();
        let f = RadialField::from_fn(&grid, Boundary::Dirichlet, |r| {
            (PI * r / 2.0).cos().powi(2)
        })
        .unwrap();
        assert_relative_eq!(integrate_line(&f), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_error_contracts_under_refinement() {
        // Doubling n must shrink the error of the kappa integral by >= 4x
        // until the 1e-12 floor.
        let exact = PI * PI / 4.0;
        let mut prev = f64::MAX;
        for n in [32, 64, 128, 256] {
            let grid = RadialGrid::whole_space(n, 0.7, 1.0).unwrap();
            let u6 =
                RadialField::from_fn(&grid, Boundary::Decaying, |r| (1.0 + r * r).powi(-3)).unwrap();
            let err = (integrate_ball(&u6) - exact).abs();
            if prev > 1e-12 && err > 1e-12 {
                assert!(err * 4.0 <= prev, "n={n}: err {err:.3e} vs prev {prev:.3e}");
            }
            prev = err;
        }
    }

    #[test]
    fn dirichlet_energy_of_bubble_is_three_kappa() {
        let grid = RadialGrid::whole_space(512, 0.7, 1.0).unwrap();
        let u = RadialField::from_fn(&grid, Boundary::Decaying, |r| (1.0 + r * r).powf(-0.5))
            .unwrap();
        // -Delta U = 3 U^5 gives |grad U|^2 integral = 3 integral U^6 = 3 pi^2/4.
        assert_relative_eq!(
            dirichlet_energy(&u).unwrap(),
            3.0 * PI * PI / 4.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn dirichlet_energy_of_constant_vanishes() {
        let grid = RadialGrid::unit_ball(128, 0.7).unwrap();
        let c = RadialField::from_fn(&grid, Boundary::Value(3.0), |_| 3.0).unwrap();
        assert!(dirichlet_energy(&c).unwrap().abs() < 1e-18);
    }

    #[test]
    fn dirichlet_energy_of_first_eigenfunction() {
        let grid = RadialGrid::unit_ball(256, 0.7).unwrap();
        // sin(pi r)/r is the ground Dirichlet eigenfunction with eigenvalue pi^2.
        let u = RadialField::from_fn(&grid, Boundary::Dirichlet, |r| (PI * r).sin() / r).unwrap();
        let l2 = integrate_ball(&u.map(|v| v * v).unwrap());
        assert_relative_eq!(
            dirichlet_energy(&u).unwrap(),
            PI * PI * l2,
            max_relative = 1e-8
        );
    }

    #[test]
    fn dirichlet_tag_rejects_nonzero_trace() {
        let grid = RadialGrid::unit_ball(128, 0.7).unwrap();
        let bad = RadialField::from_fn(&grid, Boundary::Dirichlet, |r| 1.0 + r).unwrap();
        assert!(matches!(
            dirichlet_energy(&bad),
            Err(Error::BoundaryViolation { .. })
        ));
    }

    #[test]
    fn interpolation_reproduces_smooth_functions() {
        let grid = RadialGrid::unit_ball(192, 0.7).unwrap();
        let f = RadialField::from_fn(&grid, Boundary::Value(1.0_f64.cos()), |r| r.cos()).unwrap();
        for r in [0.0, 0.013, 0.2, 0.5, 0.77, 1.0] {
            assert_relative_eq!(f.eval(r), r.cos(), max_relative = 1e-12);
        }
    }

    #[test]
    fn neg_laplacian_matches_eigenfunction() {
        let grid = RadialGrid::unit_ball(256, 0.72).unwrap();
        let u = RadialField::from_fn(&grid, Boundary::Dirichlet, |r| (PI * r).sin() / r).unwrap();
        let lap = neg_laplacian(&u);
        for (i, &r) in grid.nodes().iter().enumerate() {
            if r > 1e-3 && r < 0.999 {
                assert_relative_eq!(lap[i], PI * PI * u.values()[i], max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn resolution_guard_orders_by_lambda() {
        let grid = RadialGrid::unit_ball(256, 0.7).unwrap();
        let cap = grid.max_resolved_lambda();
        assert!(cap > 16.0);
        assert!(grid.check_resolution(cap * 0.9).is_ok());
        assert!(grid.check_resolution(cap * 4.0).is_err());
        let fine = RadialGrid::unit_ball(512, 0.7).unwrap();
        assert!(fine.max_resolved_lambda() > cap);
    }

    #[test]
    fn cumulative_integral_matches_antiderivative() {
        let grid = RadialGrid::unit_ball(128, 0.7).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|&r| r.cos()).collect();
        let (cum, total) = grid.cumulative_integral(&f);
        assert_relative_eq!(total, 1.0_f64.sin(), max_relative = 1e-13);
        for (i, &r) in grid.nodes().iter().enumerate() {
            assert_relative_eq!(cum[i], r.sin(), epsilon = 1e-13, max_relative = 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            RadialGrid::unit_ball(8, 0.7),
            Err(Error::GridTooSmall { .. })
        ));
        assert!(matches!(
            RadialGrid::unit_ball(64, 0.0),
            Err(Error::InvalidGrading { .. })
        ));
        assert!(matches!(
            RadialGrid::unit_ball(64, 1.3),
            Err(Error::InvalidGrading { .. })
        ));
        assert!(matches!(
            RadialGrid::whole_space(64, 0.7, -1.0),
            Err(Error::InvalidMapScale { .. })
        ));
    }

    #[test]
    fn nodes_are_strictly_increasing_and_positive() {
        for grid in [
            RadialGrid::unit_ball(256, 0.7).unwrap(),
            RadialGrid::whole_space(256, 0.7, 2.0).unwrap(),
        ] {
            assert!(grid.nodes()[0] > 0.0);
            assert!(grid.weights().iter().all(|&w| w > 0.0));
            for w in grid.nodes().windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let grid = RadialGrid::unit_ball(64, 0.7).unwrap();
        let res = RadialField::from_fn(&grid, Boundary::Decaying, |r| 1.0 / (r - r));
        assert!(matches!(res, Err(Error::NonFiniteField { .. })));
    }
}
