//! Green's function of -Delta + a on the unit ball with pole at the center,
//! its regular part, the Robin value, the critical level, and the
//! perturbation functional Q_V.
//!
//! All solves go through the substitution w(r) = r G(r), which removes the
//! 1/r singularity: -w'' + a(r) w = 0 on (0, 1], w(0) = 1/(4 pi), w(1) = 0.
//! The Green's function is normalized so that G ~ 1/(4 pi |x|) at the pole,
//! i.e. -Delta G + a G = delta_0; the regular part is
//! H(r) = G(r) - 1/(4 pi r) and the Robin value is phi_a(0) = lim H.
//! (Brezis-Nirenberg's critical-ball formula cos(pi r/2)/r for a = -pi^2/4
//! carries no 1/(4 pi); this crate stores the normalized version.)

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridKind, RadialField, RadialGrid};
use crate::par::pairwise_sum;
use std::f64::consts::PI;
use std::sync::Arc;

/// Step ceiling for the radial RK4 integrator.
const ODE_STEP: f64 = 2.5e-4;
/// Grid used by the argument-free operations (critical_level, q_v).
const DEFAULT_N: usize = 256;
const DEFAULT_GRADING: f64 = 0.7;

/// Coefficient a (or perturbation V): constant or tabulated radial profile.
#[derive(Debug, Clone)]
pub enum PotentialForm {
    Constant(f64),
    Radial(RadialField),
}

/// A radial potential on the unit ball with its cached coercivity margin
/// lambda_1(-Delta + a).
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    form: PotentialForm,
    coercivity_margin: f64,
}

impl PotentialSpec {
    pub fn constant(c: f64) -> Self {
        Self {
            form: PotentialForm::Constant(c),
            coercivity_margin: PI * PI + c,
        }
    }

    /// Tabulated radial profile on a unit-ball grid.
    pub fn radial(profile: RadialField) -> Result<Self> {
        if !profile.grid().is_unit_ball() {
            return Err(Error::WrongDomain {
                expected: GridKind::UnitBall,
            });
        }
        let mut spec = Self {
            form: PotentialForm::Radial(profile),
            coercivity_margin: f64::NAN,
        };
        spec.coercivity_margin = first_eigenvalue(&spec)?;
        Ok(spec)
    }

    pub fn form(&self) -> &PotentialForm {
        &self.form
    }

    pub fn eval(&self, r: f64) -> f64 {
        match &self.form {
            PotentialForm::Constant(c) => *c,
            PotentialForm::Radial(p) => p.eval(r),
        }
    }

    /// r d(a)/dr, needed by the Pohozaev right-hand side.
    pub fn radial_slope(&self, r: f64) -> f64 {
        match &self.form {
            PotentialForm::Constant(_) => 0.0,
            PotentialForm::Radial(p) => {
                let d = p.grid().derivative(p.values());
                p.grid().interpolate(&d, r)
            }
        }
    }

    /// Cached lambda_1(-Delta + a) on the unit ball.
    pub fn coercivity_margin(&self) -> f64 {
        self.coercivity_margin
    }

    pub fn require_coercive(&self) -> Result<()> {
        if self.coercivity_margin > 0.0 {
            Ok(())
        } else {
            Err(Error::CoercivityFailure {
                lambda1: self.coercivity_margin,
            })
        }
    }

    /// Bounds of a over [0, 1].
    fn range(&self) -> (f64, f64) {
        match &self.form {
            PotentialForm::Constant(c) => (*c, *c),
            PotentialForm::Radial(p) => p
                .values()
                .iter()
                .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        }
    }

    /// a + eps * v, sampled onto `grid` unless both are constants.
    pub fn add_scaled(&self, v: &PotentialSpec, eps: f64, grid: &Arc<RadialGrid>) -> Result<Self> {
        match (&self.form, &v.form) {
            (PotentialForm::Constant(a), PotentialForm::Constant(b)) => {
                Ok(Self::constant(a + eps * b))
            }
            _ => {
                let combined = RadialField::from_fn(grid, Boundary::Value(0.0), |r| {
                    self.eval(r) + eps * v.eval(r)
                })?;
                Self::radial(combined)
            }
        }
    }
}

/// Green's function data at the center pole.
#[derive(Debug, Clone)]
pub struct GreenData {
    /// G_a(0, r) at the grid nodes.
    pub g: RadialField,
    /// Regular part H_a(0, r) = G - 1/(4 pi r).
    pub h: RadialField,
    /// Robin value phi_a(0) = lim_{r->0} H_a(0, r).
    pub robin: f64,
    /// w(r) = r G(r), the desingularized profile (handy for Q_V).
    pub w: RadialField,
}

fn rk4_step<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: &F, r: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = f(r, y);
    let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
    let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
    let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrates y' = f(r, y) from `start` through the ordered `stops`
/// (ascending or descending), recording the state at every stop.
fn rk4_path<F: Fn(f64, [f64; 2]) -> [f64; 2]>(
    f: &F,
    start: f64,
    y0: [f64; 2],
    stops: &[f64],
    h_max: f64,
) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(stops.len());
    let mut r = start;
    let mut y = y0;
    for &stop in stops {
        let gap = stop - r;
        if gap != 0.0 {
            let n = (gap.abs() / h_max).ceil().max(1.0) as usize;
            let h = gap / n as f64;
            for k in 0..n {
                y = rk4_step(f, r + k as f64 * h, y, h);
            }
        }
        r = stop;
        out.push(y);
    }
    out
}

/// Solves -Delta G + a G = delta_0 on the unit ball, G(1) = 0.
pub fn solve_green(a: &PotentialSpec, grid: &Arc<RadialGrid>) -> Result<GreenData> {
    if !grid.is_unit_ball() {
        return Err(Error::WrongDomain {
            expected: GridKind::UnitBall,
        });
    }
    a.require_coercive()?;

    // Homogeneous solution from the boundary: y(1) = 0, y'(1) = -1.
    // Any w with w(1) = 0 is proportional to it.
    let ode = |r: f64, y: [f64; 2]| [y[1], a.eval(r) * y[0]];
    let down = rk4_path(&ode, 1.0, [0.0, -1.0], &[0.0], ODE_STEP);
    let w1_at_0 = down[0][0];
    let dw1_at_0 = down[0][1];
    if !(w1_at_0 > 0.0) {
        return Err(Error::CoercivityFailure {
            lambda1: a.coercivity_margin(),
        });
    }
    let scale = 1.0 / (4.0 * PI * w1_at_0);

    // Re-integrate upward in the shifted variable v = w - 1/(4 pi), which
    // starts at exactly 0 and makes H = v/r cancellation-free.
    let phi_seed = scale * dw1_at_0;
    let shifted = |r: f64, y: [f64; 2]| [y[1], a.eval(r) * (y[0] + 1.0 / (4.0 * PI))];
    let mut stops: Vec<f64> = grid.nodes().to_vec();
    stops.push(1.0);
    let up = rk4_path(&shifted, 0.0, [0.0, phi_seed], &stops, ODE_STEP);

    let v_at_1 = up[grid.len()][0];
    let mismatch = (v_at_1 + 1.0 / (4.0 * PI)).abs();
    if mismatch > 1e-9 {
        return Err(Error::NonConvergence {
            what: "green shooting",
            iterations: 1,
            residual: mismatch,
        });
    }

    let mut g_vals = Vec::with_capacity(grid.len());
    let mut h_vals = Vec::with_capacity(grid.len());
    let mut w_vals = Vec::with_capacity(grid.len());
    for (i, &r) in grid.nodes().iter().enumerate() {
        let v = up[i][0];
        h_vals.push(v / r);
        g_vals.push((v + 1.0 / (4.0 * PI)) / r);
        w_vals.push(v + 1.0 / (4.0 * PI));
    }

    // Robin value by Richardson extrapolation of H at the three smallest
    // nodes (H has a linear a(0) r/(8 pi) term, so plain reading is only
    // first order).
    let r1 = grid.nodes()[0];
    let r2 = grid.nodes()[1];
    let r3 = grid.nodes()[2];
    let (h1, h2, h3) = (h_vals[0], h_vals[1], h_vals[2]);
    let robin = h1 * (r2 * r3) / ((r1 - r2) * (r1 - r3))
        + h2 * (r1 * r3) / ((r2 - r1) * (r2 - r3))
        + h3 * (r1 * r2) / ((r3 - r1) * (r3 - r2));

    Ok(GreenData {
        g: RadialField::from_values(grid, Boundary::Dirichlet, g_vals)?,
        h: RadialField::from_values(grid, Boundary::Value(-1.0 / (4.0 * PI)), h_vals)?,
        robin,
        w: RadialField::from_values(grid, Boundary::Dirichlet, w_vals)?,
    })
}

/// phi_a(0) on the default grid.
pub fn robin_value(a: &PotentialSpec) -> Result<f64> {
    let grid = RadialGrid::unit_ball(DEFAULT_N, DEFAULT_GRADING)?;
    Ok(solve_green(a, &grid)?.robin)
}

/// The unique lambda* in (0, lambda_1) with phi_{-lambda}(0) = 0; on the
/// unit ball this is pi^2/4.
pub fn critical_level(tol: f64) -> Result<f64> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::BadTolerance { value: tol });
    }
    let grid = RadialGrid::unit_ball(DEFAULT_N, DEFAULT_GRADING)?;
    let phi = |lambda: f64| -> Result<f64> {
        Ok(solve_green(&PotentialSpec::constant(-lambda), &grid)?.robin)
    };
    let mut lo = 1e-3;
    let mut hi = PI * PI - 1e-3;
    let (flo, fhi) = (phi(lo)?, phi(hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if phi(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Q_V(0) = int_Omega V(y) G_a(0, y)^2 dy. With w = r G the solid measure
/// collapses: Q_V = 4 pi int_0^1 V(r) w(r)^2 dr.
pub fn q_v(a: &PotentialSpec, v: &PotentialSpec) -> Result<f64> {
    let grid = RadialGrid::unit_ball(DEFAULT_N, DEFAULT_GRADING)?;
    q_v_on(a, v, &grid)
}

pub fn q_v_on(a: &PotentialSpec, v: &PotentialSpec, grid: &Arc<RadialGrid>) -> Result<f64> {
    let green = solve_green(a, grid)?;
    let terms: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(green.w.values())
        .map(|((&r, &wt), &w)| wt * 4.0 * PI * v.eval(r) * w * w)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Ground Dirichlet eigenvalue of -Delta + a on the unit ball, through the
/// 1-D reduction -w'' + a w = mu w, w(0) = w(1) = 0: bisection on the
/// boundary miss of the shot from the origin.
pub fn first_eigenvalue(a: &PotentialSpec) -> Result<f64> {
    let miss = |mu: f64| -> f64 {
        let ode = |r: f64, y: [f64; 2]| [y[1], (a.eval(r) - mu) * y[0]];
        rk4_path(&ode, 0.0, [0.0, 1.0], &[1.0], 5e-4)[0][0]
    };
    let (a_lo, a_hi) = a.range();
    let mut lo = PI * PI + a_lo - 0.5;
    let mut hi = PI * PI + a_hi + 0.5;
    // the shot stays positive below lambda_1 and first crosses zero there
    let mut widen = 0;
    while miss(lo) <= 0.0 && widen < 8 {
        lo -= 2.0_f64.powi(widen);
        widen += 1;
    }
    while miss(hi) > 0.0 && widen < 16 {
        hi += 2.0_f64.powi(widen);
        widen += 1;
    }
    if miss(lo) <= 0.0 || miss(hi) > 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if miss(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves (-Delta + a) u = f on the unit ball with u(1) = 0, by variation
/// of parameters on w = r u. Exact up to the quadrature of the product
/// integrals; used as the preconditioner of the constrained minimization.
pub fn solve_dirichlet(a: &PotentialSpec, f: &RadialField) -> Result<RadialField> {
    let grid = f.grid();
    if !grid.is_unit_ball() {
        return Err(Error::WrongDomain {
            expected: GridKind::UnitBall,
        });
    }
    a.require_coercive()?;
    let ode = |r: f64, y: [f64; 2]| [y[1], a.eval(r) * y[0]];

    // y_left(0) = 0, y_left'(0) = 1 recorded ascending
    let left = rk4_path(&ode, 0.0, [0.0, 1.0], grid.nodes(), ODE_STEP);
    // y_right(1) = 0, y_right'(1) = -1 recorded descending, then reversed
    let mut desc: Vec<f64> = grid.nodes().to_vec();
    desc.reverse();
    let mut right = rk4_path(&ode, 1.0, [0.0, -1.0], &desc, ODE_STEP);
    right.reverse();
    let y_r0 = rk4_path(&ode, 1.0, [0.0, -1.0], &[0.0], ODE_STEP)[0][0];
    if !(y_r0 > 0.0) {
        return Err(Error::CoercivityFailure {
            lambda1: a.coercivity_margin(),
        });
    }

    let yl: Vec<f64> = left.iter().map(|y| y[0]).collect();
    let yr: Vec<f64> = right.iter().map(|y| y[0]).collect();
    // Wronskian-normalizer y_l' y_r - y_l y_r' evaluated at 0
    let wc = y_r0;

    let fl: Vec<f64> = (0..grid.len())
        .map(|i| grid.nodes()[i] * f.values()[i] * yl[i])
        .collect();
    let fr: Vec<f64> = (0..grid.len())
        .map(|i| grid.nodes()[i] * f.values()[i] * yr[i])
        .collect();
    let (cum_l, _) = grid.cumulative_integral(&fl);
    let (cum_r, total_r) = grid.cumulative_integral(&fr);

    let mut u = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let w = (yr[i] * cum_l[i] + yl[i] * (total_r - cum_r[i])) / wc;
        u.push(w / grid.nodes()[i]);
    }
    RadialField::from_values(grid, Boundary::Dirichlet, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_grid() -> Arc<RadialGrid> {
        RadialGrid::unit_ball(DEFAULT_N, DEFAULT_GRADING).unwrap()
    }

    #[test]
    fn laplace_green_matches_image_charge() {
        let grid = default_grid();
        let data = solve_green(&PotentialSpec::constant(0.0), &grid).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let exact = (1.0 / r - 1.0) / (4.0 * PI);
            assert_relative_eq!(data.g.values()[i], exact, epsilon = 1e-13, max_relative = 1e-9);
            assert_relative_eq!(data.h.values()[i], -1.0 / (4.0 * PI), max_relative = 1e-10);
        }
        assert_relative_eq!(data.robin, -1.0 / (4.0 * PI), max_relative = 1e-12);
    }

    #[test]
    fn helmholtz_green_closed_forms() {
        let grid = default_grid();
        // a = -1: G = sin(1-r) / (4 pi r sin 1)
        let d1 = solve_green(&PotentialSpec::constant(-1.0), &grid).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let exact = (1.0 - r).sin() / (4.0 * PI * r * 1.0_f64.sin());
            assert_relative_eq!(d1.g.values()[i], exact, max_relative = 1e-9);
        }
        assert_relative_eq!(
            d1.robin,
            -0.051_096_106_874_377_306,
            max_relative = 1e-9
        );
        // a = +1: G = sinh(1-r) / (4 pi r sinh 1)
        let d2 = solve_green(&PotentialSpec::constant(1.0), &grid).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let exact = (1.0 - r).sinh() / (4.0 * PI * r * 1.0_f64.sinh());
            assert_relative_eq!(d2.g.values()[i], exact, max_relative = 1e-9);
        }
        assert_relative_eq!(
            d2.robin,
            -1.0 / (4.0 * PI) / 1.0_f64.tanh(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn critical_ball_green_function() {
        // a = -pi^2/4: G = cos(pi r / 2)/(4 pi r), phi_a(0) = 0
        let grid = default_grid();
        let data = solve_green(&PotentialSpec::constant(-PI * PI / 4.0), &grid).unwrap();
        let mut worst: f64 = 0.0;
        for (i, &r) in grid.nodes().iter().enumerate() {
            let exact = (PI * r / 2.0).cos() / (4.0 * PI * r);
            worst = worst.max(((data.g.values()[i] - exact) / exact).abs());
        }
        assert!(worst < 1e-8, "max rel err {worst:.3e}");
        assert!(data.robin.abs() < 1e-9, "robin {:.3e}", data.robin);
    }

    #[test]
    fn robin_closed_form_ladder() {
        for &lambda in &[0.5, 1.0, 2.0, 2.467401] {
            let robin = robin_value(&PotentialSpec::constant(-lambda)).unwrap();
            let exact = -lambda.sqrt() / lambda.sqrt().tan() / (4.0 * PI);
            assert_relative_eq!(robin, exact, epsilon = 1e-10, max_relative = 1e-8);
        }
    }

    #[test]
    fn pole_normalization_holds_for_every_coercive_potential() {
        let grid = default_grid();
        for c in [-5.0, -2.0, 0.0, 3.0] {
            let data = solve_green(&PotentialSpec::constant(c), &grid).unwrap();
            // r G -> 1/(4 pi), linearly extrapolated from the two smallest nodes
            let (r1, r2) = (grid.nodes()[0], grid.nodes()[1]);
            let (w1, w2) = (
                r1 * data.g.values()[0],
                r2 * data.g.values()[1],
            );
            let w0 = (w1 * r2 - w2 * r1) / (r2 - r1);
            // linear extrapolation leaves the genuine a r1 r2/(8 pi) term
            assert_relative_eq!(w0, 1.0 / (4.0 * PI), max_relative = 1e-7);
            // positivity of G on (0, 1)
            assert!(data.g.values().iter().all(|&g| g > 0.0));
        }
    }

    #[test]
    fn robin_is_monotone_in_the_potential() {
        // a <= atilde, a != atilde implies phi_a > phi_atilde
        let ladder = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let robins: Vec<f64> = ladder
            .iter()
            .map(|&c| robin_value(&PotentialSpec::constant(c)).unwrap())
            .collect();
        for w in robins.windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn regular_part_has_the_predicted_linear_slope() {
        // H(r) = phi_a(0) + a(0)/(8 pi) r + O(r^2)
        let grid = default_grid();
        for c in [-5.0, -1.0, 2.0] {
            let data = solve_green(&PotentialSpec::constant(c), &grid).unwrap();
            let r = 1e-3;
            let slope = (data.h.eval(r) - data.robin) / r;
            assert_relative_eq!(slope, c / (8.0 * PI), max_relative = 1e-3);
        }
    }

    #[test]
    fn critical_level_is_quarter_pi_squared() {
        let ls = critical_level(1e-8).unwrap();
        assert!((ls - PI * PI / 4.0).abs() < 1e-7, "lambda* = {ls}");
        assert!(ls < PI * PI);
    }

    #[test]
    fn robin_increases_along_negative_constants() {
        // phi_{-lambda}(0) strictly increasing in lambda on (0, pi^2)
        let mut prev = f64::NEG_INFINITY;
        for lambda in [0.5, 2.0, 4.0, 7.0, 9.0] {
            let r = robin_value(&PotentialSpec::constant(-lambda)).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn q_v_closed_forms_at_the_critical_potential() {
        let a = PotentialSpec::constant(-PI * PI / 4.0);
        let minus = q_v(&a, &PotentialSpec::constant(-1.0)).unwrap();
        assert_relative_eq!(minus, -1.0 / (8.0 * PI), max_relative = 1e-9);
        let plus = q_v(&a, &PotentialSpec::constant(1.0)).unwrap();
        assert_relative_eq!(plus, 1.0 / (8.0 * PI), max_relative = 1e-9);
        let zero = q_v(&a, &PotentialSpec::constant(0.0)).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn first_eigenvalue_closed_forms() {
        assert_relative_eq!(
            first_eigenvalue(&PotentialSpec::constant(0.0)).unwrap(),
            PI * PI,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            first_eigenvalue(&PotentialSpec::constant(-1.0)).unwrap(),
            PI * PI - 1.0,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            first_eigenvalue(&PotentialSpec::constant(-PI * PI / 4.0)).unwrap(),
            3.0 * PI * PI / 4.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn non_coercive_potentials_are_rejected() {
        let a = PotentialSpec::constant(-15.0);
        assert!(a.coercivity_margin() < 0.0);
        let grid = default_grid();
        assert!(matches!(
            solve_green(&a, &grid),
            Err(Error::CoercivityFailure { .. })
        ));
    }

    #[test]
    fn radial_profile_matches_constant_potential() {
        let grid = default_grid();
        let profile = RadialField::from_fn(&grid, Boundary::Value(-2.0), |_| -2.0).unwrap();
        let tabulated = PotentialSpec::radial(profile).unwrap();
        assert_relative_eq!(
            tabulated.coercivity_margin(),
            PI * PI - 2.0,
            max_relative = 1e-8
        );
        let r1 = solve_green(&tabulated, &grid).unwrap().robin;
        let r2 = solve_green(&PotentialSpec::constant(-2.0), &grid).unwrap().robin;
        assert_relative_eq!(r1, r2, max_relative = 1e-10);
    }

    #[test]
    fn dirichlet_solver_reproduces_manufactured_solution() {
        let grid = default_grid();
        for c in [-5.0, 0.0, 2.0] {
            let a = PotentialSpec::constant(c);
            // u = sin(pi r)/r solves (-Delta + a) u = (pi^2 + a) u
            let f = RadialField::from_fn(&grid, Boundary::Dirichlet, |r| {
                (PI * PI + c) * (PI * r).sin() / r
            })
            .unwrap();
            let u = solve_dirichlet(&a, &f).unwrap();
            for (i, &r) in grid.nodes().iter().enumerate() {
                let exact = (PI * r).sin() / r;
                assert_relative_eq!(u.values()[i], exact, epsilon = 1e-9, max_relative = 1e-8);
            }
        }
    }
}
