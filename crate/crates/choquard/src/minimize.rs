//! Constrained minimization of S_HL(a) over radial H^1_0(B_1) fields on the
//! HL sphere ||u||_HL = 1, with solution extraction and diagnostics.
//!
//! The iteration is the preconditioned fixed-point form of the projected
//! gradient flow: each step solves
//!
//!   (-Delta + a) z = I_alpha[|u|^{6-alpha}] |u|^{4-alpha} u,
//!
//! renormalizes z back to the HL sphere and moves from u toward z under an
//! Armijo decrease check on the energy. Iterates are replaced by their
//! absolute value after each step; for the potentials used here the
//! preconditioner is positivity-preserving so this is a no-op in practice.
//!
//! Below the critical level the infimum is not attained: iterates form a
//! sharpening bubble. The solver detects the drift through the bubble
//! height law and reports `Concentrating` instead of chasing it.

use crate::constants::{self, Alpha};
use crate::error::{Error, Result};
use crate::greens::{solve_dirichlet, PotentialSpec};
use crate::grid::{dirichlet_energy, neg_laplacian, Boundary, GridKind, RadialField, RadialGrid};
use crate::par::pairwise_sum;
use crate::riesz::{potential_values, AngularKernel, DIAG_LEVELS};
use std::f64::consts::PI;
use std::sync::Arc;

/// Outcome class of a minimization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Concentration {
    /// The infimum is attained; the minimizer field is meaningful.
    Achieved,
    /// Minimizing sequences blow up; `lambda_hat` is the last resolved
    /// concentration estimate.
    Concentrating { lambda_hat: f64 },
}

/// Tunables of `minimize_shl`.
#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub grid_n: usize,
    pub grading: f64,
    /// Iteration cap per restart (per refinement stage).
    pub max_iterations: usize,
    /// H^1 fixed-point gap below which a restart counts as converged.
    pub tolerance: f64,
    /// Grid doublings allowed when the bubble outgrows the grid.
    pub max_refinements: usize,
    /// Bubble seeds of the restart set.
    pub seed_lambdas: Vec<f64>,
    /// Scan test functions psi_{0,lambda} on a geometric ladder and seed a
    /// restart at the best lambda.
    pub seed_scan: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grid_n: 384,
            grading: 0.7,
            max_iterations: 700,
            tolerance: 5e-6,
            max_refinements: 2,
            seed_lambdas: vec![4.0, 8.0, 16.0],
            seed_scan: true,
        }
    }
}

/// Result of `minimize_shl`.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    /// Estimate of S_HL(a) (always an upper bound up to quadrature error).
    pub energy: f64,
    /// HL-normalized minimizer (best iterate for concentrating runs).
    pub minimizer: RadialField,
    pub iterations: usize,
    /// Relative H^1 fixed-point gap of the returned iterate.
    pub el_residual: f64,
    /// Pohozaev identity residual of the rescaled solution (diagnostic for
    /// concentrating runs).
    pub pohozaev_residual: f64,
    pub concentration: Concentration,
}

/// Concentration diagnostics via the bubble height law U_{0,lambda}(0) =
/// lambda^{1/2} (pass `height_scale` = Cbar-like factor for normalized
/// profiles).
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationDiagnostics {
    pub lambda_hat: f64,
    /// Fraction of the u^6 mass within r <= 4/lambda_hat.
    pub core_mass: f64,
    pub low_amplitude: bool,
}

pub fn concentration_diagnostics(u: &RadialField) -> ConcentrationDiagnostics {
    concentration_diagnostics_scaled(u, 1.0)
}

pub fn concentration_diagnostics_scaled(u: &RadialField, height_scale: f64) -> ConcentrationDiagnostics {
    let height = u.value_at_origin() / height_scale;
    let low_amplitude = u.max_abs() < 1e-8;
    let lambda_hat = (height * height).max(f64::MIN_POSITIVE);
    let grid = u.grid();
    let total: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.values())
        .map(|((&r, &w), &v)| w * 4.0 * PI * r * r * v.powi(6))
        .collect();
    let r_core = 4.0 / lambda_hat;
    let core: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.values())
        .map(|((&r, &w), &v)| {
            if r <= r_core {
                w * 4.0 * PI * r * r * v.powi(6)
            } else {
                0.0
            }
        })
        .collect();
    let total_mass = pairwise_sum(&total);
    let core_mass = if total_mass > 0.0 {
        pairwise_sum(&core) / total_mass
    } else {
        0.0
    };
    ConcentrationDiagnostics {
        lambda_hat,
        core_mass,
        low_amplitude,
    }
}

/// Height scale turning an HL-normalized minimizer into the raw bubble
/// convention: v ~ Ubar_lambda / S_HL^{1/(2(5-alpha))}.
fn hl_height_scale(alpha: Alpha) -> f64 {
    let a = alpha.get();
    constants::bubble_normalization(alpha) * constants::shl_constant(alpha).powf(-1.0 / (2.0 * (5.0 - a)))
}

/// int (a + r a'/2) u^2 dx and the boundary-flux side of the Pohozaev
/// identity; returns the relative mismatch.
pub fn pohozaev_residual(u: &RadialField, a: &PotentialSpec) -> Result<f64> {
    let grid = u.grid();
    if !grid.is_unit_ball() {
        return Err(Error::WrongDomain {
            expected: GridKind::UnitBall,
        });
    }
    let du = grid.derivative(u.values());
    let du_boundary = grid.interpolate(&du, 1.0);
    let lhs = -0.5 * 4.0 * PI * du_boundary * du_boundary;
    let terms: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.values())
        .map(|((&r, &w), &v)| {
            w * 4.0 * PI * r * r * (a.eval(r) + 0.5 * a.radial_slope(r)) * v * v
        })
        .collect();
    let rhs = pairwise_sum(&terms);
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12))
}

fn energy_numerator(u: &RadialField, a: &PotentialSpec) -> Result<f64> {
    let grid = u.grid();
    let pot: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.values())
        .map(|((&r, &w), &v)| w * 4.0 * PI * r * r * a.eval(r) * v * v)
        .collect();
    Ok(dirichlet_energy(u)? + pairwise_sum(&pot))
}

/// D_alpha(|u|^{6-a}, |u|^{6-a}) together with the Riesz potential of
/// |u|^{6-a} (reused by the flow).
fn hl_denominator(u: &RadialField, alpha: Alpha) -> (Vec<f64>, f64) {
    let a = alpha.get();
    let grid = u.grid();
    let powered: Vec<f64> = u.values().iter().map(|&v| v.abs().powf(6.0 - a)).collect();
    let pot = potential_values(grid, &powered, AngularKernel::riesz(alpha), DIAG_LEVELS);
    let rows: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .enumerate()
        .map(|(i, (&r, &w))| w * 4.0 * PI * r * r * powered[i] * pot[i])
        .collect();
    (pot, pairwise_sum(&rows))
}

/// Scales u onto the HL sphere; returns the scaled field and D(u).
pub fn hl_normalize(u: &RadialField, alpha: Alpha) -> Result<(RadialField, f64)> {
    let (_, d) = hl_denominator(u, alpha);
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::NonConvergence {
            what: "HL normalization",
            iterations: 0,
            residual: d,
        });
    }
    let s = d.powf(-1.0 / (2.0 * (6.0 - alpha.get())));
    Ok((u.scaled(s), d))
}

/// Rayleigh quotient of the constrained problem at an arbitrary ball field.
pub fn rayleigh_quotient(u: &RadialField, a: &PotentialSpec, alpha: Alpha) -> Result<f64> {
    let (_, d) = hl_denominator(u, alpha);
    Ok(energy_numerator(u, a)? / d.powf(1.0 / (6.0 - alpha.get())))
}

struct FlowOutcome {
    u: RadialField,
    energy: f64,
    iterations: usize,
    gap: f64,
    lambda_hat: f64,
    converged: bool,
}

/// Scans the Rayleigh quotient of psi_{0,lambda} over a geometric lambda
/// ladder capped by the grid's resolution, with one parabolic refinement
/// in ln(lambda) around the coarse argmin.
fn best_psi_seed(
    a: &PotentialSpec,
    alpha: Alpha,
    grid: &Arc<RadialGrid>,
) -> Result<Option<(f64, f64, RadialField)>> {
    // beyond lambda ~ 1e6 the test-energy gap is < 1e-5: nothing to gain
    let cap = (0.45 * grid.max_resolved_lambda()).min(1.2e6);
    let mut ladder: Vec<f64> = Vec::new();
    let mut lam = 8.0;
    while lam < cap {
        ladder.push(lam);
        lam *= std::f64::consts::SQRT_2;
    }
    if ladder.is_empty() {
        return Ok(None);
    }
    let mut quotients = Vec::with_capacity(ladder.len());
    for &l in &ladder {
        let psi = crate::bubbles::psi_test(crate::bubbles::BubbleParams::new(l, alpha)?, a, grid)?;
        quotients.push(rayleigh_quotient(&psi, a, alpha)?);
    }
    let mut im = 0;
    for (i, &q) in quotients.iter().enumerate() {
        if q < quotients[im] {
            im = i;
        }
    }
    let mut best_lam = ladder[im];
    let mut best_q = quotients[im];
    if im > 0 && im + 1 < ladder.len() {
        // parabolic minimum in x = ln(lambda)
        let (xl, xm, xr) = (ladder[im - 1].ln(), ladder[im].ln(), ladder[im + 1].ln());
        let (ql, qm, qr) = (quotients[im - 1], quotients[im], quotients[im + 1]);
        let denom = (xm - xl) * (qm - qr) - (xm - xr) * (qm - ql);
        if denom.abs() > 0.0 {
            let x_star =
                xm - 0.5 * ((xm - xl).powi(2) * (qm - qr) - (xm - xr).powi(2) * (qm - ql)) / denom;
            let lam_star = x_star.exp();
            if lam_star > 0.0 && lam_star < cap {
                let psi = crate::bubbles::psi_test(
                    crate::bubbles::BubbleParams::new(lam_star, alpha)?,
                    a,
                    grid,
                )?;
                let q_star = rayleigh_quotient(&psi, a, alpha)?;
                if q_star < best_q {
                    best_q = q_star;
                    best_lam = lam_star;
                }
            }
        }
    }
    let psi = crate::bubbles::psi_test(
        crate::bubbles::BubbleParams::new(best_lam, alpha)?,
        a,
        grid,
    )?;
    Ok(Some((best_q, best_lam, psi)))
}

fn h1_gap(u: &RadialField, z: &RadialField) -> Result<f64> {
    let diff = u.add_scaled(z, -1.0)?;
    Ok((dirichlet_energy(&diff)? / dirichlet_energy(u)?.max(1e-300)).sqrt())
}

/// Dilation of a ball field along the bubble scaling family:
/// u_theta(r) = theta^{1/2} u(theta r), kept in H^1_0 by zero extension
/// (theta > 1) or by removing the constant harmonic correction of the
/// shrunk boundary trace (theta < 1).
fn dilate(u: &RadialField, theta: f64) -> Result<RadialField> {
    let grid = u.grid();
    let root = theta.sqrt();
    if theta >= 1.0 {
        RadialField::from_fn(grid, Boundary::Dirichlet, |r| {
            let s = theta * r;
            if s >= 1.0 {
                0.0
            } else {
                root * u.eval(s)
            }
        })
    } else {
        let cut = u.eval(theta);
        RadialField::from_fn(grid, Boundary::Dirichlet, |r| {
            root * (u.eval(theta * r) - cut)
        })
    }
}

/// Energy of the HL-normalized dilation (one nonlocal evaluation).
fn dilated_energy(
    u: &RadialField,
    theta: f64,
    a: &PotentialSpec,
    alpha: Alpha,
) -> Result<(f64, RadialField, Vec<f64>, f64)> {
    let cand = dilate(u, theta)?;
    let (pot, d) = hl_denominator(&cand, alpha);
    let s = d.powf(-1.0 / (2.0 * (6.0 - alpha.get())));
    let scaled = cand.scaled(s);
    let energy = energy_numerator(&scaled, a)?;
    Ok((energy, scaled, pot, d))
}

fn interpolate_onto(u: &RadialField, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    RadialField::from_fn(grid, u.boundary(), |r| u.eval(r))
}

/// One preconditioned projected-gradient run from a seed. Only the flow
/// that owns the refinement budget (`allow_refine`) doubles the grid when
/// the bubble outgrows it; after each refinement the psi ladder is
/// re-scanned on the finer grid and the iterate jumps there when that
/// certifies a lower energy.
fn flow(
    a: &PotentialSpec,
    alpha: Alpha,
    seed: &RadialField,
    opts: &MinimizeOptions,
    allow_refine: bool,
) -> Result<FlowOutcome> {
    let q = 6.0 - alpha.get();
    let height_scale = hl_height_scale(alpha);
    let s_hl = constants::shl_constant(alpha);
    const WINDOW: usize = 40;

    let mut grid = seed.grid().clone();
    let mut capacity = grid.max_resolved_lambda();
    let (mut u, _) = hl_normalize(seed, alpha)?;
    let mut energy = energy_numerator(&u, a)?;
    let mut refinements = 0usize;
    let mut iterations = 0usize;
    let mut gap = f64::MAX;
    let mut converged = false;
    let mut history: Vec<(f64, f64, f64)> = Vec::new(); // (energy, gap, lambda_hat)

    // Potential of |u|^{6-a}, reusable across the renormalization.
    let (mut pot, mut d) = hl_denominator(&u, alpha);

    'outer: loop {
        for _ in 0..opts.max_iterations {
            iterations += 1;
            // normalize drift in D(u) (should stay ~1)
            if (d - 1.0).abs() > 1e-12 {
                let s = d.powf(-1.0 / (2.0 * q));
                u = u.scaled(s);
                let scale_pot = s.powf(q);
                for p in pot.iter_mut() {
                    *p *= scale_pot;
                }
                d = 1.0;
                energy = energy_numerator(&u, a)?;
            }

            // preconditioned step
            let rhs = RadialField::from_values(
                &grid,
                Boundary::Dirichlet,
                (0..grid.len())
                    .map(|i| pot[i] * u.values()[i].abs().powf(4.0 - alpha.get()) * u.values()[i])
                    .collect(),
            )?;
            let z_raw = solve_dirichlet(a, &rhs)?;
            let (pot_z, d_z) = hl_denominator(&z_raw, alpha);
            if !(d_z > 0.0) {
                break 'outer;
            }
            let s_z = d_z.powf(-1.0 / (2.0 * q));
            let z = z_raw.scaled(s_z).map(f64::abs)?;
            let energy_z = energy_numerator(&z, a)?;

            gap = h1_gap(&u, &z)?;

            let mut accepted = false;
            if energy_z <= energy + 1e-13 * energy.abs().max(1.0) {
                // full fixed-point step; reuse its potential
                let scale_pot = s_z.powf(q);
                pot = pot_z.iter().map(|p| p * scale_pot).collect();
                d = 1.0;
                u = z;
                energy = energy_z;
                accepted = true;
            } else {
                // Armijo backtracking along the segment u -> z
                let mut tau = 0.5;
                while tau > 1e-3 {
                    let cand = u
                        .add_scaled(&z, tau / (1.0 - tau))?
                        .scaled(1.0 - tau)
                        .map(f64::abs)?;
                    let (cand_n, _) = hl_normalize(&cand, alpha)?;
                    let e_cand = energy_numerator(&cand_n, a)?;
                    if e_cand <= energy - 1e-13 * energy.abs().max(1.0) {
                        u = cand_n;
                        energy = e_cand;
                        let fresh = hl_denominator(&u, alpha);
                        pot = fresh.0;
                        d = fresh.1;
                        accepted = true;
                        break;
                    }
                    tau *= 0.5;
                }
            }

            // The concentration direction is nearly degenerate, so the
            // fixed-point map contracts it very slowly. A periodic line
            // search along the dilation family removes that mode.
            if accepted && iterations % 15 == 0 && gap < 1e-2 {
                let (e_lo, ..) = dilated_energy(&u, 1.0 / 1.05, a, alpha)?;
                let (e_hi, ..) = dilated_energy(&u, 1.05, a, alpha)?;
                let (xl, xm, xr) = (-(1.05_f64.ln()), 0.0, 1.05_f64.ln());
                let denom = (xm - xl) * (energy - e_hi) - (xm - xr) * (energy - e_lo);
                let mut theta_star = if denom.abs() > 0.0 {
                    (xm - 0.5
                        * ((xm - xl).powi(2) * (energy - e_hi)
                            - (xm - xr).powi(2) * (energy - e_lo))
                        / denom)
                        .clamp(-0.35, 0.35)
                        .exp()
                } else {
                    1.0
                };
                if e_lo < energy && e_lo < e_hi && theta_star >= 1.0 {
                    theta_star = 1.0 / 1.05;
                }
                if e_hi < energy && e_hi < e_lo && theta_star <= 1.0 {
                    theta_star = 1.05;
                }
                if theta_star != 1.0 {
                    let (e_star, cand, pot_c, d_c) = dilated_energy(&u, theta_star, a, alpha)?;
                    if e_star < energy {
                        let s = d_c.powf(-1.0 / (2.0 * q));
                        u = cand;
                        energy = e_star;
                        pot = pot_c.iter().map(|p| p * s.powf(q)).collect();
                        d = 1.0;
                    }
                }
            }

            let lam = concentration_diagnostics_scaled(&u, height_scale).lambda_hat;
            history.push((energy, gap, lam));

            // converged = small fixed-point gap AND a settled bubble scale;
            // a slowly sharpening bubble also has small per-step motion, so
            // the gap alone cannot separate the two outcomes
            if gap <= opts.tolerance && history.len() > WINDOW {
                let (_, _, lam0) = history[history.len() - 1 - WINDOW];
                if lam <= 1.003 * lam0 && lam >= lam0 / 1.003 {
                    converged = true;
                    break 'outer;
                }
            }
            if !accepted {
                // no descent direction left at this resolution
                break 'outer;
            }

            // concentration bookkeeping
            if lam > 0.45 * capacity {
                if allow_refine && refinements < opts.max_refinements {
                    refinements += 1;
                    let finer = RadialGrid::unit_ball(grid.len() * 2, grid.grading())?;
                    u = interpolate_onto(&u, &finer)?;
                    grid = finer;
                    capacity = grid.max_resolved_lambda();
                    let (nu, _) = hl_normalize(&u, alpha)?;
                    u = nu;
                    energy = energy_numerator(&u, a)?;
                    // a fresh psi scan on the finer grid usually certifies
                    // a sharper bubble than the drift would reach soon
                    if let Some((q_psi, _, psi)) = best_psi_seed(a, alpha, &grid)? {
                        if q_psi < energy {
                            let (nu, _) = hl_normalize(&psi, alpha)?;
                            u = nu;
                            energy = energy_numerator(&u, a)?;
                        }
                    }
                    let fresh = hl_denominator(&u, alpha);
                    pot = fresh.0;
                    d = fresh.1;
                    history.clear();
                    continue;
                } else {
                    break 'outer;
                }
            }

            // spec stall rule: energy already at the unattained infimum
            // within tolerance while the residual no longer improves; only
            // applied when the bubble is near grid limits, where no
            // achieved minimizer can live
            if history.len() > WINDOW && (energy - s_hl).abs() < 5e-3 && lam > 0.1 * capacity {
                let (_, gap0, _) = history[history.len() - 1 - WINDOW];
                if gap > 0.7 * gap0 {
                    break 'outer;
                }
            }
        }
        break;
    }

    let lambda_hat = concentration_diagnostics_scaled(&u, height_scale).lambda_hat;
    let _ = refinements;
    Ok(FlowOutcome {
        u,
        energy,
        iterations,
        gap,
        lambda_hat,
        converged,
    })
}

/// Minimizes the HL Rayleigh quotient over H^1_0(B_1) radial fields.
pub fn minimize_shl(a: &PotentialSpec, alpha: Alpha, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    a.require_coercive()?;
    let grid = RadialGrid::unit_ball(opts.grid_n, opts.grading)?;
    let capacity = grid.max_resolved_lambda();
    let s_hl = constants::shl_constant(alpha);

    // restart set: bubbles, the ground eigenfunction, a mixture, and the
    // best test function from a lambda scan (the scan restart owns the
    // refinement budget; it is the one chasing concentration)
    let mut seeds: Vec<(RadialField, bool)> = Vec::new();
    for &lam in &opts.seed_lambdas {
        if lam < 0.45 * capacity {
            seeds.push((
                crate::bubbles::project_bubble(
                    crate::bubbles::BubbleParams::new(lam, alpha)?,
                    &grid,
                    true,
                )?,
                false,
            ));
        }
    }
    let eigen = RadialField::from_fn(&grid, Boundary::Dirichlet, |r| (PI * r).sin() / r)?;
    seeds.push((eigen.clone(), false));
    if let Some((first, _)) = seeds.first().cloned() {
        seeds.push((first.scaled(0.7).add_scaled(&eigen, 0.3)?, false));
    }
    if opts.seed_scan {
        if let Some((_, _, psi)) = best_psi_seed(a, alpha, &grid)? {
            seeds.push((psi, true));
        }
    }

    let outcomes: Vec<Result<FlowOutcome>> =
        crate::par::map_indexed(seeds.len(), |i| flow(a, alpha, &seeds[i].0, opts, seeds[i].1));
    let mut best: Option<FlowOutcome> = None;
    for res in outcomes {
        let out = res?;
        best = Some(match best {
            None => out,
            Some(cur) => {
                // lowest energy wins; near-ties prefer the less concentrated
                if out.energy < cur.energy - 1e-8
                    || ((out.energy - cur.energy).abs() <= 1e-8 && out.lambda_hat < cur.lambda_hat)
                {
                    out
                } else {
                    cur
                }
            }
        });
    }
    let winner = best.ok_or(Error::NonConvergence {
        what: "minimize restarts",
        iterations: 0,
        residual: f64::NAN,
    })?;

    let concentration = if winner.converged {
        Concentration::Achieved
    } else {
        Concentration::Concentrating {
            lambda_hat: winner.lambda_hat,
        }
    };
    let pohozaev = match concentration {
        Concentration::Achieved => {
            let u = rescale_to_solution(&winner.u, winner.energy, alpha);
            pohozaev_residual(&u, a)?
        }
        Concentration::Concentrating { .. } => {
            let u = rescale_to_solution(&winner.u, winner.energy, alpha);
            pohozaev_residual(&u, a)?
        }
    };

    // gross sanity: the reported value is an upper estimate of an infimum
    // that never exceeds S_HL; how closely concentrating runs approach it
    // is grid-capacity dependent (acceptance pins 5e-3 on adequate grids)
    debug_assert!(winner.energy <= s_hl + 0.1, "upper bound violated");
    Ok(MinimizeResult {
        energy: winner.energy,
        minimizer: winner.u,
        iterations: winner.iterations,
        el_residual: winner.gap,
        pohozaev_residual: pohozaev,
        concentration,
    })
}

fn rescale_to_solution(v: &RadialField, energy: f64, alpha: Alpha) -> RadialField {
    v.scaled(energy.powf(1.0 / (2.0 * (5.0 - alpha.get()))))
}

/// Rescales an achieved minimizer to the least-energy solution of the
/// equation with unit nonlocal coupling: u = S_HL(a)^{1/(2(5-alpha))} |v|.
pub fn least_energy_solution(res: &MinimizeResult, a: &PotentialSpec, alpha: Alpha) -> Result<RadialField> {
    match res.concentration {
        Concentration::Concentrating { lambda_hat } => Err(Error::NotAchieved { lambda_hat }),
        Concentration::Achieved => {
            let u = rescale_to_solution(&res.minimizer, res.energy, alpha).map(f64::abs)?;
            let _ = a; // coercivity already checked by the minimization
            Ok(u)
        }
    }
}

/// Max-norm Euler-Lagrange residual of a candidate solution, relative to
/// the |(-Delta + a) u| scale, measured away from the innermost nodes where
/// the spectral second derivative amplifies roundoff.
pub fn el_residual(u: &RadialField, a: &PotentialSpec, alpha: Alpha) -> Result<f64> {
    let grid = u.grid();
    let q = 6.0 - alpha.get();
    let lap = neg_laplacian(u);
    let powered: Vec<f64> = u.values().iter().map(|&v| v.abs().powf(q)).collect();
    let pot = potential_values(grid, &powered, AngularKernel::riesz(alpha), DIAG_LEVELS);
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for (i, &r) in grid.nodes().iter().enumerate() {
        if r < 1e-3 {
            continue;
        }
        let lhs = lap[i] + a.eval(r) * u.values()[i];
        let rhs = pot[i] * u.values()[i].abs().powf(5.0 - alpha.get());
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(lhs.abs());
    }
    Ok(worst / scale.max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::{project_bubble, BubbleParams};
    use approx::assert_relative_eq;

    fn alpha1() -> Alpha {
        Alpha::new(1.0).unwrap()
    }

    fn quick_opts(n: usize) -> MinimizeOptions {
        MinimizeOptions {
            grid_n: n,
            max_iterations: 300,
            ..MinimizeOptions::default()
        }
    }

    #[test]
    fn diagnostics_recover_bubble_height() {
        let grid = RadialGrid::unit_ball(256, 0.7).unwrap();
        let u = crate::bubbles::bubble(BubbleParams::new(16.0, alpha1()).unwrap(), &grid, false)
            .unwrap();
        let d = concentration_diagnostics(&u);
        assert!((d.lambda_hat - 16.0).abs() < 0.32, "{d:?}");
        assert!(d.core_mass >= 0.8, "{d:?}");
        assert!(!d.low_amplitude);
    }

    #[test]
    fn diagnostics_flag_flat_and_tiny_fields() {
        let grid = RadialGrid::unit_ball(256, 0.7).unwrap();
        let eig = RadialField::from_fn(&grid, Boundary::Dirichlet, |r| (PI * r).sin() / r).unwrap();
        let d = concentration_diagnostics(&eig);
        assert!(d.lambda_hat < 15.0, "O(1) height expected: {d:?}");
        assert!(d.core_mass < 0.8, "{d:?}");
        let tiny = eig.scaled(1e-12);
        let dt = concentration_diagnostics(&tiny);
        assert!(dt.low_amplitude);
        assert!(dt.lambda_hat.is_finite());
    }

    #[test]
    fn deep_subcritical_minimum_is_achieved() {
        let a = PotentialSpec::constant(-5.0);
        let res = minimize_shl(&a, alpha1(), &quick_opts(256)).unwrap();
        let s_hl = constants::shl_constant(alpha1());
        assert!(res.energy < s_hl - 0.01, "energy {}", res.energy);
        assert_eq!(res.concentration, Concentration::Achieved);
        assert!(res.el_residual <= 1e-7 * 10.0, "{}", res.el_residual);

        let u = least_energy_solution(&res, &a, alpha1()).unwrap();
        assert!(u.values().iter().all(|&v| v > 0.0));
        // HL renormalization: D(u) = S_HL(a)^{(6-a)/(5-a)}
        let (_, d) = hl_normalize(&u, alpha1()).map(|(f, d)| (f, d)).unwrap();
        assert_relative_eq!(
            d,
            res.energy.powf((6.0 - 1.0) / (5.0 - 1.0)),
            max_relative = 1e-4
        );
        // Euler-Lagrange residual in max norm
        let r = el_residual(&u, &a, alpha1()).unwrap();
        assert!(r < 1e-4, "el residual {r:.3e}");
        // Pohozaev identity holds for the converged solution
        assert!(res.pohozaev_residual < 1e-3, "{}", res.pohozaev_residual);
    }

    #[test]
    fn pohozaev_discriminates_non_solutions() {
        let grid = RadialGrid::unit_ball(256, 0.7).unwrap();
        let a = PotentialSpec::constant(-5.0);
        let pu = project_bubble(BubbleParams::new(8.0, alpha1()).unwrap(), &grid, true).unwrap();
        let res = pohozaev_residual(&pu, &a).unwrap();
        assert!(res > 0.05, "non-solution residual {res}");
    }

    #[test]
    fn subcritical_constant_concentrates() {
        let a = PotentialSpec::constant(-1.0);
        let mut opts = quick_opts(256);
        opts.max_refinements = 0;
        opts.max_iterations = 160;
        let res = minimize_shl(&a, alpha1(), &opts).unwrap();
        assert!(matches!(res.concentration, Concentration::Concentrating { .. }));
        let s_hl = constants::shl_constant(alpha1());
        assert!(res.energy > s_hl - 1e-6, "cannot dip below S_HL: {}", res.energy);
        assert!(res.energy < s_hl + 0.05, "should approach S_HL: {}", res.energy);
    }

    #[test]
    fn energy_is_monotone_lipschitz_and_concave_in_eps() {
        let grid = RadialGrid::unit_ball(192, 0.7).unwrap();
        let base = PotentialSpec::constant(-5.0);
        let v = PotentialSpec::constant(1.0);
        let opts = quick_opts(192);
        let mut energies = Vec::new();
        for eps in [0.0, 0.4, 0.8] {
            let a = base.add_scaled(&v, eps, &grid).unwrap();
            energies.push(minimize_shl(&a, alpha1(), &opts).unwrap().energy);
        }
        let tol = 1e-6;
        assert!(energies[0] <= energies[1] + 2.0 * tol);
        assert!(energies[1] <= energies[2] + 2.0 * tol);
        // Lipschitz with a finite constant
        assert!((energies[2] - energies[0]).abs() <= 5.0 * 0.8);
        // concavity (midpoint above the chord)
        assert!(
            energies[1] >= 0.5 * (energies[0] + energies[2]) - 3.0 * tol,
            "{energies:?}"
        );
    }

    #[test]
    fn final_energy_is_certified_by_test_functions() {
        let a = PotentialSpec::constant(-5.0);
        let opts = quick_opts(256);
        let res = minimize_shl(&a, alpha1(), &opts).unwrap();
        let grid = res.minimizer.grid();
        for lam in [4.0, 8.0, 16.0] {
            let psi =
                crate::bubbles::psi_test(BubbleParams::new(lam, alpha1()).unwrap(), &a, grid)
                    .unwrap();
            let q = rayleigh_quotient(&psi, &a, alpha1()).unwrap();
            assert!(res.energy <= q + 1e-9, "lam={lam}: {} vs {q}", res.energy);
        }
    }

    #[test]
    fn least_energy_rejects_concentrating_results() {
        let grid = RadialGrid::unit_ball(128, 0.7).unwrap();
        let fake = MinimizeResult {
            energy: 1.0,
            minimizer: RadialField::zeros(&grid),
            iterations: 0,
            el_residual: 1.0,
            pohozaev_residual: 1.0,
            concentration: Concentration::Concentrating { lambda_hat: 100.0 },
        };
        assert!(matches!(
            least_energy_solution(&fake, &PotentialSpec::constant(0.0), alpha1()),
            Err(Error::NotAchieved { .. })
        ));
    }
}
