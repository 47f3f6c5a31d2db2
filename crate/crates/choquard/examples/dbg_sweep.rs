use choquard::constants::{self, Alpha};
use choquard::greens::PotentialSpec;
use choquard::grid::RadialGrid;
use choquard::minimize::{minimize_shl, Concentration, MinimizeOptions};
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let alpha = Alpha::new(1.0).unwrap();
    let s_hl = constants::shl_constant(alpha);
    let a = PotentialSpec::constant(-PI * PI / 4.0);
    let v = PotentialSpec::constant(-1.0);
    let grid = RadialGrid::unit_ball(512, 0.7).unwrap();
    let c2 = 8.0 / (3.0 * PI.powi(4)) * s_hl;
    println!("predicted c2 = {c2:.8}, eps*lam -> {:.4}", PI.powi(3) / 2.0);
    for eps in [0.2, 0.1, 0.05, 0.025] {
        let t = Instant::now();
        let pert = a.add_scaled(&v, eps, &grid).unwrap();
        let opts = MinimizeOptions {
            grid_n: 512,
            seed_lambdas: vec![8.0],
            max_iterations: 400,
            ..Default::default()
        };
        let res = minimize_shl(&pert, alpha, &opts).unwrap();
        let (tag, lam) = match res.concentration {
            Concentration::Achieved => ("achieved", f64::NAN),
            Concentration::Concentrating { lambda_hat } => ("CONC", lambda_hat),
        };
        let deficit = s_hl - res.energy;
        let lam_hat = {
            // height law on the HL-normalized minimizer
            let scale = constants::bubble_normalization(alpha) * s_hl.powf(-1.0/8.0);
            (res.minimizer.value_at_origin() / scale).powi(2)
        };
        println!("eps={eps}: deficit={deficit:.6e} (c2*eps^2={:.6e}, ratio {:.4}) lam_hat={lam_hat:.1} eps*lam={:.3} {tag}{} iters={} gap={:.1e} [{:?}]",
            c2 * eps * eps, deficit / (c2 * eps * eps), eps * lam_hat, lam, res.iterations, res.el_residual, t.elapsed());
    }
}
