use choquard::constants::{self, Alpha};
use choquard::greens::PotentialSpec;
use choquard::grid::RadialGrid;
use choquard::minimize::{minimize_shl, Concentration, MinimizeOptions};
use std::time::Instant;

fn main() {
    for (n, g) in [(256usize, 0.7), (384, 0.7), (512, 0.7), (768, 0.7)] {
        let grid = RadialGrid::unit_ball(n, g).unwrap();
        println!("capacity(n={n}, g={g}) = {:.1}", grid.max_resolved_lambda());
    }
    let alpha = Alpha::new(1.0).unwrap();
    let s_hl = constants::shl_constant(alpha);
    for (c, n) in [(-5.0, 384usize), (-1.0, 384), (0.0, 384)] {
        let t = Instant::now();
        let a = PotentialSpec::constant(c);
        let opts = MinimizeOptions { grid_n: n, ..Default::default() };
        let res = minimize_shl(&a, alpha, &opts).unwrap();
        let tag = match res.concentration {
            Concentration::Achieved => "achieved".to_string(),
            Concentration::Concentrating { lambda_hat } => format!("concentrating(lam={lambda_hat:.1})"),
        };
        println!("a={c}: E={:.9} (S_HL-E={:+.3e}) {} iters={} gap={:.2e} [{:?}]",
            res.energy, s_hl - res.energy, tag, res.iterations, res.el_residual, t.elapsed());
    }
}
