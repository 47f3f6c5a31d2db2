use choquard::constants::Alpha;
use choquard::greens::PotentialSpec;
use choquard::grid::RadialGrid;
use choquard::minimize::{minimize_shl, MinimizeOptions, Concentration};
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let alpha = Alpha::new(1.0).unwrap();
    let a = PotentialSpec::constant(-PI * PI / 4.0);
    let v = PotentialSpec::constant(-1.0);
    let grid = RadialGrid::unit_ball(512, 0.7).unwrap();
    let pert = a.add_scaled(&v, 0.2, &grid).unwrap();
    for (iters, tol) in [(700usize, 1e-6), (1200, 2e-7)] {
        let t = Instant::now();
        let opts = MinimizeOptions { grid_n: 512, seed_lambdas: vec![8.0], max_iterations: iters, tolerance: tol, ..Default::default() };
        let res = minimize_shl(&pert, alpha, &opts).unwrap();
        println!("cap={iters} tol={tol:.0e}: E={:.9} gap={:.2e} iters={} conc={:?} [{:?}]",
            res.energy, res.el_residual, res.iterations, matches!(res.concentration, Concentration::Achieved), t.elapsed());
    }
}
