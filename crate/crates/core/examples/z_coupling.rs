//! g = κ|z| with terminal −W(T). The generator reads Z(s, t) from the lower
//! half of the square, which the M-extension fills with −1, so
//! Y(t) = −W(t) + κ(T − t) and Y(0) = κT.

use std::sync::Arc;

use bsvie::{picard_solve, BasisSpec, Generator, PathEnsemble, Regressor, SolverOptions, Terminal, TimeGrid};

fn main() -> bsvie::Result<()> {
    let kappa = 0.5;
    let grid = TimeGrid::new(1.0, 32)?;
    let ensemble = Arc::new(PathEnsemble::sample(&grid, 20_000, 1, 11)?);
    let regressor = Regressor::new(ensemble.clone(), BasisSpec::default())?;
    let sol = picard_solve(
        &Generator::KappaAbsZ { kappa },
        &Terminal::brownian().negated(),
        &regressor,
        &SolverOptions::default(),
    )?;
    let (mean, se) = sol.slice_stats(0);
    println!("Y(0) = {mean:.5} ± {se:.1e}   closed form {:.5}", kappa * grid.horizon());
    println!("iterations: {}, converged: {}", sol.report.iterations, sol.report.converged);

    for i in [8usize, 16, 24] {
        let t = grid.time(i);
        let states = ensemble.slice_states(i);
        let rmse = (sol
            .y
            .slice(i)
            .iter()
            .zip(states)
            .map(|(y, w)| (y - (-w + kappa * (grid.horizon() - t))).powi(2))
            .sum::<f64>()
            / ensemble.paths() as f64)
            .sqrt();
        let lower = sol.z.block(i, i / 2);
        let z_mean = lower.iter().sum::<f64>() / lower.len() as f64;
        println!("t = {t:.3}: RMSE against closed form {rmse:.2e}, mean Z(t, t/2) = {z_mean:.4}");
    }
    Ok(())
}
