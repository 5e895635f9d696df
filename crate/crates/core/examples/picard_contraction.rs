//! Linear generator g = 0.2·y + 0.2·z with terminal W(T). Prints the
//! successive weighted norms of the Picard iterates and their ratios.

use std::sync::Arc;
use std::time::Instant;

use bsvie::{picard_solve, BasisSpec, Generator, PathEnsemble, Regressor, SolverOptions, Terminal, TimeGrid};

fn main() -> bsvie::Result<()> {
    let grid = TimeGrid::new(1.0, 32)?;
    let ensemble = Arc::new(PathEnsemble::sample(&grid, 20_000, 1, 7)?);
    let regressor = Regressor::new(ensemble, BasisSpec::default())?;
    let generator = Generator::linear(0.2, 0.2);

    for beta in [None, Some(4.0)] {
        let options = SolverOptions { beta, ..SolverOptions::default() };
        let start = Instant::now();
        let sol = picard_solve(&generator, &Terminal::brownian(), &regressor, &options)?;
        let r = &sol.report;
        println!(
            "beta = {:>4}: converged = {} after {} iterations in {:.2?}, Y(0) = {:.5}",
            r.beta_used,
            r.converged,
            r.iterations,
            start.elapsed(),
            sol.y0_mean()
        );
        for (k, norm) in r.successive_norms.iter().enumerate() {
            let ratio = if k > 0 { format!("{:.3}", r.contraction_ratios[k - 1]) } else { "-".into() };
            println!("  {:>2}  {norm:.3e}  {ratio}", k + 1);
        }
    }
    Ok(())
}
