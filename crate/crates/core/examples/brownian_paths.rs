//! Seeded Brownian ensembles: moments, reproducibility and the fact that a
//! path's increments do not depend on how many paths were drawn.

use bsvie::{PathEnsemble, TimeGrid};

fn main() -> bsvie::Result<()> {
    let grid = TimeGrid::new(1.0, 32)?;
    let ens = PathEnsemble::sample(&grid, 20_000, 2, 99)?;

    for k in 0..ens.dim() {
        let terminal: Vec<f64> = (0..ens.paths()).map(|m| ens.terminal_state(m)[k]).collect();
        let mean = terminal.iter().sum::<f64>() / terminal.len() as f64;
        let var = terminal.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / terminal.len() as f64;
        println!("component {k}: mean W(T) = {mean:+.4}, var W(T) = {var:.4} (expect 0 and {})", grid.horizon());
    }

    let again = PathEnsemble::sample(&grid, 20_000, 2, 99)?;
    println!("same seed reproduces the ensemble: {}", again.increments() == ens.increments());

    let small = PathEnsemble::sample(&grid, 100, 2, 99)?;
    let prefix_matches = (0..100).all(|m| (0..grid.steps()).all(|i| small.increment(m, i) == ens.increment(m, i)));
    println!("first 100 paths identical when drawing only 100: {prefix_matches}");
    Ok(())
}
