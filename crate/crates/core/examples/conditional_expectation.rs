//! Least-squares conditional expectations on a Brownian ensemble:
//! E[W(T) | W(t)] = W(t) and E[W(T)² | W(t)] = W(t)² + (T − t).

use std::sync::Arc;

use bsvie::{BasisSpec, PathEnsemble, Regressor, TimeGrid};

fn main() -> bsvie::Result<()> {
    let grid = TimeGrid::new(1.0, 32)?;
    let ens = Arc::new(PathEnsemble::sample(&grid, 20_000, 1, 5)?);
    let reg = Regressor::new(ens.clone(), BasisSpec::default())?;
    let n = grid.steps();
    let terminal: Vec<f64> = ens.slice_states(n).to_vec();
    let square: Vec<f64> = terminal.iter().map(|w| w * w).collect();

    println!("  t      coef[1]   coef[0]   coef[0]-(T-t) for W²");
    for i in [0usize, 8, 16, 24, 31] {
        let linear = reg.conditional(&terminal, i)?;
        let quad = reg.conditional(&square, i)?;
        let t = grid.time(i);
        // F_0 is trivial: slice 0 fits the constant only.
        let slope = match linear.coefficients.get(1) {
            Some(b) => format!("{b:8.4}"),
            None => format!("{:>8}", "-"),
        };
        println!(
            "{t:.3}  {slope}  {:8.4}  {:8.4}",
            linear.coefficients[0],
            quad.coefficients[0] - (grid.horizon() - t)
        );
    }

    // The martingale integrand of W(T)² is 2 W(t).
    let chain = reg.markov_representation(&square, n, 0)?;
    for j in [4usize, 16, 28] {
        let states = ens.slice_states(j);
        let rmse = (chain[j].iter().zip(states).map(|(z, w)| (z - 2.0 * w).powi(2)).sum::<f64>()
            / ens.paths() as f64)
            .sqrt();
        println!("Z of W(T)² at t = {:.3}: RMSE against 2W(t) = {rmse:.4}", grid.time(j));
    }
    println!("martingale-test RMSE: {:.4}", reg.martingale_test_rmse()?);
    Ok(())
}
