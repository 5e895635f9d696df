//! Translation by a constant. With a deterministic y-coefficient r the
//! shift ρ(t; ψ + c) − ρ(t; ψ) solves a deterministic Volterra equation
//! whose solution is −c·exp(∫_t^T r). With a random coefficient it is
//! random, but it still does not depend on ψ.

use std::sync::Arc;

use bsvie::volterra::closed_form_translation;
use bsvie::{
    check_translation, solve_bvie, BasisSpec, Coefficient, Generator, Kernel, PathEnsemble, Regressor, RiskScenario,
    SolverOptions, Terminal, TimeFunction, TimeGrid,
};

fn main() -> bsvie::Result<()> {
    // The Volterra equation alone.
    for n in [16usize, 32, 64] {
        let grid = TimeGrid::new(1.0, n)?;
        let y = solve_bvie(&Kernel::Constant(1.0), 1.0, &grid, 1e-13, 1_000)?;
        println!("N = {n:>2}: Y*(0) = {:.8}, error {:.2e}", y[0], (y[0] + std::f64::consts::E).abs());
    }
    let r = TimeFunction::func(|u| u, 1.0);
    let grid = TimeGrid::new(1.0, 64)?;
    let y = solve_bvie(&Kernel::TimeOnly(r.clone()), 2.0, &grid, 1e-13, 1_000)?;
    let closed = closed_form_translation(&|u| r.eval(u), 2.0, 0.0, 1.0, 64);
    println!("r(u) = u, c = 2: Y*(0) = {:.6}, closed form {closed:.6}", y[0]);

    // Through the risk measure.
    let grid = TimeGrid::new(1.0, 32)?;
    let ens = Arc::new(PathEnsemble::sample(&grid, 20_000, 1, 17)?);
    let reg = Arc::new(Regressor::new(ens, BasisSpec::default())?);
    let options = SolverOptions::default();

    let deterministic = RiskScenario::new(Generator::linear(0.1, 0.0), Terminal::brownian(), reg.clone(), options.clone())?;
    let out = check_translation(&deterministic, 1.0, &Terminal::Constant(0.0))?;
    println!("deterministic r = 0.1: D(0) = {:.6}, e^0.1 = {:.6}", out.y0[0], 0.1f64.exp());

    let random = Generator::Linear {
        l1: Coefficient::SinState { offset: 0.1, scale: 0.1 },
        l2: vec![Coefficient::Constant(0.0)],
    };
    let scenario = RiskScenario::new(random, Terminal::brownian(), reg, options)?;
    let out = check_translation(&scenario, 1.0, &Terminal::Constant(0.0))?;
    println!(
        "random l1 = 0.1(1 + sin W): D(0) = {:.6}; max |D_a − D_b| = {:.2e} (tolerance {:.2e})",
        out.y0[0], out.entry.worst_violation, out.entry.tolerance_used
    );
    Ok(())
}
