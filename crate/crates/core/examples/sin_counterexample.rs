//! Y(t) = −c + ∫_t^T sin(W(s)) Y(s) ds − ∫_t^T Z(t,s) dW(s) has a genuinely
//! random solution, so the translation term cannot be a deterministic
//! function of time. Replacing sin W(s) by its mean (zero) gives Y ≡ −c.

use std::sync::Arc;

use bsvie::{sin_counterexample, BasisSpec, PathEnsemble, Regressor, SolverOptions, TimeGrid};

fn main() -> bsvie::Result<()> {
    let grid = TimeGrid::new(1.0, 32)?;
    let ens = Arc::new(PathEnsemble::sample(&grid, 20_000, 1, 3)?);
    let reg = Regressor::new(ens, BasisSpec::default())?;
    let options = SolverOptions::default();

    for (c, averaged) in [(1.0, false), (0.0, false), (1.0, true)] {
        let r = sin_counterexample(c, &reg, &options, averaged)?;
        println!(
            "c = {c}, averaged = {averaged:5}: Var Y({:.2}) = {:.4e} ± {:.1e}, Z energy {:.3e} -> {:?}",
            r.times[r.mid_slice], r.mid_variance, r.mid_standard_error, r.z_energy, r.verdict
        );
    }
    Ok(())
}
