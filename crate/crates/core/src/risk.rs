//! Dynamic risk measures `ρ(t; ψ) = Y(t)` and the coherence axiom battery.
//!
//! The solver is always run on the terminal `−ψ`, so a larger claim carries
//! a smaller risk.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{validation, Result};
use crate::field::AdaptedGrid;
use crate::generator::{Coefficient, Generator};
use crate::regression::Regressor;
use crate::solver::{picard_solve, MSolution, SolverOptions};
use crate::terminal::Terminal;
use crate::volterra::solve_bvie;

/// Multiple of the regression RMSE used as the default axiom tolerance.
pub const TOLERANCE_MULTIPLE: f64 = 3.0;

pub struct RiskScenario {
    pub generator: Generator,
    pub claim: Terminal,
    pub regressor: Arc<Regressor>,
    pub options: SolverOptions,
    pub tolerance: f64,
    cache: Mutex<HashMap<String, Arc<AdaptedGrid>>>,
}

impl RiskScenario {
    /// Tolerance defaults to three times the martingale-test RMSE.
    pub fn new(generator: Generator, claim: Terminal, regressor: Arc<Regressor>, options: SolverOptions) -> Result<Self> {
        let tolerance = TOLERANCE_MULTIPLE * regressor.martingale_test_rmse()?;
        Ok(Self {
            generator,
            claim,
            regressor,
            options,
            tolerance,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Full solution for `claim` (terminal `−claim`).
    pub fn solve(&self, claim: &Terminal) -> Result<MSolution> {
        picard_solve(&self.generator, &claim.negated(), &self.regressor, &self.options)
    }

    /// `ρ(t_i; claim)` per path, memoized by the claim's description.
    pub fn rho_of(&self, claim: &Terminal) -> Result<Arc<AdaptedGrid>> {
        let key = claim.describe();
        if let Some(y) = self.cache.lock().unwrap().get(&key) {
            return Ok(y.clone());
        }
        let y = Arc::new(self.solve(claim)?.y);
        self.cache.lock().unwrap().insert(key, y.clone());
        Ok(y)
    }

    pub fn rho(&self) -> Result<Arc<AdaptedGrid>> {
        self.rho_of(&self.claim)
    }

    fn slices(&self) -> usize {
        self.regressor.grid().steps() + 1
    }
}

/// `ρ(·; ψ)` for the scenario's claim.
pub fn rho(scenario: &RiskScenario) -> Result<Arc<AdaptedGrid>> {
    scenario.rho()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomEntry {
    pub name: String,
    pub holds: bool,
    pub worst_violation: f64,
    pub tolerance_used: f64,
    pub slices_tested: Vec<usize>,
    pub detail: String,
}

impl AxiomEntry {
    fn from_violation(name: &str, worst: f64, tolerance: f64, slices: Vec<usize>, detail: String) -> Self {
        Self {
            name: name.to_string(),
            holds: worst <= tolerance,
            worst_violation: worst,
            tolerance_used: tolerance,
            slices_tested: slices,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub entries: Vec<AxiomEntry>,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }

    pub fn entry(&self, name: &str) -> Option<&AxiomEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Worst result per axiom name, in name order.
    pub fn summary(&self) -> Vec<(String, bool, f64, f64)> {
        let mut by_name: Vec<(String, bool, f64, f64)> = Vec::new();
        for e in &self.entries {
            match by_name.iter_mut().find(|r| r.0 == e.name) {
                Some(r) => {
                    r.1 &= e.holds;
                    r.2 = r.2.max(e.worst_violation);
                    r.3 = r.3.max(e.tolerance_used);
                }
                None => by_name.push((e.name.clone(), e.holds, e.worst_violation, e.tolerance_used)),
            }
        }
        by_name.sort_by(|a, b| a.0.cmp(&b.0));
        by_name
    }

    /// Fixed-width text table, one row per entry.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<22} {:<6} {:>12} {:>12}  {}\n",
            "axiom", "holds", "violation", "tolerance", "detail"
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{:<22} {:<6} {:>12.4e} {:>12.4e}  {}\n",
                e.name,
                if e.holds { "yes" } else { "NO" },
                e.worst_violation,
                e.tolerance_used,
                e.detail
            ));
        }
        out
    }
}

/// Largest `f(a, b)` over paths and the given slices.
fn worst_over(a: &AdaptedGrid, b: &AdaptedGrid, slices: &[usize], f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for &i in slices {
        for (x, y) in a.slice(i).iter().zip(b.slice(i)) {
            worst = worst.max(f(*x, *y));
        }
    }
    worst
}

/// `ρ(t_i; ψ) = ρ(t_i; ψ̄)` bit for bit on slices `i >= from_slice`.
///
/// Both runs are held to the same number of Picard iterations, since the
/// stopping rule looks at the whole horizon.
pub fn check_past_independence(
    scenario: &RiskScenario,
    psi: &Terminal,
    psi_bar: &Terminal,
    from_slice: usize,
) -> Result<AxiomEntry> {
    let n = scenario.slices() - 1;
    if from_slice > n {
        return Err(validation(format!("from_slice {from_slice} exceeds {n}")));
    }
    let mut a = scenario.solve(psi)?;
    let mut b = scenario.solve(psi_bar)?;
    let target = a.report.iterations.max(b.report.iterations);
    let pinned = SolverOptions {
        min_iterations: target,
        max_iter: scenario.options.max_iter.max(target),
        ..scenario.options.clone()
    };
    if a.report.iterations < target {
        a = picard_solve(&scenario.generator, &psi.negated(), &scenario.regressor, &pinned)?;
    }
    if b.report.iterations < target {
        b = picard_solve(&scenario.generator, &psi_bar.negated(), &scenario.regressor, &pinned)?;
    }
    let slices: Vec<usize> = (from_slice..=n).collect();
    let mut mismatched = 0usize;
    for &i in &slices {
        for (x, y) in a.y.slice(i).iter().zip(b.y.slice(i)) {
            if x.to_bits() != y.to_bits() {
                mismatched += 1;
            }
        }
    }
    let worst = worst_over(&a.y, &b.y, &slices, |x, y| (x - y).abs());
    let early = if from_slice > 0 {
        worst_over(&a.y, &b.y, &(0..from_slice).collect::<Vec<_>>(), |x, y| (x - y).abs())
    } else {
        0.0
    };
    Ok(AxiomEntry {
        name: "past_independence".into(),
        holds: mismatched == 0,
        worst_violation: worst,
        tolerance_used: 0.0,
        slices_tested: slices,
        detail: format!(
            "{} vs {} from slice {from_slice}: {mismatched} mismatched values; largest difference before: {early:.3e}",
            psi.describe(),
            psi_bar.describe()
        ),
    })
}

/// `ψ <= ψ̄` implies `ρ(t; ψ) >= ρ(t; ψ̄) − tol` pathwise.
pub fn check_monotonicity(scenario: &RiskScenario, psi: &Terminal, psi_bar: &Terminal) -> Result<AxiomEntry> {
    let ens = scenario.regressor.ensemble();
    let grid = ens.grid();
    for i in 0..=grid.steps() {
        let t = grid.time(i);
        for m in 0..ens.paths() {
            let w = ens.terminal_state(m);
            if psi.eval(t, w) > psi_bar.eval(t, w) {
                return Err(validation(format!(
                    "monotonicity pair is not ordered: {} > {} at slice {i}, path {m}",
                    psi.describe(),
                    psi_bar.describe()
                )));
            }
        }
    }
    let low = scenario.rho_of(psi)?;
    let high = scenario.rho_of(psi_bar)?;
    let slices: Vec<usize> = (0..scenario.slices()).collect();
    let worst = worst_over(&low, &high, &slices, |a, b| (b - a).max(0.0));
    Ok(AxiomEntry::from_violation(
        "monotonicity",
        worst,
        scenario.tolerance,
        slices,
        format!("{} <= {}", psi.describe(), psi_bar.describe()),
    ))
}

/// `ρ(t; λψ) = λ ρ(t; ψ)` pathwise within tolerance.
pub fn check_positive_homogeneity(scenario: &RiskScenario, lambda: f64) -> Result<AxiomEntry> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(validation(format!("lambda must be positive, got {lambda}")));
    }
    let base = scenario.rho()?;
    let scaled = scenario.rho_of(&scenario.claim.scaled(lambda))?;
    let slices: Vec<usize> = (0..scenario.slices()).collect();
    let worst = worst_over(&scaled, &base, &slices, |a, b| (a - lambda * b).abs());
    Ok(AxiomEntry::from_violation(
        "positive_homogeneity",
        worst,
        scenario.tolerance,
        slices,
        format!(
            "lambda = {lambda}: rho(0; lambda psi) = {:.6}, lambda rho(0; psi) = {:.6}",
            scaled.mean(0),
            lambda * base.mean(0)
        ),
    ))
}

/// `ρ(t; ψ1+ψ2) <= ρ(t; ψ1) + ρ(t; ψ2) + tol`; two-sided for linear generators.
pub fn check_subadditivity(scenario: &RiskScenario, psi1: &Terminal, psi2: &Terminal) -> Result<AxiomEntry> {
    let a = scenario.rho_of(psi1)?;
    let b = scenario.rho_of(psi2)?;
    let sum = scenario.rho_of(&psi1.plus(psi2))?;
    let slices: Vec<usize> = (0..scenario.slices()).collect();
    let linear = scenario.generator.is_linear();
    let mut worst = 0.0f64;
    for &i in &slices {
        for ((s, x), y) in sum.slice(i).iter().zip(a.slice(i)).zip(b.slice(i)) {
            let gap = s - x - y;
            worst = worst.max(if linear { gap.abs() } else { gap.max(0.0) });
        }
    }
    Ok(AxiomEntry::from_violation(
        "subadditivity",
        worst,
        scenario.tolerance,
        slices,
        format!(
            "{} + {}{}: rho(0) sum {:.6} vs {:.6}",
            psi1.describe(),
            psi2.describe(),
            if linear { " (equality)" } else { "" },
            sum.mean(0),
            a.mean(0) + b.mean(0)
        ),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationOutcome {
    pub entry: AxiomEntry,
    /// Path mean of `D(t_i) = ρ(t_i; ψ+c) − ρ(t_i; ψ)`, the empirical `Y_0`.
    pub y0: Vec<f64>,
    /// Deterministic reference from the Volterra equation, when the
    /// `y`-coefficient is deterministic.
    pub reference: Option<Vec<f64>>,
}

/// Generalized translation: `ρ(t; ψ+c) = ρ(t; ψ) − Y_0(t)`.
///
/// With a deterministic `y`-coefficient `D` is compared to the Volterra
/// solution `Y*`; otherwise `D` for the scenario claim is compared to `D`
/// for `alt_claim`.
pub fn check_translation(scenario: &RiskScenario, c: f64, alt_claim: &Terminal) -> Result<TranslationOutcome> {
    if !c.is_finite() {
        return Err(validation("translation constant must be finite"));
    }
    let grid = scenario.regressor.grid().clone();
    let slices: Vec<usize> = (0..scenario.slices()).collect();
    let difference = |claim: &Terminal| -> Result<AdaptedGrid> {
        let shifted = scenario.rho_of(&claim.shifted(c))?;
        let base = scenario.rho_of(claim)?;
        Ok(shifted.difference(&base))
    };
    let d = difference(&scenario.claim)?;
    let y0 = d.means();

    match scenario.generator.deterministic_y_kernel() {
        Some(kernel) => {
            let reference = solve_bvie(&kernel, c, &grid, 1e-13, 10_000)?;
            let mut worst = 0.0f64;
            for &i in &slices {
                for v in d.slice(i) {
                    worst = worst.max((v - reference[i]).abs());
                }
            }
            let entry = AxiomEntry::from_violation(
                "translation",
                worst,
                scenario.tolerance,
                slices,
                format!("c = {c}: D(0) = {:.6}, Volterra Y*(0) = {:.6}", y0[0], reference[0]),
            );
            Ok(TranslationOutcome {
                entry,
                y0,
                reference: Some(reference),
            })
        }
        None => {
            let d_alt = difference(alt_claim)?;
            let worst = worst_over(&d, &d_alt, &slices, |a, b| (a - b).abs());
            let entry = AxiomEntry::from_violation(
                "translation",
                worst,
                scenario.tolerance,
                slices,
                format!(
                    "c = {c}: D(0) = {:.6} for {}, {:.6} for {}",
                    y0[0],
                    scenario.claim.describe(),
                    d_alt.mean(0),
                    alt_claim.describe()
                ),
            );
            Ok(TranslationOutcome {
                entry,
                y0,
                reference: None,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NonDeterministic,
    Deterministic,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub c: f64,
    pub averaged: bool,
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub variance_standard_errors: Vec<f64>,
    pub mid_slice: usize,
    pub mid_variance: f64,
    pub mid_standard_error: f64,
    /// `Σ_{i, j<i} mean |Z[i][j]|² Δt²`.
    pub z_energy: f64,
    pub verdict: Verdict,
    pub converged: bool,
}

/// Sample variance and the standard error of that variance estimate.
pub fn variance_with_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    (m2, ((m4 - m2 * m2).max(0.0) / n).sqrt())
}

/// Solves `Y(t) = −c + ∫_t^T sin(W(s)) Y(s) ds − ∫_t^T Z dW` and tests whether
/// `Y` is deterministic. With `averaged` the coefficient is replaced by its
/// mean, which is zero.
pub fn sin_counterexample(
    c: f64,
    regressor: &Regressor,
    options: &SolverOptions,
    averaged: bool,
) -> Result<CounterexampleReport> {
    if !c.is_finite() {
        return Err(validation("counterexample c must be finite"));
    }
    let l1 = if averaged {
        Coefficient::Constant(0.0)
    } else {
        Coefficient::SinState { offset: 0.0, scale: 1.0 }
    };
    let dim = regressor.dim();
    let generator = Generator::Linear {
        l1,
        l2: vec![Coefficient::Constant(0.0); dim],
    };
    let sol = picard_solve(&generator, &Terminal::Constant(-c), regressor, options)?;
    let grid = regressor.grid();
    let n = grid.steps();
    let (mut variances, mut errors) = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
    for i in 0..=n {
        let (v, se) = variance_with_error(sol.y.slice(i));
        variances.push(v);
        errors.push(se);
    }
    let dt = grid.dt();
    let mut z_energy = 0.0;
    for i in 1..n {
        for j in 0..i {
            let block = sol.z.block(i, j);
            z_energy += block.iter().map(|v| v * v).sum::<f64>() / sol.y.paths() as f64 * dt * dt;
        }
    }
    let mid = n / 2;
    let (mv, mse) = (variances[mid], errors[mid]);
    // Regression round-off leaves a variance of order ε² on constant slices.
    let floor = (1e-12 * (1.0 + sol.y.mean(mid).abs())).powi(2);
    let verdict = if mv <= floor {
        Verdict::Deterministic
    } else if mv > 5.0 * mse {
        Verdict::NonDeterministic
    } else if mv <= 2.0 * mse {
        Verdict::Deterministic
    } else {
        Verdict::Inconclusive
    };
    Ok(CounterexampleReport {
        c,
        averaged,
        times: grid.points(),
        means: sol.y.means(),
        variances,
        variance_standard_errors: errors,
        mid_slice: mid,
        mid_variance: mv,
        mid_standard_error: mse,
        z_energy,
        verdict,
        converged: sol.report.converged,
    })
}

/// Claims and constants exercised by [`coherence_report`].
#[derive(Debug, Clone)]
pub struct Battery {
    /// `(ψ, ψ̄, from_time)` with `ψ = ψ̄` from `from_time` on.
    pub past_independence: Vec<(Terminal, Terminal, f64)>,
    /// Ordered pairs `ψ <= ψ̄`.
    pub monotonicity: Vec<(Terminal, Terminal)>,
    pub homogeneity: Vec<f64>,
    pub subadditivity: Vec<(Terminal, Terminal)>,
    pub translation: Vec<f64>,
    /// Second claim for the translation comparison when `l1` is random.
    pub translation_alt: Terminal,
}

impl Battery {
    /// Default claims around `claim`. The call/put subadditivity pair is only
    /// added for linear generators, where it is an equality check.
    pub fn default_for(claim: &Terminal, generator: &Generator) -> Self {
        let w = Terminal::brownian();
        let mut subadditivity = vec![(w.clone(), w.negated())];
        if generator.is_linear() {
            subadditivity.push((Terminal::Call { strike: 1.0 }, Terminal::Put { strike: 1.0 }));
        }
        Self {
            past_independence: vec![(
                Terminal::switched(claim.clone(), Terminal::Constant(3.0), 0.5),
                Terminal::Constant(3.0),
                0.5,
            )],
            monotonicity: vec![
                (Terminal::Constant(1.0), Terminal::Constant(2.0)),
                (claim.clone(), claim.shifted(1.0)),
                (Terminal::Put { strike: 0.0 }.negated(), Terminal::Call { strike: 0.0 }),
            ],
            homogeneity: vec![2.0],
            subadditivity,
            translation: vec![1.0],
            translation_alt: Terminal::Constant(0.0),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.past_independence.is_empty()
            && self.monotonicity.is_empty()
            && self.homogeneity.is_empty()
            && self.subadditivity.is_empty()
            && self.translation.is_empty()
    }
}

/// Runs every check in `battery`. Violations are findings, not errors.
pub fn coherence_report(scenario: &RiskScenario, battery: &Battery) -> Result<AxiomReport> {
    if battery.is_empty() {
        return Err(validation("axiom battery is empty"));
    }
    let grid = scenario.regressor.grid();
    let mut entries = Vec::new();
    for (psi, psi_bar, from) in &battery.past_independence {
        entries.push(check_past_independence(scenario, psi, psi_bar, grid.first_index_at_or_after(*from))?);
    }
    for (low, high) in &battery.monotonicity {
        entries.push(check_monotonicity(scenario, low, high)?);
    }
    for &lambda in &battery.homogeneity {
        entries.push(check_positive_homogeneity(scenario, lambda)?);
    }
    for (a, b) in &battery.subadditivity {
        entries.push(check_subadditivity(scenario, a, b)?);
    }
    for &c in &battery.translation {
        entries.push(check_translation(scenario, c, &battery.translation_alt)?.entry);
    }
    Ok(AxiomReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::paths::PathEnsemble;
    use crate::regression::BasisSpec;

    fn regressor(paths: usize, steps: usize, seed: u64) -> Arc<Regressor> {
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let ens = Arc::new(PathEnsemble::sample(&grid, paths, 1, seed).unwrap());
        Arc::new(Regressor::new(ens, BasisSpec::default()).unwrap())
    }

    fn opts() -> SolverOptions {
        SolverOptions {
            h1_samples: 0,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn constant_claim_under_zero_generator() {
        let s = RiskScenario::new(Generator::Zero, Terminal::Constant(5.0), regressor(2_000, 8, 1), opts()).unwrap();
        let r = s.rho().unwrap();
        assert!(r.values().iter().all(|v| (v + 5.0).abs() < 1e-10));
    }

    #[test]
    fn rho_is_memoized() {
        let s = RiskScenario::new(Generator::linear(0.1, 0.0), Terminal::brownian(), regressor(2_000, 8, 2), opts()).unwrap();
        let a = s.rho().unwrap();
        let b = s.rho_of(&Terminal::brownian()).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn identical_claims_are_past_independent_everywhere() {
        let s = RiskScenario::new(Generator::linear(0.1, 0.2), Terminal::brownian(), regressor(2_000, 8, 3), opts()).unwrap();
        let e = check_past_independence(&s, &Terminal::brownian(), &Terminal::brownian(), 0).unwrap();
        assert!(e.holds);
        assert_eq!(e.worst_violation, 0.0);
    }

    #[test]
    fn switched_claim_is_past_independent() {
        let s = RiskScenario::new(Generator::linear(0.1, 0.2), Terminal::brownian(), regressor(2_000, 8, 4), opts()).unwrap();
        let psi = Terminal::switched(Terminal::brownian(), Terminal::Constant(3.0), 0.5);
        let e = check_past_independence(&s, &psi, &Terminal::Constant(3.0), 4).unwrap();
        assert!(e.holds, "{}", e.detail);
    }

    #[test]
    fn shifted_claim_is_not_past_independent() {
        let s = RiskScenario::new(Generator::linear(0.1, 0.2), Terminal::brownian(), regressor(2_000, 8, 5), opts()).unwrap();
        let e = check_past_independence(&s, &Terminal::brownian(), &Terminal::brownian().shifted(1.0), 0).unwrap();
        assert!(!e.holds);
        assert!(e.worst_violation > 0.1);
    }

    #[test]
    fn unit_scaling_is_bit_identical() {
        let s = RiskScenario::new(Generator::KappaAbsZ { kappa: 0.5 }, Terminal::brownian(), regressor(2_000, 8, 6), opts()).unwrap();
        let e = check_positive_homogeneity(&s, 1.0).unwrap();
        assert_eq!(e.worst_violation, 0.0);
    }

    #[test]
    fn linear_homogeneity_is_tight() {
        let s = RiskScenario::new(Generator::linear(0.1, 0.2), Terminal::brownian(), regressor(2_000, 8, 7), opts()).unwrap();
        let e = check_positive_homogeneity(&s, 2.0).unwrap();
        assert!(e.worst_violation < 1e-10, "{}", e.worst_violation);
    }

    #[test]
    fn zero_translation_is_exact() {
        let s = RiskScenario::new(Generator::linear(0.1, 0.0), Terminal::brownian(), regressor(2_000, 8, 8), opts()).unwrap();
        let out = check_translation(&s, 0.0, &Terminal::Constant(0.0)).unwrap();
        assert!(out.y0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unordered_monotonicity_pair_is_rejected() {
        let s = RiskScenario::new(Generator::Zero, Terminal::brownian(), regressor(1_000, 4, 9), opts()).unwrap();
        assert!(check_monotonicity(&s, &Terminal::Constant(2.0), &Terminal::Constant(1.0)).is_err());
    }

    #[test]
    fn empty_battery_is_rejected() {
        let s = RiskScenario::new(Generator::Zero, Terminal::brownian(), regressor(1_000, 4, 10), opts()).unwrap();
        let mut b = Battery::default_for(&Terminal::brownian(), &Generator::Zero);
        b.past_independence.clear();
        b.monotonicity.clear();
        b.homogeneity.clear();
        b.subadditivity.clear();
        b.translation.clear();
        assert!(coherence_report(&s, &b).is_err());
    }

    #[test]
    fn variance_error_of_constant_sample_is_zero() {
        assert_eq!(variance_with_error(&[3.0; 10]), (0.0, 0.0));
        let (v, se) = variance_with_error(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(v, 1.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn counterexample_controls() {
        let reg = regressor(2_000, 8, 11);
        let zero = sin_counterexample(0.0, &reg, &opts(), false).unwrap();
        assert_eq!(zero.verdict, Verdict::Deterministic);
        let averaged = sin_counterexample(1.0, &reg, &opts(), true).unwrap();
        assert!(averaged.means.iter().all(|m| (m + 1.0).abs() < 1e-10));
        assert_eq!(averaged.verdict, Verdict::Deterministic);
        let random = sin_counterexample(1.0, &reg, &opts(), false).unwrap();
        assert_eq!(random.verdict, Verdict::NonDeterministic);
    }
}
