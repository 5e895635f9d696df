//! Picard solver for adapted M-solutions.
//!
//! One Picard step freezes `(y, z)`, solves the resulting backward equation
//! slice by slice on the upper half `j >= i`, then fills the lower half
//! `j < i` from the martingale representation of each `Y(t_i)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::field::{AdaptedGrid, Half, Triangle, TwoTimeField};
use crate::generator::Generator;
use crate::grid::TimeGrid;
use crate::h1::{check_h1, H1Report};
use crate::paths::PathEnsemble;
use crate::regression::Regressor;
use crate::terminal::Terminal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialIterate {
    Zero,
    /// `Θ` applied to `(0, 0)` under the zero generator.
    TerminalPropagated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Weight in the norm; `None` picks the generator's default.
    pub beta: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialIterate,
    /// Keep iterating at least this long even after reaching `tol`.
    pub min_iterations: usize,
    /// Sample count for the Lipschitz diagnostic; 0 skips it.
    pub h1_samples: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            beta: None,
            tol: 1e-4,
            max_iter: 30,
            initial: InitialIterate::Zero,
            min_iterations: 0,
            h1_samples: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub successive_norms: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub beta_used: f64,
    pub converged: bool,
    pub lipschitz_diagnostic: Option<H1Report>,
}

/// A Picard iterate: `y` on slices `0..=N`, `z` on the full square.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub y: AdaptedGrid,
    pub z: TwoTimeField,
}

impl Iterate {
    pub fn zero(steps: usize, paths: usize, dim: usize) -> Self {
        Self {
            y: AdaptedGrid::zeros(paths, steps + 1),
            z: TwoTimeField::zeros(steps, paths, dim),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MSolution {
    pub y: AdaptedGrid,
    pub z: TwoTimeField,
    pub grid: TimeGrid,
    pub report: SolverReport,
}

impl MSolution {
    pub fn y0_mean(&self) -> f64 {
        self.y.mean(0)
    }

    /// Per-slice mean of `|Y_i − E Y_i − Σ_{j<i} Z[i][j]·ΔW_j|²`.
    pub fn m_condition_residual(&self, ensemble: &PathEnsemble) -> Vec<f64> {
        m_condition_residual(&self.y, &self.z, ensemble)
    }

    /// Mean and standard error of `Y(t_i)` across paths.
    pub fn slice_stats(&self, i: usize) -> (f64, f64) {
        let mean = self.y.mean(i);
        let sd = self.y.variance(i).sqrt();
        (mean, sd / (self.y.paths() as f64).sqrt())
    }
}

/// ψ samples per slice plus their martingale integrands. Slices sharing the
/// same ψ samples share one backward chain.
struct TerminalProjection {
    samples: Vec<Arc<Vec<f64>>>,
    chains: Vec<Arc<(usize, Vec<Vec<f64>>)>>,
}

impl TerminalProjection {
    fn new(terminal: &Terminal, regressor: &Regressor) -> Result<Self> {
        let ens = regressor.ensemble();
        let grid = ens.grid();
        let n = grid.steps();
        let mut groups: Vec<(Arc<Vec<f64>>, Arc<(usize, Vec<Vec<f64>>)>)> = Vec::new();
        let mut samples = Vec::with_capacity(n + 1);
        let mut chains = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let s = terminal.samples(ens, grid.time(i));
            if let Some(k) = s.iter().position(|v| !v.is_finite()) {
                return Err(validation(format!("terminal value is not finite at slice {i}, path {k}")));
            }
            let found = groups
                .iter()
                .find(|(g, _)| g.iter().zip(&s).all(|(a, b)| a.to_bits() == b.to_bits()));
            let (s, c) = match found {
                Some((g, c)) => (g.clone(), c.clone()),
                None => {
                    let chain = regressor.markov_representation(&s, n, i)?;
                    let entry = (Arc::new(s), Arc::new((i, chain)));
                    groups.push(entry.clone());
                    entry
                }
            };
            samples.push(s);
            chains.push(c);
        }
        Ok(Self { samples, chains })
    }

    fn z(&self, i: usize, k: usize) -> &[f64] {
        let (start, chain) = &*self.chains[i];
        &chain[k - start]
    }
}

/// One frozen-coefficient solve: returns `Y` on all slices and `Z` on `j >= i`.
pub fn freeze_step(
    generator: &Generator,
    terminal: &Terminal,
    frozen: &Iterate,
    regressor: &Regressor,
) -> Result<(AdaptedGrid, Triangle)> {
    let proj = TerminalProjection::new(terminal, regressor)?;
    freeze_with(generator, &proj, frozen, regressor)
}

fn freeze_with(
    generator: &Generator,
    proj: &TerminalProjection,
    frozen: &Iterate,
    regressor: &Regressor,
) -> Result<(AdaptedGrid, Triangle)> {
    let ens = regressor.ensemble();
    let grid = ens.grid();
    let n = grid.steps();
    let paths = ens.paths();
    let dim = ens.dim();
    let dt = grid.dt();

    let mut y = AdaptedGrid::zeros(paths, n + 1);
    let mut upper = Triangle::zeros(Half::Upper, n, paths, dim);
    let mut rows = upper.rows_mut();
    rows.push(&mut []);

    let results: Vec<Result<()>> = y
        .slices_mut()
        .collect::<Vec<_>>()
        .into_par_iter()
        .zip(rows.into_par_iter())
        .enumerate()
        .map(|(i, (y_row, z_row))| {
            if i == n {
                y_row.copy_from_slice(&proj.samples[n]);
                return Ok(());
            }
            let t = grid.time(i);
            let w = paths * dim;
            let mut tail = vec![0.0; paths];
            for k in (i..n).rev() {
                let block = &mut z_row[(k - i) * w..(k - i + 1) * w];
                block.copy_from_slice(proj.z(i, k));
                if tail.iter().any(|v| *v != 0.0) {
                    let zg = regressor.martingale_coefficient(&tail, k)?;
                    for (b, g) in block.iter_mut().zip(&zg) {
                        *b += g;
                    }
                }
                let s = grid.time(k);
                let yk = frozen.y.slice(k);
                let zk = frozen.z.block(k, i);
                let states = ens.slice_states(k);
                for m in 0..paths {
                    let g = generator.eval(t, s, yk[m], &zk[m * dim..(m + 1) * dim], &states[m * dim..(m + 1) * dim]);
                    if !g.is_finite() {
                        return Err(Error::NonFiniteGenerator {
                            t_slice: i,
                            s_slice: k,
                            path: m,
                        });
                    }
                    tail[m] += g * dt;
                }
            }
            let psi = &proj.samples[i];
            for (a, p) in tail.iter_mut().zip(psi.iter()) {
                *a += p;
            }
            let fit = regressor.conditional(&tail, i)?;
            y_row.copy_from_slice(&fit.values);
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    Ok((y, upper))
}

/// Lower half `Z[i][j]`, `j < i`, from the representation of each `Y(t_i)`.
pub fn m_extend(y: &AdaptedGrid, regressor: &Regressor) -> Result<Triangle> {
    let ens = regressor.ensemble();
    let n = ens.steps();
    if y.slices() != n + 1 || y.paths() != ens.paths() {
        return Err(validation("Y shape does not match the ensemble"));
    }
    let w = ens.paths() * ens.dim();
    let mut lower = Triangle::zeros(Half::Lower, n, ens.paths(), ens.dim());
    let results: Vec<Result<()>> = lower
        .rows_mut()
        .into_par_iter()
        .enumerate()
        .map(|(i, row)| {
            if i == 0 {
                return Ok(());
            }
            let chain = regressor.markov_representation(y.slice(i), i, 0)?;
            for (j, z) in chain.iter().enumerate() {
                row[j * w..(j + 1) * w].copy_from_slice(z);
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    Ok(lower)
}

fn weighted_sum(
    y: &AdaptedGrid,
    y_ref: Option<&AdaptedGrid>,
    upper: &Triangle,
    upper_ref: Option<&Triangle>,
    beta: f64,
    grid: &TimeGrid,
) -> f64 {
    let n = grid.steps();
    let dt = grid.dt();
    let paths = y.paths() as f64;
    let mut total = 0.0;
    for i in 0..n {
        let weight = (beta * grid.time(i)).exp();
        let a = y.slice(i);
        let ys: f64 = match y_ref {
            Some(r) => a.iter().zip(r.slice(i)).map(|(u, v)| (u - v) * (u - v)).sum(),
            None => a.iter().map(|u| u * u).sum(),
        };
        let mut zs = 0.0;
        for j in i..n {
            let b = upper.block(i, j);
            zs += match upper_ref {
                Some(r) => b.iter().zip(r.block(i, j)).map(|(u, v)| (u - v) * (u - v)).sum::<f64>(),
                None => b.iter().map(|u| u * u).sum::<f64>(),
            };
        }
        total += weight * (ys * dt + zs * dt * dt) / paths;
    }
    total
}

/// Discrete weighted norm of `(y, z)`; only `z` on `j >= i` enters.
pub fn beta_norm(y: &AdaptedGrid, z: &TwoTimeField, beta: f64, grid: &TimeGrid) -> f64 {
    weighted_sum(y, None, z.upper(), None, beta, grid).sqrt()
}

/// The `y` part of [`beta_norm`] alone.
pub fn beta_norm_y(y: &AdaptedGrid, beta: f64, grid: &TimeGrid) -> f64 {
    let paths = y.paths() as f64;
    (0..grid.steps())
        .map(|i| (beta * grid.time(i)).exp() * y.slice(i).iter().map(|u| u * u).sum::<f64>() * grid.dt() / paths)
        .sum::<f64>()
        .sqrt()
}

/// Weighted norm of the difference of two iterates.
pub fn beta_distance(a: &Iterate, b: &Iterate, beta: f64, grid: &TimeGrid) -> f64 {
    weighted_sum(&a.y, Some(&b.y), a.z.upper(), Some(b.z.upper()), beta, grid).sqrt()
}

pub fn m_condition_residual(y: &AdaptedGrid, z: &TwoTimeField, ensemble: &PathEnsemble) -> Vec<f64> {
    let n = ensemble.steps();
    let dim = ensemble.dim();
    let paths = ensemble.paths();
    (0..=n)
        .map(|i| {
            let mean = y.mean(i);
            let mut acc = y.slice(i).iter().map(|v| v - mean).collect::<Vec<_>>();
            for j in 0..i {
                let zb = z.block(i, j);
                let inc = ensemble.slice_increments(j);
                for (m, a) in acc.iter_mut().enumerate() {
                    let s: f64 = zb[m * dim..(m + 1) * dim]
                        .iter()
                        .zip(&inc[m * dim..(m + 1) * dim])
                        .map(|(u, v)| u * v)
                        .sum();
                    *a -= s;
                }
            }
            acc.iter().map(|r| r * r).sum::<f64>() / paths as f64
        })
        .collect()
}

/// Fixed point of the Picard map from the configured initial iterate.
///
/// Non-convergence within `max_iter` is reported, not raised. Three
/// consecutive ratios above one abort with [`Error::Diverged`].
pub fn picard_solve(
    generator: &Generator,
    terminal: &Terminal,
    regressor: &Regressor,
    options: &SolverOptions,
) -> Result<MSolution> {
    let ens = regressor.ensemble();
    let grid = ens.grid().clone();
    generator.validate(ens.dim())?;
    terminal.validate(ens.dim())?;
    if options.max_iter == 0 {
        return Err(validation("max_iter must be at least 1"));
    }
    if !(options.tol > 0.0 && options.tol.is_finite()) {
        return Err(validation(format!("tol must be positive, got {}", options.tol)));
    }
    let beta = options.beta.unwrap_or_else(|| generator.default_beta());
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(validation(format!("beta must be positive, got {beta}")));
    }

    let proj = TerminalProjection::new(terminal, regressor)?;
    let (n, paths, dim) = (grid.steps(), ens.paths(), ens.dim());
    let mut current = Iterate::zero(n, paths, dim);
    if options.initial == InitialIterate::TerminalPropagated {
        let (y, upper) = freeze_with(&Generator::Zero, &proj, &current, regressor)?;
        drop(current);
        let lower = m_extend(&y, regressor)?;
        current = Iterate {
            y,
            z: TwoTimeField::from_halves(upper, lower),
        };
    }

    let mut norms: Vec<f64> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut rising = 0;
    for k in 1..=options.max_iter {
        let (y, upper) = freeze_with(generator, &proj, &current, regressor)?;
        let diff = weighted_sum(&y, Some(&current.y), &upper, Some(current.z.upper()), beta, &grid).sqrt();
        drop(current);
        let lower = m_extend(&y, regressor)?;
        current = Iterate {
            y,
            z: TwoTimeField::from_halves(upper, lower),
        };
        if let Some(prev) = norms.last() {
            let r = if *prev > 0.0 { diff / prev } else { 0.0 };
            ratios.push(r);
            rising = if r > 1.0 { rising + 1 } else { 0 };
        }
        norms.push(diff);
        if !diff.is_finite() || rising >= 3 {
            return Err(Error::Diverged {
                iteration: k,
                beta,
                ratios,
            });
        }
        // Θ is constant when g ignores (y, z): one step lands on the fixed point.
        if (diff <= options.tol || !generator.depends_on_solution()) && k >= options.min_iterations {
            converged = true;
            break;
        }
    }

    let lipschitz_diagnostic = (options.h1_samples > 0).then(|| check_h1(generator, ens, options.h1_samples));
    let report = SolverReport {
        iterations: norms.len(),
        successive_norms: norms,
        contraction_ratios: ratios,
        beta_used: beta,
        converged,
        lipschitz_diagnostic,
    };
    Ok(MSolution {
        y: current.y,
        z: current.z,
        grid,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{regress_conditional, BasisSpec};

    fn regressor(paths: usize, steps: usize, seed: u64) -> Regressor {
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let ens = Arc::new(PathEnsemble::sample(&grid, paths, 1, seed).unwrap());
        Regressor::new(ens, BasisSpec::default()).unwrap()
    }

    fn quick() -> SolverOptions {
        SolverOptions {
            h1_samples: 0,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn constant_terminal_zero_generator() {
        let reg = regressor(2_000, 8, 1);
        let sol = picard_solve(&Generator::Zero, &Terminal::Constant(5.0), &reg, &quick()).unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.report.iterations, 1);
        for i in 0..=8 {
            for v in sol.y.slice(i) {
                assert!((v - 5.0).abs() < 1e-10);
            }
            for j in 0..8 {
                for v in sol.z.block(i.min(7), j) {
                    assert!(v.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn terminal_slice_is_exact() {
        let reg = regressor(2_000, 8, 2);
        let psi = Terminal::Call { strike: 0.1 };
        let sol = picard_solve(&Generator::linear(0.1, 0.1), &psi, &reg, &quick()).unwrap();
        let expected = psi.samples(reg.ensemble(), 1.0);
        for (a, b) in sol.y.slice(8).iter().zip(&expected) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn frozen_accumulator_matches_direct_regression() {
        let reg = regressor(4_000, 8, 3);
        let ens = reg.ensemble();
        let brownian = Terminal::brownian();
        let (y, upper) = freeze_step(&Generator::Zero, &brownian, &Iterate::zero(8, 4_000, 1), &reg).unwrap();
        let frozen = Iterate {
            y: y.clone(),
            z: TwoTimeField::from_halves(upper, m_extend(&y, &reg).unwrap()),
        };
        let r = 0.3;
        let (y2, _) = freeze_step(&Generator::linear(r, 0.0), &brownian, &frozen, &reg).unwrap();
        let dt = ens.grid().dt();
        let direct: Vec<f64> = (0..ens.paths())
            .map(|m| ens.terminal_state(m)[0] + (0..8).map(|j| r * y.get(m, j) * dt).sum::<f64>())
            .collect();
        let fit = regress_conditional(&direct, ens, 0, reg.basis()).unwrap();
        for (a, b) in y2.slice(0).iter().zip(&fit.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn deterministic_linear_equation() {
        let reg = regressor(1_000, 32, 4);
        let opts = SolverOptions { tol: 1e-12, ..quick() };
        let sol = picard_solve(&Generator::linear(0.1, 0.0), &Terminal::Constant(1.0), &reg, &opts).unwrap();
        assert!(sol.report.converged);
        let discrete = (1.0f64 - 0.1 / 32.0).powi(-32);
        assert!((sol.y0_mean() - discrete).abs() < 1e-9, "{} vs {discrete}", sol.y0_mean());
        assert!((sol.y0_mean() - 0.1f64.exp()).abs() < 5e-3);
    }

    #[test]
    fn norm_examples() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let z = TwoTimeField::zeros(64, 3, 1);
        assert_eq!(beta_norm(&AdaptedGrid::zeros(3, 65), &z, 1.0, &grid), 0.0);
        let ones = AdaptedGrid::from_slices(3, vec![vec![1.0; 3]; 65]);
        assert!((beta_norm(&ones, &z, 0.0, &grid) - 1.0).abs() < 1e-12);
        let e = (std::f64::consts::E - 1.0).sqrt();
        assert!((beta_norm(&ones, &z, 1.0, &grid) - e).abs() < 2.0 / 64.0);
        assert_eq!(beta_norm_y(&ones, 1.0, &grid), beta_norm(&ones, &z, 1.0, &grid));
    }

    #[test]
    fn norm_counts_upper_z_only() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mut upper = Triangle::zeros(Half::Upper, 4, 1, 1);
        upper.block_mut(1, 2)[0] = 2.0;
        let mut lower = Triangle::zeros(Half::Lower, 4, 1, 1);
        lower.block_mut(3, 0)[0] = 100.0;
        let z = TwoTimeField::from_halves(upper, lower);
        let got = beta_norm(&AdaptedGrid::zeros(1, 5), &z, 0.0, &grid);
        assert!((got - (4.0f64 / 16.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn m_extend_of_deterministic_slices_is_zero() {
        let reg = regressor(4_000, 8, 5);
        let y = AdaptedGrid::from_slices(4_000, (0..=8).map(|i| vec![i as f64; 4_000]).collect());
        let lower = m_extend(&y, &reg).unwrap();
        for (i, j) in lower.pairs() {
            for v in lower.block(i, j) {
                assert!(v.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn nonfinite_generator_is_reported() {
        let reg = regressor(1_000, 4, 6);
        let g = Generator::custom(|_, s, _, _, _| if s > 0.5 { f64::NAN } else { 0.0 }, 0.0, 0.0);
        let err = picard_solve(&g, &Terminal::Constant(1.0), &reg, &quick()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGenerator { s_slice: 3, .. }), "{err}");
    }

    #[test]
    fn divergence_is_detected() {
        let reg = regressor(1_000, 8, 7);
        let g = Generator::custom(|_, _, y, _, _| 40.0 * y, 40.0, 0.0);
        let opts = SolverOptions {
            beta: Some(1e-3),
            ..quick()
        };
        let err = picard_solve(&g, &Terminal::Constant(1.0), &reg, &opts).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn non_convergence_is_a_state() {
        let reg = regressor(1_000, 8, 8);
        let opts = SolverOptions {
            max_iter: 2,
            tol: 1e-14,
            ..quick()
        };
        let sol = picard_solve(&Generator::linear(0.5, 0.0), &Terminal::Constant(1.0), &reg, &opts).unwrap();
        assert!(!sol.report.converged);
        assert_eq!(sol.report.iterations, 2);
    }

    #[test]
    fn rejects_bad_options() {
        let reg = regressor(1_000, 4, 9);
        for opts in [
            SolverOptions { max_iter: 0, ..quick() },
            SolverOptions { tol: 0.0, ..quick() },
            SolverOptions { beta: Some(-1.0), ..quick() },
        ] {
            assert!(picard_solve(&Generator::Zero, &Terminal::Constant(1.0), &reg, &opts).is_err());
        }
    }
}
