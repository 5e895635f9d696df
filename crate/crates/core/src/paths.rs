//! Reproducible Brownian ensembles on a [`TimeGrid`].
//!
//! Every path draws from its own ChaCha stream selected by the path index, so
//! an ensemble is a pure function of `(seed, paths, steps, dim)` no matter how
//! generation is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{validation, Result};
use crate::grid::TimeGrid;

/// Brownian increments and cumulative states, stored slice-major:
/// entry `(i, m, k)` lives at `(i * paths + m) * dim + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    paths: usize,
    dim: usize,
    seed: u64,
    increments: Vec<f64>,
    states: Vec<f64>,
}

impl PathEnsemble {
    /// Draw `paths` independent `dim`-dimensional Brownian paths.
    pub fn sample(grid: &TimeGrid, paths: usize, dim: usize, seed: u64) -> Result<Self> {
        if paths == 0 {
            return Err(validation("paths must be at least 1"));
        }
        if dim == 0 {
            return Err(validation("brownian dimension must be at least 1"));
        }
        let steps = grid.steps();
        let scale = grid.dt().sqrt();
        let per_path: Vec<Vec<f64>> = (0..paths)
            .into_par_iter()
            .map(|m| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(m as u64);
                (0..steps * dim)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();

        let mut increments = vec![0.0; steps * paths * dim];
        for (m, draws) in per_path.iter().enumerate() {
            for i in 0..steps {
                let dst = (i * paths + m) * dim;
                increments[dst..dst + dim].copy_from_slice(&draws[i * dim..(i + 1) * dim]);
            }
        }
        Self::from_increments(grid, paths, dim, seed, increments)
    }

    /// Build an ensemble from explicit slice-major increments of length
    /// `steps * paths * dim`. States are accumulated from the increments.
    pub fn from_increments(
        grid: &TimeGrid,
        paths: usize,
        dim: usize,
        seed: u64,
        increments: Vec<f64>,
    ) -> Result<Self> {
        let steps = grid.steps();
        if increments.len() != steps * paths * dim {
            return Err(validation(format!(
                "expected {} increments, got {}",
                steps * paths * dim,
                increments.len()
            )));
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(validation("increments must be finite"));
        }
        let width = paths * dim;
        let mut states = vec![0.0; (steps + 1) * width];
        for i in 0..steps {
            let (done, rest) = states.split_at_mut((i + 1) * width);
            let prev = &done[i * width..];
            let next = &mut rest[..width];
            let inc = &increments[i * width..(i + 1) * width];
            for ((n, p), d) in next.iter_mut().zip(prev).zip(inc) {
                *n = p + d;
            }
        }
        Ok(Self {
            grid: grid.clone(),
            paths,
            dim,
            seed,
            increments,
            states,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    /// `W(t_i)` for every path, `paths * dim` values.
    pub fn slice_states(&self, i: usize) -> &[f64] {
        let w = self.paths * self.dim;
        &self.states[i * w..(i + 1) * w]
    }

    /// `W(t_{i+1}) - W(t_i)` for every path, `paths * dim` values.
    pub fn slice_increments(&self, i: usize) -> &[f64] {
        let w = self.paths * self.dim;
        &self.increments[i * w..(i + 1) * w]
    }

    pub fn state(&self, m: usize, i: usize) -> &[f64] {
        let at = (i * self.paths + m) * self.dim;
        &self.states[at..at + self.dim]
    }

    pub fn increment(&self, m: usize, i: usize) -> &[f64] {
        let at = (i * self.paths + m) * self.dim;
        &self.increments[at..at + self.dim]
    }

    pub fn terminal_state(&self, m: usize) -> &[f64] {
        self.state(m, self.steps())
    }

    /// All increments in slice-major order.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
        let n = xs.clone().count() as f64;
        let mean = xs.clone().sum::<f64>() / n;
        let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn first_increment_is_centered() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let ens = PathEnsemble::sample(&grid, 10_000, 1, 42).unwrap();
        let (mean, _) = mean_var(ens.slice_increments(0).iter().copied());
        assert!(mean.abs() <= 5.0 * (grid.dt() / 10_000.0).sqrt(), "mean {mean}");
    }

    #[test]
    fn increment_moments_per_slice() {
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let m = 10_000usize;
        let ens = PathEnsemble::sample(&grid, m, 2, 3).unwrap();
        let dt = grid.dt();
        for i in 0..16 {
            for k in 0..2 {
                let xs = (0..m).map(|p| ens.increment(p, i)[k]);
                let (mean, var) = mean_var(xs);
                assert!(mean.abs() <= 5.0 * (dt / m as f64).sqrt());
                // Var of the sample variance of a normal is 2 sigma^4 / (m - 1).
                let se = dt * (2.0 / (m as f64 - 1.0)).sqrt();
                assert!((var - dt).abs() <= 5.0 * se, "slice {i} var {var}");
            }
        }
    }

    #[test]
    fn terminal_variance_matches_horizon() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let ens = PathEnsemble::sample(&grid, 10_000, 1, 42).unwrap();
        let (_, var) = mean_var((0..10_000).map(|m| ens.terminal_state(m)[0]));
        assert!((0.95..=1.05).contains(&var), "var {var}");
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let a = PathEnsemble::sample(&grid, 500, 2, 11).unwrap();
        let b = PathEnsemble::sample(&grid, 500, 2, 11).unwrap();
        assert_eq!(a, b);
        let c = PathEnsemble::sample(&grid, 500, 2, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn path_stream_does_not_depend_on_ensemble_size() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let small = PathEnsemble::sample(&grid, 10, 1, 5).unwrap();
        let large = PathEnsemble::sample(&grid, 100, 1, 5).unwrap();
        for m in 0..10 {
            for i in 0..8 {
                assert_eq!(small.increment(m, i), large.increment(m, i));
            }
        }
    }

    #[test]
    fn states_telescope_exactly() {
        let grid = TimeGrid::new(2.0, 10).unwrap();
        let ens = PathEnsemble::sample(&grid, 50, 3, 1).unwrap();
        for m in 0..50 {
            assert!(ens.state(m, 0).iter().all(|&w| w == 0.0));
            for i in 0..10 {
                for k in 0..3 {
                    assert_eq!(ens.state(m, i + 1)[k], ens.state(m, i)[k] + ens.increment(m, i)[k]);
                }
            }
        }
    }

    #[test]
    fn rejects_empty_ensembles() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert!(PathEnsemble::sample(&grid, 0, 1, 0).is_err());
        assert!(PathEnsemble::sample(&grid, 10, 0, 0).is_err());
        assert!(PathEnsemble::from_increments(&grid, 2, 1, 0, vec![0.0; 3]).is_err());
    }
}
