//! Runtime diagnostics for the stochastic Lipschitz hypothesis on `g`.
//!
//! The hypothesis bounds `∫_t^T L1(t,s)² ds` and `(∫_t^T L2(t,s)^q ds)^{2/q}`
//! for some `q > 2`, and requires `E ∫_0^T (∫_t^T |g(t,s,0,0)| ds)² dt < ∞`.
//! Here the Lipschitz constants are probed by finite differences at random
//! points and the integrals are reported in their `q = 2` form using the
//! declared bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::generator::Generator;
use crate::paths::PathEnsemble;

const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H1Report {
    pub samples: usize,
    pub declared_lipschitz_y: f64,
    pub declared_lipschitz_z: f64,
    pub observed_lipschitz_y: f64,
    pub observed_lipschitz_z: f64,
    /// `L1² T`, the declared bound on `sup_t ∫_t^T L1² ds`.
    pub l1_square_integral: f64,
    /// `L2² T`.
    pub l2_square_integral: f64,
    /// Estimate of `E ∫_0^T (∫_t^T |g(t,s,0,0)| ds)² dt`.
    pub g0_functional: f64,
    pub violations: Vec<String>,
}

impl H1Report {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Probe `generator` at `sample_count` random `(t <= s, path, y, z)` points and
/// estimate the `g(t,s,0,0)` functional over the first `sample_count` paths.
/// Never fails; problems are listed in `violations`.
pub fn check_h1(generator: &Generator, ensemble: &PathEnsemble, sample_count: usize) -> H1Report {
    let grid = ensemble.grid();
    let n = grid.steps();
    let dim = ensemble.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed() ^ 0x4831_4831);

    let mut obs_y = 0.0f64;
    let mut obs_z = 0.0f64;
    let mut z = vec![0.0; dim];
    let mut z_bar = vec![0.0; dim];
    for _ in 0..sample_count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(i..n);
        let m = rng.random_range(0..ensemble.paths());
        let (t, s) = (grid.time(i), grid.time(j));
        let state = ensemble.state(m, j);
        let y = 3.0 * rng.sample::<f64, _>(StandardNormal);
        for v in z.iter_mut() {
            *v = 3.0 * rng.sample::<f64, _>(StandardNormal);
        }

        let dy = rng.sample::<f64, _>(StandardNormal);
        if dy != 0.0 {
            let a = generator.eval(t, s, y, &z, state);
            let b = generator.eval(t, s, y + dy, &z, state);
            obs_y = obs_y.max((a - b).abs() / dy.abs());
        }

        let mut dz2 = 0.0;
        for (zb, zv) in z_bar.iter_mut().zip(&z) {
            let d = rng.sample::<f64, _>(StandardNormal);
            *zb = zv + d;
            dz2 += d * d;
        }
        if dz2 > 0.0 {
            let a = generator.eval(t, s, y, &z, state);
            let b = generator.eval(t, s, y, &z_bar, state);
            obs_z = obs_z.max((a - b).abs() / dz2.sqrt());
        }
    }

    let dt = grid.dt();
    let zero = vec![0.0; dim];
    let probe_paths = sample_count.min(ensemble.paths());
    let mut g0 = 0.0;
    for m in 0..probe_paths {
        let mut outer = 0.0;
        for i in 0..n {
            let t = grid.time(i);
            let inner: f64 = (i..n)
                .map(|j| generator.eval(t, grid.time(j), 0.0, &zero, ensemble.state(m, j)).abs())
                .sum::<f64>()
                * dt;
            outer += inner * inner * dt;
        }
        g0 += outer;
    }
    let g0_functional = if probe_paths > 0 { g0 / probe_paths as f64 } else { 0.0 };

    let declared_y = generator.lipschitz_y();
    let declared_z = generator.lipschitz_z();
    let mut violations = Vec::new();
    if !(obs_y <= declared_y + SLACK) {
        violations.push(format!("observed y-Lipschitz ratio {obs_y} exceeds declared {declared_y}"));
    }
    if !(obs_z <= declared_z + SLACK) {
        violations.push(format!("observed z-Lipschitz ratio {obs_z} exceeds declared {declared_z}"));
    }
    if !g0_functional.is_finite() {
        violations.push("g(t,s,0,0) functional is not finite".to_string());
    }
    H1Report {
        samples: sample_count,
        declared_lipschitz_y: declared_y,
        declared_lipschitz_z: declared_z,
        observed_lipschitz_y: obs_y,
        observed_lipschitz_z: obs_z,
        l1_square_integral: declared_y * declared_y * grid.horizon(),
        l2_square_integral: declared_z * declared_z * grid.horizon(),
        g0_functional,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Coefficient;
    use crate::grid::TimeGrid;

    fn ensemble() -> PathEnsemble {
        PathEnsemble::sample(&TimeGrid::new(1.0, 16).unwrap(), 2_000, 1, 5).unwrap()
    }

    #[test]
    fn linear_generator_ratios() {
        let r = check_h1(&Generator::linear(0.1, 0.2), &ensemble(), 500);
        assert!(r.observed_lipschitz_y <= 0.1 + 1e-9);
        assert!(r.observed_lipschitz_z <= 0.2 + 1e-9);
        assert!(r.observed_lipschitz_y > 0.099);
        assert!(r.ok(), "{:?}", r.violations);
        assert_eq!(r.g0_functional, 0.0);
    }

    #[test]
    fn kappa_abs_z_ratios() {
        let r = check_h1(&Generator::KappaAbsZ { kappa: 0.5 }, &ensemble(), 500);
        assert_eq!(r.observed_lipschitz_y, 0.0);
        assert!(r.observed_lipschitz_z <= 0.5 + 1e-9);
        assert!(r.ok());
    }

    #[test]
    fn random_coefficient_is_bounded_by_one() {
        let g = Generator::Linear {
            l1: Coefficient::SinState { offset: 0.0, scale: 1.0 },
            l2: vec![Coefficient::Constant(0.0)],
        };
        let r = check_h1(&g, &ensemble(), 500);
        assert!(r.observed_lipschitz_y <= 1.0 + 1e-9);
        assert!(r.g0_functional.is_finite());
        assert!(r.ok());
    }

    #[test]
    fn quadratic_generator_is_flagged() {
        let r = check_h1(&Generator::Quadratic { coef: 1.0 }, &ensemble(), 200);
        assert!(!r.ok());
        assert!(r.violations[0].contains("z-Lipschitz"));
    }

    #[test]
    fn understated_bound_is_flagged() {
        let g = Generator::custom(|_, _, y, _, _| 0.3 * y, 0.1, 0.0);
        let r = check_h1(&g, &ensemble(), 100);
        assert!(!r.ok());
    }
}
