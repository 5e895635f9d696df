use crate::error::{validation, Result};

/// Uniform partition `0 = t_0 < t_1 < ... < t_N = T`.
///
/// Index pairs `(i, j)` with `j >= i` stand for the closed upper triangle
/// `{t <= s}` where the backward equation lives; `j < i` is the strict lower
/// triangle filled by the martingale representation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(validation(format!("horizon must be positive and finite, got {horizon}")));
        }
        if steps < 2 {
            return Err(validation(format!("steps must be at least 2, got {steps}")));
        }
        Ok(Self {
            horizon,
            steps,
            dt: horizon / steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of intervals `N`; there are `N + 1` grid points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of grid point `i`. The last point is exactly the horizon.
    pub fn time(&self, i: usize) -> f64 {
        debug_assert!(i <= self.steps);
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.dt
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    /// First grid index whose time is `>= t` (up to rounding).
    pub fn first_index_at_or_after(&self, t: f64) -> usize {
        let raw = (t / self.dt - 1e-9).ceil();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.steps)
        }
    }

    /// Index of the grid point nearest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let raw = (t / self.dt).round();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.steps)
        }
    }
}
