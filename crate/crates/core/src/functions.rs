//! Deterministic coefficient functions: tabulated or callable.

use std::fmt;
use std::sync::Arc;

use crate::error::{validation, Result};

/// Piecewise-linear function of one time variable, flat outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Table1 {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(validation(format!(
                "table needs matching non-empty times/values, got {} and {}",
                times.len(),
                values.len()
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(validation("table entries must be finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(validation("table times must be strictly increasing"));
        }
        Ok(Self { times, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (k, w) = locate(&self.times, t);
        match w {
            None => self.values[k],
            Some(w) => self.values[k] * (1.0 - w) + self.values[k + 1] * w,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Bilinear function of `(t, s)` on a tensor grid, flat outside the table.
/// `values[a][b]` is the value at `(times[a], times[b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2 {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Table2 {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || values.len() != times.len() || values.iter().any(|r| r.len() != times.len()) {
            return Err(validation("table values must be a square matrix matching the time axis"));
        }
        if times.iter().chain(values.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(validation("table entries must be finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(validation("table times must be strictly increasing"));
        }
        Ok(Self { times, values })
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let (a, wa) = locate(&self.times, t);
        let (b, wb) = locate(&self.times, s);
        let row = |a: usize| match wb {
            None => self.values[a][b],
            Some(w) => self.values[a][b] * (1.0 - w) + self.values[a][b + 1] * w,
        };
        match wa {
            None => row(a),
            Some(w) => row(a) * (1.0 - w) + row(a + 1) * w,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Bracket `t` in a sorted axis: `(k, None)` means exactly/clamped at `k`,
/// `(k, Some(w))` interpolates between `k` and `k + 1` with weight `w`.
fn locate(axis: &[f64], t: f64) -> (usize, Option<f64>) {
    let n = axis.len();
    if t <= axis[0] {
        return (0, None);
    }
    if t >= axis[n - 1] {
        return (n - 1, None);
    }
    let k = axis.partition_point(|&x| x <= t) - 1;
    let w = (t - axis[k]) / (axis[k + 1] - axis[k]);
    if w == 0.0 {
        (k, None)
    } else {
        (k, Some(w))
    }
}

/// Deterministic function of one time variable.
#[derive(Clone)]
pub enum TimeFunction {
    Constant(f64),
    Table(Table1),
    Func {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        bound: f64,
    },
}

impl TimeFunction {
    pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static, bound: f64) -> Self {
        TimeFunction::Func { f: Arc::new(f), bound }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Constant(c) => *c,
            TimeFunction::Table(tab) => tab.eval(t),
            TimeFunction::Func { f, .. } => f(t),
        }
    }

    /// Declared or tabulated bound on `|f|`.
    pub fn bound(&self) -> f64 {
        match self {
            TimeFunction::Constant(c) => c.abs(),
            TimeFunction::Table(tab) => tab.max_abs(),
            TimeFunction::Func { bound, .. } => *bound,
        }
    }
}

impl fmt::Debug for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFunction::Constant(c) => write!(f, "Constant({c})"),
            TimeFunction::Table(t) => write!(f, "Table({t:?})"),
            TimeFunction::Func { bound, .. } => write!(f, "Func {{ bound: {bound} }}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation() {
        let t = Table1::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(1.0), 2.0);
        assert_eq!(t.eval(1.75), 0.5);
        assert_eq!(t.eval(-3.0), 0.0);
        assert_eq!(t.eval(9.0), 0.0);
    }

    #[test]
    fn bilinear_interpolation() {
        let t = Table2::new(vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(t.eval(0.0, 0.0), 0.0);
        assert_eq!(t.eval(1.0, 1.0), 3.0);
        assert_eq!(t.eval(0.5, 0.5), 1.5);
        assert_eq!(t.eval(0.0, 0.25), 0.25);
        assert_eq!(t.max_abs(), 3.0);
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(Table1::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Table1::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Table1::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(Table2::new(vec![0.0, 1.0], vec![vec![1.0, 2.0]]).is_err());
        assert!(Table2::new(vec![0.0, 1.0], vec![vec![1.0, f64::NAN], vec![0.0, 0.0]]).is_err());
    }
}
