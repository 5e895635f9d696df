//! Deterministic backward Volterra equation
//! `Y(t) = -c + ∫_t^T l'(t, s) Y(s) ds` and its exponential closed form.

use std::fmt;
use std::sync::Arc;

use crate::error::{validation, Error, Result};
use crate::functions::{Table2, TimeFunction};
use crate::grid::TimeGrid;

/// Deterministic kernel `l'(t, s)`.
#[derive(Clone)]
pub enum Kernel {
    Constant(f64),
    /// Depends on `s` only: `l'(t, s) = r(s)`.
    TimeOnly(TimeFunction),
    Table(Table2),
    General(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Kernel {
    pub fn general(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Kernel::General(Arc::new(f))
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match self {
            Kernel::Constant(r) => *r,
            Kernel::TimeOnly(f) => f.eval(s),
            Kernel::Table(tab) => tab.eval(t, s),
            Kernel::General(f) => f(t, s),
        }
    }

    /// The rate `r(·)` when the kernel does not depend on `t`, which is
    /// when the exponential closed form applies.
    pub fn rate(&self) -> Option<TimeFunction> {
        match self {
            Kernel::Constant(r) => Some(TimeFunction::Constant(*r)),
            Kernel::TimeOnly(f) => Some(f.clone()),
            Kernel::Table(_) | Kernel::General(_) => None,
        }
    }

    /// `sup_i ∫_{t_i}^T l'(t_i, s)² ds` by trapezoid on the grid; errors if
    /// any kernel value is not finite.
    pub fn square_integral_sup(&self, grid: &TimeGrid) -> Result<f64> {
        let n = grid.steps();
        let mut sup = 0.0f64;
        for i in 0..n {
            let t = grid.time(i);
            let mut acc = 0.0;
            for j in i..=n {
                let v = self.eval(t, grid.time(j));
                if !v.is_finite() {
                    return Err(validation(format!("kernel is not finite at ({t}, {})", grid.time(j))));
                }
                acc += trapezoid_weight(i, j, n) * v * v;
            }
            sup = sup.max(acc * grid.dt());
        }
        Ok(sup)
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Constant(r) => write!(f, "Constant({r})"),
            Kernel::TimeOnly(t) => write!(f, "TimeOnly({t:?})"),
            Kernel::Table(_) => write!(f, "Table(..)"),
            Kernel::General(_) => write!(f, "General(..)"),
        }
    }
}

/// Trapezoid weight (in units of Δt) of node `j` on `[t_i, t_N]`.
fn trapezoid_weight(i: usize, j: usize, n: usize) -> f64 {
    if i == n {
        0.0
    } else if j == i || j == n {
        0.5
    } else {
        1.0
    }
}

/// Solve `Y(t) = -c + ∫_t^T l'(t,s) Y(s) ds` on the grid by fixed-point
/// iteration with trapezoid quadrature.
///
/// The iteration runs on the `c = 1` solution until the sup-norm change is
/// at most `tol`, then scales by `c`, so the result is linear in `c`.
pub fn solve_bvie(kernel: &Kernel, c: f64, grid: &TimeGrid, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !c.is_finite() {
        return Err(validation(format!("c must be finite, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(validation(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(validation("max_iter must be at least 1"));
    }
    kernel.square_integral_sup(grid)?;

    let n = grid.steps();
    let dt = grid.dt();
    // Row i holds weighted kernel values for j = i..=n.
    let rows: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            let t = grid.time(i);
            (i..=n)
                .map(|j| trapezoid_weight(i, j, n) * dt * kernel.eval(t, grid.time(j)))
                .collect()
        })
        .collect();

    let mut unit = vec![-1.0; n + 1];
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iter {
        let next: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| -1.0 + row.iter().zip(&unit[i..]).map(|(w, y)| w * y).sum::<f64>())
            .collect();
        last_change = next
            .iter()
            .zip(&unit)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        unit = next;
        if !last_change.is_finite() {
            break;
        }
        if last_change <= tol {
            return Ok(unit.into_iter().map(|u| c * u).collect());
        }
    }
    Err(Error::VolterraNoConvergence {
        iterations: max_iter,
        tol,
        last_change,
    })
}

/// `-c · exp(∫_t^T r(u) du)` with the integral by the trapezoid rule on
/// `steps` panels.
pub fn closed_form_translation(r: &dyn Fn(f64) -> f64, c: f64, t: f64, horizon: f64, steps: usize) -> f64 {
    let steps = steps.max(1);
    let h = (horizon - t) / steps as f64;
    let mut integral = 0.5 * (r(t) + r(horizon));
    for k in 1..steps {
        integral += r(t + k as f64 * h);
    }
    -c * (integral * h).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn zero_kernel_gives_minus_c() {
        let y = solve_bvie(&Kernel::Constant(0.0), 2.5, &grid(16), 1e-12, 10).unwrap();
        assert!(y.iter().all(|&v| v == -2.5));
    }

    #[test]
    fn unit_kernel_gives_exponential() {
        let y = solve_bvie(&Kernel::Constant(1.0), 1.0, &grid(64), 1e-13, 200).unwrap();
        assert!((y[0] + E).abs() <= 1e-3, "{}", y[0]);
        assert_eq!(y[64], -1.0);
    }

    #[test]
    fn time_dependent_kernel() {
        // l'(t,s) = s: Y' = -t Y, Y(1) = -1, so Y(0) = -exp(1/2).
        let k = Kernel::TimeOnly(TimeFunction::func(|s| s, 1.0));
        let y = solve_bvie(&k, 1.0, &grid(64), 1e-13, 200).unwrap();
        assert!((y[0] + 0.5f64.exp()).abs() <= 1e-3, "{}", y[0]);
    }

    #[test]
    fn trapezoid_order_two() {
        let k = Kernel::TimeOnly(TimeFunction::func(|s| 1.0 + s * s, 2.0));
        let exact = -(1.0f64 + 1.0 / 3.0).exp();
        let e32 = (solve_bvie(&k, 1.0, &grid(32), 1e-14, 400).unwrap()[0] - exact).abs();
        let e64 = (solve_bvie(&k, 1.0, &grid(64), 1e-14, 400).unwrap()[0] - exact).abs();
        let ratio = e32 / e64;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_translation(&|_| 0.0, 3.0, 0.0, 1.0, 8), -3.0);
        let v = closed_form_translation(&|_| 0.05, 1.0, 0.0, 1.0, 8);
        assert!((v + 1.051_271_096_376_024).abs() < 1e-12, "{v}");
        let v = closed_form_translation(&|u| u, 2.0, 0.0, 1.0, 8);
        assert!((v + 2.0 * 0.5f64.exp()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn agrees_with_closed_form_for_time_only_kernels() {
        let r = |s: f64| 0.3 + 0.2 * s;
        let k = Kernel::TimeOnly(TimeFunction::func(r, 0.5));
        let g = grid(64);
        let y = solve_bvie(&k, 1.5, &g, 1e-14, 400).unwrap();
        for i in [0usize, 20, 63] {
            let cf = closed_form_translation(&r, 1.5, g.time(i), 1.0, 64 - i);
            assert!((y[i] - cf).abs() < 1e-4, "slice {i}: {} vs {cf}", y[i]);
        }
    }

    #[test]
    fn rejects_non_finite_kernels() {
        let k = Kernel::general(|t, _| if t > 0.5 { f64::NAN } else { 1.0 });
        assert!(matches!(solve_bvie(&k, 1.0, &grid(8), 1e-10, 10), Err(Error::Validation(_))));
    }

    #[test]
    fn reports_non_convergence() {
        let err = solve_bvie(&Kernel::Constant(1.0), 1.0, &grid(8), 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::VolterraNoConvergence { iterations: 2, .. }));
    }

    proptest::proptest! {
        #[test]
        fn linear_in_c(c in -10.0f64..10.0, k in 0u32..4) {
            let kernel = Kernel::Constant(0.7);
            let g = grid(16);
            let base = solve_bvie(&kernel, c, &g, 1e-12, 200).unwrap();
            let lambda = 2f64.powi(k as i32);
            let scaled = solve_bvie(&kernel, lambda * c, &g, 1e-12, 200).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                proptest::prop_assert_eq!(lambda * a, *b);
            }
        }
    }
}
