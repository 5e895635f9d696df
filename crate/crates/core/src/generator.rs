//! Generators `g(t, s, y, z)` of the backward Volterra equation.
//!
//! The solver evaluates `g(t_i, t_j, Y(t_j), Z(t_j, t_i), W(t_j))`: the `z`
//! argument is the representation integrand of `Y(t_j)`, taken at time `t_i`.

use std::fmt;
use std::sync::Arc;

use crate::error::{validation, Result};
use crate::functions::{Table2, TimeFunction};
use crate::volterra::Kernel;

/// Callable coefficient `(t, s, W(s)) -> value`.
pub type StateFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;

/// Callable generator `(t, s, y, z, W(s)) -> value`.
pub type GeneratorFn = Arc<dyn Fn(f64, f64, f64, &[f64], &[f64]) -> f64 + Send + Sync>;

/// Coefficient process `l(t, s, ω)` of a linear generator.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// Deterministic function of `s` only.
    TimeOnly(TimeFunction),
    /// Deterministic function of `(t, s)`.
    Table(Table2),
    /// `offset + scale * sin(W¹(s))`.
    SinState { offset: f64, scale: f64 },
    /// Arbitrary adapted coefficient with a declared bound on `|l|`.
    Random { f: StateFn, bound: f64 },
}

impl Coefficient {
    pub fn random(f: impl Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static, bound: f64) -> Self {
        Coefficient::Random { f: Arc::new(f), bound }
    }

    #[inline]
    pub fn eval(&self, t: f64, s: f64, state: &[f64]) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::TimeOnly(f) => f.eval(s),
            Coefficient::Table(tab) => tab.eval(t, s),
            Coefficient::SinState { offset, scale } => offset + scale * state[0].sin(),
            Coefficient::Random { f, .. } => f(t, s, state),
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            Coefficient::Constant(c) => c.abs(),
            Coefficient::TimeOnly(f) => f.bound(),
            Coefficient::Table(tab) => tab.max_abs(),
            Coefficient::SinState { offset, scale } => offset.abs() + scale.abs(),
            Coefficient::Random { bound, .. } => *bound,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coefficient::Constant(c) if *c == 0.0)
            || matches!(self, Coefficient::SinState { offset, scale } if *offset == 0.0 && *scale == 0.0)
    }

    /// The coefficient as a deterministic kernel, if it does not depend on ω.
    pub fn as_kernel(&self) -> Option<Kernel> {
        match self {
            Coefficient::Constant(c) => Some(Kernel::Constant(*c)),
            Coefficient::TimeOnly(f) => Some(Kernel::TimeOnly(f.clone())),
            Coefficient::Table(tab) => Some(Kernel::Table(tab.clone())),
            Coefficient::SinState { scale, offset } if *scale == 0.0 => Some(Kernel::Constant(*offset)),
            Coefficient::SinState { .. } | Coefficient::Random { .. } => None,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match self {
            Coefficient::Constant(c) => c.is_finite(),
            Coefficient::TimeOnly(f) => f.bound().is_finite(),
            Coefficient::Table(_) => true,
            Coefficient::SinState { offset, scale } => offset.is_finite() && scale.is_finite(),
            Coefficient::Random { bound, .. } => bound.is_finite() && *bound >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(validation(format!("{what}: coefficient parameters must be finite")))
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::TimeOnly(t) => write!(f, "TimeOnly({t:?})"),
            Coefficient::Table(_) => write!(f, "Table(..)"),
            Coefficient::SinState { offset, scale } => write!(f, "SinState({offset} + {scale} sin W)"),
            Coefficient::Random { bound, .. } => write!(f, "Random {{ bound: {bound} }}"),
        }
    }
}

#[derive(Clone)]
pub enum Generator {
    Zero,
    /// `l1(t,s) y + l2(t,s)·z`, one `l2` entry per Brownian component.
    Linear {
        l1: Coefficient,
        l2: Vec<Coefficient>,
    },
    /// `κ |z|`.
    KappaAbsZ { kappa: f64 },
    /// `r1(s) y + κ |z|` with deterministic `r1`.
    Sublinear { r1: TimeFunction, kappa: f64 },
    /// `c |z|²`. Not globally Lipschitz; used as a negative control.
    Quadratic { coef: f64 },
    Custom {
        f: GeneratorFn,
        lipschitz_y: f64,
        lipschitz_z: f64,
    },
}

impl Generator {
    /// Linear generator with constant coefficients, one Brownian component.
    pub fn linear(l1: f64, l2: f64) -> Self {
        Generator::Linear {
            l1: Coefficient::Constant(l1),
            l2: vec![Coefficient::Constant(l2)],
        }
    }

    pub fn custom(
        f: impl Fn(f64, f64, f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
        lipschitz_y: f64,
        lipschitz_z: f64,
    ) -> Self {
        Generator::Custom {
            f: Arc::new(f),
            lipschitz_y,
            lipschitz_z,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, s: f64, y: f64, z: &[f64], state: &[f64]) -> f64 {
        match self {
            Generator::Zero => 0.0,
            Generator::Linear { l1, l2 } => {
                let mut v = l1.eval(t, s, state) * y;
                for (c, zk) in l2.iter().zip(z) {
                    v += c.eval(t, s, state) * zk;
                }
                v
            }
            Generator::KappaAbsZ { kappa } => kappa * norm(z),
            Generator::Sublinear { r1, kappa } => r1.eval(s) * y + kappa * norm(z),
            Generator::Quadratic { coef } => coef * z.iter().map(|v| v * v).sum::<f64>(),
            Generator::Custom { f, .. } => f(t, s, y, z, state),
        }
    }

    /// Declared bound on the Lipschitz constant in `y`.
    pub fn lipschitz_y(&self) -> f64 {
        match self {
            Generator::Zero | Generator::KappaAbsZ { .. } | Generator::Quadratic { .. } => 0.0,
            Generator::Linear { l1, .. } => l1.bound(),
            Generator::Sublinear { r1, .. } => r1.bound(),
            Generator::Custom { lipschitz_y, .. } => *lipschitz_y,
        }
    }

    /// Declared bound on the Lipschitz constant in `z`. For the quadratic
    /// generator this is the local constant on the unit ball.
    pub fn lipschitz_z(&self) -> f64 {
        match self {
            Generator::Zero => 0.0,
            Generator::Linear { l2, .. } => l2.iter().map(|c| c.bound().powi(2)).sum::<f64>().sqrt(),
            Generator::KappaAbsZ { kappa } | Generator::Sublinear { kappa, .. } => kappa.abs(),
            Generator::Quadratic { coef } => 2.0 * coef.abs(),
            Generator::Custom { lipschitz_z, .. } => *lipschitz_z,
        }
    }

    /// `8 max(L1², L2, 1)`.
    pub fn default_beta(&self) -> f64 {
        8.0 * self.lipschitz_y().powi(2).max(self.lipschitz_z()).max(1.0)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Generator::Zero => "zero",
            Generator::Linear { .. } => "linear",
            Generator::KappaAbsZ { .. } => "kappa_abs_z",
            Generator::Sublinear { .. } => "sublinear",
            Generator::Quadratic { .. } => "quadratic",
            Generator::Custom { .. } => "custom",
        }
    }

    /// False when `g` ignores `(y, z)`, so one Picard step is exact.
    pub fn depends_on_solution(&self) -> bool {
        match self {
            Generator::Zero => false,
            Generator::Linear { l1, l2 } => !(l1.is_zero() && l2.iter().all(Coefficient::is_zero)),
            Generator::KappaAbsZ { kappa } => *kappa != 0.0,
            Generator::Quadratic { coef } => *coef != 0.0,
            _ => true,
        }
    }

    /// Linear in `(y, z)`, so `ρ` is additive as well as homogeneous.
    pub fn is_linear(&self) -> bool {
        match self {
            Generator::Zero | Generator::Linear { .. } => true,
            Generator::KappaAbsZ { kappa } => *kappa == 0.0,
            Generator::Sublinear { kappa, .. } => *kappa == 0.0,
            Generator::Quadratic { coef } => *coef == 0.0,
            Generator::Custom { .. } => false,
        }
    }

    /// The `y`-coefficient as a deterministic kernel `l'(t, s)`, when the
    /// generator has the form `l'(t,s) y + g(t,s,z)` with deterministic `l'`.
    pub fn deterministic_y_kernel(&self) -> Option<Kernel> {
        match self {
            Generator::Zero | Generator::KappaAbsZ { .. } | Generator::Quadratic { .. } => Some(Kernel::Constant(0.0)),
            Generator::Linear { l1, .. } => l1.as_kernel(),
            Generator::Sublinear { r1, .. } => Some(Kernel::TimeOnly(r1.clone())),
            Generator::Custom { .. } => None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Generator::Zero => Ok(()),
            Generator::Linear { l1, l2 } => {
                if l2.len() != dim {
                    return Err(validation(format!(
                        "generator.l2 has {} entries, expected one per Brownian component ({dim})",
                        l2.len()
                    )));
                }
                l1.validate("generator.l1")?;
                l2.iter().try_for_each(|c| c.validate("generator.l2"))
            }
            Generator::KappaAbsZ { kappa } => finite_param("generator.kappa", *kappa),
            Generator::Sublinear { r1, kappa } => {
                finite_param("generator.kappa", *kappa)?;
                finite_param("generator.r1", r1.bound())
            }
            Generator::Quadratic { coef } => finite_param("generator.coef", *coef),
            Generator::Custom {
                lipschitz_y,
                lipschitz_z,
                ..
            } => {
                finite_param("generator.lipschitz_y", *lipschitz_y)?;
                finite_param("generator.lipschitz_z", *lipschitz_z)
            }
        }
    }
}

fn finite_param(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(validation(format!("{name} must be finite, got {v}")))
    }
}

#[inline]
fn norm(z: &[f64]) -> f64 {
    if z.len() == 1 {
        z[0].abs()
    } else {
        z.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Zero => write!(f, "Zero"),
            Generator::Linear { l1, l2 } => f.debug_struct("Linear").field("l1", l1).field("l2", l2).finish(),
            Generator::KappaAbsZ { kappa } => write!(f, "KappaAbsZ({kappa})"),
            Generator::Sublinear { r1, kappa } => {
                f.debug_struct("Sublinear").field("r1", r1).field("kappa", kappa).finish()
            }
            Generator::Quadratic { coef } => write!(f, "Quadratic({coef})"),
            Generator::Custom {
                lipschitz_y,
                lipschitz_z,
                ..
            } => write!(f, "Custom {{ L1: {lipschitz_y}, L2: {lipschitz_z} }}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_formulas() {
        let w = [0.3];
        assert_eq!(Generator::Zero.eval(0.0, 0.5, 2.0, &[1.0], &w), 0.0);
        assert_eq!(Generator::linear(0.1, 0.2).eval(0.0, 0.5, 2.0, &[3.0], &w), 0.1 * 2.0 + 0.2 * 3.0);
        assert_eq!(Generator::KappaAbsZ { kappa: 0.5 }.eval(0.0, 0.5, 9.0, &[-3.0], &w), 1.5);
        let sub = Generator::Sublinear {
            r1: TimeFunction::Constant(0.1),
            kappa: 0.5,
        };
        assert_eq!(sub.eval(0.0, 0.5, 2.0, &[-1.0], &w), 0.1 * 2.0 + 0.5);
        assert_eq!(Generator::Quadratic { coef: 1.0 }.eval(0.0, 0.0, 0.0, &[-2.0], &w), 4.0);
        let sin = Generator::Linear {
            l1: Coefficient::SinState { offset: 0.0, scale: 1.0 },
            l2: vec![Coefficient::Constant(0.0)],
        };
        assert_eq!(sin.eval(0.0, 0.5, 2.0, &[7.0], &w), 0.3f64.sin() * 2.0);
    }

    #[test]
    fn euclidean_norm_in_several_dimensions() {
        let g = Generator::KappaAbsZ { kappa: 2.0 };
        assert_eq!(g.eval(0.0, 0.0, 0.0, &[3.0, 4.0], &[0.0, 0.0]), 10.0);
    }

    #[test]
    fn lipschitz_metadata_and_beta() {
        let g = Generator::linear(0.2, 0.2);
        assert!((g.lipschitz_y() - 0.2).abs() < 1e-15);
        assert!((g.lipschitz_z() - 0.2).abs() < 1e-15);
        assert_eq!(g.default_beta(), 8.0);
        let big = Generator::linear(2.0, 3.0);
        assert_eq!(big.default_beta(), 32.0);
        let sin = Coefficient::SinState { offset: 0.1, scale: 0.1 };
        assert!((sin.bound() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn classification() {
        assert!(!Generator::Zero.depends_on_solution());
        assert!(!Generator::linear(0.0, 0.0).depends_on_solution());
        assert!(Generator::linear(0.1, 0.0).depends_on_solution());
        assert!(Generator::linear(0.1, 0.2).is_linear());
        assert!(!Generator::KappaAbsZ { kappa: 0.5 }.is_linear());
        assert!(Generator::linear(0.1, 0.2).deterministic_y_kernel().is_some());
        let random = Generator::Linear {
            l1: Coefficient::SinState { offset: 0.1, scale: 0.1 },
            l2: vec![Coefficient::Constant(0.0)],
        };
        assert!(random.deterministic_y_kernel().is_none());
    }

    #[test]
    fn validation_checks_dimensions() {
        assert!(Generator::linear(0.1, 0.2).validate(1).is_ok());
        assert!(Generator::linear(0.1, 0.2).validate(2).is_err());
        assert!(Generator::KappaAbsZ { kappa: f64::NAN }.validate(1).is_err());
    }
}
