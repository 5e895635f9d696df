//! Terminal conditions `ψ(t, W(T))`.

use std::fmt;
use std::sync::Arc;

use crate::error::{validation, Result};
use crate::paths::PathEnsemble;

pub type TerminalFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A terminal condition that may depend on the evaluation time `t` and on
/// the terminal Brownian state.
#[derive(Clone)]
pub enum Terminal {
    Constant(f64),
    /// `a·W(T) + b`.
    Linear { a: Vec<f64>, b: f64 },
    /// `max(W¹(T) - K, 0)`.
    Call { strike: f64 },
    /// `max(K - W¹(T), 0)`.
    Put { strike: f64 },
    /// `before` for `t < switch_time`, `after` otherwise.
    Switched {
        before: Box<Terminal>,
        after: Box<Terminal>,
        switch_time: f64,
    },
    Scaled { factor: f64, inner: Box<Terminal> },
    Sum(Box<Terminal>, Box<Terminal>),
    Custom { f: TerminalFn, label: String },
}

impl Terminal {
    /// `W¹(T)`.
    pub fn brownian() -> Self {
        Terminal::Linear { a: vec![1.0], b: 0.0 }
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Terminal::Custom {
            f: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Terminal::Scaled {
            factor,
            inner: Box::new(self.clone()),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn plus(&self, other: &Terminal) -> Self {
        Terminal::Sum(Box::new(self.clone()), Box::new(other.clone()))
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.plus(&Terminal::Constant(c))
    }

    pub fn switched(before: Terminal, after: Terminal, switch_time: f64) -> Self {
        Terminal::Switched {
            before: Box::new(before),
            after: Box::new(after),
            switch_time,
        }
    }

    pub fn eval(&self, t: f64, w: &[f64]) -> f64 {
        match self {
            Terminal::Constant(c) => *c,
            Terminal::Linear { a, b } => a.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() + b,
            Terminal::Call { strike } => (w[0] - strike).max(0.0),
            Terminal::Put { strike } => (strike - w[0]).max(0.0),
            Terminal::Switched {
                before,
                after,
                switch_time,
            } => {
                if t < *switch_time {
                    before.eval(t, w)
                } else {
                    after.eval(t, w)
                }
            }
            Terminal::Scaled { factor, inner } => factor * inner.eval(t, w),
            Terminal::Sum(a, b) => a.eval(t, w) + b.eval(t, w),
            Terminal::Custom { f, .. } => f(t, w),
        }
    }

    /// `ψ(t, W_m(T))` for every path.
    pub fn samples(&self, ensemble: &PathEnsemble, t: f64) -> Vec<f64> {
        (0..ensemble.paths())
            .map(|m| self.eval(t, ensemble.terminal_state(m)))
            .collect()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Terminal::Constant(c) => finite("terminal.value", *c),
            Terminal::Linear { a, b } => {
                if a.len() != dim {
                    return Err(validation(format!(
                        "terminal.a has {} entries, expected {dim}",
                        a.len()
                    )));
                }
                a.iter().try_for_each(|v| finite("terminal.a", *v))?;
                finite("terminal.b", *b)
            }
            Terminal::Call { strike } | Terminal::Put { strike } => finite("terminal.strike", *strike),
            Terminal::Switched {
                before,
                after,
                switch_time,
            } => {
                finite("terminal.switch_time", *switch_time)?;
                before.validate(dim)?;
                after.validate(dim)
            }
            Terminal::Scaled { factor, inner } => {
                finite("terminal.factor", *factor)?;
                inner.validate(dim)
            }
            Terminal::Sum(a, b) => {
                a.validate(dim)?;
                b.validate(dim)
            }
            Terminal::Custom { .. } => Ok(()),
        }
    }

    /// Short human-readable formula.
    pub fn describe(&self) -> String {
        match self {
            Terminal::Constant(c) => format!("{c}"),
            Terminal::Linear { a, b } => {
                if a.len() == 1 {
                    format!("{}*W(T)+{b}", a[0])
                } else {
                    format!("{a:?}.W(T)+{b}")
                }
            }
            Terminal::Call { strike } => format!("max(W(T)-{strike},0)"),
            Terminal::Put { strike } => format!("max({strike}-W(T),0)"),
            Terminal::Switched {
                before,
                after,
                switch_time,
            } => format!("[t<{switch_time}: {}; else {}]", before.describe(), after.describe()),
            Terminal::Scaled { factor, inner } => format!("{factor}*({})", inner.describe()),
            Terminal::Sum(a, b) => format!("({})+({})", a.describe(), b.describe()),
            Terminal::Custom { label, .. } => label.clone(),
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(validation(format!("{name} must be finite, got {v}")))
    }
}

impl fmt::Debug for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Terminal({})", self.describe())
    }
}
