//! Scenario configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::functions::{Table1, Table2, TimeFunction};
use crate::generator::{Coefficient, Generator};
use crate::regression::BasisSpec;
use crate::risk::Battery;
use crate::solver::{InitialIterate, SolverOptions};
use crate::terminal::Terminal;
use crate::volterra::Kernel;

/// A configuration problem, always naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

type Checked<T> = std::result::Result<T, ConfigError>;

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub terminal: TerminalConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axioms: Option<AxiomsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bvie: Option<BvieConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
}

/// A number, or an object selecting a table or a state-dependent form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientConfig {
    Constant(f64),
    Spec(CoefficientSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// Piecewise linear in `s`.
    TimeOnly { times: Vec<f64>, values: Vec<f64> },
    /// Bilinear in `(t, s)` on `times × times`.
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
    /// `offset + scale·sin(W¹(s))`.
    SinState { offset: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeFunctionConfig {
    Constant(f64),
    Table { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    #[default]
    Zero,
    Linear {
        l1: CoefficientConfig,
        /// One entry per Brownian component; a single entry is broadcast.
        l2: OneOrMany,
    },
    KappaAbsZ { kappa: f64 },
    Sublinear { r1: TimeFunctionConfig, kappa: f64 },
    Quadratic { coef: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(CoefficientConfig),
    Many(Vec<CoefficientConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalConfig {
    Constant {
        c: f64,
    },
    /// `a·W(T) + b`.
    Linear {
        a: Vec<f64>,
        #[serde(default)]
        b: f64,
    },
    Call {
        strike: f64,
    },
    Put {
        strike: f64,
    },
    Switched {
        before: Box<TerminalConfig>,
        after: Box<TerminalConfig>,
        switch_time: f64,
    },
    Scaled {
        factor: f64,
        inner: Box<TerminalConfig>,
    },
    Sum {
        terms: Vec<TerminalConfig>,
    },
}

impl Default for TerminalConfig {
    fn default() -> Self {
        TerminalConfig::Linear { a: vec![1.0], b: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub beta: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub degree: usize,
    pub ridge: f64,
    pub initial: InitialIterate,
    pub h1_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        let b = BasisSpec::default();
        Self {
            beta: o.beta,
            tol: o.tol,
            max_iter: o.max_iter,
            degree: b.degree,
            ridge: b.ridge,
            initial: o.initial,
            h1_samples: o.h1_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PastIndependenceCase {
    pub psi: TerminalConfig,
    pub psi_bar: TerminalConfig,
    pub from_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderedPair {
    pub low: TerminalConfig,
    pub high: TerminalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimPair {
    pub first: TerminalConfig,
    pub second: TerminalConfig,
}

/// Battery lists; a missing list takes the default for the scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxiomsConfig {
    pub past_independence: Option<Vec<PastIndependenceCase>>,
    pub monotonicity: Option<Vec<OrderedPair>>,
    pub homogeneity: Option<Vec<f64>>,
    pub subadditivity: Option<Vec<ClaimPair>>,
    pub translation: Option<Vec<f64>>,
    pub translation_alt: Option<TerminalConfig>,
    pub tolerance_multiple: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Constant { value: f64 },
    TimeOnly { rate: TimeFunctionConfig },
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
}

fn default_bvie_tol() -> f64 {
    1e-12
}

fn default_bvie_iter() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvieConfig {
    pub kernel: KernelConfig,
    pub c: f64,
    #[serde(default = "default_bvie_tol")]
    pub tol: f64,
    #[serde(default = "default_bvie_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub c: f64,
    #[serde(default)]
    pub averaged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Step counts for the refinement ladder.
    pub steps: Vec<usize>,
    /// Optional path-count ladder at the configured `steps`.
    #[serde(default)]
    pub paths: Vec<usize>,
}

/// Reads and parses a config file. Type errors carry the JSON path.
pub fn load(path: &Path) -> Checked<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Checked<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        bad(if field == "." { "config".to_string() } else { field }, e.inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

fn finite(field: &str, v: f64) -> Checked<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, "must be finite"))
    }
}

fn positive(field: &str, v: f64) -> Checked<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Checked<()> {
        positive("horizon", self.horizon)?;
        if self.steps < 2 {
            return Err(bad("steps", format!("must be at least 2, got {}", self.steps)));
        }
        if self.dim == 0 {
            return Err(bad("dim", "must be at least 1"));
        }
        let basis = self.basis()?;
        let needed = 10 * basis.size(self.dim) + 1;
        if self.paths < needed {
            return Err(bad(
                "paths",
                format!("must exceed ten times the basis size ({needed} or more), got {}", self.paths),
            ));
        }
        if let Some(b) = self.solver.beta {
            positive("solver.beta", b)?;
        }
        positive("solver.tol", self.solver.tol)?;
        if self.solver.max_iter == 0 {
            return Err(bad("solver.max_iter", "must be at least 1"));
        }
        self.generator()?;
        self.terminal_from(&self.terminal, "terminal")?;
        if let Some(a) = &self.axioms {
            self.battery_from(a)?;
            if let Some(k) = a.tolerance_multiple {
                positive("axioms.tolerance_multiple", k)?;
            }
        }
        if let Some(b) = &self.bvie {
            self.kernel(&b.kernel)?;
            finite("bvie.c", b.c)?;
            positive("bvie.tol", b.tol)?;
            if b.max_iter == 0 {
                return Err(bad("bvie.max_iter", "must be at least 1"));
            }
        }
        if let Some(c) = &self.counterexample {
            finite("counterexample.c", c.c)?;
        }
        if let Some(c) = &self.convergence {
            if c.steps.len() < 2 {
                return Err(bad("convergence.steps", "the ladder needs at least two entries"));
            }
            if let Some(n) = c.steps.iter().find(|n| **n < 2) {
                return Err(bad("convergence.steps", format!("every entry must be at least 2, got {n}")));
            }
            if c.paths.len() == 1 {
                return Err(bad("convergence.paths", "the ladder needs at least two entries"));
            }
            if let Some(m) = c.paths.iter().find(|m| **m < needed) {
                return Err(bad("convergence.paths", format!("entry {m} is below {needed}")));
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> Checked<BasisSpec> {
        BasisSpec::new(self.solver.degree, self.solver.ridge).map_err(|e| bad("solver.ridge", e.to_string()))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            beta: self.solver.beta,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            initial: self.solver.initial,
            min_iterations: 0,
            h1_samples: self.solver.h1_samples,
        }
    }

    fn coefficient(&self, c: &CoefficientConfig, field: &str) -> Checked<Coefficient> {
        let out = match c {
            CoefficientConfig::Constant(v) => {
                finite(field, *v)?;
                Coefficient::Constant(*v)
            }
            CoefficientConfig::Spec(CoefficientSpec::TimeOnly { times, values }) => Coefficient::TimeOnly(
                TimeFunction::Table(Table1::new(times.clone(), values.clone()).map_err(|e| bad(field, e.to_string()))?),
            ),
            CoefficientConfig::Spec(CoefficientSpec::Table { times, values }) => {
                Coefficient::Table(Table2::new(times.clone(), values.clone()).map_err(|e| bad(field, e.to_string()))?)
            }
            CoefficientConfig::Spec(CoefficientSpec::SinState { offset, scale }) => {
                finite(field, *offset)?;
                finite(field, *scale)?;
                Coefficient::SinState {
                    offset: *offset,
                    scale: *scale,
                }
            }
        };
        Ok(out)
    }

    fn time_function(&self, f: &TimeFunctionConfig, field: &str) -> Checked<TimeFunction> {
        match f {
            TimeFunctionConfig::Constant(v) => {
                finite(field, *v)?;
                Ok(TimeFunction::Constant(*v))
            }
            TimeFunctionConfig::Table { times, values } => Ok(TimeFunction::Table(
                Table1::new(times.clone(), values.clone()).map_err(|e| bad(field, e.to_string()))?,
            )),
        }
    }

    pub fn generator(&self) -> Checked<Generator> {
        let g = match &self.generator {
            GeneratorConfig::Zero => Generator::Zero,
            GeneratorConfig::Linear { l1, l2 } => {
                let l1 = self.coefficient(l1, "generator.l1")?;
                let l2 = match l2 {
                    OneOrMany::One(c) => vec![self.coefficient(c, "generator.l2")?; self.dim],
                    OneOrMany::Many(cs) => cs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| self.coefficient(c, &format!("generator.l2[{k}]")))
                        .collect::<Checked<Vec<_>>>()?,
                };
                Generator::Linear { l1, l2 }
            }
            GeneratorConfig::KappaAbsZ { kappa } => Generator::KappaAbsZ { kappa: *kappa },
            GeneratorConfig::Sublinear { r1, kappa } => Generator::Sublinear {
                r1: self.time_function(r1, "generator.r1")?,
                kappa: *kappa,
            },
            GeneratorConfig::Quadratic { coef } => Generator::Quadratic { coef: *coef },
        };
        g.validate(self.dim).map_err(|e| bad("generator", e.to_string()))?;
        Ok(g)
    }

    pub fn terminal(&self) -> Checked<Terminal> {
        self.terminal_from(&self.terminal, "terminal")
    }

    pub fn terminal_from(&self, t: &TerminalConfig, field: &str) -> Checked<Terminal> {
        let out = match t {
            TerminalConfig::Constant { c } => {
                finite(&format!("{field}.c"), *c)?;
                Terminal::Constant(*c)
            }
            TerminalConfig::Linear { a, b } => {
                if a.len() != self.dim {
                    return Err(bad(
                        format!("{field}.a"),
                        format!("needs one entry per Brownian component ({}), got {}", self.dim, a.len()),
                    ));
                }
                Terminal::Linear { a: a.clone(), b: *b }
            }
            TerminalConfig::Call { strike } => Terminal::Call { strike: *strike },
            TerminalConfig::Put { strike } => Terminal::Put { strike: *strike },
            TerminalConfig::Switched {
                before,
                after,
                switch_time,
            } => Terminal::switched(
                self.terminal_from(before, &format!("{field}.before"))?,
                self.terminal_from(after, &format!("{field}.after"))?,
                *switch_time,
            ),
            TerminalConfig::Scaled { factor, inner } => self.terminal_from(inner, &format!("{field}.inner"))?.scaled(*factor),
            TerminalConfig::Sum { terms } => {
                let mut it = terms.iter().enumerate();
                let (_, first) = it.next().ok_or_else(|| bad(format!("{field}.terms"), "must not be empty"))?;
                let mut acc = self.terminal_from(first, &format!("{field}.terms[0]"))?;
                for (k, t) in it {
                    acc = acc.plus(&self.terminal_from(t, &format!("{field}.terms[{k}]"))?);
                }
                acc
            }
        };
        out.validate(self.dim).map_err(|e| bad(field, e.to_string()))?;
        Ok(out)
    }

    /// The configured battery, falling back to defaults list by list.
    pub fn battery(&self) -> Checked<Battery> {
        match &self.axioms {
            Some(a) => self.battery_from(a),
            None => Ok(Battery::default_for(&self.terminal()?, &self.generator()?)),
        }
    }

    fn battery_from(&self, a: &AxiomsConfig) -> Checked<Battery> {
        let defaults = Battery::default_for(&self.terminal()?, &self.generator()?);
        let mut b = defaults.clone();
        if let Some(list) = &a.past_independence {
            b.past_independence = list
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let f = format!("axioms.past_independence[{k}]");
                    finite(&format!("{f}.from_time"), c.from_time)?;
                    Ok((
                        self.terminal_from(&c.psi, &format!("{f}.psi"))?,
                        self.terminal_from(&c.psi_bar, &format!("{f}.psi_bar"))?,
                        c.from_time,
                    ))
                })
                .collect::<Checked<_>>()?;
        }
        if let Some(list) = &a.monotonicity {
            b.monotonicity = list
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let f = format!("axioms.monotonicity[{k}]");
                    Ok((
                        self.terminal_from(&p.low, &format!("{f}.low"))?,
                        self.terminal_from(&p.high, &format!("{f}.high"))?,
                    ))
                })
                .collect::<Checked<_>>()?;
        }
        if let Some(list) = &a.homogeneity {
            for (k, l) in list.iter().enumerate() {
                positive(&format!("axioms.homogeneity[{k}]"), *l)?;
            }
            b.homogeneity = list.clone();
        }
        if let Some(list) = &a.subadditivity {
            b.subadditivity = list
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let f = format!("axioms.subadditivity[{k}]");
                    Ok((
                        self.terminal_from(&p.first, &format!("{f}.first"))?,
                        self.terminal_from(&p.second, &format!("{f}.second"))?,
                    ))
                })
                .collect::<Checked<_>>()?;
        }
        if let Some(list) = &a.translation {
            for (k, c) in list.iter().enumerate() {
                finite(&format!("axioms.translation[{k}]"), *c)?;
            }
            b.translation = list.clone();
        }
        if let Some(t) = &a.translation_alt {
            b.translation_alt = self.terminal_from(t, "axioms.translation_alt")?;
        }
        if b.is_empty() {
            return Err(bad("axioms", "the battery is empty"));
        }
        Ok(b)
    }

    pub fn kernel(&self, k: &KernelConfig) -> Checked<Kernel> {
        let kernel = match k {
            KernelConfig::Constant { value } => {
                finite("bvie.kernel.value", *value)?;
                Kernel::Constant(*value)
            }
            KernelConfig::TimeOnly { rate } => Kernel::TimeOnly(self.time_function(rate, "bvie.kernel.rate")?),
            KernelConfig::Table { times, values } => {
                Kernel::Table(Table2::new(times.clone(), values.clone()).map_err(|e| bad("bvie.kernel", e.to_string()))?)
            }
        };
        let grid = crate::grid::TimeGrid::new(self.horizon, self.steps).map_err(|e| bad("steps", e.to_string()))?;
        kernel
            .square_integral_sup(&grid)
            .map_err(|e| bad("bvie.kernel", e.to_string()))?;
        Ok(kernel)
    }
}
