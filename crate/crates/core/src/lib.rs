//! Adapted M-solutions of backward stochastic Volterra integral equations
//! by least-squares Monte Carlo, and the dynamic risk measures built on them.

pub mod app;
pub mod error;
pub mod field;
pub mod functions;
pub mod generator;
pub mod grid;
pub mod h1;
pub mod paths;
pub mod regression;
pub mod risk;
pub mod solver;
pub mod terminal;
pub mod volterra;

pub use error::{Error, Result};
pub use field::{AdaptedGrid, Half, Triangle, TwoTimeField};
pub use functions::{Table1, Table2, TimeFunction};
pub use generator::{Coefficient, Generator};
pub use grid::TimeGrid;
pub use h1::{check_h1, H1Report};
pub use paths::PathEnsemble;
pub use regression::{BasisSpec, Regressor};
pub use solver::{beta_norm, beta_norm_y, freeze_step, m_extend, picard_solve, InitialIterate, Iterate, MSolution, SolverOptions, SolverReport};
pub use terminal::Terminal;
pub use volterra::{solve_bvie, Kernel};
pub use risk::{
    check_monotonicity, check_past_independence, check_positive_homogeneity, check_subadditivity, check_translation,
    coherence_report, rho, sin_counterexample, AxiomEntry, AxiomReport, Battery, CounterexampleReport, RiskScenario,
    Verdict,
};
