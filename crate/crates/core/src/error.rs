use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error(
        "normal equations are singular at slice {slice} (ridge = 0); \
         use a positive ridge weight"
    )]
    SingularDesign { slice: usize },

    #[error("generator returned a non-finite value at t-slice {t_slice}, s-slice {s_slice}, path {path}")]
    NonFiniteGenerator {
        t_slice: usize,
        s_slice: usize,
        path: usize,
    },

    #[error(
        "Picard iteration diverged at iteration {iteration} (ratios {ratios:?}); \
         increase beta (used {beta}) or shorten the horizon"
    )]
    Diverged {
        iteration: usize,
        beta: f64,
        ratios: Vec<f64>,
    },

    #[error(
        "Volterra fixed-point iteration did not reach tolerance {tol:e} within {iterations} \
         iterations (last change {last_change:e}); the kernel may violate the integrability bound"
    )]
    VolterraNoConvergence {
        iterations: usize,
        tol: f64,
        last_change: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
