//! # thermopath-core
//!
//! Estimation of ratios of normalizing constants, probability-distribution
//! divergences and Bayesian model-comparison quantities by tempered-transition
//! Monte Carlo over geometric and compound paths.
//!
//! Two unnormalized densities `q0`, `q1` are linked by the geometric path
//! `q_t = q1^t * q0^(1-t)` on `t in [0,1]`. A separate MCMC run at each point
//! of a temperature schedule yields per-temperature means of the path's
//! U-statistic `U = log q1 - log q0`, from which two estimators of
//! `log(z1/z0)` are built:
//!
//! - **Thermodynamic integration (TI)**: trapezoid quadrature of the
//!   per-temperature means over the schedule.
//! - **Stepping-stone sampling (SS)**: a telescoping product of per-panel
//!   importance-sampling ratios, stabilized in log space.
//!
//! The same ladder output exposes the normalized thermodynamic integral and
//! with it a family of f-divergences between the endpoint distributions:
//! KL in both directions, the J-divergence, Chernoff t-divergences, the
//! Chernoff information (located by bisection at the temperature `t*` where
//! the functional KL of order t changes sign), Bhattacharyya, Hellinger,
//! Rényi and Tsallis divergences.
//!
//! Model-comparison front ends assemble the prior-posterior (PP),
//! importance-posterior (IP), model-switch (MS) and quadrivial (compound)
//! paths for marginal-likelihood and Bayes-factor estimation, each with a
//! thermodynamic and a stepping-stone variant and batch-means Monte Carlo
//! errors throughout.
//!
//! ## Module map
//!
//! - [`densities`]: parameter vectors, log-densities, geometric and
//!   quadrivial paths, tempered targets, U-statistics.
//! - [`schedules`]: temperature schedules (uniform, powered-fraction,
//!   beta-quantile, explicit) and interval refinement.
//! - [`sampler`]: random-walk Metropolis engine, conjugate Gibbs sampler for
//!   the tempered linear-regression posterior, ladder orchestration.
//! - [`ti`]: thermodynamic-integration estimators, functional-KL curves,
//!   `t*` bisection, Chernoff information, divergence reports.
//! - [`ss`]: stepping-stone estimator with per-step diagnostics.
//! - [`model_eval`]: PP/IP/MS/quadrivial marginal-likelihood and
//!   Bayes-factor pipelines, moment-matched importance densities.
//! - [`diagnostics`]: batch-means Monte Carlo errors, secant/J-divergence
//!   geometry, discretisation-error indicator.
//! - [`oracle`]: closed-form Gaussian references and 1-D quadrature for
//!   validating estimators.

pub mod densities;
pub mod diagnostics;
mod math;
pub mod model_eval;
pub mod oracle;
pub mod sampler;
pub mod schedules;
pub mod ss;
pub mod ti;

pub use densities::{
    DensityRef, GeometricPath, LogDensity, ParamVector, PathRef, QuadrivialPath, TemperedPath,
    TemperedTarget,
};
pub use diagnostics::{BatchSpec, EstimateWithError};
pub use schedules::TemperatureSchedule;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument lies outside its mathematical domain.
    #[error("domain error: {what} = {value} is outside {constraint}")]
    Domain {
        what: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A structured argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A point fell outside the support of a density that must be finite there.
    #[error("support error: density '{label}' is zero at {point:?}")]
    Support { label: String, point: Vec<f64> },

    /// A density evaluation produced +inf or NaN, or a non-finite value was
    /// encountered where finiteness is guaranteed by contract.
    #[error("numeric error at t={t:?}: {message} (theta = {point:?})")]
    Numeric {
        message: String,
        t: Option<f64>,
        point: Vec<f64>,
    },

    /// The path endpoints coincide in distribution: the functional KL curve
    /// is identically zero and `t*` is undefined.
    #[error("degenerate path: the functional KL of order t never changes sign")]
    DegeneratePath,

    /// A quadrature grid fails to contain the effective support of the density.
    #[error("quadrature grid error: {0}")]
    Grid(String),

    /// Chains are too short for the requested batch layout.
    #[error("insufficient samples: need at least {required}, have {available}")]
    InsufficientSamples { required: usize, available: usize },

    /// An importance density cannot be built from the supplied chain.
    #[error("degenerate importance density: {0}")]
    DegenerateImportance(String),

    /// Invalid run configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Annotate an error with the temperature at which it occurred.
    pub fn at_temperature(self, t: f64) -> Self {
        match self {
            Error::Numeric { message, point, .. } => Error::Numeric {
                message,
                t: Some(t),
                point,
            },
            Error::Support { label, point } => Error::Numeric {
                message: format!("density '{label}' left its support during sampling"),
                t: Some(t),
                point,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
