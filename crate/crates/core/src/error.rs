use thiserror::Error;

/// Errors raised by the transport engines and their oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("potential is non-differentiable at x = {x}")]
    NonDifferentiable { x: f64 },

    #[error("asymptotic expansion inapplicable: {0}")]
    AsymptoteInapplicable(String),

    #[error("dynamic range exceeded (exponent spread {spread:.1})")]
    DynamicRange { spread: f64 },

    #[error("quadrature not converged at n = {n}: last {last}, previous {previous}")]
    NotConverged { n: usize, last: f64, previous: f64 },

    #[error("dual forms of M1 disagree: {first} vs {second} (rel {rel:.3e})")]
    DualFormMismatch { first: f64, second: f64, rel: f64 },

    #[error("u1 undefined at zero force")]
    U1Undefined,

    #[error("drift undefined for potential `{0}`")]
    DriftUndefined(String),

    #[error("blow-up at step {step}")]
    BlowUp { step: u64 },

    #[error("insufficient history: {samples} samples in slope window (need 10)")]
    InsufficientHistory { samples: usize },

    #[error("perturbation violates zero-mean constraint (weighted mean {mean:.3e})")]
    PerturbationNotCentered { mean: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
