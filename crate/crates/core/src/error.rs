use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("insufficient points: need {need}, have {have}")]
    InsufficientPoints { need: usize, have: usize },
    #[error("divergent moment: E[r_k^-{s}] needs k > s when r_min = 0 (k = {k})")]
    DivergentMoment { k: usize, s: f64 },
    #[error("divergent clutter functional: alpha_c = {0} must exceed 2")]
    DivergentClutter(f64),
    #[error("divergent mean interference: d_min must be positive")]
    DivergentMean,
    #[error("infeasible outage margin: coverage at 1 m is {0:.6}")]
    InfeasibleOutage(f64),
    #[error("safe range exceeds the search bracket ({0} m)")]
    RangeUnbounded(f64),
    #[error("time step too coarse: dt = {dt} s, need dt <= {required} s")]
    StepTooCoarse { dt: f64, required: f64 },
    #[error("target collocated with a BS (distance {0} m)")]
    Collocated(f64),
    #[error("insufficient samples for tail fit: {have} < {need}")]
    InsufficientSamples { need: usize, have: usize },
    #[error("static cluster already sufficient; handover rate minimum is 0")]
    StaticSufficient,
    #[error("resource-saturated: mean sensing load {0:.4} >= 1")]
    ResourceSaturated(f64),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
