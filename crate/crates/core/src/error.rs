use thiserror::Error;

/// Which of the three admissible-set inequalities a state violated.
///
/// 1: `a^{-1} + w_p > delta` in the upper region,
/// 2: `a^{-1} + w_p > delta` in the lower region,
/// 3: `w < (2*lambda - delta)/(4g)` on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginInequality {
    UpperSlope,
    LowerSlope,
    SurfaceHeight,
}

impl MarginInequality {
    pub fn id(self) -> u8 {
        match self {
            MarginInequality::UpperSlope => 1,
            MarginInequality::LowerSlope => 2,
            MarginInequality::SurfaceHeight => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("vorticity is not admissible: {0}")]
    Admissibility(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("singular coefficient: lambda + 2*Gamma(p) = {value:.6e} <= 0 at p = {p}")]
    SingularCoefficient { p: f64, value: f64 },

    #[error("state leaves admissible set: inequality {} violated at node (q={q}, p={p}), margin {margin:.3e}", inequality.id())]
    LeavesAdmissibleSet {
        inequality: MarginInequality,
        q: f64,
        p: f64,
        margin: f64,
    },

    #[error("horizontal stagnation: h_p = {height_p:.3e} <= 0 at node (q={q}, p={p})")]
    Stagnation { q: f64, p: f64, height_p: f64 },

    #[error("no bifurcation point found: {0}")]
    NoBifurcation(String),

    #[error("Newton iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
