use thiserror::Error;

/// Errors shared by all verification modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient grid: need at least {need} points, got {got}")]
    InsufficientGrid { need: usize, got: usize },

    #[error("parameter out of range: {0}")]
    BadParameter(String),

    #[error("graph disconnected at time index {time_index}")]
    Disconnected { time_index: usize },

    #[error("pseudo-metric unsupported here: zero off-diagonal distance between {x} and {y}")]
    PseudoMetric { x: usize, y: usize },

    #[error("no left difference at the first grid time")]
    NoLeftDifference,

    #[error("mesh too coarse: no admissible midpoint between {x0} and {x1} within tolerance {tol}")]
    MeshTooCoarse { x0: usize, x1: usize, tol: f64 },

    #[error("no geodesic available between the requested endpoints")]
    NoGeodesic,

    #[error("marginal sums differ: {lhs} vs {rhs}")]
    MarginalMismatch { lhs: f64, rhs: f64 },

    #[error("K' must exceed K: K={k}, K'={kprime}")]
    KPrimeNotAboveK { k: f64, kprime: f64 },

    #[error("N must be at least the chart dimension: N={n}, dim={dim}")]
    NBelowDimension { n: f64, dim: usize },

    #[error("ODE step too large for stiffness; suggested substeps per interval: {suggested}")]
    StiffStep { suggested: usize },

    #[error("alternating solver stalled after {rounds} rounds at value {value}")]
    Stalled { rounds: usize, value: f64 },

    #[error("trajectory left the chart at t={t}")]
    LeftChart { t: f64 },

    #[error("generator family is not markovian: negative off-diagonal at ({row},{col})")]
    NotMarkov { row: usize, col: usize },

    #[error("reparametrization undefined: 2*K*t >= 1 at t={t}")]
    ReparamOutOfRange { t: f64 },

    #[error("expression error: {0}")]
    Expr(String),

    #[error("config error: {0}")]
    Config(String),
}
