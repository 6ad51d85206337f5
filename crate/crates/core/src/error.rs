use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty kernel")]
    EmptyKernel,
    #[error("kernel entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("kernel is reducible ({components} strongly connected components)")]
    Reducible { components: usize },
    #[error("stationary mass of state {state} is {mass}")]
    ZeroStationaryMass { state: usize, mass: f64 },
    #[error("stationary equation residual {residual} exceeds tolerance")]
    StationaryResidual { residual: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tolerance {0} must lie in (0, 1)")]
    ToleranceTooLoose(f64),
    #[error("alpha = {alpha} exceeds the minimal holding probability {holding}")]
    AlphaExceedsHolding { alpha: f64, holding: f64 },
    #[error("alpha = {0} is outside the admissible range")]
    AlphaOutOfRange(f64),
    #[error("subset is empty")]
    EmptySubset,
    #[error("state index {index} out of range for {n} states")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("subset is the whole state space")]
    FullSpace,
    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),
    #[error("{n} states exceed the enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("profile value {value} at r = {r} is not positive")]
    NonpositiveProfile { r: f64, value: f64 },
    #[error("chain has zero holding probability")]
    ZeroHolding,
    #[error("multiplicative symmetrization is reducible")]
    ReducibleSymmetrization,
    #[error("chain is not reversible")]
    NotReversible,
    #[error("Gamma is not {delta}-regular: witness t = {t}, s = {s}")]
    RegularityFailed { delta: f64, t: f64, s: f64 },
    #[error("grid has {points_per_decade} points per decade, at least 32 required")]
    GridTooCoarse { points_per_decade: f64 },
    #[error("chain is periodic with period {period}")]
    Periodic { period: usize },
    #[error("distance did not reach epsilon before t = {t_max}")]
    NoConvergenceInWindow { t_max: f64 },
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("{vertices} vertices exceed the size cap of {cap}")]
    SizeCap { vertices: usize, cap: usize },
    #[error("torus sides {a} x {b} give degenerate generators (need both >= 3)")]
    DegenerateGenerators { a: usize, b: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
