use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported builtin domain `{0}`")]
    UnsupportedDomain(String),
    #[error("resolution {got} too small (need at least {min})")]
    ResolutionTooSmall { got: usize, min: usize },
    #[error("mesh parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("vertex {0} is pinched (touches more than one boundary loop)")]
    PinchedVertex(usize),
    #[error("triangle {0} is inverted or degenerate")]
    InvertedTriangle(usize),
    #[error("mesh is not connected")]
    Disconnected,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("requested {requested} eigenpairs but only {available} are available")]
    InsufficientEigenpairs { requested: usize, available: usize },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },
    #[error("resonant parameter: threshold {threshold} is within {tol:e} of -λ_{index}")]
    Resonance {
        threshold: f64,
        index: usize,
        tol: f64,
    },
    #[error("threshold {0} is below -λ_max: more eigenpairs are needed to bracket it")]
    BracketOutOfRange(f64),
    #[error("singular matrix: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },
    #[error("empty support")]
    EmptySupport,
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("density is not concentrated at scale {eps} for K = {k}")]
    NotConcentrated { eps: f64, k: usize },
    #[error("u is not in a low sublevel: ‖Π_I u‖ < 1 and e^u is not concentrated")]
    NotInLowSublevel,
    #[error("mesh too coarse for scale {scale}: core radius {core:e} < 2 × min edge {min_edge:e}")]
    Underresolved {
        scale: f64,
        core: f64,
        min_edge: f64,
    },
    #[error("degenerate parameters: {0:?}")]
    Degenerate(crate::topology::ResonanceFlags),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("K = I = 0: the low sublevel is empty (coercive functional)")]
    EmptySublevel,
    #[error("near-zero Hessian eigenvalue {0:e}: critical point is degenerate")]
    DegenerateCriticalPoint(f64),
    #[error("Newton did not converge within {iterations} iterations (residual {residual:e})")]
    NewtonNoConvergence { iterations: usize, residual: f64 },
}
