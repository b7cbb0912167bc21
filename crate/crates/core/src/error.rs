use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the kernel/Gram/derivative/quadrature operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point with |w| = {modulus} is not inside the open unit disc (limit {limit})")]
    PointOutsideDisc { modulus: f64, limit: f64 },

    #[error("value {value} does not lie in the open right half-plane")]
    NotInHalfPlane { value: Complex64 },

    #[error("argument {z} lies on the branch cut of the principal logarithm")]
    BranchCut { z: Complex64 },

    #[error("x log x is undefined for negative x = {x}")]
    NegativeXLogX { x: f64 },

    #[error("kernel combination has {points} points but {coeffs} coefficients")]
    LengthMismatch { points: usize, coeffs: usize },

    #[error("kernel combination must contain at least one point")]
    EmptyCombination,

    #[error("exponent alpha = {alpha} must be positive")]
    NonPositiveAlpha { alpha: f64 },

    #[error("quadratic form has non-vanishing imaginary part {imag:e} (real part {real:e})")]
    NonRealForm { real: f64, imag: f64 },

    #[error("quadratic form {value:e} is negative beyond tolerance (trace {trace:e})")]
    NegativeForm { value: f64, trace: f64 },

    #[error("Gram nodes {i} and {j} coincide; the matrix is singular")]
    CoincidentNodes { i: usize, j: usize },

    #[error("Gram matrix condition estimate {cond:e} exceeds the solve threshold {limit:e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("linear solve residual {residual:e} exceeds {limit:e} relative to the data")]
    SolveResidual { residual: f64, limit: f64 },

    #[error("branch violation: entry {index} has Re = {re:e}, not in the right half-plane")]
    BranchViolation { index: usize, re: f64 },

    #[error("instance is outside the required class: {reason}")]
    ClassViolation { reason: String },

    #[error("degenerate quadratic form N = {n:e}")]
    DegenerateForm { n: f64 },

    #[error("matrix entry ({i},{j}) = {value} must be real and positive")]
    NonPositiveEntry { i: usize, j: usize, value: Complex64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge after {refinements} refinements (last delta {delta:e})")]
    NonConvergence { refinements: u32, delta: f64 },

    #[error("winding number inconclusive: argument jump {jump:e} after {refinements} refinements")]
    WindingInconclusive { jump: f64, refinements: u32 },

    #[error("boundary sampler returned modulus {modulus:e} at theta = {theta}")]
    ZeroModulusSample { modulus: f64, theta: f64 },

    #[error("zero lies on the two-kernel value segment; the instance has a zero in the disc")]
    ZeroOnSegment,

    #[error("series truncation N_max = {n_max} exceeds the composition enumeration guard {limit}")]
    TruncationTooLarge { n_max: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
