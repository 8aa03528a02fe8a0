use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |M - M†| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (max off-diagonal {off_diagonal:e})")]
    NotConverged { sweeps: usize, off_diagonal: f64 },

    #[error("matrix is not unitary (max |U†U - I| = {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The initial state does not commute with the Hamiltonian, so the
    /// two-time-measurement and work-operator pictures disagree.
    #[error("state does not commute with the Hamiltonian (max |[H, ρ]| = {residual:e})")]
    NonCommuting { residual: f64 },

    #[error("local state is not Gibbs (log-population fit residual {residual:e})")]
    NotGibbs { residual: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("singular linear system (condition number {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("phase search did not reach tolerance {tol:e} (best residual {best_residual:e})")]
    OptimizerFailed { tol: f64, best_residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
