use thiserror::Error;

use crate::mep::MepSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid spin j = {0}: 2j must be a positive integer")]
    InvalidSpin(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The `|rho01|^2 / rho00` entries of the detector assignments blow up.
    #[error("effective state is singular: rho00 = {rho00:e} is below {threshold:e}")]
    SingularEffectiveState { rho00: f64, threshold: f64 },

    #[error("Bloch radius {0} is outside [0, 1]")]
    RadiusOutOfRange(f64),

    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tol:e}")]
    QuadratureNonConvergence { estimate: f64, tol: f64 },

    #[error("MEP solver did not converge after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    NonConvergence(Box<MepSolution>),

    #[error("MEP targets look infeasible: residual stagnated at {:e}", .0.residual)]
    InfeasibleTargets(Box<MepSolution>),

    #[error("rejection sampler accepted none of {n_proposed} proposals (acceptance rate below {rate_upper_bound:e})")]
    ZeroAcceptance {
        n_proposed: u64,
        rate_upper_bound: f64,
    },

    #[error("purification dimension {found} exceeds the cap of {cap}")]
    DimensionCap { found: usize, cap: usize },
}
