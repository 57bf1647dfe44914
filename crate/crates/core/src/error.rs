use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    /// Interface too close to a boundary.
    #[error("separation violated: min gap {min_gap:.6e} < required {required:.6e}")]
    Geometry { min_gap: f64, required: f64 },

    /// The straightening map lost monotonicity in z.
    #[error("invalid straightening map: min d(rho)/dz {min_dz_rho:.6e} < {threshold:.6e} (try a smaller tau)")]
    MapValidity { min_dz_rho: f64, threshold: f64 },

    #[error("{solver} did not converge in {iterations} iterations (last relative residual {last:.3e})", last = residual_history.last().copied().unwrap_or(f64::NAN))]
    Solver {
        solver: &'static str,
        iterations: usize,
        residual_history: Vec<f64>,
    },

    #[error("time step {dt:.3e} exceeds the explicit stability limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },

    /// The two-phase state is not Rayleigh-Taylor admissible.
    #[error("Rayleigh-Taylor condition lost: min RT {min_rt:.6e} <= 0")]
    RayleighTaylor { min_rt: f64 },

    #[error("bad coefficients: {0}")]
    Coefficient(String),
}
