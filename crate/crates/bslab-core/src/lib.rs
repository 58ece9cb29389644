//! Linear spectra, explicit flows, spectral simulation and bifurcation
//! analysis for rotating fluid models with kinetic-energy backscatter.

pub mod bifurcation;
pub mod dispersion;
pub mod explicit;
pub mod fft;
pub mod growth;
pub mod poly;
pub mod spectral;
pub mod types;

pub use types::{perp, BackscatterParams, GridSpec, PhysicalParams, SpectralField2D, WaveVector};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("grid size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("zero wave vector")]
    ZeroWaveVector,
    #[error("critical point needs isotropic backscatter")]
    Anisotropic,
    #[error("|k| = {got} differs from the critical wave number {expected}")]
    NotCritical { expected: f64, got: f64 },
    #[error("existence condition ({which}) violated: residual {residual:e}")]
    Compliance { which: &'static str, residual: f64 },
    #[error("wave vectors are not on one ray")]
    RayViolation,
    #[error("wave vectors do not share one wave number")]
    MixedRadii,
    #[error("no root in bracket: {0}")]
    NoRoot(String),
    #[error("no periodic box fits the wave vectors")]
    NoPeriodicBox,
    #[error("outside the theorem range: {0}")]
    Range(String),
    #[error("simulation diverged at t = {t}")]
    SimulationDiverged { t: f64 },
    #[error("layer depth non-positive at xi = {xi}")]
    DepthViolation { xi: f64 },
    #[error("amplitude undetermined at leading order (vertical branch)")]
    VerticalBranch,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("Newton did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("continuation step failed at parameter {param}")]
    StepFailure { param: f64 },
    #[error("degenerate profile: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SimulationDiverged { .. }
                | Error::NoConvergence { .. }
                | Error::StepFailure { .. }
                | Error::NoRoot(_)
                | Error::DepthViolation { .. }
                | Error::Degenerate(_)
        )
    }
}
