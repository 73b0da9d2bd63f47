use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The journal touches or leaves the clearance circle.
    #[error(
        "journal contact: eccentricity {eccentricity:.4e} m exceeds clearance {clearance:.4e} m"
    )]
    Contact { eccentricity: f64, clearance: f64 },

    #[error("film solver did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    FilmDiverged { sweeps: usize, residual: f64 },

    /// Static equilibrium search failed; carries the best iterate found.
    #[error("no equilibrium found after {iterations} iterations, best eccentricity ({best_x:.4e}, {best_y:.4e}) m with force residual {residual:.3e} N")]
    NoEquilibrium {
        iterations: usize,
        best_x: f64,
        best_y: f64,
        residual: f64,
    },

    #[error("coefficient extraction failed: {0}")]
    Coefficients(String),

    #[error("rotor topology: {0}")]
    Topology(String),

    #[error("time integration diverged at t = {time:.4} s (amplitude {amplitude:.3e} m)")]
    IntegrationDiverged { time: f64, amplitude: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Backward (or forward) amplitude too small for a meaningful ratio.
    #[error("fb ratio overflow: backward amplitude {backward:.3e} below floor {floor:.3e}")]
    RatioOverflow { backward: f64, floor: f64 },

    #[error("simulation failed at Q = ({q1:.4e}, {q2:.4e}) m³/s: {source}")]
    Evaluation {
        q1: f64,
        q2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("linear algebra: {0}")]
    Singular(String),
}
