//! Validated numerics for the prescribed-curvature (Nirenberg) problem
//! `1 + Δu - K e^{2u} = 0` on the round sphere, with `Δ` the nonnegative
//! Laplacian and `K` a spherical harmonic.

pub mod analysis;
pub mod fixedpoint;
pub mod harmonics;
pub mod linearized;
pub mod par;
pub mod quadrature;
pub mod rigor;
pub mod solver;
pub mod symmetry;

use thiserror::Error;

pub use rigor::RigorError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Rigor(#[from] RigorError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("bad coefficient data: {0}")]
    Format(String),
    #[error("quadrature with {got} points cannot integrate degree {degree} exactly")]
    QuadratureTooSmall { degree: usize, got: usize },
    #[error("{what} is not certified positive (lower bound {lower})")]
    NotPositive { what: &'static str, lower: f64 },
    #[error("invalid parameter: {0}")]
    Config(String),
    #[error("Newton iteration stopped after {iterations} steps at residual {residual:.3e}")]
    Diverged { iterations: usize, residual: f64, last: Box<harmonics::CoeffFunction<f64>> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
