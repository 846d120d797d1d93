//! Information measures of generalized q-Gaussian distributions.
//!
//! The crate evaluates the information generating function M_q, the Rényi and
//! Tsallis entropies, the entropy power N_q, the elliptic moment m_α and the
//! (β,q)-Fisher information I_{β,q}, both in closed form for q-Gaussians and by
//! adaptive radial quadrature for arbitrary radially symmetric densities. On top
//! of these it checks the Fisher-moment-entropy, moment-entropy, Stam and
//! Cramér-Rao type inequalities, samples q-Gaussians exactly, and solves the
//! moment-constrained Fisher minimization over discretized radial profiles.

pub mod error;
pub mod estimators;
pub mod inequalities;
pub mod measures;
pub mod qgaussian;
pub mod quadrature;
pub mod sampler;
pub mod special;
pub mod spline;
pub mod variational;

pub use error::{Error, Result, Validity};
pub use estimators::RadialDensity;
pub use measures::{MeasureSet, Method};
pub use qgaussian::QGaussianParams;
