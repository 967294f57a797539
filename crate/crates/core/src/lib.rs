//! Numerical laboratory for the 1D semilinear damped wave equation
//! `∂t²u + ∂t u - ∂x²u = |u|^p`.
//!
//! * [`grid`]: periodic grids, quadrature, norms, moments, weighted norms
//! * [`special`]: `I₀`, Lambert `W₀`, Gaussian data families, lifespan laws
//! * [`propagators`]: free damped-wave, wave and heat evolutions
//! * [`solver`]: integrating-factor RK4 march to blow-up, Duhamel check
//! * [`odi`]: memory-kernel integral inequalities at equality
//! * [`fit`]: log-log regressions

pub mod error;
pub mod fit;
pub mod grid;
pub mod odi;
pub mod propagators;
pub mod solver;
pub mod spectral;
pub mod special;

pub use error::{Error, Result};
pub use fit::{ExponentFit, LambertFit};
pub use grid::{GridFunction, GridSpec, MomentVector, NormKind, Trajectory};
pub use special::{DataFamily, LifespanPrediction, MomentClass, Regime};
