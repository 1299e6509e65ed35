//! Parameter estimation for a partially observed linear system with small
//! state and observation noise.
//!
//! The observed process `X` and the hidden Gaussian process `Y` solve
//!
//! ```text
//! dX = f(θ,t) Y dt + ε σ(t) dW,    X(0) = 0
//! dY = a(θ,t) Y dt + ψ b(θ,t) dV,  Y(0) = y0,   ψ = ε^δ
//! ```
//!
//! The crate provides the coefficient families ([`coefficients`]), path
//! simulation ([`sde_sim`]), the Kalman-Bucy filter with its θ-derivatives
//! ([`kalman_filter`]), the estimators ([`estimators`]), closed-form
//! asymptotic quantities ([`asymptotics`]) and a deterministic Monte Carlo
//! harness ([`mc`]).

pub mod asymptotics;
pub mod coefficients;
pub mod error;
pub mod estimators;
pub mod kalman_filter;
pub mod mc;
pub mod quadrature;
pub mod sde_sim;

pub use coefficients::{builtin_model, CoefficientKind, CoefficientModel, Family, Params, ThetaDomain};
pub use error::{Error, Result};
pub use estimators::{EstimationResult, Method};
pub use kalman_filter::{FilterTrajectory, RiccatiScheme};
pub use sde_sim::{derive_seed, simulate, NoiseConfig, SamplePath, TimeGrid};
