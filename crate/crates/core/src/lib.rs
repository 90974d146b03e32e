//! Principal frequency of clamped plates on weighted one-dimensional model
//! spaces and on metric measure cones.
//!
//! The crate is organised bottom-up:
//!
//! * [`bessel`] real-order `J_ν`, `I_ν`, their ratios, zeros and the
//!   cross-product root `h_ν`;
//! * [`quadrature`] adaptive Gauss–Kronrod integration;
//! * [`model_space`] the weighted half-line `([0,∞), N ω_N r^{N-1} dr)`, the
//!   radial Laplacian `Δ_{0,N}` and Bessel extremals;
//! * [`twoball`] the coupled two-ball reduction and its first root `h_ν(a)`;
//! * [`bounds`] the `A(ν,a)`, `B(ν,a)`, `α(ν)`, `β(ν)` certification and `N₀`;
//! * [`fd_oracle`] an independent finite-difference eigenvalue solver;
//! * [`rearrange`] discrete distribution functions, rearrangements and the
//!   `F_±`, `V_±` constructions;
//! * [`cones`] cone fixtures, asymptotic volume ratios and sharpness checks.

pub mod bessel;
pub mod bounds;
pub mod cones;
pub mod error;
pub mod fd_oracle;
pub mod model_space;
pub mod quadrature;
pub mod rearrange;
pub mod twoball;

pub use bessel::{EvalResult, Order, ZeroTable};
pub use bounds::{BoundConstants, NegativityReport};
pub use cones::{ConeDescriptor, ConeFixture, SharpnessReport};
pub use error::{Error, Result};
pub use fd_oracle::{EigResult, RadialMesh};
pub use model_space::{RadialProfile, SpectralParams};
pub use quadrature::QuadratureResult;
pub use rearrange::{FProfile, MeasuredProfile, RearrangementResult, StepFunction};
pub use twoball::{RootResult, TwoBallInstance};

/// Upper end of the dimension range handled by the crate.
pub const MAX_DIM: f64 = 4.0;

/// Worker count for parallel sweeps, honouring `PLATE_TONE_THREADS`.
pub fn worker_threads() -> Option<usize> {
    std::env::var("PLATE_TONE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
