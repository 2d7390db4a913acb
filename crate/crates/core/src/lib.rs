//! Capacity-region outer bounds for the two-user perturbative nonlinear
//! fiber channel.
//!
//! The crate is organised by stage of the computation:
//!
//! * [`system`]: link parameters, unit conversions, ASE noise.
//! * [`coeffs`]: first-order XPM perturbation coefficients by quadrature.
//! * [`channel`]: input ensembles and the full-memory / memoryless channels.
//! * [`bounds`]: the outer bound triple, AWGN and interference-as-noise rates.
//! * [`region`]: 2-D rate-region polygons and their comparisons.
//! * [`verify`]: Monte-Carlo and algebraic checks of the inequalities the
//!   outer bound rests on.
//! * [`config`]: the TOML configuration consumed by the command-line tool.
//!
//! ```
//! use xpmcap::bounds::{awgn_capacity, outer_bound_u1, EffectiveCoefficient};
//! use xpmcap::system::{dbm_to_watts, NoiseParams, PowerPair};
//!
//! let noise = NoiseParams::calibrated();
//! let p = dbm_to_watts(-5.0).unwrap();
//! let awgn = awgn_capacity(p, noise.sigma_sq);
//! assert!((awgn - 0.2117771).abs() < 1e-4);
//!
//! // without nonlinearity the bound is the AWGN capacity
//! let pp = PowerPair::symmetric(p).unwrap();
//! let u1 = outer_bound_u1(pp, EffectiveCoefficient::zero(), noise.sigma_sq).unwrap();
//! assert_eq!(u1, awgn);
//! ```

pub mod bounds;
pub mod channel;
pub mod coeffs;
pub mod config;
pub mod error;
pub mod region;
pub mod rng;
pub mod svg;
pub mod system;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
