//! Simulation toolkit for passive-unitary averaging of two-mode squeezed
//! vacuum distribution.
//!
//! A squeezed arm is split over `n` rails, each rail picks up an independent
//! random phase, the rails are recombined, and the auxiliary rails are
//! heralded on vacuum. The surviving state is again a two-mode squeezed
//! vacuum with a reduced, noise-dependent squeezing parameter. This crate
//! provides:
//!
//! - a small Gaussian-state engine ([`gaussian`]),
//! - the exact per-shot channel in closed form and as an explicit
//!   symplectic-plus-heralding pipeline ([`channel`]),
//! - closed-form ensemble approximations and asymptotics ([`analytic`]),
//! - a truncated Fock-space oracle for cross-validation ([`fock`]),
//! - a deterministic parallel Monte Carlo engine ([`montecarlo`]),
//! - reporting, configuration, and a command-line front end ([`report`],
//!   [`config`]).
//!
//! ```
//! use uasim::channel::{ChannelParams, Convention};
//! use uasim::analytic::ensemble_metrics;
//!
//! let params = ChannelParams::new(5, 1.2, 0.01, Convention::Paper).unwrap();
//! let m = ensemble_metrics(params.r, params.v, params.n, params.convention).unwrap();
//! assert!((m.squeezing_db - 9.40).abs() < 0.01);
//! ```

pub mod analytic;
pub mod channel;
pub mod config;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod montecarlo;
pub mod report;

pub use channel::{ChannelParams, Convention};
pub use error::{Error, Result};
pub use gaussian::GaussianState;
pub use montecarlo::Weighting;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/gaussian-states.md")]
    pub mod gaussian_states {}
    #[doc = include_str!("../../../book/src/channel.md")]
    pub mod channel {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    pub mod ensembles {}
    #[doc = include_str!("../../../book/src/verification.md")]
    pub mod verification {}
}
