//! Particle filtering and online smoothing of additive functionals in
//! general hidden Markov models.
//!
//! The crate provides a bootstrap particle filter ([`filter`]), the PaRIS
//! online smoother together with forward-only FFBSm and FFBSi baselines
//! ([`smoother`]), diagnostics of the backward-index genealogy
//! ([`genealogy`]), exact Kalman/RTS machinery for the linear Gaussian model
//! ([`oracle`]) and a replicated experiment runner ([`experiment`]).
//!
//! ```
//! use paris_core::hmm::{simulate, statistics, LgParams, LinearGaussian};
//! use paris_core::rng::RngKey;
//! use paris_core::smoother::{BackwardSampler, ParisState};
//!
//! let model = LinearGaussian::new(LgParams::stationary(0.7, 1.0, 0.2, 1.0)?)?;
//! let data = simulate(&model, 50, RngKey::new(1));
//! let stats = [statistics::sum_x()];
//! let key = RngKey::new(2);
//! let mut state = ParisState::init(&model, &data.observations[0], 100, 2, 1, key.child(0))?;
//! for (t, y) in data.observations.iter().enumerate().skip(1) {
//!     let sampler = BackwardSampler::AcceptReject { threshold: Some(10) };
//!     state = state.step(&model, &stats, y, sampler, key.child(t as u64))?.0;
//! }
//! let smoothed_sum = state.estimates(&stats)[0];
//! assert!(smoothed_sum.is_finite());
//! # Ok::<(), paris_core::Error>(())
//! ```

pub mod error;
pub mod experiment;
pub mod filter;
pub mod genealogy;
pub mod hmm;
pub mod oracle;
pub mod rng;
pub mod smoother;

pub use error::{Error, Result};
pub use filter::{estimate_filter, init_cloud, multinomial_sample, pf_step, WeightedCloud};
pub use hmm::{simulate, AdditiveFunctional, StateSpaceModel, Trajectory};
pub use smoother::{BackwardSampler, ParisState, TrialStats};
