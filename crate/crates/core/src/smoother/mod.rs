//! Particle smoothers for additive functionals.
//!
//! * [`ParisState`]: online smoother drawing `K` backward indices per particle.
//! * [`FfbsmState`] / [`ffbsm_forward_step`]: forward-only FFBSm, the exact
//!   `O(N²)` counterpart of the PaRIS update.
//! * [`ffbsi_sample_paths`]: batch backward simulation over a stored cloud history.

mod backward;
mod ffbsi;
mod ffbsm;
mod paris;

pub use backward::{
    backward_weights, default_threshold, sample_backward_ar, sample_backward_exact, BackwardSampler,
    BackwardWeights, TrialStats,
};
pub use ffbsi::{ffbsi_estimate, ffbsi_sample_paths, FfbsiPaths};
pub use ffbsm::{ffbsm_forward_step, FfbsmState};
pub use paris::ParisState;
