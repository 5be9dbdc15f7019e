//! Collapsed Gibbs inference for both priors and track extraction.

pub mod alpha;
pub mod belief;
pub mod chain;
pub mod sweep;
pub mod tracks;

pub use alpha::sample_alpha;
pub use belief::Belief;
pub use chain::{
    chain_rng, run_chain, run_chain_with, AlphaMode, ChainConfig, ChainOutput, PosteriorSample, PriorKind,
    SampleCluster, StepPosterior, TrackerConfig,
};
pub use sweep::{
    ddp_gibbs_sweep, dpy_gibbs_sweep, refresh_slot, refresh_unique_params, sweep, BaseMeasure, InitStrategy,
    Survivor, SweepState,
};
pub use tracks::{extract_tracks, mode, StepEstimate, TrackPoint, TrackSet};
