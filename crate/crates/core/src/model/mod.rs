//! Parameters, environments and deep-trap scales.

pub mod deep;
pub mod environment;
pub mod params;

pub use deep::{critical_depth, DeepTrapIndex, ScaleExponents};
pub use environment::{
    pareto_from_uniform, pareto_survival, sample_depth, CustomLaw, DepthCache, DepthLaw, Depths, Environment,
    PinnedSite, WindowDepths,
};
pub use params::ModelParams;
