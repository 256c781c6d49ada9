//! One-sided stable laws, subordinator paths and arcsine laws.

pub mod arcsine;
pub mod path;
pub mod sampler;

pub use arcsine::{arcsine_cdf, arcsine_cdf_quadrature, overshoot_cdf, overshoot_cdf_series, undershoot_cdf};
pub use path::{
    sample_inverse_bisection, sample_inverse_marginal, sample_subordinator, BisectionSampler, SubordinatorPath,
};
pub use sampler::{kanter_a, sample_positive_stable, LnDensityTable, PositiveStable};
