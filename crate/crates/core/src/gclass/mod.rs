//! The evolving TSK fuzzy classifier used as a single layer of the stack.

mod chebyshev;
mod config;
mod density;
mod model;
mod rule;

pub use chebyshev::{chebyshev_expand, expanded_dim};
pub use config::GClassConfig;
pub use density::DensityStats;
pub use model::{
    confidence, fwgrls_step, rank_one_inverse_update, GClassModel, Inference, SampleAction,
};
pub use rule::FuzzyRule;
pub(crate) use rule::argmax;
