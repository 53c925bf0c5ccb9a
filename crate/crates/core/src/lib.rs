//! Matrix Profile preserving time series anonymization.
//!
//! Given a univariate series `T`, [`synthesis::synthesize`] produces a
//! substitute series `T̂` whose aligned subsequences are decorrelated from
//! `T` while the nearest-neighbor distances (Matrix Profile) and the
//! nearest-neighbor locations (Matrix Profile Index) of `T` are retained.
//! The [`eval`] module measures both sides of that trade-off.

pub mod cli;
pub mod distance;
pub mod error;
pub mod eval;
pub mod io;
pub mod loss;
pub mod optim;
pub mod profile;
pub mod series;
pub mod synthesis;

pub use distance::{pearson_corr, z_normalize, znorm_dist, DEFAULT_VARIANCE_EPSILON};
pub use error::{Error, Result};
pub use eval::{auc, evaluate, make_planted_dataset, mp_anomaly_score, EvalReport, LabeledSeries};
pub use loss::{
    batch_gradient, batch_loss, sample_triples, LossComponents, LossTriple, LossWeights,
};
pub use profile::{discord_topk, mp_brute_force, mp_fast, MatrixProfile};
pub use series::{Subsequence, TimeSeries, WindowConfig};
pub use synthesis::{initialize, synthesize, InitMode, SynthesisConfig, TrainingTrace};
