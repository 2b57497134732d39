//! Robust individualized decision rules when some covariates are sensitive.
//!
//! A decision rule may only look at the deployable covariates `x`, while a
//! sensitive covariate `s` is available offline for training. The robust
//! learner maximizes the average over `x` of a risk functional of the
//! conditional mean outcome across `s` (the infimum for discrete `s`, a
//! lower quantile for continuous `s`), which reduces to a weighted binary
//! classification problem on `x`.
//!
//! Crate layout:
//!
//! * [`data`]: tabular causal data, synthetic benchmark generators with oracle
//!   access, CSV ingestion and train/test splitting.
//! * [`learners`]: mean, quantile and weighted-classification learners
//!   (linear and small feed-forward networks) plus k-fold tuning.
//! * [`policy`]: the robust learner, the mean-optimal baselines and the
//!   contrast construction behind the classification reduction.
//! * [`drbaselines`]: doubly robust scores and exact shallow policy trees.
//! * [`eval`]: objective, value and vulnerable-subgroup metrics, and
//!   aggregation over replications.

pub mod data;
pub mod drbaselines;
pub mod eval;
pub mod learners;
pub mod policy;
pub mod rng;

pub use data::{Action, Dataset, Sample, SensitiveKind};
pub use learners::{LearnerConfig, Matrix, Predictor};
pub use policy::{MethodTag, Policy, SensitiveSpec};
