//! Likelihood-ratio evaluation of bloodstain pattern mechanisms.
//!
//! The crate turns a photograph of a bloodstain pattern into a verdict about
//! the mechanism that produced it, in four stages:
//!
//! 1. [`pipeline`] segments individual stains in an image and fits an ellipse
//!    to each one, producing a table of `(x, y, a, b, phi)` rows.
//! 2. [`features`] condenses a pattern's ellipses into a two-dimensional
//!    feature vector using directional statistics, either on the circle
//!    (stain orientations and impact angles separately) or on the hemisphere
//!    (both folded into one unit vector per stain).
//! 3. [`model`] fits a bivariate Gaussian to the feature vectors observed
//!    under each mechanism hypothesis and computes likelihood ratios for new
//!    patterns, including a generalized ratio against a weighted set of
//!    alternative hypotheses.
//! 4. [`eval`] wraps the above in a leave-one-out cross-validation harness
//!    with confusion matrices, Tippett curves, confidence ellipses and
//!    per-condition error breakdowns.
//!
//! [`io`] handles the CSV/JSON formats shared with the command-line tool and
//! [`synth`] generates synthetic patterns for tests and demos.
//!
//! Angles are radians everywhere inside the crate. Degrees appear only at the
//! file-format and CLI boundary.

pub mod eval;
pub mod features;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod types;

pub use eval::{evaluate, loocv, EvalConfig, EvalError, EvaluationReport, FeatureRow, ScoredPattern};
pub use features::{circular_features, spherical_features, FeatureConfig, FeatureError};
pub use model::{
    generalized_lr, likelihood_ratio, GaussianModel, HypothesisSet, LRResult, ModelError,
};
pub use pipeline::{extract_pattern, PipelineConfig, PipelineError};
pub use types::{
    validate_pattern, Ellipse, FeatureKind, FeatureVector, Mechanism, PatternRecord,
    PatternRejection, SourceMeta, ValidatedPattern,
};
