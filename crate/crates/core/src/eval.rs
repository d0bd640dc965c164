//! Leave-one-out evaluation of mechanism classification.
//!
//! [`loocv`] refits both hypothesis models with each pattern held out in
//! turn and scores the held-out pattern, so every likelihood ratio is
//! computed on a model that never saw the pattern. [`evaluate`] packages the
//! ratios into a report: threshold and zone confusion matrices, Tippett
//! curves, model confidence ellipses, and an error breakdown by acquisition
//! condition. Everything is deterministic in the input order.

use std::collections::BTreeSet;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::features::{feature_vector, FeatureConfig};
use crate::model::{likelihood_ratio, GaussianModel, LRResult, ModelError};
use crate::types::{FeatureKind, FeatureVector, Mechanism, SourceMeta, ValidatedPattern};

/// Fewest patterns per class that leave-one-out can work with: removing one
/// must leave at least the three samples a Gaussian fit needs.
pub const MIN_CLASS_SIZE: usize = 4;

/// One labeled feature vector, the unit of evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub pattern_id: String,
    pub kind: FeatureKind,
    pub f1: f64,
    pub f2: f64,
    pub mechanism: Mechanism,
    pub meta: Option<SourceMeta>,
}

impl FeatureRow {
    pub fn point(&self) -> Vector2<f64> {
        Vector2::new(self.f1, self.f2)
    }

    fn vector(&self) -> FeatureVector {
        FeatureVector {
            pattern_id: self.pattern_id.clone(),
            kind: self.kind,
            f1: self.f1,
            f2: self.f2,
        }
    }
}

/// A likelihood ratio joined back to the ground truth it is judged against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPattern {
    pub result: LRResult,
    pub true_label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<SourceMeta>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no feature rows")]
    Empty,
    #[error("feature rows mix circular and spherical kinds")]
    MixedKinds,
    #[error("need exactly 2 mechanism labels, found {found:?}")]
    HypothesisCount { found: Vec<String> },
    #[error("numerator label {label:?} not among mechanisms {found:?}")]
    UnknownHypothesis { label: String, found: Vec<String> },
    #[error("class {label:?} has {count} patterns, need at least {min}")]
    InsufficientClassSize {
        label: String,
        count: usize,
        min: usize,
    },
    #[error("class {label:?} has no patterns")]
    EmptyClass { label: String },
    #[error("pattern {id:?} has no mechanism label")]
    UnlabeledPattern { id: String },
    #[error("scored patterns are inconsistent: {0}")]
    Inconsistent(String),
    #[error("invalid intermediate zone [{lower}, {upper}]")]
    InvalidZone { lower: f64, upper: f64 },
    #[error("coverage must lie strictly between 0 and 1, got {value}")]
    InvalidCoverage { value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Maps validated patterns to labeled feature rows, erroring on any pattern
/// without a mechanism label.
pub fn rows_from_patterns(
    patterns: &[ValidatedPattern],
    kind: FeatureKind,
    cfg: &FeatureConfig,
) -> Result<Vec<FeatureRow>, EvalError> {
    patterns
        .iter()
        .map(|p| {
            let mechanism = p.mechanism.clone().ok_or_else(|| EvalError::UnlabeledPattern {
                id: p.id.clone(),
            })?;
            let fv = feature_vector(p, kind, cfg);
            Ok(FeatureRow {
                pattern_id: fv.pattern_id,
                kind,
                f1: fv.f1,
                f2: fv.f2,
                mechanism,
                meta: p.source_meta.clone(),
            })
        })
        .collect()
}

fn class_labels(rows: &[FeatureRow]) -> Result<(String, String), EvalError> {
    let found: BTreeSet<String> = rows.iter().map(|r| r.mechanism.label().to_string()).collect();
    let found: Vec<String> = found.into_iter().collect();
    if found.len() != 2 {
        return Err(EvalError::HypothesisCount { found });
    }
    Ok((found[0].clone(), found[1].clone()))
}

/// Leave-one-out cross-validated likelihood ratios.
///
/// The rows must carry exactly two mechanism labels and at least
/// [`MIN_CLASS_SIZE`] rows each. `numerator` picks which label goes on top
/// of the ratio; by default the lexicographically first label does, so
/// results are reproducible without configuration. Results come back in
/// input order, one per row.
pub fn loocv(rows: &[FeatureRow], numerator: Option<&str>) -> Result<Vec<LRResult>, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::Empty);
    }
    if rows.iter().any(|r| r.kind != rows[0].kind) {
        return Err(EvalError::MixedKinds);
    }
    let (first, second) = class_labels(rows)?;
    let (num_label, den_label) = match numerator {
        None => (first, second),
        Some(l) if l == first => (first, second),
        Some(l) if l == second => (second, first),
        Some(l) => {
            return Err(EvalError::UnknownHypothesis {
                label: l.to_string(),
                found: vec![first, second],
            })
        }
    };
    for label in [&num_label, &den_label] {
        let count = rows.iter().filter(|r| r.mechanism.label() == label).count();
        if count < MIN_CLASS_SIZE {
            return Err(EvalError::InsufficientClassSize {
                label: label.clone(),
                count,
                min: MIN_CLASS_SIZE,
            });
        }
    }
    let kind = rows[0].kind;
    let mut results = Vec::with_capacity(rows.len());
    for (held_out, row) in rows.iter().enumerate() {
        let collect = |label: &str| -> Vec<Vector2<f64>> {
            rows.iter()
                .enumerate()
                .filter(|(i, r)| *i != held_out && r.mechanism.label() == label)
                .map(|(_, r)| r.point())
                .collect()
        };
        let num_model = GaussianModel::fit(&collect(&num_label), kind, num_label.clone())?;
        let den_model = GaussianModel::fit(&collect(&den_label), kind, den_label.clone())?;
        results.push(likelihood_ratio(&row.vector(), &num_model, &den_model)?);
    }
    Ok(results)
}

/// Joins LOOCV results back to their rows.
pub fn score(rows: &[FeatureRow], results: Vec<LRResult>) -> Result<Vec<ScoredPattern>, EvalError> {
    if rows.len() != results.len() {
        return Err(EvalError::Inconsistent(format!(
            "{} rows but {} results",
            rows.len(),
            results.len()
        )));
    }
    rows.iter()
        .zip(results)
        .map(|(row, result)| {
            if row.pattern_id != result.pattern_id {
                return Err(EvalError::Inconsistent(format!(
                    "row {:?} paired with result {:?}",
                    row.pattern_id, result.pattern_id
                )));
            }
            Ok(ScoredPattern {
                result,
                true_label: row.mechanism.label().to_string(),
                meta: row.meta.clone(),
            })
        })
        .collect()
}

/// What to decide when the likelihood ratio equals the threshold exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// A ratio of exactly 1 is no support for the numerator.
    #[default]
    FavorsDenominator,
    FavorsNumerator,
}

/// Binary confusion matrix at a single LR threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdMatrix {
    pub numerator_label: String,
    pub denominator_label: String,
    pub threshold: f64,
    pub tie_rule: TieRule,
    /// `counts[t][d]`: true class `t`, decided class `d`
    /// (0 = numerator, 1 = denominator).
    pub counts: [[u32; 2]; 2],
}

impl ThresholdMatrix {
    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    pub fn errors(&self) -> u32 {
        self.counts[0][1] + self.counts[1][0]
    }

    pub fn error_rate(&self) -> f64 {
        f64::from(self.errors()) / f64::from(self.total())
    }
}

fn check_scored(scored: &[ScoredPattern]) -> Result<(String, String), EvalError> {
    let first = scored.first().ok_or(EvalError::Empty)?;
    let num = first.result.numerator_hypothesis.clone();
    let den = first.result.denominator_hypothesis.clone();
    for s in scored {
        if s.result.numerator_hypothesis != num || s.result.denominator_hypothesis != den {
            return Err(EvalError::Inconsistent(
                "results mix different hypothesis pairs".into(),
            ));
        }
        if s.true_label != num && s.true_label != den {
            return Err(EvalError::Inconsistent(format!(
                "true label {:?} is neither {:?} nor {:?}",
                s.true_label, num, den
            )));
        }
    }
    Ok((num, den))
}

/// Confusion matrix with decisions at `lr > threshold` (ties per
/// `tie_rule`). Comparisons are made in log10 space.
pub fn confusion_threshold(
    scored: &[ScoredPattern],
    threshold: f64,
    tie_rule: TieRule,
) -> Result<ThresholdMatrix, EvalError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(EvalError::InvalidZone {
            lower: threshold,
            upper: threshold,
        });
    }
    let (num, den) = check_scored(scored)?;
    let t = threshold.log10();
    let mut counts = [[0u32; 2]; 2];
    for s in scored {
        let row = usize::from(s.true_label != num);
        let col = if s.result.log10_lr > t {
            0
        } else if s.result.log10_lr < t {
            1
        } else {
            match tie_rule {
                TieRule::FavorsDenominator => 1,
                TieRule::FavorsNumerator => 0,
            }
        };
        counts[row][col] += 1;
    }
    Ok(ThresholdMatrix {
        numerator_label: num,
        denominator_label: den,
        threshold,
        tie_rule,
        counts,
    })
}

/// Three-way confusion matrix with an inconclusive middle zone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneMatrix {
    pub numerator_label: String,
    pub denominator_label: String,
    pub lower: f64,
    pub upper: f64,
    /// `counts[t][z]`: true class `t` (0 = numerator, 1 = denominator),
    /// zone `z` (0 = above `upper`, 1 = inconclusive, 2 = below `lower`).
    pub counts: [[u32; 3]; 2],
}

/// Zone confusion matrix: ratios in the closed interval `[lower, upper]`
/// count as inconclusive rather than as a decision either way.
pub fn confusion_zones(
    scored: &[ScoredPattern],
    lower: f64,
    upper: f64,
) -> Result<ZoneMatrix, EvalError> {
    if !(lower > 0.0 && lower.is_finite() && upper.is_finite() && lower <= upper) {
        return Err(EvalError::InvalidZone { lower, upper });
    }
    let (num, den) = check_scored(scored)?;
    let lo = lower.log10();
    let hi = upper.log10();
    let mut counts = [[0u32; 3]; 2];
    for s in scored {
        let row = usize::from(s.true_label != num);
        let col = if s.result.log10_lr > hi {
            0
        } else if s.result.log10_lr < lo {
            2
        } else {
            1
        };
        counts[row][col] += 1;
    }
    Ok(ZoneMatrix {
        numerator_label: num,
        denominator_label: den,
        lower,
        upper,
        counts,
    })
}

/// One evaluation point of a pair of Tippett curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TippettPoint {
    /// log10 likelihood ratio.
    pub x: f64,
    /// Proportion of numerator-class patterns with `log10 LR <= x`.
    pub prop_num_le: f64,
    /// Proportion of denominator-class patterns with `log10 LR >= x`.
    pub prop_den_ge: f64,
}

/// Empirical Tippett curves: for each observed ratio, how much of each
/// class sits on the "wrong" side of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TippettCurves {
    pub numerator_label: String,
    pub denominator_label: String,
    pub n_numerator: usize,
    pub n_denominator: usize,
    /// Points at every distinct observed `log10 LR`, ascending.
    pub points: Vec<TippettPoint>,
    #[serde(skip)]
    num_values: Vec<f64>,
    #[serde(skip)]
    den_values: Vec<f64>,
}

impl TippettCurves {
    /// Proportion of numerator-class patterns with `log10 LR <= x`.
    pub fn prop_num_le(&self, x: f64) -> f64 {
        self.num_values.iter().filter(|v| **v <= x).count() as f64 / self.num_values.len() as f64
    }

    /// Proportion of denominator-class patterns with `log10 LR >= x`.
    pub fn prop_den_ge(&self, x: f64) -> f64 {
        self.den_values.iter().filter(|v| **v >= x).count() as f64 / self.den_values.len() as f64
    }
}

/// Builds Tippett curves from scored patterns. Both classes must appear.
pub fn tippett(scored: &[ScoredPattern]) -> Result<TippettCurves, EvalError> {
    let (num, den) = check_scored(scored)?;
    let mut num_values: Vec<f64> = Vec::new();
    let mut den_values: Vec<f64> = Vec::new();
    for s in scored {
        if s.true_label == num {
            num_values.push(s.result.log10_lr);
        } else {
            den_values.push(s.result.log10_lr);
        }
    }
    for (label, values) in [(&num, &num_values), (&den, &den_values)] {
        if values.is_empty() {
            return Err(EvalError::EmptyClass { label: label.clone() });
        }
    }
    num_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    den_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut xs: Vec<f64> = num_values.iter().chain(den_values.iter()).cloned().collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let mut curves = TippettCurves {
        numerator_label: num,
        denominator_label: den,
        n_numerator: num_values.len(),
        n_denominator: den_values.len(),
        points: Vec::with_capacity(xs.len()),
        num_values,
        den_values,
    };
    curves.points = xs
        .into_iter()
        .map(|x| TippettPoint {
            x,
            prop_num_le: curves.prop_num_le(x),
            prop_den_ge: curves.prop_den_ge(x),
        })
        .collect();
    Ok(curves)
}

/// A coverage ellipse of a fitted Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceEllipse {
    pub center: [f64; 2],
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Major-axis direction, radians in `[0, pi)`.
    pub orientation: f64,
    pub coverage: f64,
}

impl ConfidenceEllipse {
    /// Whether a point lies inside or on the ellipse.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let (c, s) = (self.orientation.cos(), self.orientation.sin());
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_major).powi(2) + (v / self.semi_minor).powi(2) <= 1.0
    }
}

/// Closed-form coverage ellipse for a bivariate Gaussian: the contour of
/// squared Mahalanobis distance `q = -2 ln(1 - coverage)`, the chi-square
/// quantile with two degrees of freedom. Semi-axes are `sqrt(q * lambda_i)`
/// along the covariance eigenvectors.
pub fn confidence_ellipse(model: &GaussianModel, coverage: f64) -> Result<ConfidenceEllipse, EvalError> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(EvalError::InvalidCoverage { value: coverage });
    }
    let s = &model.sigma;
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    if !(det > 0.0 && s[(0, 0)] > 0.0) {
        return Err(EvalError::Model(ModelError::SingularCovariance));
    }
    let half_tr = (s[(0, 0)] + s[(1, 1)]) / 2.0;
    let disc = ((s[(0, 0)] - s[(1, 1)]) / 2.0).hypot(s[(0, 1)]);
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    let orientation = if s[(0, 1)] == 0.0 {
        if s[(0, 0)] >= s[(1, 1)] {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        }
    } else {
        crate::types::wrap_axial((l1 - s[(0, 0)]).atan2(s[(0, 1)]))
    };
    let q = -2.0 * (1.0 - coverage).ln();
    Ok(ConfidenceEllipse {
        center: [model.mu.x, model.mu.y],
        semi_major: (q * l1).sqrt(),
        semi_minor: (q * l2.max(0.0)).sqrt(),
        orientation,
        coverage,
    })
}

/// Error tally for one (mechanism, velocity, distance-bucket) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub mechanism: String,
    /// Velocity descriptor, `"unknown"` when absent.
    pub velocity_level: String,
    /// Distance bucket like `"[30,60)"`, or `"unknown"`.
    pub distance_bucket: String,
    pub total: u32,
    pub misclassified: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownTable {
    pub bucket_width_cm: f64,
    pub rows: Vec<BreakdownRow>,
}

/// Tallies threshold-1 misclassifications per acquisition condition.
/// Distances fall into `[k*w, (k+1)*w)` buckets; missing metadata lands in
/// `"unknown"`. Rows come out sorted by mechanism, velocity, then bucket.
pub fn condition_breakdown(
    scored: &[ScoredPattern],
    bucket_width_cm: f64,
    tie_rule: TieRule,
) -> Result<BreakdownTable, EvalError> {
    if !(bucket_width_cm > 0.0 && bucket_width_cm.is_finite()) {
        return Err(EvalError::InvalidZone {
            lower: bucket_width_cm,
            upper: bucket_width_cm,
        });
    }
    let (num, _) = check_scored(scored)?;
    // key: (mechanism, velocity, bucket index); i64::MAX marks unknown so it
    // sorts after every real bucket
    let mut cells: std::collections::BTreeMap<(String, String, i64), (u32, u32)> =
        std::collections::BTreeMap::new();
    for s in scored {
        let velocity = s
            .meta
            .as_ref()
            .and_then(|m| m.velocity_level.clone())
            .unwrap_or_else(|| "unknown".into());
        let bucket = s
            .meta
            .as_ref()
            .and_then(|m| m.distance_cm)
            .map_or(i64::MAX, |d| (d / bucket_width_cm).floor() as i64);
        let decided_num = match s.result.log10_lr.partial_cmp(&0.0).unwrap() {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => tie_rule == TieRule::FavorsNumerator,
        };
        let correct = decided_num == (s.true_label == num);
        let cell = cells
            .entry((s.true_label.clone(), velocity, bucket))
            .or_insert((0, 0));
        cell.0 += 1;
        if !correct {
            cell.1 += 1;
        }
    }
    let rows = cells
        .into_iter()
        .map(|((mechanism, velocity_level, bucket), (total, misclassified))| BreakdownRow {
            mechanism,
            velocity_level,
            distance_bucket: if bucket == i64::MAX {
                "unknown".into()
            } else {
                format!(
                    "[{},{})",
                    bucket as f64 * bucket_width_cm,
                    (bucket + 1) as f64 * bucket_width_cm
                )
            },
            total,
            misclassified,
        })
        .collect();
    Ok(BreakdownTable {
        bucket_width_cm,
        rows,
    })
}

/// Evaluation settings; the defaults match the reference protocol.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Hypothesis placed in the numerator; lexicographically first if unset.
    pub numerator: Option<String>,
    pub tie_rule: TieRule,
    /// Inconclusive zone, as raw LR bounds.
    pub zone_lower: f64,
    pub zone_upper: f64,
    /// Confidence-ellipse coverage.
    pub coverage: f64,
    /// Distance bucket width for the condition breakdown.
    pub distance_bucket_cm: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            numerator: None,
            tie_rule: TieRule::FavorsDenominator,
            zone_lower: 0.5,
            zone_upper: 2.0,
            coverage: 0.95,
            distance_bucket_cm: 30.0,
        }
    }
}

/// Confidence ellipse of the model fitted to one class of the full corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisEllipse {
    pub hypothesis: String,
    pub n_train: usize,
    pub regularized: bool,
    pub ellipse: ConfidenceEllipse,
}

/// Everything the evaluation produces, serializable as one report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub kind: FeatureKind,
    pub numerator_label: String,
    pub denominator_label: String,
    pub n_patterns: usize,
    pub error_rate: f64,
    pub confusion: ThresholdMatrix,
    pub zones: ZoneMatrix,
    pub tippett: TippettCurves,
    /// Ellipses of the per-class models fitted to the full corpus (the
    /// leave-one-out models differ per held-out pattern and are not kept).
    pub confidence_ellipses: Vec<HypothesisEllipse>,
    pub breakdown: BreakdownTable,
    pub results: Vec<ScoredPattern>,
}

/// Runs the full evaluation: LOOCV, confusion matrices, Tippett curves,
/// confidence ellipses and the condition breakdown.
pub fn evaluate(rows: &[FeatureRow], cfg: &EvalConfig) -> Result<EvaluationReport, EvalError> {
    let results = loocv(rows, cfg.numerator.as_deref())?;
    let scored = score(rows, results)?;
    let confusion = confusion_threshold(&scored, 1.0, cfg.tie_rule)?;
    let zones = confusion_zones(&scored, cfg.zone_lower, cfg.zone_upper)?;
    let curves = tippett(&scored)?;
    let breakdown = condition_breakdown(&scored, cfg.distance_bucket_cm, cfg.tie_rule)?;
    let kind = rows[0].kind;
    let mut confidence_ellipses = Vec::with_capacity(2);
    for label in [&confusion.numerator_label, &confusion.denominator_label] {
        let pts: Vec<Vector2<f64>> = rows
            .iter()
            .filter(|r| r.mechanism.label() == label)
            .map(|r| r.point())
            .collect();
        let model = GaussianModel::fit(&pts, kind, label.clone())?;
        confidence_ellipses.push(HypothesisEllipse {
            hypothesis: label.clone(),
            n_train: model.n_train,
            regularized: model.regularized,
            ellipse: confidence_ellipse(&model, cfg.coverage)?,
        });
    }
    Ok(EvaluationReport {
        kind,
        numerator_label: confusion.numerator_label.clone(),
        denominator_label: confusion.denominator_label.clone(),
        n_patterns: rows.len(),
        error_rate: confusion.error_rate(),
        confusion,
        zones,
        tippett: curves,
        confidence_ellipses,
        breakdown,
        results: scored,
    })
}

/// Fits one model per class on the full row set (no hold-out). Used by the
/// `fit` workflow; requires the same minimum class size as a Gaussian fit.
pub fn fit_class_models(rows: &[FeatureRow]) -> Result<Vec<GaussianModel>, EvalError> {
    fit_class_models_with(rows, crate::model::CovarianceDivisor::MaximumLikelihood)
}

pub fn fit_class_models_with(
    rows: &[FeatureRow],
    divisor: crate::model::CovarianceDivisor,
) -> Result<Vec<GaussianModel>, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::Empty);
    }
    if rows.iter().any(|r| r.kind != rows[0].kind) {
        return Err(EvalError::MixedKinds);
    }
    let labels: BTreeSet<String> = rows.iter().map(|r| r.mechanism.label().to_string()).collect();
    labels
        .into_iter()
        .map(|label| {
            let pts: Vec<Vector2<f64>> = rows
                .iter()
                .filter(|r| r.mechanism.label() == label)
                .map(|r| r.point())
                .collect();
            GaussianModel::fit_with(&pts, rows[0].kind, label, divisor).map_err(EvalError::from)
        })
        .collect()
}
