//! Bivariate Gaussian mechanism models and likelihood ratios.
//!
//! Each mechanism hypothesis gets a Gaussian fitted to the feature vectors
//! of its training patterns. The weight of evidence for hypothesis `H1`
//! against `H2` is the likelihood ratio `LR = p(f | H1) / p(f | H2)`,
//! computed in log space so that extreme ratios stay representable.
//! [`generalized_lr`] extends the denominator to a prior-weighted mixture
//! over several alternative mechanisms.

use nalgebra::{Matrix2, Vector2};

use crate::types::{FeatureKind, FeatureVector};

const LN_2PI: f64 = 1.8378770664093453;

/// Smallest ridge added to a covariance that is not positive definite.
pub const COVARIANCE_RIDGE: f64 = 1e-8;

/// Divisor used for the covariance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceDivisor {
    /// Maximum-likelihood estimate, divide by `N`.
    #[default]
    MaximumLikelihood,
    /// Unbiased estimate, divide by `N - 1`.
    Unbiased,
}

/// A fitted (or loaded) bivariate Gaussian for one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    pub mu: Vector2<f64>,
    pub sigma: Matrix2<f64>,
    /// Training sample count (0 for hand-built models).
    pub n_train: usize,
    pub kind: FeatureKind,
    /// Hypothesis label, e.g. "gunshot".
    pub hypothesis: String,
    /// Whether a ridge was added to make the covariance positive definite.
    pub regularized: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("need at least {min} samples to fit a bivariate Gaussian, got {count}")]
    TooFewSamples { count: usize, min: usize },
    #[error("feature vector contains a non-finite value")]
    NonFiniteInput,
    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,
    #[error("feature kinds differ: {left} vs {right}")]
    KindMismatch {
        left: FeatureKind,
        right: FeatureKind,
    },
    #[error("hypothesis set has no alternatives")]
    EmptyAlternatives,
    #[error("duplicate hypothesis label {0:?}")]
    DuplicateHypothesis(String),
    #[error("{count} models but {weights} weights")]
    WeightCountMismatch { count: usize, weights: usize },
    #[error("prior weights must be finite, non-negative and not all zero")]
    NonPositiveWeights,
}

impl GaussianModel {
    /// Maximum-likelihood fit (divisor `N`).
    pub fn fit(
        features: &[Vector2<f64>],
        kind: FeatureKind,
        hypothesis: impl Into<String>,
    ) -> Result<Self, ModelError> {
        Self::fit_with(features, kind, hypothesis, CovarianceDivisor::MaximumLikelihood)
    }

    /// Fit with an explicit covariance divisor.
    ///
    /// Requires at least 3 samples; with fewer, the 2x2 covariance is always
    /// singular and the model would be pure ridge. If the estimate still
    /// comes out non-positive-definite (collinear or identical samples), a
    /// ridge `lambda * I` is added, starting at [`COVARIANCE_RIDGE`] and
    /// doubling until the Cholesky factorization succeeds; the result is
    /// flagged `regularized`.
    pub fn fit_with(
        features: &[Vector2<f64>],
        kind: FeatureKind,
        hypothesis: impl Into<String>,
        divisor: CovarianceDivisor,
    ) -> Result<Self, ModelError> {
        let n = features.len();
        if n < 3 {
            return Err(ModelError::TooFewSamples { count: n, min: 3 });
        }
        if features.iter().any(|f| !f.x.is_finite() || !f.y.is_finite()) {
            return Err(ModelError::NonFiniteInput);
        }
        let nf = n as f64;
        let mu = features.iter().sum::<Vector2<f64>>() / nf;
        let mut sigma = Matrix2::zeros();
        for f in features {
            let d = f - mu;
            sigma += d * d.transpose();
        }
        sigma /= match divisor {
            CovarianceDivisor::MaximumLikelihood => nf,
            CovarianceDivisor::Unbiased => nf - 1.0,
        };
        let mut regularized = false;
        let mut lambda = COVARIANCE_RIDGE;
        while !is_positive_definite(&sigma) {
            sigma[(0, 0)] += lambda;
            sigma[(1, 1)] += lambda;
            lambda *= 2.0;
            regularized = true;
        }
        Ok(GaussianModel {
            mu,
            sigma,
            n_train: n,
            kind,
            hypothesis: hypothesis.into(),
            regularized,
        })
    }

    /// Natural-log density at `f`.
    pub fn log_density(&self, f: Vector2<f64>) -> Result<f64, ModelError> {
        let s = &self.sigma;
        let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
        if !(det > 0.0 && s[(0, 0)] > 0.0) || !det.is_finite() {
            return Err(ModelError::SingularCovariance);
        }
        let d = f - self.mu;
        let maha = (d.x * d.x * s[(1, 1)] - 2.0 * d.x * d.y * s[(0, 1)] + d.y * d.y * s[(0, 0)]) / det;
        Ok(-LN_2PI - 0.5 * det.ln() - 0.5 * maha)
    }

    /// Density at `f`. Prefer [`GaussianModel::log_density`] for ratios.
    pub fn density(&self, f: Vector2<f64>) -> Result<f64, ModelError> {
        Ok(self.log_density(f)?.exp())
    }
}

fn is_positive_definite(s: &Matrix2<f64>) -> bool {
    // Sylvester's criterion, plus a relative near-singularity guard so a
    // numerically rank-one covariance also gets the ridge
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    if !(s[(0, 0)] > 0.0 && det > 0.0 && det.is_finite()) {
        return false;
    }
    let scale = s.trace() * 0.5;
    det > (scale * scale) * 1e-12
}

/// Likelihood ratio outcome for one pattern.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LRResult {
    pub pattern_id: String,
    pub kind: FeatureKind,
    /// `p(f | numerator) / p(f | denominator)`; may overflow to infinity
    /// for extreme evidence, in which case `log10_lr` is still exact.
    pub lr: f64,
    pub log10_lr: f64,
    pub numerator_hypothesis: String,
    pub denominator_hypothesis: String,
}

/// Two-hypothesis likelihood ratio.
///
/// Swapping numerator and denominator flips the sign of `log10_lr` exactly
/// (the subtraction is reversed, so no new rounding occurs).
pub fn likelihood_ratio(
    f: &FeatureVector,
    numerator: &GaussianModel,
    denominator: &GaussianModel,
) -> Result<LRResult, ModelError> {
    check_kind(f.kind, numerator.kind)?;
    check_kind(f.kind, denominator.kind)?;
    let x = feature_point(f)?;
    let ln_lr = numerator.log_density(x)? - denominator.log_density(x)?;
    Ok(make_result(
        f,
        ln_lr,
        numerator.hypothesis.clone(),
        denominator.hypothesis.clone(),
    ))
}

/// A non-empty bundle of alternative-hypothesis models with optional prior
/// weights. Weights are normalized to sum to one at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSet {
    models: Vec<GaussianModel>,
    weights: Vec<f64>,
}

impl HypothesisSet {
    /// Equal prior weights.
    pub fn new(models: Vec<GaussianModel>) -> Result<Self, ModelError> {
        let w = vec![1.0; models.len()];
        Self::with_weights(models, w)
    }

    /// Explicit prior weights (any positive scale; normalized internally).
    pub fn with_weights(models: Vec<GaussianModel>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if models.is_empty() {
            return Err(ModelError::EmptyAlternatives);
        }
        if weights.len() != models.len() {
            return Err(ModelError::WeightCountMismatch {
                count: models.len(),
                weights: weights.len(),
            });
        }
        for w in models.windows(2) {
            check_kind(w[0].kind, w[1].kind)?;
        }
        for (i, m) in models.iter().enumerate() {
            if models[..i].iter().any(|o| o.hypothesis == m.hypothesis) {
                return Err(ModelError::DuplicateHypothesis(m.hypothesis.clone()));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ModelError::NonPositiveWeights);
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(ModelError::NonPositiveWeights);
        }
        Ok(HypothesisSet {
            models,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn models(&self) -> &[GaussianModel] {
        &self.models
    }

    /// Normalized weights, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> FeatureKind {
        self.models[0].kind
    }
}

/// Generalized likelihood ratio against a weighted mixture of alternatives:
///
/// ```text
/// LR = p(f | main) / sum_i w_i p(f | alt_i)
/// ```
///
/// The mixture is evaluated with log-sum-exp. With a single equally-weighted
/// alternative this reduces bit-for-bit to [`likelihood_ratio`].
pub fn generalized_lr(
    f: &FeatureVector,
    main: &GaussianModel,
    alternatives: &HypothesisSet,
) -> Result<LRResult, ModelError> {
    check_kind(f.kind, main.kind)?;
    check_kind(f.kind, alternatives.kind())?;
    let x = feature_point(f)?;
    let ln_main = main.log_density(x)?;
    let lds: Vec<f64> = alternatives
        .models()
        .iter()
        .map(|m| m.log_density(x))
        .collect::<Result<_, _>>()?;
    let peak = lds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mix: f64 = lds
        .iter()
        .zip(alternatives.weights())
        .map(|(ld, w)| w * (ld - peak).exp())
        .sum();
    let ln_den = peak + mix.ln();
    let label = alternatives
        .models()
        .iter()
        .map(|m| m.hypothesis.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Ok(make_result(f, ln_main - ln_den, main.hypothesis.clone(), label))
}

fn make_result(f: &FeatureVector, ln_lr: f64, num: String, den: String) -> LRResult {
    let log10_lr = ln_lr / std::f64::consts::LN_10;
    LRResult {
        pattern_id: f.pattern_id.clone(),
        kind: f.kind,
        lr: 10f64.powf(log10_lr),
        log10_lr,
        numerator_hypothesis: num,
        denominator_hypothesis: den,
    }
}

fn feature_point(f: &FeatureVector) -> Result<Vector2<f64>, ModelError> {
    if !f.f1.is_finite() || !f.f2.is_finite() {
        return Err(ModelError::NonFiniteInput);
    }
    Ok(Vector2::new(f.f1, f.f2))
}

fn check_kind(left: FeatureKind, right: FeatureKind) -> Result<(), ModelError> {
    if left == right {
        Ok(())
    } else {
        Err(ModelError::KindMismatch { left, right })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fv(f1: f64, f2: f64) -> FeatureVector {
        FeatureVector {
            pattern_id: "t".into(),
            kind: FeatureKind::Circular,
            f1,
            f2,
        }
    }

    fn model(mu: (f64, f64), sigma: Matrix2<f64>, hyp: &str) -> GaussianModel {
        GaussianModel {
            mu: Vector2::new(mu.0, mu.1),
            sigma,
            n_train: 0,
            kind: FeatureKind::Circular,
            hypothesis: hyp.into(),
            regularized: false,
        }
    }

    #[test]
    fn fit_oracle_three_points() {
        let pts = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
        ];
        let m = GaussianModel::fit(&pts, FeatureKind::Circular, "h1").unwrap();
        assert_relative_eq!(m.mu.x, 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(m.mu.y, 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(m.sigma[(0, 0)], 2.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(m.sigma[(1, 1)], 2.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(m.sigma[(0, 1)], -1.0 / 9.0, max_relative = 1e-14);
        assert!(!m.regularized);
        assert_eq!(m.n_train, 3);
    }

    #[test]
    fn unbiased_divisor_scales_by_n_over_n_minus_1() {
        let pts = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
        ];
        let ml = GaussianModel::fit(&pts, FeatureKind::Circular, "h").unwrap();
        let ub = GaussianModel::fit_with(&pts, FeatureKind::Circular, "h", CovarianceDivisor::Unbiased)
            .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(ub.sigma[(i, j)], ml.sigma[(i, j)] * 1.5, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn degenerate_samples_get_a_ridge() {
        let pts = vec![Vector2::new(2.0, 3.0); 5];
        let m = GaussianModel::fit(&pts, FeatureKind::Circular, "h").unwrap();
        assert!(m.regularized);
        assert!(m.log_density(Vector2::new(2.0, 3.0)).unwrap().is_finite());
        // collinear samples too
        let line: Vec<Vector2<f64>> = (0..6).map(|i| Vector2::new(i as f64, 2.0 * i as f64)).collect();
        let m = GaussianModel::fit(&line, FeatureKind::Circular, "h").unwrap();
        assert!(m.regularized);
        assert!(m.log_density(Vector2::new(0.0, 0.0)).unwrap().is_finite());
    }

    #[test]
    fn fit_rejects_small_or_bad_input() {
        let two = vec![Vector2::new(0.0, 0.0), Vector2::new(1.0, 1.0)];
        assert_eq!(
            GaussianModel::fit(&two, FeatureKind::Circular, "h"),
            Err(ModelError::TooFewSamples { count: 2, min: 3 })
        );
        let nan = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(f64::NAN, 0.0),
            Vector2::new(1.0, 1.0),
        ];
        assert_eq!(
            GaussianModel::fit(&nan, FeatureKind::Circular, "h"),
            Err(ModelError::NonFiniteInput)
        );
    }

    #[test]
    fn log_density_oracles() {
        let std2 = model((0.0, 0.0), Matrix2::identity(), "h");
        // standard bivariate normal at the mean: 1 / (2 pi)
        assert_relative_eq!(
            std2.density(Vector2::new(0.0, 0.0)).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI),
            max_relative = 1e-12
        );
        // Mahalanobis distance 2 at (2, 0) ... exp(-2) / (2 pi)
        assert_relative_eq!(
            std2.density(Vector2::new(2.0, 0.0)).unwrap(),
            (-2.0f64).exp() / (2.0 * std::f64::consts::PI),
            max_relative = 1e-12
        );
        let wide = model((0.0, 0.0), Matrix2::identity() * 4.0, "h");
        // det = 16, sqrt(det) = 4: peak density 1 / (8 pi)
        assert_relative_eq!(
            wide.density(Vector2::new(0.0, 0.0)).unwrap(),
            1.0 / (8.0 * std::f64::consts::PI),
            max_relative = 1e-12
        );
    }

    #[test]
    fn log_density_rejects_singular_sigma() {
        let bad = model((0.0, 0.0), Matrix2::new(1.0, 1.0, 1.0, 1.0), "h");
        assert_eq!(
            bad.log_density(Vector2::new(0.0, 0.0)),
            Err(ModelError::SingularCovariance)
        );
    }

    #[test]
    fn lr_oracle_standard_normals() {
        let h1 = model((0.0, 0.0), Matrix2::identity(), "h1");
        let h2 = model((2.0, 0.0), Matrix2::identity(), "h2");
        let r = likelihood_ratio(&fv(0.0, 0.0), &h1, &h2).unwrap();
        // ln LR = (-ln 2pi) - (-ln 2pi - 2) = 2
        assert_relative_eq!(r.lr, std::f64::consts::E.powi(2), max_relative = 1e-12);
        assert_relative_eq!(r.log10_lr, 2.0 / std::f64::consts::LN_10, max_relative = 1e-12);
        assert_eq!(r.numerator_hypothesis, "h1");
        assert_eq!(r.denominator_hypothesis, "h2");
        // construction keeps lr and log10_lr consistent
        assert_relative_eq!(r.lr, 10f64.powf(r.log10_lr), max_relative = 1e-12);
    }

    #[test]
    fn swapping_hypotheses_negates_log_lr_exactly() {
        let h1 = model((0.1, -0.4), Matrix2::new(1.0, 0.3, 0.3, 2.0), "h1");
        let h2 = model((1.2, 0.7), Matrix2::new(0.5, -0.1, -0.1, 0.8), "h2");
        let f = fv(0.33, -0.21);
        let fwd = likelihood_ratio(&f, &h1, &h2).unwrap();
        let rev = likelihood_ratio(&f, &h2, &h1).unwrap();
        assert_eq!(fwd.log10_lr, -rev.log10_lr);
        assert_relative_eq!(fwd.lr * rev.lr, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let h1 = model((0.0, 0.0), Matrix2::identity(), "h1");
        let mut h2 = model((1.0, 0.0), Matrix2::identity(), "h2");
        h2.kind = FeatureKind::Spherical;
        assert!(matches!(
            likelihood_ratio(&fv(0.0, 0.0), &h1, &h2),
            Err(ModelError::KindMismatch { .. })
        ));
    }

    #[test]
    fn generalized_reduces_to_pairwise_for_one_alternative() {
        let h1 = model((0.3, 0.1), Matrix2::new(1.1, 0.2, 0.2, 0.9), "h1");
        let h2 = model((-0.8, 0.5), Matrix2::new(0.7, 0.0, 0.0, 1.3), "h2");
        let f = fv(0.05, 0.4);
        let pair = likelihood_ratio(&f, &h1, &h2).unwrap();
        let set = HypothesisSet::new(vec![h2]).unwrap();
        let gen = generalized_lr(&f, &h1, &set).unwrap();
        assert_eq!(pair.log10_lr, gen.log10_lr);
        assert_eq!(pair.lr, gen.lr);
    }

    #[test]
    fn generalized_mixture_oracle() {
        // main N((0,0), I) at f=(1,0), alternatives N((2,0), I), N((-2,0), I)
        // equally weighted: LR = 2 / (1 + exp(-4))
        let main = model((0.0, 0.0), Matrix2::identity(), "main");
        let a1 = model((2.0, 0.0), Matrix2::identity(), "a1");
        let a2 = model((-2.0, 0.0), Matrix2::identity(), "a2");
        let set = HypothesisSet::new(vec![a1.clone(), a2.clone()]).unwrap();
        let r = generalized_lr(&fv(1.0, 0.0), &main, &set).unwrap();
        assert_relative_eq!(r.lr, 2.0 / (1.0 + (-4.0f64).exp()), max_relative = 1e-12);
        assert_eq!(r.denominator_hypothesis, "a1+a2");

        // equal log-densities make the mixture independent of the weights
        let sym = fv(0.0, 2.0);
        let even = generalized_lr(&sym, &main, &set).unwrap();
        let skewed = HypothesisSet::with_weights(vec![a1, a2], vec![3.0, 1.0]).unwrap();
        let skew = generalized_lr(&sym, &main, &skewed).unwrap();
        assert_relative_eq!(even.lr, skew.lr, max_relative = 1e-12);
    }

    #[test]
    fn hypothesis_set_validation() {
        let a = model((0.0, 0.0), Matrix2::identity(), "a");
        let b = model((1.0, 0.0), Matrix2::identity(), "b");
        assert_eq!(HypothesisSet::new(vec![]).unwrap_err(), ModelError::EmptyAlternatives);
        assert_eq!(
            HypothesisSet::with_weights(vec![a.clone()], vec![1.0, 2.0]).unwrap_err(),
            ModelError::WeightCountMismatch { count: 1, weights: 2 }
        );
        assert_eq!(
            HypothesisSet::with_weights(vec![a.clone(), b.clone()], vec![0.0, 0.0]).unwrap_err(),
            ModelError::NonPositiveWeights
        );
        assert_eq!(
            HypothesisSet::with_weights(vec![a.clone(), b.clone()], vec![-1.0, 2.0]).unwrap_err(),
            ModelError::NonPositiveWeights
        );
        assert_eq!(
            HypothesisSet::new(vec![a.clone(), a.clone()]).unwrap_err(),
            ModelError::DuplicateHypothesis("a".into())
        );
        let set = HypothesisSet::with_weights(vec![a, b], vec![1.0, 3.0]).unwrap();
        assert_relative_eq!(set.weights()[0], 0.25);
        assert_relative_eq!(set.weights()[1], 0.75);
    }
}
