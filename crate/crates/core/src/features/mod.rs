//! Feature maps: ellipse tables to two-dimensional vectors.
//!
//! Two maps are provided, selected by [`FeatureKind`]:
//!
//! * **circular**: `f1 = logit(Var[phi])`, `f2 = logit(Var[alpha])`, the
//!   circular variances of the stain orientations (axial) and impact angles.
//! * **spherical**: `f1 = logit(t3/t2)`, `f2 = ln(t1 t2 t3)` from the
//!   descending eigenvalues of the direction scatter matrix, mixing both
//!   angles into one statistic per stain.
//!
//! Variances of 0 or 1 and zero eigenvalues occur for degenerate but legal
//! inputs (identical stains), so inputs to `logit`/`ln` are clamped away
//! from the boundary: variances to `[eps, 1-eps]`, eigenvalues to at least
//! `eigenvalue_floor`. Natural logarithms throughout.

mod circular;
mod spherical;

pub use circular::{circular_mean_resultant, circular_variance, impact_angle, AngleSample, Topology};
pub use spherical::{
    direction_vector, scatter_matrix, spherical_shape, spherical_shape_with, DirectionSet,
    ScatterMatrix, ShapeCategory, ShapeDiagnosis, ShapeThresholds,
};

use serde::Deserialize;

use crate::types::{FeatureKind, FeatureVector, ValidatedPattern};

/// Knobs for the feature maps. The defaults reproduce the reference
/// behavior; `normalized_scatter` switches the spherical map to the
/// eigenvalues of `T/n`, which removes the dependence of `f2` on the
/// stain count.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Clamp for logit inputs, keeping them in `[eps, 1-eps]`.
    pub logit_eps: f64,
    /// Lower bound applied to scatter eigenvalues before ratios and logs.
    pub eigenvalue_floor: f64,
    /// Use `T/n` instead of `T` for the spherical map.
    pub normalized_scatter: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            logit_eps: 1e-6,
            eigenvalue_floor: 1e-9,
            normalized_scatter: false,
        }
    }
}

/// Errors from the feature primitives. The pattern-level maps cannot hit
/// these: a [`ValidatedPattern`] guarantees enough finite ellipses.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("angle sample is empty")]
    EmptySample,
    #[error("angle is not finite: {value}")]
    NonFiniteAngle { value: f64 },
    #[error("need at least 2 direction vectors for a scatter matrix, got {count}")]
    TooFewVectors { count: usize },
    #[error("vector {index} is not unit length (norm {norm})")]
    NotUnitVector { index: usize, norm: f64 },
    #[error("vector {index} points into the upper hemisphere (z = {z})")]
    UpperHemisphere { index: usize, z: f64 },
}

/// Log-odds. Input must already be inside `(0, 1)`; see [`clamp_unit`].
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Clamps a probability-like value into `[eps, 1-eps]` so its logit is finite.
pub fn clamp_unit(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps)
}

/// Circular feature vector of a validated pattern (default config).
pub fn circular_features(pattern: &ValidatedPattern) -> FeatureVector {
    circular_features_with(pattern, &FeatureConfig::default())
}

pub fn circular_features_with(pattern: &ValidatedPattern, cfg: &FeatureConfig) -> FeatureVector {
    let phis = AngleSample::axial(pattern.ellipses.iter().map(|e| e.phi).collect())
        .expect("validated pattern is non-empty");
    let alphas = AngleSample::circular(pattern.ellipses.iter().map(impact_angle).collect())
        .expect("validated pattern is non-empty");
    FeatureVector {
        pattern_id: pattern.id.clone(),
        kind: FeatureKind::Circular,
        f1: logit(clamp_unit(circular_variance(&phis), cfg.logit_eps)),
        f2: logit(clamp_unit(circular_variance(&alphas), cfg.logit_eps)),
    }
}

/// Spherical feature vector of a validated pattern (default config).
pub fn spherical_features(pattern: &ValidatedPattern) -> FeatureVector {
    spherical_features_with(pattern, &FeatureConfig::default())
}

pub fn spherical_features_with(pattern: &ValidatedPattern, cfg: &FeatureConfig) -> FeatureVector {
    let set = DirectionSet::from_ellipses(&pattern.ellipses)
        .expect("validated pattern is non-empty");
    let sm = scatter_matrix(&set).expect("validated pattern has at least 2 ellipses");
    let scale = if cfg.normalized_scatter {
        sm.n as f64
    } else {
        1.0
    };
    let t: Vec<f64> = sm
        .eigenvalues
        .iter()
        .map(|v| (v / scale).max(cfg.eigenvalue_floor))
        .collect();
    FeatureVector {
        pattern_id: pattern.id.clone(),
        kind: FeatureKind::Spherical,
        f1: logit(clamp_unit(t[2] / t[1], cfg.logit_eps)),
        f2: (t[0] * t[1] * t[2]).ln(),
    }
}

/// Dispatches on the feature kind.
pub fn feature_vector(pattern: &ValidatedPattern, kind: FeatureKind, cfg: &FeatureConfig) -> FeatureVector {
    match kind {
        FeatureKind::Circular => circular_features_with(pattern, cfg),
        FeatureKind::Spherical => spherical_features_with(pattern, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{validate_pattern, Ellipse, PatternRecord};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pattern(ellipses: Vec<Ellipse>) -> ValidatedPattern {
        validate_pattern(PatternRecord::new("t", ellipses)).unwrap()
    }

    #[test]
    fn logit_oracles() {
        assert_relative_eq!(logit(0.5), 0.0);
        assert_relative_eq!(logit(0.8), 4.0f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(logit(1e-6), -13.815509557963773, max_relative = 1e-9);
        assert_eq!(logit(clamp_unit(0.0, 1e-6)), logit(1e-6));
        assert_eq!(logit(clamp_unit(1.0, 1e-6)), logit(1.0 - 1e-6));
    }

    #[test]
    fn identical_stains_hit_the_clamp_floor() {
        // same shape and orientation everywhere: both variances are exactly 0
        let e: Vec<Ellipse> = (0..8)
            .map(|i| Ellipse::new(i as f64 * 10.0, 0.0, 2.0, 1.0, 0.7).unwrap())
            .collect();
        let f = circular_features(&pattern(e));
        let floor = logit(1e-6);
        assert_eq!(f.f1, floor);
        assert_eq!(f.f2, floor);
    }

    #[test]
    fn spread_orientations_move_f1_up() {
        let aligned: Vec<Ellipse> = (0..12)
            .map(|i| Ellipse::new(i as f64, 0.0, 2.0, 1.0, 0.7 + 0.01 * i as f64).unwrap())
            .collect();
        let spread: Vec<Ellipse> = (0..12)
            .map(|i| Ellipse::new(i as f64, 0.0, 2.0, 1.0, PI * i as f64 / 12.0).unwrap())
            .collect();
        let fa = circular_features(&pattern(aligned));
        let fs = circular_features(&pattern(spread));
        assert!(fa.f1 < fs.f1, "aligned {} vs spread {}", fa.f1, fs.f1);
    }

    #[test]
    fn spherical_feature_oracle_from_planted_eigenvalues() {
        // logit(2/8) = ln(1/3), ln(20*8*2) = ln(320); checked against a
        // scatter matrix diag(20, 8, 2) fed through the same formulas
        let t = [20.0, 8.0, 2.0];
        let f1 = logit(clamp_unit(t[2] / t[1], 1e-6));
        let f2: f64 = (t[0] * t[1] * t[2]).ln();
        assert_relative_eq!(f1, (1.0f64 / 3.0).ln(), max_relative = 1e-12);
        assert_relative_eq!(f2, 320.0f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(f1, -1.0986122886681098, max_relative = 1e-9);
        assert_relative_eq!(f2, 5.768320995793772, max_relative = 1e-9);
    }

    #[test]
    fn normalized_scatter_shifts_f2_by_3_log_n() {
        let e: Vec<Ellipse> = (0..10)
            .map(|i| {
                Ellipse::new(0.0, 0.0, 2.0 + 0.2 * i as f64, 1.0 + 0.05 * i as f64, 0.3 * i as f64)
                    .unwrap()
            })
            .collect();
        let p = pattern(e);
        let plain = spherical_features(&p);
        let normed = spherical_features_with(
            &p,
            &FeatureConfig {
                normalized_scatter: true,
                ..FeatureConfig::default()
            },
        );
        // f1 is a ratio, unchanged; f2 = ln(det T / n^3)
        assert_relative_eq!(plain.f1, normed.f1, max_relative = 1e-12);
        assert_relative_eq!(normed.f2, plain.f2 - 3.0 * 10.0f64.ln(), max_relative = 1e-9);
    }

    #[test]
    fn pole_cluster_floors_the_determinant() {
        // all circular stains: every direction is the pole, T is rank one
        let e: Vec<Ellipse> = (0..6)
            .map(|i| Ellipse::new(i as f64, 0.0, 3.0, 3.0, 0.0).unwrap())
            .collect();
        let f = spherical_features(&pattern(e));
        // t2 = t3 = floor, ratio clamps to 1 - eps
        assert_relative_eq!(f.f1, logit(1.0 - 1e-6), max_relative = 1e-9);
        // det = 6 * 1e-9 * 1e-9
        assert_relative_eq!(f.f2, (6.0 * 1e-18f64).ln(), max_relative = 1e-9);
    }
}
