//! Shared data types: ellipses, patterns, mechanisms, feature vectors.
//!
//! An [`Ellipse`] is the unit of evidence: one elliptical stain with center
//! `(x, y)` in pixels, semi-axes `a >= b > 0` and orientation `phi`, the
//! angle of the major axis measured counter-clockwise from the x-axis.
//! Orientation is axial (an ellipse looks the same rotated by half a turn),
//! so `phi` lives in `[0, pi)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Patterns with fewer ellipses than this are rejected as too sparse for
/// the directional statistics to mean anything.
pub const MIN_ELLIPSES: usize = 6;

/// One elliptical stain. Fields are public so records can be assembled from
/// any source; use [`Ellipse::new`] to get normalization and validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    /// Center, x (pixels).
    pub x: f64,
    /// Center, y (pixels).
    pub y: f64,
    /// Semi-major axis (pixels).
    pub a: f64,
    /// Semi-minor axis (pixels).
    pub b: f64,
    /// Major-axis orientation in radians, `[0, pi)`.
    pub phi: f64,
}

impl Ellipse {
    /// Builds a normalized ellipse from raw measurements (angle in radians).
    ///
    /// If the given `b` exceeds `a` the axes are swapped and the orientation
    /// rotated by a quarter turn, so callers may pass axes in either order.
    /// The orientation is wrapped into `[0, pi)`. Non-finite or non-positive
    /// axes are rejected.
    pub fn new(x: f64, y: f64, a: f64, b: f64, phi: f64) -> Result<Self, PatternRejection> {
        for (name, v) in [("x", x), ("y", y), ("a", a), ("b", b), ("phi", phi)] {
            if !v.is_finite() {
                return Err(PatternRejection::bad_value(format!("{name} is not finite")));
            }
        }
        if a <= 0.0 || b <= 0.0 {
            return Err(PatternRejection::bad_value(format!(
                "semi-axes must be positive (got a={a}, b={b})"
            )));
        }
        let (a, b, phi) = if b > a {
            (b, a, phi + PI / 2.0)
        } else {
            (a, b, phi)
        };
        Ok(Ellipse {
            x,
            y,
            a,
            b,
            phi: wrap_axial(phi),
        })
    }

    /// Like [`Ellipse::new`] but with the orientation in degrees, as used by
    /// the CSV interchange format.
    pub fn from_degrees(x: f64, y: f64, a: f64, b: f64, phi_deg: f64) -> Result<Self, PatternRejection> {
        Self::new(x, y, a, b, phi_deg.to_radians())
    }

    /// Orientation in degrees, `[0, 180)`.
    pub fn phi_degrees(&self) -> f64 {
        self.phi.to_degrees()
    }

    /// Aspect ratio `b / a`, in `(0, 1]` for a valid ellipse.
    pub fn axis_ratio(&self) -> f64 {
        self.b / self.a
    }

    /// Checks the type invariants on the raw fields. Returns a human-readable
    /// reason on failure. Used by [`validate_pattern`] since fields are public
    /// and bypassing the constructor is possible.
    pub fn check(&self) -> Result<(), String> {
        for (name, v) in [
            ("x", self.x),
            ("y", self.y),
            ("a", self.a),
            ("b", self.b),
            ("phi", self.phi),
        ] {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
        }
        if self.b <= 0.0 {
            return Err(format!("b must be positive (got {})", self.b));
        }
        if self.a < self.b {
            return Err(format!("a must be >= b (got a={}, b={})", self.a, self.b));
        }
        if !(0.0..PI).contains(&self.phi) {
            return Err(format!("phi must lie in [0, pi) (got {})", self.phi));
        }
        Ok(())
    }
}

/// Wraps an axial angle into `[0, pi)`.
pub fn wrap_axial(phi: f64) -> f64 {
    let p = phi.rem_euclid(PI);
    // rem_euclid can round up to the modulus itself for tiny negative inputs
    if p >= PI {
        0.0
    } else {
        p
    }
}

/// Causal mechanism label for a pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    Gunshot,
    Impact,
    /// Any other label, kept verbatim (lowercased).
    Other(String),
}

impl Mechanism {
    /// Parses a label; never fails, unknown labels become [`Mechanism::Other`].
    pub fn from_label(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "gunshot" => Mechanism::Gunshot,
            "impact" => Mechanism::Impact,
            other => Mechanism::Other(other.to_string()),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Mechanism::Gunshot => "gunshot",
            Mechanism::Impact => "impact",
            Mechanism::Other(s) => s,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mechanism {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Mechanism::from_label(s))
    }
}

impl Serialize for Mechanism {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Mechanism {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(Mechanism::from_label(&s))
    }
}

/// Acquisition conditions attached to a pattern, when known.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    /// Distance from blood source to target surface, centimeters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_cm: Option<f64>,
    /// Free-form velocity descriptor, e.g. "low" or "high".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_level: Option<String>,
}

impl SourceMeta {
    pub fn is_empty(&self) -> bool {
        self.distance_cm.is_none() && self.velocity_level.is_none()
    }
}

/// A pattern as parsed from disk or extracted from an image: an id, the
/// ellipse table, and whatever labels travelled with it.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternRecord {
    pub id: String,
    pub ellipses: Vec<Ellipse>,
    pub mechanism: Option<Mechanism>,
    pub source_meta: Option<SourceMeta>,
}

impl PatternRecord {
    pub fn new(id: impl Into<String>, ellipses: Vec<Ellipse>) -> Self {
        PatternRecord {
            id: id.into(),
            ellipses,
            mechanism: None,
            source_meta: None,
        }
    }

    pub fn with_mechanism(mut self, m: Mechanism) -> Self {
        self.mechanism = Some(m);
        self
    }
}

/// Why a pattern (or one of its ellipses) was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PatternRejection {
    #[error("pattern has {count} ellipses, need at least {MIN_ELLIPSES}")]
    TooFewEllipses { count: usize },
    #[error("ellipse {index}: {reason}")]
    InvalidEllipse { index: usize, reason: String },
}

impl PatternRejection {
    fn bad_value(reason: String) -> Self {
        PatternRejection::InvalidEllipse { index: 0, reason }
    }
}

/// A pattern that passed [`validate_pattern`]: at least [`MIN_ELLIPSES`]
/// ellipses, every one satisfying the type invariants. Feature extraction
/// only accepts validated patterns, so downstream code never re-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPattern(PatternRecord);

impl ValidatedPattern {
    pub fn record(&self) -> &PatternRecord {
        &self.0
    }

    pub fn into_record(self) -> PatternRecord {
        self.0
    }
}

impl std::ops::Deref for ValidatedPattern {
    type Target = PatternRecord;

    fn deref(&self) -> &PatternRecord {
        &self.0
    }
}

/// Admits a pattern to the modeling stages.
///
/// Rejects patterns with five or fewer ellipses (sparse patterns make the
/// circular variances and scatter eigenvalues meaningless) and patterns
/// containing any ellipse that violates the invariants `a >= b > 0`,
/// `phi` in `[0, pi)`, all fields finite.
pub fn validate_pattern(pattern: PatternRecord) -> Result<ValidatedPattern, PatternRejection> {
    if pattern.ellipses.len() < MIN_ELLIPSES {
        return Err(PatternRejection::TooFewEllipses {
            count: pattern.ellipses.len(),
        });
    }
    for (index, e) in pattern.ellipses.iter().enumerate() {
        if let Err(reason) = e.check() {
            return Err(PatternRejection::InvalidEllipse { index, reason });
        }
    }
    Ok(ValidatedPattern(pattern))
}

/// Which two-dimensional feature map produced a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Separate circular statistics for orientations and impact angles.
    Circular,
    /// Scatter-matrix statistics of per-stain direction vectors on the
    /// lower unit hemisphere.
    Spherical,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Circular => "circular",
            FeatureKind::Spherical => "spherical",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circular" => Ok(FeatureKind::Circular),
            "spherical" => Ok(FeatureKind::Spherical),
            other => Err(format!("unknown feature kind {other:?} (expected \"circular\" or \"spherical\")")),
        }
    }
}

/// A pattern condensed to two numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub pattern_id: String,
    pub kind: FeatureKind,
    pub f1: f64,
    pub f2: f64,
}
