//! Circular statistics for stain orientations and impact angles.
//!
//! Orientations are axial (defined modulo a half turn), so they are doubled
//! before any trigonometric averaging and the mean is halved afterwards.
//! Impact angles live on `(0, pi/2]` and are treated as ordinary circular
//! data without doubling.

use std::f64::consts::PI;

use crate::features::FeatureError;
use crate::types::{wrap_axial, Ellipse};

const TAU: f64 = 2.0 * PI;

/// How a set of angles wraps around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Period `2*pi`.
    Circular,
    /// Period `pi` (undirected lines); doubled internally.
    Axial,
}

/// A non-empty set of angles with a declared topology. Values are normalized
/// into the fundamental domain at construction, so the statistics functions
/// below cannot fail.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSample {
    values: Vec<f64>,
    topology: Topology,
}

impl AngleSample {
    /// Angles with period `2*pi`, normalized into `[0, 2*pi)`.
    pub fn circular(values: Vec<f64>) -> Result<Self, FeatureError> {
        Self::build(values, Topology::Circular)
    }

    /// Axial angles with period `pi`, normalized into `[0, pi)`.
    pub fn axial(values: Vec<f64>) -> Result<Self, FeatureError> {
        Self::build(values, Topology::Axial)
    }

    fn build(mut values: Vec<f64>, topology: Topology) -> Result<Self, FeatureError> {
        if values.is_empty() {
            return Err(FeatureError::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(FeatureError::NonFiniteAngle { value: bad });
        }
        for v in &mut values {
            *v = match topology {
                Topology::Circular => wrap_circular(*v),
                Topology::Axial => wrap_axial(*v),
            };
        }
        Ok(AngleSample { values, topology })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The working angles: doubled for axial samples, as-is for circular.
    fn lifted(&self) -> impl Iterator<Item = f64> + '_ {
        let factor = match self.topology {
            Topology::Circular => 1.0,
            Topology::Axial => 2.0,
        };
        self.values.iter().map(move |v| v * factor)
    }
}

fn wrap_circular(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Mean direction and mean resultant length `R` of the sample.
///
/// `R` is 1 for perfectly aligned angles and 0 for balanced ones; the mean
/// direction is returned in the sample's fundamental domain. For a sample of
/// identical angles the result is exactly `(angle, 1.0)`, with no rounding
/// residue: floating-point `cos`/`sin` round-trips would otherwise report
/// `R` slightly below 1 for perfectly concentrated data.
pub fn circular_mean_resultant(sample: &AngleSample) -> (f64, f64) {
    let first = sample.lifted().next().expect("sample is non-empty");
    if sample.lifted().all(|v| v == first) {
        return (sample.values[0], 1.0);
    }
    let n = sample.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for t in sample.lifted() {
        c += t.cos();
        s += t.sin();
    }
    c /= n;
    s /= n;
    let r = (c * c + s * s).sqrt().min(1.0);
    let mean = match sample.topology {
        Topology::Circular => wrap_circular(s.atan2(c)),
        Topology::Axial => wrap_axial(s.atan2(c) / 2.0),
    };
    (mean, r)
}

/// Circular variance `1 - R`, in `[0, 1]`. Exactly 0 for identical angles.
pub fn circular_variance(sample: &AngleSample) -> f64 {
    let (_, r) = circular_mean_resultant(sample);
    1.0 - r
}

/// Impact angle `alpha = asin(b/a)`, radians in `(0, pi/2]`.
///
/// A circular stain (`b = a`) means the drop arrived perpendicular to the
/// surface (`pi/2`); an elongated stain means a grazing arrival.
pub fn impact_angle(e: &Ellipse) -> f64 {
    (e.b / e.a).clamp(-1.0, 1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_of_angles_straddling_zero() {
        let s = AngleSample::circular(vec![2f64.to_radians(), 358f64.to_radians()]).unwrap();
        let (mean, r) = circular_mean_resultant(&s);
        assert_relative_eq!(mean, 0.0, epsilon = 1e-12);
        // R = cos(2 degrees): the two unit vectors average on the x-axis
        assert_relative_eq!(r, 2f64.to_radians().cos(), epsilon = 1e-12);
        assert_relative_eq!(circular_variance(&s), 1.0 - 2f64.to_radians().cos(), epsilon = 1e-12);
    }

    #[test]
    fn identical_angles_have_exactly_zero_variance() {
        let s = AngleSample::circular(vec![1.25; 40]).unwrap();
        let (mean, r) = circular_mean_resultant(&s);
        assert_eq!(r, 1.0);
        assert_eq!(mean, 1.25);
        assert_eq!(circular_variance(&s), 0.0);
    }

    #[test]
    fn axial_angles_near_the_wrap_are_concentrated() {
        // 179 degrees and 1 degree are 2 degrees apart as undirected lines;
        // doubled they sit 2 degrees either side of the mean
        let s = AngleSample::axial(vec![179f64.to_radians(), 1f64.to_radians()]).unwrap();
        let (mean, r) = circular_mean_resultant(&s);
        assert_relative_eq!(r, 2f64.to_radians().cos(), epsilon = 1e-12);
        assert_relative_eq!(mean, 0.0, epsilon = 1e-12);

        // treated as circular they would look nearly opposite
        let c = AngleSample::circular(vec![179f64.to_radians(), 1f64.to_radians()]).unwrap();
        let (_, rc) = circular_mean_resultant(&c);
        assert!(rc < 0.05);
    }

    #[test]
    fn axial_identical_after_wrapping() {
        let s = AngleSample::axial(vec![0.0, PI, 2.0 * PI]).unwrap();
        let (mean, r) = circular_mean_resultant(&s);
        assert_eq!(r, 1.0);
        assert_eq!(mean, 0.0);
    }

    #[test]
    fn evenly_spread_angles_have_variance_near_one() {
        let n = 8;
        let s = AngleSample::circular((0..n).map(|i| TAU * i as f64 / n as f64).collect()).unwrap();
        let (_, r) = circular_mean_resultant(&s);
        assert!(r < 1e-12, "r = {r}");
        assert_relative_eq!(circular_variance(&s), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_and_non_finite_samples_are_rejected() {
        assert_eq!(AngleSample::circular(vec![]).unwrap_err(), FeatureError::EmptySample);
        assert!(AngleSample::axial(vec![0.1, f64::NAN]).is_err());
    }

    #[test]
    fn impact_angle_limits() {
        let round = Ellipse::new(0.0, 0.0, 3.0, 3.0, 0.0).unwrap();
        assert_relative_eq!(impact_angle(&round), PI / 2.0);
        let slanted = Ellipse::new(0.0, 0.0, 2.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(impact_angle(&slanted), 0.5f64.asin());
        let grazing = Ellipse::new(0.0, 0.0, 100.0, 1.0, 0.0).unwrap();
        assert!(impact_angle(&grazing) < 0.011);
    }
}
