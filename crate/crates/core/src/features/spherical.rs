//! Spherical statistics of per-stain direction vectors.
//!
//! Each stain gives a unit vector on the lower hemisphere combining its
//! orientation `phi` (doubled, since it is axial) and impact angle `alpha`:
//!
//! ```text
//! m = (-cos(alpha) cos(2 phi), -cos(alpha) sin(2 phi), -sin(alpha))
//! ```
//!
//! The scatter matrix `T = sum_i m_i m_i^T` summarizes the whole pattern;
//! its eigenvalue spectrum distinguishes clustered, girdled and uniform
//! direction sets.

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use crate::features::FeatureError;
use crate::types::Ellipse;

const UNIT_TOL: f64 = 1e-9;

/// Direction vector of one stain, on the lower unit hemisphere.
///
/// The third component is exactly `-b/a`, so a circular stain (vertical
/// arrival) maps to the pole `(0, 0, -1)` and a grazing stain to the equator.
pub fn direction_vector(e: &Ellipse) -> Vector3<f64> {
    let s = e.b / e.a; // sin(alpha)
    let c = (1.0 - s * s).max(0.0).sqrt(); // cos(alpha)
    let two_phi = 2.0 * e.phi;
    Vector3::new(-c * two_phi.cos(), -c * two_phi.sin(), -s)
}

/// A non-empty set of unit vectors with non-positive third component.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    vectors: Vec<Vector3<f64>>,
}

impl DirectionSet {
    pub fn new(vectors: Vec<Vector3<f64>>) -> Result<Self, FeatureError> {
        if vectors.is_empty() {
            return Err(FeatureError::EmptySample);
        }
        for (index, v) in vectors.iter().enumerate() {
            if !(v.norm() - 1.0).abs().is_finite() || (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(FeatureError::NotUnitVector { index, norm: v.norm() });
            }
            if v.z > 0.0 {
                return Err(FeatureError::UpperHemisphere { index, z: v.z });
            }
        }
        Ok(DirectionSet { vectors })
    }

    /// Builds the set from ellipses; infallible because [`direction_vector`]
    /// always produces a valid lower-hemisphere unit vector.
    pub fn from_ellipses(ellipses: &[Ellipse]) -> Result<Self, FeatureError> {
        if ellipses.is_empty() {
            return Err(FeatureError::EmptySample);
        }
        Ok(DirectionSet {
            vectors: ellipses.iter().map(direction_vector).collect(),
        })
    }

    pub fn vectors(&self) -> &[Vector3<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mean resultant length: 1 for identical vectors, near 0 for balanced
    /// sets (a uniform spread, or a girdle traversed evenly).
    pub fn mean_resultant_length(&self) -> f64 {
        let sum: Vector3<f64> = self.vectors.iter().sum();
        (sum / self.len() as f64).norm().min(1.0)
    }
}

/// Scatter matrix of a direction set with its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    pub matrix: Matrix3<f64>,
    /// Number of vectors; equals the trace of `matrix`.
    pub n: usize,
    /// Eigenvalues in descending order, clamped to be non-negative.
    pub eigenvalues: [f64; 3],
    /// Unit eigenvectors matching `eigenvalues` (sign is arbitrary).
    pub eigenvectors: [Vector3<f64>; 3],
}

/// Computes `T = sum m m^T` and its spectrum. Needs at least two vectors;
/// a single direction has no spread to measure.
pub fn scatter_matrix(set: &DirectionSet) -> Result<ScatterMatrix, FeatureError> {
    if set.len() < 2 {
        return Err(FeatureError::TooFewVectors { count: set.len() });
    }
    let mut t = Matrix3::zeros();
    for v in set.vectors() {
        t += v * v.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut eigenvalues = [0.0; 3];
    let mut eigenvectors = [Vector3::zeros(); 3];
    for (slot, &i) in order.iter().enumerate() {
        // symmetric PSD input: tiny negative values are rounding noise
        eigenvalues[slot] = eig.eigenvalues[i].max(0.0);
        eigenvectors[slot] = eig.eigenvectors.column(i).into_owned();
    }
    Ok(ScatterMatrix {
        matrix: t,
        n: set.len(),
        eigenvalues,
        eigenvectors,
    })
}

/// Decision thresholds for [`spherical_shape`], on the normalized
/// eigenvalues `t_i / n` and the mean resultant length.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default)]
pub struct ShapeThresholds {
    /// Max deviation of every `t_i / n` from 1/3 still counted as uniform.
    pub uniform: f64,
    /// Girdle test: smallest normalized eigenvalue below this while the
    /// middle one stays at or above it.
    pub girdle: f64,
    /// Minimum mean resultant length for a clustered set to be unimodal.
    pub modal: f64,
    /// Minimum `t3 / t2` for rotational symmetry about the principal axis.
    pub symmetry: f64,
}

impl Default for ShapeThresholds {
    fn default() -> Self {
        ShapeThresholds {
            uniform: 0.06,
            girdle: 0.1,
            modal: 0.5,
            symmetry: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeCategory {
    Uniform,
    Unimodal,
    Bimodal,
    Girdle,
}

/// Qualitative description of a direction set.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDiagnosis {
    pub category: ShapeCategory,
    /// Whether the spread looks rotationally symmetric about the dominant
    /// axis (`t3/t2` close to 1).
    pub rotational_symmetry: bool,
    pub mean_resultant_length: f64,
}

/// Classifies the shape of a direction set with default thresholds.
pub fn spherical_shape(sm: &ScatterMatrix, set: &DirectionSet) -> ShapeDiagnosis {
    spherical_shape_with(sm, set, &ShapeThresholds::default())
}

pub fn spherical_shape_with(
    sm: &ScatterMatrix,
    set: &DirectionSet,
    thresholds: &ShapeThresholds,
) -> ShapeDiagnosis {
    assert_eq!(sm.n, set.len(), "scatter matrix and direction set disagree");
    let n = sm.n as f64;
    let e: Vec<f64> = sm.eigenvalues.iter().map(|t| t / n).collect();
    let r = set.mean_resultant_length();
    let category = if e.iter().all(|v| (v - 1.0 / 3.0).abs() <= thresholds.uniform) {
        ShapeCategory::Uniform
    } else if e[2] < thresholds.girdle && e[1] >= thresholds.girdle {
        ShapeCategory::Girdle
    } else if r >= thresholds.modal {
        ShapeCategory::Unimodal
    } else {
        ShapeCategory::Bimodal
    };
    // guard the ratio: a rank-one scatter has t2 = t3 = 0 and is symmetric
    let floor = 1e-12;
    let ratio = sm.eigenvalues[2].max(floor) / sm.eigenvalues[1].max(floor);
    ShapeDiagnosis {
        category,
        rotational_symmetry: ratio > thresholds.symmetry,
        mean_resultant_length: r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn direction_vector_oracle() {
        // a=2, b=1, phi=45 degrees: alpha=30 degrees, doubled phi = 90 degrees
        let e = Ellipse::new(0.0, 0.0, 2.0, 1.0, PI / 4.0).unwrap();
        let m = direction_vector(&e);
        assert_relative_eq!(m.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(m.y, -(0.75f64.sqrt()), epsilon = 1e-15);
        assert_eq!(m.z, -0.5);
    }

    #[test]
    fn direction_vector_is_unit_and_lower() {
        for (a, b, phi) in [(2.0, 1.0, 0.1), (5.0, 4.9, 2.8), (30.0, 1.0, 1.5), (3.0, 3.0, 0.0)] {
            let e = Ellipse::new(0.0, 0.0, a, b, phi).unwrap();
            let m = direction_vector(&e);
            assert_relative_eq!(m.norm(), 1.0, epsilon = 1e-12);
            assert!(m.z < 0.0);
            // third component is -b/a with no rounding detour through asin
            assert_eq!(m.z, -(b / a));
        }
    }

    #[test]
    fn circular_stain_maps_to_pole() {
        let e = Ellipse::new(0.0, 0.0, 3.0, 3.0, 1.0).unwrap();
        let m = direction_vector(&e);
        assert_eq!(m.z, -1.0);
        assert_relative_eq!(m.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn scatter_of_identical_poles_is_rank_one() {
        let set = DirectionSet::new(vec![Vector3::new(0.0, 0.0, -1.0); 7]).unwrap();
        let sm = scatter_matrix(&set).unwrap();
        assert_relative_eq!(sm.eigenvalues[0], 7.0, epsilon = 1e-12);
        assert!(sm.eigenvalues[1].abs() < 1e-12);
        assert!(sm.eigenvalues[2].abs() < 1e-12);
        let trace: f64 = sm.matrix.trace();
        assert_relative_eq!(trace, 7.0, epsilon = 1e-9);
    }

    #[test]
    fn eigendecomposition_reconstructs_the_matrix() {
        let ellipses: Vec<Ellipse> = (0..12)
            .map(|i| {
                Ellipse::new(0.0, 0.0, 2.0 + i as f64 * 0.3, 1.0 + i as f64 * 0.1, i as f64 * 0.25)
                    .unwrap()
            })
            .collect();
        let set = DirectionSet::from_ellipses(&ellipses).unwrap();
        let sm = scatter_matrix(&set).unwrap();
        assert_relative_eq!(sm.matrix.trace(), 12.0, epsilon = 1e-9);
        assert!(sm.eigenvalues[0] >= sm.eigenvalues[1]);
        assert!(sm.eigenvalues[1] >= sm.eigenvalues[2]);
        assert!(sm.eigenvalues[2] >= 0.0);
        let mut rebuilt = Matrix3::zeros();
        for k in 0..3 {
            rebuilt += sm.eigenvalues[k] * sm.eigenvectors[k] * sm.eigenvectors[k].transpose();
        }
        assert!((rebuilt - sm.matrix).norm() < 1e-9);
    }

    #[test]
    fn needs_two_vectors() {
        let set = DirectionSet::new(vec![Vector3::new(0.0, 0.0, -1.0)]).unwrap();
        assert!(matches!(
            scatter_matrix(&set),
            Err(FeatureError::TooFewVectors { count: 1 })
        ));
    }

    #[test]
    fn rejects_non_unit_and_upper_vectors() {
        assert!(matches!(
            DirectionSet::new(vec![Vector3::new(0.0, 0.0, -2.0)]),
            Err(FeatureError::NotUnitVector { .. })
        ));
        assert!(matches!(
            DirectionSet::new(vec![Vector3::new(0.0, 0.0, 1.0)]),
            Err(FeatureError::UpperHemisphere { .. })
        ));
    }

    #[test]
    fn tight_cluster_is_unimodal_and_symmetric() {
        // small isotropic wobble around the pole
        let vectors: Vec<Vector3<f64>> = (0..40)
            .map(|i| {
                let t = 0.05f64;
                let az = 2.0 * PI * i as f64 / 40.0;
                Vector3::new(t.sin() * az.cos(), t.sin() * az.sin(), -t.cos())
            })
            .collect();
        let set = DirectionSet::new(vectors).unwrap();
        let sm = scatter_matrix(&set).unwrap();
        let d = spherical_shape(&sm, &set);
        assert_eq!(d.category, ShapeCategory::Unimodal);
        assert!(d.rotational_symmetry);
        assert!(d.mean_resultant_length > 0.99);
    }

    #[test]
    fn equatorial_ring_is_a_girdle() {
        let vectors: Vec<Vector3<f64>> = (0..16)
            .map(|i| {
                let az = 2.0 * PI * i as f64 / 16.0;
                Vector3::new(az.cos(), az.sin(), 0.0)
            })
            .collect();
        let set = DirectionSet::new(vectors).unwrap();
        let sm = scatter_matrix(&set).unwrap();
        let d = spherical_shape(&sm, &set);
        assert_eq!(d.category, ShapeCategory::Girdle);
        assert!(!d.rotational_symmetry);
        assert!(d.mean_resultant_length < 1e-12);
    }

    #[test]
    fn hemisphere_spread_is_uniform() {
        // deterministic low-discrepancy spread over the lower hemisphere:
        // golden-angle spiral in azimuth, equal-area steps in z
        let n = 600;
        let golden = PI * (3.0 - 5.0f64.sqrt());
        let vectors: Vec<Vector3<f64>> = (0..n)
            .map(|i| {
                let z = -((i as f64 + 0.5) / n as f64);
                let r = (1.0 - z * z).sqrt();
                let az = golden * i as f64;
                Vector3::new(r * az.cos(), r * az.sin(), z)
            })
            .collect();
        let set = DirectionSet::new(vectors).unwrap();
        let sm = scatter_matrix(&set).unwrap();
        let d = spherical_shape(&sm, &set);
        assert_eq!(d.category, ShapeCategory::Uniform);
    }
}
