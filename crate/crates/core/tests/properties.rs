//! Randomized property tests for the numeric plumbing.

use proptest::prelude::*;

use spatter::features::{circular_variance, AngleSample};
use spatter::io::fmt_f64;
use spatter::types::{wrap_axial, Ellipse};

proptest! {
    /// Nine significant digits always parse back within 1e-8 relative error,
    /// regardless of magnitude.
    #[test]
    fn fmt_f64_round_trips(v in prop::num::f64::NORMAL) {
        let s = fmt_f64(v);
        let parsed: f64 = s.parse().unwrap();
        let rel = ((parsed - v) / v).abs();
        prop_assert!(rel <= 1e-8, "{v} -> {s} -> {parsed} (rel {rel})");
    }

    /// The formatter never emits more than 9 significant digits. Zeros that
    /// only place the decimal point (leading zeros, and trailing zeros of an
    /// integer) are not significant.
    #[test]
    fn fmt_f64_is_at_most_nine_digits(v in prop::num::f64::NORMAL) {
        let s = fmt_f64(v);
        let number = s.split(['e', 'E']).next().unwrap();
        let digits: String = number.chars().filter(|c| c.is_ascii_digit()).collect();
        let significant = if number.contains('.') {
            digits.trim_start_matches('0')
        } else {
            digits.trim_start_matches('0').trim_end_matches('0')
        };
        prop_assert!(
            significant.len() <= 9,
            "{v} -> {s} has {} significant digits",
            significant.len()
        );
    }

    /// Axial wrapping lands in [0, pi) for any finite input.
    #[test]
    fn wrap_axial_stays_in_range(phi in -1e6f64..1e6) {
        let w = wrap_axial(phi);
        prop_assert!((0.0..std::f64::consts::PI).contains(&w), "{phi} -> {w}");
    }

    /// The constructor always yields a >= b > 0 and phi in [0, pi),
    /// whichever order the axes arrive in.
    #[test]
    fn ellipse_constructor_normalizes(
        ax in 0.1f64..100.0,
        bx in 0.1f64..100.0,
        phi in -20.0f64..20.0,
    ) {
        let e = Ellipse::new(0.0, 0.0, ax, bx, phi).unwrap();
        prop_assert!(e.a >= e.b && e.b > 0.0);
        prop_assert!((0.0..std::f64::consts::PI).contains(&e.phi));
        prop_assert!(e.check().is_ok());
        // the unordered axis pair is preserved
        prop_assert_eq!([e.a, e.b], if ax >= bx { [ax, bx] } else { [bx, ax] });
    }

    /// Circular variance is always inside [0, 1].
    #[test]
    fn circular_variance_bounded(values in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let s = AngleSample::circular(values).unwrap();
        let v = circular_variance(&s);
        prop_assert!((0.0..=1.0).contains(&v), "variance {v}");
    }
}
