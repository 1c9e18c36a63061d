use hanzawa_flow::geometry::ReferenceGeometry;
use hanzawa_flow::hanzawa::Hanzawa;
use hanzawa_flow::spectral::Fourier;
use proptest::prelude::*;

proptest! {
    #[test]
    fn radial_profile_inverts(r in -0.6f64..0.6, frac in -0.99f64..0.99) {
        let hz = Hanzawa::new(ReferenceGeometry::new(2.0, 1.0, 16, 8, 8, 0.9).unwrap());
        let g = frac * hz.height_bound();
        let s = hz.theta(r, g).unwrap();
        prop_assert!(hz.theta_prime(r, g) > 0.0);
        prop_assert!((hz.theta_inverse(s, g).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn spectral_derivative_is_exact_on_trig_polynomials(
        a in prop::collection::vec(-1.0f64..1.0, 7),
        b in prop::collection::vec(-1.0f64..1.0, 7),
    ) {
        let f = Fourier::<f64>::new(16);
        let th = f.nodes();
        let v: Vec<f64> = th.iter().map(|&t| (0..7).map(|k| a[k] * (k as f64 * t).cos() + b[k] * (k as f64 * t).sin()).sum()).collect();
        let d = f.derivative(&v, 1);
        for (j, &t) in th.iter().enumerate() {
            let want: f64 = (0..7).map(|k| k as f64 * (b[k] * (k as f64 * t).cos() - a[k] * (k as f64 * t).sin())).sum();
            prop_assert!((d[j] - want).abs() < 1e-12);
        }
    }
}
