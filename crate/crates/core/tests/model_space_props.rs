use plate_tone::model_space::*;
use proptest::prelude::*;

#[test]
fn f0_and_extremal_share_the_quotient() {
    for &n in &[2.0, 2.5, 3.0] {
        let p = SpectralParams::new(n).unwrap();
        let h = p.h().unwrap();
        for &r in &[0.5, 1.0, 2.0] {
            let f0 = f0_profile(&p, 1.0).unwrap().stretched(r);
            let u = extremal_u(&p, r).unwrap();
            let q1 = rayleigh_quotient_1d(&f0, &p, r).unwrap();
            let q2 = rayleigh_quotient_1d(&u, &p, r).unwrap();
            let exact = (h / r).powi(4);
            let tol = q1.abs_err_estimate + q2.abs_err_estimate + 1e-10 * exact;
            assert!((q1.value - q2.value).abs() <= tol, "N={n} R={r}");
            assert!((q1.value - exact).abs() <= 1e-9 * exact);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn quotient_scales_like_inverse_fourth_power(n in 1.2f64..3.9, lam in 0.2f64..5.0) {
        let p = SpectralParams::new(n).unwrap();
        let base = extremal_u(&p, 1.0).unwrap();
        let q1 = rayleigh_quotient_1d(&base, &p, 1.0).unwrap().value;
        let q = rayleigh_quotient_1d(&base.stretched(lam), &p, lam).unwrap().value;
        prop_assert!((q * lam.powi(4) - q1).abs() <= 1e-9 * q1);
    }

    #[test]
    fn identity_residual_small_across_range(n in 1.5f64..3.9) {
        let p = SpectralParams::new(n).unwrap();
        prop_assert!(bessel_identity_check(&p, 1.0).unwrap().abs() < 1e-8);
    }
}
