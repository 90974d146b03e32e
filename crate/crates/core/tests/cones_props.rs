use plate_tone::bessel::omega;
use plate_tone::cones::*;
use plate_tone::model_space::SpectralParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn metric(n: f64, avr: f64) -> ConeFixture {
    ConeFixture::with_avr(&SpectralParams::new(n).unwrap(), avr).unwrap()
}

#[test]
fn equality_on_cone_balls() {
    for &(avr, n, v) in &[(1.0, 2.0, PI), (0.5, 2.0, PI), (0.8, 3.0, 1.0)] {
        let r = sharpness_equality_check(&metric(n, avr), v).unwrap();
        assert!(r.passed && r.rel_gap.abs() <= 1e-6, "{r:?}");
    }
    // flat unit disk gives h₀⁴
    let r = sharpness_equality_check(&metric(2.0, 1.0), PI).unwrap();
    assert!((r.lhs - 3.196220616582541f64.powi(4)).abs() < 1e-9 * r.lhs);
}

#[test]
fn weighted_cone_balls_are_also_extremal() {
    let fx = ConeFixture::weighted_cone(0.1, 0.5, 2).unwrap();
    assert!((fx.n - 2.1).abs() < 1e-15);
    let r = sharpness_equality_check(&fx, 1.3).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn rotational_fixture_rejected_for_spectra() {
    let fx = ConeFixture::rotational(0.7, 3).unwrap();
    assert!(sharpness_equality_check(&fx, 1.0).is_err());
    assert!(annulus_inequality_check_with(&fx, 0.1, 1.0, 64).is_err());
}

#[test]
fn equality_radius_law() {
    let fx = metric(2.5, 0.4);
    let v = 2.0;
    let r = fx.equality_radius(v);
    let big_r = (v / omega(2.5)).powf(1.0 / 2.5);
    assert!((r - 0.4f64.powf(-1.0 / 2.5) * big_r).abs() < 1e-14);
    assert!((fx.ball_mass(r) - v).abs() < 1e-13);
}

#[test]
fn rhs_monotone_and_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let n = rng.gen_range(1.5..3.8);
        let v = rng.gen_range(0.1..10.0);
        let (a1, a2) = (rng.gen_range(0.05..0.5), rng.gen_range(0.5..1.0));
        let p = SpectralParams::new(n).unwrap();
        assert!(inequality_rhs(&p, a1, v).unwrap() < inequality_rhs(&p, a2, v).unwrap());
        let t = rng.gen_range(0.2..5.0);
        let ratio = inequality_rhs(&p, a1, t * v).unwrap() / inequality_rhs(&p, a1, v).unwrap();
        assert!((ratio - t.powf(-4.0 / n)).abs() < 1e-12 * ratio);
    }
}

#[test]
fn perturbed_trials_are_worse() {
    for &(n, avr) in &[(2.0, 1.0), (3.0, 0.6)] {
        let m = perturbed_minimality(&metric(n, avr), 1.0, 20, 0.05, 5).unwrap();
        assert_eq!(m.quotients.len(), 20);
        assert!(m.min_rel_excess > 1e-6, "{m:?}");
    }
}

#[test]
fn annulus_strictly_above() {
    let r = annulus_inequality_check(&metric(2.0, 1.0), 0.05, 1.0).unwrap();
    assert!(r.passed && r.lhs > r.rhs * 1.01, "{r:?}");
    assert!((r.v - PI * (1.0 - 0.0025)).abs() < 1e-13);
    assert!(r.sign_changes.is_some());
    assert!(annulus_inequality_check(&metric(2.0, 1.0), 0.5, 0.5).is_err());
}

#[test]
fn avr_scales_out_of_annulus_eigenvalue() {
    let a = annulus_inequality_check_with(&metric(2.0, 1.0), 0.2, 1.0, 128).unwrap();
    let b = annulus_inequality_check_with(&metric(2.0, 0.3), 0.2, 1.0, 128).unwrap();
    assert_eq!(a.lhs, b.lhs);
    assert!(b.rhs < a.rhs);
}

#[test]
fn asymptotic_quotients_independent_of_l() {
    let r = asymptotic_limit_check(&metric(2.0, 0.6), &[1.0, 10.0, 100.0]).unwrap();
    assert!(r.max_rel_deviation <= 1e-8, "{r:?}");
    assert!((r.pivot - r.pivot_expected).abs() <= 1e-8 * r.pivot_expected);
    let flat = asymptotic_limit_check(&metric(2.0, 1.0), &[1.0, 7.0]).unwrap();
    assert!((flat.pivot - 1.0).abs() < 1e-8);
    let n3 = asymptotic_limit_check(&metric(3.0, 0.25), &[2.0, 50.0]).unwrap();
    assert!(n3.max_rel_deviation <= 1e-8);
    assert!((n3.pivot - 0.25f64.powf(4.0 / 3.0)).abs() < 1e-8);
}

#[test]
fn rotational_limits() {
    let r = avr_rotational(&|_| 1.0, 1.0, 2).unwrap();
    assert!((r.value - 1.0).abs() < 1e-10);
    let r = avr_rotational(&|s: f64| 0.5 + 0.5 * (-s).exp(), 0.5, 2).unwrap();
    assert!((r.value - 0.5).abs() < 1e-4);
    let r = avr_rotational(&|s: f64| 0.7 + 0.3 * (-s).exp(), 0.7, 3).unwrap();
    assert!((r.value - 0.49).abs() < 1e-4);
    // raw quotients decrease towards the limit
    assert!(r.samples.windows(2).all(|w| w[1].1 < w[0].1));
    let bumpy = |s: f64| 0.6 + 0.4 * (-s).exp() + 0.3 * (s * 3.0).sin() * (-s).exp();
    assert!(avr_rotational(&bumpy, 0.6, 2).is_err());
}

#[test]
fn weighted_cone_closed_form_matches_monte_carlo() {
    let closed = avr_weighted_cone(0.1, 0.5, 2).unwrap();
    let mc = avr_monte_carlo(WeightLaw::RadialPower, 2, &[0.1, 0.5], 400_000, 42).unwrap();
    assert!(
        (mc.mean - closed).abs() < 4.0 * mc.std_error,
        "{mc:?} vs {closed}"
    );
    let (orth, n) = avr_monomial_orthant(&[0.5, 1.0]).unwrap();
    assert_eq!(n, 3.5);
    let mc = avr_monte_carlo(WeightLaw::MonomialOrthant, 2, &[0.5, 1.0], 400_000, 43).unwrap();
    assert!(
        (mc.mean - orth).abs() < 4.0 * mc.std_error,
        "{mc:?} vs {orth}"
    );
    let again = avr_monte_carlo(WeightLaw::MonomialOrthant, 2, &[0.5, 1.0], 400_000, 43).unwrap();
    assert_eq!(mc, again);
    assert!(avr_monte_carlo(WeightLaw::RadialPower, 3, &[0.0, 0.5], 100, 1).is_err());
}

#[test]
fn shrinking_hole_stays_above_ball() {
    // points carry H² capacity for N < 4: the clamped centre survives r1 → 0
    let fx = metric(2.0, 1.0);
    let lams: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&r1| {
            annulus_inequality_check_with(&fx, r1, 1.0, 256)
                .unwrap()
                .lhs
        })
        .collect();
    let ball = fx.rhs(PI).unwrap();
    assert!(lams.iter().all(|&l| l > 1.5 * ball), "{lams:?} vs {ball}");
    assert!(lams[0] > lams[1] && lams[1] > lams[2], "{lams:?}");
    let (d1, d2) = (lams[0] - lams[1], lams[1] - lams[2]);
    assert!(d2 < d1, "{lams:?}");
}
