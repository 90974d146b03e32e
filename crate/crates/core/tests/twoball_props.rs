use plate_tone::fd_oracle::solve_twoball;
use plate_tone::model_space::SpectralParams;
use plate_tone::twoball::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn determinant_symmetric(a in 0.05f64..0.95, b in 0.05f64..0.95, h in 1.0f64..8.0) {
        let d1 = determinant4_raw(0.0, a, b, h).unwrap();
        let d2 = determinant4_raw(0.0, b, a, h).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-10 * d1.abs().max(1e-300) + 1e-300);
    }
}

#[test]
fn roots_stay_inside_bracket() {
    for &n in &[2.0, 2.5, 3.0] {
        let p = SpectralParams::new(n).unwrap();
        let top = symmetric_radius(n);
        for i in 1..=60 {
            let a = A_MIN + (top - A_MIN) * i as f64 / 61.0;
            let inst = TwoBallInstance::new(p, a).unwrap();
            let r = first_root_h_of_a(&inst).unwrap();
            let (lo, hi) = inst.bracket();
            assert!(lo < r.h_of_a && r.h_of_a < hi, "N={n} a={a}");
        }
    }
}

#[test]
fn pole_ladder_flips_sign() {
    let p = SpectralParams::new(2.0).unwrap();
    let inst = TwoBallInstance::new(p, 0.4).unwrap();
    for &pole in inst.pole_ladder.iter().take(4) {
        let l = inst.k_sum(pole - 1e-3).unwrap();
        let r = inst.k_sum(pole + 1e-3).unwrap();
        assert!(l > 0.0 && r < 0.0, "pole {pole}: {l} {r}");
    }
}

#[test]
fn coarse_oracle_agrees_and_improves() {
    let p = SpectralParams::new(2.0).unwrap();
    let a = 0.4;
    let inst = TwoBallInstance::new(p, a).unwrap();
    let h4 = first_root_h_of_a(&inst).unwrap().h_of_a.powi(4);
    let err = |n| (h4 - solve_twoball(&p, a, inst.b, n).unwrap().lambda_min).abs() / h4;
    let (e1, e2) = (err(64), err(128));
    assert!(e1 <= 5e-3, "{e1}");
    assert!(e2 < e1);
}
