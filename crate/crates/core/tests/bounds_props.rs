use plate_tone::bounds::*;
use plate_tone::model_space::SpectralParams;
use plate_tone::twoball::{first_root_h_of_a, TwoBallInstance, A_MIN};

#[test]
fn chain_holds_on_grid() {
    for &n in &[2.0, 2.05, 3.0] {
        let p = SpectralParams::new(n).unwrap();
        let c = BoundConstants::with_zero_count(&p, 400).unwrap();
        let alpha = alpha_max(&c, SCAN_POINTS_DEFAULT).unwrap().alpha;
        let beta = beta_bound(&c).unwrap();
        for i in 0..500 {
            let a = c.a_max * i as f64 / 500.0;
            let aa = a_term(&c, a).unwrap();
            let b = b_direct(&c, a, 400).unwrap();
            assert!(aa <= alpha + 1e-15, "N={n} a={a}: A={aa} alpha={alpha}");
            assert!(b.value + b.tail_bound <= beta, "N={n} a={a}");
        }
    }
}

#[test]
fn negative_sum_implies_reduction() {
    for &n in &[2.0, 3.0] {
        let p = SpectralParams::new(n).unwrap();
        let c = BoundConstants::with_zero_count(&p, 200).unwrap();
        for i in 1..=50 {
            let a = A_MIN + (c.a_max - A_MIN) * i as f64 / 51.0;
            let b = b_direct(&c, a, 200).unwrap();
            if a_term(&c, a).unwrap() + b.value + b.tail_bound < 0.0 {
                let inst = TwoBallInstance::new(p, a).unwrap();
                assert!(
                    first_root_h_of_a(&inst).unwrap().h_of_a > c.h,
                    "N={n} a={a}"
                );
            }
        }
    }
}

#[test]
fn gap_decreasing() {
    let mut prev = n0_gap(2.0).unwrap();
    let mut n = 2.02;
    while n <= 3.6 + 1e-9 {
        let g = n0_gap(n).unwrap();
        assert!(g < prev, "N={n}");
        prev = g;
        n += 0.02;
    }
}
