use plate_tone::model_space::{extremal_laplacian, extremal_u, SpectralParams};
use plate_tone::rearrange::*;
use plate_tone::RadialProfile;
use proptest::prelude::*;

fn profile_strategy() -> impl Strategy<Value = MeasuredProfile> {
    (1usize..40).prop_flat_map(|len| {
        (
            proptest::collection::vec(0.01f64..1.0, len),
            proptest::collection::vec(-3.0f64..3.0, len),
            proptest::collection::vec(0.01f64..2.0, len),
        )
            .prop_map(|(gaps, values, masses)| {
                let mut r = 0.0;
                let nodes = gaps
                    .iter()
                    .map(|g| {
                        r += g;
                        r
                    })
                    .collect();
                MeasuredProfile::new(nodes, values, masses).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn equimeasurable(p in profile_strategy(), pw in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let params = SpectralParams::new(2.5).unwrap();
        let r = rearrange(&p, &params);
        let a = p.lp_norm_pow(pw);
        prop_assert!((a - r.u_sharp.lp_norm_pow(pw)).abs() <= 1e-12 * a.max(1e-300));
        prop_assert!((a - r.lp_norm_pow_star(pw)).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn mu_monotone_and_matches_distribution(p in profile_strategy(), t in -3.5f64..3.5, dt in 0.0f64..1.0) {
        let params = SpectralParams::new(2.0).unwrap();
        let r = rearrange(&p, &params);
        prop_assert!(r.mu(t + dt) <= r.mu(t));
        let d = distribution(&p, t);
        prop_assert!((r.mu(t) - d).abs() <= 1e-12 * p.total_mass());
    }

    #[test]
    fn hardy_littlewood_subsets(p in profile_strategy(), seed in any::<u64>()) {
        let params = SpectralParams::new(3.0).unwrap();
        let mask: Vec<bool> = (0..p.len()).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let hl = hardy_littlewood_check(&p, &mask, &params).unwrap();
        prop_assert!(hl.holds);
        let all = hardy_littlewood_check(&p, &vec![true; p.len()], &params).unwrap();
        prop_assert!((all.lhs - all.rhs).abs() <= 1e-12 * all.lhs.max(1e-300));
    }
}

#[test]
fn hardy_littlewood_strict_on_half_mass() {
    // u = 5,4,3,2,1 with unit masses; S = nodes 2,3 (values 4 and 2... mass 2)
    let p = MeasuredProfile::new(
        vec![1.0, 2.0, 3.0, 4.0, 5.0],
        vec![5.0, 4.0, 3.0, 2.0, 1.0],
        vec![1.0; 5],
    )
    .unwrap();
    let params = SpectralParams::new(2.0).unwrap();
    let hl = hardy_littlewood_check(&p, &[false, true, false, true, false], &params).unwrap();
    assert_eq!(hl.lhs, 6.0);
    assert_eq!(hl.rhs, 9.0);
    let c = p.map_values(|_| 2.0);
    let hl = hardy_littlewood_check(&c, &[true, false, true, false, false], &params).unwrap();
    assert_eq!(hl.lhs, hl.rhs);
}

#[test]
fn cone_profile_remaps_radius() {
    // three shells of a cone with avr = 1/2 in N = 2, decreasing values
    let params = SpectralParams::new(2.0).unwrap();
    let avr = 0.5;
    let p = MeasuredProfile::on_cone(&params, avr, 0.0, 3.0, 3, |s| 10.0 - s).unwrap();
    let r = rearrange(&p, &params);
    // u*(x) = u(s) with ω x² = avr ω s², i.e. s = x/√avr
    for (k, &v) in [9.5, 8.5, 7.5].iter().enumerate() {
        let s_mid = k as f64 + 0.5;
        let x = s_mid * avr.sqrt();
        assert_eq!(r.u_star(x), v);
    }
    assert!((r.radius - 3.0 * avr.sqrt()).abs() < 1e-14);
}

#[test]
fn constant_profile_rearranges_to_constant() {
    let params = SpectralParams::new(2.0).unwrap();
    let p = MeasuredProfile::on_cone(&params, 1.0, 0.0, 1.0, 7, |_| 3.25).unwrap();
    let r = rearrange(&p, &params);
    for i in 0..=20 {
        assert_eq!(r.u_star(r.radius * i as f64 / 20.0), 3.25);
    }
}

struct Fixture {
    params: SpectralParams,
    plus: RearrangementResult,
    minus: RearrangementResult,
    u: RearrangementResult,
    du: MeasuredProfile,
    mass: f64,
}

/// Transplanted extremal of the unit model ball onto the cone ball of
/// radius `avr^{-1/N}`, sampled on `cells` shells.
fn extremal_fixture(n: f64, avr: f64, cells: usize) -> Fixture {
    let params = SpectralParams::new(n).unwrap();
    let rho = avr.powf(-1.0 / n);
    let k = avr.powf(1.0 / n);
    let u = extremal_u(&params, 1.0).unwrap();
    let u = u.scaled(1.0 / u.value(0.0));
    let du = MeasuredProfile::laplacian_on_cone(&params, avr, 0.0, rho, cells, &u.stretched(rho))
        .unwrap();
    let uu = MeasuredProfile::on_cone(&params, avr, 0.0, rho, cells, |d| u.value(k * d)).unwrap();
    Fixture {
        params,
        plus: rearrange(&du.positive_part(), &params),
        minus: rearrange(&du.negative_part(), &params),
        u: rearrange(&uu, &params),
        mass: du.total_mass(),
        du,
    }
}

fn fd_laplacian(v: &RadialProfile, n: f64, x: f64, d: f64) -> f64 {
    let (l, c, r) = (v.value(x - d), v.value(x), v.value(x + d));
    (r - 2.0 * c + l) / (d * d) + (n - 1.0) / x * (r - l) / (2.0 * d)
}

#[test]
fn f_plus_follows_the_analytic_laplacian() {
    let mut errs = Vec::new();
    for &cells in &[500, 1000, 2000] {
        let fx = extremal_fixture(2.0, 0.6, cells);
        let f = build_f(Side::Plus, &fx.plus, &fx.minus, fx.mass).unwrap();
        let lap = extremal_laplacian(&fx.params, 1.0).unwrap();
        let u0 = extremal_u(&fx.params, 1.0).unwrap().value(0.0);
        let r = (fx.mass / fx.params.omega_n).sqrt();
        let e = (1..20)
            .map(|i| r * i as f64 / 20.0)
            .map(|x| (f.eval(fx.params.omega_n * x * x) + 0.6 * lap(x) / u0).abs())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    // step data: first order in the shell width
    assert!(errs[0] < 0.1);
    assert!(
        errs[1] < 0.6 * errs[0] && errs[2] < 0.6 * errs[1],
        "{errs:?}"
    );
}

#[test]
fn f_minus_mirrors_f_plus() {
    let fx = extremal_fixture(2.5, 1.0, 300);
    let fp = build_f(Side::Plus, &fx.plus, &fx.minus, fx.mass).unwrap();
    let fm = build_f(Side::Minus, &fx.plus, &fx.minus, fx.mass).unwrap();
    for i in 0..=97 {
        let s = fx.mass * (i as f64 + 0.31) / 98.3;
        assert_eq!(fm.eval(s), -fp.eval(fx.mass - s), "s={s}");
    }
}

#[test]
fn sign_definite_laplacian() {
    // Δu ≥ 0 everywhere: F_+(s) = −(Δu)^#_+(M − s)
    let params = SpectralParams::new(2.0).unwrap();
    let p = MeasuredProfile::on_cone(&params, 1.0, 0.0, 1.0, 50, |r| 1.0 + r * r).unwrap();
    let m = p.total_mass();
    let plus = rearrange(&p.positive_part(), &params);
    let minus = rearrange(&p.negative_part(), &params);
    let f = build_f(Side::Plus, &plus, &minus, m).unwrap();
    for i in 0..50 {
        let s = m * (i as f64 + 0.37) / 50.0;
        assert_eq!(f.eval(s), -plus.u_sharp(m - s));
    }
}

#[test]
fn overlapping_supports_rejected() {
    let params = SpectralParams::new(2.0).unwrap();
    let p = MeasuredProfile::on_cone(&params, 1.0, 0.0, 1.0, 10, |r| r - 0.5).unwrap();
    let m = p.total_mass();
    let plus = rearrange(&p.positive_part(), &params);
    // positive part passed twice: supports overlap once doubled
    let fake = rearrange(&p.map_values(|v| v.abs() + 0.1), &params);
    assert!(build_f(Side::Plus, &plus, &fake, m).is_err());
    let short = rearrange(
        &MeasuredProfile::on_cone(&params, 1.0, 0.0, 0.5, 10, |_| 0.0).unwrap(),
        &params,
    );
    assert!(build_f(Side::Plus, &plus, &short, m).is_err());
}

#[test]
fn v_plus_laplacian_is_minus_f() {
    let fx = extremal_fixture(2.0, 1.0, 400);
    let f = build_f(Side::Plus, &fx.plus, &fx.minus, fx.mass).unwrap();
    let a = (fx.mass / fx.params.omega_n).sqrt();
    let v = build_v(&f, a, &fx.params).unwrap();
    assert_eq!(v.value(a), 0.0);
    let shell = a / 400.0;
    let mut errs = [0.0f64; 2];
    for i in 0..20 {
        // centres of shells away from the origin
        let x = (20.0 + 18.0 * i as f64 + 0.5) * shell;
        let target = -f.eval(fx.params.omega_n * x * x);
        for (j, d) in [shell / 4.0, shell / 8.0].into_iter().enumerate() {
            errs[j] = errs[j].max((fd_laplacian(&v, 2.0, x, d) - target).abs());
        }
    }
    assert!(errs[0] < 1e-5, "{errs:?}");
    assert!(
        errs[1] < 0.3 * errs[0],
        "second order in the stencil: {errs:?}"
    );
}

#[test]
fn v_plus_recovers_transplanted_extremal() {
    for &(n, avr) in &[(2.0, 0.6), (3.0, 0.8)] {
        let fx = extremal_fixture(n, avr, 2000);
        let f = build_f(Side::Plus, &fx.plus, &fx.minus, fx.mass).unwrap();
        let a = (fx.mass / fx.params.omega_n).powf(1.0 / n);
        let v = build_v(&f, a, &fx.params).unwrap();
        let u = extremal_u(&fx.params, 1.0).unwrap();
        let u = u.scaled(1.0 / u.value(0.0));
        let k = avr.powf(2.0 / n);
        let err = (0..=20)
            .map(|i| a * i as f64 / 20.0)
            .map(|x| (v.value(x) - k * u.value(x)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "N={n}: {err}");
        let cmp = comparison_check(&fx.u, &v, avr, &fx.params);
        assert!(cmp.holds(1e-6), "{cmp:?}");
        assert!(cmp.min_margin < 1e-5, "chain saturated: {cmp:?}");
    }
}

#[test]
fn comparison_for_generic_trial() {
    // u = (1 − r²)² on the unit disk
    let params = SpectralParams::new(2.0).unwrap();
    let cells = 2000;
    let du =
        MeasuredProfile::on_cone(&params, 1.0, 0.0, 1.0, cells, |r| 16.0 * r * r - 8.0).unwrap();
    let uu =
        MeasuredProfile::on_cone(&params, 1.0, 0.0, 1.0, cells, |r| (1.0 - r * r).powi(2)).unwrap();
    let m = du.total_mass();
    let f = build_f(
        Side::Plus,
        &rearrange(&du.positive_part(), &params),
        &rearrange(&du.negative_part(), &params),
        m,
    )
    .unwrap();
    let v = build_v(&f, 1.0, &params).unwrap();
    let cmp = comparison_check(&rearrange(&uu, &params), &v, 1.0, &params);
    assert!(cmp.holds(1e-6), "{cmp:?}");
}

#[test]
fn zero_function_compares_with_equality() {
    let params = SpectralParams::new(2.0).unwrap();
    let z = MeasuredProfile::on_cone(&params, 1.0, 0.0, 1.0, 20, |_| 0.0).unwrap();
    let rz = rearrange(&z, &params);
    let f = build_f(Side::Plus, &rz, &rz, z.total_mass()).unwrap();
    let v = build_v(&f, 1.0, &params).unwrap();
    let cmp = comparison_check(&rz, &v, 1.0, &params);
    assert_eq!(cmp.min_margin, 0.0);
}

/// Split the ball into masses `ω a^N` and `ω b^N` with `a^N + b^N = R^N`.
fn split(fx: &Fixture, frac: f64) -> (FProfile, FProfile, f64, f64, RadialProfile, RadialProfile) {
    let n = fx.params.n;
    let w = fx.params.omega_n;
    let fp = build_f(Side::Plus, &fx.plus, &fx.minus, fx.mass).unwrap();
    let fm = build_f(Side::Minus, &fx.plus, &fx.minus, fx.mass).unwrap();
    let a = (frac * fx.mass / w).powf(1.0 / n);
    let b = ((1.0 - frac) * fx.mass / w).powf(1.0 / n);
    let vp = build_v(&fp, a, &fx.params).unwrap();
    let vm = build_v(&fm, b, &fx.params).unwrap();
    (fp, fm, a, b, vp, vm)
}

#[test]
fn boundary_conditions_on_split_ball() {
    for &n in &[2.0, 3.0] {
        let fx = extremal_fixture(n, 1.0, 1000);
        for &frac in &[0.3, 0.5, 0.77] {
            let (_, _, a, b, vp, vm) = split(&fx, frac);
            // (i)
            assert_eq!(vp.value(a), 0.0);
            assert_eq!(vm.value(b), 0.0);
            // (ii) flux matching
            let fa = vp.d1(a) * a.powf(n - 1.0);
            let fb = vm.d1(b) * b.powf(n - 1.0);
            assert!((fa - fb).abs() < 1e-6, "N={n} frac={frac}: {fa} {fb}");
            // (iii)
            let la = vp.d2(a) + (n - 1.0) / a * vp.d1(a);
            let lb = vm.d2(b) + (n - 1.0) / b * vm.d1(b);
            assert!((la + lb).abs() < 1e-6, "N={n} frac={frac}: {la} {lb}");
        }
    }
}

#[test]
fn energy_identity() {
    let fx = extremal_fixture(2.0, 1.0, 800);
    let (fp, _, a, b, vp, vm) = split(&fx, 0.4);
    let n = fx.params.n;
    let dens = |x: f64| fx.params.density(x);
    let sq = |v: &RadialProfile, r: f64| {
        plate_tone::quadrature::integrate(
            |x| {
                let l = if x > 0.0 {
                    v.d2(x) + (n - 1.0) / x * v.d1(x)
                } else {
                    n * v.d2(0.0)
                };
                l * l * dens(x)
            },
            0.0,
            r,
            1e-12,
        )
        .value
    };
    let lhs = sq(&vp, a) + sq(&vm, b);
    let rhs = fp.step.lp_norm_pow(2.0);
    let direct = fx.du.lp_norm_pow(2.0);
    assert!((rhs - direct).abs() <= 1e-12 * direct);
    // the step integrand is discontinuous, so only quadrature accuracy is expected
    assert!((lhs - rhs).abs() <= 1e-6 * rhs, "{lhs} {rhs}");
}
