//! Cone fixtures, asymptotic volume ratios and the sharpness checks of the
//! main inequality `Λ ≥ AVR^{4/N} h_ν⁴ (ω_N/V)^{4/N}`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bessel::{gamma, omega};
use crate::error::{Error, Result};
use crate::fd_oracle::{solve_clamped_annulus, RadialMesh};
use crate::model_space::{
    extremal_u, f0_profile, rayleigh_quotient_1d, RadialFn, RadialProfile, SpectralParams,
};
use crate::quadrature::{integrate, integrate_with};

/// Relative tolerance for quadrature against closed forms.
pub const SHARPNESS_TOL: f64 = 1e-6;
/// Relative tolerance attributed to the finite-difference oracle.
pub const FD_TOL: f64 = 0.01;
/// Mesh used by [`annulus_inequality_check`].
pub const ANNULUS_CELLS: usize = 1024;
/// Agreement required between the rotational limit and `a^{n−1}`.
pub const ROTATIONAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConeDescriptor {
    /// `(ℝⁿ, dr² + F(r)²dθ²)` with `F' = f`, `f(∞) = limit`.
    Rotational { limit: f64, n: u32 },
    /// `w = |x|^α` on a convex cone of `ℝⁿ` covering `solid_fraction` of the sphere.
    WeightedCone {
        alpha: f64,
        solid_fraction: f64,
        n: u32,
    },
    /// Euclidean cone over a cross-section of total mass `m_z_total`.
    MetricCone { m_z_total: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeFixture {
    pub n: f64,
    pub avr: f64,
    pub descriptor: ConeDescriptor,
}

impl ConeFixture {
    pub fn metric_cone(params: &SpectralParams, m_z_total: f64) -> Result<Self> {
        let avr = avr_metric_cone(m_z_total, params)?;
        Self::checked(params.n, avr, ConeDescriptor::MetricCone { m_z_total })
    }

    /// Metric cone with the cross-section mass that gives `avr`.
    pub fn with_avr(params: &SpectralParams, avr: f64) -> Result<Self> {
        Self::metric_cone(params, avr * params.n * params.omega_n)
    }

    pub fn weighted_cone(alpha: f64, solid_fraction: f64, n: u32) -> Result<Self> {
        let avr = avr_weighted_cone(alpha, solid_fraction, n)?;
        Self::checked(
            n as f64 + alpha,
            avr,
            ConeDescriptor::WeightedCone {
                alpha,
                solid_fraction,
                n,
            },
        )
    }

    pub fn rotational(limit: f64, n: u32) -> Result<Self> {
        if !(limit > 0.0 && limit <= 1.0) || n < 2 {
            return Err(Error::domain(format!("rotational limit {limit}, n = {n}")));
        }
        Self::checked(
            n as f64,
            limit.powi(n as i32 - 1),
            ConeDescriptor::Rotational { limit, n },
        )
    }

    fn checked(n: f64, avr: f64, descriptor: ConeDescriptor) -> Result<Self> {
        if !(avr > 0.0 && avr <= 1.0 + 1e-12) {
            return Err(Error::domain(format!("AVR = {avr} outside (0, 1]")));
        }
        Ok(ConeFixture {
            n,
            avr: avr.min(1.0),
            descriptor,
        })
    }

    /// Whether `m(B_s) = AVR ω_N s^N` holds at every radius.
    pub fn is_exact_cone(&self) -> bool {
        !matches!(self.descriptor, ConeDescriptor::Rotational { .. })
    }

    pub fn ball_mass(&self, s: f64) -> f64 {
        self.avr * omega(self.n) * s.powf(self.n)
    }

    pub fn params(&self) -> Result<SpectralParams> {
        SpectralParams::new(self.n)
    }

    /// `AVR^{4/N} h_ν⁴ (ω_N/V)^{4/N}`.
    pub fn rhs(&self, v: f64) -> Result<f64> {
        let params = self.params()?;
        Ok(inequality_rhs(&params, self.avr, v)?)
    }

    /// Radius of the equality ball of measure `v`: `AVR^{−1/N}(V/ω_N)^{1/N}`.
    pub fn equality_radius(&self, v: f64) -> f64 {
        (v / (self.avr * omega(self.n))).powf(1.0 / self.n)
    }

    fn require_exact(&self) -> Result<()> {
        if self.is_exact_cone() {
            Ok(())
        } else {
            Err(Error::Unsupported(
                "rotational fixtures have no exact ball law; only their AVR is available".into(),
            ))
        }
    }
}

/// `AVR^{4/N} h_ν⁴ (ω_N/V)^{4/N}`.
pub fn inequality_rhs(params: &SpectralParams, avr: f64, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::domain(format!("domain measure V = {v}")));
    }
    let e = 4.0 / params.n;
    Ok(avr.powf(e) * params.h()?.powi(4) * (params.omega_n / v).powf(e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationalAvr {
    pub value: f64,
    pub expected: f64,
    /// `(R, n∫_0^R F^{n−1}/R^n)` at the sampled radii.
    pub samples: Vec<(f64, f64)>,
}

/// Radii used for the rotational limit.
const ROTATIONAL_RADII: [f64; 4] = [100.0, 200.0, 400.0, 800.0];

/// `lim_{R→∞} n∫_0^R F^{n−1}(s)ds / R^n` with `F(r) = ∫_0^r f`, by
/// quadrature at doubling radii and Richardson elimination of the
/// `1/R`, `1/R²`, `1/R³` terms.
pub fn avr_rotational(f: &dyn Fn(f64) -> f64, limit: f64, n: u32) -> Result<RotationalAvr> {
    if n < 2 || !(limit > 0.0 && limit <= 1.0) {
        return Err(Error::domain(format!(
            "rotational fixture with n = {n}, limit {limit}"
        )));
    }
    if (f(0.0) - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("f(0) = {} must be 1", f(0.0))));
    }
    let r_top = *ROTATIONAL_RADII.last().unwrap();
    let mut prev = f(0.0);
    for i in 1..=8192 {
        let s = r_top * i as f64 / 8192.0;
        let cur = f(s);
        if cur > prev + 1e-14 {
            return Err(Error::domain(format!("f increases near s = {s}")));
        }
        prev = cur;
    }
    if (f(r_top) - limit).abs() > 1e-3 {
        return Err(Error::domain(format!(
            "f({r_top}) = {} is far from the stated limit {limit}",
            f(r_top)
        )));
    }
    // F^{n−1} integrated on unit panels, F carried across panels
    let mut samples = Vec::new();
    let mut acc = 0.0;
    let mut lo = 0.0;
    let mut f_lo = 0.0;
    for &r in &ROTATIONAL_RADII {
        let panels = (r - lo).ceil() as usize;
        let h = (r - lo) / panels as f64;
        for k in 0..panels {
            let a = lo + k as f64 * h;
            let base = f_lo;
            acc += integrate_with(
                |s| {
                    let inner = base + integrate(f, a, s, 1e-14).value;
                    inner.powi(n as i32 - 1)
                },
                a,
                a + h,
                0.0,
                1e-13,
            )
            .value;
            f_lo = base + integrate(f, a, a + h, 1e-14).value;
        }
        lo = r;
        samples.push((r, n as f64 * acc / r.powi(n as i32)));
    }
    // Richardson on R doubling: eliminate R^{-1}, R^{-2}, R^{-3}
    let mut t: Vec<f64> = samples.iter().map(|s| s.1).collect();
    for p in 1..t.len() {
        let fac = 2f64.powi(p as i32);
        t = t
            .windows(2)
            .map(|w| (fac * w[1] - w[0]) / (fac - 1.0))
            .collect();
    }
    let value = t[0];
    let expected = limit.powi(n as i32 - 1);
    if (value - expected).abs() > ROTATIONAL_TOL {
        return Err(Error::Inconsistent(format!(
            "rotational AVR limit {value} differs from a^(n-1) = {expected}"
        )));
    }
    Ok(RotationalAvr {
        value,
        expected,
        samples,
    })
}

/// `AVR = ∫_{B₁∩Σ}|x|^α dx / ω_{n+α} = θ n ω_n / ((n+α) ω_{n+α})` where `θ`
/// is the solid-angle fraction of the cone `Σ`.
pub fn avr_weighted_cone(alpha: f64, solid_fraction: f64, n: u32) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("weight degree α = {alpha}")));
    }
    if !(solid_fraction > 0.0 && solid_fraction <= 1.0) {
        return Err(Error::domain(format!(
            "solid fraction {solid_fraction} outside (0, 1]"
        )));
    }
    if n == 0 {
        return Err(Error::Unsupported("cone in ℝ⁰".into()));
    }
    let nn = n as f64;
    Ok(solid_fraction * nn * omega(nn) / ((nn + alpha) * omega(nn + alpha)))
}

/// Orthant `ℝⁿ_+` with monomial weight `w = Π x_i^{a_i}`; `N = n + Σa_i` and
/// `AVR = Π Γ((a_i+1)/2) / (2ⁿ π^{N/2})`.
pub fn avr_monomial_orthant(exponents: &[f64]) -> Result<(f64, f64)> {
    if exponents.is_empty() || exponents.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
        return Err(Error::domain(format!("monomial exponents {exponents:?}")));
    }
    let n = exponents.len() as f64;
    let big_n = n + exponents.iter().sum::<f64>();
    let num: f64 = exponents.iter().map(|&a| gamma(0.5 * (a + 1.0))).product();
    Ok((
        num / (2f64.powf(n) * std::f64::consts::PI.powf(0.5 * big_n)),
        big_n,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightLaw {
    /// `|x|^α` on the planar sector `0 < θ < 2π·fraction`, or on all of `ℝⁿ`.
    RadialPower,
    /// `Π x_i^{a_i}` on the orthant.
    MonomialOrthant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloAvr {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `∫_{B₁∩Σ} w / ω_N` with a seeded ChaCha stream.
///
/// `RadialPower` takes `params = [α, fraction]` and supports the plane
/// (`n = 2`) or the full space; `MonomialOrthant` takes the exponents.
pub fn avr_monte_carlo(
    law: WeightLaw,
    n: usize,
    params: &[f64],
    samples: usize,
    seed: u64,
) -> Result<MonteCarloAvr> {
    if samples < 2 || n == 0 {
        return Err(Error::domain(
            "Monte Carlo needs n ≥ 1 and at least two samples",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (big_n, cube): (f64, f64);
    let weight: Box<dyn Fn(&[f64]) -> f64> = match law {
        WeightLaw::RadialPower => {
            let [alpha, frac] = params else {
                return Err(Error::domain("radial power law takes [alpha, fraction]"));
            };
            let (alpha, frac) = (*alpha, *frac);
            if n != 2 && frac != 1.0 {
                return Err(Error::Unsupported(format!(
                    "sector of fraction {frac} in ℝ^{n}"
                )));
            }
            big_n = n as f64 + alpha;
            cube = 2f64.powi(n as i32);
            Box::new(move |x: &[f64]| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= 1.0 {
                    return 0.0;
                }
                if n == 2 {
                    let th = x[1].atan2(x[0]).rem_euclid(std::f64::consts::TAU);
                    if th >= std::f64::consts::TAU * frac {
                        return 0.0;
                    }
                }
                r2.powf(0.5 * alpha)
            })
        }
        WeightLaw::MonomialOrthant => {
            if params.len() != n {
                return Err(Error::domain("one exponent per coordinate"));
            }
            let exps = params.to_vec();
            big_n = n as f64 + exps.iter().sum::<f64>();
            cube = 1.0;
            Box::new(move |x: &[f64]| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= 1.0 {
                    return 0.0;
                }
                x.iter().zip(&exps).map(|(v, a)| v.abs().powf(*a)).product()
            })
        }
    };
    let lo = if law == WeightLaw::RadialPower {
        -1.0
    } else {
        0.0
    };
    let mut x = vec![0.0; n];
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = rng.gen_range(lo..1.0);
        }
        let w = weight(&x);
        s1 += w;
        s2 += w * w;
    }
    let k = samples as f64;
    let mean = s1 / k;
    let var = (s2 / k - mean * mean).max(0.0) * k / (k - 1.0);
    let scale = cube / omega(big_n);
    Ok(MonteCarloAvr {
        mean: mean * scale,
        std_error: (var / k).sqrt() * scale,
        samples,
    })
}

/// `AVR = m_Z(Z)/(N ω_N)`.
pub fn avr_metric_cone(m_z_total: f64, params: &SpectralParams) -> Result<f64> {
    if !(m_z_total > 0.0 && m_z_total.is_finite()) {
        return Err(Error::domain(format!("cross-section mass {m_z_total}")));
    }
    Ok(m_z_total / (params.n * params.omega_n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub fixture: ConeFixture,
    /// Measure of the domain.
    pub v: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs − rhs)/rhs`.
    pub rel_gap: f64,
    pub tolerance: f64,
    /// Sign changes of the discrete ground state, when an eigenvector exists.
    pub sign_changes: Option<usize>,
    pub passed: bool,
}

/// Rayleigh quotient of the transplanted extremal `U(AVR^{1/N} d)` on the cone
/// ball of measure `v`, compared with the closed form.
pub fn sharpness_equality_check(fixture: &ConeFixture, v: f64) -> Result<SharpnessReport> {
    fixture.require_exact()?;
    let params = fixture.params()?;
    let rhs = fixture.rhs(v)?;
    let big_r = (v / params.omega_n).powf(1.0 / params.n);
    let r = fixture.equality_radius(v);
    let u = extremal_u(&params, big_r)?.stretched(r);
    // the cone density avr·Nω_N s^{N−1} is a constant multiple of σ_N
    let lhs = rayleigh_quotient_1d(&u, &params, r)?.value;
    let rel_gap = (lhs - rhs) / rhs;
    Ok(SharpnessReport {
        fixture: fixture.clone(),
        v,
        lhs,
        rhs,
        rel_gap,
        tolerance: SHARPNESS_TOL,
        sign_changes: None,
        passed: rel_gap.abs() <= SHARPNESS_TOL,
    })
}

/// Clamped annulus `r1 < d < r2` on the cone, solved by the finite-difference
/// oracle with `cells` cells. Passes when `lhs > rhs(1 + FD_TOL)`.
pub fn annulus_inequality_check_with(
    fixture: &ConeFixture,
    r1: f64,
    r2: f64,
    cells: usize,
) -> Result<SharpnessReport> {
    fixture.require_exact()?;
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::domain(format!("annulus radii r1 = {r1}, r2 = {r2}")));
    }
    let v = fixture.ball_mass(r2) - fixture.ball_mass(r1);
    let rhs = fixture.rhs(v)?;
    let mesh = RadialMesh::annulus(fixture.n, r1, r2, cells)?;
    let eig = solve_clamped_annulus(&mesh)?;
    let lhs = eig.lambda_min;
    let rel_gap = (lhs - rhs) / rhs;
    Ok(SharpnessReport {
        fixture: fixture.clone(),
        v,
        lhs,
        rhs,
        rel_gap,
        tolerance: FD_TOL,
        sign_changes: Some(eig.sign_changes()),
        passed: rel_gap > FD_TOL,
    })
}

pub fn annulus_inequality_check(
    fixture: &ConeFixture,
    r1: f64,
    r2: f64,
) -> Result<SharpnessReport> {
    annulus_inequality_check_with(fixture, r1, r2, ANNULUS_CELLS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub l_list: Vec<f64>,
    /// `∫_{B_L} u_L² dm / L^N`.
    pub l2_quotients: Vec<f64>,
    /// `∫_{B_L} (Δu_L)² dm / L^{N−4}`.
    pub laplace_quotients: Vec<f64>,
    /// `AVR N ω_N ∫_0^1 f₀²(h t) t^{N−1} dt`.
    pub l2_limit: f64,
    /// `AVR N ω_N h⁴ ∫_0^1 [(N−1)²f₀'²/(h²t²) − 2(f₀'f₀'')' + f₀''²] t^{N−1} dt`.
    pub laplace_limit: f64,
    /// `h^{−4}·(laplace/l2)·(m(B_L)/(ω_N L^N))^{4/N}`, to be compared with `AVR^{4/N}`.
    pub pivot: f64,
    pub pivot_expected: f64,
    pub max_rel_deviation: f64,
}

/// The `L → ∞` quotients of `u_L = f₀(h_ν d/L)` on cone balls `B_L`; on an
/// exact cone they do not depend on `L`.
pub fn asymptotic_limit_check(fixture: &ConeFixture, l_list: &[f64]) -> Result<AsymptoticReport> {
    fixture.require_exact()?;
    if l_list.is_empty() || l_list.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::domain(format!("radii {l_list:?}")));
    }
    let params = fixture.params()?;
    let n = params.n;
    let h = params.h()?;
    let f0 = f0_profile(&params, 1.0)?;
    let dens = fixture.avr * n * params.omega_n;
    // f₀'(x)/x → f₀''(0) at the origin
    let d1_over = |f0: &RadialProfile, x: f64| {
        if x < 1e-8 {
            f0.d2(0.0)
        } else {
            f0.d1(x) / x
        }
    };
    let mut l2q = Vec::with_capacity(l_list.len());
    let mut lapq = Vec::with_capacity(l_list.len());
    for &l in l_list {
        let k = h / l;
        let a = integrate_with(
            |s| {
                let u = f0.value(k * s);
                u * u * dens * s.powf(n - 1.0)
            },
            0.0,
            l,
            0.0,
            1e-13,
        );
        // Δu_L = k f₀'(ks)(N−1)/s + k² f₀''(ks), with Δd = (N−1)/d on the cone
        let b = integrate_with(
            |s| {
                let x = k * s;
                let lap = k * k * ((n - 1.0) * d1_over(&f0, x) + f0.d2(x));
                lap * lap * dens * s.powf(n - 1.0)
            },
            0.0,
            l,
            0.0,
            1e-13,
        );
        l2q.push(a.value / l.powf(n));
        lapq.push(b.value / l.powf(n - 4.0));
    }
    let l2_limit = dens
        * integrate_with(
            |t| {
                let u = f0.value(h * t);
                u * u * t.powf(n - 1.0)
            },
            0.0,
            1.0,
            0.0,
            1e-13,
        )
        .value;
    let laplace_limit = dens
        * h.powi(4)
        * integrate_with(
            |t| {
                let x = h * t;
                let first = (n - 1.0).powi(2) * d1_over(&f0, x).powi(2);
                let d2 = f0.d2(x);
                let d3 = f0.d3(x).expect("third derivative of f₀");
                (first - 2.0 * (d2 * d2 + f0.d1(x) * d3) + d2 * d2) * t.powf(n - 1.0)
            },
            0.0,
            1.0,
            0.0,
            1e-13,
        )
        .value;
    let mut max_dev: f64 = 0.0;
    for (a, b) in l2q.iter().zip(&lapq) {
        max_dev = max_dev
            .max(((a - l2_limit) / l2_limit).abs())
            .max(((b - laplace_limit) / laplace_limit).abs());
    }
    let pivot = h.powi(-4) * (laplace_limit / l2_limit) * fixture.avr.powf(4.0 / n);
    Ok(AsymptoticReport {
        l_list: l_list.to_vec(),
        l2_quotients: l2q,
        laplace_quotients: lapq,
        l2_limit,
        laplace_limit,
        pivot,
        pivot_expected: fixture.avr.powf(4.0 / n),
        max_rel_deviation: max_dev,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub rhs: f64,
    pub quotients: Vec<f64>,
    pub min_rel_excess: f64,
}

/// Rayleigh quotients of `u + ε φ_k` for random clamped perturbations
/// `φ(s) = (1 − (s/r)²)² Σ c_j (s/r)^{2j}` on the equality ball.
pub fn perturbed_minimality(
    fixture: &ConeFixture,
    v: f64,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<MinimalityReport> {
    fixture.require_exact()?;
    let params = fixture.params()?;
    let rhs = fixture.rhs(v)?;
    let big_r = (v / params.omega_n).powf(1.0 / params.n);
    let r = fixture.equality_radius(v);
    let u = extremal_u(&params, big_r)?.stretched(r);
    let amp = u.value(0.0).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quotients = Vec::with_capacity(trials);
    for _ in 0..trials {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = clamped_polynomial(&c, r, eps * amp);
        let u = u.clone();
        let sum = |m: usize| -> RadialFn {
            let (u, phi) = (u.clone(), phi.clone());
            Arc::new(move |s| match m {
                0 => u.value(s) + phi[0](s),
                1 => u.d1(s) + phi[1](s),
                _ => u.d2(s) + phi[2](s),
            })
        };
        let trial = RadialProfile::analytic(r, sum(0), sum(1), sum(2));
        quotients.push(rayleigh_quotient_1d(&trial, &params, r)?.value);
    }
    let min_rel_excess = quotients
        .iter()
        .map(|q| (q - rhs) / rhs)
        .fold(f64::INFINITY, f64::min);
    Ok(MinimalityReport {
        rhs,
        quotients,
        min_rel_excess,
    })
}

/// `amp·(1 − t²)² Σ c_j t^{2j}` with `t = s/r`, and its first two derivatives.
fn clamped_polynomial(c: &[f64], r: f64, amp: f64) -> [RadialFn; 3] {
    // expand (1 − t²)² Σ c_j t^{2j} as Σ q_k t^{2k}
    let mut q = vec![0.0; c.len() + 2];
    for (j, &cj) in c.iter().enumerate() {
        q[j] += cj;
        q[j + 1] -= 2.0 * cj;
        q[j + 2] += cj;
    }
    let q = Arc::new(q);
    let make = |m: u32| -> RadialFn {
        let q = q.clone();
        Arc::new(move |s: f64| {
            let t = s / r;
            let mut acc = 0.0;
            for (k, &qk) in q.iter().enumerate() {
                let p = 2 * k as i32;
                let coef = match m {
                    0 => 1.0,
                    1 => p as f64,
                    _ => (p * (p - 1)) as f64,
                };
                if coef != 0.0 {
                    acc += qk * coef * t.powi(p - m as i32);
                }
            }
            amp * acc / r.powi(m as i32)
        })
    };
    [make(0), make(1), make(2)]
}
