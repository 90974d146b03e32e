//! The weighted half-line `([0,∞), σ_N = N ω_N r^{N-1} dr)`, its radial
//! Laplacian `Δ_{0,N} = d²/dr² + (N-1)/r d/dr`, and the Bessel extremals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bessel::{self, gamma, ir, jr, omega, Order};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with, QuadratureResult, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub n: f64,
    pub nu: Order,
    pub omega_n: f64,
}

impl SpectralParams {
    /// Open dimension range `(1, 4)`.
    pub fn new(n: f64) -> Result<Self> {
        if !(n > 1.0 && n < 4.0) {
            return Err(Error::domain(format!("dimension N = {n} outside (1, 4)")));
        }
        Ok(SpectralParams {
            n,
            nu: Order::from_dim(n)?,
            omega_n: omega(n),
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu.nu()
    }

    /// `h_ν`, the first positive root of the cross product.
    pub fn h(&self) -> Result<f64> {
        bessel::root_h(self.nu)
    }

    /// Density of `σ_N` at `r`.
    pub fn density(&self, r: f64) -> f64 {
        self.n * self.omega_n * r.powf(self.n - 1.0)
    }
}

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

/// A radial function on `[0, r_max]` together with its derivatives.
#[derive(Clone)]
pub struct RadialProfile {
    r_max: f64,
    f: RadialFn,
    d1: RadialFn,
    d2: RadialFn,
    d3: Option<RadialFn>,
    provenance: Provenance,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("r_max", &self.r_max)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl RadialProfile {
    pub fn analytic(r_max: f64, f: RadialFn, d1: RadialFn, d2: RadialFn) -> Self {
        RadialProfile {
            r_max,
            f,
            d1,
            d2,
            d3: None,
            provenance: Provenance::Analytic,
        }
    }

    pub fn with_third(mut self, d3: RadialFn) -> Self {
        self.d3 = Some(d3);
        self
    }

    /// Wrap an externally supplied function; derivatives by central
    /// differences with step `1e-5·R` (first) and `1e-4·R` (second), using
    /// the even extension across the origin and one-sided stencils at `R`.
    pub fn from_fn(r_max: f64, f: RadialFn) -> Self {
        let h1 = 1e-5 * r_max;
        let h2 = 1e-4 * r_max;
        let (fa, fb) = (f.clone(), f.clone());
        let d1: RadialFn = Arc::new(move |s: f64| {
            let g = |x: f64| fa(x.abs());
            if s + h1 <= r_max {
                (g(s + h1) - g(s - h1)) / (2.0 * h1)
            } else {
                (3.0 * g(s) - 4.0 * g(s - h1) + g(s - 2.0 * h1)) / (2.0 * h1)
            }
        });
        let d2: RadialFn = Arc::new(move |s: f64| {
            let g = |x: f64| fb(x.abs());
            if s + h2 <= r_max {
                (g(s + h2) - 2.0 * g(s) + g(s - h2)) / (h2 * h2)
            } else {
                (2.0 * g(s) - 5.0 * g(s - h2) + 4.0 * g(s - 2.0 * h2) - g(s - 3.0 * h2)) / (h2 * h2)
            }
        });
        RadialProfile {
            r_max,
            f,
            d1,
            d2,
            d3: None,
            provenance: Provenance::FiniteDifference,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn value(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn d1(&self, s: f64) -> f64 {
        (self.d1)(s)
    }

    pub fn d2(&self, s: f64) -> f64 {
        (self.d2)(s)
    }

    pub fn d3(&self, s: f64) -> Option<f64> {
        self.d3.as_ref().map(|g| g(s))
    }

    /// `c · p`.
    pub fn scaled(&self, c: f64) -> Self {
        let wrap = |g: &RadialFn| -> RadialFn {
            let g = g.clone();
            Arc::new(move |s| c * g(s))
        };
        RadialProfile {
            r_max: self.r_max,
            f: wrap(&self.f),
            d1: wrap(&self.d1),
            d2: wrap(&self.d2),
            d3: self.d3.as_ref().map(wrap),
            provenance: self.provenance,
        }
    }

    /// `s ↦ p(s · r_max / r_new)` on `[0, r_new]`.
    pub fn stretched(&self, r_new: f64) -> Self {
        let k = self.r_max / r_new;
        let wrap = |g: &RadialFn, m: i32| -> RadialFn {
            let g = g.clone();
            let f = k.powi(m);
            Arc::new(move |s| f * g(k * s))
        };
        RadialProfile {
            r_max: r_new,
            f: wrap(&self.f, 0),
            d1: wrap(&self.d1, 1),
            d2: wrap(&self.d2, 2),
            d3: self.d3.as_ref().map(|g| wrap(g, 3)),
            provenance: self.provenance,
        }
    }
}

/// `c_j s^{-ν}J_ν(ks)·k^ν + c_i s^{-ν}I_ν(ks)·k^ν` written through the reduced
/// functions, so that `p(s) = c_j jr(ks) + c_i ir(ks)`.
#[derive(Debug, Clone, Copy)]
struct BesselCombo {
    nu: f64,
    cj: f64,
    ci: f64,
    k: f64,
}

impl BesselCombo {
    fn eval(&self, m: u8, s: f64) -> f64 {
        let x = self.k * s;
        let j = |d: f64| jr(self.nu + d, x).map(|r| r.value).unwrap_or(f64::NAN);
        let i = |d: f64| ir(self.nu + d, x).map(|r| r.value).unwrap_or(f64::NAN);
        let (vj, vi) = match m {
            0 => (j(0.0), i(0.0)),
            1 => (-x * j(1.0), x * i(1.0)),
            2 => (-j(1.0) + x * x * j(2.0), i(1.0) + x * x * i(2.0)),
            _ => (
                3.0 * x * j(2.0) - x.powi(3) * j(3.0),
                3.0 * x * i(2.0) + x.powi(3) * i(3.0),
            ),
        };
        self.k.powi(m as i32) * (self.cj * vj + self.ci * vi)
    }

    /// `Δ_{0,N}` of the combination: `k²(-c_j jr + c_i ir)`.
    fn laplacian(&self, s: f64) -> f64 {
        let x = self.k * s;
        let j = jr(self.nu, x).map(|r| r.value).unwrap_or(f64::NAN);
        let i = ir(self.nu, x).map(|r| r.value).unwrap_or(f64::NAN);
        self.k * self.k * (-self.cj * j + self.ci * i)
    }

    fn profile(self, r_max: f64) -> RadialProfile {
        RadialProfile::analytic(
            r_max,
            Arc::new(move |s| self.eval(0, s)),
            Arc::new(move |s| self.eval(1, s)),
            Arc::new(move |s| self.eval(2, s)),
        )
        .with_third(Arc::new(move |s| self.eval(3, s)))
    }
}

/// `Δ_{0,N} p(r) = p''(r) + (N-1)/r p'(r)` for `r > 0`.
pub fn laplace_0n(p: &RadialProfile, params: &SpectralParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!(
            "Δ_0N at r = {r}: use laplace_0n_origin for the origin"
        )));
    }
    if r > p.r_max * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "r = {r} beyond profile radius {}",
            p.r_max
        )));
    }
    Ok(p.d2(r) + (params.n - 1.0) / r * p.d1(r))
}

/// Even-extension limit `Δ_{0,N} p(0) = N p''(0)`.
pub fn laplace_0n_origin(p: &RadialProfile, params: &SpectralParams) -> f64 {
    params.n * p.d2(0.0)
}

fn laplace_or_origin(p: &RadialProfile, params: &SpectralParams, r: f64) -> f64 {
    if r > 0.0 {
        p.d2(r) + (params.n - 1.0) / r * p.d1(r)
    } else {
        laplace_0n_origin(p, params)
    }
}

/// Clamped extremal on `[0, R]`:
/// `U(s) = s^{-ν}(I_ν(h)J_ν(hs/R) − J_ν(h)I_ν(hs/R))` with `h = h_ν`.
pub fn extremal_u(params: &SpectralParams, r: f64) -> Result<RadialProfile> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("radius R = {r} must be positive")));
    }
    let nu = params.nu();
    let h = params.h()?;
    let k = h / r;
    let kn = k.powf(nu);
    let combo = BesselCombo {
        nu,
        cj: kn * bessel::iv(nu, h)?.value,
        ci: -kn * bessel::jv(nu, h)?.value,
        k,
    };
    Ok(combo.profile(r))
}

/// Analytic `Δ_{0,N} U` for [`extremal_u`], i.e. `k²(-c_j jr + c_i ir)`.
pub fn extremal_laplacian(params: &SpectralParams, r: f64) -> Result<RadialFn> {
    let nu = params.nu();
    let h = params.h()?;
    let k = h / r;
    let kn = k.powf(nu);
    let combo = BesselCombo {
        nu,
        cj: kn * bessel::iv(nu, h)?.value,
        ci: -kn * bessel::jv(nu, h)?.value,
        k,
    };
    Ok(Arc::new(move |s| combo.laplacian(s)))
}

/// `f₀(s) = s^{-ν}(A J_ν(s) + B I_ν(s))` on `[0, h_ν]`, `B = −A J_ν(h_ν)/I_ν(h_ν)`.
pub fn f0_profile(params: &SpectralParams, a: f64) -> Result<RadialProfile> {
    let nu = params.nu();
    let h = params.h()?;
    let b = f0_coefficient_b(params, a)?;
    let combo = BesselCombo {
        nu,
        cj: a,
        ci: b,
        k: 1.0,
    };
    Ok(combo.profile(h))
}

/// `B = −A J_ν(h_ν)/I_ν(h_ν)`.
pub fn f0_coefficient_b(params: &SpectralParams, a: f64) -> Result<f64> {
    let nu = params.nu();
    let h = params.h()?;
    Ok(-a * bessel::jv(nu, h)?.value / bessel::iv(nu, h)?.value)
}

/// Closed form `f₀(0) = (A + B)/(2^ν Γ(ν+1))`.
pub fn f0_at_origin(params: &SpectralParams, a: f64) -> Result<f64> {
    let nu = params.nu();
    let b = f0_coefficient_b(params, a)?;
    Ok((a + b) / (2f64.powf(nu) * gamma(nu + 1.0)))
}

fn check_clamped(p: &RadialProfile, r: f64) -> Result<()> {
    let scale = (0..=32)
        .map(|i| p.value(r * i as f64 / 32.0).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::domain("profile vanishes identically"));
    }
    let v = p.value(r).abs();
    let dv = p.d1(r).abs() * r;
    if v > 1e-6 * scale || dv > 1e-6 * scale {
        return Err(Error::domain(format!(
            "profile is not clamped at R = {r}: |p(R)| = {v:e}, R|p'(R)| = {dv:e}"
        )));
    }
    Ok(())
}

/// `∫(Δ_{0,N}p)² dσ_N / ∫p² dσ_N` over `[0, R]`.
pub fn rayleigh_quotient_1d(
    p: &RadialProfile,
    params: &SpectralParams,
    r: f64,
) -> Result<QuadratureResult> {
    rayleigh_quotient_tol(p, params, r, DEFAULT_TOL)
}

pub fn rayleigh_quotient_tol(
    p: &RadialProfile,
    params: &SpectralParams,
    r: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    check_clamped(p, r)?;
    let n = params.n;
    let num = integrate_with(
        |t| {
            let l = laplace_or_origin(p, params, r * t);
            l * l * t.powf(n - 1.0)
        },
        0.0,
        1.0,
        tol,
        1e-13,
    );
    let den = integrate_with(
        |t| {
            let v = p.value(r * t);
            v * v * t.powf(n - 1.0)
        },
        0.0,
        1.0,
        tol,
        1e-13,
    );
    if den.value <= 0.0 {
        return Err(Error::domain("zero denominator in Rayleigh quotient"));
    }
    // The common factor N ω_N R^N cancels; Δ carries R^{-4} through p.
    let q = num.value / den.value;
    Ok(QuadratureResult {
        value: q,
        abs_err_estimate: q.abs()
            * (num.abs_err_estimate / num.value.abs().max(f64::MIN_POSITIVE)
                + den.abs_err_estimate / den.value),
    })
}

/// LHS − RHS of the Bessel integral identity for `f₀` with coefficient `A`.
pub fn bessel_identity_check(params: &SpectralParams, a: f64) -> Result<f64> {
    let f0 = f0_profile(params, a)?;
    let h = params.h()?;
    let n = params.n;
    let w = |t: f64| t.powf(n - 1.0);
    let lhs = integrate_with(
        |t| {
            let s = h * t;
            let d1 = f0.d1(s);
            let d2 = f0.d2(s);
            let d3 = f0.d3(s).expect("analytic third derivative");
            let first = (n - 1.0).powi(2) / (s * s) * d1 * d1;
            let middle = -2.0 * (d2 * d2 + d1 * d3);
            (first + middle + d2 * d2) * w(t)
        },
        0.0,
        1.0,
        1e-13,
        1e-14,
    );
    let rhs = integrate_with(
        |t| {
            let v = f0.value(h * t);
            v * v * w(t)
        },
        0.0,
        1.0,
        1e-13,
        1e-14,
    );
    Ok(lhs.value - rhs.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const H0: f64 = 3.196_220_616_582_541;

    #[test]
    fn omega_and_params() {
        let p = SpectralParams::new(2.0).unwrap();
        assert!((p.omega_n - PI).abs() < 1e-14);
        assert_eq!(p.nu(), 0.0);
        assert!(SpectralParams::new(4.0).is_err());
        assert!(SpectralParams::new(1.0).is_err());
    }

    #[test]
    fn laplacian_of_r_squared() {
        let params = SpectralParams::new(3.0).unwrap();
        let p = RadialProfile::analytic(
            2.0,
            Arc::new(|s| s * s),
            Arc::new(|s| 2.0 * s),
            Arc::new(|_| 2.0),
        );
        assert!((laplace_0n(&p, &params, 1.0).unwrap() - 6.0).abs() < 1e-14);
        assert!((laplace_0n_origin(&p, &params) - 6.0).abs() < 1e-14);
        assert!(laplace_0n(&p, &params, 0.0).is_err());
        let c = RadialProfile::from_fn(1.0, Arc::new(|_| 3.0));
        assert!(laplace_0n(&c, &params, 0.4).unwrap().abs() < 1e-6);
    }

    #[test]
    fn extremal_is_clamped() {
        for n in [1.5, 2.0, 3.0, 3.5] {
            let params = SpectralParams::new(n).unwrap();
            let u = extremal_u(&params, 1.0).unwrap();
            let scale = u.value(0.0).abs();
            assert!(u.value(1.0).abs() < 1e-9 * scale);
            assert!(u.d1(1.0).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn extremal_helmholtz_pair() {
        // Δ U at interior points against the analytic k²(-c_j jr + c_i ir).
        let params = SpectralParams::new(2.5).unwrap();
        let u = extremal_u(&params, 1.3).unwrap();
        let lap = extremal_laplacian(&params, 1.3).unwrap();
        for i in 1..20 {
            let r = 1.3 * i as f64 / 20.0;
            let a = laplace_0n(&u, &params, r).unwrap();
            assert!((a - lap(r)).abs() < 1e-10 * lap(0.0).abs(), "r={r}");
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let params = SpectralParams::new(2.0).unwrap();
        let u = extremal_u(&params, 1.0).unwrap();
        let fd = RadialProfile::from_fn(1.0, {
            let u = u.clone();
            Arc::new(move |s| u.value(s))
        });
        let scale = u.value(0.0).abs();
        for i in 1..=20 {
            let s = i as f64 / 21.0;
            assert!((u.d1(s) - fd.d1(s)).abs() < 1e-6 * scale);
            assert!((u.d2(s) - fd.d2(s)).abs() < 1e-5 * scale);
        }
    }

    #[test]
    fn f0_closed_forms() {
        let params = SpectralParams::new(2.0).unwrap();
        let f0 = f0_profile(&params, 1.0).unwrap();
        // B = −J₀(h₀)/I₀(h₀) from a high-precision evaluation.
        let b = f0_coefficient_b(&params, 1.0).unwrap();
        assert!((b - 0.055_712_752_558_864_58).abs() < 1e-12);
        assert!((f0.value(0.0) - 1.055_712_752_558_864_6).abs() < 1e-12);
        assert!((f0_at_origin(&params, 1.0).unwrap() - f0.value(0.0)).abs() < 1e-14);
        assert!(f0.value(H0).abs() < 1e-9 && f0.d1(H0).abs() < 1e-9);
        let f2 = f0_profile(&params, 2.0).unwrap();
        for s in [0.0, 0.7, 2.2] {
            assert!((f2.value(s) - 2.0 * f0.value(s)).abs() < 1e-14);
        }
    }

    #[test]
    fn quotient_on_unit_disk() {
        let params = SpectralParams::new(2.0).unwrap();
        let u = extremal_u(&params, 1.0).unwrap();
        let q = rayleigh_quotient_1d(&u, &params, 1.0).unwrap();
        assert!((q.value / H0.powi(4) - 1.0).abs() < 1e-6, "{}", q.value);
    }

    #[test]
    fn quotient_scales_like_r_minus_four() {
        let params = SpectralParams::new(3.0).unwrap();
        let one = rayleigh_quotient_1d(&extremal_u(&params, 1.0).unwrap(), &params, 1.0).unwrap();
        let two = rayleigh_quotient_1d(&extremal_u(&params, 2.0).unwrap(), &params, 2.0).unwrap();
        assert!((two.value * 16.0 / one.value - 1.0).abs() < 1e-9);
        let u = extremal_u(&params, 1.0).unwrap().stretched(0.5);
        let half = rayleigh_quotient_1d(&u, &params, 0.5).unwrap();
        assert!((half.value / 16.0 / one.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn polynomial_trial_is_above_ground_state() {
        let params = SpectralParams::new(2.0).unwrap();
        let p = RadialProfile::analytic(
            1.0,
            Arc::new(|s: f64| (1.0 - s * s).powi(2)),
            Arc::new(|s: f64| -4.0 * s * (1.0 - s * s)),
            Arc::new(|s: f64| -4.0 + 12.0 * s * s),
        );
        let q = rayleigh_quotient_1d(&p, &params, 1.0).unwrap();
        // Δp = 16s² − 8: (32/3) / (1/10).
        assert!((q.value - 320.0 / 3.0).abs() < 1e-8, "{}", q.value);
        assert!(q.value > H0.powi(4));
    }

    #[test]
    fn unclamped_trial_rejected() {
        let params = SpectralParams::new(2.0).unwrap();
        let p = RadialProfile::from_fn(1.0, Arc::new(|s: f64| 1.0 - s));
        assert!(rayleigh_quotient_1d(&p, &params, 1.0).is_err());
    }

    #[test]
    fn identity_residual_small() {
        for n in [2.0, 2.5, 3.0] {
            let params = SpectralParams::new(n).unwrap();
            let r1 = bessel_identity_check(&params, 1.0).unwrap();
            assert!(r1.abs() < 1e-8, "N={n} residual {r1:e}");
            let r3 = bessel_identity_check(&params, 3.0).unwrap();
            assert!((r3 - 9.0 * r1).abs() < 1e-8);
        }
    }
}
