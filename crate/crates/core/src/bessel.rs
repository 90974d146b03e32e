//! Real-order Bessel functions of the first kind `J_ν`, `I_ν`.
//!
//! Small arguments use the power series of the reduced functions
//! `s^{-ν}J_ν(s)` and `s^{-ν}I_ν(s)`, which stay finite at the origin. Larger
//! arguments go through Steed's continued-fraction method for `J_ν` and the
//! Temme/Steed `K`-Wronskian route for the exponentially scaled `e^{-s}I_ν`.
//!
//! Functions taking a raw `f64` order accept `ν ∈ [-1/2, 6]`; the extra
//! headroom above the supported [`Order`] range is used by the derivative
//! identities, which shift the order upward.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;

/// Largest argument at which the series is used for `J_ν`.
pub const J_SERIES_MAX: f64 = 8.0;
/// Largest argument at which the unscaled `I_ν` is evaluated from its series.
pub const I_SERIES_MAX: f64 = 30.0;
const I_OVERFLOW: f64 = 700.0;

const RAW_NU_MIN: f64 = -0.5;
const RAW_NU_MAX: f64 = 6.0;

/// Bessel order `ν`, restricted to `[-1/2, 1]` (dimensions `N ∈ [1, 4]`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Order {
    nu: f64,
}

impl Order {
    pub const MIN: f64 = -0.5;
    pub const MAX: f64 = 1.0;

    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || !(Self::MIN..=Self::MAX).contains(&nu) {
            return Err(Error::domain(format!(
                "order nu = {nu} outside [{}, {}]",
                Self::MIN,
                Self::MAX
            )));
        }
        Ok(Order { nu })
    }

    /// `ν = N/2 − 1`.
    pub fn from_dim(n: f64) -> Result<Self> {
        Self::new(n / 2.0 - 1.0)
    }

    pub fn nu(self) -> f64 {
        self.nu
    }

    /// `N = 2(ν + 1)`.
    pub fn dim(self) -> f64 {
        2.0 * (self.nu + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    pub abs_err_estimate: f64,
}

impl EvalResult {
    fn scale(self, f: f64) -> Self {
        EvalResult {
            value: self.value * f,
            abs_err_estimate: self.abs_err_estimate * f.abs(),
        }
    }
}

/// Zeros `j_{ν,1} < j_{ν,2} < …` of `J_ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTable {
    pub nu: Order,
    pub zeros: Vec<f64>,
}

impl ZeroTable {
    pub fn new(nu: Order, count: usize) -> Result<Self> {
        let zeros = (1..=count)
            .map(|k| zero_j_raw(nu.nu, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(ZeroTable { nu, zeros })
    }

    /// `j_{ν,k}` with 1-based `k`.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.zeros.get(i).copied())
    }
}

// ---------------------------------------------------------------------------
// Gamma function

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Γ(x)` for real `x`, via the Lanczos approximation and reflection.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Volume of the unit ball in dimension `N`, `π^{N/2}/Γ(N/2+1)`.
pub fn omega(n: f64) -> f64 {
    PI.powf(n / 2.0) / gamma(n / 2.0 + 1.0)
}

// ---------------------------------------------------------------------------
// Reduced power series

fn check_raw(nu: f64, s: f64) -> Result<()> {
    if !(RAW_NU_MIN..=RAW_NU_MAX).contains(&nu) || !nu.is_finite() {
        return Err(Error::domain(format!(
            "order {nu} outside [{RAW_NU_MIN}, {RAW_NU_MAX}]"
        )));
    }
    if s.is_nan() || s < 0.0 {
        return Err(Error::domain(format!(
            "argument s = {s} must be a non-negative number"
        )));
    }
    if s.is_infinite() {
        return Err(Error::OutOfRange(format!("argument s = {s}")));
    }
    Ok(())
}

/// `Σ_k σ^k (s²/4)^k / (k! Γ(ν+k+1)) · 2^{-ν}` with `σ = ±1`.
fn reduced_series(nu: f64, s: f64, sign: f64) -> EvalResult {
    let q = sign * 0.25 * s * s;
    let mut term = 1.0 / (2f64.powf(nu) * gamma(nu + 1.0));
    let mut sum = term;
    let mut abs_sum = term.abs();
    let mut k = 1.0;
    loop {
        term *= q / (k * (nu + k));
        sum += term;
        abs_sum += term.abs();
        if term.abs() <= 0.5 * EPS * abs_sum && k > 0.5 * s {
            break;
        }
        k += 1.0;
    }
    EvalResult {
        value: sum,
        abs_err_estimate: 4.0 * EPS * abs_sum + term.abs(),
    }
}

// ---------------------------------------------------------------------------
// Steed's method for J_ν, ν ≥ 0, s ≥ 2

fn steed_j(xnu: f64, x: f64) -> Result<(f64, f64)> {
    let nl = ((xnu - x + 1.5).floor()).max(0.0) as usize;
    let xmu = xnu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    let mut isign = 1.0;
    let mut h = (xnu * xi).max(FPMIN);
    let mut b = xi2 * xnu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations: MAXIT,
            residual: h,
        });
    }

    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let rjp1 = rjpl;
    let mut fact = xnu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    // CF2: p + iq = (J' + iY')/(J + iY) at order μ.
    let mut a = 0.25 - xmu2;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    let mut converged = false;
    for i in 2..MAXIT {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations: MAXIT,
            residual: (dlr - 1.0).abs(),
        });
    }
    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    let scale = rjmu / rjl;
    Ok((rjl1 * scale, rjp1 * scale))
}

/// `J_ν(s)` for `ν ≥ -1/2`, `s > J_SERIES_MAX`.
fn j_large(nu: f64, s: f64) -> Result<EvalResult> {
    let value = if nu >= 0.0 {
        steed_j(nu, s)?.0
    } else {
        // One downward step from non-negative orders.
        let j1 = steed_j(nu + 1.0, s)?.0;
        let j2 = steed_j(nu + 2.0, s)?.0;
        2.0 * (nu + 1.0) / s * j1 - j2
    };
    let envelope = (2.0 / (PI * s)).sqrt();
    Ok(EvalResult {
        value,
        abs_err_estimate: 32.0 * EPS * (value.abs() + envelope) * (1.0 + s.sqrt()),
    })
}

// ---------------------------------------------------------------------------
// Temme/Steed route for the scaled I_ν, ν ≥ 0, s ≥ 2

fn scaled_i_cf(xnu: f64, x: f64) -> Result<f64> {
    let nl = (xnu + 0.5).floor() as usize;
    let xmu = xnu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    let mut h = (xnu * xi).max(FPMIN);
    let mut b = xi2 * xnu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations: MAXIT,
            residual: h,
        });
    }
    let mut ril = FPMIN;
    let mut ripl = h * ril;
    let ril1 = ril;
    let mut fact = xnu * xi;
    for _ in 0..nl {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
    }
    let f = ripl / ril;

    // Steed's CF2 for K_μ, scaled by e^{x}.
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - xmu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..MAXIT {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations: MAXIT,
            residual: s,
        });
    }
    h *= a1;
    let rkmu = (PI / (2.0 * x)).sqrt() / s;
    let rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
    let rkmup = xmu * xi * rkmu - rk1;
    let rimu = xi / (f * rkmu - rkmup);
    Ok(rimu * ril1 / ril)
}

fn i_scaled_large(nu: f64, s: f64) -> Result<EvalResult> {
    let value = if nu >= 0.0 {
        scaled_i_cf(nu, s)?
    } else {
        let i1 = scaled_i_cf(nu + 1.0, s)?;
        let i2 = scaled_i_cf(nu + 2.0, s)?;
        i2 + 2.0 * (nu + 1.0) / s * i1
    };
    Ok(EvalResult {
        value,
        abs_err_estimate: 32.0 * EPS * value.abs(),
    })
}

// ---------------------------------------------------------------------------
// Raw-order evaluators

/// `J_ν(s)` for a raw order.
pub fn jv(nu: f64, s: f64) -> Result<EvalResult> {
    check_raw(nu, s)?;
    if s <= J_SERIES_MAX {
        if s == 0.0 && nu < 0.0 {
            return Err(Error::OutOfRange(format!("J_{nu}(0) is unbounded")));
        }
        let r = reduced_series(nu, s, -1.0);
        Ok(r.scale(s.powf(nu)))
    } else {
        j_large(nu, s)
    }
}

/// `s^{-ν}J_ν(s)`, finite at `s = 0`.
pub fn jr(nu: f64, s: f64) -> Result<EvalResult> {
    check_raw(nu, s)?;
    if s <= J_SERIES_MAX {
        Ok(reduced_series(nu, s, -1.0))
    } else {
        Ok(j_large(nu, s)?.scale(s.powf(-nu)))
    }
}

/// `e^{-s}I_ν(s)`.
pub fn iv_scaled(nu: f64, s: f64) -> Result<EvalResult> {
    check_raw(nu, s)?;
    if s < 2.0 {
        if s == 0.0 && nu < 0.0 {
            return Err(Error::OutOfRange(format!("I_{nu}(0) is unbounded")));
        }
        let r = reduced_series(nu, s, 1.0);
        Ok(r.scale(s.powf(nu) * (-s).exp()))
    } else {
        i_scaled_large(nu, s)
    }
}

/// `I_ν(s)`.
pub fn iv(nu: f64, s: f64) -> Result<EvalResult> {
    check_raw(nu, s)?;
    if s <= I_SERIES_MAX {
        if s == 0.0 && nu < 0.0 {
            return Err(Error::OutOfRange(format!("I_{nu}(0) is unbounded")));
        }
        Ok(reduced_series(nu, s, 1.0).scale(s.powf(nu)))
    } else if s > I_OVERFLOW {
        Err(Error::OutOfRange(format!(
            "I_{nu}({s}) overflows; use the scaled form"
        )))
    } else {
        Ok(i_scaled_large(nu, s)?.scale(s.exp()))
    }
}

/// `s^{-ν}I_ν(s)`, finite at `s = 0`.
pub fn ir(nu: f64, s: f64) -> Result<EvalResult> {
    check_raw(nu, s)?;
    if s <= I_SERIES_MAX {
        Ok(reduced_series(nu, s, 1.0))
    } else if s > I_OVERFLOW {
        Err(Error::OutOfRange(format!("I_{nu}({s}) overflows")))
    } else {
        Ok(i_scaled_large(nu, s)?.scale(s.exp() * s.powf(-nu)))
    }
}

// Modified Lentz for  b1 + σ/(b2 + σ/(b3 + …)),  b_k = 2(ν+k)/s.
fn ratio_denominator(nu: f64, s: f64, sigma: f64) -> Result<f64> {
    let b = |k: f64| 2.0 * (nu + k) / s;
    let tiny = 1e-300;
    let mut f = b(1.0);
    if f == 0.0 {
        f = tiny;
    }
    let mut c = f;
    let mut d = 0.0;
    let mut k = 2.0;
    for _ in 0..MAXIT {
        let bk = b(k);
        d = bk + sigma * d;
        if d == 0.0 {
            d = tiny;
        }
        c = bk + sigma / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(f);
        }
        k += 1.0;
    }
    Err(Error::NotConverged {
        iterations: MAXIT,
        residual: f,
    })
}

/// Relative size below which the continued-fraction denominator is treated as
/// a zero of `J_ν`.
const POLE_TOL: f64 = 1e-13;

/// `J_{ν+1}(s)/J_ν(s)` for a raw order, from the Gauss continued fraction.
pub fn ratio_j_raw(nu: f64, s: f64) -> Result<f64> {
    check_raw(nu, s)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let den = ratio_denominator(nu, s, -1.0)?;
    if den.abs() <= POLE_TOL * (1.0 + 2.0 * (nu + 1.0) / s) {
        return Err(Error::Pole { nu, s });
    }
    Ok(1.0 / den)
}

/// `I_{ν+1}(s)/I_ν(s)` for a raw order.
pub fn ratio_i_raw(nu: f64, s: f64) -> Result<f64> {
    check_raw(nu, s)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / ratio_denominator(nu, s, 1.0)?)
}

// ---------------------------------------------------------------------------
// Public API on validated orders

pub fn bessel_j(nu: Order, s: f64) -> Result<EvalResult> {
    jv(nu.nu, s)
}

pub fn bessel_i(nu: Order, s: f64) -> Result<EvalResult> {
    iv(nu.nu, s)
}

pub fn bessel_i_scaled(nu: Order, s: f64) -> Result<EvalResult> {
    iv_scaled(nu.nu, s)
}

pub fn ratio_j(nu: Order, s: f64) -> Result<f64> {
    ratio_j_raw(nu.nu, s)
}

pub fn ratio_i(nu: Order, s: f64) -> Result<f64> {
    ratio_i_raw(nu.nu, s)
}

/// McMahon's large-zero expansion, used only as a starting point.
fn mcmahon(nu: f64, k: usize) -> f64 {
    let beta = (k as f64 + nu / 2.0 - 0.25) * PI;
    let mu = 4.0 * nu * nu;
    let e = 8.0 * beta;
    beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e.powi(3))
}

/// Bisection to width `width`, then safeguarded Newton. `f` returns `(g, g')`.
fn refine_root<F>(f: F, mut lo: f64, mut hi: f64, width: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let mut flo = f(lo)?.0;
    let fhi = f(hi)?.0;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoBracket(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?.0;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..60 {
        let (g, dg) = f(x)?;
        if g == 0.0 {
            return Ok(x);
        }
        if g.signum() == flo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * EPS * x.abs() {
            return Ok(x);
        }
    }
    Ok(x)
}

fn j_and_derivative(nu: f64, s: f64) -> Result<(f64, f64)> {
    let j = jv(nu, s)?.value;
    let j1 = jv(nu + 1.0, s)?.value;
    Ok((j, nu / s * j - j1))
}

/// `j_{ν,k}` for a raw order.
pub fn zero_j_raw(nu: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("zero index k must be >= 1"));
    }
    check_raw(nu, 1.0)?;
    let guess = mcmahon(nu, k);
    let lo = (guess - 1.2).max(1e-3);
    let hi = guess + 1.2;
    let root = refine_root(|s| j_and_derivative(nu, s), lo, hi, 1e-6)?;
    let d = 1e-9 * root.max(1.0);
    let left = jv(nu, root - d)?.value;
    let right = jv(nu, root + d)?.value;
    if left.signum() == right.signum() {
        return Err(Error::NoBracket(format!(
            "J_{nu} has no sign change across computed zero {root}"
        )));
    }
    Ok(root)
}

/// `j_{ν,k}`, the `k`-th positive zero of `J_ν`.
pub fn zero_j(nu: Order, k: usize) -> Result<f64> {
    zero_j_raw(nu.nu, k)
}

/// `J_ν I'_ν − J'_ν I_ν = J_ν I_{ν+1} + J_{ν+1} I_ν` for a raw order.
pub fn cross_product_raw(nu: f64, s: f64) -> Result<f64> {
    if s.is_nan() || s <= 0.0 {
        return Err(Error::domain(format!("cross product needs s > 0, got {s}")));
    }
    let j0 = jv(nu, s)?.value;
    let j1 = jv(nu + 1.0, s)?.value;
    let i0 = iv(nu, s)?.value;
    let i1 = iv(nu + 1.0, s)?.value;
    Ok(j0 * i1 + j1 * i0)
}

/// `J_ν I'_ν − J'_ν I_ν`.
pub fn cross_product(nu: Order, s: f64) -> Result<f64> {
    cross_product_raw(nu.nu, s)
}

fn cross_and_derivative(nu: f64, s: f64) -> Result<(f64, f64)> {
    let j0 = jv(nu, s)?.value;
    let j1 = jv(nu + 1.0, s)?.value;
    let i0 = iv(nu, s)?.value;
    let i1 = iv(nu + 1.0, s)?.value;
    let c = j0 * i1 + j1 * i0;
    Ok((c, -c / s + 2.0 * j0 * i0))
}

/// First positive root `h_ν` of the cross product, located in `(j_{ν,1}, j_{ν,2})`.
pub fn root_h_raw(nu: f64) -> Result<f64> {
    let j1 = zero_j_raw(nu, 1)?;
    let j2 = zero_j_raw(nu, 2)?;
    refine_root(|s| cross_and_derivative(nu, s), j1, j2, 1e-6)
}

pub fn root_h(nu: Order) -> Result<f64> {
    root_h_raw(nu.nu)
}
