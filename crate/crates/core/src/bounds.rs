//! Certification of `A(ν,a) + B(ν,a) < 0` through the bounds `α(ν)` and
//! `β(ν)`, the negativity scan over `N`, and the threshold dimension `N₀`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{self, Order};
use crate::error::{Error, Result};
use crate::model_space::SpectralParams;
use crate::twoball::symmetric_radius;

/// Default number of zeros summed directly in [`b_direct`].
pub const K_MAX_DEFAULT: usize = 200;
/// Default scan density for [`alpha_max`].
pub const SCAN_POINTS_DEFAULT: usize = 4096;
/// Gap kept from `a_max`, where `A` is singular.
pub const A_MAX_CLIP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub nu: Order,
    pub n: f64,
    pub h: f64,
    pub j1: f64,
    pub j2: f64,
    /// `h⁴/j₂⁴`, the value used in the bound chain.
    pub delta: f64,
    /// `h⁴/j₂²`, recorded for comparison; it exceeds 1 for the cases of
    /// interest and cannot be used.
    pub delta_alt: f64,
    pub a_max: f64,
    #[serde(skip)]
    zeros: Vec<f64>,
}

impl BoundConstants {
    pub fn new(params: &SpectralParams) -> Result<Self> {
        Self::with_zero_count(params, K_MAX_DEFAULT)
    }

    /// As [`BoundConstants::new`], caching the first `count ≥ 2` zeros.
    pub fn with_zero_count(params: &SpectralParams, count: usize) -> Result<Self> {
        let nu = params.nu;
        let n = params.n;
        let h = bessel::root_h(nu)?;
        let zeros = bessel::ZeroTable::new(nu, count.max(2))?.zeros;
        let (j1, j2) = (zeros[0], zeros[1]);
        let delta = (h / j2).powi(4);
        let delta_alt = h.powi(4) / (j2 * j2);
        let a_max = (1.0 - (j1 / h).powf(n)).powf(1.0 / n);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConstants(format!(
                "delta = {delta} not in (0, 1)"
            )));
        }
        if !(a_max > 0.0 && a_max < symmetric_radius(n)) {
            return Err(Error::InvalidConstants(format!(
                "a_max = {a_max} not in (0, 2^(-1/N)); the dimension is at or beyond N0"
            )));
        }
        Ok(BoundConstants {
            nu,
            n,
            h,
            j1,
            j2,
            delta,
            delta_alt,
            a_max,
            zeros,
        })
    }

    pub fn b_of(&self, a: f64) -> f64 {
        (1.0 - a.powf(self.n)).powf(1.0 / self.n)
    }

    fn zero(&self, k: usize) -> Result<f64> {
        match self.zeros.get(k - 1) {
            Some(&z) => Ok(z),
            None => bessel::zero_j(self.nu, k),
        }
    }
}

/// `Σ_{k≥1} j_{ν,k}^{-4} = 1/(16(ν+1)²(ν+2))`.
pub fn rayleigh_sum(nu: f64) -> f64 {
    1.0 / (16.0 * (nu + 1.0).powi(2) * (nu + 2.0))
}

fn check_admissible(c: &BoundConstants, a: f64) -> Result<()> {
    if !(a >= 0.0 && a < c.a_max) {
        return Err(Error::domain(format!(
            "a = {a} outside [0, a_max = {})",
            c.a_max
        )));
    }
    Ok(())
}

/// `A(ν,a)`; `a = 0` is taken as the continuous extension.
pub fn a_term(c: &BoundConstants, a: f64) -> Result<f64> {
    check_admissible(c, a)?;
    let b = c.b_of(a);
    let e = 4.0 - c.n;
    let j4 = c.j1.powi(4);
    let num = c.h.powi(4) * (a * b).powf(e) - j4 * (a.powf(e) + b.powf(e));
    let d1 = j4 - (c.h * a).powi(4);
    let d2 = (c.h * b).powi(4) - j4;
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::domain(format!(
            "denominator factors not positive at a = {a}: {d1}, {d2}"
        )));
    }
    Ok(num / (d1 * d2))
}

/// `β(ν) = 2^{2−4/N}/(1−δ) · (Σ_k j_{ν,k}^{-4} − j_{ν,1}^{-4})`.
pub fn beta_bound(c: &BoundConstants) -> Result<f64> {
    if c.delta >= 1.0 {
        return Err(Error::InvalidConstants(format!("delta = {} >= 1", c.delta)));
    }
    let tail = rayleigh_sum(c.nu.nu()) - c.j1.powi(-4);
    Ok(2f64.powf(2.0 - 4.0 / c.n) / (1.0 - c.delta) * tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: f64,
    pub tail_bound: f64,
}

/// `Σ_{k>K} j_{ν,k}^{-4} ≤ 1/(3π⁴(K−1/2)³)`, from `j_{ν,k} ≥ (k−1/2)π`.
pub fn zero_tail_bound(k_max: usize) -> f64 {
    1.0 / (3.0 * PI.powi(4) * (k_max as f64 - 0.5).powi(3))
}

/// Direct evaluation of `B(ν,a)` over `2 ≤ k ≤ k_max` plus a bound on the rest.
pub fn b_direct(c: &BoundConstants, a: f64, k_max: usize) -> Result<Truncated> {
    check_admissible(c, a)?;
    if k_max < 2 {
        return Err(Error::domain("k_max must be at least 2"));
    }
    let b = c.b_of(a);
    let e = 4.0 - c.n;
    let (ha4, hb4) = ((c.h * a).powi(4), (c.h * b).powi(4));
    let (mut sa, mut sb) = (0.0, 0.0);
    // Backwards so the small terms are added first.
    for k in (2..=k_max).rev() {
        let j4 = c.zero(k)?.powi(4);
        sa += 1.0 / (j4 - ha4);
        sb += 1.0 / (j4 - hb4);
    }
    let wa = a.powf(e);
    let wb = b.powf(e);
    Ok(Truncated {
        value: wa * sa + wb * sb,
        tail_bound: (wa + wb) / (1.0 - c.delta) * zero_tail_bound(k_max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMax {
    pub alpha: f64,
    pub argmax: f64,
}

/// `α(ν) = max A(ν,·)` over `[0, a_max − A_MAX_CLIP]`: dense scan, then
/// golden-section refinement around the best sample.
pub fn alpha_max(c: &BoundConstants, scan_points: usize) -> Result<AlphaMax> {
    let scan_points = scan_points.max(8);
    let hi = c.a_max - A_MAX_CLIP;
    let grid: Vec<f64> = (0..=scan_points)
        .map(|i| hi * i as f64 / scan_points as f64)
        .collect();
    let values = grid
        .iter()
        .map(|&a| a_term(c, a))
        .collect::<Result<Vec<_>>>()?;
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let mut lo = grid[best.saturating_sub(1)];
    let mut up = grid[(best + 1).min(scan_points)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = up - g * (up - lo);
    let mut x2 = lo + g * (up - lo);
    let mut f1 = a_term(c, x1)?;
    let mut f2 = a_term(c, x2)?;
    for _ in 0..200 {
        if up - lo <= 1e-14 * (1.0 + up.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (up - lo);
            f2 = a_term(c, x2)?;
        } else {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - g * (up - lo);
            f1 = a_term(c, x1)?;
        }
    }
    let candidates = [(values[best], grid[best]), (f1, x1), (f2, x2)];
    let (alpha, argmax) =
        candidates.into_iter().fold(
            (f64::NEG_INFINITY, 0.0),
            |acc, c| if c.0 > acc.0 { c } else { acc },
        );
    Ok(AlphaMax { alpha, argmax })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub nu: f64,
    pub n: f64,
    pub alpha: f64,
    pub alpha_argmax: f64,
    pub beta: f64,
    pub sum: f64,
    pub err_estimate: f64,
    pub certified_negative: bool,
    pub delta: f64,
    pub delta_alt: f64,
    pub note: Option<String>,
}

/// Relative error budget attached to `α + β`: Bessel constants are good to
/// ~1e-14 relative and the scan/golden refinement to ~1e-12.
const SUM_REL_ERR: f64 = 1e-9;

pub fn certify(params: &SpectralParams, scan_points: usize) -> Result<NegativityReport> {
    let c = BoundConstants::with_zero_count(params, 2)?;
    let am = alpha_max(&c, scan_points)?;
    let beta = beta_bound(&c)?;
    let sum = am.alpha + beta;
    let err = SUM_REL_ERR * (am.alpha.abs() + beta.abs());
    Ok(NegativityReport {
        nu: c.nu.nu(),
        n: c.n,
        alpha: am.alpha,
        alpha_argmax: am.argmax,
        beta,
        sum,
        err_estimate: err,
        certified_negative: sum + err < 0.0,
        delta: c.delta,
        delta_alt: c.delta_alt,
        note: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityScan {
    pub n_lo: f64,
    pub n_hi: f64,
    pub step: f64,
    pub reports: Vec<NegativityReport>,
    /// Maximal runs of consecutive certified grid points, as `[N_first, N_last]`.
    pub certified_intervals: Vec<(f64, f64)>,
}

pub fn negativity_scan(n_lo: f64, n_hi: f64, step: f64) -> Result<NegativityScan> {
    if !(step > 0.0) || !(n_hi >= n_lo) {
        return Err(Error::domain("scan needs step > 0 and N_hi >= N_lo"));
    }
    let count = ((n_hi - n_lo) / step + 1e-9).floor() as usize + 1;
    let reports: Vec<NegativityReport> = (0..count)
        .into_par_iter()
        .map(|i| {
            let n = n_lo + step * i as f64;
            let failed = |note: String| NegativityReport {
                nu: n / 2.0 - 1.0,
                n,
                alpha: f64::NAN,
                alpha_argmax: f64::NAN,
                beta: f64::NAN,
                sum: f64::NAN,
                err_estimate: f64::NAN,
                certified_negative: false,
                delta: f64::NAN,
                delta_alt: f64::NAN,
                note: Some(note),
            };
            match SpectralParams::new(n).and_then(|p| certify(&p, SCAN_POINTS_DEFAULT)) {
                Ok(r) => r,
                Err(e) => failed(e.to_string()),
            }
        })
        .collect();
    let mut intervals = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for r in &reports {
        if r.certified_negative {
            run = Some(match run {
                Some((s, _)) => (s, r.n),
                None => (r.n, r.n),
            });
        } else if let Some(iv) = run.take() {
            intervals.push(iv);
        }
    }
    intervals.extend(run);
    Ok(NegativityScan {
        n_lo,
        n_hi,
        step,
        reports,
        certified_intervals: intervals,
    })
}

/// `g(N) = 2^{1/N} j_{ν,1} − h_ν` with `ν = N/2 − 1`.
pub fn n0_gap(n: f64) -> Result<f64> {
    let nu = Order::from_dim(n)?;
    Ok(2f64.powf(1.0 / n) * bessel::zero_j(nu, 1)? - bessel::root_h(nu)?)
}

/// Sign change of [`n0_gap`] on `[3, 3.6]` by bisection.
pub fn compute_n0(tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("tol must be positive"));
    }
    let (mut lo, mut hi) = (3.0, 3.6);
    let glo = n0_gap(lo)?;
    let ghi = n0_gap(hi)?;
    if !(glo > 0.0 && ghi < 0.0) {
        return Err(Error::NoBracket(format!("g(3) = {glo}, g(3.6) = {ghi}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if n0_gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(n: f64) -> BoundConstants {
        BoundConstants::new(&SpectralParams::new(n).unwrap()).unwrap()
    }

    #[test]
    fn constants_n2() {
        let c = consts(2.0);
        assert!((c.delta - 0.112_399_945_718_660_98).abs() < 1e-12);
        assert!(c.delta_alt > 1.0);
        assert!((c.a_max - 0.658_710_361_847_496_4).abs() < 1e-12);
    }

    #[test]
    fn a_limit_at_origin() {
        let c = consts(2.0);
        let want = -1.0 / (c.h.powi(4) - c.j1.powi(4));
        assert!((a_term(&c, 0.0).unwrap() - want).abs() < 1e-15);
        assert!((want + 0.014_10).abs() < 1e-4);
        assert!(a_term(&c, c.a_max).is_err());
        assert!(a_term(&c, c.a_max - 1e-6).unwrap() < -1e3);
    }

    #[test]
    fn a_symmetric_form() {
        let c = consts(2.0);
        let a: f64 = 0.3;
        let b = c.b_of(a);
        let e = 4.0 - c.n;
        let j4 = c.j1.powi(4);
        // Same expression with the roles written through b first.
        let num = c.h.powi(4) * (b * a).powf(e) - j4 * (b.powf(e) + a.powf(e));
        let den = ((c.h * b).powi(4) - j4) * (j4 - (c.h * a).powi(4));
        assert!((a_term(&c, a).unwrap() - num / den).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_sum_by_brute_force() {
        let c = consts(2.0);
        let mut s = 0.0;
        for k in (1..=K_MAX_DEFAULT).rev() {
            s += c.zero(k).unwrap().powi(-4);
        }
        let tail = zero_tail_bound(K_MAX_DEFAULT);
        assert!(s <= 1.0 / 32.0 && s + tail >= 1.0 / 32.0 - 1e-15);
        assert!((s - 1.0 / 32.0).abs() < 1e-8);
        assert!((1.0 / 32.0 - c.j1.powi(-4) - 0.001_349).abs() < 2e-6);
    }

    #[test]
    fn beta_n2() {
        let c = consts(2.0);
        assert!((beta_bound(&c).unwrap() - 0.001_521_382_176_143_136_5).abs() < 1e-12);
    }

    #[test]
    fn b_direct_below_beta_and_converges() {
        let c = BoundConstants::with_zero_count(&SpectralParams::new(2.0).unwrap(), 400).unwrap();
        let beta = beta_bound(&c).unwrap();
        for i in 0..20 {
            let a = c.a_max * (i as f64 + 0.5) / 20.0;
            let b = b_direct(&c, a, K_MAX_DEFAULT).unwrap();
            assert!(b.value + b.tail_bound <= beta);
            let b2 = b_direct(&c, a, 2 * K_MAX_DEFAULT).unwrap();
            assert!((b2.value - b.value).abs() <= b.tail_bound);
        }
    }

    #[test]
    fn alpha_stable_under_refinement() {
        let c = consts(2.0);
        let a1 = alpha_max(&c, 4096).unwrap();
        let a2 = alpha_max(&c, 8192).unwrap();
        assert!((a1.alpha - a2.alpha).abs() < 1e-8);
        assert!((a1.alpha + 0.014_075_188_168_201_47).abs() < 1e-10);
    }

    #[test]
    fn n0_gap_signs() {
        assert!((n0_gap(2.0).unwrap() - 0.204_716_302_25).abs() < 1e-9);
        assert!(n0_gap(3.5).unwrap() < 0.0);
        assert!(BoundConstants::new(&SpectralParams::new(3.5).unwrap()).is_err());
    }
}
