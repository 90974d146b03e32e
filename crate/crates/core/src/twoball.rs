//! Coupled two-ball reduction: `K_ν`, the 4×4 determinant condition and the
//! first root `h_ν(a)` of `h ↦ K_ν(ha) + K_ν(hb)` with `a^N + b^N = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{self, iv, jv, ratio_i_raw, ratio_j_raw, Order};
use crate::error::{Error, Result};
use crate::model_space::SpectralParams;

/// Depth of the pole ladder kept per radius.
pub const K_POLES: usize = 10;

/// Grid points below this radius are skipped by [`reduction_sweep`].
pub const A_MIN: f64 = 1e-3;

/// `K_ν(s) = s^{2ν+1}(J_{ν+1}/J_ν(s) + I_{ν+1}/I_ν(s))`, with `K_ν(0) = 0`.
pub fn k_nu(nu: Order, s: f64) -> Result<f64> {
    k_raw(nu.nu(), s)
}

pub(crate) fn k_raw(nu: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(s.powf(2.0 * nu + 1.0) * (ratio_j_raw(nu, s)? + ratio_i_raw(nu, s)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBallInstance {
    pub params: SpectralParams,
    pub a: f64,
    pub b: f64,
    pub pole_ladder: Vec<f64>,
    #[serde(skip)]
    j: Vec<f64>,
}

impl TwoBallInstance {
    /// `a ∈ (0, 2^{-1/N}]`, `b = (1 − a^N)^{1/N}`.
    pub fn new(params: SpectralParams, a: f64) -> Result<Self> {
        let n = params.n;
        let a_sym = symmetric_radius(n);
        if !(a > 0.0 && a <= a_sym * (1.0 + 1e-14)) {
            return Err(Error::domain(format!(
                "a = {a} outside (0, 2^(-1/N)] = (0, {a_sym}]"
            )));
        }
        let a = a.min(a_sym);
        let b = if a == a_sym {
            a_sym
        } else {
            (1.0 - a.powf(n)).powf(1.0 / n)
        };
        let j = bessel::ZeroTable::new(params.nu, K_POLES)?.zeros;
        let mut ladder: Vec<f64> = j.iter().flat_map(|&z| [z / a, z / b]).collect();
        ladder.sort_by(f64::total_cmp);
        ladder.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs());
        Ok(TwoBallInstance {
            params,
            a,
            b,
            pole_ladder: ladder,
            j,
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (self.a - self.b).abs() <= 1e-12
    }

    /// `h ↦ K_ν(ha) + K_ν(hb)`.
    pub fn k_sum(&self, h: f64) -> Result<f64> {
        let nu = self.params.nu();
        Ok(k_raw(nu, h * self.a)? + k_raw(nu, h * self.b)?)
    }

    /// `(j_{ν,1}/b, min{j_{ν,1}/a, j_{ν,2}/b})`.
    pub fn bracket(&self) -> (f64, f64) {
        (
            self.j[0] / self.b,
            (self.j[0] / self.a).min(self.j[1] / self.b),
        )
    }
}

/// `2^{-1/N}`, where `a = b`.
pub fn symmetric_radius(n: f64) -> f64 {
    2f64.powf(-1.0 / n)
}

/// The printed 4×4 determinant at `(a, b, h)`, by cofactor expansion.
pub fn determinant4_raw(nu: f64, a: f64, b: f64, h: f64) -> Result<f64> {
    let (ha, hb) = (h * a, h * b);
    let ja = jv(nu, ha)?.value;
    let ia = iv(nu, ha)?.value;
    let jb = jv(nu, hb)?.value;
    let ib = iv(nu, hb)?.value;
    let ja1 = jv(nu + 1.0, ha)?.value;
    let ia1 = iv(nu + 1.0, ha)?.value;
    let jb1 = jv(nu + 1.0, hb)?.value;
    let ib1 = iv(nu + 1.0, hb)?.value;
    let pa = a.powf(nu + 1.0);
    let pb = b.powf(nu + 1.0);
    let qa = a.powf(-nu);
    let qb = b.powf(-nu);
    let m = [
        [ja, ia, 0.0, 0.0],
        [0.0, 0.0, jb, ib],
        [-ja1 * pa, ia1 * pa, jb1 * pb, -ib1 * pb],
        [-ja * qa, ia * qa, -jb * qb, ib * qb],
    ];
    Ok(det4(&m))
}

pub fn determinant4(inst: &TwoBallInstance, h: f64) -> Result<f64> {
    determinant4_raw(inst.params.nu(), inst.a, inst.b, h)
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut d = 0.0;
    for col in 0..4 {
        let mut minor = [[0.0; 3]; 3];
        for (r, row) in m.iter().enumerate().skip(1) {
            let mut c2 = 0;
            for (c, &v) in row.iter().enumerate() {
                if c != col {
                    minor[r - 1][c2] = v;
                    c2 += 1;
                }
            }
        }
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        d += sign * m[0][col] * det3(minor);
    }
    d
}

/// Scale of the determinant entries, used to judge a vanishing value.
pub fn determinant_scale(inst: &TwoBallInstance, h: f64) -> Result<f64> {
    let nu = inst.params.nu();
    let mut s: f64 = 0.0;
    for (x, p1, p2) in [
        (h * inst.a, inst.a.powf(nu + 1.0), inst.a.powf(-nu)),
        (h * inst.b, inst.b.powf(nu + 1.0), inst.b.powf(-nu)),
    ] {
        for v in [
            jv(nu, x)?.value * p2.max(1.0),
            iv(nu, x)?.value * p2.max(1.0),
            jv(nu + 1.0, x)?.value * p1,
            iv(nu + 1.0, x)?.value * p1,
        ] {
            s = s.max(v.abs());
        }
    }
    Ok(s.powi(4))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub h_of_a: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
}

/// First positive zero of `h ↦ K_ν(ha) + K_ν(hb)` by bisection inside
/// `(j_{ν,1}/b, min{j_{ν,1}/a, j_{ν,2}/b})`.
pub fn first_root_h_of_a(inst: &TwoBallInstance) -> Result<RootResult> {
    if inst.is_symmetric() {
        return Err(Error::DegenerateBracket(format!(
            "a = b = {}: the bracketing poles merge, use symmetric_limit",
            inst.a
        )));
    }
    let (lo0, hi0) = inst.bracket();
    // The sum runs from −∞ just right of lo0 to +∞ just left of hi0.
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = match inst.k_sum(mid) {
            Ok(v) => v,
            Err(Error::Pole { .. }) => {
                return Err(Error::NoBracket(format!("pole inside bracket at {mid}")))
            }
            Err(e) => return Err(e),
        };
        if v < 0.0 {
            lo = mid;
        } else if v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    if !(root > lo0 && root < hi0) {
        return Err(Error::NoBracket(format!(
            "root {root} escaped bracket ({lo0}, {hi0})"
        )));
    }
    let residual = inst.k_sum(root)?;
    let delta = 1e-9 * root;
    let left = inst.k_sum(root - delta)?;
    let right = inst.k_sum(root + delta)?;
    if !(left < 0.0 && right > 0.0) {
        return Err(Error::NoBracket(format!("no sign change across {root}")));
    }
    Ok(RootResult {
        h_of_a: root,
        bracket: (lo0, hi0),
        residual,
    })
}

/// `h_ν(2^{-1/N}) = 2^{1/N} j_{ν,1}`.
pub fn symmetric_limit(params: &SpectralParams) -> Result<f64> {
    Ok(2f64.powf(1.0 / params.n) * bessel::zero_j(params.nu, 1)?)
}

/// `h_ν(a)`, dispatching to the analytic limit at `a = b`.
pub fn h_of_a(inst: &TwoBallInstance) -> Result<f64> {
    if inst.is_symmetric() {
        symmetric_limit(&inst.params)
    } else {
        Ok(first_root_h_of_a(inst)?.h_of_a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionRecord {
    pub a: f64,
    pub b: f64,
    pub h_of_a: f64,
    pub h_nu: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub n: f64,
    pub grid_size: usize,
    pub h_nu: f64,
    pub records: Vec<ReductionRecord>,
    pub min_margin: f64,
    pub argmin_a: f64,
    pub endpoint_margin: f64,
    pub counterexamples: Vec<ReductionRecord>,
}

impl ReductionReport {
    pub fn all_positive(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// `h_ν(a) − h_ν` over `a_i = i·2^{-1/N}/grid_size`, `i = 1..grid_size`,
/// skipping `a < A_MIN`.
pub fn reduction_sweep(params: &SpectralParams, grid_size: usize) -> Result<ReductionReport> {
    if grid_size == 0 {
        return Err(Error::domain("grid_size must be positive"));
    }
    let h_nu = params.h()?;
    let a_sym = symmetric_radius(params.n);
    let records = (1..=grid_size)
        .into_par_iter()
        .map(|i| a_sym * i as f64 / grid_size as f64)
        .filter(|&a| a >= A_MIN)
        .map(|a| {
            let a = if a > a_sym { a_sym } else { a };
            let inst = TwoBallInstance::new(*params, a)?;
            let h = h_of_a(&inst)?;
            Ok(ReductionRecord {
                a: inst.a,
                b: inst.b,
                h_of_a: h,
                h_nu,
                margin: h - h_nu,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (min_margin, argmin_a) = records.iter().fold((f64::INFINITY, f64::NAN), |(m, x), r| {
        if r.margin < m {
            (r.margin, r.a)
        } else {
            (m, x)
        }
    });
    let counterexamples = records
        .iter()
        .filter(|r| !(r.margin > 0.0))
        .copied()
        .collect();
    let endpoint_margin = records.last().map(|r| r.margin).unwrap_or(f64::NAN);
    Ok(ReductionReport {
        n: params.n,
        grid_size,
        h_nu,
        records,
        min_margin,
        argmin_a,
        endpoint_margin,
        counterexamples,
    })
}
