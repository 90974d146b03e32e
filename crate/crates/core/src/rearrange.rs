//! Distribution functions, generalized inverses and decreasing
//! rearrangements of sampled radial data, and the `F_±`, `V_±`
//! constructions built from the rearranged Laplacian.

use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_space::{RadialFn, RadialProfile, SpectralParams};

/// Relative size below which a mass interval is treated as empty.
const SLIVER: f64 = 1e-12;

/// Radial samples against a discrete measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
    masses: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    radius: f64,
    value: f64,
    mass: f64,
}

impl MeasuredProfile {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != values.len() || nodes.len() != masses.len() {
            return Err(Error::domain(format!(
                "profile columns have lengths {}, {}, {}",
                nodes.len(),
                values.len(),
                masses.len()
            )));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("nodes must be strictly increasing"));
        }
        if let Some(i) = masses.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::domain(format!("mass at node {i} is {}", masses[i])));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("value at node {i} is not finite")));
        }
        Ok(MeasuredProfile {
            nodes,
            values,
            masses,
        })
    }

    /// Sample `f` at `nodes` against the given masses.
    pub fn sample(nodes: &[f64], masses: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            nodes.to_vec(),
            nodes.iter().map(|&r| f(r)).collect(),
            masses.to_vec(),
        )
    }

    /// Cell-centred sampling of `[r0, r1]` with the exact shell mass
    /// `avr·ω_N(r_{i+1}^N − r_i^N)` on each of `cells` cells.
    pub fn on_cone(
        params: &SpectralParams,
        avr: f64,
        r0: f64,
        r1: f64,
        cells: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(r0 >= 0.0 && r1 > r0 && cells > 0 && avr > 0.0) {
            return Err(Error::domain(format!(
                "cone mesh [{r0}, {r1}] with {cells} cells and avr {avr}"
            )));
        }
        let h = (r1 - r0) / cells as f64;
        let n = params.n;
        let c = avr * params.omega_n;
        let nodes: Vec<f64> = (0..cells).map(|i| r0 + (i as f64 + 0.5) * h).collect();
        let masses = (0..cells)
            .map(|i| {
                let lo = r0 + i as f64 * h;
                c * ((lo + h).powf(n) - lo.powf(n))
            })
            .collect();
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::new(nodes, values, masses)
    }

    /// Shell averages of `Δ_{0,N} p` on the cone mesh of [`MeasuredProfile::on_cone`],
    /// `N r^{N−1}p'|_{r_i}^{r_{i+1}} / (r_{i+1}^N − r_i^N)`; the weighted sum telescopes
    /// to the boundary flux, so it vanishes exactly for clamped `p` on a ball.
    pub fn laplacian_on_cone(
        params: &SpectralParams,
        avr: f64,
        r0: f64,
        r1: f64,
        cells: usize,
        p: &RadialProfile,
    ) -> Result<Self> {
        let mut out = Self::on_cone(params, avr, r0, r1, cells, |_| 0.0)?;
        let h = (r1 - r0) / cells as f64;
        let n = params.n;
        let flux = |r: f64| {
            if r > 0.0 {
                n * r.powf(n - 1.0) * p.d1(r)
            } else {
                0.0
            }
        };
        for i in 0..cells {
            let lo = r0 + i as f64 * h;
            let hi = lo + h;
            out.values[i] = (flux(hi) - flux(lo)) / (hi.powf(n) - lo.powf(n));
        }
        Ok(out)
    }

    /// Reads `radius,value,mass` rows with a header line.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut nodes, mut values, mut masses) = (Vec::new(), Vec::new(), Vec::new());
        for (line, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| Error::domain(format!("csv row {}: {e}", line + 1)))?;
            nodes.push(row.radius);
            values.push(row.value);
            masses.push(row.mass);
        }
        Self::new(nodes, values, masses)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `Σ |u_i|^p m_i`.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.masses)
            .map(|(v, m)| v.abs().powf(p) * m)
            .sum()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        MeasuredProfile {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            masses: self.masses.clone(),
        }
    }

    /// Positive part `max(u, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map_values(|v| v.max(0.0))
    }

    /// Negative part `max(−u, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map_values(|v| (-v).max(0.0))
    }
}

/// `μ(t) = m({u > t})`, summed in node order.
pub fn distribution(p: &MeasuredProfile, t: f64) -> f64 {
    p.values
        .iter()
        .zip(&p.masses)
        .filter(|(&v, _)| v > t)
        .map(|(_, &m)| m)
        .sum()
}

/// Piecewise constant function on `[0, breaks.last()]` taking `values[k]` on
/// `(breaks[k], breaks[k+1]]`, and `values[0]` at `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::domain(
                "step function needs one more break than values",
            ));
        }
        if breaks[0] != 0.0 || breaks.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain(
                "step breaks must start at 0 and be non-decreasing",
            ));
        }
        let mut prefix = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for k in 0..values.len() {
            acc += values[k] * (breaks[k + 1] - breaks[k]);
            prefix.push(acc);
        }
        Ok(StepFunction {
            breaks,
            values,
            prefix,
        })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right end of the support interval.
    pub fn length(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    fn piece(&self, s: f64) -> usize {
        // first k with s <= breaks[k+1]
        let k = self.breaks[1..].partition_point(|&b| b < s);
        k.min(self.values.len() - 1)
    }

    /// Value at `s`, clamped to the end values outside `[0, length]`.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.values[0];
        }
        self.values[self.piece(s)]
    }

    /// `∫_0^x` of the step function, exact; `x` clamped to `[0, length]`.
    pub fn integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.length() {
            return *self.prefix.last().unwrap();
        }
        let k = self.piece(x);
        self.prefix[k] + self.values[k] * (x - self.breaks[k])
    }

    /// `∫_0^length |g|^p`.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| v.abs().powf(p) * (w[1] - w[0]))
            .sum()
    }
}

/// `μ`, `u^#` and `u*` of a measured profile over the model space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RearrangementResult {
    /// Decreasing rearrangement `u^#` on `[0, m(Ω)]`.
    pub u_sharp: StepFunction,
    pub total_mass: f64,
    pub n_dim: f64,
    pub omega_n: f64,
    /// Radius `r` with `ω_N r^N = m(Ω)`.
    pub radius: f64,
}

impl RearrangementResult {
    /// `μ(t)` read off the sorted levels, so that `μ(u^#(s)) ≤ s`.
    pub fn mu(&self, t: f64) -> f64 {
        let levels = self.u_sharp.values();
        let k = levels.partition_point(|&v| v > t);
        self.u_sharp.breaks()[k]
    }

    /// `u^#(s) = inf{t : μ(t) < s}`, with `u^#(0) = max u` and
    /// `u^#(s) = min u` past the total mass.
    pub fn u_sharp(&self, s: f64) -> f64 {
        self.u_sharp.eval(s)
    }

    /// `u*(x) = u^#(ω_N x^N)`.
    pub fn u_star(&self, x: f64) -> f64 {
        self.u_sharp(self.omega_n * x.abs().powf(self.n_dim))
    }

    /// Radii `x_k` with `ω_N x_k^N` at the break masses of `u^#`.
    pub fn radii(&self) -> Vec<f64> {
        self.u_sharp
            .breaks()
            .iter()
            .map(|&c| (c / self.omega_n).powf(1.0 / self.n_dim))
            .collect()
    }

    /// `∫_0^r |u*|^p dσ_N`, integrating over the radial shells of `u*`.
    pub fn lp_norm_pow_star(&self, p: f64) -> f64 {
        let radii = self.radii();
        let c = self.omega_n;
        self.u_sharp
            .values()
            .iter()
            .zip(radii.windows(2))
            .map(|(v, w)| v.abs().powf(p) * c * (w[1].powf(self.n_dim) - w[0].powf(self.n_dim)))
            .sum()
    }
}

/// Sorts values decreasingly, ties in node order, and accumulates mass.
pub fn rearrange(p: &MeasuredProfile, params: &SpectralParams) -> RearrangementResult {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| p.values[j].total_cmp(&p.values[i]));
    let mut breaks = Vec::with_capacity(p.len() + 1);
    breaks.push(0.0);
    let mut acc = 0.0;
    for &i in &order {
        acc += p.masses[i];
        breaks.push(acc);
    }
    let values = order.iter().map(|&i| p.values[i]).collect();
    let u_sharp = StepFunction::new(breaks, values).expect("sorted cumulative masses");
    RearrangementResult {
        u_sharp,
        total_mass: acc,
        n_dim: params.n,
        omega_n: params.omega_n,
        radius: (acc / params.omega_n).powf(1.0 / params.n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyLittlewood {
    /// `∫_S |u| dm`.
    pub lhs: f64,
    /// `∫_0^{m(S)} |u|^#`.
    pub rhs: f64,
    pub subset_mass: f64,
    pub holds: bool,
}

/// `‖u‖_{L¹(S)} ≤ ‖u*‖_{L¹(S*)}` for the nodes flagged in `subset`.
pub fn hardy_littlewood_check(
    p: &MeasuredProfile,
    subset: &[bool],
    params: &SpectralParams,
) -> Result<HardyLittlewood> {
    if subset.len() != p.len() {
        return Err(Error::domain(format!(
            "subset mask has {} entries for {} nodes",
            subset.len(),
            p.len()
        )));
    }
    let abs = p.map_values(f64::abs);
    let (mut lhs, mut mass) = (0.0, 0.0);
    for i in (0..p.len()).filter(|&i| subset[i]) {
        lhs += abs.values[i] * abs.masses[i];
        mass += abs.masses[i];
    }
    let r = rearrange(&abs, params);
    let rhs = r.u_sharp.integral(mass);
    let slack = 1e-13 * (lhs.abs() + rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(HardyLittlewood {
        lhs,
        rhs,
        subset_mass: mass,
        holds: lhs <= rhs + slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

/// `F_+(s) = (Δu)^#_−(s) − (Δu)^#_+(M−s)` or `F_−(s) = −F_+(M−s)` on `[0, M]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FProfile {
    pub side: Side,
    pub step: StepFunction,
    pub total_mass: f64,
}

impl FProfile {
    pub fn eval(&self, s: f64) -> f64 {
        self.step.eval(s)
    }

    /// `∫_0^m F`.
    pub fn integral(&self, m: f64) -> f64 {
        self.step.integral(m)
    }
}

/// Builds `F_±` from the rearrangements of `(Δu)_+` and `(Δu)_−`.
///
/// Both inputs must extend over the whole domain (zeros included) and have total
/// mass `total_mass`; their supports must fit side by side in `[0, M]`.
pub fn build_f(
    side: Side,
    delta_u_plus: &RearrangementResult,
    delta_u_minus: &RearrangementResult,
    total_mass: f64,
) -> Result<FProfile> {
    let m = total_mass;
    let tol = SLIVER * m;
    for (name, r) in [("(Δu)_+", delta_u_plus), ("(Δu)_−", delta_u_minus)] {
        if (r.total_mass - m).abs() > tol {
            return Err(Error::Inconsistent(format!(
                "{name} rearrangement carries mass {} instead of {m}",
                r.total_mass
            )));
        }
        if r.u_sharp.values().iter().any(|&v| v < 0.0) {
            return Err(Error::Inconsistent(format!("{name} takes negative values")));
        }
    }
    // mass where each part is positive
    let support = |r: &RearrangementResult| r.mu(0.0);
    let (m_minus, m_plus) = (support(delta_u_minus), support(delta_u_plus));
    if m_minus + m_plus > m + tol {
        return Err(Error::Inconsistent(format!(
            "(Δu)^#_−(s)·(Δu)^#_+(M−s) ≠ 0: supports of mass {m_minus} and {m_plus} exceed {m}"
        )));
    }
    // first term read forward, second read backward from M
    let (fwd, back) = match side {
        Side::Plus => (delta_u_minus, delta_u_plus),
        Side::Minus => (delta_u_plus, delta_u_minus),
    };
    let mut breaks: Vec<f64> = fwd.u_sharp.breaks().iter().copied().collect();
    breaks.extend(back.u_sharp.breaks().iter().map(|&c| (m - c).max(0.0)));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= tol);
    if let Some(last) = breaks.last_mut() {
        *last = m;
    }
    breaks[0] = 0.0;
    let values = breaks
        .windows(2)
        .map(|w| {
            let s = 0.5 * (w[0] + w[1]);
            fwd.u_sharp(s) - back.u_sharp(m - s)
        })
        .collect();
    Ok(FProfile {
        side,
        step: StepFunction::new(breaks, values)?,
        total_mass: m,
    })
}

/// `∫_x^y ρ^{1-N} dρ`, stable near `N = 2`.
fn power_integral(n: f64, x: f64, y: f64) -> f64 {
    let e = 2.0 - n;
    let l = (y / x).ln();
    if (e * l).abs() < 1e-300 {
        return l;
    }
    x.powf(e) * (e * l).exp_m1() / e
}

/// `V(x) = (1/(Nω_N)) ∫_x^a ρ^{1−N} G(ω_N ρ^N) dρ` with `G(m) = ∫_0^m F`.
///
/// On each shell where `F` is constant `G` is affine in `ρ^N`, so the outer
/// integral is evaluated shell by shell in closed form; `V(a) = 0` exactly.
pub fn build_v(f: &FProfile, endpoint: f64, params: &SpectralParams) -> Result<RadialProfile> {
    let n = params.n;
    let w = params.omega_n;
    let cap = w * endpoint.powf(n);
    if !(endpoint > 0.0) || cap > f.total_mass * (1.0 + SLIVER) {
        return Err(Error::domain(format!(
            "endpoint {endpoint} carries mass {cap} beyond F's {}",
            f.total_mass
        )));
    }
    let step = Arc::new(f.step.clone());
    // shell radii up to the endpoint
    let mut radii: Vec<f64> = step
        .breaks()
        .iter()
        .filter(|&&c| c < cap)
        .map(|&c| (c / w).powf(1.0 / n))
        .collect();
    radii.push(endpoint);
    let radii = Arc::new(radii);
    let nw = n * w;

    // ∫_x^y ρ^{1-N}G dρ inside a shell with F = fk and G(m) = g0 + fk(m − c0)
    let shell = move |x: f64, y: f64, g0: f64, c0: f64, fk: f64| -> f64 {
        let lin = if x == 0.0 {
            0.0
        } else {
            (g0 - fk * c0) * power_integral(n, x, y)
        };
        lin + fk * w * 0.5 * (y * y - x * x)
    };
    let shell_of = {
        let step = step.clone();
        move |k: usize| -> (f64, f64, f64) {
            let c0 = step.breaks()[k];
            (
                step.integral(c0),
                c0,
                step.values()[k.min(step.values().len() - 1)],
            )
        }
    };
    // tail[k] = ∫_{radii[k]}^a
    let mut tail = vec![0.0; radii.len()];
    for k in (0..radii.len() - 1).rev() {
        let (g0, c0, fk) = shell_of(k);
        tail[k] = tail[k + 1] + shell(radii[k], radii[k + 1], g0, c0, fk);
    }
    let tail = Arc::new(tail);

    let v: RadialFn = {
        let radii = radii.clone();
        Arc::new(move |x: f64| {
            let x = x.abs();
            if x >= endpoint {
                return 0.0;
            }
            let k = radii.partition_point(|&r| r <= x).saturating_sub(1);
            let (g0, c0, fk) = shell_of(k);
            (tail[k + 1] + shell(x, radii[k + 1], g0, c0, fk)) / nw
        })
    };
    let g_of = {
        let step = step.clone();
        move |x: f64| step.integral(w * x.abs().powf(n))
    };
    let d1: RadialFn = {
        let step = step.clone();
        Arc::new(move |x: f64| {
            if x == 0.0 {
                return 0.0;
            }
            let m = w * x.abs().powf(n);
            if m <= step.breaks()[1] {
                return -step.values()[0] * x / n;
            }
            -x.powf(1.0 - n) * g_of(x) / nw
        })
    };
    let d2: RadialFn = {
        let step = step.clone();
        Arc::new(move |x: f64| {
            let x = x.abs();
            let m = w * x.powf(n);
            let fx = step.eval(m);
            if m <= step.breaks()[1] {
                return -fx / n;
            }
            (n - 1.0) * x.powf(-n) * step.integral(m) / nw - fx
        })
    };
    Ok(RadialProfile::analytic(endpoint, v, d1, d2))
}

/// Pointwise margin `V(x) − AVR^{2/N} u*(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub min_margin: f64,
    pub argmin: f64,
    /// Largest `|V|` and `AVR^{2/N}|u*|` over the points checked.
    pub scale: f64,
    pub points: usize,
}

impl ComparisonReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_margin >= -tol
    }
}

/// Checks `AVR^{2/N} u*(x) ≤ V(x)` at the radii of the piece centres of `u^#`
/// lying in `[0, V.r_max]`, and at the origin.
pub fn comparison_check(
    u_star: &RearrangementResult,
    v: &RadialProfile,
    avr: f64,
    params: &SpectralParams,
) -> ComparisonReport {
    let k = avr.powf(2.0 / params.n);
    let w = params.omega_n;
    let mut xs = vec![0.0];
    xs.extend(
        u_star
            .u_sharp
            .breaks()
            .windows(2)
            .map(|b| (0.5 * (b[0] + b[1]) / w).powf(1.0 / params.n))
            .filter(|&x| x <= v.r_max()),
    );
    let mut report = ComparisonReport {
        min_margin: f64::INFINITY,
        argmin: 0.0,
        scale: 0.0,
        points: xs.len(),
    };
    for x in xs {
        let (vv, uu) = (v.value(x), k * u_star.u_star(x));
        report.scale = report.scale.max(vv.abs()).max(uu.abs());
        let margin = vv - uu;
        if margin < report.min_margin {
            report.min_margin = margin;
            report.argmin = x;
        }
    }
    report
}
