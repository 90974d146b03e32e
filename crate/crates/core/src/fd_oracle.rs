//! Finite-difference oracle for the weighted clamped-plate problems.
//!
//! Cells are staggered, `r_i = r₀ + (i − 1/2)h`, and every cell carries its
//! exact `σ_N` mass `w_i = ω_N(f_{i+1}^N − f_i^N)` with faces `f_i`. The
//! second-order operator is written in flux form
//!
//! ```text
//! (L u)_i = N ω_N / (w_i h) · (F_{i+1}(u_{i+1} − u_i) − F_i(u_i − u_{i−1})),   F = f^{N−1},
//! ```
//!
//! acting on a vector padded with one ghost value at each end. The fourth-order
//! problem is `min (Lu)ᵀ W (Lu) / uᵀ W u` over the null space of the boundary
//! constraints, solved by inverse iteration with a dense Cholesky factor.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::bessel::omega;
use crate::error::{Error, Result};
use crate::model_space::SpectralParams;

pub const MIN_CELLS: usize = 8;
pub const MAX_ITERATIONS: usize = 500;
pub const LAMBDA_TOL: f64 = 1e-10;
/// Accepted relative wobble once the iteration has stalled at roundoff.
pub const STALL_TOL: f64 = 1e-8;
const STALL_ITERATIONS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    pub n_dim: f64,
    pub r0: f64,
    pub r1: f64,
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialMesh {
    /// `n` cells on `[0, R]`.
    pub fn ball(n_dim: f64, r: f64, n: usize) -> Result<Self> {
        Self::annulus(n_dim, 0.0, r, n)
    }

    /// `n` cells on `[r0, r1]`.
    pub fn annulus(n_dim: f64, r0: f64, r1: f64, n: usize) -> Result<Self> {
        if n < MIN_CELLS {
            return Err(Error::domain(format!(
                "mesh needs at least {MIN_CELLS} cells, got {n}"
            )));
        }
        if !(r0 >= 0.0 && r1 > r0 && r1.is_finite()) {
            return Err(Error::domain(format!("bad interval [{r0}, {r1}]")));
        }
        if !(n_dim > 1.0) {
            return Err(Error::domain(format!("dimension {n_dim} must exceed 1")));
        }
        let h = (r1 - r0) / n as f64;
        let om = omega(n_dim);
        let face = |i: usize| r0 + i as f64 * h;
        let nodes = (0..n).map(|i| r0 + (i as f64 + 0.5) * h).collect();
        let weights = (0..n)
            .map(|i| om * (face(i + 1).powf(n_dim) - face(i).powf(n_dim)))
            .collect();
        Ok(RadialMesh {
            n_dim,
            r0,
            r1,
            n,
            h,
            nodes,
            weights,
        })
    }

    pub fn face(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.h
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Node-midpoint quadrature `Σ N ω_N r_i^{N−1} h`, the plain alternative
    /// to the exact cell masses.
    pub fn midpoint_mass(&self) -> f64 {
        let c = self.n_dim * omega(self.n_dim) * self.h;
        self.nodes
            .iter()
            .map(|r| c * r.powf(self.n_dim - 1.0))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// Origin (zero face weight) at `r0 = 0`, clamped at the outer end.
    ClampedOuter,
    /// Clamped at both ends of an annulus.
    ClampedBoth,
}

/// Discrete `Δ_{0,N}` on a padded vector `[ghost_in, u_1..u_n, ghost_out]`
/// and the linear constraints `C x = 0` that encode the boundary conditions.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub mesh: RadialMesh,
    pub bc: BoundaryCondition,
    /// `n × (n+2)`.
    pub l: DMatrix<f64>,
    /// `m × (n+2)`.
    pub constraints: DMatrix<f64>,
}

impl DiscreteOperator {
    pub fn apply(&self, padded: &DVector<f64>) -> DVector<f64> {
        &self.l * padded
    }

    /// `⟨Lu, v⟩_w` for padded `u` and node values `v`.
    pub fn weighted_inner(&self, lu: &DVector<f64>, v: &[f64]) -> f64 {
        lu.iter()
            .zip(v)
            .zip(&self.mesh.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }
}

fn flux_laplacian(mesh: &RadialMesh) -> DMatrix<f64> {
    let n = mesh.n;
    let nd = mesh.n_dim;
    let c = nd * omega(nd);
    let mut l = DMatrix::zeros(n, n + 2);
    for i in 0..n {
        let fm = mesh.face(i).powf(nd - 1.0);
        let fp = mesh.face(i + 1).powf(nd - 1.0);
        let s = c / (mesh.weights[i] * mesh.h);
        // Column j + 1 holds u_j; 0 and n + 1 are the ghosts.
        l[(i, i)] += s * fm;
        l[(i, i + 1)] -= s * (fm + fp);
        l[(i, i + 2)] += s * fp;
    }
    l
}

pub fn build_operator(mesh: &RadialMesh, bc: BoundaryCondition) -> Result<DiscreteOperator> {
    let n = mesh.n;
    let l = flux_laplacian(mesh);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    match bc {
        BoundaryCondition::ClampedOuter => {
            if mesh.r0 != 0.0 {
                return Err(Error::domain(
                    "ClampedOuter needs a mesh starting at the origin",
                ));
            }
            rows.push(vec![(0, 1.0)]);
        }
        BoundaryCondition::ClampedBoth => {
            // u(r0) = 0 and u'(r0) = 0 at the inner face.
            rows.push(vec![(0, 0.5), (1, 0.5)]);
            rows.push(vec![(0, -1.0 / mesh.h), (1, 1.0 / mesh.h)]);
        }
    }
    rows.push(vec![(n, 0.5), (n + 1, 0.5)]);
    rows.push(vec![(n, -1.0 / mesh.h), (n + 1, 1.0 / mesh.h)]);
    let mut c = DMatrix::zeros(rows.len(), n + 2);
    for (r, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            c[(r, j)] = v;
        }
    }
    Ok(DiscreteOperator {
        mesh: mesh.clone(),
        bc,
        l,
        constraints: c,
    })
}

/// Orthonormal basis of `ker C`, built column-locally: only the columns that
/// appear in some constraint are mixed, the rest stay unit vectors.
fn null_space(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cols = c.ncols();
    let touched: Vec<usize> = (0..cols)
        .filter(|&j| c.column(j).iter().any(|v| *v != 0.0))
        .collect();
    let free: Vec<usize> = (0..cols).filter(|j| !touched.contains(j)).collect();
    let k = touched.len();
    let mut local = DMatrix::zeros(k.max(c.nrows()), k);
    for (jj, &j) in touched.iter().enumerate() {
        for r in 0..c.nrows() {
            local[(r, jj)] = c[(r, j)];
        }
    }
    let svd = SVD::new(local, false, true);
    let vt = svd.v_t.ok_or_else(|| Error::NotConverged {
        iterations: 0,
        residual: f64::NAN,
    })?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let null_rows: Vec<usize> = (0..k)
        .filter(|&i| svd.singular_values[i] <= 1e-12 * smax.max(1.0))
        .collect();
    let dim = free.len() + null_rows.len();
    let mut z = DMatrix::zeros(cols, dim);
    for (q, &j) in free.iter().enumerate() {
        z[(j, q)] = 1.0;
    }
    for (q, &i) in null_rows.iter().enumerate() {
        for (jj, &j) in touched.iter().enumerate() {
            z[(j, free.len() + q)] = vt[(i, jj)];
        }
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigResult {
    pub lambda_min: f64,
    /// Node values (ghosts dropped); two-ball results are `[U…, W…]`.
    pub eigenvector: Vec<f64>,
    pub mesh: RadialMesh,
    pub second_mesh: Option<RadialMesh>,
    pub iterations: usize,
    /// `‖A y − λ B y‖ / (‖A‖ ‖y‖)` in the reduced coordinates.
    pub residual: f64,
    /// `|ΔU(a) + ΔW(b)| / max(|ΔU(a)|, |ΔW(b)|)` for two-ball solves.
    pub laplace_bc_residual: Option<f64>,
}

impl EigResult {
    /// Sign changes along the eigenvector, ignoring entries below `1e-8·max`.
    pub fn sign_changes(&self) -> usize {
        let scale = self.eigenvector.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut last = 0.0_f64;
        let mut count = 0;
        for &v in &self.eigenvector {
            if v.abs() <= 1e-8 * scale {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
        count
    }
}

struct Reduced {
    lambda: f64,
    x: DVector<f64>,
    iterations: usize,
    residual: f64,
}

/// Smallest eigenpair of `Zᵀ E Z y = λ Zᵀ M Z y` with `E = LᵀWL`.
///
/// The Rayleigh quotient is taken as `‖W^{1/2} L Z y‖²`, a sum of squares,
/// rather than `yᵀ(ZᵀEZ)y`, whose cancellation error grows like `h⁻⁴`.
fn inverse_iteration(
    l: &DMatrix<f64>,
    weights: &[f64],
    m: &DMatrix<f64>,
    z: &DMatrix<f64>,
) -> Result<Reduced> {
    let mut g = l * z;
    for (i, w) in weights.iter().enumerate() {
        g.row_mut(i).scale_mut(w.sqrt());
    }
    let a = g.transpose() * &g;
    let b = z.transpose() * m * z;
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| Error::domain("reduced energy matrix is not positive definite"))?;
    let dim = a.nrows();
    let mut y = DVector::from_element(dim, 1.0);
    let mut lambda = f64::INFINITY;
    let a_norm = a.norm();
    let (mut prev_change, mut stalled) = (f64::INFINITY, 0usize);
    for it in 1..=MAX_ITERATIONS {
        let rhs = &b * &y;
        let mut next = chol.solve(&rhs);
        let bn = next.dot(&(&b * &next));
        if !(bn > 0.0) {
            return Err(Error::domain("mass form vanished on the iterate"));
        }
        next /= bn.sqrt();
        let ay = &a * &next;
        let new_lambda = (&g * &next).norm_squared();
        let change = (new_lambda - lambda).abs();
        lambda = new_lambda;
        y = next;
        let res = (&ay - &b * &y * lambda).norm() / (a_norm * y.norm());
        // iterates stall at a roundoff floor set by the conditioning of `a`
        stalled = if change >= 0.5 * prev_change {
            stalled + 1
        } else {
            0
        };
        prev_change = change;
        let done = change <= LAMBDA_TOL * lambda.abs()
            || (stalled >= STALL_ITERATIONS && change <= STALL_TOL * lambda.abs());
        if done && res <= 1e-9 {
            return Ok(Reduced {
                lambda,
                x: z * &y,
                iterations: it,
                residual: res,
            });
        }
    }
    let res = (&a * &y - &b * &y * lambda).norm() / (a_norm * y.norm());
    Err(Error::NotConverged {
        iterations: MAX_ITERATIONS,
        residual: res,
    })
}

fn mass_matrix(op: &DiscreteOperator) -> DMatrix<f64> {
    let n = op.mesh.n;
    let mut m = DMatrix::zeros(n + 2, n + 2);
    for i in 0..n {
        m[(i + 1, i + 1)] = op.mesh.weights[i];
    }
    m
}

fn normalise_sign(v: &mut [f64]) {
    let idx = v
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(bi, bv), (i, x)| {
            if x.abs() > bv {
                (i, x.abs())
            } else {
                (bi, bv)
            }
        })
        .0;
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn solve_single(mesh: &RadialMesh, bc: BoundaryCondition) -> Result<EigResult> {
    let op = build_operator(mesh, bc)?;
    let m = mass_matrix(&op);
    let z = null_space(&op.constraints)?;
    let red = inverse_iteration(&op.l, &op.mesh.weights, &m, &z)?;
    let mut v: Vec<f64> = red.x.iter().skip(1).take(mesh.n).copied().collect();
    normalise_sign(&mut v);
    Ok(EigResult {
        lambda_min: red.lambda,
        eigenvector: v,
        mesh: mesh.clone(),
        second_mesh: None,
        iterations: red.iterations,
        residual: red.residual,
        laplace_bc_residual: None,
    })
}

/// Clamped ball `[0, R]`.
pub fn solve_clamped(mesh: &RadialMesh) -> Result<EigResult> {
    solve_single(mesh, BoundaryCondition::ClampedOuter)
}

/// Clamped annulus `[r0, r1]`.
pub fn solve_clamped_annulus(mesh: &RadialMesh) -> Result<EigResult> {
    solve_single(mesh, BoundaryCondition::ClampedBoth)
}

/// How the coupling `ΔU(a) + ΔW(b) = 0` is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaplaceCoupling {
    /// Left free: it is the natural condition of the coupled minimisation and
    /// is reported as a residual.
    Natural,
    /// Imposed through the linear extrapolation `1.5 L_n − 0.5 L_{n−1}`.
    Imposed,
}

/// Coupled two-ball problem on `[0, a]` and `[0, b]` with `n` cells each and
/// `U(a) = W(b) = 0`, `a^{N−1}U'(a) = b^{N−1}W'(b)`.
pub fn solve_twoball(params: &SpectralParams, a: f64, b: f64, n: usize) -> Result<EigResult> {
    solve_twoball_with(params, a, b, n, LaplaceCoupling::Natural)
}

pub fn solve_twoball_with(
    params: &SpectralParams,
    a: f64,
    b: f64,
    n: usize,
    coupling: LaplaceCoupling,
) -> Result<EigResult> {
    let nd = params.n;
    let ma = RadialMesh::ball(nd, a, n)?;
    let mb = RadialMesh::ball(nd, b, n)?;
    let la = flux_laplacian(&ma);
    let lb = flux_laplacian(&mb);
    let w = n + 2;
    let dim = 2 * w;

    let mut l = DMatrix::zeros(2 * n, dim);
    l.view_mut((0, 0), (n, w)).copy_from(&la);
    l.view_mut((n, w), (n, w)).copy_from(&lb);
    let weights: Vec<f64> = ma.weights.iter().chain(&mb.weights).copied().collect();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..n {
        m[(i + 1, i + 1)] = ma.weights[i];
        m[(w + i + 1, w + i + 1)] = mb.weights[i];
    }

    let (ga, gb) = (n + 1, w + n + 1);
    let (ua, ub) = (n, w + n);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![
        vec![(0, 1.0)],
        vec![(w, 1.0)],
        vec![(ua, 0.5), (ga, 0.5)],
        vec![(ub, 0.5), (gb, 0.5)],
        vec![
            (ua, -a.powf(nd - 1.0) / ma.h),
            (ga, a.powf(nd - 1.0) / ma.h),
            (ub, b.powf(nd - 1.0) / mb.h),
            (gb, -b.powf(nd - 1.0) / mb.h),
        ],
    ];
    let boundary_lap = |lm: &DMatrix<f64>, off: usize| -> Vec<(usize, f64)> {
        let mut acc = vec![0.0; w];
        for j in 0..w {
            acc[j] = 1.5 * lm[(n - 1, j)] - 0.5 * lm[(n - 2, j)];
        }
        acc.into_iter()
            .enumerate()
            .filter(|(_, v)| *v != 0.0)
            .map(|(j, v)| (j + off, v))
            .collect()
    };
    if coupling == LaplaceCoupling::Imposed {
        let mut row = boundary_lap(&la, 0);
        row.extend(boundary_lap(&lb, w));
        rows.push(row);
    }
    let mut c = DMatrix::zeros(rows.len(), dim);
    for (r, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            c[(r, j)] += v;
        }
    }
    let z = null_space(&c)?;
    let red = inverse_iteration(&l, &weights, &m, &z)?;

    let x = &red.x;
    let lap = |row: &[(usize, f64)]| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
    let lu = lap(&boundary_lap(&la, 0));
    let lw = lap(&boundary_lap(&lb, w));
    let bc_res = (lu + lw).abs() / lu.abs().max(lw.abs()).max(f64::MIN_POSITIVE);

    let mut v: Vec<f64> = x
        .iter()
        .skip(1)
        .take(n)
        .chain(x.iter().skip(w + 1).take(n))
        .copied()
        .collect();
    normalise_sign(&mut v);
    Ok(EigResult {
        lambda_min: red.lambda,
        eigenvector: v,
        mesh: ma,
        second_mesh: Some(mb),
        iterations: red.iterations,
        residual: red.residual,
        laplace_bc_residual: Some(bc_res),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub n_list: Vec<usize>,
    pub values: Vec<f64>,
    pub exact: Option<f64>,
    /// Observed order from the last two refinements.
    pub rate: f64,
}

/// Observed convergence order of `problem(n)` over `n_list`: against `exact`
/// when given, otherwise from three successive values (Richardson).
pub fn convergence_study<F>(
    problem: F,
    n_list: &[usize],
    exact: Option<f64>,
) -> Result<ConvergenceStudy>
where
    F: Fn(usize) -> Result<f64>,
{
    let need = if exact.is_some() { 2 } else { 3 };
    if n_list.len() < need {
        return Err(Error::domain(format!("need at least {need} mesh sizes")));
    }
    let values = n_list
        .iter()
        .map(|&n| problem(n))
        .collect::<Result<Vec<_>>>()?;
    let k = n_list.len();
    let ratio = n_list[k - 1] as f64 / n_list[k - 2] as f64;
    let rate = match exact {
        Some(x) => {
            let e1 = (values[k - 2] - x).abs();
            let e2 = (values[k - 1] - x).abs();
            (e1 / e2).ln() / ratio.ln()
        }
        None => {
            let d1 = values[k - 2] - values[k - 3];
            let d2 = values[k - 1] - values[k - 2];
            (d1 / d2).abs().ln() / ratio.ln()
        }
    };
    Ok(ConvergenceStudy {
        n_list: n_list.to_vec(),
        values,
        exact,
        rate,
    })
}
