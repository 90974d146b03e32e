use std::collections::BTreeMap;
use std::fs::File;

use plate_tone::bounds::{certify, compute_n0, SCAN_POINTS_DEFAULT};
use plate_tone::cones::{
    annulus_inequality_check_with, sharpness_equality_check, ANNULUS_CELLS, FD_TOL, SHARPNESS_TOL,
};
use plate_tone::fd_oracle::{convergence_study, solve_clamped, solve_twoball};
use plate_tone::model_space::{extremal_u, laplace_0n};
use plate_tone::rearrange::{build_f, build_v, hardy_littlewood_check, rearrange, Side};
use plate_tone::twoball::{h_of_a, reduction_sweep, symmetric_limit, symmetric_radius};
use plate_tone::{
    ConeFixture, MeasuredProfile, RadialMesh, RadialProfile, SpectralParams, TwoBallInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CommandKind, RunConfig};
use crate::report::Report;
use crate::CliError;

/// Window for N₀.
pub const N0_WINDOW: (f64, f64) = (3.3031, 3.3052);
/// Quoted `α+β` bounds at N = 2 and N = 3.
pub const QUOTED_SUMS: [(f64, f64); 2] = [(2.0, -0.00158), (3.0, -0.000417)];
pub const QUOTED_SLACK: f64 = 5e-4;
pub const BALL_TOL: f64 = 5e-3;
pub const TWOBALL_TOL: f64 = 1e-2;
pub const RATE_RANGE: (f64, f64) = (1.7, 2.3);
pub const ORACLE_CELLS: usize = 512;
pub const ORACLE_RADII: [f64; 3] = [0.2, 0.4, 0.6];
pub const REDUCTION_GRID: usize = 200;
pub const EQUIMEASURE_TOL: f64 = 1e-12;
pub const BC_TOL: f64 = 1e-6;
pub const LAPLACE_TOL: f64 = 1e-5;
pub const LAPLACE_ORDER_MIN: f64 = 1.7;
/// Multiple of `ε·max|V|/d²` below which a second difference is noise.
pub const ROUNDOFF_FACTOR: f64 = 64.0;
pub const REARRANGE_CELLS: usize = 250;
pub const REARRANGE_SAMPLES: usize = 100;
pub const REARRANGE_SEED: u64 = 2024;
/// Mass fraction carried by the ball of `V_+`; `V_−` gets the rest.
pub const SPLIT: f64 = 0.4;

type Records = Vec<Value>;

fn inputs(v: Value) -> BTreeMap<String, Value> {
    match v {
        Value::Object(m) => m.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

/// Turns a failed computation into a failing record.
fn guard(check: &str, r: plate_tone::Result<Value>) -> Value {
    r.unwrap_or_else(|e| json!({ "check": check, "error": e.to_string(), "passed": false }))
}

fn extend(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn dims(cfg: &RunConfig) -> Vec<f64> {
    match cfg.n_dim {
        Some(n) => vec![n],
        None => vec![2.0, 3.0],
    }
}

fn params(n: f64) -> plate_tone::Result<SpectralParams> {
    SpectralParams::new(n)
}

/// Runs the suite selected by `cfg.command`.
pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    let hash = cfg.hash();
    let (inp, records) = match cfg.command {
        CommandKind::N0 => n0(cfg),
        CommandKind::CertifyBounds => certify_bounds(cfg),
        CommandKind::Reduction => reduction(cfg),
        CommandKind::Oracle => oracle(cfg),
        CommandKind::Cone => cone(cfg),
        CommandKind::RearrangeVerify => rearrange_verify(cfg)?,
        CommandKind::ReportAll => {
            let mut sections = BTreeMap::new();
            for k in [
                CommandKind::N0,
                CommandKind::CertifyBounds,
                CommandKind::Reduction,
                CommandKind::Oracle,
                CommandKind::Cone,
                CommandKind::RearrangeVerify,
            ] {
                sections.insert(k.name().to_string(), execute(&cfg.with_command(k))?);
            }
            return Ok(Report::bundle(sections, hash));
        }
    };
    Ok(Report::new(cfg.command.name(), inp, records, hash))
}

fn n0(cfg: &RunConfig) -> (BTreeMap<String, Value>, Records) {
    let tol = cfg.tol.unwrap_or(1e-5);
    let (lo, hi) = N0_WINDOW;
    let rec = guard(
        "n0",
        compute_n0(tol).map(|n0| {
            json!({
                "check": "n0", "n0": n0, "tol": tol, "lo": lo, "hi": hi,
                "margin": (n0 - lo).min(hi - n0),
                "passed": (lo..=hi).contains(&n0),
            })
        }),
    );
    (inputs(json!({ "tol": tol })), vec![rec])
}

fn certify_bounds(cfg: &RunConfig) -> (BTreeMap<String, Value>, Records) {
    let scan = cfg.grid.unwrap_or(SCAN_POINTS_DEFAULT);
    let slack = cfg.tol.unwrap_or(QUOTED_SLACK);
    let ns = dims(cfg);
    let records = ns
        .iter()
        .map(|&n| {
            let quoted = QUOTED_SUMS.iter().find(|q| q.0 == n).map(|q| q.1);
            guard(
                "certify",
                params(n).and_then(|p| certify(&p, scan)).map(|r| {
                    let within = quoted.map_or(true, |q| r.sum <= q + slack);
                    let margin = -(r.sum + r.err_estimate);
                    let ok = r.certified_negative && within;
                    extend(
                        serde_json::to_value(&r).unwrap_or(Value::Null),
                        json!({ "quoted": quoted, "slack": slack, "margin": margin, "passed": ok }),
                    )
                }),
            )
        })
        .collect();
    (
        inputs(json!({ "N": ns, "scan_points": scan, "slack": slack })),
        records,
    )
}

fn reduction(cfg: &RunConfig) -> (BTreeMap<String, Value>, Records) {
    let grid = cfg.grid.unwrap_or(REDUCTION_GRID);
    let threshold = cfg.tol.unwrap_or(0.0);
    let ns = dims(cfg);
    let mut records = Vec::new();
    for &n in &ns {
        match params(n).and_then(|p| reduction_sweep(&p, grid)) {
            Ok(rep) => records.extend(rep.records.iter().map(|r| {
                extend(
                    serde_json::to_value(r).unwrap_or(Value::Null),
                    json!({ "n_dim": n, "passed": r.margin > threshold }),
                )
            })),
            Err(e) => records.push(guard("reduction", Err(e))),
        }
    }
    (
        inputs(json!({ "N": ns, "grid": grid, "threshold": threshold })),
        records,
    )
}

fn rel(x: f64, exact: f64) -> f64 {
    (x - exact).abs() / exact.abs()
}

fn oracle(cfg: &RunConfig) -> (BTreeMap<String, Value>, Records) {
    let n_dim = cfg.n_dim.unwrap_or(2.0);
    let cells = cfg.n.unwrap_or(ORACLE_CELLS);
    let radii = cfg.a.clone().unwrap_or(ORACLE_RADII.to_vec());
    let ball_tol = cfg.tol.unwrap_or(BALL_TOL);
    let pair_tol = cfg.tol.unwrap_or(TWOBALL_TOL);
    let mut records = Vec::new();

    records.push(guard(
        "ball",
        (|| {
            let p = params(n_dim)?;
            let exact = p.h()?.powi(4);
            let sizes = [cells / 4, cells / 2, cells];
            let study = convergence_study(
                |k| Ok(solve_clamped(&RadialMesh::ball(n_dim, 1.0, k)?)?.lambda_min),
                &sizes,
                None,
            )?;
            let lam = study.values[2];
            let err = rel(lam, exact);
            let rate_ok = (RATE_RANGE.0..=RATE_RANGE.1).contains(&study.rate);
            Ok(json!({
                "check": "ball", "n_dim": n_dim, "cells": cells,
                "lambda_fd": lam, "lambda_exact": exact, "rel_err": err,
                "tolerance": ball_tol, "rate": study.rate, "margin": ball_tol - err,
                "passed": err <= ball_tol && rate_ok,
            }))
        })(),
    ));

    records.extend(
        radii
            .par_iter()
            .map(|&a| {
                guard(
                    "twoball",
                    (|| {
                        let p = params(n_dim)?;
                        let inst = TwoBallInstance::new(p, a)?;
                        let h = h_of_a(&inst)?;
                        let lam = solve_twoball(&p, inst.a, inst.b, cells)?.lambda_min;
                        let err = rel(lam.powf(0.25), h);
                        Ok(json!({
                            "check": "twoball", "n_dim": n_dim, "a": inst.a, "b": inst.b,
                            "cells": cells, "lambda_fd": lam, "lambda_exact": h.powi(4),
                            "rel_err": err, "tolerance": pair_tol, "margin": pair_tol - err,
                            "passed": err <= pair_tol,
                        }))
                    })(),
                )
            })
            .collect::<Vec<_>>(),
    );

    records.push(guard(
        "symmetric",
        (|| {
            let p = params(n_dim)?;
            let s = symmetric_radius(n_dim);
            let exact = symmetric_limit(&p)?.powi(4);
            let lam = solve_twoball(&p, s, s, cells)?.lambda_min;
            let err = rel(lam, exact);
            Ok(json!({
                "check": "symmetric", "n_dim": n_dim, "a": s, "b": s, "cells": cells,
                "lambda_fd": lam, "lambda_exact": exact, "rel_err": err,
                "tolerance": pair_tol, "margin": pair_tol - err, "passed": err <= pair_tol,
            }))
        })(),
    ));

    (
        inputs(json!({
            "N": n_dim, "n": cells, "a": radii, "ball_tol": ball_tol, "twoball_tol": pair_tol,
        })),
        records,
    )
}

fn cone(cfg: &RunConfig) -> (BTreeMap<String, Value>, Records) {
    let n_dim = cfg.n_dim.unwrap_or(2.0);
    let avr = cfg.avr.unwrap_or(1.0);
    let tol = cfg.tol.unwrap_or(SHARPNESS_TOL);
    let r1 = cfg.r1.unwrap_or(0.05);
    let r2 = cfg.r2.unwrap_or(1.0);
    let cells = cfg.n.unwrap_or(ANNULUS_CELLS);
    let v = cfg
        .v
        .unwrap_or_else(|| params(n_dim).map_or(f64::NAN, |p| p.omega_n));
    let fixture = || params(n_dim).and_then(|p| ConeFixture::with_avr(&p, avr));

    let sharp = guard(
        "sharpness",
        fixture()
            .and_then(|fx| sharpness_equality_check(&fx, v))
            .map(|r| {
                json!({
                    "check": "sharpness", "n_dim": n_dim, "avr": avr, "v": r.v,
                    "lhs": r.lhs, "rhs": r.rhs, "rel_gap": r.rel_gap, "tolerance": tol,
                    "margin": tol - r.rel_gap.abs(), "passed": r.rel_gap.abs() <= tol,
                })
            }),
    );
    let annulus = guard(
        "annulus",
        fixture()
            .and_then(|fx| annulus_inequality_check_with(&fx, r1, r2, cells))
            .map(|r| {
                json!({
                    "check": "annulus", "n_dim": n_dim, "avr": avr, "v": r.v,
                    "r1": r1, "r2": r2, "cells": cells,
                    "lhs": r.lhs, "rhs": r.rhs, "rel_gap": r.rel_gap, "tolerance": FD_TOL,
                    "sign_changes": r.sign_changes,
                    "margin": r.rel_gap - FD_TOL, "passed": r.passed,
                })
            }),
    );
    (
        inputs(json!({
            "N": n_dim, "avr": avr, "v": v, "tol": tol, "r1": r1, "r2": r2, "n": cells,
        })),
        vec![sharp, annulus],
    )
}

fn upper(check: &str, value: f64, tol: f64) -> Value {
    json!({
        "check": check, "value": value, "tolerance": tol,
        "margin": tol - value, "passed": value <= tol,
    })
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
}

/// Worst relative `L^p` mismatch over `p ∈ {1, 2, 4}` and the Hardy–Littlewood
/// gap at `S = Ω`.
fn equimeasure(p: &MeasuredProfile, params: &SpectralParams) -> plate_tone::Result<(f64, f64)> {
    let r = rearrange(p, params);
    let eq = [1.0, 2.0, 4.0]
        .iter()
        .map(|&k| rel_gap(p.lp_norm_pow(k), r.lp_norm_pow_star(k)))
        .fold(0.0, f64::max);
    let hl = hardy_littlewood_check(p, &vec![true; p.len()], params)?;
    Ok((eq, rel_gap(hl.lhs, hl.rhs)))
}

struct VPair {
    fp: plate_tone::FProfile,
    vp: RadialProfile,
    a: f64,
}

/// Boundary conditions (i)–(iii) and `Δ_{0,N}V_+ = −F_+(ω_N x^N)` for the
/// profile read as `Δu`.
fn v_checks(du: &MeasuredProfile, params: &SpectralParams, records: &mut Records) -> Option<VPair> {
    let built = (|| {
        let m = du.total_mass();
        let plus = rearrange(&du.positive_part(), params);
        let minus = rearrange(&du.negative_part(), params);
        let fp = build_f(Side::Plus, &plus, &minus, m)?;
        let fm = build_f(Side::Minus, &plus, &minus, m)?;
        let (n, w) = (params.n, params.omega_n);
        let a = (SPLIT * m / w).powf(1.0 / n);
        let b = ((1.0 - SPLIT) * m / w).powf(1.0 / n);
        let vp = build_v(&fp, a, params)?;
        let vm = build_v(&fm, b, params)?;
        Ok((fp, vp, vm, a, b))
    })();
    let (fp, vp, vm, a, b) = match built {
        Ok(x) => x,
        Err(e) => {
            records.push(guard("v_construction", Err(e)));
            return None;
        }
    };
    let n = params.n;
    let lap = |v: &RadialProfile, x: f64| v.d2(x) + (n - 1.0) / x * v.d1(x);
    let bc1 = vp.value(a).abs().max(vm.value(b).abs());
    let bc2 = (a.powf(n - 1.0) * vp.d1(a) - b.powf(n - 1.0) * vm.d1(b)).abs();
    let bc3 = (lap(&vp, a) + lap(&vm, b)).abs();
    records.push(upper("bc_value", bc1, BC_TOL));
    records.push(upper("bc_flux", bc2, BC_TOL));
    records.push(upper("bc_laplacian", bc3, BC_TOL));

    let w = params.omega_n;
    let breaks = fp.step.breaks();
    let identity = breaks
        .windows(2)
        .map(|c| 0.5 * (c[0] + c[1]))
        .map(|s| (s / w).powf(1.0 / n))
        .filter(|&x| x > 0.0 && x < a)
        .map(|x| laplace_0n(&vp, params, x).map(|l| (l + fp.eval(w * x.powf(n))).abs()))
        .try_fold(0.0_f64, |m, e| e.map(|e| m.max(e)));
    match identity {
        Ok(err) => records.push(upper("laplacian_identity", err, LAPLACE_TOL)),
        Err(e) => records.push(guard("laplacian_identity", Err(e))),
    }
    Some(VPair { fp, vp, a })
}

fn fd_laplacian(v: &RadialProfile, n: f64, x: f64, d: f64) -> f64 {
    let (l, c, r) = (v.value(x - d), v.value(x), v.value(x + d));
    (r - 2.0 * c + l) / (d * d) + (n - 1.0) / x * (r - l) / (2.0 * d)
}

fn rearrange_verify(cfg: &RunConfig) -> Result<(BTreeMap<String, Value>, Records), CliError> {
    let n_dim = cfg.n_dim.unwrap_or(2.0);
    let tol = cfg.tol.unwrap_or(EQUIMEASURE_TOL);
    let p = match params(n_dim) {
        Ok(p) => p,
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let mut records = Vec::new();

    if let Some(path) = &cfg.input {
        let file = File::open(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let profile = MeasuredProfile::from_csv(file)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        match equimeasure(&profile, &p) {
            Ok((eq, hl)) => {
                records.push(upper("equimeasure", eq, tol));
                records.push(upper("hardy_littlewood", hl, tol));
            }
            Err(e) => records.push(guard("equimeasure", Err(e))),
        }
        v_checks(&profile, &p, &mut records);
        let inp = inputs(json!({ "N": n_dim, "input": path.display().to_string(), "tol": tol }));
        return Ok((inp, records));
    }

    let samples = cfg.samples.unwrap_or(REARRANGE_SAMPLES);
    let seed = cfg.seed.unwrap_or(REARRANGE_SEED);
    let cells = cfg.grid.unwrap_or(REARRANGE_CELLS);
    let avr = cfg.avr.unwrap_or(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_eq, mut worst_hl) = (0.0_f64, 0.0_f64);
    let mut failure = None;
    for _ in 0..samples {
        let len = rng.gen_range(1..200);
        let mut r = 0.0;
        let nodes: Vec<f64> = (0..len)
            .map(|_| {
                r += rng.gen_range(0.01..1.0);
                r
            })
            .collect();
        let values = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let masses = (0..len).map(|_| rng.gen_range(0.01..3.0)).collect();
        match MeasuredProfile::new(nodes, values, masses).and_then(|q| equimeasure(&q, &p)) {
            Ok((eq, hl)) => {
                worst_eq = worst_eq.max(eq);
                worst_hl = worst_hl.max(hl);
            }
            Err(e) => failure = Some(e),
        }
    }
    match failure {
        Some(e) => records.push(guard("equimeasure", Err(e))),
        None => {
            records.push(upper("equimeasure", worst_eq, tol));
            records.push(upper("hardy_littlewood", worst_hl, tol));
        }
    }

    // clamped extremal on the cone ball of radius 1, normalised to u(0) = 1
    let du = extremal_u(&p, 1.0).and_then(|u| {
        let u = u.scaled(1.0 / u.value(0.0));
        MeasuredProfile::laplacian_on_cone(&p, avr, 0.0, 1.0, cells, &u)
    });
    match du {
        Ok(du) => {
            if let Some(pair) = v_checks(&du, &p, &mut records) {
                records.push(laplacian_order(&pair, &p, avr, cells));
            }
        }
        Err(e) => records.push(guard("fixture", Err(e))),
    }

    let inp = inputs(json!({
        "N": n_dim, "tol": tol, "samples": samples, "seed": seed, "grid": cells, "avr": avr,
    }));
    Ok((inp, records))
}

/// Second differences of `V_+` at 20 shell centres with stencils of a quarter
/// and an eighth of a shell. The error must be small, and shrink at order ≈ 2
/// unless it already sits below the roundoff floor `ε·max|V|/d²` of the finer
/// stencil, where no order can be read off.
fn laplacian_order(pair: &VPair, p: &SpectralParams, avr: f64, cells: usize) -> Value {
    let (n, w) = (p.n, p.omega_n);
    // shells of the cone ball mapped to the model radius
    let shell = avr.powf(1.0 / n) / cells as f64;
    let (mut e1, mut e2, mut vmax) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..20 {
        let x = (5.0 + 5.0 * i as f64 + 0.5) * shell;
        if x >= pair.a {
            break;
        }
        let target = -pair.fp.eval(w * x.powf(n));
        vmax = vmax.max(pair.vp.value(x).abs());
        e1 = e1.max((fd_laplacian(&pair.vp, n, x, shell / 4.0) - target).abs());
        e2 = e2.max((fd_laplacian(&pair.vp, n, x, shell / 8.0) - target).abs());
    }
    let order = (e1 / e2).log2();
    let floor = ROUNDOFF_FACTOR * f64::EPSILON * vmax / (shell / 8.0).powi(2);
    let resolved = e1 > floor;
    let ok = e1 <= LAPLACE_TOL && (!resolved || order >= LAPLACE_ORDER_MIN);
    json!({
        "check": "laplacian_order", "value": order, "error": e1, "roundoff_floor": floor,
        "order_resolved": resolved, "error_tolerance": LAPLACE_TOL,
        "tolerance": LAPLACE_ORDER_MIN,
        "margin": if resolved { order - LAPLACE_ORDER_MIN } else { LAPLACE_TOL - e1 },
        "passed": ok,
    })
}
