//! Inputs shared by the `kernels` benchmarks.

use plate_tone::model_space::extremal_u;
use plate_tone::{MeasuredProfile, Result, SpectralParams};

/// Shell-averaged Laplacian of the clamped extremal on the unit ball.
pub fn extremal_laplacian(n: f64, cells: usize) -> Result<MeasuredProfile> {
    let p = SpectralParams::new(n)?;
    let u = extremal_u(&p, 1.0)?;
    MeasuredProfile::laplacian_on_cone(&p, 1.0, 0.0, 1.0, cells, &u)
}

/// Deterministic oscillating profile with `len` nodes and unequal masses.
pub fn scrambled_profile(len: usize) -> Result<MeasuredProfile> {
    let nodes: Vec<f64> = (1..=len).map(|i| i as f64).collect();
    let values = nodes
        .iter()
        .map(|&x| (x * 1.618).sin() * x.sqrt())
        .collect();
    let masses = nodes
        .iter()
        .map(|&x| 1.0 + 0.5 * (x * 0.731).cos())
        .collect();
    MeasuredProfile::new(nodes, values, masses)
}
