//! Direct complex scaling of the model Hamiltonian and resonance
//! identification from stationary `theta` trajectories.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::eigvals_complex;
use crate::error::{Error, Result};
use crate::model1d::{build_complex_hamiltonian, BasisSpec, PotentialParams};

/// Eigenvalues with `|arg E + 2 theta| < STRING_FRACTION * 2 theta` count as
/// rotated continuum.
pub const STRING_FRACTION: f64 = 0.25;

/// Complex spectra on a `theta` grid (parallel over `theta`).
pub fn complex_spectra(p: &PotentialParams, b: &BasisSpec, thetas: &[f64], delta_eta: f64) -> Result<Vec<Vec<Complex64>>> {
    thetas
        .par_iter()
        .map(|&t| eigvals_complex(&build_complex_hamiltonian(t, delta_eta, p, b)?.matrix))
        .collect()
}

pub fn on_rotated_string(e: Complex64, theta: f64) -> bool {
    (e.arg() + 2.0 * theta).abs() < STRING_FRACTION * 2.0 * theta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaTrajectory {
    pub thetas: Vec<f64>,
    pub spectra: Vec<Vec<Complex64>>,
    /// Resonance candidate followed by nearest-neighbour continuation.
    pub tracked: Vec<Complex64>,
    pub stationary_theta: f64,
    pub stationary_energy: Complex64,
}

/// Follows every off-string eigenvalue with `|Re E - center| <= half_width`
/// from the first `theta` by nearest-neighbour continuation, and reports the
/// trajectory point where `|dE/dtheta|` is smallest, refined by a parabola
/// through the three neighbouring speeds.
pub fn benchmark_resonance(
    p: &PotentialParams,
    b: &BasisSpec,
    thetas: &[f64],
    center: f64,
    half_width: f64,
) -> Result<ThetaTrajectory> {
    if thetas.len() < 3 || thetas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("need at least three increasing theta values"));
    }
    if thetas[0] <= 0.0 {
        return Err(Error::invalid("theta grid must be positive"));
    }
    let spectra = complex_spectra(p, b, thetas, 0.0)?;
    let candidate = |i: usize, e: &Complex64| {
        e.re > 0.0 && (e.re - center).abs() <= half_width && !on_rotated_string(*e, thetas[i])
    };

    let mut best: Option<(f64, usize, Vec<Complex64>)> = None;
    for start in spectra[0].iter().filter(|e| candidate(0, e)) {
        let mut path = vec![*start];
        for (i, spec) in spectra.iter().enumerate().skip(1) {
            let last = *path.last().unwrap();
            let next = spec
                .iter()
                .copied()
                .min_by(|a, b| (a - last).norm().total_cmp(&(b - last).norm()))
                .unwrap();
            if !candidate(i, &next) {
                break;
            }
            path.push(next);
        }
        if path.len() < 3 {
            continue;
        }
        for j in 0..path.len() - 1 {
            let v = (path[j + 1] - path[j]).norm() / (thetas[j + 1] - thetas[j]);
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, j, path.clone()));
            }
        }
    }
    let (_, j, path) = best.ok_or(Error::NoStationaryPoint)?;

    let speed = |k: usize| (path[k + 1] - path[k]).norm() / (thetas[k + 1] - thetas[k]);
    let mid = |k: usize| 0.5 * (thetas[k] + thetas[k + 1]);
    let mut t_star = mid(j);
    if j >= 1 && j + 2 < path.len() {
        let (x0, x1, x2) = (mid(j - 1), mid(j), mid(j + 1));
        let (y0, y1, y2) = (speed(j - 1), speed(j), speed(j + 1));
        let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        let bq = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        if a > 0.0 {
            t_star = (-bq / (2.0 * a)).clamp(x0, x2);
        }
    }
    // Energy at t_star by linear interpolation along the trajectory.
    let k = thetas[..path.len()].partition_point(|&t| t <= t_star).clamp(1, path.len() - 1) - 1;
    let s = (t_star - thetas[k]) / (thetas[k + 1] - thetas[k]);
    let e_star = path[k] + (path[k + 1] - path[k]) * s;
    Ok(ThetaTrajectory {
        thetas: thetas.to_vec(),
        spectra,
        tracked: path,
        stationary_theta: t_star,
        stationary_energy: e_star,
    })
}
