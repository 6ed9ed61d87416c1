//! Multi-crossing diabatic Hamiltonian, complex-scaled after the fact:
//! resonance tracking over `theta` and extrapolation back to `theta = 0`.

use std::io::Write;
use std::path::Path;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contfit::ContinuumChannel;
use crate::eig::{eig_complex, eigvals_complex};
use crate::error::{Error, Result};
use crate::lsq::{polyfit, polyval};

/// Degree of the default extrapolation polynomial.
pub const DEFAULT_DEGREE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledChannel {
    pub channel: ContinuumChannel,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiabaticModel {
    pub e_r: f64,
    pub channels: Vec<CoupledChannel>,
}

impl DiabaticModel {
    pub fn new(e_r: f64, channels: Vec<CoupledChannel>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("diabatic model needs at least one channel"));
        }
        if channels.iter().any(|c| !(c.delta >= 0.0)) {
            return Err(Error::invalid("couplings must be non-negative"));
        }
        Ok(Self { e_r, channels })
    }

    /// First `n` channels only.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.e_r, self.channels[..n.min(self.channels.len())].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.channels.len() + 1
    }
}

/// Arrowhead matrix: `E_r` at (0,0), channel energies on the rest of the
/// diagonal, `delta_k / 2` in row and column 0.
pub fn assemble(model: &DiabaticModel, eta: Complex64) -> Mat<Complex64> {
    let n = model.dim();
    let mut h = Mat::<Complex64>::zeros(n, n);
    h[(0, 0)] = Complex64::new(model.e_r, 0.0);
    for (k, c) in model.channels.iter().enumerate() {
        h[(k + 1, k + 1)] = c.channel.energy(eta);
        h[(0, k + 1)] = Complex64::new(0.5 * c.delta, 0.0);
        h[(k + 1, 0)] = Complex64::new(0.5 * c.delta, 0.0);
    }
    h
}

/// All eigenvalues of the model at `eta = delta_eta + i theta`.
pub fn spectrum(model: &DiabaticModel, theta: f64, delta_eta: f64) -> Result<Vec<Complex64>> {
    eigvals_complex(&assemble(model, Complex64::new(delta_eta, theta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPoint {
    pub theta: f64,
    pub energy: Complex64,
    /// `|v_0^2|` of the c-normalized eigenvector.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceTrajectory {
    pub delta_eta: f64,
    pub points: Vec<ThetaPoint>,
}

impl ResonanceTrajectory {
    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_trajectory_csv(&mut w, self.points.iter().map(|p| (p.theta, p.energy, p.weight)))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(&mut f).map_err(|e| Error::io(path, e))
    }
}

/// `theta,ReE,ImE,weight` rows at 17 significant digits.
pub fn write_trajectory_csv<W: Write>(w: &mut W, rows: impl Iterator<Item = (f64, Complex64, f64)>) -> std::io::Result<()> {
    writeln!(w, "theta,ReE,ImE,weight")?;
    for (t, e, wt) in rows {
        writeln!(w, "{t:.16e},{:.16e},{:.16e},{wt:.16e}", e.re, e.im)?;
    }
    Ok(())
}

/// Diagonalizes the model at `eta = delta_eta + i theta` for each `theta`
/// and follows the eigenvector with the largest resonance weight. A step
/// more than ten times the previous one triggers re-selection by proximity
/// to the linear prediction among states of at least half the top weight.
pub fn theta_sweep(model: &DiabaticModel, thetas: &[f64], delta_eta: f64) -> Result<ResonanceTrajectory> {
    if thetas.iter().any(|t| !(*t > 0.0 && *t < std::f64::consts::FRAC_PI_4)) {
        return Err(Error::invalid("theta grid must lie in (0, pi/4)"));
    }
    if thetas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("theta grid must be strictly increasing"));
    }
    let systems = thetas
        .par_iter()
        .map(|&t| {
            let sys = eig_complex(&assemble(model, Complex64::new(delta_eta, t)))?;
            let cands: Vec<(Complex64, f64)> = (0..sys.values.len())
                .map(|k| (sys.values[k], sys.weight(k, 0).norm()))
                .collect();
            Ok(cands)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points: Vec<ThetaPoint> = Vec::with_capacity(thetas.len());
    for (i, cands) in systems.iter().enumerate() {
        let top = cands.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).ok_or(Error::NoConvergence)?;
        let mut pick = top;
        if i >= 2 {
            let (p1, p2) = (&points[i - 1], &points[i - 2]);
            let secant = (p1.energy - p2.energy) / (p1.theta - p2.theta);
            let h = thetas[i] - p1.theta;
            let predicted = p1.energy + secant * h;
            let limit = 10.0 * (secant.norm() * h).max(1e-9 * p1.energy.norm());
            if (pick.0 - p1.energy).norm() > limit {
                pick = cands
                    .iter()
                    .copied()
                    .filter(|c| c.1 >= 0.5 * top.1)
                    .min_by(|a, b| (a.0 - predicted).norm().total_cmp(&(b.0 - predicted).norm()))
                    .unwrap_or(top);
                if (pick.0 - p1.energy).norm() > limit {
                    return Err(Error::TrackingLost(thetas[i]));
                }
            }
        }
        points.push(ThetaPoint {
            theta: thetas[i],
            energy: pick.0,
            weight: pick.1,
        });
    }
    Ok(ResonanceTrajectory { delta_eta, points })
}

/// `|dE/dtheta|` at each trajectory point (one-sided at the ends).
pub fn speeds(points: &[ThetaPoint]) -> Vec<f64> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1.min(n - 1)),
                _ if i == n - 1 => (i - 1, i),
                _ => (i - 1, i + 1),
            };
            if a == b {
                return 0.0;
            }
            ((points[b].energy - points[a].energy) / (points[b].theta - points[a].theta)).norm()
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Longest contiguous run of points whose `|dE/dtheta|` stays below twice the
/// trajectory median.
pub fn stable_window(traj: &ResonanceTrajectory) -> Option<(f64, f64)> {
    let sp = speeds(&traj.points);
    if sp.len() < 3 {
        return None;
    }
    let limit = 2.0 * median(&sp);
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=sp.len() {
        let ok = i < sp.len() && sp[i] <= limit;
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - s > b - a + 1) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.map(|(a, b)| (traj.points[a].theta, traj.points[b].theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub energy: Complex64,
    pub window: (f64, f64),
    pub degree: usize,
    /// RMS residual of the two polynomial fits combined.
    pub residual: f64,
}

/// Separate least-squares polynomials for `Re E(theta)` and `Im E(theta)`
/// over the window, evaluated at `theta = 0`.
pub fn extrapolate(traj: &ResonanceTrajectory, window: (f64, f64), degree: usize) -> Result<Extrapolation> {
    if !(1..=3).contains(&degree) {
        return Err(Error::invalid("extrapolation degree must be 1, 2 or 3"));
    }
    let (lo, hi) = window;
    let pts: Vec<ThetaPoint> = traj
        .points
        .iter()
        .copied()
        .filter(|p| p.theta >= lo - 1e-12 && p.theta <= hi + 1e-12)
        .collect();
    if pts.len() < degree + 2 {
        return Err(Error::UnstableWindow {
            lo,
            hi,
            reason: format!("{} points for a degree-{degree} fit", pts.len()),
        });
    }
    let sp = speeds(&pts);
    let med = median(&sp);
    if let Some(worst) = sp.iter().copied().find(|s| *s > 10.0 * med) {
        return Err(Error::UnstableWindow {
            lo,
            hi,
            reason: format!("|dE/dtheta| = {worst:e} exceeds ten times the window median {med:e}"),
        });
    }
    let x: Vec<f64> = pts.iter().map(|p| p.theta).collect();
    let re: Vec<f64> = pts.iter().map(|p| p.energy.re).collect();
    let im: Vec<f64> = pts.iter().map(|p| p.energy.im).collect();
    let cr = polyfit(&x, &re, None, degree)?;
    let ci = polyfit(&x, &im, None, degree)?;
    let residual = (x
        .iter()
        .zip(re.iter().zip(&im))
        .map(|(&t, (&r, &i))| (polyval(&cr, t) - r).powi(2) + (polyval(&ci, t) - i).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Ok(Extrapolation {
        energy: Complex64::new(cr[0], ci[0]),
        window,
        degree,
        residual,
    })
}
