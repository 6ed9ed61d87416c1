//! Analytic `eta` dependence of quasi-continuum channels,
//! `E(eta) = (E_r - E0) exp(-alpha t - beta t^2) + E0` with `t = eta - eta_c`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{polyder, polyfit, polyval};
use crate::spline::quadratic_roots;
use crate::stabgraph::{CrossingWindow, StabilizationGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumChannel {
    pub eta_c: f64,
    pub alpha_c: f64,
    pub beta_c: f64,
    pub e0: f64,
    pub e_anchor: f64,
}

impl ContinuumChannel {
    /// Pure exponential channel through `(eta_c, e_anchor)` with threshold 0.
    pub fn exponential(eta_c: f64, alpha: f64, e_anchor: f64) -> Self {
        Self {
            eta_c,
            alpha_c: alpha,
            beta_c: 0.0,
            e0: 0.0,
            e_anchor,
        }
    }

    pub fn energy(&self, eta: Complex64) -> Complex64 {
        let t = eta - self.eta_c;
        (self.e_anchor - self.e0) * (-self.alpha_c * t - self.beta_c * t * t).exp() + self.e0
    }

    pub fn energy_derivative(&self, eta: Complex64) -> Complex64 {
        let t = eta - self.eta_c;
        -(self.alpha_c + 2.0 * self.beta_c * t) * (self.energy(eta) - self.e0)
    }
}

/// Analytic continuation of the fitted form to complex `eta`.
pub fn channel_energy(ch: &ContinuumChannel, eta: Complex64) -> Complex64 {
    ch.energy(eta)
}

/// Least-squares parabola through `(eta, E)` and its root `E = e_r` nearest
/// `near`.
pub fn fit_eta_c(points: &[(f64, f64)], e_r: f64, near: f64) -> Result<f64> {
    fit_eta_c_with_slope(points, e_r, near).map(|(eta, _)| eta)
}

/// As [`fit_eta_c`], also returning the parabola's slope at the root.
pub fn fit_eta_c_with_slope(points: &[(f64, f64)], e_r: f64, near: f64) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::invalid("eta_c fit needs at least three points"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let c = polyfit(&x, &y, None, 2)?;
    // Solve in the local variable s = eta - near for accuracy.
    let (a2, a1, a0) = (c[2], c[1] + 2.0 * c[2] * near, polyval(&c, near) - e_r);
    let roots: Vec<f64> = if a2.abs() <= 1e-12 * a1.abs() {
        if a1 == 0.0 {
            vec![]
        } else {
            vec![-a0 / a1]
        }
    } else {
        quadratic_roots(a2, a1, a0)
    };
    let s = roots
        .into_iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(Error::NoRealRoot)?;
    let eta = near + s;
    Ok((eta, polyval(&polyder(&c), eta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub alpha: f64,
    pub beta: f64,
    /// Weighted RMS residual of the log fit.
    pub residual: f64,
}

/// Weighted least squares of `log((E - E0)/(E_r - E0))` against
/// `-alpha t - beta t^2`, weights `(E_r - E0)/(E - E0)`.
pub fn fit_exponent(points: &[(f64, f64)], eta_c: f64, e_r: f64, e0: f64) -> Result<ExponentFit> {
    if e_r <= e0 {
        return Err(Error::ThresholdViolation {
            eta: eta_c,
            energy: e_r,
            e0,
        });
    }
    if let Some(&(eta, energy)) = points.iter().find(|(_, e)| *e <= e0) {
        return Err(Error::ThresholdViolation { eta, energy, e0 });
    }
    if points.len() < 2 {
        return Err(Error::IllConditioned("exponent fit needs at least two points".into()));
    }
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::with_capacity(points.len());
    for &(eta, e) in points {
        let t = eta - eta_c;
        let f = ((e - e0) / (e_r - e0)).ln();
        let w = (e_r - e0) / (e - e0);
        // columns: -t, -t^2
        let (u, v) = (-t, -t * t);
        s11 += w * u * u;
        s12 += w * u * v;
        s22 += w * v * v;
        r1 += w * u * f;
        r2 += w * v * f;
        rows.push((u, v, f, w));
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-14 * s11 * s22) {
        return Err(Error::IllConditioned(format!(
            "exponent normal equations singular (det {det:e})"
        )));
    }
    let alpha = (s22 * r1 - s12 * r2) / det;
    let beta = (s11 * r2 - s12 * r1) / det;
    let (mut num, mut den) = (0.0, 0.0);
    for (u, v, f, w) in rows {
        let r = f - alpha * u - beta * v;
        num += w * r * r;
        den += w;
    }
    Ok(ExponentFit {
        alpha,
        beta,
        residual: (num / den).sqrt(),
    })
}

/// Points `(eta, E_eta)` of the channel passing through one crossing.
///
/// Inside the crossing window the diabatic energy is `eps_+ + eps_- - E_r`.
/// Left of the window the channel is the upper curve of the pair, right of it
/// the lower one; these isolated points are kept while the curve stays inside
/// `E_r +- band` and `exp(2 eta) E` changes by less than 20% between
/// neighbours.
pub fn channel_points(graph: &StabilizationGraph, crossing: &CrossingWindow, e_r: f64, band: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = crossing.points.iter().map(|p| (p.eta, p.upper + p.lower - e_r)).collect();
    let first = graph.etas.partition_point(|&e| e < crossing.eta_range.0);
    let last = graph.etas.partition_point(|&e| e <= crossing.eta_range.1);
    let scaled = |i: usize, k: usize| (2.0 * graph.etas[i]).exp() * graph.energies[i][k];
    let in_band = |e: f64| (e - e_r).abs() <= band;

    let up = crossing.upper_curve;
    let mut prev = first;
    for i in (0..first).rev() {
        let e = graph.energies[i][up];
        if !in_band(e) || (scaled(i, up) / scaled(prev, up) - 1.0).abs() > 0.2 {
            break;
        }
        pts.push((graph.etas[i], e));
        prev = i;
    }
    let lo = crossing.lower_curve;
    let mut prev = last.saturating_sub(1);
    for i in last..graph.len() {
        let e = graph.energies[i][lo];
        if !in_band(e) || (scaled(i, lo) / scaled(prev, lo) - 1.0).abs() > 0.2 {
            break;
        }
        pts.push((graph.etas[i], e));
        prev = i;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}
