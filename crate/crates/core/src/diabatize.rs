//! Two-level diabatization of single avoided crossings: a spline predictor
//! followed by a simplex corrector on the spread of per-point parameters.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contfit::{fit_eta_c_with_slope, ContinuumChannel};
use crate::error::{Error, Result};
use crate::spline::CubicSpline;
use crate::stabgraph::{CrossingPoint, CrossingWindow, MIN_WINDOW_POINTS};

/// Simplex iterations allowed in the corrector.
pub const MAX_SIMPLEX_ITERS: u64 = 4000;

/// `[[E_r, delta/2], [delta/2, E_eta]]` near one crossing, with
/// `E_eta ~ E_r - a_c (eta - eta_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelDiabat {
    pub e_r: f64,
    pub delta: f64,
    pub eta_c: f64,
    pub a_c: f64,
    pub fit_sigma: f64,
}

impl TwoLevelDiabat {
    pub fn diabatic_energy(&self, eta: f64) -> f64 {
        self.e_r - self.a_c * (eta - self.eta_c)
    }

    /// `(eps_-, eps_+)` of the linear two-level model.
    pub fn adiabatic(&self, eta: f64) -> (f64, f64) {
        two_level_eigenvalues(self.e_r, self.diabatic_energy(eta), self.delta)
    }
}

/// Eigenvalues `(eps_-, eps_+)` of `[[e_r, delta/2], [delta/2, e_eta]]`.
pub fn two_level_eigenvalues(e_r: f64, e_eta: f64, delta: f64) -> (f64, f64) {
    let mean = 0.5 * (e_r + e_eta);
    let r = 0.5 * ((e_eta - e_r).powi(2) + delta * delta).sqrt();
    (mean - r, mean + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub e_r: f64,
    pub delta: f64,
    pub eta_c: f64,
}

pub fn predictor(crossing: &CrossingWindow) -> Result<Estimate> {
    let pts = &crossing.points;
    if pts.len() < MIN_WINDOW_POINTS {
        return Err(Error::invalid(format!(
            "crossing near eta = {} has {} points, needs {MIN_WINDOW_POINTS}",
            crossing.gap_min_eta,
            pts.len()
        )));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.eta).collect();
    let gap: Vec<f64> = pts.iter().map(CrossingPoint::gap).collect();
    let mean: Vec<f64> = pts.iter().map(CrossingPoint::mean).collect();
    let spline = CubicSpline::new(&x, &gap)?;
    let (eta_c, delta) = spline.argmin();
    if eta_c <= x[0] || eta_c >= x[x.len() - 1] {
        return Err(Error::MinimumAtBoundary(eta_c));
    }
    let e_r = CubicSpline::new(&x, &mean)?.eval(eta_c);
    Ok(Estimate { e_r, delta, eta_c })
}

struct Spread<'a> {
    points: &'a [CrossingPoint],
}

struct SpreadTerms {
    variance: f64,
    penalty: f64,
    excluded: usize,
}

fn variance(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

impl Spread<'_> {
    /// Per point: `delta_k = sqrt(D^2 - 4 (m - E_r)^2)` and
    /// `E_r,k = sign(E_r - m) sqrt(D^2 - delta^2)/2 + m`, with `m` the mean
    /// and `D` the gap. Points with a negative discriminant drop out of the
    /// variance and add its magnitude as a penalty.
    fn terms(&self, e_r: f64, delta: f64) -> SpreadTerms {
        let mut deltas = Vec::with_capacity(self.points.len());
        let mut ers = Vec::with_capacity(self.points.len());
        let mut penalty = 0.0;
        let mut excluded = 0;
        for p in self.points {
            let (m, d) = (p.mean(), p.gap());
            let disc_delta = d * d - 4.0 * (m - e_r).powi(2);
            let disc_er = d * d - delta * delta;
            if disc_delta < 0.0 || disc_er < 0.0 {
                penalty += (-disc_delta).max(0.0) + (-disc_er).max(0.0);
                excluded += 1;
                continue;
            }
            deltas.push(disc_delta.sqrt());
            let sign = if e_r >= m { 1.0 } else { -1.0 };
            ers.push(sign * 0.5 * disc_er.sqrt() + m);
        }
        SpreadTerms {
            variance: variance(&deltas) + variance(&ers),
            penalty,
            excluded,
        }
    }
}

impl CostFunction for Spread<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let t = self.terms(p[0], p[1]);
        Ok(t.variance + t.penalty)
    }
}

/// Refines the predictor estimate by minimising `sigma^2 = sigma_1^2 +
/// sigma_2^2`, the spread of the per-point `delta_k` and `E_r,k`, with a
/// Nelder-Mead simplex. `eta_c` and `a_c` then come from a parabola through
/// the diabatic energies `eps_+ + eps_- - E_r`.
pub fn corrector(crossing: &CrossingWindow, est: &Estimate) -> Result<TwoLevelDiabat> {
    let spread = Spread {
        points: &crossing.points,
    };
    let step = 0.25 * est.delta.max(1e-12);
    let start = vec![
        vec![est.e_r, est.delta],
        vec![est.e_r + step, est.delta],
        vec![est.e_r, est.delta + step],
    ];
    let solver = NelderMead::new(start)
        .with_sd_tolerance(0.0)
        .map_err(|_| Error::NoConvergence)?;
    let res = Executor::new(spread, solver)
        .configure(|s| s.max_iters(MAX_SIMPLEX_ITERS))
        .run()
        .map_err(|_| Error::NoConvergence)?;
    let best = res.state().get_best_param().ok_or(Error::NoConvergence)?.clone();
    let (e_r, delta) = (best[0], best[1].abs());

    let spread = Spread {
        points: &crossing.points,
    };
    let t = spread.terms(e_r, delta);
    let total = crossing.points.len();
    if total - t.excluded < 3 {
        return Err(Error::NegativeDiscriminant {
            excluded: t.excluded,
            total,
        });
    }
    let diabatic: Vec<(f64, f64)> = crossing.points.iter().map(|p| (p.eta, p.upper + p.lower - e_r)).collect();
    let (eta_c, slope) = fit_eta_c_with_slope(&diabatic, e_r, est.eta_c)?;
    Ok(TwoLevelDiabat {
        e_r,
        delta,
        eta_c,
        a_c: -slope,
        fit_sigma: t.variance.sqrt(),
    })
}

/// `sigma` of the corrector objective at given parameters (for comparing the
/// predictor and corrector points).
pub fn spread_sigma(crossing: &CrossingWindow, e_r: f64, delta: f64) -> f64 {
    let t = Spread {
        points: &crossing.points,
    }
    .terms(e_r, delta);
    (t.variance + t.penalty).sqrt()
}

/// Predictor then corrector.
pub fn diabatize(crossing: &CrossingWindow) -> Result<TwoLevelDiabat> {
    corrector(crossing, &predictor(crossing)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceptionalPoint {
    pub eta: Complex64,
    pub energy: Complex64,
}

/// Complex `eta` where the channel reaches `E_r - i delta`; the coalescing
/// pair sits at `E_r - i delta/2` there.
pub fn ep_location(d: &TwoLevelDiabat, ch: &ContinuumChannel) -> Result<ExceptionalPoint> {
    let target = Complex64::new(d.e_r, -d.delta);
    let scale = d.e_r - ch.e0;
    let mut eta = Complex64::new(ch.eta_c, 0.0) - (Complex64::new(1.0, -d.delta / scale)).ln() / ch.alpha_c;
    for _ in 0..100 {
        let f = ch.energy(eta) - target;
        let df = ch.energy_derivative(eta);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        eta -= step;
        if (eta - d.eta_c).norm() >= 1.0 {
            break;
        }
        if step.norm() <= 1e-15 * (1.0 + eta.norm()) {
            break;
        }
    }
    let resid = (ch.energy(eta) - target).norm();
    if (eta - d.eta_c).norm() >= 1.0 || !(resid <= 1e-12 * target.norm()) {
        return Err(Error::NoRoot(format!(
            "no exceptional point within |eta - eta_c| < 1 of {}",
            d.eta_c
        )));
    }
    Ok(ExceptionalPoint {
        eta,
        energy: Complex64::new(d.e_r, -0.5 * d.delta),
    })
}
