//! Small weighted polynomial least-squares fits.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::error::{Error, Result};

/// Coefficients `c[0] + c[1] x + ... + c[deg] x^deg` minimising
/// `sum w_i (y_i - p(x_i))^2`, solved by QR on the `sqrt(w)`-scaled
/// Vandermonde matrix. Abscissae are shifted and scaled internally.
pub fn polyfit(x: &[f64], y: &[f64], w: Option<&[f64]>, deg: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if y.len() != n || w.is_some_and(|w| w.len() != n) {
        return Err(Error::invalid("polyfit: length mismatch"));
    }
    if n < deg + 1 {
        return Err(Error::invalid(format!("polyfit: degree {deg} needs {} points, got {n}", deg + 1)));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mid = 0.5 * (lo + hi);
    let half = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    let sw: Vec<f64> = match w {
        Some(w) => {
            if w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::invalid("polyfit: weights must be positive"));
            }
            w.iter().map(|v| v.sqrt()).collect()
        }
        None => vec![1.0; n],
    };
    let a = Mat::from_fn(n, deg + 1, |i, j| sw[i] * ((x[i] - mid) / half).powi(j as i32));
    let b = Mat::from_fn(n, 1, |i, _| sw[i] * y[i]);
    let sv = a.singular_values().map_err(|_| Error::NoConvergence)?;
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if !(smin > 1e-12 * smax) {
        return Err(Error::IllConditioned(format!("polyfit: condition number {:e}", smax / smin)));
    }
    let t = a.qr().solve_lstsq(&b);
    // Expand p(u), u = (x - mid)/half, back into powers of x.
    let mut out = vec![0.0; deg + 1];
    let mut basis = vec![0.0; deg + 1]; // coefficients of u^j in powers of x
    basis[0] = 1.0;
    for j in 0..=deg {
        for (k, c) in basis.iter().enumerate() {
            out[k] += t[(j, 0)] * c;
        }
        let mut next = vec![0.0; deg + 1];
        for k in 0..deg {
            next[k + 1] += basis[k] / half;
            next[k] -= basis[k] * mid / half;
        }
        basis = next;
    }
    Ok(out)
}

pub fn polyval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

pub fn polyder(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, ci)| k as f64 * ci).collect()
}
