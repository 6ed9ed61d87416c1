//! Natural cubic spline on a strictly increasing abscissa.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::invalid("spline needs at least three points"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("spline abscissa must be strictly increasing"));
        }
        // Tridiagonal system for interior second derivatives (natural ends).
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let cc = h1;
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) * h * self.m[i] / 6.0
            + (3.0 * b * b - 1.0) * h * self.m[i + 1] / 6.0
    }

    /// Global minimum over the knot range: knot values plus every stationary
    /// point of each cubic piece.
    pub fn argmin(&self) -> (f64, f64) {
        let mut best = (self.x[0], self.y[0]);
        for (&x, &y) in self.x.iter().zip(&self.y) {
            if y < best.1 {
                best = (x, y);
            }
        }
        for i in 0..self.x.len() - 1 {
            let (x0, x1) = (self.x[i], self.x[i + 1]);
            let h = x1 - x0;
            // S'(t) on the piece is a quadratic in b = (t - x0)/h.
            let (m0, m1) = (self.m[i], self.m[i + 1]);
            let slope = (self.y[i + 1] - self.y[i]) / h;
            // S'(b) = slope - (3(1-b)^2 - 1) h m0/6 + (3 b^2 - 1) h m1/6
            let qa = 0.5 * h * (m1 - m0);
            let qb = h * m0;
            let qc = slope - h * m0 / 3.0 - h * m1 / 6.0;
            for b in quadratic_roots(qa, qb, qc) {
                if (0.0..=1.0).contains(&b) {
                    let t = x0 + b * h;
                    let v = self.eval(t);
                    if v < best.1 {
                        best = (t, v);
                    }
                }
            }
        }
        best
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }
}

/// Real roots of `a x^2 + b x + c`, degenerating to the linear case.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return vec![];
    }
    if a.abs() <= 1e-14 * scale {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a];
    if q != 0.0 {
        r.push(c / q);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_interior() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|t| (t - 1.0).powi(2) + 0.3).collect();
        let s = CubicSpline::new(&x, &y).unwrap();
        let (tmin, vmin) = s.argmin();
        assert!((tmin - 1.0).abs() < 1e-4);
        assert!((vmin - 0.3).abs() < 1e-8);
        assert!((s.eval(0.73) - ((0.73f64 - 1.0).powi(2) + 0.3)).abs() < 1e-5);
        assert!((s.derivative(1.2) - 0.4).abs() < 1e-3);
    }

    #[test]
    fn quadratic_root_cases() {
        let mut r = quadratic_roots(1.0, -3.0, 2.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![1.0, 2.0]);
        assert_eq!(quadratic_roots(0.0, 2.0, -1.0), vec![0.5]);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
    }
}
