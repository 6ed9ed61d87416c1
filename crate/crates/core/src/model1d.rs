//! One-dimensional model: double-barrier Gaussian well, real-scaled sine box
//! basis, and the real-symmetric / complex-scaled Hamiltonian matrices.
//!
//! The box basis on `[-L, L]` is
//! `chi_n(x) = L^{-1/2} sin(n pi (x + L) / (2 L))`, `n = 1..=N`, with
//! `L = L0 exp(eta)`. Kinetic matrix elements are diagonal,
//! `T_nn = n^2 pi^2 / (8 mu L^2)`. Potential matrix elements use
//! `sin a sin b = [cos(a - b) - cos(a + b)] / 2`, so the whole block follows
//! from the cosine moments `C_k = int V(x) cos(k pi (x + L) / (2 L)) dx`,
//! `k = 0..=2N`:
//!
//! `V_nm = [C_{|n-m|} - C_{n+m}] / (2 L)`.

use std::f64::consts::PI;
use std::ops::{AddAssign, Mul};

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::CompositeRule;

/// Gauss–Legendre points per panel.
const PANEL_ORDER: usize = 20;
/// Agreement required between successive quadrature refinements (max norm).
pub const QUADRATURE_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 5;

/// Parameters of the symmetric double-barrier well
/// `V(x) = -v0 exp(-x^2/sigma0^2) + v1 [exp(-(x-x0)^2/sigma1^2) + exp(-(x+x0)^2/sigma1^2)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub v0: f64,
    pub v1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub x0: f64,
}

impl PotentialParams {
    /// Well and barrier of the reference model with a given barrier offset.
    pub fn reference(x0: f64) -> Self {
        Self {
            v0: 7.1,
            v1: 4.5,
            sigma0: 4.0,
            sigma1: 2.0,
            x0,
        }
    }

    /// `V == 0`; the widths are placeholders that never enter.
    pub fn free() -> Self {
        Self {
            v0: 0.0,
            v1: 0.0,
            sigma0: 1.0,
            sigma1: 1.0,
            x0: 1.0,
        }
    }

    pub fn is_free(&self) -> bool {
        self.v0 == 0.0 && self.v1 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.v0, self.v1, self.sigma0, self.sigma1, self.x0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("potential parameters must be finite"));
        }
        if self.v0 < 0.0 || self.v1 < 0.0 {
            return Err(Error::invalid("v0 and v1 must be non-negative"));
        }
        if self.sigma0 <= 0.0 || self.sigma1 <= 0.0 || self.x0 <= 0.0 {
            return Err(Error::invalid("sigma0, sigma1 and x0 must be strictly positive"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.is_free() {
            return 0.0;
        }
        let well = -self.v0 * (-(x * x) / (self.sigma0 * self.sigma0)).exp();
        let s1 = self.sigma1 * self.sigma1;
        let left = (-(x - self.x0).powi(2) / s1).exp();
        let right = (-(x + self.x0).powi(2) / s1).exp();
        well + self.v1 * (left + right)
    }

    /// Analytic continuation of [`eval`](Self::eval) to complex coordinates.
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        if self.is_free() {
            return Complex64::new(0.0, 0.0);
        }
        let well = -self.v0 * (-(z * z) / (self.sigma0 * self.sigma0)).exp();
        let s1 = self.sigma1 * self.sigma1;
        let left = (-(z - self.x0).powi(2) / s1).exp();
        let right = (-(z + self.x0).powi(2) / s1).exp();
        well + self.v1 * (left + right)
    }
}

pub fn eval_potential(x: f64, p: &PotentialParams) -> f64 {
    p.eval(x)
}

/// Symmetry block of the sine basis. For an even potential the Hamiltonian
/// splits exactly: odd `n` give functions even in `x`, even `n` odd ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    #[default]
    All,
    /// Functions even in `x` (odd `n`).
    Even,
    /// Functions odd in `x` (even `n`).
    Odd,
}

impl Parity {
    pub fn contains(self, n: usize) -> bool {
        match self {
            Parity::All => true,
            Parity::Even => n % 2 == 1,
            Parity::Odd => n % 2 == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    /// Half-length of the unscaled box.
    pub l0: f64,
    /// Number of sine functions before any parity restriction.
    pub n: usize,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Initial number of quadrature nodes; refined until converged.
    pub quadrature_points: usize,
    #[serde(default)]
    pub parity: Parity,
}

fn default_mu() -> f64 {
    1.0
}

impl BasisSpec {
    pub fn new(l0: f64, n: usize) -> Self {
        Self {
            l0,
            n,
            mu: 1.0,
            quadrature_points: 4 * n,
            parity: Parity::All,
        }
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l0.is_finite() && self.l0 > 0.0) {
            return Err(Error::invalid("box half-length l0 must be positive"));
        }
        if self.n < 2 {
            return Err(Error::invalid("basis needs at least two sine functions"));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid("mass mu must be positive"));
        }
        if self.quadrature_points < 4 * self.n {
            return Err(Error::invalid(format!(
                "quadrature_points = {} is below 4N = {}",
                self.quadrature_points,
                4 * self.n
            )));
        }
        Ok(())
    }

    /// Sine indices `n` that make up this basis, ascending.
    pub fn indices(&self) -> Vec<usize> {
        (1..=self.n).filter(|&n| self.parity.contains(n)).collect()
    }

    pub fn dim(&self) -> usize {
        self.indices().len()
    }

    pub fn half_length(&self, eta: f64) -> f64 {
        self.l0 * eta.exp()
    }

    /// `n^2 pi^2 / (8 mu L^2)`.
    pub fn kinetic(&self, n: usize, half_length: f64) -> f64 {
        let n = n as f64;
        n * n * PI * PI / (8.0 * self.mu * half_length * half_length)
    }

    /// Value of `chi_n` on the box `[-L, L]`.
    pub fn basis_function(n: usize, half_length: f64, x: f64) -> f64 {
        (n as f64 * PI * (x + half_length) / (2.0 * half_length)).sin() / half_length.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct RealHamiltonian {
    pub eta: f64,
    pub matrix: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct ComplexHamiltonian {
    pub theta: f64,
    pub delta_eta: f64,
    pub matrix: Mat<Complex64>,
}

/// Cosine moments `C_k`, `k = 0..=kmax`, of `f` over `[-half, half]` with
/// the box phase `k pi (x + half) / (2 half)`. Evaluated at `x` but `f`
/// receives the node so callers can rescale it.
fn cosine_moments<T, F>(half: f64, kmax: usize, rule: &CompositeRule, f: F) -> Vec<T>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    F: Fn(f64) -> T,
{
    let mut out = vec![T::default(); kmax + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fw = f(x) * w;
        let phase = PI * (x + half) / (2.0 * half);
        let c1 = phase.cos();
        let two_c1 = 2.0 * c1;
        let (mut prev, mut cur) = (1.0, c1);
        out[0] += fw;
        if kmax >= 1 {
            out[1] += fw * c1;
        }
        for slot in out.iter_mut().skip(2) {
            let next = two_c1 * cur - prev;
            prev = cur;
            cur = next;
            *slot += fw * cur;
        }
    }
    out
}

/// Cosine moments refined by panel doubling until two successive levels
/// agree to [`QUADRATURE_TOL`] (on the matrix-element scale `C_k / L`).
fn converged_moments<T, F, N>(half: f64, kmax: usize, start_points: usize, f: F, norm: N) -> Result<Vec<T>>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T> + std::ops::Sub<Output = T>,
    F: Fn(f64) -> T,
    N: Fn(T) -> f64,
{
    let mut panels = start_points.div_ceil(PANEL_ORDER).max(1);
    let mut prev = cosine_moments(half, kmax, &CompositeRule::new(-half, half, panels, PANEL_ORDER), &f);
    let mut diff = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let next = cosine_moments(half, kmax, &CompositeRule::new(-half, half, panels, PANEL_ORDER), &f);
        diff = prev
            .iter()
            .zip(&next)
            .map(|(&a, &b)| norm(a - b))
            .fold(0.0, f64::max)
            / half;
        if diff <= QUADRATURE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureUnderResolved {
        diff,
        tol: QUADRATURE_TOL,
    })
}

fn assemble<T>(indices: &[usize], half: f64, moments: &[T], kinetic: impl Fn(usize) -> T) -> Mat<T>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T> + std::ops::Sub<Output = T>,
{
    let dim = indices.len();
    let scale = 1.0 / (2.0 * half);
    let mut m = Mat::<T>::from_fn(dim, dim, |_, _| T::default());
    for i in 0..dim {
        for j in 0..=i {
            let (n, k) = (indices[i], indices[j]);
            let v = (moments[n.abs_diff(k)] - moments[n + k]) * scale;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        let mut d = m[(i, i)];
        d += kinetic(indices[i]);
        m[(i, i)] = d;
    }
    m
}

/// Real-symmetric Hamiltonian in the box basis scaled to `L0 exp(eta)`.
pub fn build_real_hamiltonian(eta: f64, p: &PotentialParams, b: &BasisSpec) -> Result<RealHamiltonian> {
    p.validate()?;
    b.validate()?;
    if !eta.is_finite() {
        return Err(Error::invalid("eta must be finite"));
    }
    let half = b.half_length(eta);
    let indices = b.indices();
    let moments = if p.is_free() {
        vec![0.0; 2 * b.n + 1]
    } else {
        converged_moments(half, 2 * b.n, b.quadrature_points, |x| p.eval(x), f64::abs)?
    };
    let matrix = assemble(&indices, half, &moments, |n| b.kinetic(n, half));
    Ok(RealHamiltonian { eta, matrix })
}

/// Complex-scaled Hamiltonian for `eta = delta_eta + i theta`: the basis stays
/// on the unscaled box, the kinetic block picks up `exp(-2 eta)` and the
/// potential is evaluated at `x exp(eta)` on the real quadrature grid.
pub fn build_complex_hamiltonian(
    theta: f64,
    delta_eta: f64,
    p: &PotentialParams,
    b: &BasisSpec,
) -> Result<ComplexHamiltonian> {
    p.validate()?;
    b.validate()?;
    if !(0.0..PI / 4.0).contains(&theta) {
        return Err(Error::invalid(format!("theta = {theta} outside [0, pi/4)")));
    }
    if !delta_eta.is_finite() {
        return Err(Error::invalid("delta_eta must be finite"));
    }
    let half = b.l0;
    let scale = Complex64::new(delta_eta, theta).exp();
    let kin_factor = (scale * scale).inv();
    let indices = b.indices();
    let moments = if p.is_free() {
        vec![Complex64::default(); 2 * b.n + 1]
    } else {
        converged_moments(
            half,
            2 * b.n,
            b.quadrature_points,
            |x| p.eval_complex(scale * x),
            |c: Complex64| c.norm(),
        )?
    };
    let matrix = assemble(&indices, half, &moments, |n| kin_factor * b.kinetic(n, half));
    Ok(ComplexHamiltonian {
        theta,
        delta_eta,
        matrix,
    })
}
