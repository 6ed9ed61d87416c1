//! Dense eigensolvers: real symmetric and general complex (used for
//! complex-symmetric scaled Hamiltonians).

use std::cmp::Ordering;

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`eig_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues closer than this are reported as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RealEigenSystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal columns; column `k` belongs to `values[k]`.
    pub vectors: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct ComplexEigenSystem {
    /// Sorted by real part, ties by imaginary part.
    pub values: Vec<Complex64>,
    /// Columns normalized under the c-product `v^T v = 1` where possible.
    pub vectors: Mat<Complex64>,
    /// Groups of indices whose eigenvalues lie within [`CLUSTER_TOL`] of one
    /// another (near-degenerate or defective pairs).
    pub clusters: Vec<Vec<usize>>,
}

impl ComplexEigenSystem {
    /// `v_k[i]^2`, the c-product weight of basis state `i` in eigenvector `k`.
    pub fn weight(&self, k: usize, i: usize) -> Complex64 {
        let c = self.vectors[(i, k)];
        c * c
    }
}

pub fn inf_norm_real(a: &Mat<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn inf_norm_complex(a: &Mat<Complex64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_symmetric(a: &Mat<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("matrix must be square"));
    }
    let n = a.nrows();
    let mut scale = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            if !v.is_finite() {
                return Err(Error::invalid("matrix has non-finite entries"));
            }
            scale = scale.max(v.abs());
            asym = asym.max((v - a[(j, i)]).abs());
        }
    }
    let rel = if scale > 0.0 { asym / scale } else { 0.0 };
    if rel > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(rel));
    }
    Ok(())
}

/// Full spectrum of a real symmetric matrix, ascending. Each eigenvector is
/// signed so its largest-magnitude component is positive.
pub fn eig_symmetric(a: &Mat<f64>) -> Result<RealEigenSystem> {
    check_symmetric(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(RealEigenSystem {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let values: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let mut vectors = Mat::<f64>::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for i in 0..n {
            if u[(i, src)].abs() > u[(pivot, src)].abs() {
                pivot = i;
            }
        }
        let sign = if u[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, k)] = sign * u[(i, src)];
        }
    }
    Ok(RealEigenSystem { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvals_symmetric(a: &Mat<f64>) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    let mut v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check_finite(a: &Mat<Complex64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("matrix must be square"));
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::invalid("matrix has non-finite entries"));
            }
        }
    }
    Ok(())
}

fn clusters_of(values: &[Complex64]) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() < CLUSTER_TOL {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        if r != i {
            continue;
        }
        let g: Vec<usize> = (0..n).filter(|&j| root(&mut parent, j) == r).collect();
        if g.len() > 1 {
            groups.push(g);
        }
    }
    groups
}

/// All eigenpairs of a general complex matrix. Eigenvectors are scaled to
/// `v^T v = 1` (no conjugation); a self-orthogonal vector (at an exceptional
/// point) keeps unit Euclidean norm instead.
pub fn eig_complex(a: &Mat<Complex64>) -> Result<ComplexEigenSystem> {
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(ComplexEigenSystem {
            values: vec![],
            vectors: Mat::zeros(0, 0),
            clusters: vec![],
        });
    }
    let evd = a.eigen().map_err(|_| Error::NoConvergence)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_complex(&s[i], &s[j]));
    let values: Vec<Complex64> = order.iter().map(|&i| s[i]).collect();
    let mut vectors = Mat::<Complex64>::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let euclid = (0..n).map(|i| u[(i, src)].norm_sqr()).sum::<f64>().sqrt();
        let cdot: Complex64 = (0..n).map(|i| u[(i, src)] * u[(i, src)]).sum();
        let scale = if cdot.norm() > 1e-10 * euclid * euclid {
            cdot.sqrt().inv()
        } else {
            Complex64::new(1.0 / euclid, 0.0)
        };
        let mut pivot = 0;
        for i in 0..n {
            if u[(i, src)].norm() > u[(pivot, src)].norm() {
                pivot = i;
            }
        }
        let sign = if (u[(pivot, src)] * scale).re < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, k)] = u[(i, src)] * scale * sign;
        }
    }
    let clusters = clusters_of(&values);
    Ok(ComplexEigenSystem {
        values,
        vectors,
        clusters,
    })
}

/// Eigenvalues only, sorted by real then imaginary part.
pub fn eigvals_complex(a: &Mat<Complex64>) -> Result<Vec<Complex64>> {
    check_finite(a)?;
    let mut v = a.eigenvalues().map_err(|_| Error::NoConvergence)?;
    v.sort_by(cmp_complex);
    Ok(v)
}
