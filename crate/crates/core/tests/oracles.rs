//! Checks against independent reference computations and property tests.

use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;

use stabcs::contfit::{fit_eta_c, fit_exponent, ContinuumChannel};
use stabcs::diabatize::{diabatize, TwoLevelDiabat};
use stabcs::eig::{eig_complex, eig_symmetric, eigvals_complex, eigvals_symmetric};
use stabcs::expost::{assemble, CoupledChannel, DiabaticModel};
use stabcs::lsq::{polyfit, polyval};
use stabcs::model1d::{build_complex_hamiltonian, build_real_hamiltonian, BasisSpec, Parity, PotentialParams};
use stabcs::stabgraph::{CrossingPoint, CrossingWindow, StabilizationGraph};

const X0: f64 = 4.920280359890388;

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix
/// (`diag`, constant off-diagonal `off`), from the signs of the LDL^T pivots.
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = d - x - if i == 0 { 0.0 } else { off * off / q };
        if q == 0.0 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenvalues of the three-point finite-difference Hamiltonian
/// on `[-half, half]` with Dirichlet ends and `m` intervals.
fn fd_levels(p: &PotentialParams, half: f64, m: usize, k: usize) -> Vec<f64> {
    let h = 2.0 * half / m as f64;
    let diag: Vec<f64> = (1..m).map(|j| 1.0 / (h * h) + p.eval(-half + j as f64 * h)).collect();
    let off = -0.5 / (h * h);
    let (lo0, hi0) = (-p.v0 - 1.0, 2.0 / (h * h) + p.v1 + 1.0);
    (0..k)
        .map(|i| {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sturm_count(&diag, off, mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn sine_basis_matches_extrapolated_finite_differences() {
    faer::set_global_parallelism(faer::Par::Seq);
    let p = PotentialParams::reference(X0);
    let b = BasisSpec::new(50.0, 500);
    let basis = eigvals_symmetric(&build_real_hamiltonian(0.0, &p, &b).unwrap().matrix).unwrap();
    let k = basis.iter().take_while(|&&e| e < 2.0).count();
    let e1 = fd_levels(&p, 50.0, 5000, k);
    let e2 = fd_levels(&p, 50.0, 10000, k);
    let e4 = fd_levels(&p, 50.0, 20000, k);
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let r_coarse = (4.0 * e2[i] - e1[i]) / 3.0;
        let r_fine = (4.0 * e4[i] - e2[i]) / 3.0;
        let fd = (16.0 * r_fine - r_coarse) / 15.0;
        worst = worst.max((fd - basis[i]).abs());
    }
    assert!(k > 60, "only {k} levels below 2");
    assert!(worst < 1e-7, "worst |E_basis - E_fd| = {worst:e} over {k} levels");
}

fn cbrt(z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        z
    } else {
        Complex64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
    }
}

/// Roots of `l^3 + a l^2 + b l + c` by Cardano's formula.
fn cubic_roots(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let (w1, w2) = (-q / 2.0 + s, -q / 2.0 - s);
    let u = cbrt(if w1.norm() >= w2.norm() { w1 } else { w2 });
    let omega = Complex64::new(-0.5, 0.75f64.sqrt());
    let shift = a / 3.0;
    let mut out = [Complex64::default(); 3];
    for (k, r) in out.iter_mut().enumerate() {
        let uk = u * omega.powu(k as u32);
        let vk = if uk.norm() == 0.0 { Complex64::default() } else { -p / (3.0 * uk) };
        *r = uk + vk - shift;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn three_level_arrowhead_matches_characteristic_cubic(
        e_r in 0.5f64..3.0,
        d1 in 1e-4f64..0.05,
        d2 in 1e-4f64..0.05,
        c1 in -0.5f64..0.5,
        c2 in -0.5f64..0.5,
        alpha in 1.5f64..2.5,
        re in -0.3f64..0.3,
        theta in 0.0f64..0.5,
    ) {
        let model = DiabaticModel::new(e_r, vec![
            CoupledChannel { channel: ContinuumChannel::exponential(c1, alpha, e_r), delta: d1 },
            CoupledChannel { channel: ContinuumChannel::exponential(c2, alpha, e_r), delta: d2 },
        ]).unwrap();
        let eta = Complex64::new(re, theta);
        let (a0, x1, x2) = (Complex64::new(e_r, 0.0), model.channels[0].channel.energy(eta), model.channels[1].channel.energy(eta));
        let (b1, b2) = (0.25 * d1 * d1, 0.25 * d2 * d2);
        // det(l - H) = (l-a0)(l-x1)(l-x2) - b1 (l-x2) - b2 (l-x1)
        let a = -(a0 + x1 + x2);
        let b = a0 * x1 + a0 * x2 + x1 * x2 - b1 - b2;
        let c = -a0 * x1 * x2 + b1 * x2 + b2 * x1;
        let got = eigvals_complex(&assemble(&model, eta)).unwrap();
        for r in cubic_roots(a, b, c) {
            let near = got.iter().map(|g| (g - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(near < 1e-10, "root {r} off by {near:e}");
        }
    }

    #[test]
    fn real_hamiltonian_is_symmetric(eta in -1.75f64..2.0, x0 in 3.0f64..8.0) {
        let b = BasisSpec::new(30.0, 40);
        let h = build_real_hamiltonian(eta, &PotentialParams::reference(x0), &b).unwrap().matrix;
        for i in 0..h.nrows() {
            for j in 0..i {
                prop_assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-12 * h[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn complex_hamiltonian_is_complex_symmetric(theta in 0.0f64..0.5, de in -0.2f64..0.2) {
        let b = BasisSpec::new(30.0, 40).with_parity(Parity::Even);
        let h = build_complex_hamiltonian(theta, de, &PotentialParams::reference(X0), &b).unwrap().matrix;
        for i in 0..h.nrows() {
            for j in 0..i {
                prop_assert!((h[(i, j)] - h[(j, i)]).norm() <= 1e-12 * h[(i, j)].norm().max(1.0));
            }
        }
    }

    #[test]
    fn complex_eigenvectors_are_c_normalized(seed in 0u64..1000, n in 2usize..12) {
        let mut a = Mat::<Complex64>::zeros(n, n);
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        for i in 0..n {
            for j in 0..=i {
                let z = Complex64::new(next(), next());
                a[(i, j)] = z;
                a[(j, i)] = z;
            }
        }
        let sys = eig_complex(&a).unwrap();
        for k in 0..n {
            let v: Vec<Complex64> = (0..n).map(|i| sys.vectors[(i, k)]).collect();
            let cdot: Complex64 = v.iter().map(|x| x * x).sum();
            prop_assert!((cdot - 1.0).norm() < 1e-9);
            for i in 0..n {
                let av: Complex64 = (0..n).map(|j| a[(i, j)] * v[j]).sum();
                prop_assert!((av - sys.values[k] * v[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn symmetric_eigenvectors_are_orthonormal(seed in 0u64..1000, n in 1usize..15) {
        let mut a = Mat::<f64>::zeros(n, n);
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        for i in 0..n {
            for j in 0..=i {
                let x = next();
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let sys = eig_symmetric(&a).unwrap();
        prop_assert!(sys.values.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..n {
            for l in 0..n {
                let dot: f64 = (0..n).map(|i| sys.vectors[(i, k)] * sys.vectors[(i, l)]).sum();
                let want = if k == l { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corrector_recovers_linear_diabat(
        e_r in 0.5f64..3.0,
        delta in 1e-3f64..2e-2,
        eta_c in -1.0f64..1.0,
        a_c in 1.0f64..5.0,
        skew in 0.5f64..1.5,
    ) {
        let d = TwoLevelDiabat { e_r, delta, eta_c, a_c, fit_sigma: 0.0 };
        let span = 5.0 * delta / a_c;
        let n = 31;
        let points: Vec<CrossingPoint> = (0..n).map(|i| {
            let eta = eta_c - span + (1.0 + skew) * span * i as f64 / (n - 1) as f64;
            let (lower, upper) = d.adiabatic(eta);
            CrossingPoint { eta, lower, upper }
        }).collect();
        let w = CrossingWindow {
            lower_curve: 0, upper_curve: 1,
            eta_range: (points[0].eta, points[n - 1].eta),
            gap_min_eta: eta_c, gap_min: delta, needs_refinement: false, points,
        };
        let f = diabatize(&w).unwrap();
        prop_assert!((f.e_r - e_r).abs() < 1e-10);
        prop_assert!((f.delta - delta).abs() < 1e-10);
        prop_assert!((f.eta_c - eta_c).abs() < 1e-9);
        prop_assert!((f.a_c - a_c).abs() < 1e-7);
    }

    #[test]
    fn exponent_fit_round_trip(
        alpha in 0.5f64..3.0,
        beta in -0.5f64..0.5,
        e0 in -1.0f64..0.5,
        eta_c in -1.0f64..1.0,
        e_r in 1.0f64..3.0,
    ) {
        let ch = ContinuumChannel { eta_c, alpha_c: alpha, beta_c: beta, e0, e_anchor: e_r };
        let pts: Vec<(f64, f64)> = (0..21).map(|i| {
            let x = eta_c - 0.2 + 0.02 * i as f64;
            (x, ch.energy(Complex64::new(x, 0.0)).re)
        }).collect();
        let f = fit_exponent(&pts, eta_c, e_r, e0).unwrap();
        prop_assert!((f.alpha - alpha).abs() < 1e-10);
        prop_assert!((f.beta - beta).abs() < 1e-10);
        prop_assert!(f.residual < 1e-12);
        let back = fit_eta_c(&pts, e_r, eta_c + 0.01).unwrap();
        prop_assert!((back - eta_c).abs() < 1e-3);
    }

    #[test]
    fn channel_is_anchored_and_analytic(
        alpha in 0.5f64..3.0,
        beta in -0.5f64..0.5,
        e0 in -1.0f64..0.5,
        eta_c in -1.0f64..1.0,
        re in -0.5f64..0.5,
        im in 0.0f64..0.7,
    ) {
        let ch = ContinuumChannel { eta_c, alpha_c: alpha, beta_c: beta, e0, e_anchor: 1.5 };
        prop_assert!((ch.energy(Complex64::new(eta_c, 0.0)).re - 1.5).abs() < 1e-15);
        let z = Complex64::new(eta_c + re, im);
        let h = 1e-6;
        let fd = (ch.energy(z + h) - ch.energy(z - h)) / (2.0 * h);
        let fd_i = (ch.energy(z + Complex64::new(0.0, h)) - ch.energy(z - Complex64::new(0.0, h))) / Complex64::new(0.0, 2.0 * h);
        let d = ch.energy_derivative(z);
        prop_assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0));
        prop_assert!((fd_i - d).norm() < 1e-6 * d.norm().max(1.0));
    }

    #[test]
    fn polyfit_reproduces_polynomials(c in prop::collection::vec(-5.0f64..5.0, 1..5), shift in -3.0f64..3.0) {
        let x: Vec<f64> = (0..12).map(|i| shift + 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| polyval(&c, t)).collect();
        let fit = polyfit(&x, &y, None, c.len() - 1).unwrap();
        for (a, b) in fit.iter().zip(&c) {
            prop_assert!((a - b).abs() < 1e-8 * b.abs().max(1.0));
        }
    }

    #[test]
    fn graph_csv_round_trip_is_exact(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..8)) {
        let etas: Vec<f64> = (0..rows.len()).map(|i| -1.0 + 0.013 * i as f64).collect();
        let energies: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r.sort_by(f64::total_cmp); r }).collect();
        let g = StabilizationGraph::new(etas, energies, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        g.save_csv(&path).unwrap();
        let back = StabilizationGraph::load_csv(&path).unwrap();
        prop_assert_eq!(&back.etas, &g.etas);
        prop_assert_eq!(&back.energies, &g.energies);
    }
}
