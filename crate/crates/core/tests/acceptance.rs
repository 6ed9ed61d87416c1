//! One test per acceptance criterion, each printing a PASS/FAIL line.
//!
//! The reference system (L0 = 50, N = 500, eta in [-1, 1] at 0.01) is swept
//! once per binary; see `common::reference_system`.

mod common;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{reference_system, report, TARGET_E_R, TARGET_GAMMA};
use stabcs::config::RunConfig;
use stabcs::contfit::{fit_exponent, ContinuumChannel};
use stabcs::diabatize::{diabatize, ep_location, two_level_eigenvalues, TwoLevelDiabat};
use stabcs::direct::{benchmark_resonance, complex_spectra, on_rotated_string};
use stabcs::eig::eigvals_complex;
use stabcs::expost::{assemble, extrapolate, spectrum, stable_window, theta_sweep, CoupledChannel, DiabaticModel};
use stabcs::model1d::{BasisSpec, PotentialParams};
use stabcs::stabgraph::{calibrate_x0, plateau_energy, sweep, uniform_grid, CrossingPoint, CrossingWindow};

fn nearest(set: &[Complex64], z: Complex64) -> Complex64 {
    *set.iter().min_by(|a, b| (**a - z).norm().total_cmp(&(**b - z).norm())).unwrap()
}

fn synthetic_window(d: &TwoLevelDiabat, lo: f64, hi: f64, n: usize, noise: &mut dyn FnMut() -> f64) -> CrossingWindow {
    let points: Vec<CrossingPoint> = (0..n)
        .map(|i| {
            let eta = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let (a, b) = d.adiabatic(eta);
            CrossingPoint {
                eta,
                lower: a + noise(),
                upper: b + noise(),
            }
        })
        .collect();
    CrossingWindow {
        lower_curve: 0,
        upper_curve: 1,
        eta_range: (lo, hi),
        gap_min_eta: d.eta_c,
        gap_min: d.delta,
        needs_refinement: false,
        points,
    }
}

#[test]
fn criterion_1_resonance_position() {
    let sys = reference_system();
    let cal = RunConfig::load(&common::config_path("calibrate.json")).unwrap();
    let c = cal.calibration.unwrap();
    let x0 = calibrate_x0(c.target, c.bracket, &cal.potential, &cal.basis).unwrap();
    let calibrated = PotentialParams { x0, ..cal.potential };
    let plateau = plateau_energy(&calibrated, &cal.basis, TARGET_E_R, 0.25).unwrap();
    let mean_er = sys.model.e_r;
    let worst_er = sys
        .records
        .iter()
        .map(|r| (r.e_r - TARGET_E_R).abs())
        .fold(0.0, f64::max);
    let secs = sys.sweep_time.as_secs_f64();
    let pass = (plateau - TARGET_E_R).abs() < 1e-3
        && (mean_er - TARGET_E_R).abs() < 1e-3
        && worst_er < 1e-3
        && (x0 - sys.potential.x0).abs() < 1e-8
        && secs < 600.0;
    report(
        "criterion 1 (resonance position)",
        pass,
        &format!("x0 {x0:.10} plateau {plateau:.7} mean E_r {mean_er:.7} worst |E_r - 1.5388| {worst_er:.2e} sweep+fit {secs:.0}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_width_convergence() {
    let sys = reference_system();
    let last = sys
        .records
        .iter()
        .filter(|r| (-1.0..=1.0).contains(&r.eta_c))
        .max_by(|a, b| a.eta_c.total_cmp(&b.eta_c))
        .unwrap();
    let delta_ok = (last.delta - TARGET_GAMMA).abs() <= 0.25 * TARGET_GAMMA;

    let traj = theta_sweep(&sys.model, &sys.config.theta.points(), 0.0).unwrap();
    let x = extrapolate(&traj, stable_window(&traj).unwrap(), 2).unwrap();
    let b = sys.config.benchmark.unwrap();
    let direct = benchmark_resonance(&sys.potential, &sys.basis, &b.theta.points(), TARGET_E_R, b.half_width).unwrap();
    let (w_ex, w_direct) = (-2.0 * x.energy.im, -2.0 * direct.stationary_energy.im);
    let width_ok = ((w_ex - w_direct) / w_direct).abs() < 0.1;
    report(
        "criterion 2 (width convergence)",
        delta_ok && width_ok,
        &format!(
            "last delta_c {:.4e} at eta_c {:.3} vs Gamma {TARGET_GAMMA:e} [{}]; ex-post width {w_ex:.4e} vs direct {w_direct:.4e} [{}]",
            last.delta,
            last.eta_c,
            if delta_ok { "ok" } else { "off" },
            if width_ok { "ok" } else { "off" }
        ),
    );
    assert!(delta_ok, "last delta_c {} is not within 25% of {TARGET_GAMMA}", last.delta);
    assert!(width_ok);
}

#[test]
fn criterion_3_expost_vs_direct_spectrum() {
    let sys = reference_system();
    let theta = 0.025;
    let direct = complex_spectra(&sys.potential, &sys.basis, &[theta], 0.0).unwrap().remove(0);
    let direct_res = direct
        .iter()
        .copied()
        .filter(|e| (e.re - TARGET_E_R).abs() <= 0.05 && !on_rotated_string(*e, theta))
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .unwrap();
    let ex_res = theta_sweep(&sys.model, &[theta], 0.0).unwrap().points[0].energy;
    let d_res = (ex_res - direct_res).norm();

    let ex = spectrum(&sys.model, theta, 0.0).unwrap();
    let eta = Complex64::new(0.0, theta);
    let mut worst: f64 = 0.0;
    let mut retained = 0;
    for r in sys.records.iter().filter(|r| r.fit_range.0 <= 0.0 && 0.0 <= r.fit_range.1) {
        let e = nearest(&ex, r.channel().energy(eta));
        worst = worst.max((nearest(&direct, e) - e).norm());
        retained += 1;
    }
    let pass = d_res < 1e-3 && retained > 0 && worst < 5e-3;
    report(
        "criterion 3 (ex-post vs direct spectrum)",
        pass,
        &format!("resonance |dE| {d_res:.2e}; {retained} retained continuum eigenvalues, worst |dE| {worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_free_particle() {
    let p = PotentialParams::free();
    let b = BasisSpec::new(50.0, 100);
    let etas = uniform_grid(-1.0, 1.0, 0.05);
    let g = sweep(&etas, &p, &b).unwrap();
    let i0 = etas.iter().position(|e| e.abs() < 1e-12).unwrap();
    let mut worst_rel: f64 = 0.0;
    for (i, &eta) in etas.iter().enumerate() {
        for k in 0..g.n_curves() {
            let want = g.energies[i0][k] * (-2.0 * eta).exp();
            worst_rel = worst_rel.max(((g.energies[i][k] - want) / want).abs());
        }
    }
    let mut worst_fit: f64 = 0.0;
    for k in [0, 10, 50, 99] {
        let pts: Vec<(f64, f64)> = etas.iter().zip(g.curve(k)).map(|(&x, e)| (x, e)).collect();
        let f = fit_exponent(&pts, 0.0, g.energies[i0][k], 0.0).unwrap();
        worst_fit = worst_fit.max((f.alpha - 2.0).abs()).max(f.beta.abs());
    }
    let pass = worst_rel < 1e-10 && worst_fit < 1e-8;
    report(
        "criterion 4 (free particle)",
        pass,
        &format!("worst relative deviation from E0 exp(-2 eta) {worst_rel:.2e}; worst |alpha - 2|, |beta| {worst_fit:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_two_level_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_eig, mut worst_gap, mut worst_ep): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..200 {
        let d = TwoLevelDiabat {
            e_r: rng.gen_range(0.5..3.0),
            delta: rng.gen_range(1e-4..5e-2),
            eta_c: rng.gen_range(-1.0..1.0),
            a_c: 0.0,
            fit_sigma: 0.0,
        };
        let ch = ContinuumChannel::exponential(d.eta_c, rng.gen_range(1.5..2.5), d.e_r);
        let model = DiabaticModel::new(
            d.e_r,
            vec![CoupledChannel {
                channel: ch,
                delta: d.delta,
            }],
        )
        .unwrap();

        for _ in 0..5 {
            let eta = Complex64::new(d.eta_c + rng.gen_range(-0.3..0.3), rng.gen_range(0.0..0.3));
            let e_eta = ch.energy(eta);
            let mean = 0.5 * (d.e_r + e_eta);
            let r = 0.5 * ((e_eta - d.e_r).powi(2) + d.delta * d.delta).sqrt();
            let got = eigvals_complex(&assemble(&model, eta)).unwrap();
            let want = [mean - r, mean + r];
            let err = (nearest(&got, want[0]) - want[0]).norm().max((nearest(&got, want[1]) - want[1]).norm());
            worst_eig = worst_eig.max(err);
        }

        let gap = |x: f64| {
            let v = eigvals_complex(&assemble(&model, Complex64::new(x, 0.0))).unwrap();
            (v[1].re - v[0].re).abs()
        };
        let (mut lo, mut hi) = (d.eta_c - 0.2, d.eta_c + 0.2);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..120 {
            let (a, b) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            if gap(a) < gap(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let (lo_e, hi_e) = two_level_eigenvalues(d.e_r, d.e_r, d.delta);
        worst_gap = worst_gap.max((gap(0.5 * (lo + hi)) - d.delta).abs()).max((hi_e - lo_e - d.delta).abs());

        let ep = ep_location(&d, &ch).unwrap();
        let h = assemble(&model, ep.eta);
        let half_trace = 0.5 * (h[(0, 0)] + h[(1, 1)]);
        let disc = (h[(0, 0)] - h[(1, 1)]).powi(2) + 4.0 * h[(0, 1)] * h[(1, 0)];
        let target = Complex64::new(d.e_r, -0.5 * d.delta);
        worst_ep = worst_ep
            .max((half_trace - target).norm())
            .max((ep.energy - target).norm())
            .max(disc.norm());
    }
    let pass = worst_eig < 1e-12 && worst_gap < 1e-12 && worst_ep < 1e-10;
    report(
        "criterion 5 (two-level closed form)",
        pass,
        &format!("eigenvalues {worst_eig:.2e}; gap minimum vs delta {worst_gap:.2e}; EP pair vs E_r - i delta/2 {worst_ep:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_fit_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut clean: f64 = 0.0;
    let mut noisy_ratio: f64 = 0.0;
    let noise_amp = 1e-8;
    for _ in 0..20 {
        let d = TwoLevelDiabat {
            e_r: rng.gen_range(1.0..2.0),
            delta: rng.gen_range(2e-3..1e-2),
            eta_c: rng.gen_range(-0.9..0.9),
            a_c: rng.gen_range(2.0..4.0),
            fit_sigma: 0.0,
        };
        let span = 6.0 * d.delta / d.a_c;
        let (lo, hi) = (d.eta_c - span, d.eta_c + 0.8 * span);
        let errs = |f: &TwoLevelDiabat| {
            [
                (f.e_r - d.e_r).abs(),
                (f.delta - d.delta).abs(),
                (f.eta_c - d.eta_c).abs() * d.a_c,
                (f.a_c - d.a_c).abs() * (hi - lo),
            ]
        };
        let fit = diabatize(&synthetic_window(&d, lo, hi, 41, &mut || 0.0)).unwrap();
        clean = errs(&fit).into_iter().fold(clean, f64::max);
        let mut r2 = ChaCha8Rng::seed_from_u64(rng.gen());
        let fit = diabatize(&synthetic_window(&d, lo, hi, 41, &mut || r2.gen_range(-noise_amp..noise_amp))).unwrap();
        noisy_ratio = noisy_ratio.max(errs(&fit).into_iter().fold(0.0, f64::max) / noise_amp);

        let ch = ContinuumChannel {
            eta_c: d.eta_c,
            alpha_c: rng.gen_range(1.5..2.5),
            beta_c: rng.gen_range(-0.3..0.3),
            e0: rng.gen_range(-0.8..0.5),
            e_anchor: d.e_r,
        };
        let pts: Vec<(f64, f64)> = uniform_grid(d.eta_c - 0.2, d.eta_c + 0.2, 0.01)
            .into_iter()
            .map(|x| (x, ch.energy(Complex64::new(x, 0.0)).re))
            .collect();
        let f = fit_exponent(&pts, d.eta_c, d.e_r, ch.e0).unwrap();
        clean = clean.max((f.alpha - ch.alpha_c).abs()).max((f.beta - ch.beta_c).abs());
        let noisy: Vec<(f64, f64)> = pts.iter().map(|&(x, e)| (x, e + rng.gen_range(-noise_amp..noise_amp))).collect();
        let f = fit_exponent(&noisy, d.eta_c, d.e_r, ch.e0).unwrap();
        // Energy-scale error of the exponent over the fitted range.
        let scale = 0.2 * (d.e_r - ch.e0);
        let e = ((f.alpha - ch.alpha_c).abs() + 0.2 * (f.beta - ch.beta_c).abs()) * scale;
        noisy_ratio = noisy_ratio.max(e / noise_amp);
    }
    let pass = clean < 1e-10 && noisy_ratio <= 10.0;
    report(
        "criterion 6 (fit round trips)",
        pass,
        &format!("noise-free worst error {clean:.2e}; with 1e-8 noise worst error / noise {noisy_ratio:.2}"),
    );
    assert!(pass);
}

#[test]
fn criterion_7_convergence_pattern() {
    let sys = reference_system();
    let theta = 0.01;
    let energies: Vec<Complex64> = (1..=sys.model.channels.len())
        .map(|n| theta_sweep(&sys.model.truncated(n).unwrap(), &[theta], 0.0).unwrap().points[0].energy)
        .collect();
    let (k, jump) = energies
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, (w[1] - w[0]).norm()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let eta_jump = sys.model.channels[k].channel.eta_c;
    let eta_nearest = sys
        .model
        .channels
        .iter()
        .map(|c| c.channel.eta_c)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap();
    let pass = eta_jump == eta_nearest;
    report(
        "criterion 7 (convergence pattern)",
        pass,
        &format!("largest increment {jump:.3e} when adding eta_c {eta_jump:.4}; eta_c nearest 0 is {eta_nearest:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_bound_state_invariance() {
    faer::set_global_parallelism(faer::Par::Seq);
    let cfg = common::reference_config();
    let b = cfg.basis.with_parity(stabcs::model1d::Parity::All);
    let thetas = [0.0, 0.05, 0.1, 0.15, 0.2];
    let spectra = complex_spectra(&cfg.potential, &b, &thetas, 0.0).unwrap();
    let bound: Vec<Complex64> = spectra[0].iter().copied().filter(|e| e.re < 0.0).collect();
    let mut worst: f64 = 0.0;
    for s in &spectra[1..] {
        for &e in &bound {
            worst = worst.max((nearest(s, e) - e).norm());
        }
    }
    let pass = !bound.is_empty() && worst < 1e-8;
    report(
        "criterion 8 (bound-state theta invariance)",
        pass,
        &format!("{} bound states, worst variation over theta in [0, 0.2] {worst:.2e}", bound.len()),
    );
    assert!(pass);
}
