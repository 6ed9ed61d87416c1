//! Stabilization graphs: real spectra on an `eta` grid, energy windows around
//! a resonance, detection and local refinement of avoided crossings, and the
//! nonadiabatic-coupling diagnostic.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{eig_symmetric, eigvals_symmetric, RealEigenSystem};
use crate::error::{Error, Result};
use crate::model1d::{build_real_hamiltonian, BasisSpec, PotentialParams};

/// Widest `eta` range accepted by [`sweep`].
pub const ETA_RANGE: (f64, f64) = (-1.75, 2.0);
/// Minimum number of grid points a crossing window needs before fitting.
pub const MIN_WINDOW_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub potential: PotentialParams,
    pub basis: BasisSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationGraph {
    /// Strictly increasing.
    pub etas: Vec<f64>,
    /// `energies[i]` is the ascending spectrum at `etas[i]`.
    pub energies: Vec<Vec<f64>>,
    pub meta: Option<GraphMeta>,
}

impl StabilizationGraph {
    pub fn new(etas: Vec<f64>, energies: Vec<Vec<f64>>, meta: Option<GraphMeta>) -> Result<Self> {
        if etas.len() != energies.len() {
            return Err(Error::invalid("one spectrum per grid point required"));
        }
        if etas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("eta grid must be strictly increasing"));
        }
        let width = energies.first().map_or(0, Vec::len);
        for (eta, row) in etas.iter().zip(&energies) {
            if row.len() != width {
                return Err(Error::invalid(format!("ragged spectrum at eta = {eta}")));
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::invalid(format!("spectrum not ascending at eta = {eta}")));
            }
        }
        Ok(Self { etas, energies, meta })
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    pub fn n_curves(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    pub fn curve(&self, k: usize) -> Vec<f64> {
        self.energies.iter().map(|row| row[k]).collect()
    }

    /// Union of two graphs on the same basis; points of `other` that
    /// duplicate an existing `eta` (to 1e-12) are dropped.
    pub fn merge(&self, other: &StabilizationGraph) -> Result<Self> {
        let mut rows: Vec<(f64, Vec<f64>)> = self
            .etas
            .iter()
            .copied()
            .zip(self.energies.iter().cloned())
            .collect();
        for (eta, row) in other.etas.iter().zip(&other.energies) {
            if !self.etas.iter().any(|e| (e - eta).abs() < 1e-12) {
                rows.push((*eta, row.clone()));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (etas, energies) = rows.into_iter().unzip();
        Self::new(etas, energies, self.meta)
    }

    /// CSV with header `eta,E1,...,En`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("eta");
        for k in 1..=self.n_curves() {
            header.push_str(&format!(",E{k}"));
        }
        writeln!(w, "{header}")?;
        for (eta, row) in self.etas.iter().zip(&self.energies) {
            let mut line = format!("{eta:.16e}");
            for e in row {
                line.push_str(&format!(",{e:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let schema = |line: usize, msg: String| Error::Schema {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = BufReader::new(f).lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|e| Error::io(path, e))?,
            None => return Err(schema(1, "missing header".into())),
        };
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"eta") {
            return Err(schema(1, "first column must be `eta`".into()));
        }
        for (k, c) in cols.iter().enumerate().skip(1) {
            if *c != format!("E{k}") {
                return Err(schema(1, format!("expected column E{k}, found `{c}`")));
            }
        }
        let width = cols.len() - 1;
        let mut etas = Vec::new();
        let mut energies = Vec::new();
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != width + 1 {
                return Err(schema(lineno, format!("expected {} fields, found {}", width + 1, fields.len())));
            }
            let mut vals = Vec::with_capacity(fields.len());
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| schema(lineno, format!("not a number: `{f}`")))?;
                if !v.is_finite() {
                    return Err(schema(lineno, format!("non-finite value `{f}`")));
                }
                vals.push(v);
            }
            if let Some(&last) = etas.last() {
                if vals[0] <= last {
                    return Err(schema(lineno, "eta grid not strictly increasing".into()));
                }
            }
            if vals[1..].windows(2).any(|w| w[1] < w[0]) {
                return Err(schema(lineno, "energies not ascending".into()));
            }
            etas.push(vals[0]);
            energies.push(vals[1..].to_vec());
        }
        Self::new(etas, energies, None)
    }
}

/// `start, start + step, ..., stop` (inclusive when `stop` lands on the grid),
/// computed by index to avoid accumulated drift.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && stop >= start);
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn check_grid(etas: &[f64]) -> Result<()> {
    if etas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("eta grid must be strictly increasing"));
    }
    if etas.iter().any(|e| !(ETA_RANGE.0..=ETA_RANGE.1).contains(e)) {
        return Err(Error::invalid(format!(
            "eta grid must lie within [{}, {}]",
            ETA_RANGE.0, ETA_RANGE.1
        )));
    }
    Ok(())
}

/// Real spectra of the model Hamiltonian on every grid point (parallel over
/// `eta`).
pub fn sweep(etas: &[f64], p: &PotentialParams, b: &BasisSpec) -> Result<StabilizationGraph> {
    check_grid(etas)?;
    let energies = etas
        .par_iter()
        .map(|&eta| {
            let h = build_real_hamiltonian(eta, p, b)?;
            eigvals_symmetric(&h.matrix)
        })
        .collect::<Result<Vec<_>>>()?;
    StabilizationGraph::new(
        etas.to_vec(),
        energies,
        Some(GraphMeta {
            potential: *p,
            basis: *b,
        }),
    )
}

/// Eigenpairs of a matrix family on a grid, for coupling diagnostics.
#[derive(Debug, Clone)]
pub struct EigenvectorSweep {
    pub etas: Vec<f64>,
    pub systems: Vec<RealEigenSystem>,
}

impl EigenvectorSweep {
    pub fn from_fn<F>(etas: &[f64], matrix: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Mat<f64>> + Sync,
    {
        if etas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("eta grid must be strictly increasing"));
        }
        let systems = etas
            .par_iter()
            .map(|&eta| eig_symmetric(&matrix(eta)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            etas: etas.to_vec(),
            systems,
        })
    }

    pub fn model(etas: &[f64], p: &PotentialParams, b: &BasisSpec) -> Result<Self> {
        check_grid(etas)?;
        Self::from_fn(etas, |eta| Ok(build_real_hamiltonian(eta, p, b)?.matrix))
    }
}

/// States whose energy lies in `[center - half_width, center + half_width]`
/// at each grid point, as indices into the ascending spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyWindow {
    pub center: f64,
    pub half_width: f64,
    pub members: Vec<Vec<usize>>,
}

impl EnergyWindow {
    pub fn contains(&self, row: usize, k: usize) -> bool {
        self.members[row].binary_search(&k).is_ok()
    }
}

/// A zero half-width yields the degenerate, everywhere-empty window.
pub fn window(graph: &StabilizationGraph, center: f64, half_width: f64) -> Result<EnergyWindow> {
    if !(half_width >= 0.0 && center.is_finite()) {
        return Err(Error::invalid("window needs a finite center and half_width >= 0"));
    }
    let (lo, hi) = (center - half_width, center + half_width);
    let members: Vec<Vec<usize>> = graph
        .energies
        .iter()
        .map(|row| {
            if half_width == 0.0 {
                return vec![];
            }
            row.iter()
                .enumerate()
                .filter(|(_, &e)| e >= lo && e <= hi)
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    if half_width > 0.0 {
        if let Some(i) = members.iter().position(Vec::is_empty) {
            return Err(Error::EmptyWindow {
                eta: graph.etas[i],
                lo,
                hi,
            });
        }
    }
    Ok(EnergyWindow {
        center,
        half_width,
        members,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub eta: f64,
    /// Lower adiabatic energy `eps_-`.
    pub lower: f64,
    /// Upper adiabatic energy `eps_+`.
    pub upper: f64,
}

impl CrossingPoint {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }
}

/// One avoided crossing between adjacent adiabatic curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingWindow {
    pub lower_curve: usize,
    pub upper_curve: usize,
    pub eta_range: (f64, f64),
    pub points: Vec<CrossingPoint>,
    /// Grid point with the smallest gap.
    pub gap_min_eta: f64,
    pub gap_min: f64,
    /// Fewer than [`MIN_WINDOW_POINTS`] points: refine the grid here.
    pub needs_refinement: bool,
}

impl CrossingWindow {
    pub fn etas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eta).collect()
    }
}

/// Interior local minima of adjacent-curve gaps inside the energy window, one
/// window per minimum. Each window spans the contiguous run of grid points
/// around its minimum over which the gap rises monotonically, both curves
/// stay inside the energy window, and no neighbouring minimum is closer.
pub fn detect_crossings(graph: &StabilizationGraph, win: &EnergyWindow) -> Result<Vec<CrossingWindow>> {
    let n = graph.len();
    if n < 3 || graph.n_curves() < 2 {
        return Ok(vec![]);
    }
    if win.members.len() != n {
        return Err(Error::invalid("energy window does not match graph"));
    }
    let gap = |i: usize, j: usize| graph.energies[i][j + 1] - graph.energies[i][j];

    // (row, lower curve)
    let mut minima: Vec<(usize, usize)> = Vec::new();
    for j in 0..graph.n_curves() - 1 {
        for i in 1..n - 1 {
            if !(win.contains(i, j) && win.contains(i, j + 1)) {
                continue;
            }
            let g = gap(i, j);
            if g < gap(i - 1, j) && g <= gap(i + 1, j) {
                minima.push((i, j));
            }
        }
    }
    minima.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    for w in minima.windows(2) {
        if w[1].0 == w[0].0 {
            return Err(Error::OverlappingCrossings {
                first: graph.etas[w[0].0],
                second: graph.etas[w[1].0],
            });
        }
    }

    let mut out = Vec::with_capacity(minima.len());
    for (m, &(imin, j)) in minima.iter().enumerate() {
        let lo_bound = if m > 0 {
            0.5 * (graph.etas[minima[m - 1].0] + graph.etas[imin])
        } else {
            f64::NEG_INFINITY
        };
        let hi_bound = if m + 1 < minima.len() {
            0.5 * (graph.etas[imin] + graph.etas[minima[m + 1].0])
        } else {
            f64::INFINITY
        };
        let admissible = |i: usize| {
            win.contains(i, j) && win.contains(i, j + 1) && graph.etas[i] > lo_bound && graph.etas[i] < hi_bound
        };
        let mut first = imin;
        while first > 0 && admissible(first - 1) && gap(first - 1, j) > gap(first, j) {
            first -= 1;
        }
        let mut last = imin;
        while last + 1 < n && admissible(last + 1) && gap(last + 1, j) > gap(last, j) {
            last += 1;
        }
        let points: Vec<CrossingPoint> = (first..=last)
            .map(|i| CrossingPoint {
                eta: graph.etas[i],
                lower: graph.energies[i][j],
                upper: graph.energies[i][j + 1],
            })
            .collect();
        out.push(CrossingWindow {
            lower_curve: j,
            upper_curve: j + 1,
            eta_range: (graph.etas[first], graph.etas[last]),
            needs_refinement: points.len() < MIN_WINDOW_POINTS,
            points,
            gap_min_eta: graph.etas[imin],
            gap_min: gap(imin, j),
        });
    }
    Ok(out)
}

/// New grid points `gap_min_eta + k * step`, `|k| <= half_span`, around each
/// crossing, skipping points already on the graph.
pub fn refinement_points(graph: &StabilizationGraph, crossings: &[CrossingWindow], step: f64, half_span: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::new();
    for c in crossings {
        for k in -(half_span as i64)..=(half_span as i64) {
            let eta = c.gap_min_eta + k as f64 * step;
            let fresh = !graph.etas.iter().any(|e| (e - eta).abs() < 0.25 * step)
                && !pts.iter().any(|e| (e - eta).abs() < 0.25 * step);
            if fresh && (ETA_RANGE.0..=ETA_RANGE.1).contains(&eta) {
                pts.push(eta);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementPlan {
    /// Spacing of the points added around each crossing.
    pub step: f64,
    /// Points added on each side of the coarse minimum.
    pub half_span: usize,
    /// Refinement rounds (each round divides `step` by 10).
    pub rounds: usize,
}

impl Default for RefinementPlan {
    fn default() -> Self {
        Self {
            step: 1e-3,
            half_span: 8,
            rounds: 2,
        }
    }
}

/// Coarse sweep, then local refinement around every detected crossing.
pub fn sweep_refined(
    etas: &[f64],
    p: &PotentialParams,
    b: &BasisSpec,
    center: f64,
    half_width: f64,
    plan: &RefinementPlan,
) -> Result<(StabilizationGraph, Vec<CrossingWindow>)> {
    let mut graph = sweep(etas, p, b)?;
    let mut crossings = detect_crossings(&graph, &window(&graph, center, half_width)?)?;
    let mut step = plan.step;
    for _ in 0..plan.rounds {
        let extra = refinement_points(&graph, &crossings, step, plan.half_span);
        if extra.is_empty() {
            break;
        }
        graph = graph.merge(&sweep(&extra, p, b)?)?;
        crossings = detect_crossings(&graph, &window(&graph, center, half_width)?)?;
        step /= 10.0;
    }
    Ok((graph, crossings))
}

/// Central-difference estimate of `<psi_lower | d/deta | psi_upper>` on the
/// interior grid points, with eigenvector signs made continuous along each
/// adiabatic curve. Vectors are coefficient vectors in the fixed scaled frame.
pub fn nonadiabatic_coupling(sw: &EigenvectorSweep, lower: usize, upper: usize) -> Result<Vec<(f64, f64)>> {
    let n = sw.etas.len();
    if n < 3 {
        return Err(Error::invalid("coupling needs at least three grid points"));
    }
    let dim = sw.systems[0].values.len();
    if lower >= dim || upper >= dim {
        return Err(Error::invalid("curve index out of range"));
    }
    let track = |k: usize| -> Result<Vec<Vec<f64>>> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
        for (i, sys) in sw.systems.iter().enumerate() {
            let mut v: Vec<f64> = (0..dim).map(|r| sys.vectors[(r, k)]).collect();
            if let Some(prev) = out.last() {
                let ov: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                if ov.abs() < 0.5 {
                    return Err(Error::SignTrackingFailure {
                        eta: sw.etas[i],
                        overlap: ov,
                    });
                }
                if ov < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            out.push(v);
        }
        Ok(out)
    };
    let lo = track(lower)?;
    let up = track(upper)?;
    Ok((1..n - 1)
        .map(|i| {
            let h = sw.etas[i + 1] - sw.etas[i - 1];
            let d: f64 = (0..dim).map(|r| lo[i][r] * (up[i + 1][r] - up[i - 1][r])).sum();
            (sw.etas[i], d / h)
        })
        .collect())
}

/// Energy of the most `eta`-stable state within `near +- half_width` at
/// `eta = 0`, judged by the central difference over `+-1e-3`.
pub fn plateau_energy(p: &PotentialParams, b: &BasisSpec, near: f64, half_width: f64) -> Result<f64> {
    let h = 1e-3;
    let e0 = eigvals_symmetric(&build_real_hamiltonian(0.0, p, b)?.matrix)?;
    let ep = eigvals_symmetric(&build_real_hamiltonian(h, p, b)?.matrix)?;
    let em = eigvals_symmetric(&build_real_hamiltonian(-h, p, b)?.matrix)?;
    e0.iter()
        .enumerate()
        .filter(|(_, &e)| (e - near).abs() <= half_width)
        .map(|(k, &e)| (e, ((ep[k] - em[k]) / (2.0 * h)).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(e, _)| e)
        .ok_or_else(|| Error::invalid(format!("no state within {half_width} of {near}")))
}

/// Barrier offset `x0` in `bracket` that puts the plateau at `target`
/// (bisection on the plateau energy).
pub fn calibrate_x0(target: f64, bracket: (f64, f64), base: &PotentialParams, b: &BasisSpec) -> Result<f64> {
    let search = 0.25;
    let f = |x0: f64| -> Result<f64> {
        let p = PotentialParams { x0, ..*base };
        Ok(plateau_energy(&p, b, target, search)? - target)
    };
    let (mut lo, mut hi) = bracket;
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo * fhi > 0.0 {
        return Err(Error::NoRoot(format!(
            "plateau does not cross {target} between x0 = {lo} and {hi}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 || (hi - lo) < 1e-12 {
            lo = mid;
            hi = mid;
            break;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let x0 = 0.5 * (lo + hi);
    let resid = f(x0)?.abs();
    if resid > 1e-6 {
        return Err(Error::NoRoot(format!("bisection ended on a jump (residual {resid:e})")));
    }
    Ok(x0)
}

/// All brackets in `[lo, hi]` (scanned at `step`) where a plateau crosses
/// `target`, each refined with [`calibrate_x0`]. Jumps between different
/// states are discarded.
pub fn scan_x0_roots(target: f64, lo: f64, hi: f64, step: f64, base: &PotentialParams, b: &BasisSpec) -> Result<Vec<f64>> {
    let grid = uniform_grid(lo, hi, step);
    let vals = grid
        .par_iter()
        .map(|&x0| {
            let p = PotentialParams { x0, ..*base };
            plateau_energy(&p, b, target, 0.25).map(|e| e - target)
        })
        .collect::<Vec<_>>();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        if let (Ok(a), Ok(c)) = (&vals[i], &vals[i + 1]) {
            if a * c <= 0.0 {
                if let Ok(x) = calibrate_x0(target, (grid[i], grid[i + 1]), base, b) {
                    roots.push(x);
                }
            }
        }
    }
    Ok(roots)
}
