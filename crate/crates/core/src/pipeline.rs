//! End-to-end stages shared by the command-line driver and the tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contfit::{channel_points, fit_exponent, ContinuumChannel};
use crate::diabatize::{diabatize, TwoLevelDiabat};
use crate::error::{Error, Result};
use crate::expost::{CoupledChannel, DiabaticModel};
use crate::stabgraph::{detect_crossings, window, CrossingWindow, StabilizationGraph};

/// One fitted crossing and its channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub eta_c: f64,
    #[serde(rename = "E_r")]
    pub e_r: f64,
    pub delta: f64,
    pub a_c: f64,
    pub alpha_c: f64,
    pub beta_c: f64,
    pub sigma: f64,
    #[serde(rename = "E0", default)]
    pub e0: f64,
    /// `eta` range of the channel data behind `alpha_c`, `beta_c`.
    pub fit_range: (f64, f64),
    pub exponent_residual: f64,
}

impl CrossingRecord {
    pub fn channel(&self) -> ContinuumChannel {
        ContinuumChannel {
            eta_c: self.eta_c,
            alpha_c: self.alpha_c,
            beta_c: self.beta_c,
            e0: self.e0,
            e_anchor: self.e_r,
        }
    }

    pub fn diabat(&self) -> TwoLevelDiabat {
        TwoLevelDiabat {
            e_r: self.e_r,
            delta: self.delta,
            eta_c: self.eta_c,
            a_c: self.a_c,
            fit_sigma: self.sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub center: f64,
    pub half_width: f64,
    /// Channel data are taken within `E_r +- band`.
    pub band: f64,
    pub e0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiabatizeOutput {
    pub records: Vec<CrossingRecord>,
    /// Gap minima whose windows are too thin to fit.
    pub refine_at: Vec<f64>,
}

pub fn fit_crossing(graph: &StabilizationGraph, c: &CrossingWindow, s: &FitSettings) -> Result<CrossingRecord> {
    let d = diabatize(c)?;
    let pts = channel_points(graph, c, d.e_r, s.band);
    let fit = fit_exponent(&pts, d.eta_c, d.e_r, s.e0)?;
    Ok(CrossingRecord {
        eta_c: d.eta_c,
        e_r: d.e_r,
        delta: d.delta,
        a_c: d.a_c,
        alpha_c: fit.alpha,
        beta_c: fit.beta,
        sigma: d.fit_sigma,
        e0: s.e0,
        fit_range: (pts[0].0, pts[pts.len() - 1].0),
        exponent_residual: fit.residual,
    })
}

/// Detects crossings in the resonance window and fits every resolved one,
/// in order of `eta_c`.
pub fn diabatize_graph(graph: &StabilizationGraph, s: &FitSettings) -> Result<DiabatizeOutput> {
    if graph.len() < 3 || s.half_width == 0.0 {
        return Ok(DiabatizeOutput {
            records: vec![],
            refine_at: vec![],
        });
    }
    let win = window(graph, s.center, s.half_width)?;
    let crossings = detect_crossings(graph, &win)?;
    let refine_at = crossings.iter().filter(|c| c.needs_refinement).map(|c| c.gap_min_eta).collect();
    let records = crossings
        .par_iter()
        .filter(|c| !c.needs_refinement)
        .map(|c| fit_crossing(graph, c, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiabatizeOutput { records, refine_at })
}

/// Arrowhead model with the mean `E_r` of the records on the diagonal.
pub fn model_from_records(records: &[CrossingRecord]) -> Result<DiabaticModel> {
    if records.is_empty() {
        return Err(Error::invalid("no crossing records"));
    }
    let e_r = records.iter().map(|r| r.e_r).sum::<f64>() / records.len() as f64;
    DiabaticModel::new(
        e_r,
        records
            .iter()
            .map(|r| CoupledChannel {
                channel: r.channel(),
                delta: r.delta,
            })
            .collect(),
    )
}
