//! Run configuration (a single JSON document) and output metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expost::DEFAULT_DEGREE;
use crate::model1d::{BasisSpec, PotentialParams};
use crate::pipeline::FitSettings;
use crate::stabgraph::{uniform_grid, RefinementPlan, ETA_RANGE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        uniform_grid(self.start, self.stop, self.step)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.step > 0.0 && self.stop >= self.start && self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::invalid(format!("{name}: need start <= stop and step > 0")));
        }
        Ok(())
    }
}

/// Solve for the barrier offset `x0` that puts the plateau at `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub center: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationSpec {
    /// Fit window in `theta`; chosen from the trajectory when absent.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

impl Default for ExtrapolationSpec {
    fn default() -> Self {
        Self {
            window: None,
            degree: DEFAULT_DEGREE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub theta: GridSpec,
    /// Half-width in `Re E` of the candidate region around the window center.
    pub half_width: f64,
}

fn default_band() -> f64 {
    0.5
}

fn default_delta_etas() -> Vec<f64> {
    vec![0.0]
}

fn default_compare_theta() -> f64 {
    0.025
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialParams,
    #[serde(default)]
    pub calibration: Option<Calibration>,
    pub basis: BasisSpec,
    pub eta: GridSpec,
    #[serde(default)]
    pub refinement: RefinementPlan,
    pub window: WindowSpec,
    #[serde(default = "default_band")]
    pub channel_band: f64,
    #[serde(default)]
    pub e0: f64,
    pub theta: GridSpec,
    #[serde(default = "default_delta_etas")]
    pub delta_etas: Vec<f64>,
    #[serde(default)]
    pub extrapolation: ExtrapolationSpec,
    #[serde(default)]
    pub benchmark: Option<BenchmarkSpec>,
    /// `theta` at which ex-post and direct spectra are compared.
    #[serde(default = "default_compare_theta")]
    pub compare_theta: f64,
    /// Also write the unsplit (all-parity) graph on the coarse grid.
    #[serde(default = "default_true")]
    pub full_graph: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.basis.validate()?;
        self.eta.validate("eta")?;
        self.theta.validate("theta")?;
        if self.eta.start < ETA_RANGE.0 || self.eta.stop > ETA_RANGE.1 {
            return Err(Error::invalid(format!("eta grid must lie within [{}, {}]", ETA_RANGE.0, ETA_RANGE.1)));
        }
        if !(self.theta.start > 0.0 && self.theta.stop < std::f64::consts::FRAC_PI_4) {
            return Err(Error::invalid("theta grid must lie in (0, pi/4)"));
        }
        if !(self.window.half_width > 0.0) {
            return Err(Error::invalid("window half_width must be positive"));
        }
        if !(self.channel_band > 0.0) {
            return Err(Error::invalid("channel_band must be positive"));
        }
        if !(1..=3).contains(&self.extrapolation.degree) {
            return Err(Error::invalid("extrapolation degree must be 1, 2 or 3"));
        }
        if let Some((lo, hi)) = self.extrapolation.window {
            if !(lo < hi && lo > 0.0) {
                return Err(Error::invalid("extrapolation window must satisfy 0 < lo < hi"));
            }
        }
        if self.delta_etas.is_empty() || self.delta_etas.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("delta_etas must be a non-empty list of numbers"));
        }
        if !(self.compare_theta > 0.0 && self.compare_theta < std::f64::consts::FRAC_PI_4) {
            return Err(Error::invalid("compare_theta must lie in (0, pi/4)"));
        }
        if !(self.refinement.step > 0.0) {
            return Err(Error::invalid("refinement step must be positive"));
        }
        if let Some(c) = &self.calibration {
            if !(c.bracket.0 > 0.0 && c.bracket.0 < c.bracket.1) {
                return Err(Error::invalid("calibration bracket must satisfy 0 < lo < hi"));
            }
        }
        if let Some(b) = &self.benchmark {
            b.theta.validate("benchmark.theta")?;
            if !(b.theta.start > 0.0 && b.theta.stop < std::f64::consts::FRAC_PI_4 && b.half_width > 0.0) {
                return Err(Error::invalid("benchmark theta must lie in (0, pi/4) with positive half_width"));
            }
        }
        Ok(())
    }

    pub fn fit_settings(&self) -> FitSettings {
        FitSettings {
            center: self.window.center,
            half_width: self.window.half_width,
            band: self.channel_band,
            e0: self.e0,
        }
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

/// Written next to every output file as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub command: String,
    pub config_sha256: String,
    pub x0: f64,
    pub version: String,
}

impl OutputMeta {
    pub fn sidecar_path(file: &Path) -> PathBuf {
        let mut name = file.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        file.with_file_name(name)
    }

    pub fn write_for(&self, file: &Path) -> Result<()> {
        let path = Self::sidecar_path(file);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}
