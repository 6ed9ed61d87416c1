#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use stabcs::config::RunConfig;
use stabcs::model1d::{BasisSpec, PotentialParams};
use stabcs::pipeline::{diabatize_graph, model_from_records, CrossingRecord};
use stabcs::expost::DiabaticModel;
use stabcs::stabgraph::{sweep_refined, CrossingWindow, StabilizationGraph};

pub const TARGET_E_R: f64 = 1.5388;
pub const TARGET_GAMMA: f64 = 3.14e-4;

pub fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn reference_config() -> RunConfig {
    RunConfig::load(&config_path("reference.json")).expect("reference config loads")
}

pub struct ReferenceSystem {
    pub config: RunConfig,
    pub potential: PotentialParams,
    pub basis: BasisSpec,
    pub graph: StabilizationGraph,
    pub crossings: Vec<CrossingWindow>,
    pub records: Vec<CrossingRecord>,
    pub model: DiabaticModel,
    pub sweep_time: Duration,
}

/// Refined even-sector graph and its fitted crossings, built once per test
/// binary.
pub fn reference_system() -> &'static ReferenceSystem {
    static SYS: OnceLock<ReferenceSystem> = OnceLock::new();
    SYS.get_or_init(|| {
        faer::set_global_parallelism(faer::Par::Seq);
        let config = reference_config();
        let t = Instant::now();
        let (graph, crossings) = sweep_refined(
            &config.eta.points(),
            &config.potential,
            &config.basis,
            config.window.center,
            config.window.half_width,
            &config.refinement,
        )
        .expect("refined sweep");
        let out = diabatize_graph(&graph, &config.fit_settings()).expect("diabatize");
        let sweep_time = t.elapsed();
        assert!(out.refine_at.is_empty(), "unresolved crossings at {:?}", out.refine_at);
        let model = model_from_records(&out.records).expect("model");
        ReferenceSystem {
            potential: config.potential,
            basis: config.basis,
            config,
            graph,
            crossings,
            records: out.records,
            model,
            sweep_time,
        }
    })
}

/// Pass/fail line that bypasses the test harness output capture.
pub fn report(label: &str, pass: bool, detail: &str) {
    use std::io::Write;
    let line = format!("{label} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}
