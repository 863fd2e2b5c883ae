use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{EvalResult, ExperimentRun, Seeds};
use crate::codec::write_atomic;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::regressor::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelEntry {
    pub role: &'static str,
    pub outputs: usize,
    pub param_count: usize,
    pub budget: usize,
    pub trees: usize,
    pub config: TrainConfig,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetEntry {
    pub snapshots: usize,
    pub rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// SHA-256 of the binary rate and TR datasets.
    pub rates_sha256: String,
    pub tr_sha256: String,
}

/// Run provenance written next to the CSVs. Contains no timestamps so
/// repeated runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub config_sha256: String,
    pub seeds: Seeds,
    pub dataset: DatasetEntry,
    pub models: Vec<ModelEntry>,
    pub clusters: usize,
    pub cluster_sizes: Vec<usize>,
    pub bs_beam_order: Vec<usize>,
    pub test_ues: usize,
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(run: &ExperimentRun) -> Self {
        let d = &run.data;
        let rates = Dataset::Rate {
            n_w: d.n_w,
            n_f: d.n_f,
            rows: d.rates.clone(),
        };
        let tr = Dataset::Tr {
            n_w: d.n_w,
            n_f: d.n_f,
            rows: d.tr.clone(),
        };
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            schema_version: run.config.schema_version,
            config_sha256: run.config.hash(),
            seeds: run.seeds,
            dataset: DatasetEntry {
                snapshots: d.snapshot_count,
                rows: d.tr.len(),
                train_rows: d.split.train.len(),
                test_rows: d.split.test.len(),
                rates_sha256: sha(&rates.to_bytes()),
                tr_sha256: sha(&tr.to_bytes()),
            },
            models: run
                .models
                .all()
                .iter()
                .map(|f| ModelEntry {
                    role: f.model.role.tag(),
                    outputs: f.model.output_dimension(),
                    param_count: f.model.param_count(),
                    budget: f.model.config.budget_parameters,
                    trees: f.model.tree_total(),
                    config: f.model.config,
                    validation_mse: f.tuning.scores[f.tuning.best].mean_validation_mse,
                })
                .collect(),
            clusters: run.plan.cluster_count(),
            cluster_sizes: run.plan.cluster_sizes.clone(),
            bs_beam_order: run.plan.order.clone(),
            test_ues: run.result.test_ues,
        }
    }
}

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `scenario,n_b,s_w,s_f,r_t,p_m,overhead_bits`; `s_w`/`s_f` are blank for
/// the coupled scenario.
pub fn write_curves_csv(path: &Path, result: &EvalResult) -> Result<()> {
    let mut s = String::from("scenario,n_b,s_w,s_f,r_t,p_m,overhead_bits\n");
    for p in &result.curves {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.9},{:.9},{}",
            p.scenario,
            p.n_b,
            opt(p.s_w),
            opt(p.s_f),
            p.r_t,
            p.p_m,
            p.overhead_bits
        );
    }
    write_atomic(path, s.as_bytes())
}

/// `scenario,s_w,s_f,n_b,r_t,p_m` for the decoupled scenarios.
pub fn write_heatmap_csv(path: &Path, result: &EvalResult) -> Result<()> {
    let mut s = String::from("scenario,s_w,s_f,n_b,r_t,p_m\n");
    for c in &result.heatmap {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.9},{:.9}",
            c.scenario,
            c.s_w,
            c.s_f,
            c.s_w * c.s_f,
            c.r_t,
            c.p_m
        );
    }
    write_atomic(path, s.as_bytes())
}

/// Writes `curves.csv`, `heatmap.csv` and `run_manifest.json` into `dir`.
pub fn emit_outputs(result: &EvalResult, manifest: &RunManifest, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_curves_csv(&dir.join("curves.csv"), result)?;
    write_heatmap_csv(&dir.join("heatmap.csv"), result)?;
    let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    json.push('\n');
    write_atomic(&dir.join("run_manifest.json"), json.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{CurvePoint, HeatCell};
    use crate::select::Scenario;

    #[test]
    fn curves_have_one_line_per_point() {
        let mut curves = Vec::new();
        for s in Scenario::ALL {
            for nb in 1..=10 {
                curves.push(CurvePoint {
                    scenario: s,
                    n_b: nb,
                    s_w: (s != Scenario::Coupled).then_some(1),
                    s_f: (s != Scenario::Coupled).then_some(nb),
                    r_t: 0.5,
                    p_m: 0.25,
                    overhead_bits: 0,
                });
            }
        }
        let res = EvalResult {
            test_ues: 3,
            curves,
            heatmap: vec![HeatCell {
                scenario: Scenario::DecoupledWithLocation,
                s_w: 2,
                s_f: 3,
                r_t: 1.0,
                p_m: 0.0,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        write_curves_csv(&dir.path().join("c.csv"), &res).unwrap();
        let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
        assert_eq!(text.lines().count(), 31);
        assert!(text.contains("\n1,4,,,0.500000000,0.250000000,0\n"));
        write_heatmap_csv(&dir.path().join("h.csv"), &res).unwrap();
        let text = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "2,2,3,6,1.000000000,0.000000000");
    }
}
