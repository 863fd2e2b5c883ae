use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::regressor::TrainConfig;
use crate::scene::SceneConfig;
use crate::select::Scenario;

pub const SCHEMA_VERSION: u32 = 1;

/// One hyperparameter combination; the parameter budget comes from the role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub tree_count: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    #[serde(default = "two")]
    pub min_samples_leaf: usize,
}

fn two() -> usize {
    2
}

impl GridPoint {
    pub const fn new(tree_count: usize, max_depth: usize, learning_rate: f64) -> Self {
        Self {
            tree_count,
            max_depth,
            learning_rate,
            min_samples_leaf: 2,
        }
    }

    pub fn with_budget(&self, budget: usize) -> TrainConfig {
        TrainConfig {
            tree_count: self.tree_count,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            min_samples_leaf: self.min_samples_leaf,
            budget_parameters: budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Θ₁.
    pub coupled: Vec<GridPoint>,
    /// Θ₂,f.
    pub bs_atr: Vec<GridPoint>,
    /// Θ₂,w and Θ₃,w.
    pub ue_atr: Vec<GridPoint>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            coupled: vec![GridPoint::new(14, 1, 0.6), GridPoint::new(5, 2, 0.8), GridPoint::new(2, 3, 1.0)],
            bs_atr: vec![GridPoint::new(30, 3, 0.3), GridPoint::new(20, 4, 0.3), GridPoint::new(6, 6, 0.5)],
            ue_atr: vec![GridPoint::new(25, 1, 0.4), GridPoint::new(12, 2, 0.4), GridPoint::new(5, 3, 0.6)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub s_w: Vec<usize>,
    pub s_f: Vec<usize>,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            s_w: (1..=8).collect(),
            s_f: (1..=32).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    pub snapshots: usize,
    /// Snapshot count under `--smoke`.
    pub smoke_snapshots: usize,
    pub test_fraction: f64,
    pub folds: usize,
    pub scenarios: Vec<Scenario>,
    pub n_b_sweep: Vec<usize>,
    /// Combiner count for the decoupled curves.
    pub s_w: usize,
    pub clusters: usize,
    pub use_significance: bool,
    pub heatmap: HeatmapConfig,
    pub grid: GridConfig,
    pub scene: SceneConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            master_seed: 1,
            snapshots: 500,
            smoke_snapshots: 20,
            test_fraction: 0.2,
            folds: 10,
            scenarios: Scenario::ALL.to_vec(),
            n_b_sweep: vec![1, 2, 5, 10, 16, 32, 48, 64, 80, 96, 112, 120, 128],
            s_w: 5,
            clusters: 12,
            use_significance: true,
            heatmap: HeatmapConfig::default(),
            grid: GridConfig::default(),
            scene: SceneConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                found: cfg.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies the smoke profile: fewer snapshots, everything else unchanged.
    pub fn smoke(mut self) -> Self {
        self.snapshots = self.smoke_snapshots;
        self
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self, n_w: usize, n_f: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.scene.validate()?;
        if self.snapshots == 0 {
            return bad("snapshots must be positive".into());
        }
        if self.scenarios.is_empty() {
            return bad("no scenarios selected".into());
        }
        if let Some(&n) = self.n_b_sweep.iter().find(|&&n| n == 0 || n > n_w * n_f) {
            return bad(format!("N_B = {n} outside 1..={}", n_w * n_f));
        }
        if self.s_w == 0 || self.s_w > n_w {
            return bad(format!("|S_w| = {} outside 1..={n_w}", self.s_w));
        }
        // the largest decoupled budget must fit the BS codebook
        if let Some(&n) = self.n_b_sweep.iter().find(|&&n| n / self.s_w.min(n) > n_f) {
            return bad(format!("N_B = {n} needs more than {n_f} BS beams at |S_w| = {}", self.s_w));
        }
        if self.heatmap.s_w.iter().any(|&v| v == 0 || v > n_w) || self.heatmap.s_f.iter().any(|&v| v == 0 || v > n_f) {
            return bad("heatmap axis outside the codebooks".into());
        }
        if self.clusters == 0 {
            return bad("cluster count must be positive".into());
        }
        if self.grid.coupled.is_empty() || self.grid.bs_atr.is_empty() || self.grid.ue_atr.is_empty() {
            return bad("every hyperparameter grid needs at least one point".into());
        }
        Ok(())
    }
}

/// Split of a decoupled budget: `|S_w| = min(s_w, N_B)` and the largest
/// `|S_f|` with `|S_w|·|S_f| ≤ N_B`.
pub fn decoupled_split(n_b: usize, s_w: usize) -> (usize, usize) {
    let w = s_w.min(n_b).max(1);
    (w, (n_b / w).max(1))
}
