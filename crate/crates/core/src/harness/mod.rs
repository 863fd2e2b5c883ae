//! Experiment orchestration: corpus generation, dataset transforms, model
//! tuning and training, coverage planning, evaluation over budget sweeps and
//! the CSV/JSON outputs.

mod config;
mod metrics;
mod output;

pub use config::{decoupled_split, ExperimentConfig, GridConfig, GridPoint, HeatmapConfig, SCHEMA_VERSION};
pub use metrics::{avg_throughput_ratio, misalignment_probability};
pub use output::{emit_outputs, write_curves_csv, write_heatmap_csv, RunManifest};

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{build_rate_dataset, split_dataset, to_atr, to_throughput_ratios, AtrRow, BeamSetup, DatasetSplit, TrRow};
use crate::error::{Error, Result};
use crate::link::{argmax, RateRow};
use crate::regressor::{kfold_tune, train, ModelRole, TrainConfig, TreeEnsembleModel, TuneReport};
use crate::scene::{derive_seed, generate_snapshots, Location};
use crate::select::{overhead_bits, rank_desc, select_bs_coverage, ClusterCoveragePlan, Scenario};

/// Independent seed streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub master: u64,
    pub scene: u64,
    pub split: u64,
    pub clusters: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            master,
            scene: derive_seed(master, 1),
            split: derive_seed(master, 2),
            clusters: derive_seed(master, 3),
        }
    }
}

/// Rates, their TR/ATR transforms and the train/test partition.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub n_w: usize,
    pub n_f: usize,
    pub snapshot_count: usize,
    pub rates: Vec<RateRow>,
    pub tr: Vec<TrRow>,
    pub atr: Vec<AtrRow>,
    pub split: DatasetSplit,
}

impl PreparedData {
    /// Transforms existing rate rows and splits them with the config's seed.
    pub fn from_rates(config: &ExperimentConfig, rates: Vec<RateRow>, n_w: usize, n_f: usize, snapshot_count: usize) -> Result<Self> {
        let seeds = Seeds::from_master(config.master_seed);
        let tr = to_throughput_ratios(&rates).map_err(|e| e.in_stage("transform"))?;
        let atr = to_atr(&tr, n_w, n_f).map_err(|e| e.in_stage("transform"))?;
        let split = split_dataset(tr.len(), config.test_fraction, config.folds, seeds.split).map_err(|e| e.in_stage("split"))?;
        Ok(Self {
            n_w,
            n_f,
            snapshot_count,
            rates,
            tr,
            atr,
            split,
        })
    }

    pub fn train_locations(&self) -> Vec<Location> {
        self.split.train.iter().map(|&r| self.tr[r].location).collect()
    }

    /// Training targets for a role.
    pub fn train_targets(&self, role: ModelRole) -> Vec<Vec<f64>> {
        self.split
            .train
            .iter()
            .map(|&r| match role {
                ModelRole::Coupled => self.tr[r].ratios.clone(),
                ModelRole::BsAtr => self.atr[r].atr_f.clone(),
                ModelRole::UeAtr | ModelRole::UeAtrNoLocation => self.atr[r].atr_w.clone(),
            })
            .collect()
    }

    pub fn test_rows(&self) -> Vec<&TrRow> {
        self.split.test.iter().map(|&r| &self.tr[r]).collect()
    }
}

/// Generates the corpus and prepares datasets.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    let setup = BeamSetup::from_config(&config.scene).map_err(|e| e.in_stage("arrays"))?;
    config.validate(setup.n_w(), setup.n_f())?;
    let seeds = Seeds::from_master(config.master_seed);
    let snapshots = generate_snapshots(&config.scene, config.snapshots, seeds.scene).map_err(|e| e.in_stage("scene"))?;
    let rates = build_rate_dataset(&config.scene, &setup, &snapshots).map_err(|e| e.in_stage("dataset"))?;
    info!("{} rate rows from {} snapshots", rates.len(), snapshots.len());
    PreparedData::from_rates(config, rates, setup.n_w(), setup.n_f(), snapshots.len())
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: TreeEnsembleModel,
    pub tuning: TuneReport,
}

#[derive(Debug, Clone)]
pub struct FittedModels {
    pub coupled: FittedModel,
    pub bs_atr: FittedModel,
    pub ue_atr: FittedModel,
    pub ue_atr_no_location: FittedModel,
}

impl FittedModels {
    pub fn all(&self) -> [&FittedModel; 4] {
        [&self.coupled, &self.bs_atr, &self.ue_atr, &self.ue_atr_no_location]
    }
}

pub fn grid_for(config: &ExperimentConfig, role: ModelRole, n_w: usize, n_f: usize) -> Vec<TrainConfig> {
    let points = match role {
        ModelRole::Coupled => &config.grid.coupled,
        ModelRole::BsAtr => &config.grid.bs_atr,
        ModelRole::UeAtr | ModelRole::UeAtrNoLocation => &config.grid.ue_atr,
    };
    points.iter().map(|p| p.with_budget(role.budget(n_w, n_f))).collect()
}

/// K-fold tunes on the training rows, then refits the winner on all of them.
pub fn fit_model(config: &ExperimentConfig, data: &PreparedData, role: ModelRole) -> Result<FittedModel> {
    let stage = |e: Error| e.in_stage(role.tag());
    let inputs = data.train_locations();
    let targets = data.train_targets(role);
    let grid = grid_for(config, role, data.n_w, data.n_f);
    let tuning = kfold_tune(&inputs, &targets, &data.split.folds, &grid, role).map_err(stage)?;
    let model = train(&inputs, &targets, &tuning.best_config(), role).map_err(stage)?;
    info!(
        "{role}: {} parameters, validation MSE {:.3e}",
        model.param_count(),
        tuning.scores[tuning.best].mean_validation_mse
    );
    Ok(FittedModel { model, tuning })
}

pub fn fit_models(config: &ExperimentConfig, data: &PreparedData) -> Result<FittedModels> {
    let coupled = fit_model(config, data, ModelRole::Coupled)?;
    let bs_atr = fit_model(config, data, ModelRole::BsAtr)?;
    let ue_atr = fit_model(config, data, ModelRole::UeAtr)?;
    // same targets and grid as Θ₂,w, so the tuning outcome carries over
    let inputs = data.train_locations();
    let targets = data.train_targets(ModelRole::UeAtrNoLocation);
    let model = train(&inputs, &targets, &ue_atr.tuning.best_config(), ModelRole::UeAtrNoLocation)
        .map_err(|e| e.in_stage(ModelRole::UeAtrNoLocation.tag()))?;
    let ue_atr_no_location = FittedModel {
        model,
        tuning: ue_atr.tuning.clone(),
    };
    Ok(FittedModels {
        coupled,
        bs_atr,
        ue_atr,
        ue_atr_no_location,
    })
}

pub fn build_plan(config: &ExperimentConfig, data: &PreparedData) -> Result<ClusterCoveragePlan> {
    let locs = data.train_locations();
    let atr_f: Vec<Vec<f64>> = data.split.train.iter().map(|&r| data.atr[r].atr_f.clone()).collect();
    let seeds = Seeds::from_master(config.master_seed);
    select_bs_coverage(&locs, &atr_f, config.clusters, seeds.clusters, config.use_significance).map_err(|e| e.in_stage("plan"))
}

/// Predicted ratio vectors for each test row, one list per model.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub coupled: Vec<Vec<f64>>,
    pub atr_f: Vec<Vec<f64>>,
    pub atr_w: Vec<Vec<f64>>,
    pub atr_w_no_location: Vec<Vec<f64>>,
}

impl Predictions {
    pub fn from_models(models: &FittedModels, rows: &[&TrRow]) -> Self {
        let run = |m: &TreeEnsembleModel| rows.par_iter().map(|r| m.predict(r.location)).collect::<Vec<_>>();
        Self {
            coupled: run(&models.coupled.model),
            atr_f: run(&models.bs_atr.model),
            atr_w: run(&models.ue_atr.model),
            atr_w_no_location: run(&models.ue_atr_no_location.model),
        }
    }

    /// The true TR and ATR vectors, i.e. perfect predictors.
    pub fn oracle(rows: &[&TrRow], n_w: usize, n_f: usize) -> Result<Self> {
        let owned: Vec<TrRow> = rows.iter().map(|r| (*r).clone()).collect();
        let atr = to_atr(&owned, n_w, n_f)?;
        Ok(Self {
            coupled: owned.into_iter().map(|r| r.ratios).collect(),
            atr_f: atr.iter().map(|a| a.atr_f.clone()).collect(),
            atr_w: atr.iter().map(|a| a.atr_w.clone()).collect(),
            atr_w_no_location: atr.into_iter().map(|a| a.atr_w).collect(),
        })
    }
}

/// What to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub scenarios: Vec<Scenario>,
    pub n_b_sweep: Vec<usize>,
    pub s_w: usize,
    pub heatmap: HeatmapConfig,
    pub n_w: usize,
    pub n_f: usize,
}

impl EvalSettings {
    pub fn from_config(config: &ExperimentConfig, n_w: usize, n_f: usize) -> Self {
        Self {
            scenarios: config.scenarios.clone(),
            n_b_sweep: config.n_b_sweep.clone(),
            s_w: config.s_w,
            heatmap: config.heatmap.clone(),
            n_w,
            n_f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub scenario: Scenario,
    pub n_b: usize,
    /// `None` for the coupled scenario, whose pairs need not form a product.
    pub s_w: Option<usize>,
    pub s_f: Option<usize>,
    pub r_t: f64,
    pub p_m: f64,
    pub overhead_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatCell {
    pub scenario: Scenario,
    pub s_w: usize,
    pub s_f: usize,
    pub r_t: f64,
    pub p_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub test_ues: usize,
    pub curves: Vec<CurvePoint>,
    pub heatmap: Vec<HeatCell>,
}

impl EvalResult {
    pub fn curve(&self, scenario: Scenario) -> Vec<&CurvePoint> {
        self.curves.iter().filter(|p| p.scenario == scenario).collect()
    }

    pub fn point(&self, scenario: Scenario, n_b: usize) -> Option<&CurvePoint> {
        self.curves.iter().find(|p| p.scenario == scenario && p.n_b == n_b)
    }
}

/// Per-row decoupled lookup: best ratio over the first `a` ranked combiners
/// and first `b` ranked beamformers, plus where the true best pair sits.
struct ProductTable {
    width: usize,
    best: Vec<f64>,
    pos_w: usize,
    pos_f: usize,
}

impl ProductTable {
    fn new(ratios: &[f64], n_f: usize, rank_w: &[usize], rank_f: &[usize], rows: usize, cols: usize, best_pair: usize) -> Self {
        let width = cols + 1;
        let mut best = vec![0.0; (rows + 1) * width];
        for a in 1..=rows {
            for b in 1..=cols {
                let v = ratios[rank_w[a - 1] * n_f + rank_f[b - 1]];
                best[a * width + b] = v.max(best[(a - 1) * width + b]).max(best[a * width + b - 1]);
            }
        }
        let (bi, bj) = (best_pair / n_f, best_pair % n_f);
        Self {
            width,
            best,
            pos_w: rank_w.iter().position(|&i| i == bi).expect("ranking covers codebook"),
            pos_f: rank_f.iter().position(|&j| j == bj).expect("ranking covers codebook"),
        }
    }

    fn value(&self, a: usize, b: usize) -> (f64, bool) {
        (self.best[a * self.width + b], self.pos_w >= a || self.pos_f >= b)
    }
}

/// Scores every scenario over the budget sweep and the heatmap grid.
/// `plan` is required when scenario 3 is requested.
pub fn evaluate(
    rows: &[&TrRow],
    preds: &Predictions,
    plan: Option<&ClusterCoveragePlan>,
    settings: &EvalSettings,
) -> Result<EvalResult> {
    let (n_w, n_f) = (settings.n_w, settings.n_f);
    let n = rows.len();
    if n == 0 {
        return Err(Error::TooFewRows { needed: 1, have: 0 });
    }
    for (len, what) in [
        (preds.coupled.len(), "coupled predictions"),
        (preds.atr_f.len(), "BS ATR predictions"),
        (preds.atr_w.len(), "UE ATR predictions"),
        (preds.atr_w_no_location.len(), "UE ATR predictions (scenario 3)"),
    ] {
        if len != n {
            return Err(Error::Dimension {
                expected: n,
                got: len,
                context: what,
            });
        }
    }
    let wants = |s| settings.scenarios.contains(&s);
    let plan_order: Option<&[usize]> = if wants(Scenario::DecoupledNoLocation) {
        let p = plan.ok_or_else(|| Error::InvalidArgument("scenario 3 needs a coverage plan".into()))?;
        if p.beam_count() != n_f {
            return Err(Error::Dimension {
                expected: n_f,
                got: p.beam_count(),
                context: "coverage plan beams",
            });
        }
        Some(&p.order)
    } else {
        None
    };

    // every decoupled cell that will be read
    let mut cells: Vec<(usize, usize)> = settings.n_b_sweep.iter().map(|&nb| decoupled_split(nb, settings.s_w)).collect();
    for &a in &settings.heatmap.s_w {
        for &b in &settings.heatmap.s_f {
            cells.push((a, b));
        }
    }
    let max_a = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let max_b = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let max_nb = settings.n_b_sweep.iter().copied().max().unwrap_or(0);
    if max_a > n_w || max_b > n_f || max_nb > n_w * n_f || cells.iter().any(|&(a, b)| a == 0 || b == 0) {
        return Err(Error::InvalidArgument(format!(
            "budgets exceed the {n_w}×{n_f} codebooks or are empty"
        )));
    }

    struct RowScores {
        coupled: Vec<(f64, bool)>,
        with_loc: Vec<(f64, bool)>,
        no_loc: Vec<(f64, bool)>,
    }

    let per_row: Vec<RowScores> = (0..n)
        .into_par_iter()
        .map(|r| {
            let ratios = &rows[r].ratios;
            let best_pair = argmax(ratios).expect("non-empty row");
            let mut out = RowScores {
                coupled: vec![],
                with_loc: vec![],
                no_loc: vec![],
            };
            if wants(Scenario::Coupled) {
                let rank = rank_desc(&preds.coupled[r]);
                let pos = rank.iter().position(|&p| p == best_pair).expect("ranking covers pairs");
                let mut prefix = Vec::with_capacity(max_nb + 1);
                prefix.push(0.0f64);
                for &p in &rank[..max_nb] {
                    let last = *prefix.last().expect("seeded");
                    prefix.push(last.max(ratios[p]));
                }
                out.coupled = settings.n_b_sweep.iter().map(|&nb| (prefix[nb], pos >= nb)).collect();
            }
            let rank_of = |v: &Vec<f64>| rank_desc(v);
            let lookups = |t: &ProductTable| cells.iter().map(|&(a, b)| t.value(a, b)).collect::<Vec<_>>();
            if wants(Scenario::DecoupledWithLocation) {
                let t = ProductTable::new(ratios, n_f, &rank_of(&preds.atr_w[r]), &rank_of(&preds.atr_f[r]), max_a, max_b, best_pair);
                out.with_loc = lookups(&t);
            }
            if let Some(order) = plan_order {
                let t = ProductTable::new(ratios, n_f, &rank_of(&preds.atr_w_no_location[r]), order, max_a, max_b, best_pair);
                out.no_loc = lookups(&t);
            }
            out
        })
        .collect();

    // sequential reduction in row order
    let reduce = |pick: &dyn Fn(&RowScores) -> &Vec<(f64, bool)>, k: usize| -> (f64, f64) {
        let (mut sum, mut missed) = (0.0, 0usize);
        for row in &per_row {
            let (v, miss) = pick(row)[k];
            sum += v;
            missed += miss as usize;
        }
        (sum / n as f64, missed as f64 / n as f64)
    };

    let mut curves = Vec::new();
    let mut heatmap = Vec::new();
    let sweep_len = settings.n_b_sweep.len();
    for &scenario in &Scenario::ALL {
        if !wants(scenario) {
            continue;
        }
        let pick: &dyn Fn(&RowScores) -> &Vec<(f64, bool)> = match scenario {
            Scenario::Coupled => &|r: &RowScores| &r.coupled,
            Scenario::DecoupledWithLocation => &|r: &RowScores| &r.with_loc,
            Scenario::DecoupledNoLocation => &|r: &RowScores| &r.no_loc,
        };
        for (k, &nb) in settings.n_b_sweep.iter().enumerate() {
            let (r_t, p_m) = reduce(pick, k);
            let (s_w, s_f, pairs) = match scenario {
                Scenario::Coupled => (None, None, nb),
                _ => {
                    let (a, b) = cells[k];
                    (Some(a), Some(b), a * b)
                }
            };
            curves.push(CurvePoint {
                scenario,
                n_b: nb,
                s_w,
                s_f,
                r_t,
                p_m,
                overhead_bits: overhead_bits(scenario, pairs, n_w)?,
            });
        }
        if scenario != Scenario::Coupled {
            for (k, &(a, b)) in cells.iter().enumerate().skip(sweep_len) {
                let (r_t, p_m) = reduce(pick, k);
                heatmap.push(HeatCell {
                    scenario,
                    s_w: a,
                    s_f: b,
                    r_t,
                    p_m,
                });
            }
        }
    }
    Ok(EvalResult {
        test_ues: n,
        curves,
        heatmap,
    })
}

/// Everything a full run produces.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub data: PreparedData,
    pub models: FittedModels,
    pub plan: ClusterCoveragePlan,
    pub predictions: Predictions,
    pub result: EvalResult,
}

impl ExperimentRun {
    pub fn manifest(&self) -> RunManifest {
        RunManifest::new(self)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let data = prepare_data(config)?;
    let models = fit_models(config, &data)?;
    let plan = build_plan(config, &data)?;
    let test = data.test_rows();
    let predictions = Predictions::from_models(&models, &test);
    let settings = EvalSettings::from_config(config, data.n_w, data.n_f);
    let result = evaluate(&test, &predictions, Some(&plan), &settings).map_err(|e| e.in_stage("evaluate"))?;
    Ok(ExperimentRun {
        config: config.clone(),
        seeds: Seeds::from_master(config.master_seed),
        data,
        models,
        plan,
        predictions,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::{select_coupled, select_decoupled_no_location, select_decoupled_with_location, ConstantPredictor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_rows(n: usize, n_w: usize, n_f: usize, seed: u64) -> Vec<TrRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|k| {
                let mut ratios: Vec<f64> = (0..n_w * n_f).map(|_| rng.gen::<f64>().powi(3)).collect();
                let m = ratios.iter().cloned().fold(0.0, f64::max);
                ratios.iter_mut().for_each(|v| *v /= m);
                TrRow {
                    location: Location::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..50.0)),
                    snapshot_id: k as u64,
                    ratios,
                    max_rate: 1.0,
                }
            })
            .collect()
    }

    fn settings(n_w: usize, n_f: usize, sweep: Vec<usize>, s_w: usize) -> EvalSettings {
        EvalSettings {
            scenarios: Scenario::ALL.to_vec(),
            n_b_sweep: sweep,
            s_w,
            heatmap: HeatmapConfig {
                s_w: (1..=n_w).collect(),
                s_f: (1..=n_f).collect(),
            },
            n_w,
            n_f,
        }
    }

    /// Noisy predictions, and the slow path through the public selectors.
    #[test]
    fn fast_evaluation_matches_selectors_and_metrics() {
        let (n_w, n_f) = (4, 8);
        let rows = toy_rows(60, n_w, n_f, 3);
        let refs: Vec<&TrRow> = rows.iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut preds = Predictions::oracle(&refs, n_w, n_f).unwrap();
        for v in preds
            .coupled
            .iter_mut()
            .chain(&mut preds.atr_f)
            .chain(&mut preds.atr_w)
            .chain(&mut preds.atr_w_no_location)
            .flatten()
        {
            *v = (*v + rng.gen_range(-0.2..0.2)).clamp(0.0, 1.0);
        }
        let atr_f: Vec<Vec<f64>> = to_atr(&rows, n_w, n_f).unwrap().into_iter().map(|a| a.atr_f).collect();
        let locs: Vec<Location> = rows.iter().map(|r| r.location).collect();
        let plan = select_bs_coverage(&locs, &atr_f, 3, 1, true).unwrap();
        let sweep = vec![1, 2, 3, 4, 6, 8, 11, 16];
        let st = settings(n_w, n_f, sweep.clone(), 2);
        let res = evaluate(&refs, &preds, Some(&plan), &st).unwrap();
        let ratio_refs: Vec<&[f64]> = rows.iter().map(|r| r.ratios.as_slice()).collect();
        for &nb in &sweep {
            let (a, b) = decoupled_split(nb, 2);
            let mut sets = [vec![], vec![], vec![]];
            for (k, row) in rows.iter().enumerate() {
                let g1 = ConstantPredictor(preds.coupled[k].clone());
                sets[0].push(select_coupled(&g1, row.location, nb, n_w, n_f).unwrap().flat_indices(n_f));
                let (gf, gw) = (ConstantPredictor(preds.atr_f[k].clone()), ConstantPredictor(preds.atr_w[k].clone()));
                sets[1].push(select_decoupled_with_location(&gf, &gw, row.location, a, b).unwrap().pairs().flat_indices(n_f));
                let g3 = ConstantPredictor(preds.atr_w_no_location[k].clone());
                sets[2].push(select_decoupled_no_location(&g3, row.location, a, &plan, b).unwrap().pairs().flat_indices(n_f));
            }
            for (s, scenario) in Scenario::ALL.iter().enumerate() {
                let p = res.point(*scenario, nb).unwrap();
                assert!((p.r_t - avg_throughput_ratio(&ratio_refs, &sets[s]).unwrap()).abs() < 1e-12);
                assert!((p.p_m - misalignment_probability(&ratio_refs, &sets[s]).unwrap()).abs() < 1e-12);
            }
        }
        // heatmap cell equals the corresponding direct selection
        let cell = res
            .heatmap
            .iter()
            .find(|c| c.scenario == Scenario::DecoupledWithLocation && c.s_w == 3 && c.s_f == 5)
            .unwrap();
        let sets: Vec<Vec<usize>> = (0..rows.len())
            .map(|k| {
                let (gf, gw) = (ConstantPredictor(preds.atr_f[k].clone()), ConstantPredictor(preds.atr_w[k].clone()));
                select_decoupled_with_location(&gf, &gw, rows[k].location, 3, 5).unwrap().pairs().flat_indices(n_f)
            })
            .collect();
        assert!((cell.r_t - avg_throughput_ratio(&ratio_refs, &sets).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_budget_is_perfect() {
        let (n_w, n_f) = (4, 8);
        let rows = toy_rows(40, n_w, n_f, 5);
        let refs: Vec<&TrRow> = rows.iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut preds = Predictions::oracle(&refs, n_w, n_f).unwrap();
        preds.coupled.iter_mut().flatten().for_each(|v| *v = rng.gen());
        let locs: Vec<Location> = rows.iter().map(|r| r.location).collect();
        let atr_f: Vec<Vec<f64>> = (0..40).map(|_| (0..n_f).map(|_| rng.gen()).collect()).collect();
        let plan = select_bs_coverage(&locs, &atr_f, 4, 1, true).unwrap();
        let res = evaluate(&refs, &preds, Some(&plan), &settings(n_w, n_f, vec![32], n_w)).unwrap();
        for p in &res.curves {
            assert_eq!(p.r_t, 1.0);
            assert_eq!(p.p_m, 0.0);
        }
        assert!(evaluate(&refs, &preds, None, &settings(n_w, n_f, vec![32], n_w)).is_err());
    }
}
