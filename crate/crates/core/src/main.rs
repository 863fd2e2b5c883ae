use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use beamtrain::dataset::{
    build_rate_dataset, build_rate_dataset_from_file, load_dataset, save_dataset, split_dataset, to_atr,
    to_throughput_ratios, BeamSetup, Dataset, DatasetFormat, TrRow,
};
use beamtrain::harness::{
    emit_outputs, grid_for, run_experiment, write_heatmap_csv, ExperimentConfig, Seeds,
};
use beamtrain::regressor::{kfold_tune, load_model, save_model, train, ModelRole};
use beamtrain::scene::{generate_snapshots, load_snapshots, save_snapshots, write_index_csv, SnapshotFile};
use beamtrain::select::{save_plan, select_bs_coverage, write_plan_csvs};

#[derive(Parser)]
#[command(name = "beamtrain", version, about = "Location-aided beam selection experiments")]
struct Cli {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Small corpus for quick checks.
    #[arg(long, global = true)]
    smoke: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    Scene(SceneCmd),
    #[command(subcommand)]
    Dataset(DatasetCmd),
    #[command(subcommand)]
    Model(ModelCmd),
    #[command(subcommand)]
    Plan(PlanCmd),
    #[command(subcommand)]
    Eval(EvalCmd),
}

#[derive(Subcommand)]
enum SceneCmd {
    /// Generate and trace snapshots; writes `snapshots.bin` and `snapshots.csv`.
    Gen {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Per-pair rate dataset (`.csv` extension selects CSV, anything else binary).
    Build {
        /// Snapshot file from `scene gen`; generated from the config otherwise.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rate → TR, or rate/TR → ATR.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        to: Target,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Tr,
    Atr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Theta1,
    Theta2F,
    Theta2W,
    Theta3W,
}

impl From<Role> for ModelRole {
    fn from(r: Role) -> Self {
        match r {
            Role::Theta1 => ModelRole::Coupled,
            Role::Theta2F => ModelRole::BsAtr,
            Role::Theta2W => ModelRole::UeAtr,
            Role::Theta3W => ModelRole::UeAtrNoLocation,
        }
    }
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Tune on the training folds of a rate or TR dataset, then fit.
    Train {
        #[arg(long)]
        role: Role,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print role, parameter count and tree depth histogram.
    Inspect { model: PathBuf },
}

#[derive(Subcommand)]
enum PlanCmd {
    /// Cluster the training rows and order the BS beams; writes `plan.bin`,
    /// `bs_beam_order.csv` and `clusters.csv`.
    Build {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Full pipeline; writes `curves.csv`, `heatmap.csv`, `run_manifest.json`.
    Run(OutDir),
    /// Full pipeline, writing only `heatmap.csv`.
    Heatmap(OutDir),
}

#[derive(Args)]
struct OutDir {
    #[arg(long)]
    out: PathBuf,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if cli.smoke {
        cfg = cfg.smoke();
    }
    Ok(cfg)
}

/// TR rows from a rate or TR dataset.
fn tr_rows(path: &Path) -> Result<(usize, usize, Vec<TrRow>)> {
    match load_dataset(path, DatasetFormat::from_path(path))? {
        Dataset::Rate { n_w, n_f, rows } => Ok((n_w, n_f, to_throughput_ratios(&rows)?)),
        Dataset::Tr { n_w, n_f, rows } => Ok((n_w, n_f, rows)),
        Dataset::Atr { .. } => bail!("{} holds ATR rows; a rate or TR dataset is needed", path.display()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let seeds = Seeds::from_master(cfg.master_seed);
    match cli.command {
        Command::Scene(SceneCmd::Gen { out }) => {
            cfg.scene.validate()?;
            let snaps = generate_snapshots(&cfg.scene, cfg.snapshots, seeds.scene)?;
            let file = SnapshotFile::trace(&cfg.scene, snaps)?;
            std::fs::create_dir_all(&out)?;
            save_snapshots(&out.join("snapshots.bin"), &file)?;
            write_index_csv(&out.join("snapshots.csv"), &file)?;
            info!("{} snapshots written to {}", file.snapshots.len(), out.display());
        }
        Command::Dataset(DatasetCmd::Build { scene, out }) => {
            let setup = BeamSetup::from_config(&cfg.scene)?;
            let rows = match scene {
                Some(p) => build_rate_dataset_from_file(&cfg.scene, &setup, &load_snapshots(&p)?)?,
                None => {
                    let snaps = generate_snapshots(&cfg.scene, cfg.snapshots, seeds.scene)?;
                    build_rate_dataset(&cfg.scene, &setup, &snaps)?
                }
            };
            info!("{} rate rows", rows.len());
            let ds = Dataset::Rate {
                n_w: setup.n_w(),
                n_f: setup.n_f(),
                rows,
            };
            save_dataset(&out, &ds, DatasetFormat::from_path(&out))?;
        }
        Command::Dataset(DatasetCmd::Transform { input, to, out }) => {
            let (n_w, n_f, rows) = tr_rows(&input)?;
            let ds = match to {
                Target::Tr => Dataset::Tr { n_w, n_f, rows },
                Target::Atr => Dataset::Atr {
                    n_w,
                    n_f,
                    rows: to_atr(&rows, n_w, n_f)?,
                },
            };
            save_dataset(&out, &ds, DatasetFormat::from_path(&out))?;
        }
        Command::Model(ModelCmd::Train { role, dataset, out }) => {
            let role = ModelRole::from(role);
            let (n_w, n_f, rows) = tr_rows(&dataset)?;
            let atr = to_atr(&rows, n_w, n_f)?;
            let split = split_dataset(rows.len(), cfg.test_fraction, cfg.folds, seeds.split)?;
            let inputs: Vec<_> = split.train.iter().map(|&r| rows[r].location).collect();
            let targets: Vec<Vec<f64>> = split
                .train
                .iter()
                .map(|&r| match role {
                    ModelRole::Coupled => rows[r].ratios.clone(),
                    ModelRole::BsAtr => atr[r].atr_f.clone(),
                    ModelRole::UeAtr | ModelRole::UeAtrNoLocation => atr[r].atr_w.clone(),
                })
                .collect();
            let grid = grid_for(&cfg, role, n_w, n_f);
            let report = kfold_tune(&inputs, &targets, &split.folds, &grid, role)?;
            let model = train(&inputs, &targets, &report.best_config(), role)?;
            save_model(&out, &model)?;
            println!(
                "{} params={} budget={} validation_mse={:.6e}",
                role.tag(),
                model.param_count(),
                model.config.budget_parameters,
                report.scores[report.best].mean_validation_mse
            );
        }
        Command::Model(ModelCmd::Inspect { model }) => {
            let m = load_model(&model)?;
            println!("role: {} ({})", m.role.tag(), m.role);
            println!("outputs: {}", m.output_dimension());
            println!("param_count: {} (budget {})", m.param_count(), m.config.budget_parameters);
            println!("trees: {}", m.tree_total());
            println!("learning_rate: {}", m.learning_rate);
            for (d, n) in m.depth_histogram().iter().enumerate().filter(|(_, &n)| n > 0) {
                println!("depth {d}: {n} trees");
            }
        }
        Command::Plan(PlanCmd::Build { dataset, out }) => {
            let (n_w, n_f, rows) = tr_rows(&dataset)?;
            let atr = to_atr(&rows, n_w, n_f)?;
            let split = split_dataset(rows.len(), cfg.test_fraction, cfg.folds, seeds.split)?;
            let locs: Vec<_> = split.train.iter().map(|&r| rows[r].location).collect();
            let atr_f: Vec<Vec<f64>> = split.train.iter().map(|&r| atr[r].atr_f.clone()).collect();
            let plan = select_bs_coverage(&locs, &atr_f, cfg.clusters, seeds.clusters, cfg.use_significance)?;
            std::fs::create_dir_all(&out)?;
            save_plan(&out.join("plan.bin"), &plan)?;
            write_plan_csvs(&plan, &out.join("bs_beam_order.csv"), &out.join("clusters.csv"))?;
        }
        Command::Eval(EvalCmd::Run(OutDir { out })) => {
            let run = run_experiment(&cfg)?;
            emit_outputs(&run.result, &run.manifest(), &out)?;
            println!("{} test UEs, results in {}", run.result.test_ues, out.display());
        }
        Command::Eval(EvalCmd::Heatmap(OutDir { out })) => {
            let run = run_experiment(&cfg)?;
            std::fs::create_dir_all(&out)?;
            write_heatmap_csv(&out.join("heatmap.csv"), &run.result)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
