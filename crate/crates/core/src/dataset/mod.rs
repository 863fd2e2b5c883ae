//! Location-based datasets: per-pair rates, normalised throughput ratios (TR)
//! and the per-beam approximate throughput ratios (ATR) obtained by averaging
//! a TR row over the opposing codebook.

mod io;

pub use io::{load_dataset, save_dataset, Dataset, DatasetFormat};

use std::collections::HashMap;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{dft_codebook, ArrayGeometry, Codebook, CodebookKind};
use crate::error::{Error, Result};
use crate::link::{pair_index, sweep_paths, RateRow};
use crate::scene::{trace_paths, Location, PathComponent, SceneConfig, SceneSnapshot, SnapshotFile};

/// BS geometry and both DFT codebooks for a scene.
#[derive(Debug, Clone)]
pub struct BeamSetup {
    pub bs: ArrayGeometry,
    pub combiners: Codebook,
    pub beamformers: Codebook,
}

impl BeamSetup {
    pub fn from_config(config: &SceneConfig) -> Result<Self> {
        let bs = config.bs_geometry()?;
        let ue = config.ue_geometry(nalgebra::Vector3::zeros())?;
        Ok(Self {
            combiners: dft_codebook(&ue, CodebookKind::Combiner),
            beamformers: dft_codebook(&bs, CodebookKind::Beamformer),
            bs,
        })
    }

    pub fn n_w(&self) -> usize {
        self.combiners.len()
    }

    pub fn n_f(&self) -> usize {
        self.beamformers.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrRow {
    pub location: Location,
    pub snapshot_id: u64,
    /// `R_{i,j} / R_max`, indexed by the flattened pair index.
    pub ratios: Vec<f64>,
    pub max_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtrRow {
    pub location: Location,
    pub snapshot_id: u64,
    /// Mean TR of each combiner over all beamformers, length `|W|`.
    pub atr_w: Vec<f64>,
    /// Mean TR of each beamformer over all combiners, length `|F|`.
    pub atr_f: Vec<f64>,
}

/// One row per (snapshot, UE) with a non-zero rate vector, ordered by
/// snapshot then UE. Fully blocked UEs are dropped.
pub fn build_rate_dataset(config: &SceneConfig, setup: &BeamSetup, snapshots: &[SceneSnapshot]) -> Result<Vec<RateRow>> {
    sweep_all(config, setup, snapshots, |snap, u| trace_paths(config, snap, u))
}

/// Same as [`build_rate_dataset`] but reuses the paths stored in a snapshot
/// file instead of tracing again.
pub fn build_rate_dataset_from_file(config: &SceneConfig, setup: &BeamSetup, file: &SnapshotFile) -> Result<Vec<RateRow>> {
    let by_id: HashMap<u64, usize> = file.snapshots.iter().enumerate().map(|(k, s)| (s.snapshot_id, k)).collect();
    sweep_all(config, setup, &file.snapshots, |snap, u| {
        let k = by_id[&snap.snapshot_id];
        file.paths[k]
            .get(u)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("snapshot {} has no paths for UE {u}", snap.snapshot_id)))
    })
}

fn sweep_all<P>(config: &SceneConfig, setup: &BeamSetup, snapshots: &[SceneSnapshot], paths_of: P) -> Result<Vec<RateRow>>
where
    P: Fn(&SceneSnapshot, usize) -> Result<Vec<PathComponent>> + Sync,
{
    let jobs: Vec<(&SceneSnapshot, usize)> = snapshots
        .iter()
        .flat_map(|s| (0..s.ue_count()).map(move |u| (s, u)))
        .collect();
    let noise = config.noise_power();
    let ofdm = config.ofdm();
    let rows: Vec<RateRow> = jobs
        .par_iter()
        .map(|&(snap, u)| {
            let paths = paths_of(snap, u)?;
            let ue = config.ue_geometry(snap.ue_antenna(u).expect("valid UE"))?;
            let location = snap.ue_location(u).expect("valid UE");
            sweep_paths(
                &paths,
                &setup.bs,
                &ue,
                &setup.combiners,
                &setup.beamformers,
                ofdm,
                noise,
                location,
                snap.snapshot_id,
            )
        })
        .collect::<Result<_>>()?;
    let total = rows.len();
    let kept: Vec<RateRow> = rows.into_iter().filter(|r| r.max_rate() > 0.0).collect();
    if kept.len() < total {
        info!("dropped {} fully blocked UEs out of {total}", total - kept.len());
    }
    Ok(kept)
}

/// Divides every row by its maximum rate.
pub fn to_throughput_ratios(rows: &[RateRow]) -> Result<Vec<TrRow>> {
    rows.iter()
        .enumerate()
        .map(|(n, row)| {
            let max = row.max_rate();
            if !(max > 0.0) || !max.is_finite() {
                return Err(Error::NonPositiveMax { row: n, max });
            }
            Ok(TrRow {
                location: row.location,
                snapshot_id: row.snapshot_id,
                ratios: row.rates.iter().map(|r| r / max).collect(),
                max_rate: max,
            })
        })
        .collect()
}

pub fn to_atr(rows: &[TrRow], n_w: usize, n_f: usize) -> Result<Vec<AtrRow>> {
    rows.iter()
        .map(|row| {
            if row.ratios.len() != n_w * n_f {
                return Err(Error::Dimension {
                    expected: n_w * n_f,
                    got: row.ratios.len(),
                    context: "TR row length",
                });
            }
            let mut atr_w = vec![0.0; n_w];
            let mut atr_f = vec![0.0; n_f];
            for i in 0..n_w {
                for j in 0..n_f {
                    let r = row.ratios[pair_index(i, j, n_f)];
                    atr_w[i] += r;
                    atr_f[j] += r;
                }
            }
            atr_w.iter_mut().for_each(|v| *v /= n_f as f64);
            atr_f.iter_mut().for_each(|v| *v /= n_w as f64);
            Ok(AtrRow {
                location: row.location,
                snapshot_id: row.snapshot_id,
                atr_w,
                atr_f,
            })
        })
        .collect()
}

/// Train/test partition plus cross-validation folds over the training rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    /// Ascending row indices.
    pub train: Vec<usize>,
    /// Ascending row indices.
    pub test: Vec<usize>,
    /// Fold id in `1..=folds` for each entry of `train`.
    pub folds: Vec<usize>,
}

/// Seeded shuffle; the first `round(n·test_fraction)` shuffled rows are held
/// out and the rest are dealt round-robin into `folds` folds.
pub fn split_dataset(n_rows: usize, test_fraction: f64, folds: usize, seed: u64) -> Result<DatasetSplit> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let n_test = (n_rows as f64 * test_fraction).round() as usize;
    if n_rows - n_test < folds {
        return Err(Error::TooFewRows {
            needed: folds + n_test,
            have: n_rows,
        });
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = order[..n_test].to_vec();
    test.sort_unstable();
    let mut fold_of = vec![0usize; n_rows];
    for (pos, &row) in order[n_test..].iter().enumerate() {
        fold_of[row] = pos % folds + 1;
    }
    let mut train = order[n_test..].to_vec();
    train.sort_unstable();
    let folds = train.iter().map(|&r| fold_of[r]).collect();
    Ok(DatasetSplit { train, test, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rate_row(rates: Vec<f64>) -> RateRow {
        RateRow {
            location: Location::new(1.0, 2.0),
            snapshot_id: 0,
            rates,
        }
    }

    fn tr_row(ratios: Vec<f64>) -> TrRow {
        TrRow {
            location: Location::new(0.0, 0.0),
            snapshot_id: 0,
            ratios,
            max_rate: 1.0,
        }
    }

    #[test]
    fn ratios_divide_by_row_max() {
        let tr = to_throughput_ratios(&[rate_row(vec![2.0, 4.0, 8.0]), rate_row(vec![3.0; 4])]).unwrap();
        assert_eq!(tr[0].ratios, vec![0.25, 0.5, 1.0]);
        assert_eq!(tr[0].max_rate, 8.0);
        assert!(tr[1].ratios.iter().all(|&r| r == 1.0));
        assert!(matches!(
            to_throughput_ratios(&[rate_row(vec![0.0, 0.0])]),
            Err(Error::NonPositiveMax { row: 0, .. })
        ));
    }

    #[test]
    fn random_ratios_match_elementwise_division() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<RateRow> = (0..20).map(|_| rate_row((0..32).map(|_| rng.gen_range(0.0..9.0)).collect())).collect();
        let tr = to_throughput_ratios(&rows).unwrap();
        for (r, t) in rows.iter().zip(&tr) {
            let m = r.rates.iter().cloned().fold(f64::MIN, f64::max);
            for (a, b) in r.rates.iter().zip(&t.ratios) {
                assert_eq!(a / m, *b);
            }
            assert!(t.ratios.iter().any(|&v| v == 1.0));
        }
    }

    #[test]
    fn atr_of_hand_example() {
        let atr = to_atr(&[tr_row(vec![1.0, 0.5, 0.25, 0.75])], 2, 2).unwrap();
        assert_eq!(atr[0].atr_w, vec![0.75, 0.5]);
        assert_eq!(atr[0].atr_f, vec![0.625, 0.625]);
        let uniform = to_atr(&[tr_row(vec![0.4; 12])], 3, 4).unwrap();
        assert!(uniform[0].atr_w.iter().chain(&uniform[0].atr_f).all(|&v| (v - 0.4).abs() < 1e-15));
        assert!(to_atr(&[tr_row(vec![1.0; 3])], 2, 2).is_err());
    }

    #[test]
    fn atr_matches_brute_force_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (nw, nf) = (4, 8);
        let rows: Vec<TrRow> = (0..30).map(|_| tr_row((0..nw * nf).map(|_| rng.gen::<f64>()).collect())).collect();
        let atr = to_atr(&rows, nw, nf).unwrap();
        for (row, a) in rows.iter().zip(&atr) {
            for i in 0..nw {
                let m: f64 = row.ratios[i * nf..(i + 1) * nf].iter().sum::<f64>() / nf as f64;
                assert!((a.atr_w[i] - m).abs() < 1e-15);
            }
            for j in 0..nf {
                let m: f64 = (0..nw).map(|i| row.ratios[i * nf + j]).sum::<f64>() / nw as f64;
                assert!((a.atr_f[j] - m).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = split_dataset(100, 0.2, 10, 4).unwrap();
        assert_eq!(s.train.len(), 80);
        assert_eq!(s.test.len(), 20);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(s, split_dataset(100, 0.2, 10, 4).unwrap());
        assert_ne!(s, split_dataset(100, 0.2, 10, 5).unwrap());

        let s = split_dataset(97, 0.2, 10, 1).unwrap();
        let mut sizes = [0usize; 10];
        for &f in &s.folds {
            sizes[f - 1] += 1;
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn split_rejects_too_few_rows() {
        assert!(matches!(split_dataset(5, 0.2, 10, 0), Err(Error::TooFewRows { .. })));
        assert!(split_dataset(50, 0.2, 1, 0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn atr_means_agree(ratios in proptest::collection::vec(0.0f64..=1.0, 24)) {
            let atr = to_atr(&[tr_row(ratios.clone())], 4, 6).unwrap();
            let m = ratios.iter().sum::<f64>() / 24.0;
            let mw = atr[0].atr_w.iter().sum::<f64>() / 4.0;
            let mf = atr[0].atr_f.iter().sum::<f64>() / 6.0;
            proptest::prop_assert!((m - mw).abs() < 1e-12 && (m - mf).abs() < 1e-12);
        }
    }
}
