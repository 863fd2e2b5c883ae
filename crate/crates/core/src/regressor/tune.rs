use serde::Serialize;

use super::{train, ModelRole, TrainConfig};
use crate::error::{Error, Result};
use crate::scene::Location;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScore {
    pub config: TrainConfig,
    pub mean_validation_mse: f64,
    pub mean_param_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub best: usize,
    pub scores: Vec<GridScore>,
}

impl TuneReport {
    pub fn best_config(&self) -> TrainConfig {
        self.scores[self.best].config
    }
}

/// Cross-validates every grid point over the folds in `fold_ids` (one id per
/// row) and picks the lowest mean validation MSE; ties go to the smaller mean
/// parameter count, then to the earlier grid point.
pub fn kfold_tune(
    inputs: &[Location],
    targets: &[Vec<f64>],
    fold_ids: &[usize],
    grid: &[TrainConfig],
    role: ModelRole,
) -> Result<TuneReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    if fold_ids.len() != inputs.len() || targets.len() != inputs.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            got: fold_ids.len().min(targets.len()),
            context: "fold assignment",
        });
    }
    let mut folds: Vec<usize> = fold_ids.to_vec();
    folds.sort_unstable();
    folds.dedup();
    if folds.len() < 2 {
        return Err(Error::InvalidArgument("cross-validation needs at least 2 folds".into()));
    }

    let mut scores = Vec::with_capacity(grid.len());
    for config in grid {
        let (mut mse_sum, mut param_sum) = (0.0, 0.0);
        for &k in &folds {
            let (mut tr_x, mut tr_y, mut va_x, mut va_y) = (vec![], vec![], vec![], vec![]);
            for ((x, y), &f) in inputs.iter().zip(targets).zip(fold_ids) {
                if f == k {
                    va_x.push(*x);
                    va_y.push(y);
                } else {
                    tr_x.push(*x);
                    tr_y.push(y.clone());
                }
            }
            let model = train(&tr_x, &tr_y, config, role)?;
            let mut se = 0.0;
            let mut count = 0usize;
            for (x, y) in va_x.iter().zip(&va_y) {
                for (p, t) in model.predict(*x).iter().zip(y.iter()) {
                    se += (p - t) * (p - t);
                }
                count += y.len();
            }
            mse_sum += se / count as f64;
            param_sum += model.param_count() as f64;
        }
        scores.push(GridScore {
            config: *config,
            mean_validation_mse: mse_sum / folds.len() as f64,
            mean_param_count: param_sum / folds.len() as f64,
        });
    }

    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        let b = &scores[best];
        if s.mean_validation_mse < b.mean_validation_mse
            || (s.mean_validation_mse == b.mean_validation_mse && s.mean_param_count < b.mean_param_count)
        {
            best = i;
        }
    }
    Ok(TuneReport { best, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::split_dataset;

    fn data() -> (Vec<Location>, Vec<Vec<f64>>) {
        let locs: Vec<Location> = (0..120)
            .map(|k| Location::new((k % 12) as f64, (k / 12) as f64 * 3.0))
            .collect();
        let targets = locs
            .iter()
            .map(|l| vec![if l.x < 4.0 { 0.1 } else if l.y > 15.0 { 0.9 } else { 0.5 }])
            .collect();
        (locs, targets)
    }

    fn point(tree_count: usize, max_depth: usize) -> TrainConfig {
        TrainConfig {
            tree_count,
            max_depth,
            learning_rate: 0.5,
            min_samples_leaf: 2,
            budget_parameters: 10_000,
        }
    }

    #[test]
    fn richer_config_beats_underfit() {
        let (locs, targets) = data();
        let folds = split_dataset(120, 0.0, 5, 1).unwrap().folds;
        let grid = [point(1, 1), point(20, 3)];
        let rep = kfold_tune(&locs, &targets, &folds, &grid, ModelRole::UeAtr).unwrap();
        assert_eq!(rep.best, 1);
        assert!(rep.scores[1].mean_validation_mse < rep.scores[0].mean_validation_mse);
        assert_eq!(rep, kfold_tune(&locs, &targets, &folds, &grid, ModelRole::UeAtr).unwrap());
    }

    #[test]
    fn single_point_and_ties() {
        let (locs, _) = data();
        let folds = split_dataset(120, 0.0, 4, 2).unwrap().folds;
        let rep = kfold_tune(&locs, &vec![vec![0.4]; 120], &folds, &[point(3, 2)], ModelRole::UeAtr).unwrap();
        assert_eq!(rep.best, 0);
        // constant targets: every config scores the same, first grid point kept
        let rep = kfold_tune(&locs, &vec![vec![0.4]; 120], &folds, &[point(3, 2), point(9, 4)], ModelRole::UeAtr).unwrap();
        assert_eq!(rep.best, 0);
        assert!(kfold_tune(&locs, &vec![vec![0.4]; 120], &folds, &[], ModelRole::UeAtr).is_err());
    }
}
