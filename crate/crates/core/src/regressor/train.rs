use std::cmp::Ordering;

use super::{ModelRole, Node, TrainConfig, Tree, TreeEnsembleModel};
use crate::error::{Error, Result};
use crate::scene::Location;

/// Splits must reduce the node's squared error by more than this.
const MIN_GAIN: f64 = 1e-14;

pub fn train(inputs: &[Location], targets: &[Vec<f64>], config: &TrainConfig, role: ModelRole) -> Result<TreeEnsembleModel> {
    train_with_history(inputs, targets, config, role).map(|(m, _)| m)
}

fn validate(inputs: &[Location], targets: &[Vec<f64>], config: &TrainConfig) -> Result<usize> {
    if inputs.is_empty() {
        return Err(Error::TooFewRows { needed: 1, have: 0 });
    }
    if inputs.len() != targets.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            got: targets.len(),
            context: "training targets",
        });
    }
    let d = targets[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument("targets have zero outputs".into()));
    }
    for t in targets {
        if t.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: t.len(),
                context: "training target width",
            });
        }
        if t.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("target entries must lie in [0, 1]".into()));
        }
    }
    if inputs.iter().any(|l| !l.x.is_finite() || !l.y.is_finite()) {
        return Err(Error::InvalidArgument("non-finite location".into()));
    }
    if config.min_samples_leaf == 0 {
        return Err(Error::InvalidArgument("min_samples_leaf must be at least 1".into()));
    }
    if inputs.len() < config.min_samples_leaf {
        return Err(Error::TooFewRows {
            needed: config.min_samples_leaf,
            have: inputs.len(),
        });
    }
    if !(config.learning_rate > 0.0 && config.learning_rate <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate {} outside (0, 1]",
            config.learning_rate
        )));
    }
    if config.budget_parameters < d {
        return Err(Error::BudgetTooSmall {
            budget: config.budget_parameters,
            needed: d,
        });
    }
    Ok(d)
}

/// Total order on rows: location, then target values. Makes the fit
/// independent of input row order.
fn canonical_order(inputs: &[Location], targets: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by(|&a, &b| {
        inputs[a]
            .x
            .total_cmp(&inputs[b].x)
            .then(inputs[a].y.total_cmp(&inputs[b].y))
            .then_with(|| {
                targets[a]
                    .iter()
                    .zip(&targets[b])
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
    });
    order
}

/// Boosts every output for up to `tree_count` rounds. A round whose trees
/// would push the total parameter count past the budget is discarded and
/// training stops. Returns the model and the training MSE before the first
/// round and after each accepted round.
pub fn train_with_history(
    inputs: &[Location],
    targets: &[Vec<f64>],
    config: &TrainConfig,
    role: ModelRole,
) -> Result<(TreeEnsembleModel, Vec<f64>)> {
    let d = validate(inputs, targets, config)?;
    let n = inputs.len();
    let order = canonical_order(inputs, targets);
    let xs = [
        order.iter().map(|&r| inputs[r].x).collect::<Vec<_>>(),
        order.iter().map(|&r| inputs[r].y).collect::<Vec<_>>(),
    ];

    // column-major residuals
    let mut resid = vec![0.0; d * n];
    for (pos, &r) in order.iter().enumerate() {
        for (o, &v) in targets[r].iter().enumerate() {
            resid[o * n + pos] = v;
        }
    }
    let mut base = vec![0.0; d];
    for (o, b) in base.iter_mut().enumerate() {
        let col = &mut resid[o * n..(o + 1) * n];
        *b = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|v| *v -= *b);
    }

    let mut grower = Grower::new(&xs, config);
    let mut trees: Vec<Vec<Tree>> = vec![Vec::new(); d];
    let mut params = d;
    let mut history = vec![mean_square(&resid)];
    for _ in 0..config.tree_count {
        let round: Vec<Option<(Tree, Vec<f64>)>> = (0..d).map(|o| grower.fit(&resid[o * n..(o + 1) * n])).collect();
        let added: usize = round.iter().flatten().map(|(t, _)| t.param_count()).sum();
        if added == 0 || params + added > config.budget_parameters {
            break;
        }
        params += added;
        for (o, fitted) in round.into_iter().enumerate() {
            if let Some((tree, fit)) = fitted {
                for (r, f) in resid[o * n..(o + 1) * n].iter_mut().zip(&fit) {
                    *r -= config.learning_rate * f;
                }
                trees[o].push(tree);
            }
        }
        history.push(mean_square(&resid));
    }
    Ok((
        TreeEnsembleModel {
            role,
            learning_rate: config.learning_rate,
            base,
            trees,
            config: *config,
        },
        history,
    ))
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|r| r * r).sum::<f64>() / v.len() as f64
}

/// Depth-first tree builder over presorted feature orders.
struct Grower<'a> {
    xs: &'a [Vec<f64>; 2],
    presorted: [Vec<u32>; 2],
    ord: [Vec<u32>; 2],
    tmp: Vec<u32>,
    goes_left: Vec<bool>,
    /// Leaf value of every row for the tree being grown.
    fit: Vec<f64>,
    max_depth: usize,
    min_leaf: usize,
}

impl<'a> Grower<'a> {
    fn new(xs: &'a [Vec<f64>; 2], config: &TrainConfig) -> Self {
        let n = xs[0].len();
        let sorted = |f: usize| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| xs[f][a as usize].total_cmp(&xs[f][b as usize]).then(a.cmp(&b)));
            idx
        };
        let presorted = [sorted(0), sorted(1)];
        Self {
            xs,
            ord: presorted.clone(),
            presorted,
            tmp: vec![0; n],
            goes_left: vec![false; n],
            fit: vec![0.0; n],
            max_depth: config.max_depth,
            min_leaf: config.min_samples_leaf,
        }
    }

    /// Fits one tree to `g`; `None` when the root cannot be split.
    fn fit(&mut self, g: &[f64]) -> Option<(Tree, Vec<f64>)> {
        for f in 0..2 {
            self.ord[f].copy_from_slice(&self.presorted[f]);
        }
        let mut nodes = Vec::new();
        self.grow(g, 0, g.len(), 0, &mut nodes);
        if nodes.len() == 1 {
            return None;
        }
        Some((Tree { nodes }, self.fit.clone()))
    }

    fn grow(&mut self, g: &[f64], lo: usize, hi: usize, depth: usize, nodes: &mut Vec<Node>) -> u32 {
        let n = hi - lo;
        let sum: f64 = self.ord[0][lo..hi].iter().map(|&i| g[i as usize]).sum();
        let me = nodes.len() as u32;
        let split = if depth < self.max_depth && n >= 2 * self.min_leaf {
            self.best_split(g, lo, hi, sum)
        } else {
            None
        };
        let Some((feature, n_left, threshold)) = split else {
            let value = sum / n as f64;
            for &i in &self.ord[0][lo..hi] {
                self.fit[i as usize] = value;
            }
            nodes.push(Node::Leaf(value));
            return me;
        };

        for (k, &i) in self.ord[feature][lo..hi].iter().enumerate() {
            self.goes_left[i as usize] = k < n_left;
        }
        let other = 1 - feature;
        let (mut l, mut r) = (lo, 0usize);
        for k in lo..hi {
            let i = self.ord[other][k];
            if self.goes_left[i as usize] {
                self.ord[other][l] = i;
                l += 1;
            } else {
                self.tmp[r] = i;
                r += 1;
            }
        }
        self.ord[other][l..hi].copy_from_slice(&self.tmp[..r]);

        nodes.push(Node::Split {
            feature: feature as u8,
            threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(g, lo, lo + n_left, depth + 1, nodes);
        let right = self.grow(g, lo + n_left, hi, depth + 1, nodes);
        if let Node::Split { left: l, right: r, .. } = &mut nodes[me as usize] {
            *l = left;
            *r = right;
        }
        me
    }

    /// Best `(feature, left size, threshold)` by squared-error reduction;
    /// ties keep the lower feature index, then the lower threshold.
    fn best_split(&self, g: &[f64], lo: usize, hi: usize, sum: f64) -> Option<(usize, usize, f64)> {
        let n = hi - lo;
        let parent = sum * sum / n as f64;
        let mut best: Option<(usize, usize, f64)> = None;
        let mut best_gain = MIN_GAIN;
        for f in 0..2 {
            let ord = &self.ord[f][lo..hi];
            let x = &self.xs[f];
            let mut sl = 0.0;
            for p in 0..n - 1 {
                sl += g[ord[p] as usize];
                let nl = p + 1;
                if nl < self.min_leaf {
                    continue;
                }
                if n - nl < self.min_leaf {
                    break;
                }
                let (a, b) = (x[ord[p] as usize], x[ord[p + 1] as usize]);
                if a == b {
                    continue;
                }
                let sr = sum - sl;
                let gain = sl * sl / nl as f64 + sr * sr / (n - nl) as f64 - parent;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((f, nl, midpoint(a, b)));
                }
            }
        }
        best
    }
}

/// Midpoint of `a < b`, kept strictly below `b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m < b {
        m
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(tree_count: usize, max_depth: usize, lr: f64, budget: usize) -> TrainConfig {
        TrainConfig {
            tree_count,
            max_depth,
            learning_rate: lr,
            min_samples_leaf: 1,
            budget_parameters: budget,
        }
    }

    fn structured(n: usize, d: usize, seed: u64) -> (Vec<Location>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let locs: Vec<Location> = (0..n)
            .map(|_| Location::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..50.0)))
            .collect();
        let targets = locs
            .iter()
            .map(|l| {
                (0..d)
                    .map(|o| {
                        let c = 5.0 + 40.0 * o as f64 / d as f64;
                        (-(l.y - c).powi(2) / 60.0 - (l.x - 5.0).powi(2) / 20.0).exp()
                    })
                    .collect()
            })
            .collect();
        (locs, targets)
    }

    #[test]
    fn constant_targets_give_base_only() {
        let (locs, _) = structured(30, 3, 1);
        let targets = vec![vec![0.3, 0.7, 1.0]; 30];
        let (m, hist) = train_with_history(&locs, &targets, &cfg(10, 3, 0.5, 1000), ModelRole::UeAtr).unwrap();
        assert_eq!(m.tree_total(), 0);
        assert_eq!(m.param_count(), 3);
        assert!(hist[0] < 1e-30);
        let p = m.predict(Location::new(3.0, 3.0));
        for (a, b) in p.iter().zip([0.3, 0.7, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn memorizes_twenty_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let locs: Vec<Location> = (0..20).map(|k| Location::new(k as f64, rng.gen_range(0.0..5.0))).collect();
        let targets: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let (m, hist) = train_with_history(&locs, &targets, &cfg(200, 6, 0.5, 100_000), ModelRole::UeAtr).unwrap();
        assert!(*hist.last().unwrap() < 1e-3);
        for (l, t) in locs.iter().zip(&targets) {
            for (p, v) in m.predict(*l).iter().zip(t) {
                assert!((p - v).abs() < 0.05);
            }
        }
    }

    #[test]
    fn loss_is_non_increasing() {
        let (locs, targets) = structured(300, 8, 2);
        let (_, hist) = train_with_history(&locs, &targets, &cfg(40, 3, 0.3, 100_000), ModelRole::UeAtr).unwrap();
        assert!(hist.len() > 5);
        for w in hist.windows(2) {
            assert!(w[1] <= w[0], "{hist:?}");
        }
    }

    #[test]
    fn budget_is_respected() {
        let (locs, targets) = structured(400, 1024, 3);
        let c = cfg(50, 2, 0.5, 2048);
        let m = train(&locs, &targets, &c, ModelRole::UeAtr).unwrap();
        assert!(m.param_count() <= 2048);
        assert_eq!(m.output_dimension(), 1024);
        let (locs, targets) = structured(400, 16, 3);
        let m = train(&locs, &targets, &cfg(500, 4, 0.5, 2048), ModelRole::UeAtr).unwrap();
        assert!(m.param_count() <= 2048);
        assert!(m.tree_total() >= 16);
    }

    #[test]
    fn errors_are_explicit() {
        let (locs, targets) = structured(10, 4, 4);
        assert!(matches!(
            train(&locs, &targets, &cfg(1, 1, 0.5, 3), ModelRole::UeAtr),
            Err(Error::BudgetTooSmall { budget: 3, needed: 4 })
        ));
        assert!(train(&[], &[], &cfg(1, 1, 0.5, 10), ModelRole::UeAtr).is_err());
        assert!(train(&locs, &targets[..9], &cfg(1, 1, 0.5, 100), ModelRole::UeAtr).is_err());
        let mut bad = targets.clone();
        bad[0][0] = 1.5;
        assert!(train(&locs, &bad, &cfg(1, 1, 0.5, 100), ModelRole::UeAtr).is_err());
    }

    #[test]
    fn threshold_is_midpoint_and_ties_prefer_x() {
        // identical information in x and y: the x split wins
        let locs: Vec<Location> = (0..4).map(|k| Location::new(k as f64, 10.0 * k as f64)).collect();
        let targets = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        let m = train(&locs, &targets, &cfg(1, 1, 1.0, 100), ModelRole::UeAtr).unwrap();
        match m.trees[0][0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(m.predict(Location::new(0.0, 0.0)), vec![0.0]);
        assert_eq!(m.predict(Location::new(3.0, 30.0)), vec![1.0]);
    }

    #[test]
    fn min_samples_leaf_is_enforced() {
        let (locs, targets) = structured(50, 2, 9);
        let mut c = cfg(5, 6, 0.5, 100_000);
        c.min_samples_leaf = 7;
        let m = train(&locs, &targets, &c, ModelRole::UeAtr).unwrap();
        let xs: Vec<[f64; 2]> = locs.iter().map(|l| [l.x, l.y]).collect();
        for t in m.trees.iter().flatten() {
            let mut counts = vec![0usize; t.nodes.len()];
            for f in &xs {
                let mut at = 0;
                while let Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } = t.nodes[at]
                {
                    at = if f[feature as usize] <= threshold { left } else { right } as usize;
                }
                counts[at] += 1;
            }
            for (k, node) in t.nodes.iter().enumerate() {
                if let Node::Leaf(_) = node {
                    assert!(counts[k] >= 7);
                }
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn row_order_does_not_matter(seed in 0u64..1000) {
            let (locs, targets) = structured(60, 3, seed);
            let c = cfg(6, 3, 0.4, 10_000);
            let a = train(&locs, &targets, &c, ModelRole::UeAtr).unwrap();
            let mut perm: Vec<usize> = (0..60).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 77));
            let l2: Vec<Location> = perm.iter().map(|&i| locs[i]).collect();
            let t2: Vec<Vec<f64>> = perm.iter().map(|&i| targets[i].clone()).collect();
            let b = train(&l2, &t2, &c, ModelRole::UeAtr).unwrap();
            proptest::prop_assert_eq!(a, b);
        }

        #[test]
        fn predictions_stay_in_unit_interval(seed in 0u64..1000, x in -100.0f64..100.0, y in -100.0f64..200.0) {
            let (locs, targets) = structured(40, 4, seed);
            let m = train(&locs, &targets, &cfg(8, 3, 1.0, 10_000), ModelRole::UeAtr).unwrap();
            let p = m.predict(Location::new(x, y));
            proptest::prop_assert_eq!(p.len(), 4);
            proptest::prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            proptest::prop_assert!(m.param_count() <= 10_000);
        }
    }
}
