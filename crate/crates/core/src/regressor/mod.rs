//! Multi-output gradient-boosted regression trees over raw `(x, y)` locations.
//!
//! Each output dimension is boosted independently with squared loss; all
//! outputs share hyperparameters and a single global parameter budget.
//! Parameter counting: 2 per internal node (feature id and threshold), 1 per
//! leaf, 1 per base prediction.

mod io;
mod train;
mod tune;

pub use io::{load_model, save_model};
pub use train::{train, train_with_history};
pub use tune::{kfold_tune, TuneReport};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scene::Location;

/// Which of the four location models an ensemble plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    /// Θ₁: coupled pair ratios at the BS, `|B|` outputs.
    Coupled,
    /// Θ₂,f: beamformer ATRs at the BS, `|F|` outputs.
    BsAtr,
    /// Θ₂,w: combiner ATRs at the UE when the BS also knows the location.
    UeAtr,
    /// Θ₃,w: combiner ATRs at the UE when the BS is location-blind.
    UeAtrNoLocation,
}

impl ModelRole {
    pub const ALL: [ModelRole; 4] = [
        ModelRole::Coupled,
        ModelRole::BsAtr,
        ModelRole::UeAtr,
        ModelRole::UeAtrNoLocation,
    ];

    /// UE models get `2·|B|`, BS models thirty times that.
    pub fn budget(self, n_w: usize, n_f: usize) -> usize {
        let b = n_w * n_f;
        match self {
            ModelRole::Coupled | ModelRole::BsAtr => 60 * b,
            ModelRole::UeAtr | ModelRole::UeAtrNoLocation => 2 * b,
        }
    }

    pub fn output_dimension(self, n_w: usize, n_f: usize) -> usize {
        match self {
            ModelRole::Coupled => n_w * n_f,
            ModelRole::BsAtr => n_f,
            ModelRole::UeAtr | ModelRole::UeAtrNoLocation => n_w,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ModelRole::Coupled => "theta1",
            ModelRole::BsAtr => "theta2_f",
            ModelRole::UeAtr => "theta2_w",
            ModelRole::UeAtrNoLocation => "theta3_w",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            ModelRole::Coupled => 0,
            ModelRole::BsAtr => 1,
            ModelRole::UeAtr => 2,
            ModelRole::UeAtrNoLocation => 3,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for ModelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelRole::Coupled => "Θ₁ (coupled pairs)",
            ModelRole::BsAtr => "Θ₂,f (BS ATR)",
            ModelRole::UeAtr => "Θ₂,w (UE ATR)",
            ModelRole::UeAtrNoLocation => "Θ₃,w (UE ATR, location-free BS)",
        })
    }
}

/// Boosting hyperparameters. The loss is always squared error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Maximum boosting rounds; each round adds at most one tree per output.
    pub tree_count: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    pub budget_parameters: usize,
}

fn default_min_samples_leaf() -> usize {
    2
}

impl TrainConfig {
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget_parameters = budget;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: u8,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf(f64),
}

/// Binary regression tree stored in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn eval(&self, features: [f64; 2]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    }
                }
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Split { .. } => 2,
                Node::Leaf(_) => 1,
            })
            .sum()
    }

    /// Length of the longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsembleModel {
    pub role: ModelRole,
    pub learning_rate: f64,
    pub base: Vec<f64>,
    /// `trees[o]` is the ensemble for output `o`.
    pub trees: Vec<Vec<Tree>>,
    /// Hyperparameters the model was trained with.
    pub config: TrainConfig,
}

impl TreeEnsembleModel {
    pub fn output_dimension(&self) -> usize {
        self.base.len()
    }

    /// Base plus shrunken tree outputs, clipped to `[0, 1]`.
    pub fn predict(&self, location: Location) -> Vec<f64> {
        let f = [location.x, location.y];
        self.base
            .iter()
            .zip(&self.trees)
            .map(|(&b, ts)| {
                let mut acc = b;
                for t in ts {
                    acc += self.learning_rate * t.eval(f);
                }
                acc.clamp(0.0, 1.0)
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.base.len() + self.trees.iter().flatten().map(Tree::param_count).sum::<usize>()
    }

    pub fn tree_total(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// `hist[d]` = number of trees of depth `d`.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let mut hist = Vec::new();
        for t in self.trees.iter().flatten() {
            let d = t.depth();
            if hist.len() <= d {
                hist.resize(d + 1, 0);
            }
            hist[d] += 1;
        }
        hist
    }
}

/// Anything that maps a location to a ratio vector.
pub trait RatioPredictor {
    fn output_dimension(&self) -> usize;
    fn predict(&self, location: Location) -> Vec<f64>;
}

impl RatioPredictor for TreeEnsembleModel {
    fn output_dimension(&self) -> usize {
        TreeEnsembleModel::output_dimension(self)
    }

    fn predict(&self, location: Location) -> Vec<f64> {
        TreeEnsembleModel::predict(self, location)
    }
}
