//! Beam subset selection for the three scenarios: coupled top-`N_B` pairs,
//! decoupled ATR-max with location on both sides, and decoupled with a
//! location-free BS set built offline from clustered training rows.

mod coverage;
mod kmeans;

pub use coverage::{
    kth_best_probability, load_plan, save_plan, select_bs_coverage, write_plan_csvs, ClusterCoveragePlan,
};
pub use kmeans::{kmeans, KMeansResult};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::pair_index;
use crate::regressor::RatioPredictor;
use crate::scene::Location;

/// Serialised as its number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    /// BS picks pairs jointly from the UE location and signals the combiners.
    Coupled,
    /// Each side picks its own beams from the UE location.
    DecoupledWithLocation,
    /// UE picks combiners from its location; BS uses a fixed coverage set.
    DecoupledNoLocation,
}

impl TryFrom<u8> for Scenario {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        Scenario::from_number(n).ok_or_else(|| format!("unknown scenario {n}"))
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.number()
    }
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::Coupled,
        Scenario::DecoupledWithLocation,
        Scenario::DecoupledNoLocation,
    ];

    pub fn number(self) -> u8 {
        match self {
            Scenario::Coupled => 1,
            Scenario::DecoupledWithLocation => 2,
            Scenario::DecoupledNoLocation => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.number() == n)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// All indices ordered by descending value; equal values keep ascending
/// index order. Every top-`k` set is a prefix of this ranking.
pub fn rank_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Indices of the `k` largest values, lowest index first among ties.
pub fn top_k(values: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > values.len() {
        return Err(Error::InvalidArgument(format!("cannot pick {k} of {} beams", values.len())));
    }
    let mut r = rank_desc(values);
    r.truncate(k);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeamPairSet {
    /// `(combiner i, beamformer j)`, best predicted first.
    pub pairs: Vec<(usize, usize)>,
}

impl BeamPairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn flat_indices(&self, n_f: usize) -> Vec<usize> {
        self.pairs.iter().map(|&(i, j)| pair_index(i, j, n_f)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoupledSets {
    pub s_w: Vec<usize>,
    pub s_f: Vec<usize>,
}

impl DecoupledSets {
    pub fn pair_count(&self) -> usize {
        self.s_w.len() * self.s_f.len()
    }

    /// The Cartesian product `S_w × S_f`.
    pub fn pairs(&self) -> BeamPairSet {
        BeamPairSet {
            pairs: self
                .s_w
                .iter()
                .flat_map(|&i| self.s_f.iter().map(move |&j| (i, j)))
                .collect(),
        }
    }
}

/// Bits the BS sends the UE before sweeping: the combiner index of every
/// selected pair in the coupled scenario, nothing otherwise.
pub fn overhead_bits(scenario: Scenario, set_size: usize, n_w: usize) -> Result<u64> {
    if !n_w.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("combiner codebook size {n_w} is not a power of two")));
    }
    Ok(match scenario {
        Scenario::Coupled => set_size as u64 * n_w.trailing_zeros() as u64,
        Scenario::DecoupledWithLocation | Scenario::DecoupledNoLocation => 0,
    })
}

fn check_dim(p: &dyn RatioPredictor, expected: usize, context: &'static str) -> Result<()> {
    if p.output_dimension() != expected {
        return Err(Error::Dimension {
            expected,
            got: p.output_dimension(),
            context,
        });
    }
    Ok(())
}

pub fn select_coupled(g: &dyn RatioPredictor, location: Location, n_b: usize, n_w: usize, n_f: usize) -> Result<BeamPairSet> {
    check_dim(g, n_w * n_f, "coupled predictor outputs")?;
    let top = top_k(&g.predict(location), n_b)?;
    Ok(BeamPairSet {
        pairs: top.into_iter().map(|n| (n / n_f, n % n_f)).collect(),
    })
}

pub fn select_decoupled_with_location(
    g_f: &dyn RatioPredictor,
    g_w: &dyn RatioPredictor,
    location: Location,
    s_w: usize,
    s_f: usize,
) -> Result<DecoupledSets> {
    if s_w > g_w.output_dimension() || s_f > g_f.output_dimension() {
        return Err(Error::InvalidArgument(format!(
            "split {s_w}×{s_f} does not fit codebooks {}×{}",
            g_w.output_dimension(),
            g_f.output_dimension()
        )));
    }
    Ok(DecoupledSets {
        s_w: top_k(&g_w.predict(location), s_w)?,
        s_f: top_k(&g_f.predict(location), s_f)?,
    })
}

/// The BS side is the first `n_bs` beams of the plan, identical for every UE.
pub fn select_decoupled_no_location(
    g_w: &dyn RatioPredictor,
    location: Location,
    s_w: usize,
    plan: &ClusterCoveragePlan,
    n_bs: usize,
) -> Result<DecoupledSets> {
    Ok(DecoupledSets {
        s_w: top_k(&g_w.predict(location), s_w)?,
        s_f: plan.s_f(n_bs)?.to_vec(),
    })
}

/// Fixed-output predictor, handy for injecting known ratio vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPredictor(pub Vec<f64>);

impl RatioPredictor for ConstantPredictor {
    fn output_dimension(&self) -> usize {
        self.0.len()
    }

    fn predict(&self, _location: Location) -> Vec<f64> {
        self.0.clone()
    }
}
