use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use super::kmeans::kmeans;
use super::rank_desc;
use crate::codec::{read_file, write_atomic, Reader, Writer};
use crate::error::{Error, Result};
use crate::scene::Location;

const MAGIC: &[u8; 4] = b"BTPL";
const VERSION: u32 = 1;
const KMEANS_MAX_ITERS: usize = 100;

/// `P^(k)(j)`: fraction of `rows` whose `k`-th best beam (1-based, lowest
/// index among equal ATRs) is `j`.
pub fn kth_best_probability(rows: &[&[f64]], k: usize) -> Result<Vec<f64>> {
    let n_f = rows.first().ok_or(Error::EmptyCluster(0))?.len();
    if k == 0 || k > n_f {
        return Err(Error::InvalidArgument(format!("rank {k} outside 1..={n_f}")));
    }
    let mut p = vec![0.0; n_f];
    for r in rows {
        if r.len() != n_f {
            return Err(Error::Dimension {
                expected: n_f,
                got: r.len(),
                context: "ATR row width",
            });
        }
        p[rank_desc(r)[k - 1]] += 1.0;
    }
    p.iter_mut().for_each(|v| *v /= rows.len() as f64);
    Ok(p)
}

/// Offline BS beam plan for the location-free scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCoveragePlan {
    pub centroids: Vec<Location>,
    pub assignments: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
    /// `N_c / N_d`, or all ones when significance weighting is off.
    pub significances: Vec<f64>,
    pub use_significance: bool,
    /// `probabilities[c][k-1][j]`.
    pub probabilities: Vec<Vec<Vec<f64>>>,
    /// `candidates[c][k-1]`: beams with nonzero probability, most probable
    /// first.
    pub candidates: Vec<Vec<Vec<usize>>>,
    /// Every beamformer in selection order; `S_f` for budget `N_BS` is the
    /// first `N_BS` entries.
    pub order: Vec<usize>,
}

impl ClusterCoveragePlan {
    pub fn beam_count(&self) -> usize {
        self.order.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn s_f(&self, n_bs: usize) -> Result<&[usize]> {
        self.order.get(..n_bs).ok_or_else(|| {
            Error::InvalidArgument(format!("plan holds {} beams, {n_bs} requested", self.order.len()))
        })
    }
}

/// Clusters training locations, tabulates per-cluster rank probabilities of
/// the beamformer ATRs and greedily orders beams by their significance-weighted
/// probability, visiting rank `k = 1, 2, …` and within each rank the `ℓ`-th
/// most probable beam of every cluster.
pub fn select_bs_coverage(
    locations: &[Location],
    atr_f: &[Vec<f64>],
    clusters: usize,
    seed: u64,
    use_significance: bool,
) -> Result<ClusterCoveragePlan> {
    if locations.len() != atr_f.len() {
        return Err(Error::Dimension {
            expected: locations.len(),
            got: atr_f.len(),
            context: "ATR rows per location",
        });
    }
    let n_f = atr_f.first().ok_or(Error::TooFewRows { needed: 1, have: 0 })?.len();
    if atr_f.iter().any(|r| r.len() != n_f) {
        return Err(Error::InvalidArgument("ragged ATR rows".into()));
    }
    let km = kmeans(locations, clusters, seed, KMEANS_MAX_ITERS)?;
    let n_d = locations.len();
    let mut cluster_sizes = vec![0usize; clusters];
    km.assignments.iter().for_each(|&c| cluster_sizes[c] += 1);
    let significances: Vec<f64> = if use_significance {
        cluster_sizes.iter().map(|&s| s as f64 / n_d as f64).collect()
    } else {
        vec![1.0; clusters]
    };

    // rank tables: probabilities[c][k][j]
    let mut probabilities = vec![vec![vec![0.0; n_f]; n_f]; clusters];
    for (row, &c) in atr_f.iter().zip(&km.assignments) {
        for (k, &j) in rank_desc(row).iter().enumerate() {
            probabilities[c][k][j] += 1.0;
        }
    }
    for (c, table) in probabilities.iter_mut().enumerate() {
        if cluster_sizes[c] == 0 {
            return Err(Error::EmptyCluster(c));
        }
        let n = cluster_sizes[c] as f64;
        table.iter_mut().flatten().for_each(|v| *v /= n);
    }
    let candidates: Vec<Vec<Vec<usize>>> = probabilities
        .iter()
        .map(|table| {
            table
                .iter()
                .map(|p| rank_desc(p).into_iter().take_while(|&j| p[j] > 0.0).collect())
                .collect()
        })
        .collect();

    let mut order = Vec::with_capacity(n_f);
    let mut taken = vec![false; n_f];
    'ranks: for k in 0..n_f {
        let depth = candidates.iter().map(|c| c[k].len()).max().unwrap_or(0);
        for l in 0..depth {
            let mut pool: Vec<usize> = candidates.iter().filter_map(|c| c[k].get(l).copied()).collect();
            pool.sort_unstable();
            pool.dedup();
            let score = |j: usize| -> f64 {
                (0..clusters).map(|c| significances[c] * probabilities[c][k][j]).sum()
            };
            let scores: Vec<f64> = pool.iter().map(|&j| score(j)).collect();
            let mut idx: Vec<usize> = (0..pool.len()).collect();
            idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(pool[a].cmp(&pool[b])));
            for &i in &idx {
                let j = pool[i];
                if !taken[j] {
                    taken[j] = true;
                    order.push(j);
                    if order.len() == n_f {
                        break 'ranks;
                    }
                }
            }
        }
    }
    if order.len() < n_f {
        warn!("{} beams never ranked in any cluster; appending by index", n_f - order.len());
        order.extend((0..n_f).filter(|&j| !taken[j]));
    }

    Ok(ClusterCoveragePlan {
        centroids: km.centroids,
        assignments: km.assignments,
        cluster_sizes,
        significances,
        use_significance,
        probabilities,
        candidates,
        order,
    })
}

pub fn save_plan(path: &Path, plan: &ClusterCoveragePlan) -> Result<()> {
    let mut w = Writer::new(MAGIC, VERSION);
    w.u8(plan.use_significance as u8);
    w.usize(plan.cluster_count());
    w.usize(plan.beam_count());
    for c in &plan.centroids {
        w.f64(c.x);
        w.f64(c.y);
    }
    w.usizes(&plan.cluster_sizes);
    w.f64s(&plan.significances);
    w.usizes(&plan.assignments);
    for table in &plan.probabilities {
        for p in table {
            p.iter().for_each(|&v| w.f64(v));
        }
    }
    w.usizes(&plan.order);
    write_atomic(path, &w.finish())
}

pub fn load_plan(path: &Path) -> Result<ClusterCoveragePlan> {
    let bytes = read_file(path)?;
    let mut r = Reader::new(&bytes, path, MAGIC, VERSION)?;
    let use_significance = r.u8()? != 0;
    let clusters = r.usize()?;
    let n_f = r.usize()?;
    if clusters.saturating_mul(n_f).saturating_mul(n_f).saturating_mul(8) > bytes.len() {
        return Err(r.error("table sizes exceed file size"));
    }
    let centroids = (0..clusters)
        .map(|_| Ok(Location::new(r.f64()?, r.f64()?)))
        .collect::<Result<Vec<_>>>()?;
    let cluster_sizes = r.usizes()?;
    let significances = r.f64s()?;
    let assignments = r.usizes()?;
    if cluster_sizes.len() != clusters || significances.len() != clusters || assignments.iter().any(|&a| a >= clusters) {
        return Err(r.error("inconsistent cluster tables"));
    }
    let mut probabilities = Vec::with_capacity(clusters);
    for _ in 0..clusters {
        let mut table = Vec::with_capacity(n_f);
        for _ in 0..n_f {
            table.push((0..n_f).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
        }
        probabilities.push(table);
    }
    let order = r.usizes()?;
    r.finish()?;
    let mut seen = vec![false; n_f];
    if order.len() != n_f || order.iter().any(|&j| j >= n_f || std::mem::replace(&mut seen[j], true)) {
        return Err(Error::malformed(path, "beam order is not a permutation"));
    }
    let candidates = probabilities
        .iter()
        .map(|table: &Vec<Vec<f64>>| {
            table
                .iter()
                .map(|p| rank_desc(p).into_iter().take_while(|&j| p[j] > 0.0).collect())
                .collect()
        })
        .collect();
    Ok(ClusterCoveragePlan {
        centroids,
        assignments,
        cluster_sizes,
        significances,
        use_significance,
        probabilities,
        candidates,
        order,
    })
}

/// `position,beam` for the selection order and
/// `cluster,centroid_x,centroid_y,size,alpha` for the clusters.
pub fn write_plan_csvs(plan: &ClusterCoveragePlan, order_path: &Path, clusters_path: &Path) -> Result<()> {
    let mut s = String::from("position,beam\n");
    for (p, j) in plan.order.iter().enumerate() {
        let _ = writeln!(s, "{},{}", p + 1, j);
    }
    write_atomic(order_path, s.as_bytes())?;
    let mut s = String::from("cluster,centroid_x,centroid_y,size,alpha\n");
    for c in 0..plan.cluster_count() {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{},{:.9}",
            c, plan.centroids[c].x, plan.centroids[c].y, plan.cluster_sizes[c], plan.significances[c]
        );
    }
    write_atomic(clusters_path, s.as_bytes())
}
