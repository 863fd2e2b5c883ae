use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scene::Location;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Location>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

fn nearest(p: &Location, centroids: &[Location]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, q) in centroids.iter().enumerate() {
        let d = p.dist2(q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn distinct_count(points: &[Location]) -> usize {
    let mut v: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v.dedup();
    v.len()
}

fn plus_plus_seeds(points: &[Location], c: usize, rng: &mut ChaCha8Rng) -> Vec<Location> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist2(&centroids[0])).collect();
    while centroids.len() < c {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("more distinct points than centroids");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let chosen = points[pick];
        centroids.push(chosen);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.dist2(&chosen));
        }
    }
    centroids
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster that can spare it.
fn reseed_empty(points: &[Location], centroids: &mut [Location], assign: &mut [usize]) {
    let mut sizes = vec![0usize; centroids.len()];
    assign.iter().for_each(|&a| sizes[a] += 1);
    for c in 0..centroids.len() {
        if sizes[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let d = p.dist2(&centroids[assign[i]]);
            if sizes[assign[i]] > 1 && d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        if let Some(i) = far {
            sizes[assign[i]] -= 1;
            assign[i] = c;
            sizes[c] = 1;
            centroids[c] = points[i];
        }
    }
}

fn means(points: &[Location], assign: &[usize], old: &[Location]) -> Vec<Location> {
    let mut acc = vec![(0.0, 0.0, 0usize); old.len()];
    for (p, &a) in points.iter().zip(assign) {
        acc[a].0 += p.x;
        acc[a].1 += p.y;
        acc[a].2 += 1;
    }
    acc.iter()
        .zip(old)
        .map(|(&(sx, sy, n), o)| if n == 0 { *o } else { Location::new(sx / n as f64, sy / n as f64) })
        .collect()
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iters` is reached. Returned centroids are the means of the
/// returned assignment and no cluster is empty.
pub fn kmeans(points: &[Location], c: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    if c == 0 {
        return Err(Error::InvalidArgument("cluster count must be positive".into()));
    }
    let distinct = distinct_count(points);
    if c > distinct {
        return Err(Error::TooManyClusters { requested: c, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seeds(points, c, &mut rng);
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut iterations = 0;
    loop {
        reseed_empty(points, &mut centroids, &mut assign);
        centroids = means(points, &assign, &centroids);
        if iterations == max_iters {
            break;
        }
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    Ok(KMeansResult {
        centroids,
        assignments: assign,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_cluster_is_the_mean() {
        let pts: Vec<Location> = (0..10).map(|k| Location::new(k as f64, (k * k) as f64)).collect();
        let r = kmeans(&pts, 1, 3, 100).unwrap();
        assert!((r.centroids[0].x - 4.5).abs() < 1e-12);
        assert!((r.centroids[0].y - 28.5).abs() < 1e-12);
        assert!(r.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn recovers_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let centers = [(0.0, 0.0), (40.0, 5.0), (10.0, 60.0)];
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (b, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..50 {
                pts.push(Location::new(cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)));
                truth.push(b);
            }
        }
        for seed in 0..5 {
            let r = kmeans(&pts, 3, seed, 100).unwrap();
            // each blob maps to exactly one cluster and vice versa
            let mut map = [usize::MAX; 3];
            for (t, a) in truth.iter().zip(&r.assignments) {
                if map[*t] == usize::MAX {
                    map[*t] = *a;
                }
                assert_eq!(map[*t], *a);
            }
            let mut m = map.to_vec();
            m.sort_unstable();
            assert_eq!(m, vec![0, 1, 2]);
        }
    }

    #[test]
    fn deterministic_and_nonempty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Location> = (0..300)
            .map(|_| Location::new(rng.gen_range(0.0..20.0), rng.gen_range(0.0..100.0)))
            .collect();
        let a = kmeans(&pts, 12, 9, 100).unwrap();
        assert_eq!(a, kmeans(&pts, 12, 9, 100).unwrap());
        let mut sizes = vec![0; 12];
        a.assignments.iter().for_each(|&c| sizes[c] += 1);
        assert!(sizes.iter().all(|&s| s > 0));
        for (p, &c) in pts.iter().zip(&a.assignments) {
            if a.iterations < 100 {
                assert_eq!(nearest(p, &a.centroids), c);
            }
        }
    }

    #[test]
    fn too_many_clusters_is_an_error() {
        let pts = vec![Location::new(1.0, 1.0), Location::new(1.0, 1.0), Location::new(2.0, 0.0)];
        assert!(matches!(kmeans(&pts, 3, 0, 10), Err(Error::TooManyClusters { requested: 3, distinct: 2 })));
        let r = kmeans(&pts, 2, 0, 10).unwrap();
        assert_ne!(r.assignments[0], r.assignments[2]);
    }
}
