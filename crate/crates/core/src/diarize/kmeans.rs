use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DiarizeError;
use crate::Scalar;

pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<T> {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    pub iterations: usize,
    /// Within-cluster sum of squared distances.
    pub inertia: T,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

fn nearest<T: Scalar>(point: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, sq_dist(point, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Seeded k-means++ followed by Lloyd iterations.
///
/// Iterates until the assignment reaches a fixpoint or 300 iterations.
/// Empty clusters are repaired by moving in the point farthest from its
/// centroid (taken from a cluster that keeps at least one member).
pub fn kmeans<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64) -> Result<KMeansFit<T>, DiarizeError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(DiarizeError::DegenerateInput(format!("k = {k} with {n} points")));
    }
    let dim = points[0].len();
    if let Some(index) = points.iter().position(|p| p.len() != dim) {
        return Err(DiarizeError::DimensionMismatch { index, expected: dim, got: points[index].len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut iterations = 0;

    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        repair_empty(points, &mut next, &mut centroids, k);
        if next == labels {
            break;
        }
        labels = next;
        centroids = update_centroids(points, &labels, k, dim);
    }

    let inertia = points
        .iter()
        .zip(&labels)
        .fold(T::zero(), |acc, (p, &l)| acc + sq_dist(p, &centroids[l]));
    Ok(KMeansFit { labels, centroids, iterations, inertia })
}

fn plus_plus_init<T: Scalar>(points: &[Vec<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]]).as_f64()).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total weight"))
        } else {
            // all remaining points coincide with a chosen centre
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(pick);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[pick]).as_f64());
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn repair_empty<T: Scalar>(points: &[Vec<T>], labels: &mut [usize], centroids: &mut [Vec<T>], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let mut donor: Option<(usize, T)> = None;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[labels[i]]);
            if donor.map_or(true, |(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let (i, _) = donor.expect("k <= n leaves a cluster with two members");
        labels[i] = empty;
        centroids[empty] = points[i].clone();
    }
}

fn update_centroids<T: Scalar>(points: &[Vec<T>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<T>> {
    let mut sums = vec![vec![T::zero(); dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, &v) in sums[l].iter_mut().zip(p) {
            *s = *s + v;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        let c = T::from_usize(count.max(1)).expect("count fits");
        for s in sum.iter_mut() {
            *s = *s / c;
        }
    }
    sums
}
