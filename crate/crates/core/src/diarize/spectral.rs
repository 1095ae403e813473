use super::{kmeans, AffinityMatrix, DiarizeError};
use crate::linalg::symmetric_eigen;
use crate::Scalar;

/// Rows of the `m` eigenvectors with largest eigenvalues, each row scaled to
/// unit length (all-zero rows are left as is).
pub fn spectral_embedding<T: Scalar>(a: &AffinityMatrix<T>, m: usize) -> Result<Vec<Vec<T>>, DiarizeError> {
    let n = a.n();
    if m == 0 || m > n {
        return Err(DiarizeError::DegenerateInput(format!("{m} clusters requested for {n} rows")));
    }
    let eig = symmetric_eigen(a.entries(), n)?;
    let columns: Vec<usize> = (0..m).map(|k| n - 1 - k).collect();
    Ok((0..n)
        .map(|i| {
            let row: Vec<T> = columns.iter().map(|&c| eig.vectors[i * n + c]).collect();
            let norm = row.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
            if norm > T::zero() {
                row.into_iter().map(|v| v / norm).collect()
            } else {
                row
            }
        })
        .collect())
}

/// Partitions affinity rows into `m` speakers.
///
/// Labels are renumbered in order of first appearance, so row 0 is always
/// cluster 0.
pub fn spectral_cluster<T: Scalar>(a: &AffinityMatrix<T>, m: usize, seed: u64) -> Result<Vec<usize>, DiarizeError> {
    let n = a.n();
    if m == 0 {
        return Err(DiarizeError::DegenerateInput("speaker count must be at least 1".into()));
    }
    if m > n {
        return Err(DiarizeError::DegenerateInput(format!("{m} speakers but only {n} windows")));
    }
    if m == 1 {
        return Ok(vec![0; n]);
    }
    let rows = spectral_embedding(a, m)?;
    let fit = kmeans(&rows, m, seed)?;
    Ok(first_appearance_order(&fit.labels, m))
}

fn first_appearance_order(labels: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(sizes: &[usize]) -> AffinityMatrix<f64> {
        let n: usize = sizes.iter().sum();
        let mut owner = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat(b).take(s));
        }
        let entries = (0..n * n)
            .map(|idx| if owner[idx / n] == owner[idx % n] { 1.0 } else { 0.0 })
            .collect();
        AffinityMatrix::from_entries(n, entries).unwrap()
    }

    /// Partition of 0..n maximizing the summed within-cluster affinity.
    fn brute_force_two(a: &AffinityMatrix<f64>) -> Vec<bool> {
        let n = a.n();
        let mut best = (f64::NEG_INFINITY, vec![]);
        for mask in 1..(1u32 << n) - 1 {
            let side: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
            let score: f64 = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| side[i] == side[j])
                .map(|(i, j)| a.get(i, j))
                .sum();
            if score > best.0 {
                best = (score, side);
            }
        }
        best.1
    }

    #[test]
    fn single_speaker() {
        assert_eq!(spectral_cluster(&blocks(&[4]), 1, 0).unwrap(), vec![0; 4]);
    }

    #[test]
    fn two_blocks_match_brute_force() {
        let a = blocks(&[3, 3]);
        let labels = spectral_cluster(&a, 2, 5).unwrap();
        let oracle = brute_force_two(&a);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(labels[i] == labels[j], oracle[i] == oracle[j]);
            }
        }
    }

    #[test]
    fn m_equal_n_gives_singletons() {
        let a = blocks(&[1, 1, 1, 1]);
        let mut labels = spectral_cluster(&a, 4, 2).unwrap();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn too_many_speakers() {
        assert!(matches!(spectral_cluster(&blocks(&[2]), 3, 0), Err(DiarizeError::DegenerateInput(_))));
    }

    #[test]
    fn every_cluster_index_appears() {
        let a = blocks(&[2, 5, 3]);
        let labels = spectral_cluster(&a, 3, 11).unwrap();
        for c in 0..3 {
            assert!(labels.contains(&c));
        }
        assert_eq!(labels[0], 0);
    }
}
