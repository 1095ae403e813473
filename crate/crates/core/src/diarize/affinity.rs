use super::DiarizeError;
use crate::featureio::EmbeddingVector;
use crate::Scalar;

/// Symmetric `n × n` cosine-similarity matrix, row-major, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> AffinityMatrix<T> {
    /// Wraps raw entries after checking shape, symmetry, diagonal and range.
    pub fn from_entries(n: usize, entries: Vec<T>) -> Result<Self, DiarizeError> {
        if entries.len() != n * n {
            return Err(DiarizeError::DegenerateInput(format!("{} entries for a {n}×{n} matrix", entries.len())));
        }
        let tol = T::lit(1e-9);
        for i in 0..n {
            if (entries[i * n + i] - T::one()).abs() > tol {
                return Err(DiarizeError::DegenerateInput(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() || v > T::one() + tol || v < -T::one() - tol {
                    return Err(DiarizeError::DegenerateInput(format!("entry ({i},{j}) outside [-1, 1]")));
                }
                if (v - entries[j * n + i]).abs() > tol {
                    return Err(DiarizeError::DegenerateInput(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// `P A Pᵀ` for the row order `perm` (row `i` of the result is row
    /// `perm[i]` of `self`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self { n, entries }
    }
}

/// Cosine similarity between every pair of embeddings.
pub fn affinity<T: Scalar>(embeddings: &[EmbeddingVector<T>]) -> Result<AffinityMatrix<T>, DiarizeError> {
    let n = embeddings.len();
    if n < 2 {
        return Err(DiarizeError::DegenerateInput(format!("affinity needs at least 2 embeddings, got {n}")));
    }
    let dim = embeddings[0].dim();
    let mut unit = Vec::with_capacity(n);
    for (index, e) in embeddings.iter().enumerate() {
        if e.dim() != dim {
            return Err(DiarizeError::DimensionMismatch { index, expected: dim, got: e.dim() });
        }
        unit.push(e.normalized().ok_or(DiarizeError::ZeroVector { index })?);
    }

    let mut entries = vec![T::zero(); n * n];
    for i in 0..n {
        entries[i * n + i] = T::one();
        for j in 0..i {
            let dot = unit[i]
                .components
                .iter()
                .zip(&unit[j].components)
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            let v = dot.max(-T::one()).min(T::one());
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(AffinityMatrix { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vecs(rows: &[&[f64]]) -> Vec<EmbeddingVector<f64>> {
        rows.iter().map(|r| EmbeddingVector::new(r.to_vec())).collect()
    }

    #[test]
    fn identical_vectors() {
        let a = affinity(&vecs(&[&[0.3, 0.4], &[0.3, 0.4]])).unwrap();
        assert_eq!(a.entries(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn orthogonal_vectors() {
        let a = affinity(&vecs(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn forty_five_degrees() {
        let a = affinity(&vecs(&[&[1.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((a.get(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(affinity(&vecs(&[&[1.0, 0.0], &[0.0, 0.0]])), Err(DiarizeError::ZeroVector { index: 1 })));
        assert!(matches!(
            affinity(&vecs(&[&[1.0, 0.0], &[1.0]])),
            Err(DiarizeError::DimensionMismatch { index: 1, expected: 2, got: 1 })
        ));
        assert!(matches!(affinity(&vecs(&[&[1.0]])), Err(DiarizeError::DegenerateInput(_))));
    }

    #[test]
    fn invariants_hold_for_f32() {
        let e: Vec<EmbeddingVector<f32>> = (0..6)
            .map(|i| EmbeddingVector::new(vec![(i as f32).sin(), (i as f32 * 0.7).cos(), 0.2]))
            .collect();
        let a = affinity(&e).unwrap();
        let checked = AffinityMatrix::from_entries(a.n(), a.entries().to_vec());
        assert!(checked.is_ok());
    }
}
