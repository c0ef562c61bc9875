use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense or sparse real vector. Sparse indices are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureVector {
    Dense(Vec<f64>),
    Sparse {
        dim: usize,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.len(),
            FeatureVector::Sparse { dim, .. } => *dim,
        }
    }

    pub fn norm(&self) -> f64 {
        self.nonzeros().map(|(_, x)| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.nonzeros().all(|(_, x)| x == 0.0)
    }

    /// (index, value) pairs; dense vectors yield every entry.
    pub fn nonzeros(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            FeatureVector::Dense(v) => Box::new(v.iter().copied().enumerate()),
            FeatureVector::Sparse { indices, values, .. } => {
                Box::new(indices.iter().copied().zip(values.iter().copied()))
            }
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        match self {
            FeatureVector::Dense(v) => v.get(index).copied().unwrap_or(0.0),
            FeatureVector::Sparse { indices, values, .. } => indices
                .binary_search(&index)
                .map(|pos| values[pos])
                .unwrap_or(0.0),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            FeatureVector::Dense(v) => v.clone(),
            FeatureVector::Sparse { dim, .. } => {
                let mut out = vec![0.0; *dim];
                for (i, x) in self.nonzeros() {
                    out[i] = x;
                }
                out
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> FeatureVector {
        match self {
            FeatureVector::Dense(v) => FeatureVector::Dense(v.iter().map(|x| x * factor).collect()),
            FeatureVector::Sparse { dim, indices, values } => FeatureVector::Sparse {
                dim: *dim,
                indices: indices.clone(),
                values: values.iter().map(|x| x * factor).collect(),
            },
        }
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        match (self, other) {
            (FeatureVector::Dense(a), FeatureVector::Dense(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (FeatureVector::Sparse { .. }, FeatureVector::Dense(_)) => other.dot(self),
            (FeatureVector::Dense(a), FeatureVector::Sparse { .. }) => {
                other.nonzeros().map(|(i, x)| a[i] * x).sum()
            }
            (
                FeatureVector::Sparse { indices: ia, values: va, .. },
                FeatureVector::Sparse { indices: ib, values: vb, .. },
            ) => {
                let (mut i, mut j, mut acc) = (0, 0, 0.0);
                while i < ia.len() && j < ib.len() {
                    match ia[i].cmp(&ib[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[i] * vb[j];
                            i += 1;
                            j += 1;
                        }
                    }
                }
                acc
            }
        }
    }
}

/// `dot(u, v) / (|u| |v|)`, clamped to [-1, 1].
pub fn cosine_similarity(u: &FeatureVector, v: &FeatureVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::Input(format!("dimension mismatch: {} vs {}", u.dim(), v.dim())));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    Ok((u.dot(v) / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(v: &[f64]) -> FeatureVector {
        FeatureVector::Dense(v.to_vec())
    }

    #[test]
    fn identity_orthogonal_and_scaling() {
        let u = dense(&[1.0, 2.0, 3.0]);
        assert!((cosine_similarity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&dense(&[1.0, 0.0]), &dense(&[0.0, 1.0])).unwrap(), 0.0);
        let v = dense(&[-1.0, 0.5, 2.0]);
        let a = cosine_similarity(&u, &v).unwrap();
        let b = cosine_similarity(&u.scaled(3.0), &v).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_is_a_domain_error() {
        let z = dense(&[0.0, 0.0]);
        assert!(matches!(cosine_similarity(&z, &dense(&[1.0, 0.0])), Err(Error::Domain(_))));
        assert!(matches!(cosine_similarity(&dense(&[1.0]), &dense(&[1.0, 0.0])), Err(Error::Input(_))));
    }

    #[test]
    fn sparse_and_dense_agree() {
        let s = FeatureVector::Sparse { dim: 5, indices: vec![1, 3], values: vec![2.0, -1.0] };
        let t = FeatureVector::Sparse { dim: 5, indices: vec![0, 3, 4], values: vec![1.0, 4.0, 1.0] };
        let (sd, td) = (dense(&s.to_dense()), dense(&t.to_dense()));
        assert_eq!(s.dot(&t), sd.dot(&td));
        assert_eq!(s.dot(&td), sd.dot(&t));
        assert_eq!(s.get(3), -1.0);
        assert_eq!(s.get(2), 0.0);
    }

    proptest! {
        #[test]
        fn cosine_symmetric_bounded(u in prop::collection::vec(-10.0f64..10.0, 4), v in prop::collection::vec(-10.0f64..10.0, 4)) {
            let (u, v) = (dense(&u), dense(&v));
            prop_assume!(u.norm() > 1e-9 && v.norm() > 1e-9);
            let a = cosine_similarity(&u, &v).unwrap();
            prop_assert_eq!(a, cosine_similarity(&v, &u).unwrap());
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
    }
}
