//! CART random forest (Gini impurity, bootstrap rows, random feature
//! subsets) over sparse rows.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(dim))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        /// Nonzero class frequencies at the leaf, summing to 1.
        dist: Vec<(usize, f64)>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    config: ForestConfig,
    n_classes: usize,
    dim: usize,
    trees: Vec<Tree>,
}

/// Sparse row with strictly increasing indices.
type Row = Vec<(usize, f64)>;

fn to_row(v: &FeatureVector) -> Row {
    v.nonzeros().filter(|(_, x)| *x != 0.0).collect()
}

fn value(row: &Row, feature: usize) -> f64 {
    row.binary_search_by_key(&feature, |&(i, _)| i)
        .map(|pos| row[pos].1)
        .unwrap_or(0.0)
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    rows: &'a [Row],
    labels: &'a [usize],
    n_classes: usize,
    dim: usize,
    config: &'a ForestConfig,
    mtry: usize,
}

impl Builder<'_> {
    fn counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &s in samples {
            c[self.labels[s]] += 1;
        }
        c
    }

    fn leaf(&self, samples: &[usize]) -> Node {
        let c = self.counts(samples);
        let t = samples.len() as f64;
        Node::Leaf {
            dist: c
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(k, &x)| (k, x as f64 / t))
                .collect(),
        }
    }

    /// Best (feature, threshold, impurity decrease) over a random feature
    /// subset. Features constant at the node are skipped without counting
    /// toward `mtry`; only features nonzero somewhere in the node can vary.
    fn best_split(&self, samples: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let mut present: Vec<usize> = samples.iter().flat_map(|&s| self.rows[s].iter().map(|&(i, _)| i)).collect();
        present.sort_unstable();
        present.dedup();
        present.shuffle(rng);

        let parent = self.counts(samples);
        let n = samples.len();
        let parent_gini = gini(&parent, n);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut tried = 0;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
        for &feature in &present {
            if tried >= self.mtry {
                break;
            }
            pairs.clear();
            pairs.extend(samples.iter().map(|&s| (value(&self.rows[s], feature), self.labels[s])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[n - 1].0 {
                continue;
            }
            tried += 1;
            let mut left = vec![0usize; self.n_classes];
            let mut right = parent.clone();
            let min_leaf = self.config.min_samples_leaf;
            for i in 0..n - 1 {
                let y = pairs[i].1;
                left[y] += 1;
                right[y] -= 1;
                if pairs[i].0 == pairs[i + 1].0 {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let weighted = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let gain = parent_gini - weighted;
                if best.map_or(true, |(_, _, g)| gain > g) {
                    best = Some((feature, 0.5 * (pairs[i].0 + pairs[i + 1].0), gain));
                }
            }
        }
        best.filter(|&(_, _, g)| g > 0.0).map(|(f, t, _)| (f, t))
    }

    fn grow(&self, samples: Vec<usize>, depth: usize, nodes: &mut Vec<Node>, rng: &mut ChaCha8Rng) -> usize {
        let id = nodes.len();
        nodes.push(Node::Leaf { dist: Vec::new() });
        let counts = self.counts(&samples);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let too_deep = self.config.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || too_deep || samples.len() < self.config.min_samples_split {
            None
        } else {
            self.best_split(&samples, rng)
        };
        match split {
            None => nodes[id] = self.leaf(&samples),
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = samples
                    .iter()
                    .partition(|&&s| value(&self.rows[s], feature) <= threshold);
                let left = self.grow(l, depth + 1, nodes, rng);
                let right = self.grow(r, depth + 1, nodes, rng);
                nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        id
    }
}

impl Tree {
    fn leaf_dist(&self, row: &Row) -> &[(usize, f64)] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { dist } => return dist,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if value(row, *feature) <= *threshold { *left } else { *right },
            }
        }
    }
}

impl RandomForest {
    /// Fits on feature vectors with class indices in `0..n_classes`.
    pub fn fit(features: &[FeatureVector], labels: &[usize], n_classes: usize, config: &ForestConfig) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::Input(format!("{} feature rows for {} labels", features.len(), labels.len())));
        }
        if config.n_trees == 0 || config.min_samples_leaf == 0 {
            return Err(Error::Range("n_trees and min_samples_leaf must be positive".into()));
        }
        let dim = features[0].dim();
        if features.iter().any(|f| f.dim() != dim) || dim == 0 {
            return Err(Error::Input("feature rows must share a positive dimension".into()));
        }
        if labels.iter().any(|&y| y >= n_classes) {
            return Err(Error::Input("label index out of range".into()));
        }
        let rows: Vec<Row> = features.iter().map(to_row).collect();
        let mtry = config
            .max_features
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim);
        let builder = Builder {
            rows: &rows,
            labels,
            n_classes,
            dim,
            config,
            mtry,
        };
        let n = rows.len();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9E37_79B9).wrapping_add(t as u64));
                let samples: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut nodes = Vec::new();
                builder.grow(samples, 0, &mut nodes, &mut rng);
                Tree { nodes }
            })
            .collect();
        Ok(Self {
            config: *config,
            n_classes,
            dim: builder.dim,
            trees,
        })
    }

    /// Mean of leaf class frequencies across trees.
    pub fn predict_proba(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        if features.dim() != self.dim {
            return Err(Error::Input(format!("expected {} features, got {}", self.dim, features.dim())));
        }
        let row = to_row(features);
        let mut out = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for &(k, p) in tree.leaf_dist(&row) {
                out[k] += p;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        Ok(out)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(v: &[f64]) -> FeatureVector {
        FeatureVector::Dense(v.to_vec())
    }

    #[test]
    fn separable_two_class_is_fit_exactly() {
        let x: Vec<_> = (0..20).map(|i| dense(&[i as f64, (i % 3) as f64])).collect();
        let y: Vec<_> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let f = RandomForest::fit(&x, &y, 2, &ForestConfig { n_trees: 15, ..Default::default() }).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            let p = f.predict_proba(xi).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(usize::from(p[1] > p[0]), yi);
        }
    }

    #[test]
    fn seeded_fits_are_identical() {
        let x: Vec<_> = (0..30).map(|i| dense(&[(i * 7 % 11) as f64, (i % 5) as f64, (i % 2) as f64])).collect();
        let y: Vec<_> = (0..30).map(|i| i % 3).collect();
        let cfg = ForestConfig { n_trees: 10, seed: 3, ..Default::default() };
        let a = RandomForest::fit(&x, &y, 3, &cfg).unwrap();
        let b = RandomForest::fit(&x, &y, 3, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_rows_split_on_present_features() {
        let x = vec![
            FeatureVector::Sparse { dim: 100, indices: vec![3], values: vec![1.0] },
            FeatureVector::Sparse { dim: 100, indices: vec![3], values: vec![0.8] },
            FeatureVector::Sparse { dim: 100, indices: vec![70], values: vec![1.0] },
            FeatureVector::Sparse { dim: 100, indices: vec![70], values: vec![0.9] },
        ];
        let y = vec![0, 0, 1, 1];
        let f = RandomForest::fit(&x, &y, 2, &ForestConfig { n_trees: 5, bootstrap: false, ..Default::default() }).unwrap();
        assert!(f.predict_proba(&x[0]).unwrap()[0] > 0.99);
        assert!(f.predict_proba(&x[3]).unwrap()[1] > 0.99);
    }

    #[test]
    fn bad_inputs() {
        assert!(RandomForest::fit(&[], &[], 2, &ForestConfig::default()).is_err());
        assert!(RandomForest::fit(&[dense(&[1.0])], &[5], 2, &ForestConfig::default()).is_err());
    }
}
