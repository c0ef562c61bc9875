//! Three classifier families behind one prediction contract.

mod classical;
mod finetuned;
mod forest;
mod persist;
mod zeroshot;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use classical::{classical_train, ClassicalConfig, ClassicalModel, FeaturePipeline, FeatureSource};
pub use finetuned::{finetune, write_epoch_log, EpochLog, FineTunedModel, TrainingConfig};
pub use forest::{ForestConfig, RandomForest};
pub use persist::{load_model, save_model, AnyModel, MODEL_FORMAT_VERSION};
pub use zeroshot::{zeroshot_build, ZeroShotModel};

use crate::error::{Error, Result};
use crate::text::normalize;

/// Number of ranked alternatives kept on a [`Prediction`].
pub const TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    ZeroShot,
    Classical,
    FineTuned,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::ZeroShot => "zeroshot",
            Family::Classical => "classical",
            Family::FineTuned => "finetuned",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeroshot" => Ok(Family::ZeroShot),
            "classical" => Ok(Family::Classical),
            "finetuned" => Ok(Family::FineTuned),
            other => Err(Error::Input(format!(
                "unknown classifier family {other:?} (expected zeroshot, classical or finetuned)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Similarity,
    Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub score: f64,
    pub kind: ScoreKind,
    /// Best classes first; equal scores ordered by class code.
    pub topk: Vec<(String, f64)>,
}

impl Prediction {
    /// Ranks `scores` (aligned with `labels`) and keeps the best `k`.
    pub fn from_scores(labels: &[String], scores: &[f64], kind: ScoreKind, k: usize) -> Result<Self> {
        if labels.is_empty() || labels.len() != scores.len() {
            return Err(Error::Input(format!(
                "{} labels for {} scores",
                labels.len(),
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("non-finite class score {bad}")));
        }
        let mut ranked: Vec<(String, f64)> = labels.iter().cloned().zip(scores.iter().copied()).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k.max(1));
        Ok(Prediction {
            label: ranked[0].0.clone(),
            score: ranked[0].1,
            kind,
            topk: ranked,
        })
    }
}

/// Provenance stored with every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub family: Family,
    /// Family-specific configuration, echoed verbatim.
    pub config: serde_json::Value,
    pub seed: u64,
    /// SHA-256 over the training examples (empty for zero-shot).
    pub data_fingerprint: String,
    pub taxonomy_hash: String,
}

/// Maps text to ranked class predictions.
pub trait Classifier: Send + Sync {
    fn family(&self) -> Family;
    fn label_set(&self) -> &[String];
    fn metadata(&self) -> &ModelMetadata;
    fn score_kind(&self) -> ScoreKind;

    /// One score per entry of `label_set` for already-normalized text.
    fn class_scores(&self, normalized: &str) -> Result<Vec<f64>>;

    fn predict(&self, text: &str) -> Result<Prediction> {
        let norm = normalize(text);
        if norm.is_empty() {
            return Err(Error::Input(format!("text {text:?} is empty after normalization")));
        }
        let scores = self.class_scores(&norm)?;
        Prediction::from_scores(self.label_set(), &scores, self.score_kind(), TOP_K)
    }

    /// Predictions in input order.
    fn predict_batch(&self, texts: &[String]) -> Result<Vec<Prediction>> {
        texts.par_iter().map(|t| self.predict(t)).collect()
    }
}

/// Hex SHA-256 over `(text, label)` pairs in order.
pub fn data_fingerprint<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for (text, label) in pairs {
        h.update(text.as_bytes());
        h.update([0x1f]);
        h.update(label.as_bytes());
        h.update([0x1e]);
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ranking_breaks_ties_by_code() {
        let p = Prediction::from_scores(&labels(&["B", "A", "C"]), &[0.5, 0.5, 0.1], ScoreKind::Similarity, 5).unwrap();
        assert_eq!(p.label, "A");
        assert_eq!(p.topk.iter().map(|t| t.0.as_str()).collect::<Vec<_>>(), ["A", "B", "C"]);
        let q = Prediction::from_scores(&labels(&["B", "A"]), &[0.1, 0.9], ScoreKind::Probability, 1).unwrap();
        assert_eq!(q.topk.len(), 1);
        assert_eq!(q.label, "A");
    }

    #[test]
    fn ranking_rejects_bad_scores() {
        assert!(Prediction::from_scores(&labels(&["A"]), &[f64::NAN], ScoreKind::Similarity, 1).is_err());
        assert!(Prediction::from_scores(&labels(&["A", "B"]), &[1.0], ScoreKind::Similarity, 1).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("classical".parse::<Family>().unwrap(), Family::Classical);
        assert_eq!(Family::FineTuned.to_string(), "finetuned");
        assert!("neural".parse::<Family>().is_err());
    }
}
