use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{data_fingerprint, Classifier, Family, ForestConfig, ModelMetadata, RandomForest, ScoreKind};
use crate::corpus::LabeledExample;
use crate::error::{Error, Result};
use crate::features::{average_word_embeddings, fit_tfidf, word_provider, EmbeddingProvider, FeatureVector, TfidfModel};

/// How text becomes a feature vector for the forest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum FeatureSource {
    Tfidf,
    /// Mean of word vectors from a word provider configuration string.
    Words { provider: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConfig {
    pub features: FeatureSource,
    pub forest: ForestConfig,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            features: FeatureSource::Tfidf,
            forest: ForestConfig::default(),
        }
    }
}

/// Fitted text-to-vector step stored with the forest.
#[derive(Clone)]
pub enum FeaturePipeline {
    Tfidf(TfidfModel),
    Words {
        config: String,
        provider: Arc<dyn EmbeddingProvider>,
    },
}

impl FeaturePipeline {
    /// Fits the pipeline on training texts (only TF-IDF has state to fit).
    pub fn fit(source: &FeatureSource, texts: &[&str]) -> Result<Self> {
        match source {
            FeatureSource::Tfidf => Ok(FeaturePipeline::Tfidf(fit_tfidf(texts)?)),
            FeatureSource::Words { provider } => Ok(FeaturePipeline::Words {
                config: provider.clone(),
                provider: word_provider(provider)?,
            }),
        }
    }

    pub fn transform(&self, text: &str) -> Result<FeatureVector> {
        match self {
            FeaturePipeline::Tfidf(m) => Ok(m.transform(text)),
            FeaturePipeline::Words { provider, .. } => Ok(average_word_embeddings(provider.as_ref(), text)?.vector),
        }
    }

    pub fn source(&self) -> FeatureSource {
        match self {
            FeaturePipeline::Tfidf(_) => FeatureSource::Tfidf,
            FeaturePipeline::Words { config, .. } => FeatureSource::Words { provider: config.clone() },
        }
    }
}

/// Feature pipeline plus random forest.
pub struct ClassicalModel {
    pub(crate) pipeline: FeaturePipeline,
    pub(crate) forest: RandomForest,
    pub(crate) labels: Vec<String>,
    pub(crate) metadata: ModelMetadata,
}

/// Trains a forest on precomputed features. `label_set` fixes the class
/// order of the model; every entry of `labels` must be in it.
pub fn classical_train(
    pipeline: FeaturePipeline,
    features: &[FeatureVector],
    labels: &[String],
    label_set: &[String],
    config: &ForestConfig,
) -> Result<ClassicalModel> {
    if features.len() != labels.len() {
        return Err(Error::Input(format!("{} feature rows for {} labels", features.len(), labels.len())));
    }
    let distinct: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    if distinct.len() < 2 {
        return Err(Error::Input("classical training needs at least two distinct labels".into()));
    }
    let index: HashMap<&str, usize> = label_set.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let y = labels
        .iter()
        .map(|l| index.get(l.as_str()).copied().ok_or_else(|| Error::UnknownClass(l.clone())))
        .collect::<Result<Vec<_>>>()?;
    let forest = RandomForest::fit(features, &y, label_set.len(), config)?;
    let metadata = ModelMetadata {
        family: Family::Classical,
        config: serde_json::to_value(ClassicalConfig {
            features: pipeline.source(),
            forest: *config,
        })?,
        seed: config.seed,
        data_fingerprint: String::new(),
        taxonomy_hash: String::new(),
    };
    Ok(ClassicalModel {
        pipeline,
        forest,
        labels: label_set.to_vec(),
        metadata,
    })
}

impl ClassicalModel {
    /// Fits the feature pipeline and forest on labeled examples.
    pub fn train(train: &[LabeledExample], label_set: &[String], config: &ClassicalConfig, taxonomy_hash: &str) -> Result<Self> {
        let texts: Vec<&str> = train.iter().map(|e| e.text.as_str()).collect();
        let pipeline = FeaturePipeline::fit(&config.features, &texts)?;
        let features = texts
            .par_iter()
            .map(|t| pipeline.transform(t))
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<String> = train.iter().map(|e| e.label.clone()).collect();
        let mut model = classical_train(pipeline, &features, &labels, label_set, &config.forest)?;
        model.metadata.data_fingerprint = data_fingerprint(train.iter().map(|e| (e.text.as_str(), e.label.as_str())));
        model.metadata.taxonomy_hash = taxonomy_hash.to_string();
        Ok(model)
    }

    pub fn pipeline(&self) -> &FeaturePipeline {
        &self.pipeline
    }

    pub fn forest(&self) -> &RandomForest {
        &self.forest
    }
}

impl Classifier for ClassicalModel {
    fn family(&self) -> Family {
        Family::Classical
    }

    fn label_set(&self) -> &[String] {
        &self.labels
    }

    fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    fn score_kind(&self) -> ScoreKind {
        ScoreKind::Probability
    }

    fn class_scores(&self, normalized: &str) -> Result<Vec<f64>> {
        self.forest.predict_proba(&self.pipeline.transform(normalized)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(text: &str, label: &str) -> LabeledExample {
        LabeledExample {
            id: text.into(),
            text: text.into(),
            label: label.into(),
        }
    }

    fn toy() -> Vec<LabeledExample> {
        vec![
            ex("steel pipes", "METAL"),
            ex("steel beams", "METAL"),
            ex("aluminum sheet steel", "METAL"),
            ex("jet fuel", "FUEL"),
            ex("diesel fuel", "FUEL"),
            ex("gasoline fuel delivery", "FUEL"),
        ]
    }

    fn label_set() -> Vec<String> {
        vec!["FUEL".into(), "METAL".into(), "UNUSED".into()]
    }

    #[test]
    fn separable_toy_set_has_perfect_training_accuracy() {
        let cfg = ClassicalConfig {
            forest: ForestConfig { n_trees: 25, ..Default::default() },
            ..Default::default()
        };
        let m = ClassicalModel::train(&toy(), &label_set(), &cfg, "").unwrap();
        for e in toy() {
            let p = m.predict(&e.text).unwrap();
            assert_eq!(p.label, e.label, "{}", e.text);
            let all = m.class_scores(&e.text).unwrap();
            assert!((all.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert_eq!(all[2], 0.0);
        }
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let cfg = ClassicalConfig::default();
        let a = ClassicalModel::train(&toy(), &label_set(), &cfg, "").unwrap();
        let b = ClassicalModel::train(&toy(), &label_set(), &cfg, "").unwrap();
        let probes: Vec<String> = ["steel fuel", "pipes", "jet", "unknown"].iter().map(|s| s.to_string()).collect();
        assert_eq!(a.predict_batch(&probes).unwrap(), b.predict_batch(&probes).unwrap());
    }

    #[test]
    fn single_label_is_rejected() {
        let one = vec![ex("steel", "METAL"), ex("iron", "METAL")];
        assert!(matches!(
            ClassicalModel::train(&one, &label_set(), &ClassicalConfig::default(), ""),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn word_average_features() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        std::fs::write(&path, "4 2\nsteel 1 0\npipes 0.9 0.1\njet 0 1\nfuel 0.1 0.9\n").unwrap();
        let cfg = ClassicalConfig {
            features: FeatureSource::Words { provider: format!("vectors:{}", path.display()) },
            forest: ForestConfig { n_trees: 10, ..Default::default() },
        };
        let m = ClassicalModel::train(&toy(), &label_set(), &cfg, "").unwrap();
        assert_eq!(m.predict("steel").unwrap().label, "METAL");
        assert_eq!(m.predict("jet").unwrap().label, "FUEL");
    }
}
