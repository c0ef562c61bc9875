use std::sync::Arc;

use serde_json::json;

use super::{Classifier, Family, ModelMetadata, ScoreKind};
use crate::error::{Error, Result};
use crate::features::{cosine_similarity, embed_sentence, EmbeddingProvider, FeatureVector};
use crate::taxonomy::{class_text, Taxonomy, TextMode};

/// Nearest class text by cosine similarity of sentence embeddings.
pub struct ZeroShotModel {
    pub(crate) provider: Arc<dyn EmbeddingProvider>,
    pub(crate) mode: TextMode,
    pub(crate) labels: Vec<String>,
    pub(crate) class_vectors: Vec<FeatureVector>,
    pub(crate) metadata: ModelMetadata,
}

/// Embeds each class's title or composed description once.
pub fn zeroshot_build(provider: Arc<dyn EmbeddingProvider>, tax: &Taxonomy, mode: TextMode) -> Result<ZeroShotModel> {
    let mut labels = Vec::with_capacity(tax.class_count());
    let mut class_vectors = Vec::with_capacity(tax.class_count());
    for cls in tax.classes() {
        let text = class_text(cls, mode)?;
        let v = embed_sentence(provider.as_ref(), &cls.code, text).map_err(|e| match e {
            Error::Provider { message, .. } => Error::Provider {
                id: format!("class {}", cls.code),
                message,
            },
            other => other,
        })?;
        labels.push(cls.code.clone());
        class_vectors.push(v);
    }
    let metadata = ModelMetadata {
        family: Family::ZeroShot,
        config: json!({ "provider": provider.id(), "mode": mode }),
        seed: 0,
        data_fingerprint: String::new(),
        taxonomy_hash: tax.fingerprint(),
    };
    Ok(ZeroShotModel {
        provider,
        mode,
        labels,
        class_vectors,
        metadata,
    })
}

impl ZeroShotModel {
    /// Model over explicit class vectors, bypassing the taxonomy.
    pub fn from_class_vectors(
        provider: Arc<dyn EmbeddingProvider>,
        mode: TextMode,
        labels: Vec<String>,
        class_vectors: Vec<FeatureVector>,
    ) -> Result<Self> {
        if labels.is_empty() || labels.len() != class_vectors.len() {
            return Err(Error::Input("zero-shot model needs one vector per label".into()));
        }
        if let Some(v) = class_vectors.iter().find(|v| v.dim() != provider.dimension()) {
            return Err(Error::Input(format!(
                "class vector has {} dims, provider has {}",
                v.dim(),
                provider.dimension()
            )));
        }
        let metadata = ModelMetadata {
            family: Family::ZeroShot,
            config: json!({ "provider": provider.id(), "mode": mode }),
            seed: 0,
            data_fingerprint: String::new(),
            taxonomy_hash: String::new(),
        };
        Ok(Self {
            provider,
            mode,
            labels,
            class_vectors,
            metadata,
        })
    }

    pub fn mode(&self) -> TextMode {
        self.mode
    }

    pub fn class_vectors(&self) -> &[FeatureVector] {
        &self.class_vectors
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }
}

impl Classifier for ZeroShotModel {
    fn family(&self) -> Family {
        Family::ZeroShot
    }

    fn label_set(&self) -> &[String] {
        &self.labels
    }

    fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    fn score_kind(&self) -> ScoreKind {
        ScoreKind::Similarity
    }

    fn class_scores(&self, normalized: &str) -> Result<Vec<f64>> {
        let query = embed_sentence(self.provider.as_ref(), "query", normalized)?;
        if query.is_zero() {
            return Err(Error::Domain(format!("degenerate input {normalized:?}: zero embedding")));
        }
        self.class_vectors.iter().map(|cv| cosine_similarity(&query, cv)).collect()
    }
}
