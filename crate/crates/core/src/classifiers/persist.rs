//! Versioned model directories: `manifest.json` plus family-specific weights.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ClassicalModel, Classifier, Family, FeaturePipeline, FeatureSource, FineTunedModel, ModelMetadata, Prediction,
    RandomForest, ScoreKind, ZeroShotModel,
};
use crate::encoder::{read_f64s, HeadModel, MiniEncoder};
use crate::error::{Error, Result};
use crate::features::{sentence_provider, word_provider, FeatureVector, TfidfModel};
use crate::taxonomy::TextMode;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";

/// Any of the three families, loaded from disk or freshly trained.
pub enum AnyModel {
    ZeroShot(ZeroShotModel),
    Classical(ClassicalModel),
    FineTuned(FineTunedModel),
}

impl AnyModel {
    fn inner(&self) -> &dyn Classifier {
        match self {
            AnyModel::ZeroShot(m) => m,
            AnyModel::Classical(m) => m,
            AnyModel::FineTuned(m) => m,
        }
    }
}

impl Classifier for AnyModel {
    fn family(&self) -> Family {
        self.inner().family()
    }
    fn label_set(&self) -> &[String] {
        self.inner().label_set()
    }
    fn metadata(&self) -> &ModelMetadata {
        self.inner().metadata()
    }
    fn score_kind(&self) -> ScoreKind {
        self.inner().score_kind()
    }
    fn class_scores(&self, normalized: &str) -> Result<Vec<f64>> {
        self.inner().class_scores(normalized)
    }
    fn predict(&self, text: &str) -> Result<Prediction> {
        self.inner().predict(text)
    }
}

impl From<ZeroShotModel> for AnyModel {
    fn from(m: ZeroShotModel) -> Self {
        AnyModel::ZeroShot(m)
    }
}

impl From<ClassicalModel> for AnyModel {
    fn from(m: ClassicalModel) -> Self {
        AnyModel::Classical(m)
    }
}

impl From<FineTunedModel> for AnyModel {
    fn from(m: FineTunedModel) -> Self {
        AnyModel::FineTuned(m)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    family: Family,
    label_set: Vec<String>,
    metadata: ModelMetadata,
    details: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct ZeroShotWeights {
    provider: String,
    mode: TextMode,
    class_vectors: Vec<FeatureVector>,
}

#[derive(Serialize, Deserialize)]
struct HeadDetails {
    classes: usize,
    hidden_dim: usize,
    max_length: usize,
    best_epoch: usize,
    best_validation_loss: f64,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn save_model(model: &AnyModel, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let details = match model {
        AnyModel::ZeroShot(m) => {
            let w = ZeroShotWeights {
                provider: m.provider.id(),
                mode: m.mode,
                class_vectors: m.class_vectors.clone(),
            };
            write(&dir.join("zeroshot.json"), serde_json::to_string(&w)?)?;
            serde_json::json!({ "provider": w.provider, "mode": w.mode })
        }
        AnyModel::Classical(m) => {
            let source = m.pipeline.source();
            if let FeaturePipeline::Tfidf(t) = &m.pipeline {
                write(&dir.join("tfidf.json"), t.to_json()?)?;
            }
            write(&dir.join("forest.json"), serde_json::to_string(&m.forest)?)?;
            serde_json::json!({ "features": source })
        }
        AnyModel::FineTuned(m) => {
            m.model.encoder.save(&dir.join("encoder"))?;
            let mut bytes = Vec::new();
            for x in m.model.head_w.iter().chain(m.model.head_b.iter()) {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
            write(&dir.join("head.bin"), bytes)?;
            serde_json::to_value(HeadDetails {
                classes: m.labels.len(),
                hidden_dim: m.model.encoder.hidden_dim(),
                max_length: m.max_length,
                best_epoch: m.best_epoch,
                best_validation_loss: m.best_validation_loss,
            })?
        }
    };
    let manifest = Manifest {
        format_version: MODEL_FORMAT_VERSION,
        family: model.family(),
        label_set: model.label_set().to_vec(),
        metadata: model.metadata().clone(),
        details,
    };
    write(&dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")
}

pub fn load_model(dir: &Path) -> Result<AnyModel> {
    if !dir.join(MANIFEST).is_file() {
        return Err(Error::Input(format!("{} is not a model directory (no {MANIFEST})", dir.display())));
    }
    let manifest: Manifest = serde_json::from_str(&read_string(&dir.join(MANIFEST))?)?;
    if manifest.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Input(format!("unsupported model format {}", manifest.format_version)));
    }
    let labels = manifest.label_set;
    let metadata = manifest.metadata;
    match manifest.family {
        Family::ZeroShot => {
            let w: ZeroShotWeights = serde_json::from_str(&read_string(&dir.join("zeroshot.json"))?)?;
            let provider = sentence_provider(&w.provider)?;
            let mut m = ZeroShotModel::from_class_vectors(provider, w.mode, labels, w.class_vectors)?;
            m.metadata = metadata;
            Ok(AnyModel::ZeroShot(m))
        }
        Family::Classical => {
            let source: FeatureSource = serde_json::from_value(manifest.details["features"].clone())?;
            let pipeline = match source {
                FeatureSource::Tfidf => FeaturePipeline::Tfidf(TfidfModel::from_json(&read_string(&dir.join("tfidf.json"))?)?),
                FeatureSource::Words { provider } => FeaturePipeline::Words {
                    provider: word_provider(&provider)?,
                    config: provider,
                },
            };
            let forest: RandomForest = serde_json::from_str(&read_string(&dir.join("forest.json"))?)?;
            if forest.n_classes() != labels.len() {
                return Err(Error::Validation("forest class count differs from label set".into()));
            }
            Ok(AnyModel::Classical(ClassicalModel {
                pipeline,
                forest,
                labels,
                metadata,
            }))
        }
        Family::FineTuned => {
            let d: HeadDetails = serde_json::from_value(manifest.details)?;
            let encoder = MiniEncoder::load(&dir.join("encoder"))?;
            if d.classes != labels.len() || d.hidden_dim != encoder.hidden_dim() {
                return Err(Error::Validation("head shape differs from manifest".into()));
            }
            let path = dir.join("head.bin");
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let floats = read_f64s(&bytes, d.classes * (d.hidden_dim + 1), &path)?;
            let (w, b) = floats.split_at(d.classes * d.hidden_dim);
            let model = HeadModel {
                encoder,
                head_w: ndarray::Array2::from_shape_vec((d.classes, d.hidden_dim), w.to_vec()).expect("shape"),
                head_b: ndarray::Array1::from_vec(b.to_vec()),
            };
            Ok(AnyModel::FineTuned(FineTunedModel {
                model,
                labels,
                max_length: d.max_length,
                best_epoch: d.best_epoch,
                best_validation_loss: d.best_validation_loss,
                metadata,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{finetune, zeroshot_build, ClassicalConfig, TrainingConfig};
    use crate::corpus::{synth_generate, LabeledExample};
    use crate::encoder::EncoderConfig;
    use crate::taxonomy::Taxonomy;

    fn same_predictions(a: &AnyModel, b: &AnyModel, texts: &[&str]) {
        assert_eq!(a.family(), b.family());
        assert_eq!(a.label_set(), b.label_set());
        assert_eq!(a.metadata(), b.metadata());
        for t in texts {
            assert_eq!(a.predict(t).unwrap(), b.predict(t).unwrap(), "{t}");
        }
    }

    const TEXTS: &[&str] = &["electricity bill", "legal services retainer", "steel pipes", "jet fuel"];

    #[test]
    fn zeroshot_and_classical_round_trip() {
        let tax = Taxonomy::canonical();
        let dir = tempfile::tempdir().unwrap();

        let zs: AnyModel = zeroshot_build(sentence_provider("hashing:64").unwrap(), &tax, TextMode::Description)
            .unwrap()
            .into();
        save_model(&zs, &dir.path().join("zs")).unwrap();
        same_predictions(&zs, &load_model(&dir.path().join("zs")).unwrap(), TEXTS);

        let train = synth_generate(&tax, 4, 3).unwrap();
        let mut cfg = ClassicalConfig::default();
        cfg.forest.n_trees = 5;
        let cl: AnyModel = ClassicalModel::train(&train, &tax.codes(), &cfg, &tax.fingerprint()).unwrap().into();
        save_model(&cl, &dir.path().join("cl")).unwrap();
        let back = load_model(&dir.path().join("cl")).unwrap();
        same_predictions(&cl, &back, TEXTS);

        // saving the loaded model reproduces the files byte for byte
        save_model(&back, &dir.path().join("cl2")).unwrap();
        for f in ["manifest.json", "forest.json", "tfidf.json"] {
            assert_eq!(
                std::fs::read(dir.path().join("cl").join(f)).unwrap(),
                std::fs::read(dir.path().join("cl2").join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn finetuned_round_trip() {
        let enc = tempfile::tempdir().unwrap();
        let cfg = EncoderConfig { buckets: 256, embed_dim: 8, hidden_dim: 8, min_gram: 3, max_gram: 3, lr_scale: 1.0 };
        MiniEncoder::random("tiny", cfg, 5).save(enc.path()).unwrap();
        let ex = |i: usize, t: &str, l: &str| LabeledExample { id: format!("e{i}"), text: t.into(), label: l.into() };
        let train = vec![ex(0, "steel pipes", "M"), ex(1, "jet fuel", "F"), ex(2, "iron beams", "M"), ex(3, "diesel", "F")];
        let val = vec![ex(4, "steel", "M"), ex(5, "fuel oil", "F")];
        let tc = TrainingConfig { epochs: 3, learning_rate: 1e-2, batch_size: 2, ..Default::default() };
        let (m, _) = finetune(enc.path().to_str().unwrap(), &train, &val, &["F".into(), "M".into()], &tc).unwrap();
        let best = m.best_validation_loss();
        let model: AnyModel = m.into();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        let back = load_model(dir.path()).unwrap();
        same_predictions(&model, &back, TEXTS);
        match back {
            AnyModel::FineTuned(f) => {
                assert_eq!(f.best_validation_loss(), best);
                assert_eq!(f.validation_loss(&val).unwrap(), best);
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn missing_or_foreign_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_model(&dir.path().join("nope")), Err(Error::Input(_))));
        std::fs::write(
            dir.path().join(MANIFEST),
            r#"{"format_version":99,"family":"zeroshot","label_set":[],"metadata":{"family":"zeroshot","config":null,"seed":0,"data_fingerprint":"","taxonomy_hash":""},"details":null}"#,
        )
        .unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Input(_))));
    }
}
