use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{data_fingerprint, Classifier, Family, ModelMetadata, ScoreKind};
use crate::corpus::LabeledExample;
use crate::encoder::{self, AdamState, HeadModel, MAX_UNITS};
use crate::error::{Error, Result};

/// Fine-tuning hyperparameters. Defaults: max_length 512 and learning rate
/// 5e-5, 20 epochs with patience 5, batch size 32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub max_length: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping.
    pub early_stopping_patience: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_length: 512,
            learning_rate: 5e-5,
            epochs: 20,
            batch_size: 32,
            seed: 42,
            early_stopping_patience: 5,
        }
    }
}

/// Memory ceiling for parameters plus optimizer state.
const MAX_TRAINING_BYTES: usize = 4 << 30;

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_length == 0 || self.epochs == 0 || self.batch_size == 0 || self.early_stopping_patience == 0 {
            return Err(Error::Range(format!("training config values must be positive: {self:?}")));
        }
        if self.max_length > MAX_UNITS {
            return Err(Error::Range(format!("max_length {} exceeds {MAX_UNITS}", self.max_length)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Range(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

/// Writes `epoch,train_loss,validation_loss` rows.
pub fn write_epoch_log<W: Write>(logs: &[EpochLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(["epoch", "train_loss", "validation_loss"]).map_err(ser)?;
    for l in logs {
        w.write_record([l.epoch.to_string(), l.train_loss.to_string(), l.validation_loss.to_string()])
            .map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}

/// Encoder with a classification head; the checkpoint with the lowest
/// validation loss seen during training.
pub struct FineTunedModel {
    pub(crate) model: HeadModel,
    pub(crate) labels: Vec<String>,
    pub(crate) max_length: usize,
    pub(crate) best_epoch: usize,
    pub(crate) best_validation_loss: f64,
    pub(crate) metadata: ModelMetadata,
}

#[derive(Serialize)]
struct FinetuneEcho<'a> {
    encoder_id: &'a str,
    encoder_fingerprint: String,
    effective_learning_rate: f64,
    #[serde(flatten)]
    training: &'a TrainingConfig,
}

fn encode_examples(
    model: &HeadModel,
    examples: &[LabeledExample],
    index: &HashMap<&str, usize>,
    max_length: usize,
) -> Result<Vec<(Vec<usize>, usize)>> {
    examples
        .iter()
        .map(|e| {
            let y = *index.get(e.label.as_str()).ok_or_else(|| Error::UnknownClass(e.label.clone()))?;
            let units = model.encoder.units(&e.text, max_length);
            if units.is_empty() {
                return Err(Error::Input(format!("example {} has no tokens", e.id)));
            }
            Ok((units, y))
        })
        .collect()
}

/// Attaches a head sized to `label_set` to the resolved encoder and trains
/// all weights. Returns the lowest-validation-loss checkpoint and one log
/// entry per completed epoch.
pub fn finetune(
    encoder_id: &str,
    train: &[LabeledExample],
    val: &[LabeledExample],
    label_set: &[String],
    config: &TrainingConfig,
) -> Result<(FineTunedModel, Vec<EpochLog>)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Input("fine-tuning needs non-empty train and validation sets".into()));
    }
    if label_set.is_empty() {
        return Err(Error::Input("empty label set".into()));
    }
    let encoder = encoder::resolve(encoder_id)?;
    let echo = serde_json::to_value(FinetuneEcho {
        encoder_id,
        encoder_fingerprint: encoder.fingerprint(),
        effective_learning_rate: config.learning_rate * encoder.config().lr_scale,
        training: config,
    })?;
    let c = encoder.config();
    let step_size = config.learning_rate * c.lr_scale;
    let params = c.buckets * c.embed_dim + c.hidden_dim * (c.embed_dim + 1) + label_set.len() * (c.hidden_dim + 1);
    let bytes = params.saturating_mul(8 * 4);
    if bytes > MAX_TRAINING_BYTES {
        return Err(Error::Resource {
            message: format!("training needs ~{} MiB", bytes >> 20),
            config: echo.to_string(),
        });
    }

    let mut model = HeadModel::new((*encoder).clone(), label_set.len(), config.seed);
    let index: HashMap<&str, usize> = label_set.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let train_data = encode_examples(&model, train, &index, config.max_length)?;
    let val_data = encode_examples(&model, val, &index, config.max_length)?;

    let mut state = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut logs = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, HeadModel)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[usize], usize)> = chunk.iter().map(|&i| (train_data[i].0.as_slice(), train_data[i].1)).collect();
            total += model.train_step(&batch, step_size, &mut state) * chunk.len() as f64;
        }
        let validation_loss = model.mean_loss(&val_data);
        logs.push(EpochLog {
            epoch,
            train_loss: total / train_data.len() as f64,
            validation_loss,
        });
        log::debug!("epoch {epoch}: train {:.4} val {validation_loss:.4}", total / train_data.len() as f64);
        if best.as_ref().map_or(true, |(_, loss, _)| validation_loss < *loss) {
            best = Some((epoch, validation_loss, model.clone()));
        }
        let best_epoch = best.as_ref().map(|b| b.0).unwrap_or(epoch);
        if epoch - best_epoch >= config.early_stopping_patience {
            break;
        }
    }
    let (best_epoch, best_validation_loss, best_model) = best.expect("at least one epoch");
    let mut data_pairs: Vec<(&str, &str)> = train.iter().map(|e| (e.text.as_str(), e.label.as_str())).collect();
    data_pairs.push(("--validation--", ""));
    data_pairs.extend(val.iter().map(|e| (e.text.as_str(), e.label.as_str())));
    let metadata = ModelMetadata {
        family: Family::FineTuned,
        config: echo,
        seed: config.seed,
        data_fingerprint: data_fingerprint(data_pairs),
        taxonomy_hash: String::new(),
    };
    Ok((
        FineTunedModel {
            model: best_model,
            labels: label_set.to_vec(),
            max_length: config.max_length,
            best_epoch,
            best_validation_loss,
            metadata,
        },
        logs,
    ))
}

impl FineTunedModel {
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_validation_loss(&self) -> f64 {
        self.best_validation_loss
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn set_taxonomy_hash(&mut self, hash: &str) {
        self.metadata.taxonomy_hash = hash.to_string();
    }

    /// Mean cross-entropy on `examples`, computed exactly as during training.
    pub fn validation_loss(&self, examples: &[LabeledExample]) -> Result<f64> {
        let index: HashMap<&str, usize> = self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let data = encode_examples(&self.model, examples, &index, self.max_length)?;
        Ok(self.model.mean_loss(&data))
    }
}

impl Classifier for FineTunedModel {
    fn family(&self) -> Family {
        Family::FineTuned
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
        let units = self.model.encoder.units(normalized, self.max_length);
        if units.is_empty() {
            return Err(Error::Input(format!("no tokens in {normalized:?}")));
        }
        Ok(self.model.probabilities(&[&units]).row(0).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, MiniEncoder};

    fn ex(i: usize, text: &str, label: &str) -> LabeledExample {
        LabeledExample {
            id: format!("e{i}"),
            text: text.into(),
            label: label.into(),
        }
    }

    fn tiny_encoder_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EncoderConfig { buckets: 512, embed_dim: 16, hidden_dim: 16, min_gram: 3, max_gram: 3, lr_scale: 1.0 };
        MiniEncoder::random("tiny", cfg, 1).save(dir.path()).unwrap();
        dir
    }

    fn data() -> (Vec<LabeledExample>, Vec<LabeledExample>, Vec<String>) {
        let train = vec![
            ex(0, "steel pipes", "M"),
            ex(1, "steel beams", "M"),
            ex(2, "iron castings", "M"),
            ex(3, "aluminum sheet", "M"),
            ex(4, "copper wire", "M"),
            ex(5, "jet fuel", "F"),
            ex(6, "diesel fuel", "F"),
            ex(7, "gasoline", "F"),
            ex(8, "heating oil", "F"),
            ex(9, "asphalt fuel", "F"),
        ];
        let val = vec![ex(10, "steel wire", "M"), ex(11, "jet gasoline", "F")];
        (train, val, vec!["F".into(), "M".into()])
    }

    #[test]
    fn one_epoch_gives_one_log() {
        let dir = tiny_encoder_dir();
        let (train, val, labels) = data();
        let cfg = TrainingConfig { epochs: 1, ..Default::default() };
        let (model, logs) = finetune(dir.path().to_str().unwrap(), &train, &val, &labels, &cfg).unwrap();
        assert_eq!(logs.len(), 1);
        assert_eq!(logs[0].epoch, 1);
        assert_eq!(model.best_epoch(), 1);
    }

    #[test]
    fn returned_checkpoint_has_minimum_validation_loss() {
        let dir = tiny_encoder_dir();
        let (train, val, labels) = data();
        let cfg = TrainingConfig { epochs: 30, learning_rate: 5e-2, batch_size: 4, early_stopping_patience: 30, ..Default::default() };
        let (model, logs) = finetune(dir.path().to_str().unwrap(), &train, &val, &labels, &cfg).unwrap();
        let min = logs.iter().map(|l| l.validation_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(model.best_validation_loss(), min);
        assert!((model.validation_loss(&val).unwrap() - min).abs() <= 1e-12);
        assert!(min <= logs.last().unwrap().validation_loss);
        assert!(logs.windows(2).all(|w| w[0].epoch < w[1].epoch));
        assert_eq!(model.predict("steel pipes").unwrap().label, "M");
    }

    #[test]
    fn grid_point_is_echoed() {
        let dir = tiny_encoder_dir();
        let (train, val, labels) = data();
        let cfg = TrainingConfig { max_length: 512, learning_rate: 5e-6, epochs: 1, ..Default::default() };
        let (model, _) = finetune(dir.path().to_str().unwrap(), &train, &val, &labels, &cfg).unwrap();
        let echo = &model.metadata().config;
        assert_eq!(echo["max_length"], 512);
        assert_eq!(echo["learning_rate"], 5e-6);
    }

    #[test]
    fn early_stopping_and_errors() {
        let dir = tiny_encoder_dir();
        let (train, val, labels) = data();
        let id = dir.path().to_str().unwrap();
        assert!(matches!(finetune("nope", &train, &val, &labels, &TrainingConfig::default()), Err(Error::UnresolvedEncoder(_))));
        let bad = TrainingConfig { learning_rate: 0.0, ..Default::default() };
        assert!(matches!(finetune(id, &train, &val, &labels, &bad), Err(Error::Range(_))));
        assert!(finetune(id, &train, &[], &labels, &TrainingConfig::default()).is_err());
        // Huge learning rate diverges quickly; patience 2 must stop early.
        let cfg = TrainingConfig { epochs: 40, learning_rate: 1.0, batch_size: 2, early_stopping_patience: 2, ..Default::default() };
        let (model, logs) = finetune(id, &train, &val, &labels, &cfg).unwrap();
        assert!(logs.len() <= model.best_epoch() + 2);
    }

    #[test]
    fn epoch_log_csv() {
        let logs = [EpochLog { epoch: 1, train_loss: 0.5, validation_loss: 0.25 }];
        let mut buf = Vec::new();
        write_epoch_log(&logs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,train_loss,validation_loss\n1,0.5,0.25\n");
    }
}
