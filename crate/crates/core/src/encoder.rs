//! Miniature text encoder used for fine-tuning and as a sentence/word
//! embedding provider.
//!
//! Architecture: every word contributes a hashed word unit and hashed
//! character n-gram units; unit embeddings are mean-pooled and passed
//! through one dense `tanh` layer. Built-in checkpoints are pretrained with
//! a masked-word objective (predict a word from its context window) on the
//! bundled NAICS and commodity-title text.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use fnv::FnvHasher;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{EmbeddingKind, EmbeddingProvider};
use crate::taxonomy::{canonical_naics, Taxonomy};
use crate::text::{normalize, tokens};

pub const ENCODER_FORMAT_VERSION: u32 = 1;
const ENCODER_MANIFEST: &str = "encoder.json";
const ENCODER_WEIGHTS: &str = "encoder.bin";

/// Longest unit sequence accepted by any encoder.
pub const MAX_UNITS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub buckets: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub min_gram: usize,
    pub max_gram: usize,
    /// Multiplier from a nominal fine-tuning learning rate to the Adam step size.
    #[serde(default = "unit_scale")]
    pub lr_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// Builtin encoders take nominal learning rates in the range used for
/// full-size transformers; this maps 5e-5 to a 2e-3 Adam step.
pub const BUILTIN_LR_SCALE: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainInfo {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub corpus_sentences: usize,
    pub corpus_sha256: String,
    pub final_loss: f64,
}

/// Built-in checkpoints, pretrained on first use.
pub const BUILTIN_ENCODERS: &[(&str, EncoderConfig)] = &[
    (
        "mini-encoder-small",
        EncoderConfig { buckets: 1 << 14, embed_dim: 64, hidden_dim: 128, min_gram: 3, max_gram: 4, lr_scale: BUILTIN_LR_SCALE },
    ),
    (
        "mini-encoder-base",
        EncoderConfig { buckets: 1 << 14, embed_dim: 128, hidden_dim: 256, min_gram: 3, max_gram: 4, lr_scale: BUILTIN_LR_SCALE },
    ),
    (
        "mini-encoder-wide",
        EncoderConfig { buckets: 1 << 14, embed_dim: 128, hidden_dim: 512, min_gram: 3, max_gram: 5, lr_scale: BUILTIN_LR_SCALE },
    ),
];

pub const DEFAULT_ENCODER: &str = "mini-encoder-base";
const PRETRAIN_SEED: u64 = 20_231_117;
const PRETRAIN_EPOCHS: usize = 30;
const PRETRAIN_LR: f64 = 2e-3;
const PRETRAIN_WINDOW: usize = 4;

#[derive(Debug, Clone)]
pub struct MiniEncoder {
    pub(crate) id: String,
    pub(crate) config: EncoderConfig,
    pub(crate) pretrain: Option<PretrainInfo>,
    /// buckets x embed_dim
    pub(crate) embeddings: Array2<f64>,
    /// hidden_dim x embed_dim
    pub(crate) w1: Array2<f64>,
    pub(crate) b1: Array1<f64>,
}

fn hash_unit(kind: &str, s: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(kind.as_bytes());
    h.write(s.as_bytes());
    h.finish()
}

pub(crate) fn normal_matrix(rows: usize, cols: usize, std: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let dist = Normal::new(0.0, std).expect("positive std");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl MiniEncoder {
    pub fn random(id: impl Into<String>, config: EncoderConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embeddings = normal_matrix(config.buckets, config.embed_dim, 0.1, &mut rng);
        let w1 = normal_matrix(config.hidden_dim, config.embed_dim, (1.0 / config.embed_dim as f64).sqrt(), &mut rng);
        Self {
            id: id.into(),
            config,
            pretrain: None,
            embeddings,
            w1,
            b1: Array1::zeros(config.hidden_dim),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> EncoderConfig {
        self.config
    }

    pub fn pretrain_info(&self) -> Option<&PretrainInfo> {
        self.pretrain.as_ref()
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    fn word_units(&self, word: &str, out: &mut Vec<usize>) {
        let buckets = self.config.buckets as u64;
        out.push((hash_unit("w:", word) % buckets) as usize);
        let chars: Vec<char> = format!("<{word}>").chars().collect();
        for n in self.config.min_gram..=self.config.max_gram {
            for gram in chars.windows(n) {
                let gram: String = gram.iter().collect();
                out.push((hash_unit("c:", &gram) % buckets) as usize);
            }
        }
    }

    /// Hashed units of normalized text, truncated to `max_length`.
    pub fn units(&self, text: &str, max_length: usize) -> Vec<usize> {
        let norm = normalize(text);
        let mut out = Vec::new();
        for word in tokens(&norm) {
            self.word_units(word, &mut out);
            if out.len() >= max_length {
                break;
            }
        }
        out.truncate(max_length);
        out
    }

    pub(crate) fn pool(&self, units: &[usize]) -> Array1<f64> {
        let mut acc = Array1::zeros(self.config.embed_dim);
        for &u in units {
            acc += &self.embeddings.row(u);
        }
        if !units.is_empty() {
            acc /= units.len() as f64;
        }
        acc
    }

    pub(crate) fn pool_batch(&self, batch: &[&[usize]]) -> Array2<f64> {
        let mut out = Array2::zeros((batch.len(), self.config.embed_dim));
        for (mut row, units) in out.axis_iter_mut(Axis(0)).zip(batch) {
            row.assign(&self.pool(units));
        }
        out
    }

    /// Hidden representations for a batch of unit sequences.
    pub(crate) fn hidden_batch(&self, pooled: &Array2<f64>) -> Array2<f64> {
        let mut z = pooled.dot(&self.w1.t());
        z += &self.b1;
        z.mapv_inplace(f64::tanh);
        z
    }

    /// Sentence vector (hidden layer output).
    pub fn encode(&self, text: &str) -> Result<Vec<f64>> {
        let units = self.units(text, MAX_UNITS);
        if units.is_empty() {
            return Err(Error::Input(format!("no tokens in {text:?}")));
        }
        let pooled = self.pool(&units).insert_axis(Axis(0));
        Ok(self.hidden_batch(&pooled).row(0).to_vec())
    }

    /// Word vector: pooled unit embeddings of a single word.
    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        let mut units = Vec::new();
        self.word_units(word, &mut units);
        self.pool(&units).to_vec()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.id.as_bytes());
        for x in self.embeddings.iter().chain(self.w1.iter()).chain(self.b1.iter()) {
            h.update(x.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = EncoderManifest {
            format_version: ENCODER_FORMAT_VERSION,
            id: self.id.clone(),
            config: self.config,
            pretrain: self.pretrain.clone(),
        };
        let path = dir.join(ENCODER_MANIFEST);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
        let mut bytes = Vec::with_capacity(8 * (self.embeddings.len() + self.w1.len() + self.b1.len()));
        for x in self.embeddings.iter().chain(self.w1.iter()).chain(self.b1.iter()) {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        let path = dir.join(ENCODER_WEIGHTS);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(ENCODER_MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: EncoderManifest = serde_json::from_str(&text)?;
        if m.format_version != ENCODER_FORMAT_VERSION {
            return Err(Error::Input(format!("unsupported encoder format {}", m.format_version)));
        }
        let path = dir.join(ENCODER_WEIGHTS);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let c = m.config;
        let sizes = [c.buckets * c.embed_dim, c.hidden_dim * c.embed_dim, c.hidden_dim];
        let mut floats = read_f64s(&bytes, sizes.iter().sum(), &path)?.into_iter();
        let mut take = |n: usize| floats.by_ref().take(n).collect::<Vec<_>>();
        let embeddings = Array2::from_shape_vec((c.buckets, c.embed_dim), take(sizes[0])).expect("shape");
        let w1 = Array2::from_shape_vec((c.hidden_dim, c.embed_dim), take(sizes[1])).expect("shape");
        let b1 = Array1::from_vec(take(sizes[2]));
        Ok(Self {
            id: m.id,
            config: c,
            pretrain: m.pretrain,
            embeddings,
            w1,
            b1,
        })
    }
}

pub(crate) fn read_f64s(bytes: &[u8], expected: usize, path: &Path) -> Result<Vec<f64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::parse(path, 0, format!("expected {} bytes, found {}", expected * 8, bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

#[derive(Serialize, Deserialize)]
struct EncoderManifest {
    format_version: u32,
    id: String,
    config: EncoderConfig,
    pretrain: Option<PretrainInfo>,
}

/// Adam moments for one parameter tensor.
#[derive(Debug, Clone)]
struct Moments<D: ndarray::Dimension> {
    m: ndarray::Array<f64, D>,
    v: ndarray::Array<f64, D>,
}

impl<D: ndarray::Dimension> Moments<D> {
    fn like(a: &ndarray::Array<f64, D>) -> Self {
        Self {
            m: ndarray::Array::zeros(a.raw_dim()),
            v: ndarray::Array::zeros(a.raw_dim()),
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn adam_update<D: ndarray::Dimension>(
    param: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    st: &mut Moments<D>,
    lr: f64,
    t: i32,
) {
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    ndarray::Zip::from(param)
        .and(grad)
        .and(&mut st.m)
        .and(&mut st.v)
        .for_each(|p, &g, m, v| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        });
}

/// Encoder body plus a softmax head, trained with Adam and cross-entropy.
/// Embedding rows use lazy (sparse) Adam: only rows present in a batch
/// have their moments updated.
#[derive(Debug, Clone)]
pub(crate) struct HeadModel {
    pub encoder: MiniEncoder,
    /// classes x hidden_dim
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

pub(crate) struct AdamState {
    t: i32,
    emb: Moments<ndarray::Ix2>,
    w1: Moments<ndarray::Ix2>,
    b1: Moments<ndarray::Ix1>,
    hw: Moments<ndarray::Ix2>,
    hb: Moments<ndarray::Ix1>,
}

impl AdamState {
    pub fn new(model: &HeadModel) -> Self {
        Self {
            t: 0,
            emb: Moments::like(&model.encoder.embeddings),
            w1: Moments::like(&model.encoder.w1),
            b1: Moments::like(&model.encoder.b1),
            hw: Moments::like(&model.head_w),
            hb: Moments::like(&model.head_b),
        }
    }
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl HeadModel {
    pub fn new(encoder: MiniEncoder, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head_w = normal_matrix(classes, encoder.config.hidden_dim, 0.02, &mut rng);
        Self {
            encoder,
            head_w,
            head_b: Array1::zeros(classes),
        }
    }

    /// Class probabilities, one row per input.
    pub fn probabilities(&self, batch: &[&[usize]]) -> Array2<f64> {
        let pooled = self.encoder.pool_batch(batch);
        let hidden = self.encoder.hidden_batch(&pooled);
        let mut logits = hidden.dot(&self.head_w.t());
        logits += &self.head_b;
        softmax_rows(&mut logits);
        logits
    }

    /// Mean cross-entropy, accumulated in input order.
    pub fn mean_loss(&self, data: &[(Vec<usize>, usize)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for chunk in data.chunks(64) {
            let batch: Vec<&[usize]> = chunk.iter().map(|(u, _)| u.as_slice()).collect();
            let probs = self.probabilities(&batch);
            for (row, (_, y)) in probs.axis_iter(Axis(0)).zip(chunk) {
                total += -row[*y].max(1e-300).ln();
            }
        }
        total / data.len() as f64
    }

    /// Batch mean loss and its gradients.
    pub fn gradients(&self, batch: &[(&[usize], usize)]) -> (f64, Gradients) {
        let n = batch.len() as f64;
        let units: Vec<&[usize]> = batch.iter().map(|(u, _)| *u).collect();
        let pooled = self.encoder.pool_batch(&units);
        let hidden = self.encoder.hidden_batch(&pooled);
        let mut probs = hidden.dot(&self.head_w.t());
        probs += &self.head_b;
        softmax_rows(&mut probs);

        let mut loss = 0.0;
        let mut g_logits = probs;
        for (mut row, (_, y)) in g_logits.axis_iter_mut(Axis(0)).zip(batch) {
            loss += -row[*y].max(1e-300).ln();
            row[*y] -= 1.0;
            row /= n;
        }
        let head_w = g_logits.t().dot(&hidden);
        let head_b = g_logits.sum_axis(Axis(0));
        let mut g_z = g_logits.dot(&self.head_w);
        g_z.zip_mut_with(&hidden, |g, &h| *g *= 1.0 - h * h);
        let w1 = g_z.t().dot(&pooled);
        let b1 = g_z.sum_axis(Axis(0));
        let g_pooled = g_z.dot(&self.encoder.w1);

        let mut embeddings: BTreeMap<usize, Array1<f64>> = BTreeMap::new();
        for (g_row, u) in g_pooled.axis_iter(Axis(0)).zip(&units) {
            if u.is_empty() {
                continue;
            }
            let scale = 1.0 / u.len() as f64;
            for &unit in *u {
                embeddings
                    .entry(unit)
                    .or_insert_with(|| Array1::zeros(self.encoder.config.embed_dim))
                    .scaled_add(scale, &g_row);
            }
        }
        let grads = Gradients {
            embeddings,
            w1,
            b1,
            head_w,
            head_b,
        };
        (loss / n, grads)
    }

    pub fn apply(&mut self, grads: &Gradients, lr: f64, st: &mut AdamState) {
        st.t += 1;
        let t = st.t;
        adam_update(&mut self.head_w, &grads.head_w, &mut st.hw, lr, t);
        adam_update(&mut self.head_b, &grads.head_b, &mut st.hb, lr, t);
        adam_update(&mut self.encoder.w1, &grads.w1, &mut st.w1, lr, t);
        adam_update(&mut self.encoder.b1, &grads.b1, &mut st.b1, lr, t);
        let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
        for (&unit, g) in &grads.embeddings {
            let mut p = self.encoder.embeddings.row_mut(unit);
            let mut m = st.emb.m.row_mut(unit);
            let mut v = st.emb.v.row_mut(unit);
            for k in 0..g.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
            }
        }
    }

    /// One Adam step on a mini-batch; returns the batch mean loss.
    pub fn train_step(&mut self, batch: &[(&[usize], usize)], lr: f64, st: &mut AdamState) -> f64 {
        let (loss, grads) = self.gradients(batch);
        self.apply(&grads, lr, st);
        loss
    }
}

/// Parameter gradients; embedding rows are sparse.
#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub embeddings: BTreeMap<usize, Array1<f64>>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

/// Unlabeled domain text used for pretraining: NAICS descriptions split
/// into sentences plus commodity titles.
pub fn pretraining_corpus() -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for text in canonical_naics().values() {
        out.extend(text.split(". ").map(normalize).filter(|s| !s.is_empty()));
    }
    if let Ok(tax) = Taxonomy::canonical_uncomposed(crate::taxonomy::DEFAULT_FACTOR_KIND) {
        out.extend(tax.classes().iter().map(|c| normalize(&c.title)));
    }
    out
}

fn split_words(sentence: &str) -> Vec<String> {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

/// Masked-word pretraining: predict each word from the words within
/// `PRETRAIN_WINDOW` positions of it.
pub fn pretrain(id: &str, config: EncoderConfig, corpus: &[String], seed: u64, epochs: usize, lr: f64) -> MiniEncoder {
    let encoder = MiniEncoder::random(id, config, seed);
    let sentences: Vec<Vec<String>> = corpus.iter().map(|s| split_words(s)).filter(|w| w.len() > 1).collect();
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for w in sentences.iter().flatten() {
        let next = vocab.len();
        vocab.entry(w.as_str()).or_insert(next);
    }
    let mut samples: Vec<(Vec<usize>, usize)> = Vec::new();
    for words in &sentences {
        for (i, target) in words.iter().enumerate() {
            let lo = i.saturating_sub(PRETRAIN_WINDOW);
            let hi = (i + PRETRAIN_WINDOW + 1).min(words.len());
            let context: Vec<&str> = (lo..hi).filter(|&j| j != i).map(|j| words[j].as_str()).collect();
            let units = encoder.units(&context.join(" "), MAX_UNITS);
            samples.push((units, vocab[target.as_str()]));
        }
    }
    let mut model = HeadModel::new(encoder, vocab.len(), seed.wrapping_add(1));
    let mut state = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut final_loss = f64::NAN;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(32) {
            let batch: Vec<(&[usize], usize)> = chunk.iter().map(|&i| (samples[i].0.as_slice(), samples[i].1)).collect();
            total += model.train_step(&batch, lr, &mut state) * chunk.len() as f64;
        }
        final_loss = total / samples.len() as f64;
    }
    let mut digest = Sha256::new();
    for s in corpus {
        digest.update(s.as_bytes());
        digest.update([b'\n']);
    }
    let mut encoder = model.encoder;
    encoder.pretrain = Some(PretrainInfo {
        seed,
        epochs,
        learning_rate: lr,
        corpus_sentences: corpus.len(),
        corpus_sha256: hex::encode(digest.finalize()),
        final_loss,
    });
    encoder
}

fn cache() -> &'static Mutex<HashMap<String, Arc<MiniEncoder>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<MiniEncoder>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Resolves an encoder id: a built-in name (pretrained on first use and
/// cached for the process) or a directory holding a saved checkpoint.
pub fn resolve(id: &str) -> Result<Arc<MiniEncoder>> {
    if let Some((name, config)) = BUILTIN_ENCODERS.iter().find(|(name, _)| *name == id) {
        // Each builtin gets its own slot so distinct ids can pretrain concurrently.
        let slot = {
            static SLOTS: OnceLock<Mutex<HashMap<String, Arc<Mutex<()>>>>> = OnceLock::new();
            let slots = SLOTS.get_or_init(Default::default);
            slots.lock().expect("slots").entry(id.to_string()).or_default().clone()
        };
        let _guard = slot.lock().expect("slot");
        if let Some(enc) = cache().lock().expect("cache").get(id) {
            return Ok(enc.clone());
        }
        let enc = Arc::new(pretrain(name, *config, &pretraining_corpus(), PRETRAIN_SEED, PRETRAIN_EPOCHS, PRETRAIN_LR));
        cache().lock().expect("cache").insert(id.to_string(), enc.clone());
        return Ok(enc);
    }
    let dir = PathBuf::from(id);
    if dir.join(ENCODER_MANIFEST).is_file() {
        return Ok(Arc::new(MiniEncoder::load(&dir)?));
    }
    Err(Error::UnresolvedEncoder(id.to_string()))
}

/// Sentence provider over an encoder's hidden layer.
pub struct SentenceEncoderProvider(Arc<MiniEncoder>);

impl SentenceEncoderProvider {
    pub fn new(encoder: Arc<MiniEncoder>) -> Self {
        Self(encoder)
    }
}

impl EmbeddingProvider for SentenceEncoderProvider {
    fn id(&self) -> String {
        format!("encoder:{}", self.0.id)
    }

    fn dimension(&self) -> usize {
        self.0.config.hidden_dim
    }

    fn kind(&self) -> EmbeddingKind {
        EmbeddingKind::Sentence
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.0.encode(text)
    }
}

/// Word provider over an encoder's pretrained unit embeddings.
pub struct WordEncoderProvider(Arc<MiniEncoder>);

impl WordEncoderProvider {
    pub fn new(encoder: Arc<MiniEncoder>) -> Self {
        Self(encoder)
    }
}

impl EmbeddingProvider for WordEncoderProvider {
    fn id(&self) -> String {
        format!("encoder:{}", self.0.id)
    }

    fn dimension(&self) -> usize {
        self.0.config.embed_dim
    }

    fn kind(&self) -> EmbeddingKind {
        EmbeddingKind::Word
    }

    fn word_vector(&self, token: &str) -> Option<Vec<f64>> {
        Some(self.0.word_vector(token))
    }
}
