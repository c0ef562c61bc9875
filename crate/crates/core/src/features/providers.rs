use std::collections::HashMap;
use std::hash::Hasher;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use fnv::FnvHasher;
use rayon::prelude::*;

use super::FeatureVector;
use crate::encoder;
use crate::error::{Error, Result};
use crate::text::{normalize, tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    Word,
    Sentence,
}

/// Source of fixed-length vectors. Word providers answer per token,
/// sentence providers per whole text.
pub trait EmbeddingProvider: Send + Sync {
    /// Configuration string that recreates this provider.
    fn id(&self) -> String;
    fn dimension(&self) -> usize;
    fn kind(&self) -> EmbeddingKind;

    /// Vector of a single token, `None` when out of vocabulary.
    fn word_vector(&self, _token: &str) -> Option<Vec<f64>> {
        None
    }

    /// Vector of a whole text.
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        Err(Error::Provider {
            id: self.id(),
            message: format!("word provider cannot embed sentence {text:?}"),
        })
    }
}

/// Mean of in-vocabulary token vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedEmbedding {
    pub vector: FeatureVector,
    /// Set when no token had a vector; `vector` is then all zeros.
    pub all_oov: bool,
}

pub fn average_word_embeddings(provider: &dyn EmbeddingProvider, text: &str) -> Result<AveragedEmbedding> {
    if provider.kind() != EmbeddingKind::Word {
        return Err(Error::Input(format!("{} is not a word provider", provider.id())));
    }
    let dim = provider.dimension();
    let mut sum = vec![0.0; dim];
    let mut hits = 0usize;
    let norm = normalize(text);
    for tok in tokens(&norm) {
        if let Some(v) = provider.word_vector(tok) {
            sum.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
            hits += 1;
        }
    }
    if hits > 0 {
        sum.iter_mut().for_each(|s| *s /= hits as f64);
    }
    Ok(AveragedEmbedding {
        vector: FeatureVector::Dense(sum),
        all_oov: hits == 0,
    })
}

/// Embeds one text; `id` names the record in provider errors.
pub fn embed_sentence(provider: &dyn EmbeddingProvider, id: &str, text: &str) -> Result<FeatureVector> {
    if provider.kind() != EmbeddingKind::Sentence {
        return Err(Error::Input(format!("{} is not a sentence provider", provider.id())));
    }
    let v = provider.embed(text).map_err(|e| Error::Provider {
        id: id.to_string(),
        message: e.to_string(),
    })?;
    if v.len() != provider.dimension() {
        return Err(Error::Provider {
            id: id.to_string(),
            message: format!("expected {} dims, got {}", provider.dimension(), v.len()),
        });
    }
    Ok(FeatureVector::Dense(v))
}

/// Embeds texts in parallel; output order follows input order.
pub fn embed_batch<S: AsRef<str> + Sync>(provider: &dyn EmbeddingProvider, texts: &[S]) -> Result<Vec<FeatureVector>> {
    texts
        .par_iter()
        .enumerate()
        .map(|(i, t)| embed_sentence(provider, &format!("#{i}"), t.as_ref()))
        .collect()
}

/// Word vectors read from the common `count dim` / `token v1 .. vd` text format.
#[derive(Debug, Clone)]
pub struct WordVectorTable {
    id: String,
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(id: impl Into<String>, dim: usize, vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("word vectors need a positive dimension".into()));
        }
        if let Some((tok, v)) = vectors.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::Validation(format!("vector for {tok:?} has {} dims, expected {dim}", v.len())));
        }
        Ok(Self {
            id: id.into(),
            dim,
            vectors,
        })
    }

    pub fn from_reader<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(source, 1, "missing header"))?
            .map_err(|e| Error::parse(source, 1, e))?;
        let mut head = header.split_whitespace().map(str::parse::<usize>);
        let (count, dim) = match (head.next(), head.next(), head.next()) {
            (Some(Ok(c)), Some(Ok(d)), None) => (c, d),
            _ => return Err(Error::parse(source, 1, "header must be `count dim`")),
        };
        let mut vectors = HashMap::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::parse(source, lineno, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-empty line").to_string();
            let v = fields
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(source, lineno, e))?;
            if v.len() != dim {
                return Err(Error::parse(source, lineno, format!("expected {dim} values, got {}", v.len())));
            }
            vectors.insert(token, v);
        }
        if vectors.len() != count {
            return Err(Error::parse(source, 1, format!("header says {count} vectors, found {}", vectors.len())));
        }
        Self::new(format!("vectors:{source}"), dim, vectors)
    }

    pub fn from_text_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    /// Writes the table in text format, tokens sorted.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::Serde(format!("{e}"));
        writeln!(out, "{} {}", self.vectors.len(), self.dim).map_err(io)?;
        let mut keys: Vec<_> = self.vectors.keys().collect();
        keys.sort();
        for k in keys {
            let vals: Vec<String> = self.vectors[k].iter().map(|x| x.to_string()).collect();
            writeln!(out, "{k} {}", vals.join(" ")).map_err(io)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for WordVectorTable {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn kind(&self) -> EmbeddingKind {
        EmbeddingKind::Word
    }

    fn word_vector(&self, token: &str) -> Option<Vec<f64>> {
        self.vectors.get(token).cloned()
    }
}

/// Lexical sentence encoder: signed feature hashing of words and character
/// 3..=5-grams, L2-normalized. Needs no trained weights.
#[derive(Debug, Clone)]
pub struct HashingSentenceEncoder {
    dim: usize,
}

impl HashingSentenceEncoder {
    pub const DEFAULT_DIM: usize = 512;

    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("hashing encoder needs a positive dimension".into()));
        }
        Ok(Self { dim })
    }

    fn add(&self, out: &mut [f64], feature: &str, weight: f64) {
        let mut h = FnvHasher::default();
        h.write(feature.as_bytes());
        let hash = h.finish();
        let sign = if hash >> 63 == 1 { -1.0 } else { 1.0 };
        out[(hash % self.dim as u64) as usize] += sign * weight;
    }
}

impl EmbeddingProvider for HashingSentenceEncoder {
    fn id(&self) -> String {
        format!("hashing:{}", self.dim)
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn kind(&self) -> EmbeddingKind {
        EmbeddingKind::Sentence
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        let norm = normalize(text);
        for word in tokens(&norm) {
            self.add(&mut out, &format!("w:{word}"), 1.0);
            let chars: Vec<char> = format!("<{word}>").chars().collect();
            for n in 3..=5 {
                for gram in chars.windows(n) {
                    let gram: String = gram.iter().collect();
                    self.add(&mut out, &format!("c:{gram}"), 0.5);
                }
            }
        }
        let l2 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if l2 > 0.0 {
            out.iter_mut().for_each(|x| *x /= l2);
        }
        Ok(out)
    }
}

/// Resolves a sentence provider from its configuration string:
/// `hashing`, `hashing:<dim>`, or `encoder:<encoder id or checkpoint dir>`.
pub fn sentence_provider(config: &str) -> Result<Arc<dyn EmbeddingProvider>> {
    match config.split_once(':') {
        None if config == "hashing" => Ok(Arc::new(HashingSentenceEncoder::new(HashingSentenceEncoder::DEFAULT_DIM)?)),
        Some(("hashing", dim)) => {
            let dim = dim
                .parse()
                .map_err(|_| Error::Input(format!("bad hashing dimension in {config:?}")))?;
            Ok(Arc::new(HashingSentenceEncoder::new(dim)?))
        }
        Some(("encoder", id)) => Ok(Arc::new(encoder::SentenceEncoderProvider::new(encoder::resolve(id)?))),
        _ => Err(Error::Input(format!("unknown sentence provider {config:?}"))),
    }
}

/// Resolves a word provider: `vectors:<path>` or `encoder:<encoder id or dir>`.
pub fn word_provider(config: &str) -> Result<Arc<dyn EmbeddingProvider>> {
    match config.split_once(':') {
        Some(("vectors", path)) => Ok(Arc::new(WordVectorTable::from_text_file(Path::new(path))?)),
        Some(("encoder", id)) => Ok(Arc::new(encoder::WordEncoderProvider::new(encoder::resolve(id)?))),
        _ => Err(Error::Input(format!("unknown word provider {config:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> WordVectorTable {
        let src = "3 2\nleft 1 0\nright 0 1\nboth 0.5 0.5\n";
        WordVectorTable::from_reader(src.as_bytes(), "t").unwrap()
    }

    #[test]
    fn averages_in_vocabulary_tokens() {
        let t = table();
        let avg = average_word_embeddings(&t, "left right").unwrap();
        assert_eq!(avg.vector, FeatureVector::Dense(vec![0.5, 0.5]));
        assert!(!avg.all_oov);
        let one = average_word_embeddings(&t, "right zzz").unwrap();
        assert_eq!(one.vector, FeatureVector::Dense(vec![0.0, 1.0]));
        let none = average_word_embeddings(&t, "foo bar").unwrap();
        assert!(none.all_oov);
        assert!(none.vector.is_zero());
    }

    #[test]
    fn word_vector_file_errors_name_lines() {
        match WordVectorTable::from_reader("2 2\na 1 2\nb 1\n".as_bytes(), "v.txt") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(WordVectorTable::from_reader("x\n".as_bytes(), "v").is_err());
        let mut buf = Vec::new();
        table().write_text(&mut buf).unwrap();
        let back = WordVectorTable::from_reader(buf.as_slice(), "t").unwrap();
        assert_eq!(back.word_vector("both"), Some(vec![0.5, 0.5]));
    }

    #[test]
    fn kinds_are_enforced() {
        let h = HashingSentenceEncoder::new(64).unwrap();
        assert!(average_word_embeddings(&h, "x").is_err());
        assert!(embed_sentence(&table(), "r1", "x").is_err());
    }

    #[test]
    fn hashing_encoder_shape_and_determinism() {
        let h = sentence_provider("hashing:128").unwrap();
        let a = embed_sentence(h.as_ref(), "a", "office chairs and desks").unwrap();
        assert_eq!(a.dim(), 128);
        assert_eq!(a, embed_sentence(h.as_ref(), "a", "Office chairs and desks.").unwrap());
        let b = embed_sentence(h.as_ref(), "b", "jet fuel for aircraft").unwrap();
        assert!(super::super::cosine_similarity(&a, &b).unwrap() < 0.99);
        let batch = embed_batch(h.as_ref(), &["jet fuel for aircraft", "office chairs and desks"]).unwrap();
        assert_eq!(batch[0], b);
        assert_eq!(batch[1], a);
    }

    #[test]
    fn unknown_provider_strings() {
        assert!(sentence_provider("bogus").is_err());
        assert!(word_provider("hashing").is_err());
        assert!(sentence_provider("hashing:abc").is_err());
    }
}
