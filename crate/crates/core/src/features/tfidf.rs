use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};
use crate::text::{normalize, tokens};

pub const TFIDF_FORMAT_VERSION: u32 = 1;

/// Smoothed-idf TF-IDF vocabulary. Columns follow lexicographic term order.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    doc_count: usize,
}

#[derive(Serialize, Deserialize)]
struct TfidfFile {
    version: u32,
    doc_count: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
}

/// Fits `idf(t) = ln((1 + N) / (1 + df(t))) + 1` over whitespace tokens of
/// the normalized texts.
pub fn fit_tfidf<S: AsRef<str>>(texts: &[S]) -> Result<TfidfModel> {
    if texts.is_empty() {
        return Err(Error::Input("cannot fit TF-IDF on an empty corpus".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        let norm = normalize(text.as_ref());
        let distinct: BTreeSet<&str> = tokens(&norm).collect();
        for t in distinct {
            *df.entry(t.to_string()).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::Input("TF-IDF corpus has no tokens".into()));
    }
    let n = texts.len() as f64;
    let idf = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
    let vocabulary = df.into_keys().enumerate().map(|(i, t)| (t, i)).collect();
    Ok(TfidfModel {
        vocabulary,
        idf,
        doc_count: texts.len(),
    })
}

/// Raw term count times idf, L2-normalized. Out-of-vocabulary tokens are
/// ignored; all-OOV text gives the zero vector.
pub fn tfidf_transform(model: &TfidfModel, text: &str) -> FeatureVector {
    let norm = normalize(text);
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in tokens(&norm) {
        if let Some(&col) = model.vocabulary.get(t) {
            *counts.entry(col).or_default() += 1.0;
        }
    }
    let (indices, mut values): (Vec<usize>, Vec<f64>) =
        counts.into_iter().map(|(col, tf)| (col, tf * model.idf[col])).unzip();
    let l2 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 > 0.0 {
        values.iter_mut().for_each(|v| *v /= l2);
    }
    FeatureVector::Sparse {
        dim: model.idf.len(),
        indices,
        values,
    }
}

impl TfidfModel {
    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&i| self.idf[i])
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn transform(&self, text: &str) -> FeatureVector {
        tfidf_transform(self, text)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = TfidfFile {
            version: TFIDF_FORMAT_VERSION,
            doc_count: self.doc_count,
            terms: self.vocabulary.keys().cloned().collect(),
            idf: self.idf.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TfidfFile = serde_json::from_str(s)?;
        if file.version != TFIDF_FORMAT_VERSION {
            return Err(Error::Input(format!("unsupported TF-IDF format version {}", file.version)));
        }
        if file.terms.len() != file.idf.len() {
            return Err(Error::Validation("TF-IDF terms and idf lengths differ".into()));
        }
        if !file.terms.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation("TF-IDF terms must be sorted and unique".into()));
        }
        Ok(Self {
            vocabulary: file.terms.into_iter().enumerate().map(|(i, t)| (t, i)).collect(),
            idf: file.idf,
            doc_count: file.doc_count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_document_idf() {
        let m = fit_tfidf(&["red apple", "green apple"]).unwrap();
        assert_eq!(m.idf_of("apple").unwrap(), 1.0);
        assert!((m.idf_of("red").unwrap() - 1.405465108108164).abs() < 1e-12);
        assert!(m.idf().iter().all(|&x| x >= 1.0));
        let terms: Vec<_> = m.vocabulary().keys().cloned().collect();
        assert_eq!(terms, ["apple", "green", "red"]);
    }

    #[test]
    fn transform_normalizes_and_ignores_oov() {
        let m = fit_tfidf(&["red apple", "green apple"]).unwrap();
        let v = m.transform("red apple");
        assert!((v.get(m.vocabulary()["red"]) - 0.8148024746671689).abs() < 1e-9);
        assert!((v.get(m.vocabulary()["apple"]) - 0.5797386715376657).abs() < 1e-9);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(m.transform("banana split").is_zero());
        assert_eq!(m.transform("red apple"), v);
    }

    #[test]
    fn single_document_idf_is_one() {
        let m = fit_tfidf(&["one two three"]).unwrap();
        assert!(m.idf().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(fit_tfidf::<&str>(&[]).is_err());
        assert!(fit_tfidf(&["", "  "]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = fit_tfidf(&["red apple", "green apple", "apple pie"]).unwrap();
        let back = TfidfModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
