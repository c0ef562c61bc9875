//! Weighted F1, per-class metrics, confusion counts and model comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::corpus::LabeledExample;
use crate::error::{Error, Result};

pub const DEFAULT_LOW_F1_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub weighted_f1: f64,
    /// Every class seen as gold or prediction. Predicted-only classes have support 0.
    pub per_class: BTreeMap<String, ClassMetrics>,
    /// Row and column order of `confusion`.
    pub labels: Vec<String>,
    /// `confusion[gold][pred]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub n_examples: usize,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_predictions<S: AsRef<str>, T: AsRef<str>>(preds: &[S], golds: &[T]) -> Result<Self> {
        if preds.len() != golds.len() {
            return Err(Error::Input(format!(
                "{} predictions for {} gold labels",
                preds.len(),
                golds.len()
            )));
        }
        if golds.is_empty() {
            return Err(Error::Input("no examples to score".into()));
        }
        let labels: Vec<String> = preds
            .iter()
            .map(|s| s.as_ref())
            .chain(golds.iter().map(|s| s.as_ref()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect();
        let pos: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let k = labels.len();
        let mut confusion = vec![vec![0usize; k]; k];
        for (p, g) in preds.iter().zip(golds) {
            confusion[pos[g.as_ref()]][pos[p.as_ref()]] += 1;
        }

        let n = golds.len();
        let mut per_class = BTreeMap::new();
        let mut weighted = 0.0;
        for (i, label) in labels.iter().enumerate() {
            let tp = confusion[i][i];
            let support: usize = confusion[i].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[i]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f = f1(precision, recall);
            weighted += support as f64 * f;
            per_class.insert(
                label.clone(),
                ClassMetrics {
                    precision,
                    recall,
                    f1: f,
                    support,
                },
            );
        }
        Ok(EvalReport {
            weighted_f1: weighted / n as f64,
            per_class,
            labels,
            confusion,
            n_examples: n,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Aligned per-class table, one row per class with support, then the weighted score.
    pub fn to_table(&self) -> String {
        let w = self.per_class.keys().map(|k| k.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        writeln!(out, "{:<w$}  {:>9}  {:>9}  {:>9}  {:>7}", "class", "precision", "recall", "f1", "support").unwrap();
        for (code, m) in &self.per_class {
            if m.support == 0 {
                continue;
            }
            writeln!(
                out,
                "{code:<w$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                m.precision, m.recall, m.f1, m.support
            )
            .unwrap();
        }
        writeln!(out, "{:<w$}  {:>9}  {:>9}  {:>9.4}  {:>7}", "weighted", "", "", self.weighted_f1, self.n_examples)
            .unwrap();
        out
    }

    /// Confusion counts as CSV with gold labels down the rows.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            out.push_str(l);
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Support-weighted mean of per-class F1.
pub fn weighted_f1<S: AsRef<str>, T: AsRef<str>>(preds: &[S], golds: &[T]) -> Result<f64> {
    Ok(EvalReport::from_predictions(preds, golds)?.weighted_f1)
}

pub fn evaluate(model: &dyn Classifier, test: &[LabeledExample]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Input("empty test set".into()));
    }
    let preds: Vec<String> = test
        .par_iter()
        .map(|ex| {
            model
                .predict(&ex.text)
                .map(|p| p.label)
                .map_err(|e| e.context(format!("example {}", ex.id)))
        })
        .collect::<Result<_>>()?;
    let golds: Vec<&str> = test.iter().map(|ex| ex.label.as_str()).collect();
    EvalReport::from_predictions(&preds, &golds)
}

/// Classes present in the test data whose F1 is below `threshold`, worst first.
pub fn flag_low_performance(report: &EvalReport, threshold: f64) -> Result<Vec<String>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Range(format!("threshold {threshold} must lie in (0, 1)")));
    }
    let mut low: Vec<(&String, f64)> = report
        .per_class
        .iter()
        .filter(|(_, m)| m.support > 0 && m.f1 < threshold)
        .map(|(c, m)| (c, m.f1))
        .collect();
    low.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    Ok(low.into_iter().map(|(c, _)| c.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub weighted_f1: f64,
    pub n_examples: usize,
}

/// Rows by weighted F1 descending, equal scores by name.
pub fn compare(reports: &[(String, EvalReport)]) -> Vec<ComparisonRow> {
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|(name, r)| ComparisonRow {
            name: name.clone(),
            weighted_f1: r.weighted_f1,
            n_examples: r.n_examples,
        })
        .collect();
    rows.sort_by(|a, b| b.weighted_f1.total_cmp(&a.weighted_f1).then_with(|| a.name.cmp(&b.name)));
    rows
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    writeln!(out, "{:<w$}  {:>11}  {:>8}", "model", "weighted_f1", "examples").unwrap();
    for r in rows {
        writeln!(out, "{:<w$}  {:>11.4}  {:>8}", r.name, r.weighted_f1, r.n_examples).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let g = ["A", "B", "B", "C"];
        let r = EvalReport::from_predictions(&g, &g).unwrap();
        assert_eq!(r.weighted_f1, 1.0);
        for (i, row) in r.confusion.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert!(i == j || c == 0);
            }
        }
    }

    #[test]
    fn hand_computed_two_thirds() {
        let f = weighted_f1(&["A", "B", "B"], &["A", "A", "B"]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_classifier_on_balanced_pair() {
        let f = weighted_f1(&["A", "A", "A", "A"], &["A", "A", "B", "B"]).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_only_class_has_no_weight() {
        let r = EvalReport::from_predictions(&["A", "Z"], &["A", "A"]).unwrap();
        assert_eq!(r.per_class["Z"].support, 0);
        assert_eq!(r.per_class["Z"].f1, 0.0);
        assert!((r.weighted_f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(!r.per_class.contains_key("Q"));
    }

    #[test]
    fn length_mismatch_and_empty() {
        assert!(matches!(weighted_f1(&["A"], &["A", "B"]), Err(Error::Input(_))));
        assert!(matches!(weighted_f1::<&str, &str>(&[], &[]), Err(Error::Input(_))));
    }

    #[test]
    fn low_performance_flags() {
        let r = EvalReport::from_predictions(&["A", "B"], &["A", "B"]).unwrap();
        assert!(flag_low_performance(&r, 0.8).unwrap().is_empty());
        assert!(matches!(flag_low_performance(&r, 1.0), Err(Error::Range(_))));
        assert!(flag_low_performance(&r, 0.0).is_err());

        // A: p=1/5 r=1 -> f1 1/3; B: p=1 r=1 -> 1; C: never right -> 0
        let preds = ["A", "A", "A", "A", "A", "B"];
        let golds = ["A", "C", "C", "C", "C", "B"];
        let r = EvalReport::from_predictions(&preds, &golds).unwrap();
        assert_eq!(flag_low_performance(&r, 0.5).unwrap(), ["C", "A"]);
        assert_eq!(flag_low_performance(&r, 0.2).unwrap(), ["C"]);
    }

    fn report(f: f64) -> EvalReport {
        EvalReport {
            weighted_f1: f,
            per_class: BTreeMap::new(),
            labels: vec![],
            confusion: vec![],
            n_examples: 1,
        }
    }

    #[test]
    fn comparison_order() {
        let rows = compare(&[
            ("zeroshot".into(), report(0.42)),
            ("classical".into(), report(0.72)),
            ("finetuned".into(), report(0.87)),
        ]);
        let names: Vec<_> = rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["finetuned", "classical", "zeroshot"]);
        assert_eq!(compare(&[("only".into(), report(0.5))]).len(), 1);
        let tied = compare(&[("b".into(), report(0.5)), ("a".into(), report(0.5))]);
        assert_eq!(tied[0].name, "a");
        assert!(comparison_table(&rows).lines().nth(1).unwrap().starts_with("finetuned"));
    }

    #[test]
    fn exports() {
        let r = EvalReport::from_predictions(&["A", "B", "B"], &["A", "A", "B"]).unwrap();
        let back: EvalReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let table = r.to_table();
        assert_eq!(table.lines().count(), 4);
        assert!(table.lines().last().unwrap().starts_with("weighted"));
        assert_eq!(r.confusion_csv(), "gold\\pred,A,B\nA,1,1\nB,0,1\n");
    }

    fn labelled() -> impl Strategy<Value = Vec<(u8, u8)>> {
        prop::collection::vec((0u8..5, 0u8..5), 1..60)
    }

    proptest! {
        #[test]
        fn invariants(pairs in labelled(), seed in any::<u64>()) {
            let preds: Vec<String> = pairs.iter().map(|p| format!("c{}", p.0)).collect();
            let golds: Vec<String> = pairs.iter().map(|p| format!("c{}", p.1)).collect();
            let r = EvalReport::from_predictions(&preds, &golds).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.weighted_f1));
            prop_assert_eq!(r.per_class.values().map(|m| m.support).sum::<usize>(), r.n_examples);
            prop_assert_eq!(r.confusion.iter().flatten().sum::<usize>(), r.n_examples);
            for (l, row) in r.labels.iter().zip(&r.confusion) {
                prop_assert_eq!(row.iter().sum::<usize>(), r.per_class[l].support);
            }
            let recomputed: f64 = r.per_class.values().map(|m| m.support as f64 / r.n_examples as f64 * m.f1).sum();
            prop_assert!((recomputed - r.weighted_f1).abs() <= 1e-12);

            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let p2: Vec<&String> = idx.iter().map(|&i| &preds[i]).collect();
            let g2: Vec<&String> = idx.iter().map(|&i| &golds[i]).collect();
            let r2 = EvalReport::from_predictions(&p2, &g2).unwrap();
            prop_assert_eq!(r2.per_class, r.per_class);
            prop_assert_eq!(r2.confusion, r.confusion);
            prop_assert!((r2.weighted_f1 - r.weighted_f1).abs() <= 1e-12);
        }
    }
}
