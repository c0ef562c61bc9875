//! Spend-based emission estimates per ledger line and per commodity class.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Prediction};
use crate::corpus::TransactionRecord;
use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

pub const DEFAULT_REVIEW_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEstimate {
    pub record_id: String,
    pub text: String,
    pub label: String,
    pub spend: f64,
    /// kg CO2e per currency unit.
    pub factor: f64,
    /// kg CO2e.
    pub emission: f64,
    pub confidence: f64,
    pub review_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LineOutcome {
    Mapped(LineEstimate),
    Unmapped {
        record_id: String,
        text: String,
        label: Option<String>,
        confidence: Option<f64>,
        reason: String,
    },
}

impl LineOutcome {
    pub fn record_id(&self) -> &str {
        match self {
            LineOutcome::Mapped(e) => &e.record_id,
            LineOutcome::Unmapped { record_id, .. } => record_id,
        }
    }

    pub fn estimate(&self) -> Option<&LineEstimate> {
        match self {
            LineOutcome::Mapped(e) => Some(e),
            LineOutcome::Unmapped { .. } => None,
        }
    }
}

/// Currency part of a factor basis such as `USD-2018`.
fn basis_currency(basis: &str) -> &str {
    basis.split('-').next().unwrap_or(basis)
}

pub fn estimate_line(record: &TransactionRecord, pred: &Prediction, tax: &Taxonomy, threshold: f64) -> LineOutcome {
    let unmapped = |reason: String| LineOutcome::Unmapped {
        record_id: record.id.clone(),
        text: record.text.clone(),
        label: Some(pred.label.clone()),
        confidence: Some(pred.score),
        reason,
    };
    let Some(spend) = record.amount else {
        return unmapped("missing amount".into());
    };
    let factor = match tax.lookup_factor(&pred.label) {
        Ok(f) => f,
        Err(e) => return unmapped(e.to_string()),
    };
    let currency_mismatch = record
        .currency
        .as_deref()
        .is_some_and(|c| !c.eq_ignore_ascii_case(basis_currency(&factor.currency_basis)));
    LineOutcome::Mapped(LineEstimate {
        record_id: record.id.clone(),
        text: record.text.clone(),
        label: pred.label.clone(),
        spend,
        factor: factor.factor,
        emission: spend * factor.factor,
        confidence: pred.score,
        review_flag: pred.score < threshold || spend < 0.0 || currency_mismatch,
    })
}

/// Classifies and estimates every record, keeping input order.
/// Records the model cannot classify come back unmapped rather than failing the batch.
pub fn estimate_ledger(
    records: &[TransactionRecord],
    model: &dyn Classifier,
    tax: &Taxonomy,
    threshold: f64,
) -> Result<Vec<LineOutcome>> {
    if !threshold.is_finite() {
        return Err(Error::Range(format!("review threshold {threshold} is not finite")));
    }
    use rayon::prelude::*;
    records
        .par_iter()
        .map(|r| match model.predict(&r.text) {
            Ok(p) => Ok(estimate_line(r, &p, tax, threshold)),
            Err(e) if e.is_user_error() => Ok(LineOutcome::Unmapped {
                record_id: r.id.clone(),
                text: r.text.clone(),
                label: None,
                confidence: None,
                reason: e.to_string(),
            }),
            Err(e) => Err(e.context(format!("record {}", r.id))),
        })
        .collect()
}

/// Correctly rounded sum of `xs`, independent of their order.
pub fn exact_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    // Shewchuk's non-overlapping partials, as in Python's math.fsum.
    let mut partials: Vec<f64> = Vec::new();
    for mut x in xs {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    // half-way case: round using the sign of the next partial
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassTotals {
    pub total_spend: f64,
    pub total_emission: f64,
    pub line_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub spend: f64,
    pub emission: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmappedLine {
    pub record_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmissionReport {
    pub per_class: BTreeMap<String, ClassTotals>,
    pub totals: Totals,
    /// Sorted by record id.
    pub unmapped: Vec<UnmappedLine>,
}

impl EmissionReport {
    pub fn mapped_lines(&self) -> usize {
        self.per_class.values().map(|c| c.line_count).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Totals are exact sums, so the result does not depend on line order.
pub fn aggregate(outcomes: &[LineOutcome]) -> EmissionReport {
    let mut groups: BTreeMap<&str, Vec<&LineEstimate>> = BTreeMap::new();
    let mut unmapped = Vec::new();
    for o in outcomes {
        match o {
            LineOutcome::Mapped(e) => groups.entry(&e.label).or_default().push(e),
            LineOutcome::Unmapped { record_id, reason, .. } => unmapped.push(UnmappedLine {
                record_id: record_id.clone(),
                reason: reason.clone(),
            }),
        }
    }
    unmapped.sort_by(|a, b| a.record_id.cmp(&b.record_id).then_with(|| a.reason.cmp(&b.reason)));
    let per_class = groups
        .into_iter()
        .map(|(code, lines)| {
            (
                code.to_string(),
                ClassTotals {
                    total_spend: exact_sum(lines.iter().map(|e| e.spend)),
                    total_emission: exact_sum(lines.iter().map(|e| e.emission)),
                    line_count: lines.len(),
                },
            )
        })
        .collect();
    let mapped = || outcomes.iter().filter_map(LineOutcome::estimate);
    EmissionReport {
        per_class,
        totals: Totals {
            spend: exact_sum(mapped().map(|e| e.spend)),
            emission: exact_sum(mapped().map(|e| e.emission)),
        },
        unmapped,
    }
}

/// `class_code,class_title,total_spend,total_emission_kg,line_count` plus a `TOTAL` row.
pub fn write_report_csv<W: Write>(report: &EmissionReport, tax: &Taxonomy, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(["class_code", "class_title", "total_spend", "total_emission_kg", "line_count"])
        .map_err(ser)?;
    for (code, t) in &report.per_class {
        let title = tax.get(code).map(|c| c.title.as_str()).unwrap_or("");
        w.write_record([
            code.as_str(),
            title,
            &t.total_spend.to_string(),
            &t.total_emission.to_string(),
            &t.line_count.to_string(),
        ])
        .map_err(ser)?;
    }
    w.write_record([
        "TOTAL",
        "",
        &report.totals.spend.to_string(),
        &report.totals.emission.to_string(),
        &report.mapped_lines().to_string(),
    ])
    .map_err(ser)?;
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}

/// Line-level audit trail. Unmapped lines keep their row with blank numbers and a set review flag.
pub fn write_lines_csv<W: Write>(outcomes: &[LineOutcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(["record_id", "text", "label", "score", "spend", "factor", "emission", "review_flag"])
        .map_err(ser)?;
    for o in outcomes {
        let row = match o {
            LineOutcome::Mapped(e) => [
                e.record_id.clone(),
                e.text.clone(),
                e.label.clone(),
                e.confidence.to_string(),
                e.spend.to_string(),
                e.factor.to_string(),
                e.emission.to_string(),
                e.review_flag.to_string(),
            ],
            LineOutcome::Unmapped {
                record_id,
                text,
                label,
                confidence,
                ..
            } => [
                record_id.clone(),
                text.clone(),
                label.clone().unwrap_or_default(),
                confidence.map(|c| c.to_string()).unwrap_or_default(),
                String::new(),
                String::new(),
                String::new(),
                "true".into(),
            ],
        };
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}

/// `record_id,reason` for every unmapped line.
pub fn write_unmapped_csv<W: Write>(report: &EmissionReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(["record_id", "reason"]).map_err(ser)?;
    for u in &report.unmapped {
        w.write_record([&u.record_id, &u.reason]).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}
