//! Labeled and unlabeled ledger text: loading, stratified splitting,
//! subsampling and a synthetic corpus generator.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::hash::Hasher;
use std::io::Read;
use std::path::Path;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;
use crate::text::normalize;

pub const SPLIT_MANIFEST_VERSION: u32 = 1;

/// One ledger line as found in an enterprise export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub id: String,
    pub text: String,
    pub amount: Option<f64>,
    pub currency: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    /// Normalized ledger text.
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Ratios {
    pub const PAPER_DEFAULT: Ratios = Ratios {
        train: 0.7,
        validation: 0.2,
        test: 0.1,
    };

    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = Ratios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = self.as_array();
        if parts.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::Range(format!("split ratios must all be positive, got {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Range(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }
}

impl Default for Ratios {
    fn default() -> Self {
        Self::PAPER_DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub seed: u64,
    pub ratios: Ratios,
    /// Exact duplicate (text, label) pairs removed before splitting.
    pub dropped_duplicates: usize,
}

/// Audit record of a split: which ids landed where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub version: u32,
    pub seed: u64,
    pub ratios: Ratios,
    pub dropped_duplicates: usize,
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl DatasetSplit {
    pub fn parts(&self) -> [&[LabeledExample]; 3] {
        [&self.train, &self.validation, &self.test]
    }

    pub fn manifest(&self) -> SplitManifest {
        let ids = |v: &[LabeledExample]| v.iter().map(|e| e.id.clone()).collect();
        SplitManifest {
            version: SPLIT_MANIFEST_VERSION,
            seed: self.seed,
            ratios: self.ratios,
            dropped_duplicates: self.dropped_duplicates,
            train_ids: ids(&self.train),
            validation_ids: ids(&self.validation),
            test_ids: ids(&self.test),
        }
    }
}

fn csv_line(err: &csv::Error) -> usize {
    err.position().map(|p| p.line() as usize).unwrap_or(0)
}

#[derive(Deserialize)]
struct LabeledRow {
    text: String,
    label: String,
}

/// Reads `text,label` rows. Row ids are `row-<n>` with `n` the 1-based data row.
pub fn parse_labeled<R: Read>(input: R, source: &str, tax: &Taxonomy) -> Result<Vec<LabeledExample>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<LabeledRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(source, csv_line(&e), e))?;
        let line = i + 2;
        if !tax.contains(&row.label) {
            return Err(Error::Validation(format!(
                "{source} line {line}: unknown label {:?}",
                row.label
            )));
        }
        let text = normalize(&row.text);
        if text.is_empty() {
            return Err(Error::Validation(format!("{source} line {line}: empty text")));
        }
        out.push(LabeledExample {
            id: format!("row-{}", i + 1),
            text,
            label: row.label,
        });
    }
    Ok(out)
}

pub fn load_labeled(path: &Path, tax: &Taxonomy) -> Result<Vec<LabeledExample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labeled(file, &path.display().to_string(), tax)
}

/// Writes `id,text,label` rows; `parse_labeled` ignores the id column.
pub fn write_labeled<W: std::io::Write>(examples: &[LabeledExample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(["id", "text", "label"]).map_err(ser)?;
    for e in examples {
        w.write_record([&e.id, &e.text, &e.label]).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}

/// Reads labeled rows that carry their own `id` column (as written by
/// [`write_labeled`]).
pub fn load_labeled_with_ids(path: &Path, tax: &Taxonomy) -> Result<Vec<LabeledExample>> {
    let source = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<LabeledExample>().enumerate() {
        let mut row = row.map_err(|e| Error::parse(&source, csv_line(&e), e))?;
        if !tax.contains(&row.label) {
            return Err(Error::Validation(format!("{source} line {}: unknown label {:?}", i + 2, row.label)));
        }
        row.text = normalize(&row.text);
        if row.text.is_empty() {
            return Err(Error::Validation(format!("{source} line {}: empty text", i + 2)));
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct LedgerRow {
    id: String,
    text: String,
    #[serde(default)]
    amount: Option<String>,
    #[serde(default)]
    currency: Option<String>,
}

/// Reads an `id,text,amount,currency` ledger. Amount and currency may be blank.
pub fn parse_ledger<R: Read>(input: R, source: &str) -> Result<Vec<TransactionRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<LedgerRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(source, csv_line(&e), e))?;
        let line = i + 2;
        if normalize(&row.text).is_empty() {
            return Err(Error::Validation(format!("{source} line {line}: empty text")));
        }
        if !seen.insert(row.id.clone()) {
            return Err(Error::Validation(format!("{source} line {line}: duplicate id {}", row.id)));
        }
        let amount = match row.amount.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .map_err(|e| Error::parse(source, line, format!("amount {s:?}: {e}")))?,
            ),
        };
        let currency = row.currency.filter(|c| !c.trim().is_empty());
        out.push(TransactionRecord {
            id: row.id,
            text: row.text,
            amount,
            currency,
        });
    }
    Ok(out)
}

pub fn load_ledger(path: &Path) -> Result<Vec<TransactionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ledger(file, &path.display().to_string())
}

/// Drops exact duplicate (text, label) pairs, keeping first occurrences.
/// Returns the kept examples and the number dropped.
pub fn dedup(examples: &[LabeledExample]) -> (Vec<LabeledExample>, usize) {
    let mut seen = HashSet::new();
    let kept: Vec<_> = examples
        .iter()
        .filter(|e| seen.insert((e.text.as_str(), e.label.as_str())))
        .cloned()
        .collect();
    let dropped = examples.len() - kept.len();
    (kept, dropped)
}

fn class_rng(seed: u64, salt: &str, code: &str) -> ChaCha8Rng {
    let mut h = FnvHasher::default();
    h.write(salt.as_bytes());
    h.write(&[0]);
    h.write(code.as_bytes());
    ChaCha8Rng::seed_from_u64(seed ^ h.finish())
}

fn group_by_label(examples: &[LabeledExample]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in examples.iter().enumerate() {
        groups.entry(e.label.as_str()).or_default().push(i);
    }
    groups
}

/// Largest-remainder apportionment of `n` over `ratios`; ties go to the
/// earlier part.
fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let raw = ratios.map(|r| r * n as f64);
    let mut counts = raw.map(|r| r.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = raw[a] - raw[a].floor();
        let rb = raw[b] - raw[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &p in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[p] += 1;
        left -= 1;
    }
    counts
}

/// Per-class part sizes whose column sums match the global apportionment.
/// Each cell is the floor or ceiling of its exact share. Extra units go to
/// the largest remainders (ties by class order, then part order); any units
/// the greedy pass cannot place are routed along augmenting paths.
fn controlled_rounding(class_sizes: &[usize], ratios: &[f64; 3]) -> Result<Vec<[usize; 3]>> {
    let total: usize = class_sizes.iter().sum();
    let targets = apportion(total, ratios);
    let raw: Vec<[f64; 3]> = class_sizes
        .iter()
        .map(|&n| ratios.map(|r| r * n as f64))
        .collect();
    let mut cells: Vec<[usize; 3]> = raw.iter().map(|r| r.map(|x| x.floor() as usize)).collect();
    let frac = |c: usize, p: usize| raw[c][p] - raw[c][p].floor();
    let mut row_def: Vec<usize> = class_sizes
        .iter()
        .zip(&cells)
        .map(|(&n, row)| n - row.iter().sum::<usize>())
        .collect();
    let mut col_def: Vec<isize> = (0..3)
        .map(|p| targets[p] as isize - cells.iter().map(|r| r[p]).sum::<usize>() as isize)
        .collect();
    let mut bumped = vec![[false; 3]; class_sizes.len()];

    let mut cand: Vec<(usize, usize)> = (0..class_sizes.len())
        .flat_map(|c| (0..3).map(move |p| (c, p)))
        .filter(|&(c, p)| frac(c, p) > 1e-12)
        .collect();
    cand.sort_by(|&(c1, p1), &(c2, p2)| frac(c2, p2).total_cmp(&frac(c1, p1)).then(c1.cmp(&c2)).then(p1.cmp(&p2)));
    for &(c, p) in &cand {
        if row_def[c] > 0 && col_def[p] > 0 {
            cells[c][p] += 1;
            bumped[c][p] = true;
            row_def[c] -= 1;
            col_def[p] -= 1;
        }
    }

    while let Some(start) = row_def.iter().position(|&d| d > 0) {
        // BFS over rows; parent links record (row, col) hops.
        let rows = class_sizes.len();
        let mut row_seen = vec![false; rows];
        let mut col_parent: [Option<usize>; 3] = [None; 3];
        let mut row_parent: Vec<Option<usize>> = vec![None; rows];
        let mut queue = std::collections::VecDeque::from([start]);
        row_seen[start] = true;
        let mut end_col = None;
        'bfs: while let Some(r) = queue.pop_front() {
            for p in 0..3 {
                if col_parent[p].is_some() || bumped[r][p] || frac(r, p) <= 1e-12 {
                    continue;
                }
                col_parent[p] = Some(r);
                if col_def[p] > 0 {
                    end_col = Some(p);
                    break 'bfs;
                }
                for r2 in 0..rows {
                    if !row_seen[r2] && bumped[r2][p] {
                        row_seen[r2] = true;
                        row_parent[r2] = Some(p);
                        queue.push_back(r2);
                    }
                }
            }
        }
        let mut p = end_col.ok_or_else(|| Error::Validation("stratified rounding has no solution".into()))?;
        col_def[p] -= 1;
        loop {
            let r = col_parent[p].expect("path");
            cells[r][p] += 1;
            bumped[r][p] = true;
            match row_parent[r] {
                None => {
                    row_def[r] -= 1;
                    break;
                }
                Some(prev) => {
                    cells[r][prev] -= 1;
                    bumped[r][prev] = false;
                    p = prev;
                }
            }
        }
    }
    Ok(cells)
}

/// Stratified split by label after dropping duplicate (text, label) pairs.
pub fn split(examples: &[LabeledExample], ratios: Ratios, seed: u64) -> Result<DatasetSplit> {
    ratios.validate()?;
    let (examples, dropped) = dedup(examples);
    if examples.is_empty() {
        return Err(Error::Input("cannot split an empty corpus".into()));
    }
    let groups = group_by_label(&examples);
    if let Some((label, idx)) = groups.iter().find(|(_, idx)| idx.len() < 3) {
        return Err(Error::Input(format!(
            "class {label} has {} examples; stratified split needs at least 3",
            idx.len()
        )));
    }
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let counts = controlled_rounding(&sizes, &ratios.as_array())?;

    let mut parts: [Vec<usize>; 3] = Default::default();
    for ((label, idx), count) in groups.iter().zip(&counts) {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut class_rng(seed, "split", label));
        let mut offset = 0;
        for (p, &k) in count.iter().enumerate() {
            parts[p].extend_from_slice(&shuffled[offset..offset + k]);
            offset += k;
        }
    }
    let [train, validation, test] = parts.map(|mut ids| {
        ids.sort_unstable();
        ids.into_iter().map(|i| examples[i].clone()).collect::<Vec<_>>()
    });
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
        ratios,
        dropped_duplicates: dropped,
    })
}

fn subsample_part(examples: &[LabeledExample], fraction: f64, seed: u64, salt: &str) -> Vec<LabeledExample> {
    let mut keep = Vec::new();
    for (label, idx) in group_by_label(examples) {
        let k = ((fraction * idx.len() as f64) - 1e-9).ceil().max(0.0) as usize;
        let mut shuffled = idx;
        shuffled.shuffle(&mut class_rng(seed, salt, label));
        keep.extend_from_slice(&shuffled[..k.min(shuffled.len())]);
    }
    keep.sort_unstable();
    keep.into_iter().map(|i| examples[i].clone()).collect()
}

/// Keeps `ceil(fraction * n)` examples per class of train and validation.
/// The test part is left untouched.
pub fn subsample(split: &DatasetSplit, fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Range(format!("subsample fraction {fraction} not in (0, 1]")));
    }
    if fraction == 1.0 {
        return Ok(split.clone());
    }
    Ok(DatasetSplit {
        train: subsample_part(&split.train, fraction, seed, "subsample-train"),
        validation: subsample_part(&split.validation, fraction, seed, "subsample-validation"),
        ..split.clone()
    })
}

const STOPWORDS: &[&str] = &[
    "and", "the", "of", "for", "such", "as", "to", "in", "on", "by", "or", "from", "into", "with",
    "other", "related", "except", "establishments", "primarily", "providing", "making", "engaged",
    "products", "product", "services", "service", "activities", "industries", "manufacturing",
    "operating", "including", "their", "through", "than", "not", "similar", "allied", "support",
    "basis", "others", "goods", "includes", "legal", "general", "all",
];

const TEMPLATES: &[&str] = &[
    "{} expense",
    "cost of {}",
    "{} purchase",
    "payment for {}",
    "{} invoice",
    "{} charges",
    "purchase of {}",
    "{} fees",
    "{}",
    "monthly {} bill",
    "{} supplies order",
    "reimbursement {}",
];

const DISTRACTORS: &[&str] = &[
    "q1", "q2", "q3", "q4", "misc", "net 30", "annual", "monthly", "dept", "reimb", "us", "hq",
    "site", "project", "accrual", "adj",
];

/// Content words of a class used to fill expense templates.
pub fn keyphrase_pool(title: &str, description: &str) -> Vec<String> {
    let stop: HashSet<&str> = STOPWORDS.iter().copied().collect();
    let mut seen = HashSet::new();
    format!("{title} {description}")
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() >= 3 && !stop.contains(w) && !w.chars().all(|c| c.is_ascii_digit()))
        .filter(|w| seen.insert(w.to_string()))
        .map(String::from)
        .collect()
}

/// Emits exactly `n_per_class` templated expense lines per class.
pub fn synth_generate(tax: &Taxonomy, n_per_class: usize, seed: u64) -> Result<Vec<LabeledExample>> {
    if tax.class_count() == 0 {
        return Err(Error::Input("empty taxonomy".into()));
    }
    if n_per_class == 0 {
        return Err(Error::Range("n_per_class must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(tax.class_count() * n_per_class);
    for cls in tax.classes() {
        let pool = keyphrase_pool(&cls.title, &cls.description);
        if pool.is_empty() {
            return Err(Error::Input(format!("class {} has no usable keywords", cls.code)));
        }
        let mut rng = class_rng(seed, "synth", &cls.code);
        let mut seen = BTreeSet::new();
        for i in 0..n_per_class {
            let mut text = String::new();
            for _ in 0..100 {
                text = synth_line(&pool, &mut rng);
                if seen.insert(text.clone()) {
                    break;
                }
            }
            out.push(LabeledExample {
                id: format!("{}-{:04}", cls.code, i),
                text,
                label: cls.code.clone(),
            });
        }
    }
    Ok(out)
}

fn synth_line(pool: &[String], rng: &mut ChaCha8Rng) -> String {
    let n_words = if pool.len() > 1 && rng.gen_bool(0.4) { 2 } else { 1 };
    let phrase = pool
        .choose_multiple(rng, n_words)
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(" ");
    let template = TEMPLATES.choose(rng).expect("templates");
    let mut line = template.replace("{}", &phrase);
    if rng.gen_bool(0.5) {
        line.push(' ');
        line.push_str(DISTRACTORS.choose(rng).expect("distractors"));
    }
    if rng.gen_bool(0.3) {
        line.push_str(&format!(" {}", rng.gen_range(1000..99999)));
    }
    normalize(&line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{CommodityClass, Taxonomy};

    fn tax_with(codes: &[&str]) -> Taxonomy {
        let classes = codes
            .iter()
            .map(|c| CommodityClass {
                code: c.to_string(),
                title: format!("{c} widgets"),
                naics_codes: vec!["1".into()],
                description: String::new(),
            })
            .collect();
        Taxonomy::new(classes, vec![], "with_margins").unwrap()
    }

    fn corpus(per_class: &[(&str, usize)]) -> Vec<LabeledExample> {
        per_class
            .iter()
            .flat_map(|&(label, n)| {
                (0..n).map(move |i| LabeledExample {
                    id: format!("{label}-{i}"),
                    text: format!("{label} item {i}"),
                    label: label.to_string(),
                })
            })
            .collect()
    }

    #[test]
    fn loads_labeled_rows_and_rejects_unknown_labels() {
        let tax = tax_with(&["A", "B"]);
        let ok = "text,label\nOffice Chairs.,A\nlaptop,B\n";
        let ex = parse_labeled(ok.as_bytes(), "l.csv", &tax).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].text, "office chairs");
        assert_eq!(ex[1].id, "row-2");

        let bad = "text,label\nchairs,A\ndesk,ZZ\n";
        match parse_labeled(bad.as_bytes(), "l.csv", &tax) {
            Err(Error::Validation(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let empty = "text,label\n...,A\n";
        assert!(matches!(parse_labeled(empty.as_bytes(), "l.csv", &tax), Err(Error::Validation(_))));
    }

    #[test]
    fn ledger_amounts_are_optional() {
        let src = "id,text,amount,currency\n1,Laptops,1200.50,USD\n2,Refund,,\n";
        let recs = parse_ledger(src.as_bytes(), "ledger").unwrap();
        assert_eq!(recs[0].amount, Some(1200.5));
        assert_eq!(recs[1].amount, None);
        assert_eq!(recs[1].currency, None);
        let dup = "id,text,amount,currency\n1,a,1,USD\n1,b,2,USD\n";
        assert!(parse_ledger(dup.as_bytes(), "ledger").is_err());
    }

    #[test]
    fn split_sizes_for_100_examples() {
        let ex = corpus(&[("A", 50), ("B", 50)]);
        let s = split(&ex, Ratios::PAPER_DEFAULT, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (70, 20, 10));
    }

    #[test]
    fn uneven_classes_still_hit_global_targets() {
        let ex = corpus(&[("A", 34), ("B", 33), ("C", 33)]);
        let s = split(&ex, Ratios::PAPER_DEFAULT, 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (70, 20, 10));
        for label in ["A", "B", "C"] {
            let n = ex.iter().filter(|e| e.label == label).count() as f64;
            for (part, r) in s.parts().iter().zip(Ratios::PAPER_DEFAULT.as_array()) {
                let k = part.iter().filter(|e| e.label == label).count() as f64;
                assert!((k - r * n).abs() < 1.0, "{label}: {k} vs {}", r * n);
            }
        }
    }

    #[test]
    fn split_rejects_bad_ratios_and_tiny_classes() {
        let ex = corpus(&[("A", 10)]);
        assert!(matches!(split(&ex, Ratios { train: 1.0, validation: 0.0, test: 0.0 }, 1), Err(Error::Range(_))));
        assert!(Ratios::new(0.5, 0.2, 0.2).is_err());
        let small = corpus(&[("A", 10), ("B", 2)]);
        match split(&small, Ratios::PAPER_DEFAULT, 1) {
            Err(Error::Input(msg)) => assert!(msg.contains("class B")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn split_is_deterministic_and_drops_duplicates() {
        let mut ex = corpus(&[("A", 20), ("B", 20)]);
        let a = split(&ex, Ratios::PAPER_DEFAULT, 11).unwrap();
        let b = split(&ex, Ratios::PAPER_DEFAULT, 11).unwrap();
        assert_eq!(a, b);
        let c = split(&ex, Ratios::PAPER_DEFAULT, 12).unwrap();
        assert_ne!(a.manifest().train_ids, c.manifest().train_ids);

        let mut dupe = ex[0].clone();
        dupe.id = "dupe".into();
        ex.push(dupe);
        let d = split(&ex, Ratios::PAPER_DEFAULT, 11).unwrap();
        assert_eq!(d.dropped_duplicates, 1);
        assert_eq!(d.train.len() + d.validation.len() + d.test.len(), 40);
    }

    #[test]
    fn subsample_halves_train_and_keeps_test() {
        let ex = corpus(&[("A", 100), ("B", 100)]);
        let s = split(&ex, Ratios::PAPER_DEFAULT, 5).unwrap();
        assert_eq!(s.train.len(), 140);
        let half = subsample(&s, 0.5, 9).unwrap();
        assert_eq!(half.train.len(), 70);
        assert_eq!(half.validation.len(), 20);
        assert_eq!(half.test, s.test);
        assert_eq!(half, subsample(&s, 0.5, 9).unwrap());
        assert_eq!(subsample(&s, 1.0, 9).unwrap(), s);
        assert!(matches!(subsample(&s, 0.0, 9), Err(Error::Range(_))));
        assert!(matches!(subsample(&s, 1.5, 9), Err(Error::Range(_))));
    }

    #[test]
    fn synth_counts_and_determinism() {
        let tax = Taxonomy::canonical();
        let a = synth_generate(&tax, 40, 42).unwrap();
        assert_eq!(a.len(), 2640);
        let mut hist = BTreeMap::new();
        for e in &a {
            *hist.entry(e.label.clone()).or_insert(0) += 1;
        }
        assert_eq!(hist.len(), 66);
        assert!(hist.values().all(|&n| n == 40));
        assert_eq!(a, synth_generate(&tax, 40, 42).unwrap());
        assert!(a.iter().all(|e| !e.text.is_empty()));
    }

    #[test]
    fn synth_single_class_uses_title_token() {
        let tax = tax_with(&["A"]);
        let ex = synth_generate(&tax, 1, 0).unwrap();
        assert_eq!(ex.len(), 1);
        assert!(ex[0].text.contains("widgets"), "{}", ex[0].text);
    }
}
