//! EEIO summary commodity taxonomy: classes, NAICS composition and
//! spend-based emission factors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Factor column used when the caller does not choose one.
pub const DEFAULT_FACTOR_KIND: &str = "with_margins";

const CANONICAL_CLASSES: &str = include_str!("../data/eeio_summary_classes.csv");
const CANONICAL_FACTORS: &str = include_str!("../data/eeio_summary_factors.csv");
const CANONICAL_NAICS: &str = include_str!("../data/naics_descriptions.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommodityClass {
    pub code: String,
    pub title: String,
    pub naics_codes: Vec<String>,
    /// Composed long text; empty until composed.
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionFactorRecord {
    pub code: String,
    /// kg CO2e per currency unit of spend.
    pub factor: f64,
    pub currency_basis: String,
    pub factor_kind: String,
}

/// Which class text a zero-shot model embeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextMode {
    Title,
    Description,
}

impl fmt::Display for TextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TextMode::Title => "title",
            TextMode::Description => "description",
        })
    }
}

impl std::str::FromStr for TextMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "title" => Ok(TextMode::Title),
            "description" => Ok(TextMode::Description),
            other => Err(Error::Input(format!("unknown text mode {other:?}"))),
        }
    }
}

/// Validated commodity taxonomy. Immutable once built.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    classes: Vec<CommodityClass>,
    index: HashMap<String, usize>,
    /// Every factor row in source order, all kinds.
    factor_rows: Vec<EmissionFactorRecord>,
    /// Active factor per class code, pointing into `factor_rows`.
    active: BTreeMap<String, usize>,
    factor_kind: String,
    warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct ClassRow {
    code: String,
    title: String,
    naics_codes: String,
    #[serde(default)]
    description: Option<String>,
}

#[derive(Debug, Deserialize)]
struct FactorRow {
    code: String,
    factor_kg_per_unit: f64,
    currency_basis: String,
    factor_kind: String,
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn csv_line(err: &csv::Error) -> usize {
    err.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Parses a classes table: `code,title,naics_codes,description`.
pub fn parse_classes<R: Read>(input: R, source: &str) -> Result<Vec<CommodityClass>> {
    let mut reader = csv_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<ClassRow>() {
        let row = row.map_err(|e| Error::parse(source, csv_line(&e), e))?;
        let line = out.len() + 2;
        if row.code.is_empty() {
            return Err(Error::parse(source, line, "empty class code"));
        }
        if row.title.is_empty() {
            return Err(Error::parse(source, line, format!("class {} has an empty title", row.code)));
        }
        let naics_codes = row
            .naics_codes
            .split('|')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        out.push(CommodityClass {
            code: row.code,
            title: row.title,
            naics_codes,
            description: row.description.unwrap_or_default(),
        });
    }
    Ok(out)
}

/// Parses a factors table: `code,factor_kg_per_unit,currency_basis,factor_kind`.
pub fn parse_factors<R: Read>(input: R, source: &str) -> Result<Vec<EmissionFactorRecord>> {
    let mut reader = csv_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<FactorRow>() {
        let row = row.map_err(|e| Error::parse(source, csv_line(&e), e))?;
        if !row.factor_kg_per_unit.is_finite() {
            return Err(Error::parse(source, out.len() + 2, "non-finite factor"));
        }
        out.push(EmissionFactorRecord {
            code: row.code,
            factor: row.factor_kg_per_unit,
            currency_basis: row.currency_basis,
            factor_kind: row.factor_kind,
        });
    }
    Ok(out)
}

/// Parses a NAICS description table: `naics_code,description`.
pub fn parse_naics<R: Read>(input: R, source: &str) -> Result<BTreeMap<String, String>> {
    let mut reader = csv_reader(input);
    let mut out = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(source, csv_line(&e), e))?;
        if row.len() != 2 {
            return Err(Error::parse(source, i + 2, "expected naics_code,description"));
        }
        if out.insert(row[0].to_string(), row[1].to_string()).is_some() {
            return Err(Error::Validation(format!("duplicate NAICS code {} in {source}", &row[0])));
        }
    }
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Loads classes and factors files using the default factor kind.
pub fn load_taxonomy(classes_path: &Path, factors_path: &Path) -> Result<Taxonomy> {
    Taxonomy::load(classes_path, factors_path, DEFAULT_FACTOR_KIND)
}

pub fn load_naics_descriptions(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_naics(open(path)?, &path.display().to_string())
}

/// The bundled NAICS description table.
pub fn canonical_naics() -> BTreeMap<String, String> {
    parse_naics(CANONICAL_NAICS.as_bytes(), "naics_descriptions.csv")
        .expect("bundled NAICS table parses")
}

/// Joins the NAICS texts of `cls` in listed order with a single space.
pub fn compose_description(cls: &CommodityClass, naics_texts: &BTreeMap<String, String>) -> Result<String> {
    let parts = cls
        .naics_codes
        .iter()
        .map(|code| {
            naics_texts
                .get(code)
                .map(String::as_str)
                .ok_or_else(|| Error::MissingNaics(code.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.join(" "))
}

pub fn class_text(cls: &CommodityClass, mode: TextMode) -> Result<&str> {
    match mode {
        TextMode::Title => Ok(&cls.title),
        TextMode::Description if cls.description.is_empty() => Err(Error::State(format!(
            "class {} has no composed description",
            cls.code
        ))),
        TextMode::Description => Ok(&cls.description),
    }
}

impl Taxonomy {
    pub fn load(classes_path: &Path, factors_path: &Path, factor_kind: &str) -> Result<Self> {
        let classes = parse_classes(open(classes_path)?, &classes_path.display().to_string())?;
        let factors = parse_factors(open(factors_path)?, &factors_path.display().to_string())?;
        Self::new(classes, factors, factor_kind)
    }

    /// The bundled 66-class EEIO summary taxonomy with descriptions
    /// composed from the bundled NAICS table.
    pub fn canonical() -> Self {
        Self::canonical_with_kind(DEFAULT_FACTOR_KIND).expect("bundled taxonomy is valid")
    }

    pub fn canonical_with_kind(factor_kind: &str) -> Result<Self> {
        Self::canonical_uncomposed(factor_kind)?.with_descriptions(&canonical_naics())
    }

    /// The bundled taxonomy exactly as stored on disk.
    pub fn canonical_uncomposed(factor_kind: &str) -> Result<Self> {
        let classes = parse_classes(CANONICAL_CLASSES.as_bytes(), "eeio_summary_classes.csv")?;
        let factors = parse_factors(CANONICAL_FACTORS.as_bytes(), "eeio_summary_factors.csv")?;
        Self::new(classes, factors, factor_kind)
    }

    /// Validates and indexes classes and factor rows. Factor rows of other
    /// kinds are kept for serialization but not used for lookups.
    pub fn new(
        classes: Vec<CommodityClass>,
        factor_rows: Vec<EmissionFactorRecord>,
        factor_kind: &str,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Validation("taxonomy has no classes".into()));
        }
        let mut index = HashMap::with_capacity(classes.len());
        for (i, cls) in classes.iter().enumerate() {
            if cls.code.is_empty() || cls.title.is_empty() {
                return Err(Error::Validation(format!("class #{i} has an empty code or title")));
            }
            if index.insert(cls.code.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate class code {}", cls.code)));
            }
        }
        let mut active = BTreeMap::new();
        for (i, rec) in factor_rows.iter().enumerate() {
            if rec.factor < 0.0 {
                return Err(Error::Validation(format!(
                    "negative factor {} for class {}",
                    rec.factor, rec.code
                )));
            }
            if !index.contains_key(&rec.code) {
                return Err(Error::Validation(format!("factor for unknown class {}", rec.code)));
            }
            if rec.factor_kind == factor_kind && active.insert(rec.code.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate {factor_kind} factor for class {}",
                    rec.code
                )));
            }
        }
        let warnings = classes
            .iter()
            .filter(|c| !active.contains_key(&c.code))
            .map(|c| format!("class {} has no {factor_kind} emission factor", c.code))
            .collect();
        Ok(Self {
            classes,
            index,
            factor_rows,
            active,
            factor_kind: factor_kind.to_string(),
            warnings,
        })
    }

    /// Returns a copy with every class description composed from `naics_texts`.
    pub fn with_descriptions(mut self, naics_texts: &BTreeMap<String, String>) -> Result<Self> {
        for cls in &mut self.classes {
            if cls.naics_codes.is_empty() {
                return Err(Error::Validation(format!("class {} lists no NAICS codes", cls.code)));
            }
            cls.description = compose_description(cls, naics_texts)?;
        }
        Ok(self)
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[CommodityClass] {
        &self.classes
    }

    /// Class codes in taxonomy order.
    pub fn codes(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.code.clone()).collect()
    }

    pub fn get(&self, code: &str) -> Option<&CommodityClass> {
        self.index.get(code).map(|&i| &self.classes[i])
    }

    pub fn contains(&self, code: &str) -> bool {
        self.index.contains_key(code)
    }

    pub fn factor_kind(&self) -> &str {
        &self.factor_kind
    }

    /// Classes that loaded without a factor of the active kind.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Active factors keyed by class code.
    pub fn factors(&self) -> impl Iterator<Item = &EmissionFactorRecord> {
        self.active.values().map(|&i| &self.factor_rows[i])
    }

    pub fn lookup_factor(&self, code: &str) -> Result<&EmissionFactorRecord> {
        if !self.contains(code) {
            return Err(Error::UnknownClass(code.to_string()));
        }
        self.active
            .get(code)
            .map(|&i| &self.factor_rows[i])
            .ok_or_else(|| Error::MissingFactor(code.to_string()))
    }

    pub fn write_classes<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["code", "title", "naics_codes", "description"]).map_err(ser)?;
        for c in &self.classes {
            let naics = c.naics_codes.join("|");
            w.write_record([&c.code, &c.title, &naics, &c.description]).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn write_factors<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["code", "factor_kg_per_unit", "currency_basis", "factor_kind"]).map_err(ser)?;
        for r in &self.factor_rows {
            let factor = r.factor.to_string();
            w.write_record([&r.code, &factor, &r.currency_basis, &r.factor_kind]).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))
    }

    /// Hex SHA-256 over the serialized classes and factors.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        self.write_classes(&mut buf).expect("in-memory write");
        self.write_factors(&mut buf).expect("in-memory write");
        buf.extend_from_slice(self.factor_kind.as_bytes());
        hex::encode(Sha256::digest(&buf))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Taxonomy {
        let classes = "code,title,naics_codes,description\n\
            A,Alpha goods,1|2,\n\
            B,Beta services,3,\n\
            C,Gamma works,4,\n";
        let factors = "code,factor_kg_per_unit,currency_basis,factor_kind\n\
            A,0.5,USD-2018,with_margins\n\
            B,0.1,USD-2018,with_margins\n\
            C,2,USD-2018,with_margins\n";
        Taxonomy::new(
            parse_classes(classes.as_bytes(), "c").unwrap(),
            parse_factors(factors.as_bytes(), "f").unwrap(),
            DEFAULT_FACTOR_KIND,
        )
        .unwrap()
    }

    fn food() -> CommodityClass {
        CommodityClass {
            code: "311FT".into(),
            title: "Food and beverage and tobacco products".into(),
            naics_codes: vec!["311".into(), "312".into()],
            description: String::new(),
        }
    }

    fn food_naics() -> BTreeMap<String, String> {
        BTreeMap::from([
            ("311".to_string(), "Food Manufacturing".to_string()),
            ("312".to_string(), "Beverage and Tobacco Product Manufacturing".to_string()),
        ])
    }

    #[test]
    fn canonical_has_66_classes_with_factors() {
        let tax = Taxonomy::canonical();
        assert_eq!(tax.class_count(), 66);
        assert!(tax.warnings().is_empty());
        for cls in tax.classes() {
            let f = tax.lookup_factor(&cls.code).unwrap();
            assert!(f.factor >= 0.0);
            assert!(!cls.description.is_empty());
        }
    }

    #[test]
    fn toy_taxonomy_loads_without_warnings() {
        let tax = toy();
        assert_eq!(tax.class_count(), 3);
        assert!(tax.warnings().is_empty());
        assert_eq!(tax.lookup_factor("A").unwrap().factor, 0.5);
    }

    #[test]
    fn empty_classes_file_is_rejected() {
        let classes = parse_classes("code,title,naics_codes,description\n".as_bytes(), "c").unwrap();
        assert!(matches!(Taxonomy::new(classes, vec![], DEFAULT_FACTOR_KIND), Err(Error::Validation(_))));
        assert!(Taxonomy::new(parse_classes("".as_bytes(), "c").unwrap(), vec![], "x").is_err());
    }

    #[test]
    fn malformed_row_reports_line() {
        let classes = "code,title,naics_codes,description\nA,Alpha,1,\nB,Beta\n";
        match parse_classes(classes.as_bytes(), "classes.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_code_and_negative_factor_are_rejected() {
        let classes = parse_classes("code,title,naics_codes\nA,x,1\nA,y,2\n".as_bytes(), "c").unwrap();
        assert!(matches!(Taxonomy::new(classes, vec![], "k"), Err(Error::Validation(_))));

        let classes = parse_classes("code,title,naics_codes\nA,x,1\n".as_bytes(), "c").unwrap();
        let factors = vec![EmissionFactorRecord {
            code: "A".into(),
            factor: -0.1,
            currency_basis: "USD".into(),
            factor_kind: "k".into(),
        }];
        assert!(matches!(Taxonomy::new(classes, factors, "k"), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_factor_is_a_warning_and_distinct_error() {
        let classes = parse_classes("code,title,naics_codes\nA,x,1\nB,y,2\n".as_bytes(), "c").unwrap();
        let factors = vec![EmissionFactorRecord {
            code: "A".into(),
            factor: 1.0,
            currency_basis: "USD".into(),
            factor_kind: "k".into(),
        }];
        let tax = Taxonomy::new(classes, factors, "k").unwrap();
        assert_eq!(tax.warnings().len(), 1);
        assert!(matches!(tax.lookup_factor("B"), Err(Error::MissingFactor(_))));
        assert!(matches!(tax.lookup_factor("Z"), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn compose_joins_in_order() {
        let text = compose_description(&food(), &food_naics()).unwrap();
        assert_eq!(text, "Food Manufacturing Beverage and Tobacco Product Manufacturing");

        let mut single = food();
        single.naics_codes = vec!["311".into()];
        assert_eq!(compose_description(&single, &food_naics()).unwrap(), "Food Manufacturing");

        let mut missing = food();
        missing.naics_codes.push("999".into());
        match compose_description(&missing, &food_naics()) {
            Err(Error::MissingNaics(code)) => assert_eq!(code, "999"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn class_text_modes() {
        let mut cls = food();
        assert_eq!(class_text(&cls, TextMode::Title).unwrap(), "Food and beverage and tobacco products");
        assert!(matches!(class_text(&cls, TextMode::Description), Err(Error::State(_))));
        cls.description = compose_description(&cls, &food_naics()).unwrap();
        assert_eq!(
            class_text(&cls, TextMode::Description).unwrap(),
            "Food Manufacturing Beverage and Tobacco Product Manufacturing"
        );
    }

    #[test]
    fn factor_kind_is_selectable() {
        let with = Taxonomy::canonical_with_kind("with_margins").unwrap();
        let without = Taxonomy::canonical_with_kind("without_margins").unwrap();
        for code in with.codes() {
            assert!(with.lookup_factor(&code).unwrap().factor >= without.lookup_factor(&code).unwrap().factor);
        }
    }

    #[test]
    fn canonical_round_trips_byte_identically() {
        let tax = Taxonomy::canonical_uncomposed(DEFAULT_FACTOR_KIND).unwrap();
        let mut classes = Vec::new();
        tax.write_classes(&mut classes).unwrap();
        assert_eq!(String::from_utf8(classes).unwrap(), CANONICAL_CLASSES);
        let mut factors = Vec::new();
        tax.write_factors(&mut factors).unwrap();
        assert_eq!(String::from_utf8(factors).unwrap(), CANONICAL_FACTORS);
    }
}
