//! Classify ledger lines and turn spend into emissions.
//!
//! cargo run --example estimate_emissions -- path/to/ledger.csv

use std::path::PathBuf;

use scope3::classifiers::zeroshot_build;
use scope3::corpus::load_ledger;
use scope3::emission::{aggregate, estimate_ledger, write_report_csv, LineOutcome, DEFAULT_REVIEW_THRESHOLD};
use scope3::features::sentence_provider;
use scope3::taxonomy::{Taxonomy, TextMode};

fn main() -> scope3::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ledger.csv"));
    let tax = Taxonomy::canonical();
    let model = zeroshot_build(sentence_provider("hashing:512")?, &tax, TextMode::Description)?;
    let records = load_ledger(&path)?;
    let outcomes = estimate_ledger(&records, &model, &tax, DEFAULT_REVIEW_THRESHOLD)?;
    for o in &outcomes {
        match o {
            LineOutcome::Mapped(l) => println!(
                "{:<6} {:>8} {:>10.2} USD -> {:>10.3} kg{}",
                l.record_id,
                l.label,
                l.spend,
                l.emission,
                if l.review_flag { "  review" } else { "" }
            ),
            LineOutcome::Unmapped { record_id, reason, .. } => println!("{record_id:<6} unmapped: {reason}"),
        }
    }
    let report = aggregate(&outcomes);
    write_report_csv(&report, &tax, std::io::stdout())?;
    Ok(())
}
