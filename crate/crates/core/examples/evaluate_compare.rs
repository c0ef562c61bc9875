//! Evaluate several classifiers on one test set and rank them.

use scope3::classifiers::{zeroshot_build, ClassicalConfig, ClassicalModel};
use scope3::corpus::{split, synth_generate, Ratios};
use scope3::evaluation::{compare, comparison_table, evaluate, flag_low_performance, DEFAULT_LOW_F1_THRESHOLD};
use scope3::features::sentence_provider;
use scope3::taxonomy::{Taxonomy, TextMode};

fn main() -> scope3::Result<()> {
    let tax = Taxonomy::canonical();
    let corpus = synth_generate(&tax, 20, 5)?;
    let s = split(&corpus, Ratios::PAPER_DEFAULT, 5)?;

    let mut reports = Vec::new();
    for (name, mode) in [("zeroshot-title", TextMode::Title), ("zeroshot-description", TextMode::Description)] {
        let m = zeroshot_build(sentence_provider("hashing:512")?, &tax, mode)?;
        reports.push((name.to_string(), evaluate(&m, &s.test)?));
    }
    let mut cfg = ClassicalConfig::default();
    cfg.forest.n_trees = 30;
    let forest = ClassicalModel::train(&s.train, &tax.codes(), &cfg, &tax.fingerprint())?;
    reports.push(("classical".to_string(), evaluate(&forest, &s.test)?));

    print!("{}", comparison_table(&compare(&reports)));
    let weak = flag_low_performance(&reports[2].1, DEFAULT_LOW_F1_THRESHOLD)?;
    println!("classical: {} classes below F1 {DEFAULT_LOW_F1_THRESHOLD}", weak.len());
    Ok(())
}
