//! Generate a synthetic labeled corpus, split it 70:20:10 and subsample the training part.

use std::collections::BTreeMap;

use scope3::corpus::{split, subsample, synth_generate, Ratios};
use scope3::taxonomy::Taxonomy;

fn main() -> scope3::Result<()> {
    let tax = Taxonomy::canonical();
    let corpus = synth_generate(&tax, 20, 42)?;
    for e in corpus.iter().take(5) {
        println!("{:>8}  {}", e.label, e.text);
    }
    let s = split(&corpus, Ratios::PAPER_DEFAULT, 42)?;
    println!("train {} / validation {} / test {}", s.train.len(), s.validation.len(), s.test.len());

    let mut per_class: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &s.train {
        *per_class.entry(e.label.as_str()).or_default() += 1;
    }
    println!("train examples for class 22: {}", per_class.get("22").copied().unwrap_or(0));

    let half = subsample(&s, 0.5, 42)?;
    println!("50% subsample: train {} / validation {} / test {}", half.train.len(), half.validation.len(), half.test.len());
    Ok(())
}
