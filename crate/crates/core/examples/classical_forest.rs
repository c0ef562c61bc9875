//! Train a random forest on TF-IDF features, save it and reload it.

use scope3::classifiers::{load_model, save_model, AnyModel, ClassicalConfig, ClassicalModel, Classifier};
use scope3::corpus::{split, synth_generate, Ratios};
use scope3::evaluation::evaluate;
use scope3::taxonomy::Taxonomy;

fn main() -> scope3::Result<()> {
    let tax = Taxonomy::canonical();
    let corpus = synth_generate(&tax, 20, 1)?;
    let s = split(&corpus, Ratios::PAPER_DEFAULT, 1)?;

    let mut cfg = ClassicalConfig::default();
    cfg.forest.n_trees = 30;
    let model = ClassicalModel::train(&s.train, &tax.codes(), &cfg, &tax.fingerprint())?;
    println!("weighted F1 on test: {:.4}", evaluate(&model, &s.test)?.weighted_f1);

    let dir = std::env::temp_dir().join("scope3-classical-example");
    save_model(&AnyModel::from(model), &dir)?;
    let back = load_model(&dir)?;
    let p = back.predict("legal counsel retainer")?;
    println!("reloaded from {}: {} ({:.3})", dir.display(), p.label, p.score);
    Ok(())
}
