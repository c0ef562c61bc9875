//! Fine-tune the built-in encoder with a classification head and print the epoch log.
//!
//! cargo run --release --example finetune_encoder -- [learning-rate ...]
//!
//! The first run pretrains the encoder and caches it, which takes a little while.

use scope3::classifiers::{finetune, TrainingConfig};
use scope3::corpus::{split, synth_generate, Ratios};
use scope3::encoder::DEFAULT_ENCODER;
use scope3::evaluation::evaluate;
use scope3::taxonomy::Taxonomy;

fn main() -> scope3::Result<()> {
    let tax = Taxonomy::canonical();
    let corpus = synth_generate(&tax, 40, 7)?;
    let s = split(&corpus, Ratios::PAPER_DEFAULT, 7)?;
    let mut rates: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if rates.is_empty() {
        rates.push(TrainingConfig::default().learning_rate);
    }
    for lr in rates {
        let cfg = TrainingConfig { learning_rate: lr, ..TrainingConfig::default() };
        let (model, log) = finetune(DEFAULT_ENCODER, &s.train, &s.validation, &tax.codes(), &cfg)?;
        println!("learning rate {lr:e}");
        for e in &log {
            println!("  epoch {:>2}  train {:.4}  validation {:.4}", e.epoch, e.train_loss, e.validation_loss);
        }
        println!(
            "  best epoch {} (validation {:.4}), test weighted F1 {:.4}",
            model.best_epoch(),
            model.best_validation_loss(),
            evaluate(&model, &s.test)?.weighted_f1
        );
    }
    Ok(())
}
