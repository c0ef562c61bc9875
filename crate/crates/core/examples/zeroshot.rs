//! Zero-shot classification by similarity to class titles or descriptions.
//!
//! cargo run --release --example zeroshot -- "monthly electricity bill"

use scope3::classifiers::{zeroshot_build, Classifier};
use scope3::features::sentence_provider;
use scope3::taxonomy::{Taxonomy, TextMode};

fn main() -> scope3::Result<()> {
    let tax = Taxonomy::canonical();
    let text = std::env::args().nth(1).unwrap_or_else(|| "monthly electricity bill".into());
    for mode in [TextMode::Title, TextMode::Description] {
        let model = zeroshot_build(sentence_provider("hashing:512")?, &tax, mode)?;
        let p = model.predict(&text)?;
        println!("{mode:?}:");
        for (code, score) in &p.topk {
            println!("  {code:>8} {score:.4}  {}", tax.get(code).map(|c| c.title.as_str()).unwrap_or(""));
        }
    }
    Ok(())
}
