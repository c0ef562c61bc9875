//! Look up classes and emission factors in the bundled taxonomy.
//!
//! cargo run --example taxonomy_lookup -- 22 5411

use scope3::taxonomy::{class_text, Taxonomy, TextMode};

fn main() -> scope3::Result<()> {
    let tax = Taxonomy::canonical();
    println!("{} classes, factor kind {}", tax.class_count(), tax.factor_kind());
    let mut codes: Vec<String> = std::env::args().skip(1).collect();
    if codes.is_empty() {
        codes = vec!["22".into(), "5411".into()];
    }
    for code in codes {
        let Some(class) = tax.get(&code) else {
            println!("{code}: not in taxonomy");
            continue;
        };
        let f = tax.lookup_factor(&code)?;
        println!("{code}  {}  ({} kg CO2e per {})", class.title, f.factor, f.currency_basis);
        println!("    NAICS {}", class.naics_codes.join(" "));
        let desc = class_text(class, TextMode::Description)?;
        println!("    {}", desc.chars().take(120).collect::<String>());
    }
    Ok(())
}
