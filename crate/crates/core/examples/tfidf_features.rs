//! Fit TF-IDF on a few documents and compare them by cosine similarity.

use scope3::features::{cosine_similarity, fit_tfidf};

fn main() -> scope3::Result<()> {
    let docs = ["red apple", "green apple", "red car", "fast red car", "apple pie recipe"];
    let model = fit_tfidf(&docs)?;
    for (term, &i) in model.vocabulary() {
        println!("idf({term}) = {:.4}", model.idf()[i]);
    }
    let query = model.transform("a fast car");
    for d in docs {
        let v = model.transform(d);
        match cosine_similarity(&query, &v) {
            Ok(s) => println!("{d:>18}  {s:.4}"),
            Err(e) => println!("{d:>18}  {e}"),
        }
    }
    Ok(())
}
