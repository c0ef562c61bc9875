//! Text normalization and tokenization shared by every classifier family.

/// Lowercase, collapse whitespace runs to one space and strip punctuation
/// from both ends of the whole string. Inner punctuation and digits stay.
pub fn normalize(text: &str) -> String {
    let lowered = text.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

/// Whitespace tokens of already-normalized text.
pub fn tokens(normalized: &str) -> impl Iterator<Item = &str> {
    normalized.split_whitespace()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_case_space_and_edges() {
        assert_eq!(
            normalize("  Computer and   Peripheral Equipment expense. "),
            "computer and peripheral equipment expense"
        );
        assert_eq!(normalize("--PO#4471 (misc)!!"), "po#4471 (misc");
        assert_eq!(normalize("...,"), "");
    }

    #[test]
    fn keeps_inner_punctuation_and_digits() {
        assert_eq!(normalize("Q3 net-30 invoice"), "q3 net-30 invoice");
        let t: Vec<_> = tokens("a b  c").collect();
        assert_eq!(t, vec!["a", "b", "c"]);
    }
}
