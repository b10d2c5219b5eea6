//! Shared text handling: title canonicalization, word tokenization and
//! answer normalization.

use unicode_normalization::UnicodeNormalization;

/// Canonical form used for every title comparison: NFC, outer whitespace
/// trimmed, case preserved.
pub fn canonical_title(raw: &str) -> String {
    raw.trim().nfc().collect::<String>().trim().to_string()
}

/// Lowercase runs of alphanumeric characters.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Unigrams followed by adjacent bigrams (joined with a single space, which
/// never occurs inside a unigram).
pub fn unigrams_and_bigrams(text: &str) -> Vec<String> {
    let unigrams = word_tokens(text);
    let mut terms = Vec::with_capacity(unigrams.len() * 2);
    for pair in unigrams.windows(2) {
        terms.push(format!("{} {}", pair[0], pair[1]));
    }
    let mut all = unigrams;
    all.extend(terms);
    all
}

pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// NFKC, lowercase, whitespace runs collapsed to one space, trimmed.
pub fn normalize_answer_text(text: &str) -> String {
    let folded: String = text.nfkc().collect::<String>().to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}
