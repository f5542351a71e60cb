//! Word tokenizer shared by lexicon matching and dictionary features.
//!
//! Tokens are maximal runs of alphanumeric characters, lowercased. An
//! apostrophe (ASCII `'` or typographic `’`) is kept only when it sits
//! between two alphanumeric characters, so `don't` stays one token while
//! quoted words lose their quotes. The typographic form is normalized to
//! ASCII.

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if is_apostrophe(c)
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('\'');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}
