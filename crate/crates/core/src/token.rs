//! Code tokenization shared by lexical similarity, token budgeting, and
//! identifier extraction.

/// Split code into tokens: maximal runs of identifier characters
/// (alphanumeric or `_`) plus every other non-whitespace character as its
/// own token.
///
/// `"a+b"` → `["a", "+", "b"]`; `"validate_user(user.uid)"` →
/// `["validate_user", "(", "user", ".", "uid", ")"]`.
pub fn tokenize_code(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if is_word_char(ch) {
            word.push(ch);
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Token count under the default code tokenizer.
pub fn token_count(text: &str) -> usize {
    let mut count = 0usize;
    let mut in_word = false;
    for ch in text.chars() {
        if is_word_char(ch) {
            if !in_word {
                count += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !ch.is_whitespace() {
                count += 1;
            }
        }
    }
    count
}

pub(crate) fn is_word_char(ch: char) -> bool {
    ch.is_alphanumeric() || ch == '_'
}

/// Identifier tokens on a single line with their 1-based start columns.
/// Columns are char-based, matching the rest of the position model.
pub(crate) fn scan_identifiers(line: &str) -> Vec<(u32, String)> {
    let mut out = Vec::new();
    let mut current: Option<(u32, String)> = None;
    for (idx, ch) in line.chars().enumerate() {
        let col = idx as u32 + 1;
        if ch.is_ascii_alphanumeric() || ch == '_' {
            match current.as_mut() {
                Some((_, word)) => word.push(ch),
                None => {
                    // identifiers cannot start with a digit
                    if !ch.is_ascii_digit() {
                        current = Some((col, ch.to_string()));
                    }
                }
            }
        } else if let Some(item) = current.take() {
            out.push(item);
        }
    }
    if let Some(item) = current.take() {
        out.push(item);
    }
    out
}

/// Maximal `[A-Za-z_][A-Za-z0-9_]*` runs in `text`, minus `keywords`.
pub fn extract_identifiers(text: &str, keywords: &std::collections::BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        for (_, ident) in scan_identifiers(line) {
            if !keywords.contains(&ident) {
                out.push(ident);
            }
        }
    }
    out
}
