use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Lowercase word tokens from [`tokenize`]. Never contains empty tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tokens(Vec<String>);

impl Tokens {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for Tokens {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Shared metric tokenizer: lowercase, replace punctuation with spaces
/// (apostrophes between two alphanumerics survive as `'`), split on whitespace.
pub fn tokenize(text: &str) -> Tokens {
    let lowered: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut cleaned = String::with_capacity(lowered.len());
    for (i, &c) in lowered.iter().enumerate() {
        if c.is_alphanumeric() {
            cleaned.push(c);
        } else if is_apostrophe(c)
            && i > 0
            && lowered[i - 1].is_alphanumeric()
            && lowered.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            cleaned.push('\'');
        } else {
            cleaned.push(' ');
        }
    }
    Tokens(cleaned.split_whitespace().map(str::to_string).collect())
}
