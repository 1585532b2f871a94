use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::features::Field;
use crate::extractor::MethodRecord;

/// Lowercase identifier pieces, each matching `[a-z0-9]+`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubtokenSequence(Vec<String>);

impl SubtokenSequence {
    /// Wraps tokens that already satisfy the subtoken alphabet.
    ///
    /// # Panics
    /// If any token is empty or contains characters outside `[a-z0-9]`.
    pub fn new(tokens: Vec<String>) -> Self {
        for t in &tokens {
            assert!(is_subtoken(t), "invalid subtoken {t:?}");
        }
        SubtokenSequence(tokens)
    }

    pub fn from_strs(tokens: &[&str]) -> Self {
        Self::new(tokens.iter().map(|s| s.to_string()).collect())
    }

    pub fn empty() -> Self {
        SubtokenSequence(Vec::new())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn first(&self) -> Option<&str> {
        self.0.first().map(String::as_str)
    }
}

impl Deref for SubtokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for SubtokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0.join(", "))
    }
}

pub(crate) fn is_subtoken(t: &str) -> bool {
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Lower,
    Upper,
    Digit,
}

fn class_of(c: char) -> Class {
    if c.is_ascii_uppercase() {
        Class::Upper
    } else if c.is_ascii_digit() {
        Class::Digit
    } else {
        Class::Lower
    }
}

/// Splits an identifier on camelCase, underscores (and any other
/// non-alphanumeric character) and letter/digit boundaries. A run of
/// capitals stays together until a lowercase letter follows, so
/// `HTTPServer` gives `[http, server]`. Identifiers without ASCII
/// alphanumerics become `[unk]`.
pub fn split_identifier(identifier: &str) -> SubtokenSequence {
    let mut out = Vec::new();
    for run in identifier.split(|c: char| !c.is_ascii_alphanumeric()) {
        let chars: Vec<char> = run.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (class_of(chars[i - 1]), class_of(chars[i]));
            let boundary = match (prev, cur) {
                (Class::Lower, Class::Upper) => true,
                (Class::Digit, Class::Upper | Class::Lower)
                | (Class::Upper | Class::Lower, Class::Digit) => true,
                // end of an acronym: "HTTPServer" splits before 'S'
                (Class::Upper, Class::Upper) => {
                    chars.get(i + 1).is_some_and(|c| c.is_ascii_lowercase())
                }
                _ => false,
            };
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_ascii_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            out.push(chars[start..].iter().collect::<String>().to_ascii_lowercase());
        }
    }
    if out.is_empty() {
        out.push("unk".to_string());
    }
    SubtokenSequence(out)
}

/// Subtokens of a body or context word; punctuation, operators and
/// non-word literals yield nothing. Annotations contribute their simple name.
pub fn word_subtokens(word: &str) -> Vec<String> {
    let word = match word.strip_prefix('@') {
        Some(rest) => rest.rsplit('.').next().unwrap_or(rest),
        None => word,
    };
    let starts_like_word = word
        .chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$');
    if !starts_like_word || !word.chars().any(|c| c.is_ascii_alphanumeric()) {
        return Vec::new();
    }
    split_identifier(word).into_inner()
}

/// Subtokens of a flattened type such as `Map<String, List<Integer>>`.
pub fn type_subtokens(type_text: &str) -> Vec<String> {
    type_text
        .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .flat_map(word_subtokens)
        .collect()
}

/// The subtokens a record contributes to one context field. The method name
/// itself is never part of any field.
pub fn field_subtokens(record: &MethodRecord, field: Field) -> Vec<String> {
    match field {
        Field::Class => word_subtokens(&record.class_name),
        Field::Return => type_subtokens(&record.return_type),
        Field::Params => record
            .parameters
            .iter()
            .flat_map(|(ty, name)| {
                let mut v = type_subtokens(ty);
                v.extend(word_subtokens(name));
                v
            })
            .collect(),
        Field::Body => record
            .body_tokens
            .iter()
            .flat_map(|t| word_subtokens(t))
            .collect(),
    }
}
