//! Phase two for prefixed categories: field-based naming rules.
//!
//! Each rule recognizes one syntactic body shape and derives the name from
//! the field (or, for tests, the first invoked method). Anything else
//! abstains and the router falls back to the generator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::PrefixCategory;
use crate::error::{Error, Result};
use crate::extractor::{is_keyword, MethodRecord};
use crate::text::{split_identifier, SubtokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "R-GET")]
    Get,
    #[serde(rename = "R-IS")]
    Is,
    #[serde(rename = "R-SET")]
    Set,
    #[serde(rename = "R-TEST")]
    Test,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Get => "R-GET",
            Rule::Is => "R-IS",
            Rule::Set => "R-SET",
            Rule::Test => "R-TEST",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeuristicOutcome {
    Named { name: SubtokenSequence, rule: Rule },
    Abstain { rule: Rule },
}

impl HeuristicOutcome {
    pub fn name(&self) -> Option<&SubtokenSequence> {
        match self {
            HeuristicOutcome::Named { name, .. } => Some(name),
            HeuristicOutcome::Abstain { .. } => None,
        }
    }

    pub fn rule(&self) -> Rule {
        match self {
            HeuristicOutcome::Named { rule, .. } | HeuristicOutcome::Abstain { rule } => *rule,
        }
    }

    pub fn is_abstain(&self) -> bool {
        matches!(self, HeuristicOutcome::Abstain { .. })
    }
}

const COMPARISONS: &[&str] = &["==", "!=", "<", ">", "<=", ">="];

fn is_identifier(t: &str) -> bool {
    let mut chars = t.chars();
    chars
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
        && !is_keyword(t)
        && !matches!(t, "true" | "false" | "null")
}

fn is_literal(t: &str) -> bool {
    matches!(t, "true" | "false" | "null")
        || t.starts_with(|c: char| c.is_ascii_digit() || c == '"' || c == '\'')
        || (t.starts_with('.') && t.len() > 1)
}

/// `<field>` or `this . <field>` at the start of `toks`; returns the field
/// and the number of tokens consumed.
fn field_ref(toks: &[&str]) -> Option<(String, usize)> {
    match toks {
        ["this", ".", f, ..] if is_identifier(f) => Some((f.to_string(), 3)),
        [f, ..] if is_identifier(f) => Some((f.to_string(), 1)),
        _ => None,
    }
}

/// `return <field> ;`
fn returned_field(body: &[&str]) -> Option<String> {
    let rest = body.strip_prefix(&["return"])?;
    let (field, used) = field_ref(rest)?;
    (rest[used..] == [";"]).then_some(field)
}

/// `return <field> ;` or `return <field> <cmp> <literal> ;`
fn returned_predicate(body: &[&str]) -> Option<String> {
    if let Some(f) = returned_field(body) {
        return Some(f);
    }
    let rest = body.strip_prefix(&["return"])?;
    let (field, used) = field_ref(rest)?;
    match &rest[used..] {
        [cmp, lit, ";"] if COMPARISONS.contains(cmp) && is_literal(lit) => Some(field),
        _ => None,
    }
}

/// `<field> = <param> ;` or `this . <field> = <param> ;`
fn assigned_field(body: &[&str], param: &str) -> Option<String> {
    let (field, used) = field_ref(body)?;
    (body[used..] == ["=", param, ";"]).then_some(field)
}

fn is_assertion(name: &str) -> bool {
    name.starts_with("assert") || name == "fail"
}

/// Method calls in body order, constructor invocations excluded.
fn invoked_methods<'a>(body: &[&'a str]) -> Vec<&'a str> {
    let mut out = Vec::new();
    for k in 0..body.len() {
        if body.get(k + 1) != Some(&"(") || !is_identifier(body[k]) {
            continue;
        }
        // walk back over a qualified name to see whether `new` owns it
        let mut j = k;
        while j >= 2 && body[j - 1] == "." && is_identifier(body[j - 2]) {
            j -= 2;
        }
        if j >= 1 && body[j - 1] == "new" {
            continue;
        }
        out.push(body[k]);
    }
    out
}

/// First call that is not an assertion; if the body only asserts, the
/// first assertion.
fn test_subject(body: &[&str]) -> Option<String> {
    let calls = invoked_methods(body);
    calls
        .iter()
        .find(|c| !is_assertion(c))
        .or(calls.first())
        .map(|s| s.to_string())
}

/// `prefix` followed by the subtokens of `subject`, without repeating the
/// prefix when the subject already starts with it (`isValid` → `[is, valid]`).
fn prefixed(prefix: &str, subject: &str) -> SubtokenSequence {
    let mut toks = split_identifier(subject).into_inner();
    if toks.len() > 1 && toks[0] == prefix {
        toks.remove(0);
    }
    let mut name = vec![prefix.to_string()];
    name.extend(toks);
    SubtokenSequence::new(name)
}

fn is_boolean(ty: &str) -> bool {
    matches!(ty, "boolean" | "Boolean")
}

/// Applies the rule for `category` to `record`.
///
/// Calling this with `PrefixCategory::Other` is a routing bug and returns
/// `Error::Contract`.
pub fn apply_heuristic(record: &MethodRecord, category: PrefixCategory) -> Result<HeuristicOutcome> {
    let body: Vec<&str> = record.body_tokens.iter().map(String::as_str).collect();
    let named = |name: Option<SubtokenSequence>, rule: Rule| match name {
        Some(name) => HeuristicOutcome::Named { name, rule },
        None => HeuristicOutcome::Abstain { rule },
    };
    let outcome = match category {
        PrefixCategory::Get => {
            let name = if record.parameters.is_empty() {
                returned_field(&body).map(|f| {
                    let prefix = if is_boolean(&record.return_type) { "is" } else { "get" };
                    prefixed(prefix, &f)
                })
            } else {
                None
            };
            named(name, Rule::Get)
        }
        PrefixCategory::Is => {
            let name = if record.parameters.is_empty() {
                returned_predicate(&body).map(|f| prefixed("is", &f))
            } else {
                None
            };
            named(name, Rule::Is)
        }
        PrefixCategory::Set => {
            let name = match record.parameters.as_slice() {
                [(_, param)] if record.return_type == "void" => {
                    assigned_field(&body, param).map(|f| prefixed("set", &f))
                }
                _ => None,
            };
            named(name, Rule::Set)
        }
        PrefixCategory::Test => {
            let name = if record.is_test_context {
                test_subject(&body).map(|s| prefixed("test", &s))
            } else {
                None
            };
            named(name, Rule::Test)
        }
        PrefixCategory::Other => {
            return Err(Error::contract("apply_heuristic called for category OTHER"));
        }
    };
    Ok(outcome)
}
