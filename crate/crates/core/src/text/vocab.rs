use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::features::Field;
use super::subtokens::{field_subtokens, split_identifier};
use crate::error::{Error, Result};
use crate::extractor::MethodRecord;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const START: u32 = 2;
pub const END: u32 = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabRole {
    Context,
    Name,
}

impl fmt::Display for VocabRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VocabRole::Context => "context",
            VocabRole::Name => "name",
        })
    }
}

impl FromStr for VocabRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "context" => Ok(VocabRole::Context),
            "name" => Ok(VocabRole::Name),
            other => Err(Error::Vocabulary(format!("unknown role {other:?}"))),
        }
    }
}

fn marker(field: Field) -> &'static str {
    match field {
        Field::Class => "<cls>",
        Field::Return => "<ret>",
        Field::Params => "<par>",
        Field::Body => "<body>",
    }
}

/// The tagged context stream fed to the context encoder:
/// `<cls> .. <ret> .. <par> .. <body> ..`. A field with no subtokens
/// contributes nothing, marker included, so an empty record maps to an
/// empty sequence.
pub fn context_sequence(record: &MethodRecord) -> Vec<String> {
    let mut out = Vec::new();
    for field in Field::ALL {
        let toks = field_subtokens(record, field);
        if !toks.is_empty() {
            out.push(marker(field).to_string());
            out.extend(toks);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    min_count: usize,
    role: VocabRole,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, min_count: usize, role: VocabRole) -> Self {
        let mut id_to_token: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        id_to_token.extend(tokens);
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            token_to_id,
            id_to_token,
            min_count,
            role,
        }
    }

    /// A vocabulary holding only the reserved ids.
    pub fn reserved_only(role: VocabRole, min_count: usize) -> Self {
        Self::from_tokens(Vec::new(), min_count, role)
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == RESERVED.len()
    }

    pub fn role(&self) -> VocabRole {
        self.role
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    /// Id of `token`, or `UNK` when it fell below the cutoff.
    pub fn encode(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK)
    }

    pub fn encode_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.encode(t.as_ref())).collect()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// `#vocab v1 min_count=<n> role=<r>` followed by `token<TAB>id` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("#vocab v1 min_count={} role={}\n", self.min_count, self.role);
        for (id, tok) in self.id_to_token.iter().enumerate() {
            s.push_str(tok);
            s.push('\t');
            s.push_str(&id.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Vocabulary(m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let mut parts = header.split(' ');
        if parts.next() != Some("#vocab") || parts.next() != Some("v1") {
            return Err(bad(format!("bad header {header:?}")));
        }
        let mut min_count = None;
        let mut role = None;
        for p in parts {
            match p.split_once('=') {
                Some(("min_count", v)) => {
                    min_count = Some(v.parse::<usize>().map_err(|_| bad(format!("bad min_count {v:?}")))?)
                }
                Some(("role", v)) => role = Some(v.parse::<VocabRole>()?),
                _ => return Err(bad(format!("bad header field {p:?}"))),
            }
        }
        let min_count = min_count.ok_or_else(|| bad("header lacks min_count".into()))?;
        let role = role.ok_or_else(|| bad("header lacks role".into()))?;
        let mut tokens = Vec::new();
        let mut seen = 0;
        for (expected, line) in lines.enumerate() {
            seen += 1;
            let (tok, id) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {:?} lacks a tab", line)))?;
            let id: usize = id.parse().map_err(|_| bad(format!("bad id {id:?}")))?;
            if id != expected {
                return Err(bad(format!("id {id} out of order, expected {expected}")));
            }
            if expected < RESERVED.len() {
                if tok != RESERVED[expected] {
                    return Err(bad(format!("reserved id {expected} holds {tok:?}")));
                }
            } else {
                tokens.push(tok.to_string());
            }
        }
        if seen < RESERVED.len() {
            return Err(bad("reserved ids missing".into()));
        }
        let vocab = Self::from_tokens(tokens, min_count, role);
        if vocab.token_to_id.len() != vocab.id_to_token.len() {
            return Err(bad("duplicate tokens".into()));
        }
        Ok(vocab)
    }
}

/// Counts subtokens per `role` and keeps those seen at least `min_count`
/// times. Ids follow descending count, ties broken lexicographically.
///
/// # Panics
/// If `min_count` is zero.
pub fn build_vocab<'a, I>(records: I, min_count: usize, role: VocabRole) -> Vocabulary
where
    I: IntoIterator<Item = &'a MethodRecord>,
{
    assert!(min_count >= 1, "min_count must be at least 1");
    let mut counts: HashMap<String, usize> = HashMap::new();
    for r in records {
        let toks = match role {
            VocabRole::Context => context_sequence(r),
            VocabRole::Name => split_identifier(&r.method_name).into_inner(),
        };
        for t in toks {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_count && !RESERVED.contains(&t.as_str()))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t).collect(), min_count, role)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(name: &str) -> MethodRecord {
        MethodRecord {
            class_name: String::new(),
            method_name: name.into(),
            return_type: String::new(),
            parameters: vec![],
            body_tokens: vec![],
            source_path: String::new(),
            is_test_context: false,
        }
    }

    #[test]
    fn cutoff_and_unk() {
        let recs = [named("getName"), named("setName"), named("getAge")];
        let v = build_vocab(&recs, 2, VocabRole::Name);
        assert!(v.id("name").is_some());
        assert!(v.id("get").is_some());
        assert_eq!(v.id("age"), None);
        assert_eq!(v.encode("age"), UNK);
        assert_eq!(v.encode("set"), UNK);
    }

    #[test]
    fn ids_by_count_then_lexicographic() {
        let recs = [named("bX"), named("aX"), named("cX"), named("b")];
        let v = build_vocab(&recs, 1, VocabRole::Name);
        // x:3, b:2, a:1, c:1
        assert_eq!(&v.tokens()[4..], ["x", "b", "a", "c"]);
        assert_eq!(v.id("a"), Some(6));
        assert_eq!(v.id("c"), Some(7));
    }

    #[test]
    fn empty_stream_keeps_reserved_ids() {
        let v = build_vocab(std::iter::empty(), 5, VocabRole::Context);
        assert_eq!(v.len(), 4);
        assert!(v.is_empty());
        assert_eq!(v.token(START), "<s>");
        assert_eq!(v.token(END), "</s>");
        assert_eq!(v.token(PAD), "<pad>");
    }

    #[test]
    fn context_stream_layout() {
        let r = MethodRecord {
            class_name: "UserStore".into(),
            method_name: "find".into(),
            return_type: "List<User>".into(),
            parameters: vec![("int".into(), "maxCount".into())],
            body_tokens: vec!["return".into(), "users".into(), ";".into()],
            source_path: String::new(),
            is_test_context: false,
        };
        assert_eq!(
            context_sequence(&r),
            vec![
                "<cls>", "user", "store", "<ret>", "list", "user", "<par>", "int", "max", "count",
                "<body>", "return", "users"
            ]
        );
        assert!(context_sequence(&named("x")).is_empty());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let recs = [named("getName"), named("getAge")];
        let v = build_vocab(&recs, 1, VocabRole::Name);
        let text = v.to_text();
        assert!(text.starts_with("#vocab v1 min_count=1 role=name\n<pad>\t0\n"));
        assert_eq!(Vocabulary::from_text(&text).unwrap(), v);

        assert!(Vocabulary::from_text("").is_err());
        assert!(Vocabulary::from_text("#vocab v1 min_count=1 role=name\n").is_err());
        assert!(Vocabulary::from_text("#vocab v2 min_count=1 role=name\n").is_err());
        assert!(Vocabulary::from_text("#vocab v1 min_count=1 role=name\n<unk>\t0\n").is_err());
        assert!(Vocabulary::from_text("#vocab v1 min_count=1 role=name\n<pad>\t1\n").is_err());
    }
}
