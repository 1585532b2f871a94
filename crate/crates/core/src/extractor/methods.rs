//! Token-level method recognizer.
//!
//! There is no grammar here: member declarations are matched as
//! `annotations/modifiers* [<type params>] type name ( params ) [throws ..] {`
//! at type-body depth and bodies are captured by brace matching. Bodies are
//! skipped wholesale, so local and anonymous classes never yield records.

use serde::{Deserialize, Serialize};

use super::lexer::{JavaToken, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub class_name: String,
    pub method_name: String,
    pub return_type: String,
    /// `(type, name)` pairs in declaration order.
    pub parameters: Vec<(String, String)>,
    /// Token texts between (not including) the body braces.
    pub body_tokens: Vec<String>,
    pub source_path: String,
    pub is_test_context: bool,
}

#[derive(Debug, Default, Clone)]
pub struct Extraction {
    pub records: Vec<MethodRecord>,
    pub diagnostics: Vec<String>,
}

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "strictfp",
    "default",
    "transient",
    "volatile",
];

// contextual keywords that lex as identifiers
const SOFT_MODIFIERS: &[&str] = &["sealed", "non"];

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void",
];

const TEST_ANNOTATIONS: &[&str] = &[
    "Test",
    "ParameterizedTest",
    "RepeatedTest",
    "TestFactory",
    "TestTemplate",
];

pub(crate) fn is_test_annotation(text: &str) -> bool {
    let name = text.trim_start_matches('@');
    let last = name.rsplit('.').next().unwrap_or(name);
    TEST_ANNOTATIONS.contains(&last)
}

fn is_test_class(name: &str) -> bool {
    name.ends_with("Test") || name.ends_with("Tests")
}

enum Member {
    Method {
        annotations: Vec<String>,
        return_type: (usize, usize),
        name: usize,
        params: (usize, usize),
        body_open: usize,
    },
    Bodiless(usize),
    Nothing,
}

struct Extractor<'a> {
    toks: &'a [JavaToken],
    path: &'a str,
    out: Extraction,
}

/// Recognizes bodied method declarations in `tokens`.
///
/// Malformed input never aborts: records found so far are returned and the
/// problem is reported in `diagnostics`.
pub fn extract_methods(tokens: &[JavaToken], source_path: &str) -> Extraction {
    let mut ex = Extractor {
        toks: tokens,
        path: source_path,
        out: Extraction::default(),
    };
    ex.run();
    ex.out
}

impl<'a> Extractor<'a> {
    fn text(&self, i: usize) -> &str {
        self.toks.get(i).map_or("", |t| t.text.as_str())
    }

    fn kind(&self, i: usize) -> Option<TokenKind> {
        self.toks.get(i).map(|t| t.kind)
    }

    fn line(&self, i: usize) -> usize {
        self.toks
            .get(i)
            .or(self.toks.last())
            .map_or(0, |t| t.line)
    }

    fn warn(&mut self, msg: String) {
        self.out.diagnostics.push(format!("{}: {msg}", self.path));
    }

    fn run(&mut self) {
        let n = self.toks.len();
        let mut classes: Vec<String> = Vec::new();
        let mut i = 0;
        while i < n {
            match self.text(i) {
                ";" | "," => i += 1,
                "}" => {
                    if classes.pop().is_none() {
                        let line = self.line(i);
                        self.warn(format!("unmatched '}}' at line {line}"));
                    }
                    i += 1;
                }
                _ => {
                    let (annotations, j) = self.skip_modifiers(i);
                    if let Some(next) = self.type_declaration(j, &mut classes) {
                        i = next;
                        continue;
                    }
                    if classes.is_empty() {
                        i = self.skip_member(i);
                        continue;
                    }
                    match self.match_method(j, annotations) {
                        Member::Method {
                            annotations,
                            return_type,
                            name,
                            params,
                            body_open,
                        } => match self.matching(body_open, "{", "}") {
                            Some(close) => {
                                let class_name = classes.last().cloned().unwrap_or_default();
                                let record =
                                    self.record(class_name, &annotations, return_type, name, params, (body_open, close));
                                self.out.records.push(record);
                                i = close + 1;
                            }
                            None => {
                                let line = self.line(body_open);
                                let name = self.text(name).to_string();
                                self.warn(format!(
                                    "unbalanced braces: body of '{name}' opened at line {line} never closes"
                                ));
                                return;
                            }
                        },
                        Member::Bodiless(end) => i = end + 1,
                        Member::Nothing => i = self.skip_member(i),
                    }
                }
            }
        }
        if !classes.is_empty() {
            let open = classes.join(", ");
            self.warn(format!("unbalanced braces at end of file: unclosed {open}"));
        }
    }

    /// Skips annotations (with arguments) and modifiers; returns the
    /// annotation texts and the next index.
    fn skip_modifiers(&self, mut i: usize) -> (Vec<String>, usize) {
        let mut annotations = Vec::new();
        loop {
            match self.kind(i) {
                Some(TokenKind::Annotation) if self.text(i) != "@interface" => {
                    annotations.push(self.text(i).to_string());
                    i += 1;
                    if self.text(i) == "(" {
                        match self.matching(i, "(", ")") {
                            Some(close) => i = close + 1,
                            None => return (annotations, i),
                        }
                    }
                }
                Some(TokenKind::Keyword) if MODIFIERS.contains(&self.text(i)) => i += 1,
                Some(TokenKind::Identifier) if SOFT_MODIFIERS.contains(&self.text(i)) => {
                    // "non-sealed" lexes as non - sealed
                    if self.text(i) == "non" && self.text(i + 1) == "-" && self.text(i + 2) == "sealed" {
                        i += 3;
                    } else if self.text(i) == "sealed" && self.kind(i + 1) != Some(TokenKind::Operator) {
                        i += 1;
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        (annotations, i)
    }

    /// Handles `class`/`interface`/`enum`/`record`/`@interface` headers.
    /// Returns the index to continue from when `j` starts a type declaration.
    fn type_declaration(&mut self, j: usize, classes: &mut Vec<String>) -> Option<usize> {
        let head = self.text(j);
        let is_type = match self.kind(j)? {
            TokenKind::Keyword => matches!(head, "class" | "interface" | "enum"),
            TokenKind::Annotation => head == "@interface",
            TokenKind::Identifier => {
                head == "record"
                    && self.kind(j + 1) == Some(TokenKind::Identifier)
                    && matches!(self.text(j + 2), "(" | "<")
            }
            _ => false,
        };
        if !is_type {
            return None;
        }
        let name = match self.kind(j + 1) {
            Some(TokenKind::Identifier) => self.text(j + 1).to_string(),
            _ => String::new(),
        };
        // find the opening brace of the body
        let mut k = j + 1;
        let mut parens = 0usize;
        while k < self.toks.len() {
            match self.text(k) {
                "(" => parens += 1,
                ")" => parens = parens.saturating_sub(1),
                "{" if parens == 0 => break,
                ";" | "}" if parens == 0 => {
                    let line = self.line(j);
                    self.warn(format!("type declaration at line {line} has no body"));
                    return Some(k);
                }
                _ => {}
            }
            k += 1;
        }
        if k >= self.toks.len() {
            let line = self.line(j);
            self.warn(format!("unbalanced braces: type declaration at line {line} has no body"));
            return Some(k);
        }
        if head == "@interface" {
            // annotation-type members are never mined
            return Some(match self.matching(k, "{", "}") {
                Some(close) => close + 1,
                None => {
                    let line = self.line(k);
                    self.warn(format!("unbalanced braces: annotation type at line {line} never closes"));
                    self.toks.len()
                }
            });
        }
        classes.push(name);
        Some(k + 1)
    }

    fn match_method(&self, mut j: usize, annotations: Vec<String>) -> Member {
        if self.text(j) == "<" {
            match self.skip_angles(j) {
                Some(next) => j = next,
                None => return Member::Nothing,
            }
        }
        let type_start = j;
        let Some(type_end) = self.parse_type(j) else {
            return Member::Nothing;
        };
        let name = type_end;
        if self.kind(name) != Some(TokenKind::Identifier) || self.text(name + 1) != "(" {
            return Member::Nothing;
        }
        let open = name + 1;
        let Some(close) = self.matching_parens(open) else {
            return Member::Nothing;
        };
        let mut k = close + 1;
        while self.text(k) == "[" && self.text(k + 1) == "]" {
            k += 2;
        }
        if self.text(k) == "throws" {
            k += 1;
            while k < self.toks.len() && !matches!(self.text(k), "{" | ";" | "}" | "(" | ")" | "=") {
                k += 1;
            }
        }
        match self.text(k) {
            "{" => Member::Method {
                annotations,
                return_type: (type_start, type_end),
                name,
                params: (open + 1, close),
                body_open: k,
            },
            ";" => Member::Bodiless(k),
            _ => Member::Nothing,
        }
    }

    /// Parses a type starting at `j`; returns the index just past it.
    fn parse_type(&self, j: usize) -> Option<usize> {
        match self.kind(j)? {
            TokenKind::Identifier => {}
            TokenKind::Keyword if PRIMITIVES.contains(&self.text(j)) => {}
            _ => return None,
        }
        let mut k = j + 1;
        loop {
            match self.text(k) {
                "<" => k = self.skip_angles(k)?,
                "." if self.kind(k + 1) == Some(TokenKind::Identifier) => k += 2,
                "[" if self.text(k + 1) == "]" => k += 2,
                _ => return Some(k),
            }
        }
    }

    /// `<...>` with nesting; bails out on tokens that cannot occur in type
    /// arguments.
    fn skip_angles(&self, j: usize) -> Option<usize> {
        let mut depth = 0usize;
        let mut k = j;
        while k < self.toks.len() {
            match self.text(k) {
                "<" => depth += 1,
                ">" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(k + 1);
                    }
                }
                ";" | "{" | "}" | "(" | ")" | "=" => return None,
                _ => {}
            }
            k += 1;
        }
        None
    }

    /// Parameter-list parens: any brace or semicolon inside means this is
    /// not a declaration.
    fn matching_parens(&self, open: usize) -> Option<usize> {
        let mut depth = 0usize;
        for k in open..self.toks.len() {
            match self.text(k) {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(k);
                    }
                }
                "{" | "}" | ";" => return None,
                _ => {}
            }
        }
        None
    }

    fn matching(&self, open: usize, left: &str, right: &str) -> Option<usize> {
        let mut depth = 0usize;
        for k in open..self.toks.len() {
            let t = &self.toks[k];
            if t.kind != TokenKind::Punctuation {
                continue;
            }
            if t.text == left {
                depth += 1;
            } else if t.text == right {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
        }
        None
    }

    /// Skips a non-method member: up to a `;` at depth zero, or through a
    /// brace block (initializers, enum constant bodies, stray blocks).
    /// Never consumes the `}` closing the enclosing type.
    fn skip_member(&mut self, start: usize) -> usize {
        let mut k = start;
        let mut parens = 0usize;
        let mut assigned = false;
        while k < self.toks.len() {
            match self.text(k) {
                "(" | "[" => parens += 1,
                ")" | "]" => parens = parens.saturating_sub(1),
                "=" => assigned = true,
                ";" if parens == 0 => return k + 1,
                "}" if parens == 0 => return k.max(start + usize::from(k == start)),
                "{" => match self.matching(k, "{", "}") {
                    Some(close) => {
                        k = close;
                        if parens == 0 && !assigned {
                            return close + 1;
                        }
                    }
                    None => {
                        let line = self.line(k);
                        self.warn(format!("unbalanced braces: block at line {line} never closes"));
                        return self.toks.len();
                    }
                },
                _ => {}
            }
            k += 1;
        }
        k
    }

    fn record(
        &self,
        class_name: String,
        annotations: &[String],
        return_type: (usize, usize),
        name: usize,
        params: (usize, usize),
        body: (usize, usize),
    ) -> MethodRecord {
        let is_test_context =
            is_test_class(&class_name) || annotations.iter().any(|a| is_test_annotation(a));
        MethodRecord {
            class_name,
            method_name: self.text(name).to_string(),
            return_type: flatten(&self.toks[return_type.0..return_type.1]),
            parameters: self.parameters(params.0, params.1),
            body_tokens: self.toks[body.0 + 1..body.1]
                .iter()
                .map(|t| t.text.clone())
                .collect(),
            source_path: self.path.to_string(),
            is_test_context,
        }
    }

    fn parameters(&self, start: usize, end: usize) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut piece_start = start;
        for k in start..=end {
            let at_end = k == end;
            if !at_end {
                match self.text(k) {
                    "<" | "(" | "[" => depth += 1,
                    ">" | ")" | "]" => depth -= 1,
                    _ => {}
                }
            }
            if at_end || (depth == 0 && self.text(k) == ",") {
                if let Some(p) = self.parameter(&self.toks[piece_start..k]) {
                    out.push(p);
                }
                piece_start = k + 1;
            }
        }
        out
    }

    fn parameter(&self, piece: &[JavaToken]) -> Option<(String, String)> {
        // drop annotations (and their arguments) and `final`
        let mut toks: Vec<&JavaToken> = Vec::new();
        let mut k = 0;
        while k < piece.len() {
            let t = &piece[k];
            if t.kind == TokenKind::Annotation {
                k += 1;
                if piece.get(k).is_some_and(|t| t.is("(")) {
                    let mut depth = 0;
                    while k < piece.len() {
                        match piece[k].text.as_str() {
                            "(" => depth += 1,
                            ")" => {
                                depth -= 1;
                                if depth == 0 {
                                    k += 1;
                                    break;
                                }
                            }
                            _ => {}
                        }
                        k += 1;
                    }
                }
                continue;
            }
            if !t.is("final") {
                toks.push(t);
            }
            k += 1;
        }
        // C-style array suffix on the name: `String args[]`
        let mut suffix = 0;
        while toks.len() >= suffix + 3
            && toks[toks.len() - 1 - suffix].is("]")
            && toks[toks.len() - 2 - suffix].is("[")
        {
            suffix += 2;
        }
        let name_idx = toks.len().checked_sub(1 + suffix)?;
        let name = toks[name_idx];
        if name.kind != TokenKind::Identifier {
            return None;
        }
        let mut ty: Vec<JavaToken> = toks[..name_idx].iter().map(|t| (*t).clone()).collect();
        ty.extend(toks[name_idx + 1..].iter().map(|t| (*t).clone()));
        Some((flatten(&ty), name.text.clone()))
    }
}

/// Joins type tokens back into source text with whitespace collapsed:
/// `Map<String, List<Integer>>`, `List<? extends T>`, `int[]`.
pub fn flatten(tokens: &[JavaToken]) -> String {
    let mut out = String::new();
    let mut prev: Option<&JavaToken> = None;
    for t in tokens {
        if let Some(p) = prev {
            let space = (p.is_word() && t.is_word())
                || p.is(",")
                || (p.is("?") && t.is_word())
                || (p.kind == TokenKind::Annotation);
            if space {
                out.push(' ');
            }
        }
        out.push_str(&t.text);
        prev = Some(t);
    }
    out
}
