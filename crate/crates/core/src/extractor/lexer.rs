//! Lexical tokenizer for Java source.
//!
//! Comments and whitespace are dropped. String, text-block and char literals
//! become single tokens, so braces inside them never reach brace matching.
//! `>` is always emitted on its own (except in `>=`) so that nested generic
//! closers such as `>>` need no special casing downstream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punctuation,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JavaToken {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based source line of the first character.
    pub line: usize,
}

impl JavaToken {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    /// Identifier, keyword or boolean/null literal: anything spelled with letters.
    pub fn is_word(&self) -> bool {
        match self.kind {
            TokenKind::Identifier | TokenKind::Keyword => true,
            TokenKind::Literal => is_word_text(&self.text),
            _ => false,
        }
    }
}

pub(crate) const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "_",
];

const WORD_LITERALS: &[&str] = &["true", "false", "null"];

// Longest first.
const OPERATORS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=", "&=", "|=", "^=", "%=", "<<", "=", "+", "-", "*", "/", "%", "<", ">", "!", "~", "?",
    ":", "&", "|", "^",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.', '@'];

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.contains(&text)
}

fn is_word_text(text: &str) -> bool {
    text.chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Tokenizes `source` in source order.
///
/// An unterminated block comment, string, text block or char literal is an
/// error naming the line where the construct starts.
pub fn lex_java(source: &str) -> Result<Vec<JavaToken>> {
    Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        out: Vec::new(),
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    out: Vec<JavaToken>,
}

impl Lexer {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: usize) {
        let text: String = self.chars[start..self.pos].iter().collect();
        self.out.push(JavaToken { kind, text, line });
    }

    fn fail(line: usize, message: &str) -> Error {
        Error::Lex {
            line,
            message: message.to_string(),
        }
    }

    fn run(mut self) -> Result<Vec<JavaToken>> {
        while let Some(c) = self.peek(0) {
            let start = self.pos;
            let line = self.line;
            match c {
                '\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                c if c.is_whitespace() => self.pos += 1,
                '/' if self.peek(1) == Some('/') => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                '/' if self.peek(1) == Some('*') => self.block_comment(line)?,
                '"' if self.peek(1) == Some('"') && self.peek(2) == Some('"') => {
                    self.text_block(line)?;
                    self.push(TokenKind::Literal, start, line);
                }
                '"' => {
                    self.quoted('"', line, "unterminated string literal")?;
                    self.push(TokenKind::Literal, start, line);
                }
                '\'' => {
                    self.quoted('\'', line, "unterminated char literal")?;
                    self.push(TokenKind::Literal, start, line);
                }
                c if c.is_ascii_digit() => {
                    self.number();
                    self.push(TokenKind::Literal, start, line);
                }
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => {
                    self.number();
                    self.push(TokenKind::Literal, start, line);
                }
                c if is_ident_start(c) => {
                    self.word();
                    let text: String = self.chars[start..self.pos].iter().collect();
                    let kind = if is_keyword(&text) {
                        TokenKind::Keyword
                    } else if WORD_LITERALS.contains(&text.as_str()) {
                        TokenKind::Literal
                    } else {
                        TokenKind::Identifier
                    };
                    self.out.push(JavaToken { kind, text, line });
                }
                '@' if self.peek(1).is_some_and(is_ident_start) => {
                    self.pos += 1;
                    self.word();
                    // qualified annotation names: @org.junit.Test
                    while self.peek(0) == Some('.') && self.peek(1).is_some_and(is_ident_start) {
                        self.pos += 1;
                        self.word();
                    }
                    self.push(TokenKind::Annotation, start, line);
                }
                c if PUNCTUATION.contains(&c) && !self.at_operator() => {
                    self.pos += 1;
                    self.push(TokenKind::Punctuation, start, line);
                }
                _ => {
                    match OPERATORS.iter().find(|op| self.starts_with(op)) {
                        Some(op) => self.pos += op.chars().count(),
                        // stray character (backslash, '#', ...): keep it visible
                        None => self.pos += 1,
                    }
                    self.push(TokenKind::Operator, start, line);
                }
            }
        }
        Ok(self.out)
    }

    fn starts_with(&self, pat: &str) -> bool {
        pat.chars().enumerate().all(|(k, p)| self.peek(k) == Some(p))
    }

    // '.' is punctuation unless it opens "..."
    fn at_operator(&self) -> bool {
        self.starts_with("...")
    }

    fn word(&mut self) {
        while self.peek(0).is_some_and(is_ident_part) {
            self.pos += 1;
        }
    }

    fn block_comment(&mut self, line: usize) -> Result<()> {
        self.pos += 2;
        loop {
            match self.peek(0) {
                None => return Err(Self::fail(line, "unterminated block comment")),
                Some('*') if self.peek(1) == Some('/') => {
                    self.pos += 2;
                    return Ok(());
                }
                Some('\n') => {
                    self.line += 1;
                    self.pos += 1;
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn text_block(&mut self, line: usize) -> Result<()> {
        self.pos += 3;
        loop {
            match self.peek(0) {
                None => return Err(Self::fail(line, "unterminated text block")),
                Some('\\') => {
                    if self.peek(1) == Some('\n') {
                        self.line += 1;
                    }
                    self.pos += 2;
                }
                Some('"') if self.peek(1) == Some('"') && self.peek(2) == Some('"') => {
                    self.pos += 3;
                    return Ok(());
                }
                Some('\n') => {
                    self.line += 1;
                    self.pos += 1;
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn quoted(&mut self, quote: char, line: usize, message: &str) -> Result<()> {
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some('\n') => return Err(Self::fail(line, message)),
                Some('\\') => {
                    if self.peek(1).is_none() || self.peek(1) == Some('\n') {
                        return Err(Self::fail(line, message));
                    }
                    self.pos += 2;
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn number(&mut self) {
        let hex = self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X'));
        let mut seen_dot = false;
        while let Some(c) = self.peek(0) {
            let exponent = if hex {
                matches!(c, 'p' | 'P')
            } else {
                matches!(c, 'e' | 'E')
            };
            if exponent && matches!(self.peek(1), Some('+' | '-')) {
                self.pos += 2;
            } else if c == '.' {
                let next = self.peek(1);
                let continues = next.is_some_and(|n| n.is_ascii_digit())
                    || !next.is_some_and(|n| is_ident_start(n) || n == '.');
                if seen_dot || !continues {
                    break;
                }
                seen_dot = true;
                self.pos += 1;
            } else if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }
}
