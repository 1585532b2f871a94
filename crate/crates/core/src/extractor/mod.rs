//! Java source ingestion: lexer, method recognizer and directory miner.

mod lexer;
mod methods;
mod mine;

pub use lexer::{is_keyword, lex_java, JavaToken, TokenKind};
pub use methods::{extract_methods, flatten, Extraction, MethodRecord};
pub use mine::{mine_corpus, mine_corpus_with, MineReport, MineSummary};
