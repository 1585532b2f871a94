//! Identifier subtokens, vocabularies and the hashed bag of features.

mod features;
mod subtokens;
mod vocab;

pub use features::{featurize, feature_id, fnv1a64, FeatureBag, Field, BIGRAM_JOINER, DEFAULT_HASH_SPACE, MIN_HASH_SPACE};
pub use subtokens::{field_subtokens, split_identifier, type_subtokens, word_subtokens, SubtokenSequence};
pub use vocab::{build_vocab, context_sequence, VocabRole, Vocabulary, END, PAD, RESERVED, START, UNK};
