use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::subtokens::field_subtokens;
use crate::extractor::MethodRecord;

pub const DEFAULT_HASH_SPACE: usize = 1 << 20;
pub const MIN_HASH_SPACE: usize = 1 << 10;

/// Joins the two halves of a bigram feature.
pub const BIGRAM_JOINER: char = '\u{25B2}';

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Context fields in the fixed order they are featurized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Class,
    Return,
    Params,
    Body,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Class, Field::Return, Field::Params, Field::Body];

    pub fn tag(self) -> &'static str {
        match self {
            Field::Class => "cls",
            Field::Return => "ret",
            Field::Params => "par",
            Field::Body => "body",
        }
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn feature_id(feature: &str, hash_space: usize) -> u32 {
    (fnv1a64(feature.as_bytes()) % hash_space as u64) as u32
}

/// Normalized bag of hashed features. `indices` is strictly increasing and
/// `weights` sum to one whenever the bag is non-empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureBag {
    pub indices: Vec<u32>,
    pub weights: Vec<f64>,
}

impl FeatureBag {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    /// Builds a normalized bag from raw feature counts.
    pub fn from_counts(counts: BTreeMap<u32, f64>) -> Self {
        let total: f64 = counts.values().sum();
        if total <= 0.0 {
            return FeatureBag::default();
        }
        let (indices, weights) = counts.into_iter().map(|(i, c)| (i, c / total)).unzip();
        FeatureBag { indices, weights }
    }

    /// Drops features not accepted by `keep` and renormalizes.
    pub fn retain(&self, keep: impl Fn(u32) -> bool) -> Self {
        let counts = self
            .iter()
            .filter(|(i, _)| keep(*i))
            .collect::<BTreeMap<u32, f64>>();
        FeatureBag::from_counts(counts)
    }
}

/// The raw feature strings of a record: field-tagged unigrams plus
/// within-field bigrams, fields in `Field::ALL` order.
pub fn feature_strings(record: &MethodRecord) -> Vec<String> {
    let mut out = Vec::new();
    for field in Field::ALL {
        let tag = field.tag();
        let toks = field_subtokens(record, field);
        out.extend(toks.iter().map(|t| format!("{tag}:{t}")));
        out.extend(
            toks.windows(2)
                .map(|w| format!("{tag}:{}{BIGRAM_JOINER}{}", w[0], w[1])),
        );
    }
    out
}

/// Hashes a record's features into `[0, hash_space)` with FNV-1a 64.
/// Repeated features (and hash collisions) accumulate weight before
/// normalization.
///
/// # Panics
/// If `hash_space` is below `MIN_HASH_SPACE`.
pub fn featurize(record: &MethodRecord, hash_space: usize) -> FeatureBag {
    assert!(
        hash_space >= MIN_HASH_SPACE,
        "hash space {hash_space} below minimum {MIN_HASH_SPACE}"
    );
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for f in feature_strings(record) {
        *counts.entry(feature_id(&f, hash_space)).or_insert(0.0) += 1.0;
    }
    FeatureBag::from_counts(counts)
}
