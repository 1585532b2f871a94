//! Phase one: a linear bag-of-features classifier over the five prefix
//! categories.
//!
//! The hidden layer is the weight-normalized mean of feature embeddings
//! (rows of `A`), followed by an output matrix `B`, a bias and a plain
//! softmax. Embedding rows are initialized lazily from the seed and the row
//! index, so the full `H × d` matrix is never allocated; only rows touched
//! by training are stored.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::MethodRecord;
use crate::tensor::{axpy, log_softmax, softmax, splitmix64, Matrix};
use crate::text::{featurize, FeatureBag, SubtokenSequence, DEFAULT_HASH_SPACE, MIN_HASH_SPACE};

pub const NUM_CATEGORIES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PrefixCategory {
    Get,
    Set,
    Is,
    Test,
    Other,
}

impl PrefixCategory {
    /// Matrix order; also the tie-break order.
    pub const ALL: [PrefixCategory; NUM_CATEGORIES] = [
        PrefixCategory::Get,
        PrefixCategory::Set,
        PrefixCategory::Is,
        PrefixCategory::Test,
        PrefixCategory::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// The name subtoken a category stands for; `None` for `Other`.
    pub fn token(self) -> Option<&'static str> {
        match self {
            PrefixCategory::Get => Some("get"),
            PrefixCategory::Set => Some("set"),
            PrefixCategory::Is => Some("is"),
            PrefixCategory::Test => Some("test"),
            PrefixCategory::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrefixCategory::Get => "GET",
            PrefixCategory::Set => "SET",
            PrefixCategory::Is => "IS",
            PrefixCategory::Test => "TEST",
            PrefixCategory::Other => "OTHER",
        }
    }
}

impl fmt::Display for PrefixCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrefixCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown category {s:?}")))
    }
}

/// Category of a gold name: the first subtoken must equal the prefix
/// exactly, so `settle` is `Other`.
pub fn derive_label(name: &SubtokenSequence) -> PrefixCategory {
    match name.first() {
        Some("get") => PrefixCategory::Get,
        Some("set") => PrefixCategory::Set,
        Some("is") => PrefixCategory::Is,
        Some("test") => PrefixCategory::Test,
        _ => PrefixCategory::Other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Initial rate, decayed linearly to zero over all updates.
    pub learning_rate: f64,
    pub dim: usize,
    pub hash_space: usize,
    /// Features present in fewer training records are dropped.
    pub min_count: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            learning_rate: 0.1,
            dim: 64,
            hash_space: DEFAULT_HASH_SPACE,
            min_count: 1,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("classifier epochs must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("classifier learning rate must be > 0".into()));
        }
        if self.dim < 2 {
            return Err(Error::Config("classifier dim must be >= 2".into()));
        }
        if self.hash_space < MIN_HASH_SPACE || self.hash_space > u32::MAX as usize {
            return Err(Error::Config(format!(
                "hash space must lie in [{MIN_HASH_SPACE}, 2^32)"
            )));
        }
        if self.min_count < 1 {
            return Err(Error::Config("classifier min_count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    hash_space: usize,
    dim: usize,
    seed: u64,
    /// Materialized rows of the embedding matrix `A`.
    rows: BTreeMap<u32, Vec<f64>>,
    /// `B`, `dim × K`.
    output: Matrix,
    bias: Vec<f64>,
    /// Feature ids kept after frequency pruning; `None` keeps everything.
    kept: Option<BTreeSet<u32>>,
}

/// Initial value of `A[row][col]`: uniform in `[-1/d, 1/d]`, a pure function
/// of `(seed, row, col)`, rounded to `f32`.
fn init_entry(seed: u64, row: u32, col: usize, dim: usize) -> f64 {
    let bits = splitmix64(seed ^ splitmix64((u64::from(row) << 32) | col as u64));
    let unit = (bits >> 11) as f64 / (1u64 << 53) as f64;
    let v = (2.0 * unit - 1.0) / dim as f64;
    f64::from(v as f32)
}

impl ClassifierModel {
    /// Fresh model: `A` uniform in `[-1/d, 1/d]`, `B` and bias zero.
    pub fn new(hash_space: usize, dim: usize, seed: u64) -> Self {
        assert!(hash_space >= MIN_HASH_SPACE, "hash space too small");
        assert!(dim >= 2, "dim must be at least 2");
        ClassifierModel {
            hash_space,
            dim,
            seed,
            rows: BTreeMap::new(),
            output: Matrix::zeros(dim, NUM_CATEGORIES),
            bias: vec![0.0; NUM_CATEGORIES],
            kept: None,
        }
    }

    pub fn hash_space(&self) -> usize {
        self.hash_space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn output(&self) -> &Matrix {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut Matrix {
        &mut self.output
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn materialized_rows(&self) -> &BTreeMap<u32, Vec<f64>> {
        &self.rows
    }

    pub fn kept_features(&self) -> Option<&BTreeSet<u32>> {
        self.kept.as_ref()
    }

    pub(crate) fn from_parts(
        hash_space: usize,
        dim: usize,
        seed: u64,
        rows: BTreeMap<u32, Vec<f64>>,
        output: Matrix,
        bias: Vec<f64>,
        kept: Option<BTreeSet<u32>>,
    ) -> Result<Self> {
        if hash_space < MIN_HASH_SPACE || dim < 2 {
            return Err(Error::Malformed("classifier dimensions".into()));
        }
        if output.shape() != (dim, NUM_CATEGORIES) || bias.len() != NUM_CATEGORIES {
            return Err(Error::Malformed("classifier output shape".into()));
        }
        if rows
            .iter()
            .any(|(&i, r)| i as usize >= hash_space || r.len() != dim)
        {
            return Err(Error::Malformed("classifier embedding rows".into()));
        }
        Ok(ClassifierModel {
            hash_space,
            dim,
            seed,
            rows,
            output,
            bias,
            kept,
        })
    }

    /// Row `idx` of `A`, materialized or freshly derived from the seed.
    pub fn embedding_row(&self, idx: u32) -> Cow<'_, [f64]> {
        match self.rows.get(&idx) {
            Some(r) => Cow::Borrowed(r),
            None => Cow::Owned(self.initial_row(idx)),
        }
    }

    fn initial_row(&self, idx: u32) -> Vec<f64> {
        (0..self.dim)
            .map(|c| init_entry(self.seed, idx, c, self.dim))
            .collect()
    }

    pub fn embedding_row_mut(&mut self, idx: u32) -> &mut Vec<f64> {
        assert!((idx as usize) < self.hash_space, "feature id out of range");
        if !self.rows.contains_key(&idx) {
            let init = self.initial_row(idx);
            self.rows.insert(idx, init);
        }
        self.rows.get_mut(&idx).expect("row just inserted")
    }

    /// The bag the model actually sees for `record`, pruning applied.
    pub fn features(&self, record: &MethodRecord) -> FeatureBag {
        let bag = featurize(record, self.hash_space);
        match &self.kept {
            Some(kept) => bag.retain(|i| kept.contains(&i)),
            None => bag,
        }
    }

    /// Weighted mean of the bag's embedding rows; zero for an empty bag.
    pub fn hidden(&self, bag: &FeatureBag) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        for (idx, w) in bag.iter() {
            axpy(w, &self.embedding_row(idx), &mut h);
        }
        h
    }

    fn logits(&self, hidden: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        self.output.accumulate_vec_mul(hidden, &mut z);
        z
    }

    /// Category distribution for a bag, in `PrefixCategory::ALL` order.
    pub fn forward(&self, bag: &FeatureBag) -> Vec<f64> {
        softmax(&self.logits(&self.hidden(bag)))
    }

    /// Argmax category and its probability; ties go to the earlier category.
    pub fn classify(&self, record: &MethodRecord) -> (PrefixCategory, f64) {
        let p = self.forward(&self.features(record));
        let mut best = 0;
        for k in 1..NUM_CATEGORIES {
            if p[k] > p[best] {
                best = k;
            }
        }
        (PrefixCategory::from_index(best), p[best])
    }

    fn round_to_f32(&mut self) {
        for r in self.rows.values_mut() {
            crate::tensor::round_f32(r);
        }
        self.output.round_to_f32();
        crate::tensor::round_f32(&mut self.bias);
    }
}

/// Mean negative log-likelihood of the true categories.
///
/// # Panics
/// If `batch` is empty.
pub fn nll_loss(model: &ClassifierModel, batch: &[(FeatureBag, PrefixCategory)]) -> f64 {
    assert!(!batch.is_empty(), "nll_loss needs a non-empty batch");
    let total: f64 = batch
        .iter()
        .map(|(bag, y)| {
            let lp = log_softmax(&model.logits(&model.hidden(bag)));
            -lp[y.index()]
        })
        .sum();
    total / batch.len() as f64
}

/// Gradient of `nll_loss` with respect to every parameter it depends on.
#[derive(Debug, Clone)]
pub struct ClassifierGradient {
    /// Only rows referenced by the batch.
    pub rows: BTreeMap<u32, Vec<f64>>,
    pub output: Matrix,
    pub bias: Vec<f64>,
}

struct ExampleGrad {
    dlogits: Vec<f64>,
    dhidden: Vec<f64>,
    hidden: Vec<f64>,
    loss: f64,
}

fn example_grad(model: &ClassifierModel, bag: &FeatureBag, y: PrefixCategory) -> ExampleGrad {
    let hidden = model.hidden(bag);
    let logits = model.logits(&hidden);
    let lp = log_softmax(&logits);
    let mut dlogits: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    dlogits[y.index()] -= 1.0;
    let mut dhidden = vec![0.0; model.dim];
    model.output.accumulate_mul_vec(&dlogits, &mut dhidden);
    ExampleGrad {
        dlogits,
        dhidden,
        hidden,
        loss: -lp[y.index()],
    }
}

pub fn nll_gradient(model: &ClassifierModel, batch: &[(FeatureBag, PrefixCategory)]) -> ClassifierGradient {
    assert!(!batch.is_empty(), "nll_gradient needs a non-empty batch");
    let scale = 1.0 / batch.len() as f64;
    let mut grad = ClassifierGradient {
        rows: BTreeMap::new(),
        output: Matrix::zeros(model.dim, NUM_CATEGORIES),
        bias: vec![0.0; NUM_CATEGORIES],
    };
    for (bag, y) in batch {
        let g = example_grad(model, bag, *y);
        let scaled: Vec<f64> = g.dlogits.iter().map(|d| d * scale).collect();
        grad.output.add_outer(&g.hidden, &scaled);
        axpy(1.0, &scaled, &mut grad.bias);
        for (idx, w) in bag.iter() {
            let row = grad.rows.entry(idx).or_insert_with(|| vec![0.0; model.dim]);
            axpy(w * scale, &g.dhidden, row);
        }
    }
    grad
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: ClassifierModel,
    /// Mean training loss of each epoch, measured before each update.
    pub loss_trace: Vec<f64>,
}

/// SGD on precomputed bags; one update per example, seeded shuffling each
/// epoch, learning rate decayed linearly to zero.
pub fn train_on_bags(
    bags: &[FeatureBag],
    labels: &[PrefixCategory],
    config: &TrainConfig,
) -> Result<TrainedClassifier> {
    config.validate()?;
    if bags.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if bags.len() != labels.len() {
        return Err(Error::contract("one label per training example"));
    }
    let mut model = ClassifierModel::new(config.hash_space, config.dim, config.seed);

    let mut bags: Cow<'_, [FeatureBag]> = Cow::Borrowed(bags);
    if config.min_count > 1 {
        let mut df: BTreeMap<u32, usize> = BTreeMap::new();
        for bag in bags.iter() {
            for &i in &bag.indices {
                *df.entry(i).or_insert(0) += 1;
            }
        }
        let kept: BTreeSet<u32> = df
            .into_iter()
            .filter(|&(_, c)| c >= config.min_count)
            .map(|(i, _)| i)
            .collect();
        bags = Cow::Owned(bags.iter().map(|b| b.retain(|i| kept.contains(&i))).collect());
        model.kept = Some(kept);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..bags.len()).collect();
    let total_steps = (config.epochs * bags.len()) as f64;
    let mut step = 0usize;
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &n in &order {
            let lr = config.learning_rate * (1.0 - step as f64 / total_steps);
            step += 1;
            let bag = &bags[n];
            let g = example_grad(&model, bag, labels[n]);
            epoch_loss += g.loss;
            for (idx, w) in bag.iter() {
                axpy(-lr * w, &g.dhidden, model.embedding_row_mut(idx));
            }
            let neg: Vec<f64> = g.dlogits.iter().map(|d| -lr * d).collect();
            model.output.add_outer(&g.hidden, &neg);
            axpy(1.0, &neg, &mut model.bias);
        }
        loss_trace.push(epoch_loss / bags.len() as f64);
    }
    model.round_to_f32();
    Ok(TrainedClassifier { model, loss_trace })
}

/// Featurizes `records` and trains on them.
pub fn train_classifier(
    records: &[MethodRecord],
    labels: &[PrefixCategory],
    config: &TrainConfig,
) -> Result<TrainedClassifier> {
    config.validate()?;
    let bags: Vec<FeatureBag> = records
        .iter()
        .map(|r| featurize(r, config.hash_space))
        .collect();
    train_on_bags(&bags, labels, config)
}
