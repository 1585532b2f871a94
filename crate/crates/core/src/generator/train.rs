use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Example, GeneratorModel, DEFAULT_MAX_CONTEXT};
use crate::error::{Error, Result};
use crate::extractor::MethodRecord;
use crate::text::{build_vocab, VocabRole, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    /// Global L2 norm bound on each update's gradient.
    pub clip_norm: f64,
    pub epochs: usize,
    pub seed: u64,
    pub context_min_count: usize,
    pub name_min_count: usize,
    pub max_context: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            embed_dim: 64,
            hidden_dim: 128,
            learning_rate: 0.05,
            clip_norm: 5.0,
            epochs: 10,
            seed: 42,
            context_min_count: 5,
            name_min_count: 2,
            max_context: DEFAULT_MAX_CONTEXT,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.embed_dim < 1 || self.hidden_dim < 1 {
            return fail("generator dimensions must be >= 1");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return fail("generator learning rate must be > 0");
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return fail("generator clip norm must be > 0");
        }
        if self.epochs < 1 {
            return fail("generator epochs must be >= 1");
        }
        if self.context_min_count < 1 || self.name_min_count < 1 {
            return fail("vocabulary min counts must be >= 1");
        }
        if self.max_context < 1 {
            return fail("max context must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedGenerator {
    pub model: GeneratorModel,
    /// Mean per-record loss of each epoch, measured before each update.
    pub loss_trace: Vec<f64>,
}

/// Builds both vocabularies from `records` and trains on them.
pub fn train_generator(records: &[MethodRecord], config: &GeneratorConfig) -> Result<TrainedGenerator> {
    let vocab_c = build_vocab(records, config.context_min_count, VocabRole::Context);
    let vocab_n = build_vocab(records, config.name_min_count, VocabRole::Name);
    train_generator_with_vocabs(records, vocab_c, vocab_n, config)
}

/// Teacher-forced SGD, one clipped update per record, records shuffled by
/// a seeded generator every epoch. Final weights are rounded to `f32`.
pub fn train_generator_with_vocabs(
    records: &[MethodRecord],
    vocab_c: Vocabulary,
    vocab_n: Vocabulary,
    config: &GeneratorConfig,
) -> Result<TrainedGenerator> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GeneratorModel::init(
        vocab_c,
        vocab_n,
        config.embed_dim,
        config.hidden_dim,
        config.seed,
        &mut rng,
    );
    model.max_context = config.max_context;
    let examples: Vec<Example> = records.iter().map(|r| model.example(r)).collect();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &n in &order {
            let (loss, mut grad) = model.gradient(&examples[n]);
            grad.clip(config.clip_norm);
            model.apply(&grad, config.learning_rate);
            total += loss;
        }
        let mean = total / examples.len() as f64;
        log::debug!("generator epoch {} loss {mean:.4}", epoch + 1);
        loss_trace.push(mean);
    }
    model.round_to_f32();
    Ok(TrainedGenerator { model, loss_trace })
}
