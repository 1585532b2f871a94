//! The two-phase router: classify, then name by heuristic or generator.
//! Also owns model persistence.

mod config;
pub mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::{PipelineConfig, KEYS as CONFIG_KEYS};
use format::{Payload, Section, SectionCursor};

use crate::classifier::{derive_label, train_classifier, ClassifierModel, PrefixCategory, NUM_CATEGORIES};
use crate::corpus::read_corpus;
use crate::error::{Error, Result};
use crate::eval::{gold_name, kfold_split, EvalReport, MethodScore};
use crate::extractor::MethodRecord;
use crate::generator::{beam_decode_with_prefix, train_generator_with_vocabs, GeneratorModel};
use crate::heuristics::{apply_heuristic, HeuristicOutcome, Rule};
use crate::tensor::Matrix;
use crate::text::{build_vocab, split_identifier, SubtokenSequence, VocabRole, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Route {
    Heuristic,
    Generator,
    GeneratorForcedPrefix,
    /// No generator was trained: the name is the category token alone.
    PrefixOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedName {
    pub name: String,
    pub subtokens: SubtokenSequence,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub candidates: Vec<RankedName>,
    pub route: Route,
    pub category: PrefixCategory,
    pub confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
}

/// `[get, user, name]` → `getUserName`; digit-only tokens are appended as is.
pub fn camel_join(tokens: &[String]) -> String {
    assert!(!tokens.is_empty(), "camel_join needs at least one token");
    let mut out = tokens[0].to_lowercase();
    for t in &tokens[1..] {
        let mut chars = t.chars();
        if let Some(first) = chars.next() {
            out.extend(first.to_uppercase());
            out.extend(chars);
        }
    }
    out
}

fn ranked(subtokens: SubtokenSequence, score: f64) -> RankedName {
    RankedName {
        name: camel_join(&subtokens),
        subtokens,
        score,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub classifier: ClassifierModel,
    /// Absent when the training corpus had no OTHER records.
    pub generator: Option<GeneratorModel>,
    pub vocab_c: Vocabulary,
    pub vocab_n: Vocabulary,
    pub config: PipelineConfig,
}

impl PipelineModel {
    pub fn format_version(&self) -> u8 {
        format::VERSION
    }

    pub fn is_degraded(&self) -> bool {
        self.generator.is_none()
    }

    pub fn classify(&self, record: &MethodRecord) -> (PrefixCategory, f64) {
        self.classifier.classify(record)
    }

    pub fn recommend(&self, record: &MethodRecord, top_k: usize) -> Recommendation {
        assert!(top_k >= 1, "top_k must be at least 1");
        let (category, confidence) = self.classifier.classify(record);
        let mut rule = None;
        if category != PrefixCategory::Other {
            match apply_heuristic(record, category).expect("category is not OTHER") {
                HeuristicOutcome::Named { name, rule } => {
                    return Recommendation {
                        candidates: vec![ranked(name, 1.0)],
                        route: Route::Heuristic,
                        category,
                        confidence,
                        rule: Some(rule),
                    };
                }
                HeuristicOutcome::Abstain { rule: r } => rule = Some(r),
            }
        }
        let Some(generator) = &self.generator else {
            let token = category.token().unwrap_or_else(|| self.best_prefixed_token(record));
            return Recommendation {
                candidates: vec![ranked(SubtokenSequence::from_strs(&[token]), 1.0)],
                route: Route::PrefixOnly,
                category,
                confidence,
                rule,
            };
        };
        let (route, forced) = match category.token() {
            Some(t) => (Route::GeneratorForcedPrefix, vec![t]),
            None => (Route::Generator, vec![]),
        };
        let mut candidates: Vec<RankedName> = beam_decode_with_prefix(generator, record, &self.config.decode, &forced)
            .into_iter()
            .take(top_k)
            .map(|c| ranked(c.tokens, c.score.exp()))
            .collect();
        if candidates.is_empty() {
            // only when the name vocabulary has nothing to emit
            let token = forced.first().copied().unwrap_or("unk");
            candidates.push(ranked(SubtokenSequence::from_strs(&[token]), 0.0));
        }
        Recommendation {
            candidates,
            route,
            category,
            confidence,
            rule,
        }
    }

    /// The heuristic's name when the classifier picks a prefixed category
    /// and the rule fires; empty otherwise.
    pub fn heuristic_only(&self, record: &MethodRecord) -> SubtokenSequence {
        let (category, _) = self.classifier.classify(record);
        if category == PrefixCategory::Other {
            return SubtokenSequence::empty();
        }
        match apply_heuristic(record, category).expect("category is not OTHER") {
            HeuristicOutcome::Named { name, .. } => name,
            HeuristicOutcome::Abstain { .. } => SubtokenSequence::empty(),
        }
    }

    /// Rank-1 subtokens of `recommend`.
    pub fn top_name(&self, record: &MethodRecord) -> SubtokenSequence {
        self.recommend(record, 1).candidates.swap_remove(0).subtokens
    }

    /// Token of the most probable category other than OTHER.
    fn best_prefixed_token(&self, record: &MethodRecord) -> &'static str {
        let probs = self.classifier.forward(&self.classifier.features(record));
        let best = (0..NUM_CATEGORIES)
            .filter(|&i| PrefixCategory::from_index(i) != PrefixCategory::Other)
            .fold(0, |b, i| if probs[i] > probs[b] { i } else { b });
        PrefixCategory::from_index(best).token().expect("not OTHER")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut sections = vec![
            text("vocab.context", self.vocab_c.to_text()),
            text("vocab.name", self.vocab_n.to_text()),
        ];
        let rows = self.classifier.materialized_rows();
        sections.push(Section {
            name: "classifier.A.rows".into(),
            payload: Payload::Indices(rows.keys().copied().collect()),
        });
        let a: Vec<f64> = rows.values().flatten().copied().collect();
        sections.push(tensor("classifier.A", &a));
        if let Some(kept) = self.classifier.kept_features() {
            sections.push(Section {
                name: "classifier.kept".into(),
                payload: Payload::Indices(kept.iter().copied().collect()),
            });
        }
        sections.push(tensor("classifier.B", self.classifier.output().data()));
        sections.push(tensor("classifier.bias", self.classifier.bias()));
        if let Some(g) = &self.generator {
            for (name, data) in g.tensors() {
                sections.push(tensor(&name, data));
            }
        }
        sections.push(text("config", self.config.to_text()));
        format::encode(&sections)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut sections = format::decode(bytes)?;
        let config = match sections.pop() {
            Some(Section {
                name,
                payload: Payload::Text(t),
            }) if name == "config" => PipelineConfig::from_text(&t)?,
            _ => return Err(Error::Malformed("missing config section".into())),
        };
        config.validate()?;
        let mut cur = SectionCursor::new(sections);
        let vocab_c = Vocabulary::from_text(&cur.text("vocab.context")?)?;
        let vocab_n = Vocabulary::from_text(&cur.text("vocab.name")?)?;
        if vocab_c.role() != VocabRole::Context || vocab_n.role() != VocabRole::Name {
            return Err(Error::Malformed("vocabulary roles".into()));
        }

        let c = &config.classifier;
        let row_ids = cur.indices("classifier.A.rows")?;
        let a = cur.f32s("classifier.A", row_ids.len() * c.dim)?;
        if row_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Malformed("classifier rows out of order".into()));
        }
        let rows: BTreeMap<u32, Vec<f64>> = row_ids
            .into_iter()
            .zip(a.chunks(c.dim).map(<[f64]>::to_vec))
            .collect();
        let kept = if cur.peek_name() == Some("classifier.kept") {
            Some(cur.indices("classifier.kept")?.into_iter().collect::<BTreeSet<u32>>())
        } else {
            None
        };
        let b = Matrix::from_vec(c.dim, NUM_CATEGORIES, cur.f32s("classifier.B", c.dim * NUM_CATEGORIES)?);
        let bias = cur.f32s("classifier.bias", NUM_CATEGORIES)?;
        let classifier = ClassifierModel::from_parts(c.hash_space, c.dim, c.seed, rows, b, bias, kept)?;

        let generator = if cur.peek_name().is_some() {
            let g = &config.generator;
            let mut model = GeneratorModel::zeros(vocab_c.clone(), vocab_n.clone(), g.embed_dim, g.hidden_dim, g.seed);
            model.max_context = g.max_context;
            let names: Vec<String> = model.tensors().into_iter().map(|(n, _)| n).collect();
            for (name, slot) in names.iter().zip(model.tensors_mut()) {
                let values = cur.f32s(name, slot.len())?;
                slot.copy_from_slice(&values);
            }
            Some(model)
        } else {
            None
        };
        cur.finish()?;
        Ok(PipelineModel {
            classifier,
            generator,
            vocab_c,
            vocab_n,
            config,
        })
    }
}

fn text(name: &str, t: String) -> Section {
    Section {
        name: name.into(),
        payload: Payload::Text(t),
    }
}

fn tensor(name: &str, data: &[f64]) -> Section {
    Section {
        name: name.into(),
        payload: Payload::F32(format::to_f32(data)),
    }
}

pub fn save_model(model: &PipelineModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<PipelineModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    PipelineModel::from_bytes(&bytes)
}

#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub model: PipelineModel,
    pub warnings: Vec<String>,
    pub classifier_loss: Vec<f64>,
    pub generator_loss: Vec<f64>,
}

/// Trains both phases on in-memory records.
///
/// The classifier sees every record; the generator sees only OTHER records.
/// Vocabularies are built from all records so category tokens can be forced
/// as prefixes.
pub fn train_pipeline_records(records: &[MethodRecord], config: &PipelineConfig) -> Result<TrainedPipeline> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let labels: Vec<PrefixCategory> = records
        .iter()
        .map(|r| derive_label(&split_identifier(&r.method_name)))
        .collect();
    let clf = train_classifier(records, &labels, &config.classifier)?;
    log::info!("classifier loss trace: {:?}", clf.loss_trace);

    let g = &config.generator;
    let vocab_c = build_vocab(records, g.context_min_count, VocabRole::Context);
    let vocab_n = build_vocab(records, g.name_min_count, VocabRole::Name);
    let others: Vec<MethodRecord> = records
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l == PrefixCategory::Other)
        .map(|(r, _)| r.clone())
        .collect();
    let mut warnings = Vec::new();
    let (generator, generator_loss) = if others.is_empty() {
        let w = "no OTHER-category records: generator skipped, recommendations fall back to \
                 heuristics or the category prefix alone"
            .to_string();
        log::warn!("{w}");
        warnings.push(w);
        (None, Vec::new())
    } else {
        let t = train_generator_with_vocabs(&others, vocab_c.clone(), vocab_n.clone(), g)?;
        log::info!("generator loss trace: {:?}", t.loss_trace);
        (Some(t.model), t.loss_trace)
    };
    Ok(TrainedPipeline {
        model: PipelineModel {
            classifier: clf.model,
            generator,
            vocab_c,
            vocab_n,
            config: config.clone(),
        },
        warnings,
        classifier_loss: clf.loss_trace,
        generator_loss,
    })
}

/// Reads a JSONL corpus and trains on it. Rejected lines become warnings.
pub fn train_pipeline(corpus_path: &Path, config: &PipelineConfig) -> Result<TrainedPipeline> {
    let read = read_corpus(corpus_path)?;
    let mut pre = Vec::new();
    if read.rejected > 0 {
        pre.push(format!("{} corpus lines rejected", read.rejected));
    }
    let mut trained = train_pipeline_records(&read.records, config)?;
    pre.append(&mut trained.warnings);
    trained.warnings = pre;
    Ok(trained)
}

/// Cross-validated scores of the pipeline next to two baselines: the
/// constant name `get`, and heuristics alone with abstentions scored as
/// empty predictions.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineComparison {
    pub pipeline: EvalReport,
    pub constant_get: EvalReport,
    pub heuristics_only: EvalReport,
}

pub fn cross_validate_pipeline(records: &[MethodRecord], k: usize, config: &PipelineConfig) -> Result<BaselineComparison> {
    let constant = SubtokenSequence::from_strs(&["get"]);
    let (mut full, mut cons, mut heur) = (Vec::new(), Vec::new(), Vec::new());
    let mut folds = Vec::with_capacity(k);
    for (i, (train_ids, test_ids)) in kfold_split(records.len(), k, config.seed())?.into_iter().enumerate() {
        let train: Vec<MethodRecord> = train_ids.iter().map(|&j| records[j].clone()).collect();
        let model = train_pipeline_records(&train, config)?.model;
        let mut fold = Vec::with_capacity(test_ids.len());
        for &j in &test_ids {
            let r = &records[j];
            let gold = gold_name(r);
            fold.push(MethodScore::new(&model.top_name(r), &gold)?);
            cons.push(MethodScore::new(&constant, &gold)?);
            heur.push(MethodScore::new(&model.heuristic_only(r), &gold)?);
        }
        let summary = EvalReport::from_scores(&fold)?.summary();
        log::info!("fold {}/{k}: n={} f1={:.4}", i + 1, summary.n, summary.f1);
        folds.push(summary);
        full.extend(fold);
    }
    let mut pipeline = EvalReport::from_scores(&full)?;
    pipeline.folds = folds;
    Ok(BaselineComparison {
        pipeline,
        constant_get: EvalReport::from_scores(&cons)?,
        heuristics_only: EvalReport::from_scores(&heur)?,
    })
}
