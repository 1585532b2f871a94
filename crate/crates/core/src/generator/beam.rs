//! Beam decoding over name subtokens.

use std::cmp::Ordering;

use super::lstm::step_cached;
use super::model::GeneratorModel;
use crate::extractor::MethodRecord;
use crate::text::{SubtokenSequence, END, PAD, START, UNK};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    pub beam_width: usize,
    /// Maximum number of name subtokens, forced prefix included.
    pub max_len: usize,
    /// `α` in `score = log p / steps^α`.
    pub length_penalty: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_width: 5,
            max_len: 8,
            length_penalty: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tokens: SubtokenSequence,
    pub ids: Vec<u32>,
    /// Sum of log-probabilities of the decoded steps (`</s>` included when
    /// emitted; forced tokens excluded).
    pub log_prob: f64,
    /// Decoded steps, at least one.
    pub steps: usize,
    pub ended: bool,
    pub score: f64,
}

#[derive(Clone)]
struct Hyp {
    ids: Vec<u32>,
    log_prob: f64,
    h: Vec<f64>,
    c: Vec<f64>,
}

fn order_ids(a: &[u32], b: &[u32]) -> Ordering {
    a.cmp(b)
}

struct Forced<'a> {
    ids: Vec<u32>,
    tokens: &'a [&'a str],
}

fn finish(model: &GeneratorModel, forced: &Forced<'_>, free: Vec<u32>, log_prob: f64, ended: bool, alpha: f64) -> Candidate {
    let steps = (free.len() + usize::from(ended)).max(1);
    let tokens = forced
        .tokens
        .iter()
        .map(|t| t.to_string())
        .chain(free.iter().map(|&i| model.vocab_n.token(i).to_string()))
        .collect();
    let tokens = SubtokenSequence::new(tokens);
    let ids: Vec<u32> = forced.ids.iter().copied().chain(free).collect();
    Candidate {
        tokens,
        ids,
        log_prob,
        steps,
        ended,
        score: log_prob / (steps as f64).powf(alpha),
    }
}

fn is_emittable(id: u32) -> bool {
    !matches!(id, PAD | UNK | START | END)
}

/// Beam search for `record`'s name, ranked by length-normalized score.
///
/// The greedy path is always among the candidates, so widening the beam
/// never lowers the best score when `length_penalty` is zero.
pub fn beam_decode(model: &GeneratorModel, record: &MethodRecord, config: &DecodeConfig) -> Vec<Candidate> {
    beam_decode_with_prefix(model, record, config, &[])
}

/// Beam search whose output must start with `prefix` (e.g. the category
/// token). Prefix tokens outside the vocabulary are fed as `<unk>` but
/// still appear verbatim in the result.
pub fn beam_decode_with_prefix(
    model: &GeneratorModel,
    record: &MethodRecord,
    config: &DecodeConfig,
    prefix: &[&str],
) -> Vec<Candidate> {
    assert!(config.beam_width >= 1, "beam width must be at least 1");
    let e_c = model.encode_context(record);
    let mut out = search(model, &e_c, config, prefix, config.beam_width);
    if config.beam_width > 1 {
        for g in search(model, &e_c, config, prefix, 1) {
            if !out.iter().any(|c| c.ids == g.ids && c.ended == g.ended) {
                out.push(g);
            }
        }
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| order_ids(&a.ids, &b.ids))
    });
    out.truncate(config.beam_width);
    out
}

fn search(model: &GeneratorModel, e_c: &[f64], config: &DecodeConfig, prefix: &[&str], width: usize) -> Vec<Candidate> {
    let alpha = config.length_penalty;
    let forced = Forced {
        ids: prefix.iter().map(|t| model.vocab_n.encode(t)).collect(),
        tokens: prefix,
    };
    let d_h = model.hidden_dim();
    let mut h = vec![0.0; d_h];
    let mut c = vec![0.0; d_h];
    for &id in std::iter::once(&START).chain(&forced.ids) {
        let s = step_cached(&model.gamma_p, model.name_embed.row(id as usize), &h, &c);
        h = s.h;
        c = s.c;
    }
    let mut live = vec![Hyp {
        ids: Vec::new(),
        log_prob: 0.0,
        h,
        c,
    }];
    let mut done = Vec::new();
    let budget = config.max_len.saturating_sub(forced.ids.len());
    for _ in 0..budget {
        // (hyp index, token, cumulative log-prob)
        let mut expansions: Vec<(usize, u32, f64)> = Vec::new();
        for (hi, hyp) in live.iter().enumerate() {
            let lp = model.next_token_log_probs(e_c, &hyp.h);
            let empty_so_far = forced.ids.is_empty() && hyp.ids.is_empty();
            for (id, &l) in lp.iter().enumerate() {
                let id = id as u32;
                let allowed = is_emittable(id) || (id == END && !empty_so_far);
                if allowed {
                    expansions.push((hi, id, hyp.log_prob + l));
                }
            }
        }
        expansions.sort_by(|a, b| {
            b.2.total_cmp(&a.2).then_with(|| {
                let ka: Vec<u32> = live[a.0].ids.iter().copied().chain([a.1]).collect();
                let kb: Vec<u32> = live[b.0].ids.iter().copied().chain([b.1]).collect();
                order_ids(&ka, &kb)
            })
        });
        expansions.truncate(width);
        let mut next = Vec::new();
        for (hi, id, log_prob) in expansions {
            let hyp = &live[hi];
            if id == END {
                done.push(finish(model, &forced, hyp.ids.clone(), log_prob, true, alpha));
            } else {
                let s = step_cached(&model.gamma_p, model.name_embed.row(id as usize), &hyp.h, &hyp.c);
                let mut ids = hyp.ids.clone();
                ids.push(id);
                next.push(Hyp {
                    ids,
                    log_prob,
                    h: s.h,
                    c: s.c,
                });
            }
        }
        live = next;
        if live.is_empty() {
            break;
        }
    }
    // cut off by max_len: still scored, no </s>
    for hyp in live {
        if !hyp.ids.is_empty() || !forced.ids.is_empty() {
            done.push(finish(model, &forced, hyp.ids, hyp.log_prob, false, alpha));
        }
    }
    done
}
