//! Token-level scoring, reports and the cross-validation harness.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{derive_label, PrefixCategory};
use crate::error::{Error, Result};
use crate::extractor::MethodRecord;
use crate::text::{split_identifier, SubtokenSequence};

/// Precision, recall and F1 of `predicted` against `gold` under multiset
/// overlap. An empty prediction scores zero.
pub fn token_prf(predicted: &[String], gold: &[String]) -> Result<(f64, f64, f64)> {
    if gold.is_empty() {
        return Err(Error::contract("gold name must not be empty"));
    }
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for t in predicted {
        counts.entry(t).or_default().0 += 1;
    }
    for t in gold {
        counts.entry(t).or_default().1 += 1;
    }
    let overlap: usize = counts.values().map(|&(p, g)| p.min(g)).sum();
    let p = if predicted.is_empty() {
        0.0
    } else {
        overlap as f64 / predicted.len() as f64
    };
    let r = overlap as f64 / gold.len() as f64;
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Ok((p, r, f1))
}

/// Score of one test method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScore {
    pub category: PrefixCategory,
    pub gold_len: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact: bool,
}

impl MethodScore {
    pub fn new(predicted: &SubtokenSequence, gold: &SubtokenSequence) -> Result<Self> {
        let (precision, recall, f1) = token_prf(predicted, gold)?;
        Ok(MethodScore {
            category: derive_label(gold),
            gold_len: gold.len(),
            precision,
            recall,
            f1,
            exact: predicted.tokens() == gold.tokens(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match: f64,
}

impl GroupScores {
    fn of<'a>(scores: impl IntoIterator<Item = &'a MethodScore>) -> Self {
        let (mut n, mut p, mut r, mut f, mut e) = (0usize, 0.0, 0.0, 0.0, 0usize);
        for s in scores {
            n += 1;
            p += s.precision;
            r += s.recall;
            f += s.f1;
            e += usize::from(s.exact);
        }
        let d = n.max(1) as f64;
        GroupScores {
            n,
            precision: p / d,
            recall: r / d,
            f1: f / d,
            exact_match: e as f64 / d,
        }
    }
}

/// Macro-averaged report. Per-length buckets are keyed "1".."4" and "5+".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match: f64,
    pub per_category: BTreeMap<PrefixCategory, GroupScores>,
    pub per_length: BTreeMap<String, GroupScores>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<GroupScores>,
}

fn length_bucket(len: usize) -> String {
    if len >= 5 {
        "5+".to_string()
    } else {
        len.to_string()
    }
}

impl EvalReport {
    /// The overall row of the report.
    pub fn summary(&self) -> GroupScores {
        GroupScores {
            n: self.n,
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
            exact_match: self.exact_match,
        }
    }

    pub fn from_scores(scores: &[MethodScore]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::contract("cannot report on an empty test set"));
        }
        let all = GroupScores::of(scores);
        let mut per_category = BTreeMap::new();
        for cat in PrefixCategory::ALL {
            let g = GroupScores::of(scores.iter().filter(|s| s.category == cat));
            if g.n > 0 {
                per_category.insert(cat, g);
            }
        }
        let mut buckets: BTreeMap<String, Vec<&MethodScore>> = BTreeMap::new();
        for s in scores {
            buckets.entry(length_bucket(s.gold_len)).or_default().push(s);
        }
        let per_length = buckets
            .into_iter()
            .map(|(k, v)| (k, GroupScores::of(v)))
            .collect();
        Ok(EvalReport {
            n: all.n,
            precision: all.precision,
            recall: all.recall,
            f1: all.f1,
            exact_match: all.exact_match,
            per_category,
            per_length,
            folds: Vec::new(),
        })
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, label: &str, g: &GroupScores| {
            writeln!(
                f,
                "{label:<10} {:>7} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                g.n, g.precision, g.recall, g.f1, g.exact_match
            )
        };
        writeln!(f, "{:<10} {:>7} {:>9} {:>9} {:>9} {:>9}", "group", "n", "precision", "recall", "f1", "exact")?;
        row(f, "all", &self.summary())?;
        for (cat, g) in &self.per_category {
            row(f, cat.as_str(), g)?;
        }
        for (len, g) in &self.per_length {
            row(f, &format!("len {len}"), g)?;
        }
        for (i, g) in self.folds.iter().enumerate() {
            row(f, &format!("fold {}", i + 1), g)?;
        }
        writeln!(f, "(macro-averaged over methods)")
    }
}

/// Gold subtokens of a record's name.
pub fn gold_name(record: &MethodRecord) -> SubtokenSequence {
    split_identifier(&record.method_name)
}

pub fn evaluate<F>(mut recommender: F, test_set: &[MethodRecord]) -> Result<EvalReport>
where
    F: FnMut(&MethodRecord) -> SubtokenSequence,
{
    let scores = score_all(&mut recommender, test_set)?;
    EvalReport::from_scores(&scores)
}

fn score_all<F>(recommender: &mut F, test_set: &[MethodRecord]) -> Result<Vec<MethodScore>>
where
    F: FnMut(&MethodRecord) -> SubtokenSequence,
{
    test_set
        .iter()
        .map(|r| MethodScore::new(&recommender(r), &gold_name(r)))
        .collect()
}

/// Seeded shuffle of `0..n` cut into `k` contiguous folds whose sizes
/// differ by at most one. Entry `i` is (train ids, test ids) with fold `i`
/// held out; both lists are sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::contract("k must be at least 2"));
    }
    if n < k {
        return Err(Error::CorpusTooSmall { size: n, k });
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        folds.push(ids[start..start + len].to_vec());
        start += len;
    }
    Ok((0..k)
        .map(|i| {
            let mut test = folds[i].clone();
            test.sort_unstable();
            let mut train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            train.sort_unstable();
            (train, test)
        })
        .collect())
}

/// Trains on each training split and scores the held-out fold. The pooled
/// report covers every record once; `folds` holds per-fold scores.
pub fn cross_validate<M, T, P>(
    records: &[MethodRecord],
    k: usize,
    seed: u64,
    mut train: T,
    mut predict: P,
) -> Result<EvalReport>
where
    T: FnMut(&[MethodRecord]) -> Result<M>,
    P: FnMut(&M, &MethodRecord) -> SubtokenSequence,
{
    let mut pooled = Vec::with_capacity(records.len());
    let mut folds = Vec::with_capacity(k);
    for (i, (train_ids, test_ids)) in kfold_split(records.len(), k, seed)?.into_iter().enumerate() {
        let train_set: Vec<MethodRecord> = train_ids.iter().map(|&j| records[j].clone()).collect();
        let test_set: Vec<MethodRecord> = test_ids.iter().map(|&j| records[j].clone()).collect();
        let model = train(&train_set)?;
        let scores = score_all(&mut |r: &MethodRecord| predict(&model, r), &test_set)?;
        let g = GroupScores::of(&scores);
        log::info!("fold {}/{k}: n={} f1={:.4}", i + 1, g.n, g.f1);
        folds.push(g);
        pooled.extend(scores);
    }
    let mut report = EvalReport::from_scores(&pooled)?;
    report.folds = folds;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(t: &[&str]) -> Vec<String> {
        t.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_names_score_one() {
        assert_eq!(token_prf(&seq(&["get", "name"]), &seq(&["get", "name"])).unwrap(), (1.0, 1.0, 1.0));
    }

    #[test]
    fn extra_predicted_token() {
        let (p, r, f) = token_prf(&seq(&["get", "user", "name"]), &seq(&["get", "name"])).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r, 1.0);
        assert!((f - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        assert_eq!(token_prf(&[], &seq(&["run"])).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_gold_is_rejected() {
        assert!(token_prf(&seq(&["run"]), &[]).is_err());
    }

    #[test]
    fn multiset_not_set() {
        let (p, r, _) = token_prf(&seq(&["a", "a", "a"]), &seq(&["a", "b"])).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn ten_folds_of_ten() {
        let folds = kfold_split(10, 10, 3).unwrap();
        assert!(folds.iter().all(|(train, test)| test.len() == 1 && train.len() == 9));
    }

    #[test]
    fn fold_sizes_are_near_equal() {
        let folds = kfold_split(23, 5, 1).unwrap();
        let sizes: Vec<usize> = folds.iter().map(|(_, t)| t.len()).collect();
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
    }

    #[test]
    fn too_small_corpus() {
        assert!(matches!(kfold_split(3, 5, 0), Err(Error::CorpusTooSmall { size: 3, k: 5 })));
        assert!(kfold_split(10, 1, 0).is_err());
    }

    #[test]
    fn length_buckets() {
        assert_eq!(length_bucket(1), "1");
        assert_eq!(length_bucket(4), "4");
        assert_eq!(length_bucket(9), "5+");
    }
}
