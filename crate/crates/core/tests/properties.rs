mod common;

use common::brute_force_prf;
use namerec::eval::{evaluate, gold_name, kfold_split, token_prf};
use namerec::extractor::MethodRecord;
use namerec::generator::{beam_decode, DecodeConfig};
use namerec::pipeline::format::{decode, encode, Payload, Section};
use namerec::pipeline::{camel_join, PipelineConfig};
use namerec::text::{build_vocab, featurize, split_identifier, SubtokenSequence, VocabRole, Vocabulary};
use namerec::ClassifierModel;
use proptest::prelude::*;

fn tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["get", "set", "name", "id", "x", "2"]), 0..6)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn subtokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-z]{1,6}|[0-9]{1,3}", 1..6)
}

/// No single-letter word after the first and no two adjacent numbers.
fn unambiguous_subtokens() -> impl Strategy<Value = Vec<String>> {
    let word_then_number = ("[a-z]{2,6}", prop::option::of("[0-9]{1,3}"));
    ("[a-z]{1,6}", prop::option::of("[0-9]{1,3}"), prop::collection::vec(word_then_number, 0..4)).prop_map(
        |(first, n, rest)| {
            let mut out = vec![first];
            out.extend(n);
            for (w, n) in rest {
                out.push(w);
                out.extend(n);
            }
            out
        },
    )
}

fn records() -> impl Strategy<Value = Vec<MethodRecord>> {
    (any::<u64>(), 1usize..30).prop_map(|(seed, n)| {
        let mut rng = common::rng(seed);
        (0..n).map(|_| common::random_record(&mut rng)).collect()
    })
}

proptest! {
    #[test]
    fn prf_is_symmetric_and_bounded(pred in tokens(), gold in tokens()) {
        prop_assume!(!pred.is_empty() && !gold.is_empty());
        let (p, r, f) = token_prf(&pred, &gold).unwrap();
        let (p2, r2, f2) = token_prf(&gold, &pred).unwrap();
        prop_assert_eq!((p, r), (r2, p2));
        prop_assert!((f - f2).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&f));
        let shared = gold.iter().any(|g| pred.contains(g));
        prop_assert_eq!(f == 0.0, !shared);
    }

    #[test]
    fn prf_matches_brute_force(pred in tokens(), gold in tokens()) {
        prop_assume!(!gold.is_empty());
        let (p, r, f) = token_prf(&pred, &gold).unwrap();
        let (bp, br, bf) = brute_force_prf(&pred, &gold);
        prop_assert_eq!((p, r), (bp, br));
        prop_assert!((f - bf).abs() < 1e-12);
    }

    #[test]
    fn folds_partition_the_corpus(n in 2usize..300, k in 2usize..20, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let folds = kfold_split(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0usize; n];
        for (train, test) in &folds {
            prop_assert_eq!(train.len() + test.len(), n);
            prop_assert!(test.len() == n / k || test.len() == n / k + 1);
            for &i in test {
                seen[i] += 1;
                prop_assert!(!train.contains(&i));
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(folds, kfold_split(n, k, seed).unwrap());
    }

    #[test]
    fn concatenated_test_sets_average_by_size(a in records(), b in records(), seed in any::<u64>()) {
        // a deterministic but arbitrary recommender
        let rec = |r: &MethodRecord| {
            let mut t = gold_name(r).into_inner();
            if (r.body_tokens.len() as u64 ^ seed).is_multiple_of(3) {
                t.reverse();
                t.push("x".into());
            }
            if r.body_tokens.len() % 4 == 1 { t.clear(); }
            SubtokenSequence::new(t)
        };
        let ra = evaluate(rec, &a).unwrap();
        let rb = evaluate(rec, &b).unwrap();
        let all: Vec<MethodRecord> = a.iter().chain(&b).cloned().collect();
        let rab = evaluate(rec, &all).unwrap();
        let (na, nb) = (ra.n as f64, rb.n as f64);
        let avg = |x: f64, y: f64| (na * x + nb * y) / (na + nb);
        prop_assert_eq!(rab.n, ra.n + rb.n);
        prop_assert!((rab.precision - avg(ra.precision, rb.precision)).abs() < 1e-12);
        prop_assert!((rab.recall - avg(ra.recall, rb.recall)).abs() < 1e-12);
        prop_assert!((rab.f1 - avg(ra.f1, rb.f1)).abs() < 1e-12);
        prop_assert!((rab.exact_match - avg(ra.exact_match, rb.exact_match)).abs() < 1e-12);
        prop_assert_eq!(rab.per_category.values().map(|g| g.n).sum::<usize>(), rab.n);
        prop_assert_eq!(rab.per_length.values().map(|g| g.n).sum::<usize>(), rab.n);
    }

    #[test]
    fn camel_join_resplits_to_a_fixed_point(toks in subtokens()) {
        // camelCase is lossy ("aAA" reads as a + aa), but one split settles it
        let once = split_identifier(&camel_join(&toks)).tokens().to_vec();
        let twice = split_identifier(&camel_join(&once)).tokens().to_vec();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn unambiguous_tokens_round_trip_exactly(toks in unambiguous_subtokens()) {
        let back = split_identifier(&camel_join(&toks));
        prop_assert_eq!(back.tokens(), &toks[..]);
    }

    #[test]
    fn feature_weights_and_probabilities_are_normalized(rs in records(), seed in any::<u64>()) {
        let model = ClassifierModel::new(1 << 12, 8, seed);
        for r in &rs {
            let bag = featurize(r, 1 << 12);
            let total: f64 = bag.weights.iter().sum();
            prop_assert!(bag.is_empty() || (total - 1.0).abs() < 1e-12);
            let p = model.forward(&bag);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn vocabulary_text_round_trip(rs in records(), min_count in 1usize..4) {
        for role in [VocabRole::Context, VocabRole::Name] {
            let v = build_vocab(&rs, min_count, role);
            prop_assert_eq!(Vocabulary::from_text(&v.to_text()).unwrap(), v);
        }
    }

    #[test]
    fn corpus_round_trip(rs in records()) {
        let mut buf = Vec::new();
        namerec::corpus::write_records(&mut buf, &rs).unwrap();
        let back = namerec::corpus::read_corpus_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.rejected, 0);
        prop_assert_eq!(back.records, rs);
    }

    #[test]
    fn config_round_trip(seed in any::<u64>(), lr in 1e-6f64..10.0, alpha in 0.0f64..=1.0, width in 1usize..20) {
        let mut c = PipelineConfig::default().with_seed(seed);
        c.generator.learning_rate = lr;
        c.decode.length_penalty = alpha;
        c.decode.beam_width = width;
        prop_assert_eq!(PipelineConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn model_format_round_trip(
        floats in prop::collection::vec(any::<f32>().prop_filter("nan", |f| !f.is_nan()), 0..50),
        ids in prop::collection::vec(any::<u32>(), 0..50),
        text in ".{0,40}",
    ) {
        let sections = vec![
            Section { name: "t".into(), payload: Payload::Text(text) },
            Section { name: "f".into(), payload: Payload::F32(floats) },
            Section { name: "i".into(), payload: Payload::Indices(ids) },
        ];
        prop_assert_eq!(decode(&encode(&sections)).unwrap(), sections);
    }

    #[test]
    fn truncated_model_bytes_never_panic(cut in 0usize..400, flip in any::<(usize, u8)>()) {
        let sections = vec![
            Section { name: "vocab".into(), payload: Payload::Text("abc".into()) },
            Section { name: "w".into(), payload: Payload::F32(vec![1.0; 40]) },
        ];
        let mut bytes = encode(&sections);
        bytes.truncate(cut.min(bytes.len()));
        let n = bytes.len();
        if n > 0 {
            bytes[flip.0 % n] ^= flip.1;
        }
        let _ = decode(&bytes);
        let _ = namerec::PipelineModel::from_bytes(&bytes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wider_beams_never_score_worse(seed in 0u64..10_000, width in 2usize..6, max_len in 1usize..5) {
        let m = common::tiny_generator(seed);
        let r = common::random_record(&mut common::rng(seed));
        let narrow = beam_decode(&m, &r, &DecodeConfig { beam_width: 1, max_len, length_penalty: 0.0 });
        let wide = beam_decode(&m, &r, &DecodeConfig { beam_width: width, max_len, length_penalty: 0.0 });
        prop_assert!(wide[0].score >= narrow[0].score);
    }

    #[test]
    fn decoding_is_deterministic(seed in 0u64..10_000) {
        let m = common::tiny_generator(seed);
        let r = common::random_record(&mut common::rng(seed));
        let c = DecodeConfig::default();
        prop_assert_eq!(beam_decode(&m, &r, &c), beam_decode(&m, &r, &c));
    }
}

#[test]
fn oracle_recommender_scores_one() {
    let rs = namerec::synth::synth_corpus(50, 1);
    let report = evaluate(gold_name, &rs).unwrap();
    assert_eq!((report.precision, report.recall, report.f1, report.exact_match), (1.0, 1.0, 1.0, 1.0));
}

#[test]
fn constant_get_on_other_methods_never_matches() {
    let rs = namerec::synth::memorization_corpus(40, 2);
    let report = evaluate(|_| SubtokenSequence::from_strs(&["get"]), &rs).unwrap();
    assert_eq!(report.exact_match, 0.0);
    assert_eq!(report.per_category.len(), 1);
}

#[test]
fn report_json_keys() {
    let rs = namerec::synth::synth_corpus(10, 1);
    let report = evaluate(gold_name, &rs).unwrap();
    let v: serde_json::Value = serde_json::to_value(&report).unwrap();
    for key in ["n", "precision", "recall", "f1", "exact_match", "per_category", "per_length"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["per_category"].get("GET").is_some());
    assert!(report.to_string().contains("macro"));
}
