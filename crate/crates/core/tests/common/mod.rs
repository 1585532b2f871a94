//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use namerec::classifier::{nll_gradient, nll_loss, ClassifierModel, PrefixCategory};
use namerec::extractor::MethodRecord;
use namerec::generator::{Example, GeneratorModel};
use namerec::text::{build_vocab, FeatureBag, VocabRole};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/src")
}

/// Relative error with a floor on the denominator so that two values that
/// are both essentially zero compare as equal.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FdResult {
    pub max_rel_err: f64,
    pub checked: usize,
}

impl FdResult {
    fn record(&mut self, analytic: f64, numeric: f64) {
        self.max_rel_err = self.max_rel_err.max(rel_err(analytic, numeric));
        self.checked += 1;
    }
}

fn central<F: FnMut(f64) -> f64>(mut loss_at: F) -> f64 {
    (loss_at(FD_STEP) - loss_at(-FD_STEP)) / (2.0 * FD_STEP)
}

fn random_bag(rng: &mut ChaCha8Rng, hash_space: u32) -> FeatureBag {
    let mut counts = BTreeMap::new();
    for _ in 0..rng.gen_range(1..=5) {
        counts.insert(rng.gen_range(0..hash_space), rng.gen_range(1..=3) as f64);
    }
    FeatureBag::from_counts(counts)
}

/// Central differences on every parameter a random batch touches, plus one
/// untouched embedding row whose gradient must vanish.
pub fn classifier_fd(seed: u64) -> FdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hash_space = 1 << 10;
    let dim = rng.gen_range(2..=6);
    let mut model = ClassifierModel::new(hash_space, dim, seed);
    for v in model.output_mut().data_mut() {
        *v = rng.gen_range(-0.5..0.5);
    }
    for v in model.bias_mut() {
        *v = rng.gen_range(-0.5..0.5);
    }
    let batch: Vec<(FeatureBag, PrefixCategory)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let bag = random_bag(&mut rng, hash_space as u32);
            (bag, PrefixCategory::from_index(rng.gen_range(0..5)))
        })
        .collect();
    // give touched rows values unlike the lazy initializer
    for (bag, _) in &batch {
        for &i in &bag.indices {
            for v in model.embedding_row_mut(i).iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
    }
    let grad = nll_gradient(&model, &batch);
    let mut out = FdResult::default();

    let mut touched: Vec<u32> = batch.iter().flat_map(|(b, _)| b.indices.clone()).collect();
    touched.sort_unstable();
    touched.dedup();
    let untouched = (0..hash_space as u32).find(|i| !touched.contains(i)).unwrap();
    for &row in touched.iter().chain([&untouched]) {
        for col in 0..dim {
            let base = model.embedding_row(row)[col];
            let numeric = central(|h| {
                model.embedding_row_mut(row)[col] = base + h;
                nll_loss(&model, &batch)
            });
            model.embedding_row_mut(row)[col] = base;
            let analytic = grad.rows.get(&row).map_or(0.0, |r| r[col]);
            out.record(analytic, numeric);
        }
    }
    for k in 0..model.output().data().len() {
        let base = model.output().data()[k];
        let numeric = central(|h| {
            model.output_mut().data_mut()[k] = base + h;
            nll_loss(&model, &batch)
        });
        model.output_mut().data_mut()[k] = base;
        out.record(grad.output.data()[k], numeric);
    }
    for k in 0..model.bias().len() {
        let base = model.bias()[k];
        let numeric = central(|h| {
            model.bias_mut()[k] = base + h;
            nll_loss(&model, &batch)
        });
        model.bias_mut()[k] = base;
        out.record(grad.bias[k], numeric);
    }
    out
}

pub fn record(class: &str, name: &str, ret: &str, params: &[(&str, &str)], body: &[&str]) -> MethodRecord {
    MethodRecord {
        class_name: class.into(),
        method_name: name.into(),
        return_type: ret.into(),
        parameters: params.iter().map(|(t, n)| (t.to_string(), n.to_string())).collect(),
        body_tokens: body.iter().map(|s| s.to_string()).collect(),
        source_path: "T.java".into(),
        is_test_context: false,
    }
}

/// A generator with `d_e = 4`, `d_h = 5`, `V_n = 7` and every parameter
/// drawn uniformly from `±0.5`.
pub fn tiny_generator(seed: u64) -> GeneratorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = vec![
        record("Foo", "alpha", "int", &[("int", "x")], &["return", "x", ";"]),
        record("Bar", "beta", "void", &[], &["x", "=", "1", ";"]),
        record("Foo", "gamma", "String", &[], &["return", "name", ";"]),
    ];
    let vocab_c = build_vocab(&records, 1, VocabRole::Context);
    let vocab_n = build_vocab(&records, 1, VocabRole::Name);
    assert_eq!(vocab_n.len(), 7);
    let mut model = GeneratorModel::init(vocab_c, vocab_n, 4, 5, seed, &mut rng);
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    model
}

/// Central differences on every entry of every generator tensor for a
/// random example with context and name lengths up to 3.
pub fn generator_fd(seed: u64) -> FdResult {
    let mut model = tiny_generator(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let v_c = model.vocab_c.len() as u32;
    let v_n = model.vocab_n.len() as u32;
    let ex = Example {
        context: (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(0..v_c)).collect(),
        name: (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(4..v_n)).collect(),
    };
    let (loss, grad) = model.gradient(&ex);
    let direct = model.teacher_forced_loss(&ex);
    assert!((loss - direct).abs() <= 1e-12 * direct.abs(), "{loss} vs {direct}");
    let dense = grad.dense(&model);
    let mut out = FdResult::default();
    for (t, analytic) in dense.iter().enumerate() {
        for k in 0..analytic.len() {
            let base = model.tensors()[t].1[k];
            let numeric = central(|h| {
                model.tensors_mut()[t][k] = base + h;
                model.teacher_forced_loss(&ex)
            });
            model.tensors_mut()[t][k] = base;
            out.record(analytic[k], numeric);
        }
    }
    out
}

/// Greedy one-to-one matching of predicted tokens against gold tokens.
pub fn brute_force_prf(pred: &[String], gold: &[String]) -> (f64, f64, f64) {
    let mut used = vec![false; gold.len()];
    let mut m = 0usize;
    for p in pred {
        if let Some(j) = (0..gold.len()).find(|&j| !used[j] && gold[j] == *p) {
            used[j] = true;
            m += 1;
        }
    }
    let p = if pred.is_empty() { 0.0 } else { m as f64 / pred.len() as f64 };
    let r = m as f64 / gold.len() as f64;
    let f1 = 2.0 * m as f64 / (pred.len() + gold.len()) as f64;
    (p, r, f1)
}

pub fn random_tokens(rng: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<String> {
    const POOL: &[&str] = &["get", "set", "name", "user", "id", "is", "value", "to", "string", "2"];
    (0..rng.gen_range(min..=max))
        .map(|_| POOL.choose(rng).unwrap().to_string())
        .collect()
}

const WORDS: &[&str] = &[
    "return", "this", ".", "=", ";", "(", ")", "{", "}", "if", "null", "0", "1", "+", "value", "name", "count",
    "items", "size", "new", "List", "String", "x", "y", "zork", "qux", "assertEquals", "for", ":",
];

/// Arbitrary records, not necessarily well-formed Java, mixing familiar
/// and unseen tokens.
pub fn random_record(rng: &mut ChaCha8Rng) -> MethodRecord {
    let name = ["getValue", "setName", "isEmpty", "testSize", "computeTotal", "run", "toString", "zorkQux"]
        .choose(rng)
        .unwrap();
    let ret = ["void", "int", "boolean", "String", "List<String>", "Zork"].choose(rng).unwrap();
    let params: Vec<(String, String)> = (0..rng.gen_range(0..=2))
        .map(|i| (["int", "String", "Qux"].choose(rng).unwrap().to_string(), format!("p{i}")))
        .collect();
    let body = (0..rng.gen_range(0..=25)).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    MethodRecord {
        class_name: ["Foo", "UserService", "ZorkTest"].choose(rng).unwrap().to_string(),
        method_name: name.to_string(),
        return_type: ret.to_string(),
        parameters: params,
        body_tokens: body,
        source_path: "R.java".into(),
        is_test_context: rng.gen_bool(0.3),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SNIPPETS: &[&str] = &[
    "class A { int f(int x) { return x + 1; } }",
    "interface I { default void run() { go(); } void stop(); }",
    "enum E { A { void f() {} }, B; int g() { return 1; } }",
    "@interface Q { int v() default 1; }",
    "record R(int a) { R { assert a > 0; } int twice() { return a * 2; } }",
    "class G<T extends Comparable<? super T>> { <U> Map<T, List<U>> m(T t, U... us) { return null; } }",
    "class L { Runnable r = () -> { int y = 0; }; void h() { new Thread(() -> {}).start(); } }",
    "class S { String s = \"}{\"; char c = '}'; /* { */ // }\n void f() { String t = \"\"\"\n{\n\"\"\"; } }",
];

/// Fixture sources followed by the inline snippets.
pub fn fuzz_seeds() -> Vec<String> {
    let mut seeds: Vec<String> = ["Inventory.java", "InventoryTest.java", "Shapes.java"]
        .iter()
        .map(|f| std::fs::read_to_string(fixtures_dir().join("org/example").join(f)).unwrap())
        .collect();
    seeds.extend(SNIPPETS.iter().map(|s| s.to_string()));
    seeds
}

const INSERTS: &[&str] = &[
    "{", "}", "(", ")", ";", "<", ">", ">>", "@", "@Test", "class", "interface", "enum", "void", "x", "\"s\"", "'c'",
    "/* c */", "// c\n", "->", ".", ",", "new", "default", "throws", "[]", "...", "=", "\"", "'", "/*", "\"\"\"",
];

fn char_boundary(s: &str, mut i: usize) -> usize {
    i = i.min(s.len());
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

/// One to four random edits: span deletion, duplication, insertion of a
/// Java-ish fragment, span swap or truncation.
pub fn mutate(src: &str, rng: &mut ChaCha8Rng) -> String {
    let mut s = src.to_string();
    for _ in 0..rng.gen_range(1..=4) {
        let n = s.len().max(1);
        let a = char_boundary(&s, rng.gen_range(0..n));
        let b = char_boundary(&s, (a + rng.gen_range(0..40)).min(s.len()));
        match rng.gen_range(0..5) {
            0 => s.replace_range(a..b, ""),
            1 => {
                let span = s[a..b].to_string();
                s.insert_str(b, &span);
            }
            2 => s.insert_str(a, INSERTS.choose(rng).unwrap()),
            3 => {
                let c = char_boundary(&s, rng.gen_range(0..n));
                let (lo, hi) = if c < a { (c, a) } else { (a, c) };
                let hi2 = char_boundary(&s, (hi + (b - a)).min(s.len()));
                let first = s[lo..a.max(lo)].to_string();
                let second = s[hi..hi2].to_string();
                if lo < a && hi <= hi2 && a <= hi {
                    s.replace_range(hi..hi2, &first);
                    s.replace_range(lo..a, &second);
                }
            }
            _ => s.truncate(a),
        }
    }
    s
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FuzzStats {
    pub mutants: usize,
    pub lexed: usize,
    pub records: usize,
    pub crashes: usize,
    pub unbalanced: usize,
}

pub fn body_is_balanced(body: &[String]) -> bool {
    let mut depth = 0i64;
    for t in body {
        depth += i64::from(t == "{") - i64::from(t == "}");
        if depth < 0 {
            return false;
        }
    }
    depth == 0
}

pub fn fuzz_extractor(n: usize, seed: u64) -> FuzzStats {
    let seeds = fuzz_seeds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = FuzzStats::default();
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for i in 0..n {
        let src = mutate(&seeds[i % seeds.len()], &mut rng);
        stats.mutants += 1;
        let outcome = std::panic::catch_unwind(|| {
            namerec::extractor::lex_java(&src)
                .ok()
                .map(|toks| namerec::extractor::extract_methods(&toks, "Fuzz.java").records)
        });
        match outcome {
            Err(_) => stats.crashes += 1,
            Ok(None) => {}
            Ok(Some(records)) => {
                stats.lexed += 1;
                stats.records += records.len();
                stats.unbalanced += records.iter().filter(|r| !body_is_balanced(&r.body_tokens)).count();
            }
        }
    }
    std::panic::set_hook(hook);
    stats
}
