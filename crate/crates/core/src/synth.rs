//! Synthetic corpora for tests, benchmarks and the `synth` command.
//!
//! Records are written as the extractor would produce them: body tokens are
//! lexer token texts. Names are built from small word pools so the gold
//! name of every record is known by construction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::PrefixCategory;
use crate::extractor::MethodRecord;
use crate::text::SubtokenSequence;

const NOUNS: &[&str] = &[
    "name", "user", "count", "value", "total", "size", "path", "file", "config", "status", "owner",
    "label", "index", "price", "timeout", "buffer", "message", "color", "width", "height", "node",
    "parent", "score", "limit", "key", "token", "session", "address", "order", "item", "title",
    "date", "level", "mode", "range", "result", "source", "target", "account", "channel", "report",
    "layer", "entry", "record", "event", "request", "response", "schema", "column", "query",
];

const ADJECTIVES: &[&str] = &[
    "enabled", "visible", "valid", "active", "empty", "ready", "closed", "open", "dirty", "locked",
    "running", "selected", "hidden", "available", "expired", "pending", "resolved", "mutable",
];

const CLASS_SUFFIXES: &[&str] = &[
    "Service", "Manager", "Repository", "Controller", "Handler", "Model", "Store", "Registry",
    "Helper", "Client",
];

const FIELD_TYPES: &[&str] = &["String", "int", "long", "double", "Node", "Config", "List<String>", "Map<String,Integer>"];

const VERBS: &[&str] = &[
    "compute", "load", "create", "handle", "update", "process", "validate", "add", "remove", "find",
    "build", "parse", "render", "reset", "close", "send",
];

/// Upper-cases the first character.
pub fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn camel(words: &[&str]) -> String {
    let mut out = words[0].to_string();
    for w in &words[1..] {
        out.push_str(&capitalize(w));
    }
    out
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn words(s: &str) -> SubtokenSequence {
    SubtokenSequence::new(toks(s))
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pick<'a>(&mut self, pool: &[&'a str]) -> &'a str {
        pool.choose(&mut self.rng).expect("non-empty pool")
    }

    /// One or two nouns, e.g. ("userName", "user name").
    fn field(&mut self) -> (String, String) {
        let a = self.pick(NOUNS);
        if self.rng.gen_bool(0.4) {
            let mut b = self.pick(NOUNS);
            while b == a {
                b = self.pick(NOUNS);
            }
            (camel(&[a, b]), format!("{a} {b}"))
        } else {
            (a.to_string(), a.to_string())
        }
    }

    fn class_name(&mut self) -> String {
        let noun = self.pick(NOUNS);
        let suffix = self.pick(CLASS_SUFFIXES);
        format!("{}{suffix}", capitalize(noun))
    }

    fn record(&mut self, method: &str, ret: &str, params: &[(&str, &str)], body: &str, test: bool) -> MethodRecord {
        let class_name = if test {
            format!("{}Test", capitalize(self.pick(NOUNS)))
        } else {
            self.class_name()
        };
        MethodRecord {
            source_path: format!("synth/{class_name}.java"),
            class_name,
            method_name: method.to_string(),
            return_type: ret.to_string(),
            parameters: params.iter().map(|(t, n)| (t.to_string(), n.to_string())).collect(),
            body_tokens: toks(body),
            is_test_context: test,
        }
    }

    fn this_dot(&mut self) -> &'static str {
        if self.rng.gen_bool(0.5) {
            "this . "
        } else {
            ""
        }
    }

    fn getter(&mut self) -> (MethodRecord, SubtokenSequence) {
        let (field, spaced) = self.field();
        let ty = self.pick(FIELD_TYPES);
        let this = self.this_dot();
        let name = format!("get{}", capitalize(&field));
        let r = self.record(&name, ty, &[], &format!("return {this}{field} ;"), false);
        (r, words(&format!("get {spaced}")))
    }

    fn boolean_getter(&mut self) -> (MethodRecord, SubtokenSequence) {
        let adj = self.pick(ADJECTIVES);
        let ty = if self.rng.gen_bool(0.8) { "boolean" } else { "Boolean" };
        let this = self.this_dot();
        let name = format!("is{}", capitalize(adj));
        let r = self.record(&name, ty, &[], &format!("return {this}{adj} ;"), false);
        (r, words(&format!("is {adj}")))
    }

    fn setter(&mut self) -> (MethodRecord, SubtokenSequence) {
        let (field, spaced) = self.field();
        let ty = self.pick(FIELD_TYPES);
        let param = match self.rng.gen_range(0..3) {
            0 => field.clone(),
            1 => "value".to_string(),
            _ => format!("new{}", capitalize(&field)),
        };
        let this = if param == field { "this . " } else { self.this_dot() };
        let name = format!("set{}", capitalize(&field));
        let r = self.record(&name, "void", &[(ty, &param)], &format!("{this}{field} = {param} ;"), false);
        (r, words(&format!("set {spaced}")))
    }

    fn test_method(&mut self) -> (MethodRecord, SubtokenSequence) {
        let verb = self.pick(VERBS);
        let (field, spaced) = self.field();
        let subject = format!("{verb}{}", capitalize(&field));
        let ty = capitalize(self.pick(NOUNS));
        let var = ty.to_lowercase();
        let body = match self.rng.gen_range(0..3) {
            0 => format!("{ty} {var} = new {ty} ( ) ; assertEquals ( 1 , {var} . {subject} ( ) ) ;"),
            1 => format!("{ty} {var} = new {ty} ( ) ; assertNotNull ( {var} . {subject} ( \"x\" ) ) ;"),
            _ => format!("assertTrue ( new {ty} ( ) . {subject} ( ) ) ;"),
        };
        let name = format!("test{}", capitalize(&subject));
        let r = self.record(&name, "void", &[], &body, true);
        (r, words(&format!("test {verb} {spaced}")))
    }

    fn other(&mut self) -> (MethodRecord, SubtokenSequence) {
        let verb = self.pick(VERBS);
        let noun = self.pick(NOUNS);
        let ty = capitalize(noun);
        let name = format!("{verb}{ty}");
        let (ret, params, body): (&str, Vec<(String, String)>, String) = match verb {
            "compute" => (
                "int",
                vec![("List<Item>".into(), "items".into())],
                format!("int {noun} = 0 ; for ( Item it : items ) {{ {noun} += it . weight ( ) ; }} return {noun} ;"),
            ),
            "load" => (
                &ty,
                vec![("String".into(), "path".into())],
                format!("return repository . read ( path , {ty} . class ) ;"),
            ),
            "create" => ("", vec![], format!("return new {ty} ( ) ;")),
            "handle" => (
                "void",
                vec![(ty.clone(), "event".into())],
                "if ( event == null ) { return ; } listener . on ( event ) ;".into(),
            ),
            "update" => (
                "void",
                vec![(ty.clone(), noun.into())],
                format!("this . {noun} = {noun} ; notifyListeners ( ) ;"),
            ),
            "process" => (
                "void",
                vec![(format!("List<{ty}>"), "batch".into())],
                format!("for ( {ty} x : batch ) {{ queue . offer ( x ) ; }}"),
            ),
            "validate" => (
                "void",
                vec![(ty.clone(), noun.into())],
                format!("if ( {noun} == null ) {{ throw new IllegalArgumentException ( \"{noun}\" ) ; }}"),
            ),
            "add" => ("void", vec![(ty.clone(), noun.into())], format!("{noun}s . add ( {noun} ) ;")),
            "remove" => ("boolean", vec![(ty.clone(), noun.into())], format!("return {noun}s . remove ( {noun} ) ;")),
            "find" => (
                &ty,
                vec![("String".into(), "key".into())],
                format!("for ( {ty} x : {noun}s ) {{ if ( x . key ( ) . equals ( key ) ) {{ return x ; }} }} return null ;"),
            ),
            "build" => ("", vec![], format!("return new {ty} ( this ) ;")),
            "parse" => (
                &ty,
                vec![("String".into(), "text".into())],
                format!("String [ ] parts = text . split ( \",\" ) ; return {ty} . of ( parts ) ;"),
            ),
            "render" => (
                "String",
                vec![],
                format!("StringBuilder sb = new StringBuilder ( ) ; sb . append ( {noun} ) ; return sb . toString ( ) ;"),
            ),
            "reset" => ("void", vec![], format!("{noun} = null ; dirty = false ;")),
            "close" => (
                "void",
                vec![],
                format!("if ( {noun} != null ) {{ {noun} . close ( ) ; {noun} = null ; }}"),
            ),
            _ => (
                "void",
                vec![(ty.clone(), noun.into())],
                format!("channel . write ( {noun} ) ; channel . flush ( ) ;"),
            ),
        };
        let ret = if ret.is_empty() { ty.as_str() } else { ret };
        let params: Vec<(&str, &str)> = params.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let r = self.record(&name, ret, &params, &body, false);
        (r, words(&format!("{verb} {noun}")))
    }

    fn of_category(&mut self, cat: PrefixCategory) -> (MethodRecord, SubtokenSequence) {
        match cat {
            PrefixCategory::Get => self.getter(),
            PrefixCategory::Set => self.setter(),
            PrefixCategory::Is => self.boolean_getter(),
            PrefixCategory::Test => self.test_method(),
            PrefixCategory::Other => self.other(),
        }
    }
}

fn gen(seed: u64) -> Gen {
    Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    }
}

/// `n` records spread evenly over the five categories, in shuffled order.
pub fn synth_corpus(n: usize, seed: u64) -> Vec<MethodRecord> {
    let mut g = gen(seed);
    let mut out: Vec<MethodRecord> = (0..n)
        .map(|i| g.of_category(PrefixCategory::from_index(i % PrefixCategory::ALL.len())).0)
        .collect();
    out.shuffle(&mut g.rng);
    out
}

#[derive(Debug, Clone)]
pub struct HeuristicCase {
    pub record: MethodRecord,
    pub category: PrefixCategory,
    /// Expected heuristic output; `None` means the rule must abstain.
    pub expected: Option<SubtokenSequence>,
}

/// Syntactic getters, boolean getters, setters and tests, each with the
/// name the matching rule must produce.
pub fn conforming_suite(n: usize, seed: u64) -> Vec<HeuristicCase> {
    let mut g = gen(seed);
    (0..n)
        .map(|i| {
            let (category, (record, gold)) = match i % 5 {
                0 => (PrefixCategory::Get, g.getter()),
                1 => (PrefixCategory::Set, g.setter()),
                2 => (PrefixCategory::Is, g.boolean_getter()),
                // boolean getters routed as GET are promoted to "is"
                3 => (PrefixCategory::Get, g.boolean_getter()),
                _ => (PrefixCategory::Test, g.test_method()),
            };
            HeuristicCase {
                record,
                category,
                expected: Some(gold),
            }
        })
        .collect()
}

/// Records routed to a rule they do not fit.
pub fn abstain_suite(n: usize, seed: u64) -> Vec<HeuristicCase> {
    let mut g = gen(seed);
    (0..n)
        .map(|i| {
            let (field, _) = g.field();
            let ty = g.pick(FIELD_TYPES);
            let other = g.pick(NOUNS);
            let (category, record) = match i % 12 {
                0 => (PrefixCategory::Get, g.record("getX", ty, &[("int", "i")], &format!("return {field} ;"), false)),
                1 => (PrefixCategory::Get, g.record("getX", ty, &[], &format!("return {field} + {other} ;"), false)),
                2 => (PrefixCategory::Get, g.record("getX", ty, &[], &format!("return compute ( {field} ) ;"), false)),
                3 => (
                    PrefixCategory::Get,
                    g.record("getX", ty, &[], &format!("log ( ) ; return {field} ;"), false),
                ),
                4 => (
                    PrefixCategory::Is,
                    g.record("isX", "boolean", &[], &format!("return {field} && {other} ;"), false),
                ),
                5 => (
                    PrefixCategory::Is,
                    g.record("isX", "boolean", &[("int", "i")], &format!("return {field} ;"), false),
                ),
                6 => (
                    PrefixCategory::Set,
                    g.record("setX", "Builder", &[(ty, "v")], &format!("this . {field} = v ;"), false),
                ),
                7 => (
                    PrefixCategory::Set,
                    g.record("setX", "void", &[(ty, "v"), (ty, "w")], &format!("this . {field} = v ;"), false),
                ),
                8 => (
                    PrefixCategory::Set,
                    g.record("setX", "void", &[(ty, "v")], &format!("this . {field} = v ; fire ( ) ;"), false),
                ),
                9 => (
                    PrefixCategory::Test,
                    g.record("testX", "void", &[], &format!("assertEquals ( 1 , {field} . size ( ) ) ;"), false),
                ),
                10 => (PrefixCategory::Test, g.record("testX", "void", &[], &format!("int {field} = 1 ;"), true)),
                _ => (
                    PrefixCategory::Test,
                    g.record("testX", "void", &[], &format!("new {} ( ) ;", capitalize(&field)), true),
                ),
            };
            HeuristicCase {
                record,
                category,
                expected: None,
            }
        })
        .collect()
}

/// `n` OTHER-category records with pairwise distinct names and contexts.
pub fn memorization_corpus(n: usize, seed: u64) -> Vec<MethodRecord> {
    let mut g = gen(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        assert!(attempts < 100 * n + 1000, "word pools too small for {n} distinct names");
        let (r, _) = g.other();
        if seen.insert(r.method_name.clone()) {
            out.push(r);
        }
    }
    out
}
