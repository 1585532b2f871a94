use std::collections::BTreeMap;

use rand::Rng;

use super::lstm::{run_sequence, sequence_backward, LstmParams, StepCache};
use crate::extractor::MethodRecord;
use crate::tensor::{axpy, log_softmax, softmax, sum_squares, Matrix};
use crate::text::{context_sequence, split_identifier, SubtokenSequence, Vocabulary, END, START};

pub const DEFAULT_MAX_CONTEXT: usize = 200;

/// Dual-encoder next-subtoken model.
///
/// `gamma_c` reads the tagged context stream, `gamma_p` reads `<s>` plus
/// the partial name. Their final hidden states are concatenated and
/// projected onto the name vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel {
    pub context_embed: Matrix,
    pub name_embed: Matrix,
    pub gamma_c: LstmParams,
    pub gamma_p: LstmParams,
    /// `(2·d_h) × V_n`; rows `0..d_h` read the context embedding.
    pub out_proj: Matrix,
    pub out_bias: Vec<f64>,
    pub vocab_c: Vocabulary,
    pub vocab_n: Vocabulary,
    pub seed: u64,
    pub max_context: usize,
}

/// A record prepared for training: encoded context and name ids.
#[derive(Debug, Clone)]
pub struct Example {
    pub context: Vec<u32>,
    pub name: Vec<u32>,
}

impl GeneratorModel {
    /// Embeddings uniform in `±0.1`, LSTMs per `LstmParams::init`, output
    /// projection uniform in `±1/sqrt(2·d_h)`. All draws come from `rng` in
    /// a fixed order.
    pub fn init<R: Rng>(
        vocab_c: Vocabulary,
        vocab_n: Vocabulary,
        embed_dim: usize,
        hidden_dim: usize,
        seed: u64,
        rng: &mut R,
    ) -> Self {
        assert!(embed_dim >= 1 && hidden_dim >= 1, "generator dimensions must be positive");
        let context_embed = Matrix::uniform(vocab_c.len(), embed_dim, 0.1, rng);
        let name_embed = Matrix::uniform(vocab_n.len(), embed_dim, 0.1, rng);
        let gamma_c = LstmParams::init(embed_dim, hidden_dim, rng);
        let gamma_p = LstmParams::init(embed_dim, hidden_dim, rng);
        let bound = 1.0 / ((2 * hidden_dim) as f64).sqrt();
        let out_proj = Matrix::uniform(2 * hidden_dim, vocab_n.len(), bound, rng);
        let out_bias = vec![0.0; vocab_n.len()];
        GeneratorModel {
            context_embed,
            name_embed,
            gamma_c,
            gamma_p,
            out_proj,
            out_bias,
            vocab_c,
            vocab_n,
            seed,
            max_context: DEFAULT_MAX_CONTEXT,
        }
    }

    /// All-zero parameters of the given shape; used when loading.
    pub(crate) fn zeros(vocab_c: Vocabulary, vocab_n: Vocabulary, embed_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        GeneratorModel {
            context_embed: Matrix::zeros(vocab_c.len(), embed_dim),
            name_embed: Matrix::zeros(vocab_n.len(), embed_dim),
            gamma_c: LstmParams::zeros(embed_dim, hidden_dim),
            gamma_p: LstmParams::zeros(embed_dim, hidden_dim),
            out_proj: Matrix::zeros(2 * hidden_dim, vocab_n.len()),
            out_bias: vec![0.0; vocab_n.len()],
            vocab_c,
            vocab_n,
            seed,
            max_context: DEFAULT_MAX_CONTEXT,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.context_embed.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.gamma_c.hidden_dim()
    }

    /// Parameter tensors in persisted order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut names = vec!["generator.context_embed".to_string(), "generator.name_embed".to_string()];
        names.extend(LstmParams::tensor_names("generator.gamma_c"));
        names.extend(LstmParams::tensor_names("generator.gamma_p"));
        names.push("generator.out_proj".into());
        names.push("generator.out_bias".into());
        let mut data: Vec<&[f64]> = vec![self.context_embed.data(), self.name_embed.data()];
        data.extend(self.gamma_c.tensors());
        data.extend(self.gamma_p.tensors());
        data.push(self.out_proj.data());
        data.push(&self.out_bias);
        names.into_iter().zip(data).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut data: Vec<&mut [f64]> = vec![self.context_embed.data_mut(), self.name_embed.data_mut()];
        data.extend(self.gamma_c.tensors_mut());
        data.extend(self.gamma_p.tensors_mut());
        data.push(self.out_proj.data_mut());
        data.push(&mut self.out_bias);
        data
    }

    pub(crate) fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            crate::tensor::round_f32(t);
        }
    }

    /// Context ids fed to `gamma_c`, truncated to `max_context`.
    pub fn context_ids(&self, record: &MethodRecord) -> Vec<u32> {
        let mut seq = context_sequence(record);
        seq.truncate(self.max_context);
        self.vocab_c.encode_all(&seq)
    }

    pub fn example(&self, record: &MethodRecord) -> Example {
        Example {
            context: self.context_ids(record),
            name: self.vocab_n.encode_all(&split_identifier(&record.method_name)),
        }
    }

    fn context_steps(&self, ids: &[u32]) -> Vec<StepCache> {
        run_sequence(&self.gamma_c, ids.iter().map(|&i| self.context_embed.row(i as usize)))
    }

    fn partial_steps(&self, ids: &[u32]) -> Vec<StepCache> {
        let inputs = std::iter::once(START).chain(ids.iter().copied());
        let rows: Vec<&[f64]> = inputs.map(|i| self.name_embed.row(i as usize)).collect();
        run_sequence(&self.gamma_p, rows)
    }

    /// Final hidden state of `gamma_c`; zero for an empty context.
    pub fn encode_context_ids(&self, ids: &[u32]) -> Vec<f64> {
        self.context_steps(ids)
            .pop()
            .map_or_else(|| vec![0.0; self.hidden_dim()], |s| s.h)
    }

    pub fn encode_context(&self, record: &MethodRecord) -> Vec<f64> {
        self.encode_context_ids(&self.context_ids(record))
    }

    /// Final hidden state of `gamma_p` over `<s>` + prefix.
    pub fn encode_partial(&self, prefix: &SubtokenSequence) -> Vec<f64> {
        self.encode_partial_ids(&self.vocab_n.encode_all(prefix))
    }

    pub fn encode_partial_ids(&self, ids: &[u32]) -> Vec<f64> {
        self.partial_steps(ids).pop().expect("start token always present").h
    }

    pub(crate) fn logits(&self, e_c: &[f64], e_p: &[f64]) -> Vec<f64> {
        let d_h = self.hidden_dim();
        assert_eq!(e_c.len(), d_h, "context embedding has wrong length");
        assert_eq!(e_p.len(), d_h, "partial embedding has wrong length");
        let mut z = self.out_bias.clone();
        let concat: Vec<f64> = e_c.iter().chain(e_p).copied().collect();
        self.out_proj.accumulate_vec_mul(&concat, &mut z);
        z
    }

    /// Distribution over the name vocabulary for the next subtoken.
    pub fn next_token_distribution(&self, e_c: &[f64], e_p: &[f64]) -> Vec<f64> {
        softmax(&self.logits(e_c, e_p))
    }

    pub(crate) fn next_token_log_probs(&self, e_c: &[f64], e_p: &[f64]) -> Vec<f64> {
        log_softmax(&self.logits(e_c, e_p))
    }

    /// Mean cross-entropy over positions `0..=len(name)`, predicting each
    /// gold subtoken and finally `</s>` from gold prefixes.
    pub fn teacher_forced_loss(&self, ex: &Example) -> f64 {
        let e_c = self.encode_context_ids(&ex.context);
        let steps = self.partial_steps(&ex.name);
        let targets = targets(&ex.name);
        let total: f64 = steps
            .iter()
            .zip(&targets)
            .map(|(s, &t)| -self.next_token_log_probs(&e_c, &s.h)[t as usize])
            .sum();
        total / targets.len() as f64
    }

    /// True when every teacher-forced argmax equals the gold next token.
    pub fn teacher_forced_exact(&self, ex: &Example) -> bool {
        let e_c = self.encode_context_ids(&ex.context);
        let steps = self.partial_steps(&ex.name);
        steps.iter().zip(targets(&ex.name)).all(|(s, t)| {
            let p = self.next_token_distribution(&e_c, &s.h);
            argmax(&p) == t as usize
        })
    }

    /// Loss and gradient of `teacher_forced_loss` for one example.
    pub fn gradient(&self, ex: &Example) -> (f64, GeneratorGrad) {
        let d_h = self.hidden_dim();
        let mut grad = GeneratorGrad::zeros(self);
        let ctx_steps = self.context_steps(&ex.context);
        let e_c = ctx_steps.last().map_or_else(|| vec![0.0; d_h], |s| s.h.clone());
        let name_steps = self.partial_steps(&ex.name);
        let targets = targets(&ex.name);
        let scale = 1.0 / targets.len() as f64;

        let mut loss = 0.0;
        let mut de_c = vec![0.0; d_h];
        let mut dh_name = vec![vec![0.0; d_h]; name_steps.len()];
        for (t, (s, &target)) in name_steps.iter().zip(&targets).enumerate() {
            let lp = self.next_token_log_probs(&e_c, &s.h);
            loss -= lp[target as usize];
            let mut dlogits: Vec<f64> = lp.iter().map(|l| l.exp() * scale).collect();
            dlogits[target as usize] -= scale;
            let concat: Vec<f64> = e_c.iter().chain(&s.h).copied().collect();
            grad.out_proj.add_outer(&concat, &dlogits);
            axpy(1.0, &dlogits, &mut grad.out_bias);
            let mut dconcat = vec![0.0; 2 * d_h];
            self.out_proj.accumulate_mul_vec(&dlogits, &mut dconcat);
            axpy(1.0, &dconcat[..d_h], &mut de_c);
            axpy(1.0, &dconcat[d_h..], &mut dh_name[t]);
        }

        let dx_name = sequence_backward(&self.gamma_p, &name_steps, &dh_name, &mut grad.gamma_p);
        let inputs = std::iter::once(START).chain(ex.name.iter().copied());
        for (id, dx) in inputs.zip(dx_name) {
            grad.add_name_row(id, &dx);
        }
        if !ctx_steps.is_empty() {
            let mut dh_ctx = vec![vec![0.0; d_h]; ctx_steps.len()];
            *dh_ctx.last_mut().expect("non-empty") = de_c;
            let dx_ctx = sequence_backward(&self.gamma_c, &ctx_steps, &dh_ctx, &mut grad.gamma_c);
            for (&id, dx) in ex.context.iter().zip(dx_ctx) {
                grad.add_context_row(id, &dx);
            }
        }
        (loss * scale, grad)
    }

    /// Applies `params -= lr · grad`.
    pub fn apply(&mut self, grad: &GeneratorGrad, lr: f64) {
        for (&id, row) in &grad.context_embed {
            axpy(-lr, row, self.context_embed.row_mut(id as usize));
        }
        for (&id, row) in &grad.name_embed {
            axpy(-lr, row, self.name_embed.row_mut(id as usize));
        }
        for (p, g) in self.gamma_c.tensors_mut().into_iter().zip(grad.gamma_c.tensors()) {
            axpy(-lr, g, p);
        }
        for (p, g) in self.gamma_p.tensors_mut().into_iter().zip(grad.gamma_p.tensors()) {
            axpy(-lr, g, p);
        }
        axpy(-lr, grad.out_proj.data(), self.out_proj.data_mut());
        axpy(-lr, &grad.out_bias, &mut self.out_bias);
    }
}

fn targets(name: &[u32]) -> Vec<u32> {
    name.iter().copied().chain(std::iter::once(END)).collect()
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..p.len() {
        if p[k] > p[best] {
            best = k;
        }
    }
    best
}

/// Gradient of the teacher-forced loss. Embedding gradients are sparse:
/// only rows that were read carry entries.
#[derive(Debug, Clone)]
pub struct GeneratorGrad {
    pub context_embed: BTreeMap<u32, Vec<f64>>,
    pub name_embed: BTreeMap<u32, Vec<f64>>,
    pub gamma_c: LstmParams,
    pub gamma_p: LstmParams,
    pub out_proj: Matrix,
    pub out_bias: Vec<f64>,
    embed_dim: usize,
}

impl GeneratorGrad {
    pub fn zeros(model: &GeneratorModel) -> Self {
        let (d_e, d_h) = (model.embed_dim(), model.hidden_dim());
        GeneratorGrad {
            context_embed: BTreeMap::new(),
            name_embed: BTreeMap::new(),
            gamma_c: LstmParams::zeros(d_e, d_h),
            gamma_p: LstmParams::zeros(d_e, d_h),
            out_proj: Matrix::zeros(2 * d_h, model.vocab_n.len()),
            out_bias: vec![0.0; model.vocab_n.len()],
            embed_dim: d_e,
        }
    }

    fn add_context_row(&mut self, id: u32, dx: &[f64]) {
        let d = self.embed_dim;
        axpy(1.0, dx, self.context_embed.entry(id).or_insert_with(|| vec![0.0; d]));
    }

    fn add_name_row(&mut self, id: u32, dx: &[f64]) {
        let d = self.embed_dim;
        axpy(1.0, dx, self.name_embed.entry(id).or_insert_with(|| vec![0.0; d]));
    }

    pub fn norm(&self) -> f64 {
        let mut s: f64 = self.context_embed.values().map(|r| sum_squares(r)).sum();
        s += self.name_embed.values().map(|r| sum_squares(r)).sum::<f64>();
        s += self.gamma_c.tensors().iter().map(|t| sum_squares(t)).sum::<f64>();
        s += self.gamma_p.tensors().iter().map(|t| sum_squares(t)).sum::<f64>();
        s += sum_squares(self.out_proj.data());
        s += sum_squares(&self.out_bias);
        s.sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        let scale = |xs: &mut [f64]| xs.iter_mut().for_each(|x| *x *= k);
        self.context_embed.values_mut().for_each(|r| scale(r));
        self.name_embed.values_mut().for_each(|r| scale(r));
        self.gamma_c.tensors_mut().into_iter().for_each(scale);
        self.gamma_p.tensors_mut().into_iter().for_each(scale);
        scale(self.out_proj.data_mut());
        scale(&mut self.out_bias);
    }

    /// Rescales to L2 norm `max_norm` when it is exceeded.
    pub fn clip(&mut self, max_norm: f64) {
        let n = self.norm();
        if n > max_norm {
            self.scale(max_norm / n);
        }
    }

    /// Dense tensors in the same order as `GeneratorModel::tensors`.
    pub fn dense(&self, model: &GeneratorModel) -> Vec<Vec<f64>> {
        let mut ce = Matrix::zeros(model.context_embed.rows(), self.embed_dim);
        for (&id, r) in &self.context_embed {
            ce.row_mut(id as usize).copy_from_slice(r);
        }
        let mut ne = Matrix::zeros(model.name_embed.rows(), self.embed_dim);
        for (&id, r) in &self.name_embed {
            ne.row_mut(id as usize).copy_from_slice(r);
        }
        let mut out = vec![ce.data().to_vec(), ne.data().to_vec()];
        out.extend(self.gamma_c.tensors().iter().map(|t| t.to_vec()));
        out.extend(self.gamma_p.tensors().iter().map(|t| t.to_vec()));
        out.push(self.out_proj.data().to_vec());
        out.push(self.out_bias.clone());
        out
    }
}
