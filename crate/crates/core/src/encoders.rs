//! Reusable neural blocks: a small transformer encoder, a bidirectional
//! LSTM and the multi-view inner-attention pooler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::tensor::{ParamSet, Tensor};
use crate::text::{EmbeddingTable, TokenSequence};

const NORM_EPS: f64 = 1e-12;
pub const DEFAULT_DROPOUT: f64 = 0.1;

/// Whether dropout is active. Training mode carries the generator that
/// draws the masks.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

impl Mode<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Train(_))
    }

    pub fn dropout(&mut self, x: &Tensor, rate: f64) -> Result<Tensor> {
        Ok(match self {
            Mode::Eval => x.dropout(rate, false, &mut NoRng)?,
            Mode::Train(rng) => x.dropout(rate, true, &mut **rng)?,
        })
    }
}

/// Never sampled: eval-mode dropout returns before drawing.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("eval-mode dropout draws no randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("eval-mode dropout draws no randomness")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("eval-mode dropout draws no randomness")
    }
    fn try_fill_bytes(&mut self, _: &mut [u8]) -> std::result::Result<(), rand::Error> {
        unreachable!("eval-mode dropout draws no randomness")
    }
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], bound: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::param(data, shape).expect("shape matches")
}

pub(crate) fn constant(shape: &[usize], value: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::param(vec![value; n], shape).expect("shape matches")
}

/// `y = x W + b` with `W: in × out`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let k = 1.0 / (input as f64).sqrt();
        Linear { weight: uniform(rng, &[input, output], k), bias: uniform(rng, &[output], k) }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Linear { weight: constant(&[input, output], 0.0), bias: constant(&[output], 0.0) }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    /// Accepts `T × in` or a length-`in` vector (returned as `1 × out`).
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let x = if x.rank() == 1 { x.reshape(&[1, x.len()])? } else { x.clone() };
        Ok(x.matmul(&self.weight)?.add_bias(&self.bias)?)
    }

    pub fn params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("weight", &self.weight);
        p.push("bias", &self.bias);
        p
    }
}

/// Row standardization with learned gain and bias.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: Tensor,
    pub bias: Tensor,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        LayerNorm { gain: constant(&[dim], 1.0), bias: constant(&[dim], 0.0) }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.layer_norm(NORM_EPS).mul_row(&self.gain)?.add_bias(&self.bias)?)
    }

    pub fn params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("gain", &self.gain);
        p.push("bias", &self.bias);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub layers: usize,
    pub d_model: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub max_len: usize,
    pub dropout: f64,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig { layers: 2, d_model: 64, heads: 4, ff_dim: 256, max_len: crate::text::DEFAULT_MAX_LEN, dropout: DEFAULT_DROPOUT }
    }
}

impl TransformerConfig {
    pub fn toy() -> Self {
        TransformerConfig { layers: 2, d_model: 16, heads: 2, ff_dim: 32, max_len: crate::text::DEFAULT_MAX_LEN, dropout: DEFAULT_DROPOUT }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return Err(ModelError::Config(format!("d_model {} not divisible by {} heads", self.d_model, self.heads)));
        }
        if self.layers == 0 || self.max_len < 2 || self.ff_dim == 0 {
            return Err(ModelError::Config("transformer needs ≥1 layer, ff_dim > 0 and max_len ≥ 2".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EncoderLayer {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub attn_norm: LayerNorm,
    pub ff_in: Linear,
    pub ff_out: Linear,
    pub ff_norm: LayerNorm,
}

impl EncoderLayer {
    fn new(cfg: &TransformerConfig, rng: &mut ChaCha8Rng) -> Self {
        let d = cfg.d_model;
        EncoderLayer {
            query: Linear::new(d, d, rng),
            key: Linear::new(d, d, rng),
            value: Linear::new(d, d, rng),
            output: Linear::new(d, d, rng),
            attn_norm: LayerNorm::new(d),
            ff_in: Linear::new(d, cfg.ff_dim, rng),
            ff_out: Linear::new(cfg.ff_dim, d, rng),
            ff_norm: LayerNorm::new(d),
        }
    }

    fn forward(&self, x: &Tensor, cfg: &TransformerConfig, mode: &mut Mode, maps: &mut Vec<Tensor>) -> Result<Tensor> {
        let head_dim = cfg.d_model / cfg.heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let q = self.query.forward(x)?;
        let k = self.key.forward(x)?;
        let v = self.value.forward(x)?;
        let mut heads = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let qh = q.narrow(1, h * head_dim, head_dim)?;
            let kh = k.narrow(1, h * head_dim, head_dim)?;
            let vh = v.narrow(1, h * head_dim, head_dim)?;
            let weights = qh.matmul(&kh.transpose()?)?.scale(scale).softmax(1)?;
            heads.push(weights.matmul(&vh)?);
            maps.push(weights);
        }
        let attended = self.output.forward(&Tensor::concat(&heads, 1)?)?;
        let attended = mode.dropout(&attended, cfg.dropout)?;
        let x = self.attn_norm.forward(&x.add(&attended)?)?;
        let ff = self.ff_out.forward(&self.ff_in.forward(&x)?.gelu())?;
        let ff = mode.dropout(&ff, cfg.dropout)?;
        self.ff_norm.forward(&x.add(&ff)?)
    }

    fn params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.extend_prefixed("attn.query", self.query.params());
        p.extend_prefixed("attn.key", self.key.params());
        p.extend_prefixed("attn.value", self.value.params());
        p.extend_prefixed("attn.output", self.output.params());
        p.extend_prefixed("attn.norm", self.attn_norm.params());
        p.extend_prefixed("ff.input", self.ff_in.params());
        p.extend_prefixed("ff.output", self.ff_out.params());
        p.extend_prefixed("ff.norm", self.ff_norm.params());
        p
    }
}

/// Post-norm transformer encoder with learned token and position
/// embeddings.
#[derive(Debug, Clone)]
pub struct TransformerEncoder {
    pub config: TransformerConfig,
    pub token_embedding: Tensor,
    pub position_embedding: Tensor,
    pub embedding_norm: LayerNorm,
    pub layers: Vec<EncoderLayer>,
}

impl TransformerEncoder {
    pub fn new(config: TransformerConfig, vocab_size: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        Ok(TransformerEncoder {
            token_embedding: uniform(rng, &[vocab_size, d], 0.5),
            position_embedding: uniform(rng, &[config.max_len, d], 0.5),
            embedding_norm: LayerNorm::new(d),
            layers: (0..config.layers).map(|_| EncoderLayer::new(&config, rng)).collect(),
            config,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.token_embedding.shape()[0]
    }

    /// Contextual states, one row per token (framing tokens included).
    pub fn forward(&self, tokens: &TokenSequence, mode: &mut Mode) -> Result<Tensor> {
        Ok(self.forward_with_attention(tokens, mode)?.0)
    }

    /// Also returns every head's `T × T` attention map, layer by layer.
    pub fn forward_with_attention(&self, tokens: &TokenSequence, mode: &mut Mode) -> Result<(Tensor, Vec<Tensor>)> {
        let t = tokens.len();
        if t == 0 {
            return Err(ModelError::EmptySequence);
        }
        if t > self.config.max_len {
            return Err(ModelError::SequenceTooLong { len: t, max: self.config.max_len });
        }
        let tok = self.token_embedding.gather_rows(&tokens.ids, None)?;
        let pos = self.position_embedding.narrow(0, 0, t)?;
        let mut x = self.embedding_norm.forward(&tok.add(&pos)?)?;
        x = mode.dropout(&x, self.config.dropout)?;
        let mut maps = Vec::new();
        for layer in &self.layers {
            x = layer.forward(&x, &self.config, mode, &mut maps)?;
        }
        Ok((x, maps))
    }

    pub fn params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("token_embedding", &self.token_embedding);
        p.push("position_embedding", &self.position_embedding);
        p.extend_prefixed("embedding_norm", self.embedding_norm.params());
        for (i, layer) in self.layers.iter().enumerate() {
            p.extend_prefixed(&format!("layer{i}"), layer.params());
        }
        p
    }

    /// Hook for frozen externally trained vectors: copies `table` into the
    /// token embedding matrix. Vocabulary and width must match exactly.
    pub fn import_token_embeddings(&self, table: &EmbeddingTable) -> Result<()> {
        if table.matrix.shape() != self.token_embedding.shape() {
            return Err(ModelError::Config(format!(
                "embedding table {:?} does not match token embedding {:?}",
                table.matrix.shape(),
                self.token_embedding.shape()
            )));
        }
        self.token_embedding.assign(&table.matrix.data())?;
        Ok(())
    }
}

/// One LSTM direction. Gates are laid out `[input, forget, candidate, output]`.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub input_weight: Tensor,
    pub hidden_weight: Tensor,
    pub bias: Tensor,
}

impl LstmCell {
    pub fn new(input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        let bias = uniform(rng, &[4 * hidden], k);
        bias.update(|b| b[hidden..2 * hidden].iter_mut().for_each(|v| *v += 1.0));
        LstmCell { input_weight: uniform(rng, &[input, 4 * hidden], k), hidden_weight: uniform(rng, &[hidden, 4 * hidden], k), bias }
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_weight.shape()[0]
    }

    /// One recurrence step given the already projected input row
    /// (`1 × 4H`). Returns `(h, c)`.
    fn step_projected(&self, projected: &Tensor, h: &Tensor, c: &Tensor) -> Result<(Tensor, Tensor)> {
        let hd = self.hidden_dim();
        let gates = projected.add(&h.matmul(&self.hidden_weight)?)?.add_bias(&self.bias)?;
        let i = gates.narrow(1, 0, hd)?.sigmoid();
        let f = gates.narrow(1, hd, hd)?.sigmoid();
        let g = gates.narrow(1, 2 * hd, hd)?.tanh();
        let o = gates.narrow(1, 3 * hd, hd)?.sigmoid();
        let c = f.mul(c)?.add(&i.mul(&g)?)?;
        let h = o.mul(&c.tanh())?;
        Ok((h, c))
    }

    /// One step on a raw `1 × in` input.
    pub fn step(&self, x: &Tensor, h: &Tensor, c: &Tensor) -> Result<(Tensor, Tensor)> {
        self.step_projected(&x.matmul(&self.input_weight)?, h, c)
    }

    /// Hidden states for `x` read in the given order, returned in input order.
    fn run(&self, x: &Tensor, reverse: bool) -> Result<Vec<Tensor>> {
        let t = x.shape()[0];
        let projected = x.matmul(&self.input_weight)?;
        let hd = self.hidden_dim();
        let mut h = Tensor::zeros(&[1, hd]);
        let mut c = Tensor::zeros(&[1, hd]);
        let mut out = vec![None; t];
        let order: Box<dyn Iterator<Item = usize>> = if reverse { Box::new((0..t).rev()) } else { Box::new(0..t) };
        for step in order {
            let (nh, nc) = self.step_projected(&projected.row(step)?, &h, &c)?;
            out[step] = Some(nh.clone());
            h = nh;
            c = nc;
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }

    pub fn params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("input_weight", &self.input_weight);
        p.push("hidden_weight", &self.hidden_weight);
        p.push("bias", &self.bias);
        p
    }
}

#[derive(Debug, Clone)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
    pub dropout: f64,
}

impl BiLstm {
    pub fn new(input: usize, hidden: usize, dropout: f64, rng: &mut ChaCha8Rng) -> Self {
        BiLstm { forward: LstmCell::new(input, hidden, rng), backward: LstmCell::new(input, hidden, rng), dropout }
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden_dim()
    }

    /// `T × D_in` → `T × 2H`; row `t` is the forward state over `0..=t`
    /// followed by the backward state over `t..T`.
    pub fn forward(&self, states: &Tensor, mode: &mut Mode) -> Result<Tensor> {
        if states.rank() != 2 || states.shape()[0] == 0 {
            return Err(ModelError::EmptySequence);
        }
        let fwd = self.forward.run(states, false)?;
        let bwd = self.backward.run(states, true)?;
        let rows =
            fwd.iter().zip(&bwd).map(|(f, b)| Tensor::concat(&[f.clone(), b.clone()], 1)).collect::<std::result::Result<Vec<_>, _>>()?;
        let out = Tensor::concat(&rows, 0)?;
        mode.dropout(&out, self.dropout)
    }

    pub fn params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.extend_prefixed("forward", self.forward.params());
        p.extend_prefixed("backward", self.backward.params());
        p
    }
}

/// How the `r` attention views are combined into one sentence vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewAggregation {
    #[default]
    Concat,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionConfig {
    pub hidden: usize,
    pub views: usize,
    pub aggregation: ViewAggregation,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig { hidden: 600, views: 5, aggregation: ViewAggregation::Concat }
    }
}

impl AttentionConfig {
    pub fn toy() -> Self {
        AttentionConfig { hidden: 16, views: 2, aggregation: ViewAggregation::Concat }
    }
}

pub struct Pooled {
    /// The sentence vector (`r·D` for concatenation, `D` for the mean).
    pub vector: Tensor,
    /// `r × T`; every row is a distribution over positions.
    pub weights: Tensor,
}

/// Self-attentive pooling: `α = softmax(W₂ tanh(W₁ Hᵀ + b₁) + b₂)` over
/// positions, then every view is the `α`-weighted sum of the rows of `H`.
#[derive(Debug, Clone)]
pub struct InnerAttention {
    pub projection: Linear,
    pub scorer: Linear,
    pub aggregation: ViewAggregation,
}

impl InnerAttention {
    pub fn new(input: usize, cfg: AttentionConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        if cfg.views == 0 || cfg.hidden == 0 {
            return Err(ModelError::Config("attention needs ≥1 view and hidden > 0".into()));
        }
        Ok(InnerAttention {
            projection: Linear::new(input, cfg.hidden, rng),
            scorer: Linear::new(cfg.hidden, cfg.views, rng),
            aggregation: cfg.aggregation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.projection.input_dim()
    }

    pub fn views(&self) -> usize {
        self.scorer.output_dim()
    }

    pub fn output_dim(&self) -> usize {
        match self.aggregation {
            ViewAggregation::Concat => self.views() * self.input_dim(),
            ViewAggregation::Mean => self.input_dim(),
        }
    }

    pub fn forward(&self, states: &Tensor) -> Result<Pooled> {
        if states.rank() != 2 || states.shape()[0] == 0 {
            return Err(ModelError::EmptySequence);
        }
        let scores = self.scorer.forward(&self.projection.forward(states)?.tanh())?;
        let weights = scores.softmax(0)?.transpose()?;
        let views = weights.matmul(states)?;
        let vector = match self.aggregation {
            ViewAggregation::Concat => views.flatten(),
            ViewAggregation::Mean => views.mean_axis(0)?,
        };
        Ok(Pooled { vector, weights })
    }

    pub fn params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.extend_prefixed("w1", self.projection.params());
        p.extend_prefixed("w2", self.scorer.params());
        p
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
