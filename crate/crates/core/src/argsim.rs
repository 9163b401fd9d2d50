//! The argument-similarity model.
//!
//! Each sentence is embedded twice: once through a transformer encoder
//! with inner-attention pooling, once through static word vectors fed to a
//! BiLSTM with its own pooling. Each branch is projected to the output
//! width, the two are summed and passed through a final linear layer.
//! Training regresses the cosine of two embeddings onto the gold STS score
//! divided by five.

use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoders::{
    seeded, AttentionConfig, BiLstm, InnerAttention, Linear, Mode, TransformerConfig, TransformerEncoder, DEFAULT_DROPOUT,
};
use crate::error::{ModelError, Result};
use crate::tensor::{read_checkpoint, Adam, ParamSet, Tensor};
use crate::text::{BasicTokenizer, EmbeddingTable, TextError, Tokenizer, Vocabulary, PAD_ID};

pub const STS_MAX_SCORE: f64 = 5.0;

const DROPOUT_SALT: u64 = 0xd20f;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgSimConfig {
    pub transformer: TransformerConfig,
    pub attention: AttentionConfig,
    pub lstm_hidden: usize,
    pub lstm_dropout: f64,
    pub embedding_dim: usize,
    pub output_dim: usize,
    pub trainable_embeddings: bool,
    /// Ablation switch: drop the transformer branch.
    pub use_transformer_branch: bool,
    /// Ablation switch: drop the static-embedding BiLSTM branch.
    pub use_lstm_branch: bool,
    pub seed: u64,
}

impl Default for ArgSimConfig {
    fn default() -> Self {
        ArgSimConfig {
            transformer: TransformerConfig::default(),
            attention: AttentionConfig::default(),
            lstm_hidden: 512,
            lstm_dropout: DEFAULT_DROPOUT,
            embedding_dim: crate::text::DEFAULT_EMBEDDING_DIM,
            output_dim: 256,
            trainable_embeddings: true,
            use_transformer_branch: true,
            use_lstm_branch: true,
            seed: 0,
        }
    }
}

impl ArgSimConfig {
    /// Small dimensions for tests and examples.
    pub fn toy() -> Self {
        ArgSimConfig {
            transformer: TransformerConfig::toy(),
            attention: AttentionConfig::toy(),
            lstm_hidden: 8,
            embedding_dim: 16,
            output_dim: 64,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StsTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for StsTrainConfig {
    fn default() -> Self {
        StsTrainConfig { epochs: 8, batch_size: 16, learning_rate: 2e-5, seed: 0 }
    }
}

impl StsTrainConfig {
    /// A learning rate that trains toy-sized models from scratch.
    pub fn toy() -> Self {
        StsTrainConfig { learning_rate: 1e-3, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub sentence1: String,
    pub sentence2: String,
    /// Gold similarity in `[0, 5]`.
    pub score: f64,
}

impl SentencePair {
    pub fn new(sentence1: impl Into<String>, sentence2: impl Into<String>, score: f64) -> Result<Self> {
        let p = SentencePair { sentence1: sentence1.into(), sentence2: sentence2.into(), score };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=STS_MAX_SCORE).contains(&self.score) {
            return Err(ModelError::Config(format!("score {} outside [0, 5]", self.score)));
        }
        if self.sentence1.trim().is_empty() || self.sentence2.trim().is_empty() {
            return Err(ModelError::Config("sentence pair has an empty side".into()));
        }
        Ok(())
    }
}

/// Reads `score<TAB>sentence1<TAB>sentence2` lines; leading metadata
/// columns are ignored. A first line whose score does not parse is taken
/// as a header.
pub fn read_sts<R: BufRead>(reader: R) -> Result<Vec<SentencePair>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse_err = |message: String| ModelError::Text(TextError::Parse { line: i + 1, message });
        if fields.len() < 3 {
            return Err(parse_err(format!("expected ≥3 tab-separated fields, got {}", fields.len())));
        }
        let n = fields.len();
        let score: f64 = match fields[n - 3].trim().parse() {
            Ok(s) => s,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(parse_err(format!("bad score {:?}", fields[n - 3]))),
        };
        let pair = SentencePair { sentence1: fields[n - 2].to_owned(), sentence2: fields[n - 1].to_owned(), score };
        pair.validate().map_err(|e| parse_err(e.to_string()))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn load_sts(path: &Path) -> Result<Vec<SentencePair>> {
    read_sts(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StsReport {
    /// Mean per-pair loss of every epoch, in order.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
    pub config: StsTrainConfig,
}

pub struct ArgSimModel {
    pub config: ArgSimConfig,
    pub vocab: Vocabulary,
    pub transformer: TransformerEncoder,
    pub transformer_attention: InnerAttention,
    pub transformer_projection: Linear,
    pub embeddings: EmbeddingTable,
    pub lstm: BiLstm,
    pub lstm_attention: InnerAttention,
    pub lstm_projection: Linear,
    pub fusion: Linear,
    frozen: bool,
}

impl ArgSimModel {
    /// Builds a fresh model. Without `embeddings`, the static word vectors
    /// are seeded `uniform(-0.05, 0.05)`.
    pub fn new(config: ArgSimConfig, vocab: Vocabulary, embeddings: Option<EmbeddingTable>) -> Result<Self> {
        if !config.use_transformer_branch && !config.use_lstm_branch {
            return Err(ModelError::Config("at least one branch must be enabled".into()));
        }
        let embeddings = match embeddings {
            Some(table) => {
                if table.vocab != vocab || table.dim() != config.embedding_dim {
                    return Err(ModelError::Config("embedding table must share the model vocabulary and dimension".into()));
                }
                table
            }
            None => EmbeddingTable::random(vocab.clone(), config.embedding_dim, config.seed ^ 0x5eed),
        };
        embeddings.set_trainable(config.trainable_embeddings);
        let mut rng = seeded(config.seed);
        let transformer = TransformerEncoder::new(config.transformer, vocab.len(), &mut rng)?;
        let transformer_attention = InnerAttention::new(config.transformer.d_model, config.attention, &mut rng)?;
        let transformer_projection = Linear::new(transformer_attention.output_dim(), config.output_dim, &mut rng);
        let lstm = BiLstm::new(config.embedding_dim, config.lstm_hidden, config.lstm_dropout, &mut rng);
        let lstm_attention = InnerAttention::new(lstm.output_dim(), config.attention, &mut rng)?;
        let lstm_projection = Linear::new(lstm_attention.output_dim(), config.output_dim, &mut rng);
        let fusion = Linear::new(config.output_dim, config.output_dim, &mut rng);
        Ok(ArgSimModel {
            config,
            vocab,
            transformer,
            transformer_attention,
            transformer_projection,
            embeddings,
            lstm,
            lstm_attention,
            lstm_projection,
            fusion,
            frozen: false,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Fixes the weights: gradient tracking is switched off and every
    /// mutating call fails from now on.
    pub fn freeze(&mut self) {
        self.frozen = true;
        self.params().set_requires_grad(false);
    }

    /// Transformer-side parameters.
    pub fn transformer_params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.extend_prefixed("encoder", self.transformer.params());
        p.extend_prefixed("encoder_attention", self.transformer_attention.params());
        p.extend_prefixed("encoder_projection", self.transformer_projection.params());
        p
    }

    /// Static-embedding side parameters.
    pub fn lstm_params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("embeddings", &self.embeddings.matrix);
        p.extend_prefixed("lstm", self.lstm.params());
        p.extend_prefixed("lstm_attention", self.lstm_attention.params());
        p.extend_prefixed("lstm_projection", self.lstm_projection.params());
        p
    }

    pub fn fusion_params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.extend_prefixed("fusion", self.fusion.params());
        p
    }

    pub fn params(&self) -> ParamSet {
        let mut p = self.transformer_params();
        let lstm = self.lstm_params();
        for (n, t) in lstm.iter().chain(self.fusion_params().iter()) {
            p.push(n, t);
        }
        p
    }

    fn trainable(&self) -> Vec<Tensor> {
        self.params().tensors().into_iter().filter(Tensor::requires_grad).collect()
    }

    /// The two projected branch vectors (each `1 × E`), `None` for a
    /// disabled branch.
    pub fn branches(&self, text: &str, mode: &mut Mode) -> Result<(Option<Tensor>, Option<Tensor>)> {
        let seq = self.vocab.encode(text, &BasicTokenizer, self.config.transformer.max_len);
        let a = if self.config.use_transformer_branch {
            let states = self.transformer.forward(&seq, mode)?;
            let pooled = self.transformer_attention.forward(&states)?;
            Some(self.transformer_projection.forward(&pooled.vector)?)
        } else {
            None
        };
        let b = if self.config.use_lstm_branch {
            let inner = seq.inner_ids();
            let ids: &[usize] = if inner.is_empty() { &[PAD_ID] } else { inner };
            let words = self.embeddings.matrix.gather_rows(ids, Some(PAD_ID))?;
            let states = self.lstm.forward(&words, mode)?;
            let pooled = self.lstm_attention.forward(&states)?;
            Some(self.lstm_projection.forward(&pooled.vector)?)
        } else {
            None
        };
        Ok((a, b))
    }

    /// The fused sentence embedding as a graph node (length `E`).
    pub fn encode(&self, text: &str, mode: &mut Mode) -> Result<Tensor> {
        let summed = match self.branches(text, mode)? {
            (Some(a), Some(b)) => a.add(&b)?,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("constructor requires a branch"),
        };
        Ok(self.fusion.forward(&summed)?.flatten())
    }

    /// Eval-mode embedding.
    pub fn embed_sentence(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.encode(text, &mut Mode::Eval)?.to_vec())
    }

    pub fn score_pair(&self, s1: &str, s2: &str) -> Result<f64> {
        let a = self.encode(s1, &mut Mode::Eval)?;
        let b = self.encode(s2, &mut Mode::Eval)?;
        Ok(a.cosine_similarity(&b)?.item())
    }

    /// Index and cosine of the candidate closest to `utterance`; ties go
    /// to the lowest index.
    pub fn nearest_argument<S: AsRef<str>>(&self, utterance: &str, candidates: &[S]) -> Result<(usize, f64)> {
        if candidates.is_empty() {
            return Err(ModelError::NoCandidates);
        }
        let u = self.encode(utterance, &mut Mode::Eval)?.detach();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, c) in candidates.iter().enumerate() {
            let v = self.encode(c.as_ref(), &mut Mode::Eval)?;
            let score = u.cosine_similarity(&v)?.item();
            if score > best.1 {
                best = (i, score);
            }
        }
        Ok(best)
    }

    /// Mini-batch Adam on the squared error between the pair cosine and
    /// `score / 5`. Freezes the model on success.
    pub fn train_sts(&mut self, pairs: &[SentencePair], cfg: &StsTrainConfig) -> Result<StsReport> {
        if self.frozen {
            return Err(ModelError::Frozen);
        }
        if pairs.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        if cfg.batch_size == 0 {
            return Err(ModelError::Config("batch size must be positive".into()));
        }
        let params = self.trainable();
        let mut opt = Adam::new(&params);
        let mut dropout_rng = seeded(cfg.seed ^ DROPOUT_SALT);
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut seeded(cfg.seed.wrapping_add(epoch as u64)));
            let mut total = 0.0;
            for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    let pair = &pairs[i];
                    let mut mode = Mode::Train(&mut dropout_rng);
                    let a = self.encode(&pair.sentence1, &mut mode)?;
                    let b = self.encode(&pair.sentence2, &mut mode)?;
                    let loss = a.cosine_similarity(&b)?.mse(pair.score / STS_MAX_SCORE)?;
                    let value = loss.item();
                    if !value.is_finite() {
                        return Err(ModelError::NonFiniteLoss { epoch, step, loss: value });
                    }
                    total += value;
                    loss.scale(scale).backward()?;
                }
                opt.step(&params, cfg.learning_rate)?;
            }
            epoch_losses.push(total / pairs.len() as f64);
        }
        self.freeze();
        Ok(StsReport { epoch_losses, steps: opt.steps(), config: *cfg })
    }

    /// Overwrites parameters from checkpoint entries.
    pub fn load_entries(&self, entries: &[crate::tensor::CheckpointEntry]) -> Result<()> {
        if self.frozen {
            return Err(ModelError::Frozen);
        }
        Ok(self.params().load_entries(entries)?)
    }

    /// Writes `config.json`, `vocab.txt` and `params.ckpt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.json"), serde_json::to_vec_pretty(&self.config)?)?;
        self.vocab.save(&dir.join("vocab.txt"))?;
        self.params().save(&dir.join("params.ckpt"))?;
        Ok(())
    }

    /// Loads a saved model; the result is frozen.
    pub fn load(dir: &Path) -> Result<Self> {
        let config: ArgSimConfig = serde_json::from_slice(&std::fs::read(dir.join("config.json"))?)?;
        let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
        let mut model = ArgSimModel::new(config, vocab, None)?;
        let file = std::fs::File::open(dir.join("params.ckpt"))?;
        let entries = read_checkpoint(std::io::BufReader::new(file))?;
        model.load_entries(&entries)?;
        model.freeze();
        Ok(model)
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        &BasicTokenizer
    }
}
