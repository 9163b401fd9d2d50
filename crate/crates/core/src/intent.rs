//! The intent classifier and its two-stage training.
//!
//! A transformer encoder feeds a BiLSTM whose states are pooled by inner
//! attention into `u`. The frozen similarity model contributes its sentence
//! vector `s`, and a softmax head reads `[u, s]`.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::argsim::ArgSimModel;
use crate::encoders::{
    seeded, AttentionConfig, BiLstm, InnerAttention, Linear, Mode, TransformerConfig, TransformerEncoder, DEFAULT_DROPOUT,
};
use crate::error::{ModelError, Result};
use crate::tensor::{read_checkpoint, Adam, ParamSet, Tensor};
use crate::text::{BasicTokenizer, TextError, Vocabulary};

pub const STAGE1_LEARNING_RATE: f64 = 1e-4;
pub const STAGE2_LEARNING_RATE: f64 = 2e-5;
pub const STAGE1_EPOCHS: usize = 4;
pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const FEW_SHOT_SIZES: [usize; 3] = [10, 20, 30];

const DROPOUT_SALT: u64 = 0x1a7e;

/// Fine-tuning epochs for a `k`-shot run (`None` is the full data).
pub fn schedule_epochs(shots: Option<usize>) -> usize {
    match shots {
        Some(10) => 32,
        Some(20) => 25,
        Some(30) => 16,
        _ => 8,
    }
}

/// The closed label set, ids dense from zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentLabels {
    names: Vec<String>,
}

impl IntentLabels {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(ModelError::Config("intent label set is empty".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ModelError::Config(format!("duplicate intent label {n:?}")));
            }
        }
        Ok(IntentLabels { names })
    }

    /// Labels in first-seen order.
    pub fn from_examples(examples: &[IntentExample]) -> Result<Self> {
        let mut names: Vec<&str> = Vec::new();
        for e in examples {
            if !names.contains(&e.label.as_str()) {
                names.push(&e.label);
            }
        }
        Self::new(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| ModelError::UnknownLabel(name.to_owned()))
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntentExample {
    pub text: String,
    pub label: String,
}

impl IntentExample {
    pub fn new(text: impl Into<String>, label: impl Into<String>) -> Self {
        IntentExample { text: text.into(), label: label.into() }
    }
}

#[derive(Deserialize)]
struct CsvRow {
    text: String,
    category: String,
}

/// Parses a `text,category` CSV with a header row.
pub fn read_intent_csv<R: Read>(reader: R) -> Result<Vec<IntentExample>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| TextError::Parse { line: 1, message: e.to_string() })?.clone();
    if headers.iter().collect::<Vec<_>>() != ["text", "category"] {
        return Err(TextError::Parse {
            line: 1,
            message: format!("expected header \"text,category\", got {:?}", headers.iter().collect::<Vec<_>>().join(",")),
        }
        .into());
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<CsvRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            TextError::Parse { line, message: e.to_string() }
        })?;
        out.push(IntentExample::new(row.text, row.category));
    }
    Ok(out)
}

pub fn load_intent_csv(path: &Path) -> Result<Vec<IntentExample>> {
    read_intent_csv(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentConfig {
    pub transformer: TransformerConfig,
    pub lstm_hidden: usize,
    pub lstm_dropout: f64,
    pub attention: AttentionConfig,
    /// Ablation switch: pool the transformer states directly.
    pub use_bilstm: bool,
    /// Ablation switch: drop the similarity-model features.
    pub use_argsim: bool,
    pub seed: u64,
}

impl Default for IntentConfig {
    fn default() -> Self {
        IntentConfig {
            transformer: TransformerConfig::default(),
            lstm_hidden: 512,
            lstm_dropout: DEFAULT_DROPOUT,
            attention: AttentionConfig::default(),
            use_bilstm: true,
            use_argsim: true,
            seed: 0,
        }
    }
}

impl IntentConfig {
    pub fn toy() -> Self {
        IntentConfig { transformer: TransformerConfig::toy(), lstm_hidden: 8, attention: AttentionConfig::toy(), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentTrainConfig {
    /// Examples per intent, `None` for the full data. Picks the default
    /// fine-tuning epoch count.
    pub shots: Option<usize>,
    pub stage1_epochs: usize,
    /// Overrides the schedule when set.
    pub stage2_epochs: Option<usize>,
    pub stage1_learning_rate: f64,
    pub stage2_learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for IntentTrainConfig {
    fn default() -> Self {
        IntentTrainConfig {
            shots: None,
            stage1_epochs: STAGE1_EPOCHS,
            stage2_epochs: None,
            stage1_learning_rate: STAGE1_LEARNING_RATE,
            stage2_learning_rate: STAGE2_LEARNING_RATE,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
        }
    }
}

impl IntentTrainConfig {
    /// Learning rates and batch size that train toy-sized models from
    /// scratch within the schedule.
    pub fn toy() -> Self {
        IntentTrainConfig { stage1_learning_rate: 3e-2, stage2_learning_rate: 1e-2, batch_size: 8, ..Self::default() }
    }

    pub fn stage2_epochs(&self) -> usize {
        self.stage2_epochs.unwrap_or_else(|| schedule_epochs(self.shots))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentReport {
    pub stage1_losses: Vec<f64>,
    pub stage2_losses: Vec<f64>,
    /// Fingerprints of the encoder parameters.
    pub encoder_before: String,
    pub encoder_after_stage1: String,
    pub encoder_after_stage2: String,
    pub batch_size: usize,
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    pub train_accuracy: f64,
}

/// Anything that maps an utterance to a label and a confidence.
pub trait IntentPredictor {
    fn predict(&self, text: &str) -> Result<(String, f64)>;

    /// Probability per label; predictors without one report their pick.
    fn distribution(&self, text: &str) -> Result<Vec<(String, f64)>> {
        Ok(vec![self.predict(text)?])
    }
}

macro_rules! forward_predictor {
    ($($ty:ty),*) => {$(
        impl<P: IntentPredictor + ?Sized> IntentPredictor for $ty {
            fn predict(&self, text: &str) -> Result<(String, f64)> {
                (**self).predict(text)
            }

            fn distribution(&self, text: &str) -> Result<Vec<(String, f64)>> {
                (**self).distribution(text)
            }
        }
    )*};
}

forward_predictor!(&P, Box<P>, Arc<P>);

pub struct IntentModel {
    pub config: IntentConfig,
    pub labels: IntentLabels,
    pub vocab: Vocabulary,
    pub encoder: TransformerEncoder,
    pub lstm: BiLstm,
    pub attention: InnerAttention,
    pub head: Linear,
    argsim: Option<Arc<ArgSimModel>>,
}

impl IntentModel {
    /// The similarity model must be frozen; it is required unless the
    /// configuration disables it.
    pub fn new(config: IntentConfig, vocab: Vocabulary, labels: IntentLabels, argsim: Option<Arc<ArgSimModel>>) -> Result<Self> {
        let argsim = if config.use_argsim {
            let m = argsim.ok_or_else(|| ModelError::Config("similarity model required".into()))?;
            if !m.is_frozen() {
                return Err(ModelError::Config("similarity model must be frozen".into()));
            }
            Some(m)
        } else {
            None
        };
        let mut rng = seeded(config.seed);
        let encoder = TransformerEncoder::new(config.transformer, vocab.len(), &mut rng)?;
        let lstm = BiLstm::new(config.transformer.d_model, config.lstm_hidden, config.lstm_dropout, &mut rng);
        let pooled_input = if config.use_bilstm { lstm.output_dim() } else { config.transformer.d_model };
        let attention = InnerAttention::new(pooled_input, config.attention, &mut rng)?;
        let s_dim = argsim.as_ref().map_or(0, |m| m.output_dim());
        let head = Linear::zeros(attention.output_dim() + s_dim, labels.len());
        Ok(IntentModel { config, labels, vocab, encoder, lstm, attention, head, argsim })
    }

    pub fn argsim(&self) -> Option<&Arc<ArgSimModel>> {
        self.argsim.as_ref()
    }

    /// Encoder parameters, frozen during the first stage.
    pub fn encoder_params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        p.extend_prefixed("encoder", self.encoder.params());
        p
    }

    /// BiLSTM, pooling and head parameters.
    pub fn task_params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        if self.config.use_bilstm {
            p.extend_prefixed("lstm", self.lstm.params());
        }
        p.extend_prefixed("attention", self.attention.params());
        p.extend_prefixed("head", self.head.params());
        p
    }

    pub fn params(&self) -> ParamSet {
        let mut p = self.encoder_params();
        for (n, t) in self.task_params().iter() {
            p.push(n, t);
        }
        p
    }

    /// The similarity-model sentence vector, detached.
    pub fn features(&self, text: &str) -> Result<Option<Tensor>> {
        match &self.argsim {
            Some(m) => Ok(Some(Tensor::vector(m.embed_sentence(text)?))),
            None => Ok(None),
        }
    }

    /// Unnormalized scores over the labels. `features` is the cached
    /// output of [`IntentModel::features`].
    pub fn logits(&self, text: &str, features: Option<&Tensor>, mode: &mut Mode) -> Result<Tensor> {
        let seq = self.vocab.encode(text, &BasicTokenizer, self.config.transformer.max_len);
        let mut states = self.encoder.forward(&seq, mode)?;
        if self.config.use_bilstm {
            states = self.lstm.forward(&states, mode)?;
        }
        let u = self.attention.forward(&states)?.vector.flatten();
        let joined = match features {
            Some(s) => Tensor::concat(&[u, s.clone()], 0)?,
            None => u,
        };
        Ok(self.head.forward(&joined)?.flatten())
    }

    /// Probability of every label, eval mode.
    pub fn classify(&self, text: &str) -> Result<Vec<f64>> {
        let s = self.features(text)?;
        Ok(self.logits(text, s.as_ref(), &mut Mode::Eval)?.softmax(0)?.to_vec())
    }

    /// Most probable label id and its probability; ties go to the lowest id.
    pub fn predict_id(&self, text: &str) -> Result<(usize, f64)> {
        let probs = self.classify(text)?;
        Ok(argmax(&probs))
    }

    fn prepare(&self, data: &[IntentExample]) -> Result<Vec<(usize, Option<Tensor>)>> {
        data.iter().map(|e| Ok((self.labels.id(&e.label)?, self.features(&e.text)?))).collect()
    }

    fn run_stage(
        &self,
        data: &[IntentExample],
        prepared: &[(usize, Option<Tensor>)],
        params: &[Tensor],
        epochs: usize,
        lr: f64,
        cfg: &IntentTrainConfig,
        salt: u64,
    ) -> Result<Vec<f64>> {
        let mut opt = Adam::new(params);
        let mut dropout_rng = seeded(cfg.seed ^ DROPOUT_SALT ^ salt);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut losses = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            order.shuffle(&mut seeded(cfg.seed.wrapping_add(salt).wrapping_add(epoch as u64)));
            let mut total = 0.0;
            for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    let (target, features) = &prepared[i];
                    let mut mode = Mode::Train(&mut dropout_rng);
                    let logits = self.logits(&data[i].text, features.as_ref(), &mut mode)?;
                    let loss = logits.softmax(0)?.cross_entropy(*target)?;
                    let value = loss.item();
                    if !value.is_finite() {
                        return Err(ModelError::NonFiniteLoss { epoch, step, loss: value });
                    }
                    total += value;
                    loss.scale(scale).backward()?;
                }
                opt.step(params, lr)?;
            }
            losses.push(total / data.len() as f64);
        }
        Ok(losses)
    }

    /// Stage one trains the task layers with the encoder frozen; stage two
    /// fine-tunes everything with a fresh optimizer.
    pub fn train_two_stage(&mut self, data: &[IntentExample], cfg: &IntentTrainConfig) -> Result<IntentReport> {
        if data.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        if cfg.batch_size == 0 {
            return Err(ModelError::Config("batch size must be positive".into()));
        }
        let prepared = self.prepare(data)?;
        let encoder = self.encoder_params();
        let task = self.task_params();
        let encoder_before = encoder.fingerprint();

        encoder.set_requires_grad(false);
        task.set_requires_grad(true);
        let stage1 = self.run_stage(data, &prepared, &task.tensors(), cfg.stage1_epochs, cfg.stage1_learning_rate, cfg, 0)?;
        let encoder_after_stage1 = encoder.fingerprint();

        encoder.set_requires_grad(true);
        let mut all = encoder.tensors();
        all.extend(task.tensors());
        let stage2_epochs = cfg.stage2_epochs();
        let stage2 = self.run_stage(data, &prepared, &all, stage2_epochs, cfg.stage2_learning_rate, cfg, 0x2000)?;
        self.params().set_requires_grad(false);

        let correct =
            data.iter().zip(&prepared).map(|(e, (t, _))| Ok((self.predict_id(&e.text)?.0 == *t) as usize)).sum::<Result<usize>>()?;
        Ok(IntentReport {
            stage1_losses: stage1,
            stage2_losses: stage2,
            encoder_before,
            encoder_after_stage1,
            encoder_after_stage2: encoder.fingerprint(),
            batch_size: cfg.batch_size,
            stage1_epochs: cfg.stage1_epochs,
            stage2_epochs,
            train_accuracy: correct as f64 / data.len() as f64,
        })
    }

    /// Writes `config.json`, `labels.json`, `vocab.txt` and `params.ckpt`.
    /// The similarity model is saved separately.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.json"), serde_json::to_vec_pretty(&self.config)?)?;
        std::fs::write(dir.join("labels.json"), serde_json::to_vec_pretty(&self.labels)?)?;
        self.vocab.save(&dir.join("vocab.txt"))?;
        self.params().save(&dir.join("params.ckpt"))?;
        Ok(())
    }

    pub fn load(dir: &Path, argsim: Option<Arc<ArgSimModel>>) -> Result<Self> {
        let config: IntentConfig = serde_json::from_slice(&std::fs::read(dir.join("config.json"))?)?;
        let labels: IntentLabels = serde_json::from_slice(&std::fs::read(dir.join("labels.json"))?)?;
        let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
        let model = IntentModel::new(config, vocab, labels, argsim)?;
        let entries = read_checkpoint(std::io::BufReader::new(std::fs::File::open(dir.join("params.ckpt"))?))?;
        model.params().load_entries(&entries)?;
        model.params().set_requires_grad(false);
        Ok(model)
    }
}

impl IntentPredictor for IntentModel {
    fn predict(&self, text: &str) -> Result<(String, f64)> {
        let (id, p) = self.predict_id(text)?;
        Ok((self.labels.name(id).expect("id from head").to_owned(), p))
    }

    fn distribution(&self, text: &str) -> Result<Vec<(String, f64)>> {
        let probs = self.classify(text)?;
        Ok(self.labels.names().iter().cloned().zip(probs).collect())
    }
}

fn argmax(xs: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

/// Indices chosen for one few-shot run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotSample {
    pub k: usize,
    pub seed: u64,
    /// Label → sorted example indices.
    pub selected: BTreeMap<String, Vec<usize>>,
}

impl FewShotSample {
    /// All selected indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.selected.values().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn examples(&self, data: &[IntentExample]) -> Vec<IntentExample> {
        self.indices().into_iter().map(|i| data[i].clone()).collect()
    }
}

/// Draws `min(k, class size)` examples of every label without
/// replacement.
pub fn sample_few_shot(data: &[IntentExample], k: usize, seed: u64) -> Result<FewShotSample> {
    if k == 0 {
        return Err(ModelError::Config("k must be positive".into()));
    }
    let mut by_label: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in data.iter().enumerate() {
        by_label.entry(e.label.clone()).or_default().push(i);
    }
    let mut rng = seeded(seed);
    let selected = by_label
        .into_iter()
        .map(|(label, mut idx)| {
            let take = k.min(idx.len());
            idx.partial_shuffle(&mut rng, take);
            idx.truncate(take);
            idx.sort_unstable();
            (label, idx)
        })
        .collect();
    Ok(FewShotSample { k, seed, selected })
}

pub fn accuracy_of<P: IntentPredictor>(model: &P, data: &[IntentExample]) -> Result<f64> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut correct = 0;
    for e in data {
        if model.predict(&e.text)?.0 == e.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// One table cell: accuracies ×100 over the seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotCell {
    pub shots: Option<usize>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl FewShotCell {
    pub fn from_accuracies(shots: Option<usize>, accuracies: Vec<f64>) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        FewShotCell { shots, accuracies, mean, std: var.sqrt() }
    }

    pub fn header(&self) -> String {
        match self.shots {
            Some(k) => format!("{k}-shot"),
            None => "Full".into(),
        }
    }

    /// `mean±std`, or just the mean for a single full-data run.
    pub fn render(&self) -> String {
        if self.shots.is_none() && self.accuracies.len() == 1 {
            format!("{:.1}", self.mean)
        } else {
            format!("{:.1}±{:.1}", self.mean, self.std)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotRow {
    pub model: String,
    pub cells: Vec<FewShotCell>,
}

impl FewShotRow {
    pub fn header(&self) -> String {
        let mut cols = vec!["Model".to_owned()];
        cols.extend(self.cells.iter().map(FewShotCell::header));
        cols.join(" | ")
    }

    pub fn render(&self) -> String {
        let mut cols = vec![self.model.clone()];
        cols.extend(self.cells.iter().map(FewShotCell::render));
        cols.join(" | ")
    }
}

/// Trains one model per seed on its `k`-shot sample (or on all of
/// `train` for `None`) and scores it on the shared `test` set.
pub fn run_few_shot_protocol<P, F>(
    train: &[IntentExample],
    test: &[IntentExample],
    shots: Option<usize>,
    seeds: &[u64],
    mut trainer: F,
) -> Result<FewShotCell>
where
    P: IntentPredictor,
    F: FnMut(&[IntentExample], u64) -> Result<P>,
{
    if seeds.is_empty() {
        return Err(ModelError::Config("at least one seed required".into()));
    }
    let mut accuracies = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let subset = match shots {
            Some(k) => sample_few_shot(train, k, seed)?.examples(train),
            None => train.to_vec(),
        };
        let model = trainer(&subset, seed)?;
        accuracies.push(100.0 * accuracy_of(&model, test)?);
    }
    Ok(FewShotCell::from_accuracies(shots, accuracies))
}
