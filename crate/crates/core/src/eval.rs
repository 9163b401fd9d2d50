//! Datasets, metrics and the end-to-end pipeline evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argsim::ArgSimModel;
use crate::dialogue::{ArgumentGraph, ArgumentNode, MoveKind};
use crate::error::ModelError;
use crate::intent::IntentPredictor;
use crate::text::{BasicTokenizer, Tokenizer};

/// Published full-scale results (×100) of the complete model. They need
/// a pretrained twelve-layer encoder and the original user-study data,
/// so nothing here is expected to reach them.
pub mod reference {
    /// Intent accuracy, full training data, user-study test set.
    pub const INTENT_FULL_ACCURACY: f64 = 89.7;
    /// Argument similarity accuracy on the user study.
    pub const ARGSIM_USER_STUDY_ACCURACY: f64 = 95.2;
    /// Spearman on the STS benchmark test split.
    pub const ARGSIM_STS_SPEARMAN: f64 = 85.1;
    /// Native speakers: intent F1, similarity accuracy, overall accuracy.
    pub const PIPELINE_NATIVE: [f64; 3] = [89.8, 95.2, 87.7];
    pub const PIPELINE_NON_NATIVE: [f64; 3] = [88.8, 89.7, 87.3];
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown intent {name:?}")]
    UnknownIntent { line: usize, name: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {0} values")]
    TooFew(usize),
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("topic split needs at least two topics, found {0:?}")]
    SingleTopic(Vec<String>),
    #[error("topic {0:?} does not occur in the records")]
    UnknownTopic(String),
    #[error("reference argument {0:?} is not in the graph")]
    UnknownArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Native,
    NonNative,
    #[default]
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUtterance {
    pub text: String,
    pub intent: MoveKind,
    pub ref_arg: Option<String>,
    pub topic: String,
    pub group: Group,
    /// Arguments on display when the utterance was written.
    pub candidates: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct RawRecord {
    text: String,
    intent: String,
    #[serde(default)]
    ref_arg: Option<String>,
    topic: String,
    #[serde(default)]
    group: Option<Group>,
    #[serde(default)]
    candidates: Option<Vec<String>>,
}

/// One JSON object per line; blank lines are skipped.
pub fn read_user_study<R: BufRead>(reader: R) -> Result<Vec<LabeledUtterance>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| EvalError::Parse { line: n, message: e.to_string() })?;
        let intent: MoveKind = raw.intent.parse().map_err(|_| EvalError::UnknownIntent { line: n, name: raw.intent.clone() })?;
        match (intent.takes_argument(), &raw.ref_arg) {
            (true, None) => return Err(EvalError::Invalid { line: n, message: format!("{intent} record needs ref_arg") }),
            (false, Some(_)) => return Err(EvalError::Invalid { line: n, message: format!("{intent} record must not carry ref_arg") }),
            _ => {}
        }
        if let (Some(c), Some(r)) = (&raw.candidates, &raw.ref_arg) {
            if !c.contains(r) {
                return Err(EvalError::Invalid { line: n, message: "ref_arg missing from candidates".into() });
            }
        }
        out.push(LabeledUtterance {
            text: raw.text,
            intent,
            ref_arg: raw.ref_arg,
            topic: raw.topic,
            group: raw.group.unwrap_or_default(),
            candidates: raw.candidates,
        });
    }
    Ok(out)
}

pub fn load_user_study(path: &Path) -> Result<Vec<LabeledUtterance>> {
    read_user_study(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_user_study(records: &[LabeledUtterance]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}

/// Records per intent, every intent listed.
pub fn intent_counts(records: &[LabeledUtterance]) -> BTreeMap<MoveKind, usize> {
    let mut counts: BTreeMap<MoveKind, usize> = MoveKind::ALL.iter().map(|&k| (k, 0)).collect();
    for r in records {
        *counts.entry(r.intent).or_default() += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub train_topics: Vec<String>,
    pub test_topic: String,
    pub group: Option<Group>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSplit {
    pub train: Vec<LabeledUtterance>,
    pub test: Vec<LabeledUtterance>,
    pub descriptor: SplitDescriptor,
}

/// Holds out `test_topic`; everything else trains. Order is preserved.
pub fn topic_split(records: &[LabeledUtterance], test_topic: &str) -> Result<TopicSplit> {
    let topics: BTreeSet<&str> = records.iter().map(|r| r.topic.as_str()).collect();
    if topics.len() < 2 {
        return Err(EvalError::SingleTopic(topics.into_iter().map(str::to_owned).collect()));
    }
    if !topics.contains(test_topic) {
        return Err(EvalError::UnknownTopic(test_topic.to_owned()));
    }
    let (test, train): (Vec<_>, Vec<_>) = records.iter().cloned().partition(|r| r.topic == test_topic);
    Ok(TopicSplit {
        train,
        test,
        descriptor: SplitDescriptor {
            train_topics: topics.into_iter().filter(|t| *t != test_topic).map(str::to_owned).collect(),
            test_topic: test_topic.to_owned(),
            group: None,
        },
    })
}

fn check_lengths(a: usize, b: usize, min: usize) -> Result<()> {
    if a != b {
        return Err(EvalError::LengthMismatch(a, b));
    }
    if a < min {
        return Err(EvalError::TooFew(min));
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(predictions: &[T], golds: &[T]) -> Result<f64> {
    check_lengths(predictions.len(), golds.len(), 1)?;
    let hits = predictions.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / golds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: usize,
}

/// Gold × predicted counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion<T: Ord> {
    pub counts: BTreeMap<T, BTreeMap<T, usize>>,
}

impl<T: Ord + Clone> Confusion<T> {
    pub fn new(predictions: &[T], golds: &[T]) -> Result<Self> {
        check_lengths(predictions.len(), golds.len(), 1)?;
        let mut counts: BTreeMap<T, BTreeMap<T, usize>> = BTreeMap::new();
        for (p, g) in predictions.iter().zip(golds) {
            *counts.entry(g.clone()).or_default().entry(p.clone()).or_default() += 1;
        }
        Ok(Confusion { counts })
    }

    /// Every label seen as gold or prediction.
    pub fn labels(&self) -> BTreeSet<T> {
        let mut out = BTreeSet::new();
        for (g, row) in &self.counts {
            out.insert(g.clone());
            out.extend(row.keys().cloned());
        }
        out
    }

    fn cell(&self, gold: &T, pred: &T) -> usize {
        self.counts.get(gold).and_then(|r| r.get(pred)).copied().unwrap_or(0)
    }

    /// `(tp, fp, fn)` of one label.
    pub fn tallies(&self, label: &T) -> (usize, usize, usize) {
        let tp = self.cell(label, label);
        let predicted: usize = self.counts.values().map(|r| r.get(label).copied().unwrap_or(0)).sum();
        let gold: usize = self.counts.get(label).map_or(0, |r| r.values().sum());
        (tp, predicted - tp, gold - tp)
    }

    pub fn per_class(&self) -> BTreeMap<T, ClassScores> {
        self.labels()
            .into_iter()
            .map(|l| {
                let (tp, fp, fn_) = self.tallies(&l);
                let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
                let precision = ratio(tp, tp + fp);
                let recall = ratio(tp, tp + fn_);
                let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
                (l, ClassScores { precision, recall, f1, support: tp + fn_ })
            })
            .collect()
    }

    /// Mean F1 over labels appearing as gold or prediction.
    pub fn macro_f1(&self) -> f64 {
        let per = self.per_class();
        per.values().map(|s| s.f1).sum::<f64>() / per.len() as f64
    }

    /// Pooled F1; equals accuracy for single-label data.
    pub fn micro_f1(&self) -> f64 {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for l in self.labels() {
            let (a, b, c) = self.tallies(&l);
            tp += a;
            fp += b;
            fn_ += c;
        }
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

pub fn macro_f1<T: Ord + Clone>(predictions: &[T], golds: &[T]) -> Result<f64> {
    Ok(Confusion::new(predictions, golds)?.macro_f1())
}

pub fn micro_f1<T: Ord + Clone>(predictions: &[T], golds: &[T]) -> Result<f64> {
    Ok(Confusion::new(predictions, golds)?.micro_f1())
}

/// 1-based ranks, ties share their average rank.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_lengths(xs.len(), ys.len(), 2)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_lengths(xs.len(), ys.len(), 2)?;
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

/// Spearman correlation of model cosines against gold scores.
pub fn evaluate_sts(model: &ArgSimModel, pairs: &[crate::argsim::SentencePair]) -> Result<f64> {
    let mut predicted = Vec::with_capacity(pairs.len());
    for p in pairs {
        predicted.push(model.score_pair(&p.sentence1, &p.sentence2)?);
    }
    let gold: Vec<f64> = pairs.iter().map(|p| p.score).collect();
    spearman(&predicted, &gold)
}

/// Picks which candidate argument an utterance refers to.
pub trait ArgumentResolver {
    /// One score per candidate, higher is closer.
    fn scores(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError>;

    /// Best index and its score; ties go to the lowest index.
    fn resolve(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<(usize, f64), ModelError> {
        if candidates.is_empty() {
            return Err(ModelError::NoCandidates);
        }
        let scores = self.scores(utterance, candidates)?;
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &s) in scores.iter().enumerate() {
            if s > best.1 {
                best = (i, s);
            }
        }
        Ok(best)
    }
}

impl ArgumentResolver for ArgSimModel {
    fn scores(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError> {
        let u = crate::tensor::Tensor::vector(self.embed_sentence(utterance)?);
        candidates.iter().map(|c| Ok(u.cosine_similarity(&crate::tensor::Tensor::vector(self.embed_sentence(&c.text)?))?.item())).collect()
    }
}

impl<R: ArgumentResolver + ?Sized> ArgumentResolver for &R {
    fn scores(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError> {
        (**self).scores(utterance, candidates)
    }
}

impl<R: ArgumentResolver + ?Sized> ArgumentResolver for std::sync::Arc<R> {
    fn scores(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError> {
        (**self).scores(utterance, candidates)
    }
}

impl<R: ArgumentResolver + ?Sized> ArgumentResolver for Box<R> {
    fn scores(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError> {
        (**self).scores(utterance, candidates)
    }
}

/// Answers from a lookup of the labeled records.
#[derive(Debug, Clone, Default)]
pub struct GoldOracle {
    intents: HashMap<String, MoveKind>,
    arguments: HashMap<String, String>,
}

impl GoldOracle {
    pub fn new(records: &[LabeledUtterance]) -> Self {
        let mut o = GoldOracle::default();
        for r in records {
            o.intents.insert(r.text.clone(), r.intent);
            if let Some(a) = &r.ref_arg {
                o.arguments.insert(r.text.clone(), a.clone());
            }
        }
        o
    }
}

impl IntentPredictor for GoldOracle {
    fn predict(&self, text: &str) -> std::result::Result<(String, f64), ModelError> {
        let kind = self.intents.get(text).ok_or_else(|| ModelError::UnknownLabel(text.to_owned()))?;
        Ok((kind.name().to_owned(), 1.0))
    }
}

impl ArgumentResolver for GoldOracle {
    fn scores(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError> {
        let gold = self.arguments.get(utterance);
        Ok(candidates.iter().map(|c| if Some(&c.id) == gold { 1.0 } else { 0.0 }).collect())
    }
}

/// Cue-phrase intent rules, checked in order.
#[derive(Debug, Clone)]
pub struct KeywordOracle {
    rules: Vec<(MoveKind, Vec<String>)>,
    fallback: MoveKind,
}

impl Default for KeywordOracle {
    fn default() -> Self {
        let rule = |k, cues: &[&str]| (k, cues.iter().map(|c| c.to_string()).collect());
        KeywordOracle {
            rules: vec![
                rule(MoveKind::Reject, &["reject", "disagree", "do not believe", "don't believe", "not convinced"]),
                rule(MoveKind::Why, &["why", "tell me more", "more about", "explain"]),
                rule(MoveKind::Stance, &["stance", "my position", "my opinion"]),
                rule(MoveKind::Exit, &["finish", "exit", "goodbye", "bye", "stop", "quit", "end the"]),
                rule(MoveKind::LevelUp, &["return", "go back", "previous", "level up", "level-up"]),
                rule(MoveKind::Prefer, &["prefer", "agree", "i think", "like the", "convinc", "good point"]),
            ],
            fallback: MoveKind::Prefer,
        }
    }
}

impl KeywordOracle {
    pub fn classify(&self, text: &str) -> MoveKind {
        let lower = text.to_lowercase();
        self.rules.iter().find(|(_, cues)| cues.iter().any(|c| lower.contains(c.as_str()))).map_or(self.fallback, |(k, _)| *k)
    }
}

impl IntentPredictor for KeywordOracle {
    fn predict(&self, text: &str) -> std::result::Result<(String, f64), ModelError> {
        Ok((self.classify(text).name().to_owned(), 1.0))
    }
}

/// Token-set Jaccard overlap with the candidate text; ties go low.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalResolver;

pub fn jaccard(a: &str, b: &str) -> f64 {
    let tok = |s: &str| -> BTreeSet<String> { BasicTokenizer.split(s).into_iter().collect() };
    let (x, y) = (tok(a), tok(b));
    let union = x.union(&y).count();
    if union == 0 {
        return 0.0;
    }
    x.intersection(&y).count() as f64 / union as f64
}

impl ArgumentResolver for LexicalResolver {
    fn scores(&self, utterance: &str, candidates: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError> {
        Ok(candidates.iter().map(|c| jaccard(utterance, &c.text)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub text: String,
    pub gold_intent: MoveKind,
    pub predicted_intent: Option<MoveKind>,
    pub confidence: f64,
    pub gold_argument: Option<String>,
    pub resolved_argument: Option<String>,
    pub intent_correct: bool,
    pub argument_correct: Option<bool>,
    pub overall_correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `intent_accuracy`, `intent_macro_f1`, `intent_micro_f1`,
    /// `similarity_accuracy` and `overall_accuracy`.
    pub metrics: BTreeMap<String, f64>,
    pub per_class: BTreeMap<String, ClassScores>,
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub split: Option<SplitDescriptor>,
    pub records: usize,
    pub argument_records: usize,
    pub outcomes: Vec<RecordOutcome>,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> f64 {
        self.metrics.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Intent F1, similarity accuracy and overall accuracy, ×100.
    pub fn table_row(&self, label: &str) -> String {
        format!(
            "{label} | {:.1} | {:.1} | {:.1}",
            100.0 * self.metric("intent_macro_f1"),
            100.0 * self.metric("similarity_accuracy"),
            100.0 * self.metric("overall_accuracy"),
        )
    }
}

/// The arguments a record could refer to: its stated candidates, else
/// the siblings of its reference argument.
pub fn candidate_ids(graph: &ArgumentGraph, record: &LabeledUtterance) -> Result<Vec<String>> {
    if let Some(c) = &record.candidates {
        for id in c {
            if !graph.contains(id) {
                return Err(EvalError::UnknownArgument(id.clone()));
            }
        }
        return Ok(c.clone());
    }
    let gold = record.ref_arg.as_ref().expect("argument-bearing record");
    let node = graph.node(gold).ok_or_else(|| EvalError::UnknownArgument(gold.clone()))?;
    Ok(match &node.parent {
        Some(p) => graph.children(p).to_vec(),
        None => vec![node.id.clone()],
    })
}

/// Runs intent prediction and, for predicted argument moves, argument
/// resolution over every record. A record counts for the overall score
/// when the intent matches and, for argument moves, the argument too.
pub fn evaluate_pipeline<P, R>(
    intents: &P,
    resolver: &R,
    graph: &ArgumentGraph,
    records: &[LabeledUtterance],
    split: Option<SplitDescriptor>,
) -> Result<EvalReport>
where
    P: IntentPredictor + ?Sized,
    R: ArgumentResolver + ?Sized,
{
    if records.is_empty() {
        return Err(EvalError::TooFew(1));
    }
    let mut outcomes = Vec::with_capacity(records.len());
    let (mut sim_hits, mut arg_records) = (0usize, 0usize);
    for r in records {
        let (label, confidence) = intents.predict(&r.text)?;
        let predicted: Option<MoveKind> = label.parse().ok();
        let intent_correct = predicted == Some(r.intent);
        let mut argument_correct = None;
        let mut resolved_argument = None;
        if r.intent.takes_argument() {
            arg_records += 1;
            let ids = candidate_ids(graph, r)?;
            let nodes: Vec<&ArgumentNode> = ids.iter().map(|id| graph.node(id).expect("checked")).collect();
            let got = ids[resolver.resolve(&r.text, &nodes)?.0].clone();
            let ok = Some(&got) == r.ref_arg.as_ref();
            sim_hits += ok as usize;
            argument_correct = Some(ok);
            if predicted.is_some_and(MoveKind::takes_argument) {
                resolved_argument = Some(got);
            }
        }
        let overall_correct = intent_correct && argument_correct.unwrap_or(true);
        outcomes.push(RecordOutcome {
            text: r.text.clone(),
            gold_intent: r.intent,
            predicted_intent: predicted,
            confidence,
            gold_argument: r.ref_arg.clone(),
            resolved_argument,
            intent_correct,
            argument_correct,
            overall_correct,
        });
    }
    let gold_names: Vec<String> = records.iter().map(|r| r.intent.name().to_owned()).collect();
    let pred_names: Vec<String> =
        outcomes.iter().map(|o| o.predicted_intent.map_or_else(|| "unknown".to_owned(), |k| k.name().to_owned())).collect();
    let confusion = Confusion::new(&pred_names, &gold_names)?;
    let n = records.len() as f64;
    let mut metrics = BTreeMap::new();
    metrics.insert("intent_accuracy".into(), accuracy(&pred_names, &gold_names)?);
    metrics.insert("intent_macro_f1".into(), confusion.macro_f1());
    metrics.insert("intent_micro_f1".into(), confusion.micro_f1());
    let sim = if arg_records == 0 { f64::NAN } else { sim_hits as f64 / arg_records as f64 };
    metrics.insert("similarity_accuracy".into(), sim);
    metrics.insert("overall_accuracy".into(), outcomes.iter().filter(|o| o.overall_correct).count() as f64 / n);
    Ok(EvalReport {
        metrics,
        per_class: confusion.per_class(),
        confusion: confusion.counts,
        split,
        records: records.len(),
        argument_records: arg_records,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::marriage_graph;

    fn rec(text: &str, intent: MoveKind, arg: Option<&str>, topic: &str) -> LabeledUtterance {
        LabeledUtterance {
            text: text.into(),
            intent,
            ref_arg: arg.map(str::to_owned),
            topic: topic.into(),
            group: Group::Native,
            candidates: None,
        }
    }

    #[test]
    fn user_study_loader() {
        assert!(read_user_study("".as_bytes()).unwrap().is_empty());
        let lines = [
            r#"{"text": "What is my stance right now?", "intent": "stance", "ref_arg": null, "topic": "marriage", "group": "native"}"#,
            r#"{"text": "I would like to finish.", "intent": "exit", "topic": "marriage", "group": "non_native"}"#,
            r#"{"text": "Please return to the previous argument.", "intent": "level-up", "topic": "marriage"}"#,
            r#"{"text": "why", "intent": "why", "ref_arg": "C1", "topic": "marriage"}"#,
            r#"{"text": "good", "intent": "prefer", "ref_arg": "C2", "topic": "marriage"}"#,
            r#"{"text": "bad", "intent": "reject", "ref_arg": "C3", "topic": "marriage", "candidates": ["C1", "C3"]}"#,
        ];
        let recs = read_user_study(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(intent_counts(&recs).values().all(|&c| c == 1));
        assert_eq!(recs[1].group, Group::NonNative);
        assert_eq!(recs[2].group, Group::Unspecified);
    }

    #[test]
    fn user_study_errors_carry_lines() {
        let why_null = "\n{\"text\": \"x\", \"intent\": \"why\", \"ref_arg\": null, \"topic\": \"t\"}";
        assert!(matches!(read_user_study(why_null.as_bytes()), Err(EvalError::Invalid { line: 2, .. })));
        let bad = r#"{"text": "x", "intent": "dance", "topic": "t"}"#;
        assert!(matches!(read_user_study(bad.as_bytes()), Err(EvalError::UnknownIntent { line: 1, .. })));
        assert!(matches!(read_user_study("{".as_bytes()), Err(EvalError::Parse { line: 1, .. })));
        let extra = r#"{"text": "x", "intent": "exit", "ref_arg": "C1", "topic": "t"}"#;
        assert!(read_user_study(extra.as_bytes()).is_err());
    }

    #[test]
    fn split_by_topic() {
        let recs = vec![
            rec("a", MoveKind::Exit, None, "marriage"),
            rec("b", MoveKind::Exit, None, "nuclear"),
            rec("c", MoveKind::Exit, None, "games"),
            rec("d", MoveKind::Stance, None, "marriage"),
        ];
        let s = topic_split(&recs, "marriage").unwrap();
        assert_eq!(s.test.len(), 2);
        assert_eq!(s.descriptor.train_topics, ["games", "nuclear"]);
        assert_eq!(s.train.len() + s.test.len(), recs.len());
        assert!(matches!(topic_split(&recs[..1], "marriage"), Err(EvalError::SingleTopic(_))));
        assert!(matches!(topic_split(&recs, "space"), Err(EvalError::UnknownTopic(_))));
    }

    #[test]
    fn metric_anchors() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(macro_f1(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        // Label 1: tp 1, fp 1, fn 1.
        let c = Confusion::new(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(c.tallies(&1), (1, 1, 1));
        assert_eq!(c.per_class()[&1].f1, 0.5);
        assert!(accuracy::<u8>(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn spearman_anchors() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(fractional_ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert!(matches!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(EvalError::ConstantInput)));
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn oracle_pipeline_is_perfect() {
        let g = marriage_graph();
        let recs = vec![
            rec("What is my stance right now?", MoveKind::Stance, None, "marriage"),
            rec("Please tell me more about the best way", MoveKind::Why, Some("C1"), "marriage"),
            rec("I reject the ridiculous idea", MoveKind::Reject, Some("C3"), "marriage"),
        ];
        let oracle = GoldOracle::new(&recs);
        let r = evaluate_pipeline(&oracle, &oracle, &g, &recs, None).unwrap();
        assert_eq!(r.metric("overall_accuracy"), 1.0);
        assert_eq!(r.metric("similarity_accuracy"), 1.0);
        assert_eq!(r.argument_records, 2);
    }

    struct Always(usize);

    impl ArgumentResolver for Always {
        fn scores(&self, _: &str, c: &[&ArgumentNode]) -> std::result::Result<Vec<f64>, ModelError> {
            Ok((0..c.len()).map(|i| if i == self.0 { 1.0 } else { 0.0 }).collect())
        }
    }

    #[test]
    fn wrong_argument_fails_overall_only() {
        let g = marriage_graph();
        let recs = vec![rec("tell me why", MoveKind::Why, Some("C1"), "marriage")];
        let oracle = GoldOracle::new(&recs);
        let r = evaluate_pipeline(&oracle, &Always(2), &g, &recs, None).unwrap();
        assert_eq!(r.metric("intent_accuracy"), 1.0);
        assert_eq!(r.metric("overall_accuracy"), 0.0);
        assert_eq!(r.outcomes[0].resolved_argument.as_deref(), Some("C3"));
    }

    #[test]
    fn keyword_and_lexical_oracles() {
        let k = KeywordOracle::default();
        assert_eq!(k.classify("What is my stance right now?"), MoveKind::Stance);
        assert_eq!(k.classify("I would like to finish."), MoveKind::Exit);
        assert_eq!(k.classify("Please return to the previous argument."), MoveKind::LevelUp);
        assert_eq!(k.classify("Please tell me more why marriage promotes better way to raise child."), MoveKind::Why);
        assert_eq!(k.classify("I think marriage is good way to raise children"), MoveKind::Prefer);
        assert_eq!(k.classify("I reject argument about marriage is an unreasonable expectation"), MoveKind::Reject);
        let g = marriage_graph();
        let nodes: Vec<&ArgumentNode> = g.children("MC").iter().map(|c| g.node(c).unwrap()).collect();
        let (i, _) = LexicalResolver.resolve("the best way to raise children", &nodes).unwrap();
        assert_eq!(i, 0);
        assert_eq!(jaccard("", ""), 0.0);
    }
}
