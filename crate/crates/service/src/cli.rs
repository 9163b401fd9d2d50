//! The `argdialog` command line.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use argdialog::argsim::{load_sts, ArgSimConfig, ArgSimModel, SentencePair, StsTrainConfig};
use argdialog::dialogue::{parse_graph, ArgumentGraph, DialogueError, Templates};
use argdialog::eval::{
    self, evaluate_pipeline, evaluate_sts, load_user_study, topic_split, ArgumentResolver, GoldOracle, Group, KeywordOracle,
    LabeledUtterance, LexicalResolver,
};
use argdialog::intent::{
    load_intent_csv, run_few_shot_protocol, FewShotRow, IntentConfig, IntentExample, IntentLabels, IntentModel, IntentPredictor,
    IntentTrainConfig, FEW_SHOT_SIZES,
};
use argdialog::synthetic;
use argdialog::text::{load_embeddings, BasicTokenizer, Vocabulary};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{ServiceError, ServiceResult};
use crate::pipeline::{Nlu, Pipeline, PipelineConfig};
use crate::session::{Service, SessionStore};

#[derive(Debug, Parser)]
#[command(name = "argdialog", version, about = "Argumentative dialogue models and session service")]
pub struct Cli {
    /// Directory for sessions and default model locations.
    #[arg(long, env = "ARGDIALOG_DATA_DIR", default_value = "argdialog-data", global = true)]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the sentence-similarity model on STS pairs.
    TrainArgsim(TrainArgsim),
    /// Train the intent classifier in two stages.
    TrainIntent(TrainIntent),
    /// Accuracy and F1 of a saved intent classifier.
    EvalIntent(EvalIntent),
    /// Spearman correlation of a saved similarity model.
    EvalArgsim(EvalArgsim),
    /// Intent, argument and overall accuracy on labeled utterances.
    EvalPipeline(EvalPipeline),
    /// k-shot protocol over several seeds, printed as a table row.
    FewShot(FewShot),
    /// Interactive dialogue on stdin.
    Chat(Chat),
    /// Run the HTTP session service.
    Serve(Serve),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    /// Exact lookup of labeled records.
    Gold,
    /// Cue phrases and word overlap.
    Keyword,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Saved intent classifier directory.
    #[arg(long = "intent-model", env = "ARGDIALOG_INTENT_CKPT")]
    pub intent: Option<PathBuf>,
    /// Saved similarity model directory.
    #[arg(long = "argsim-model", env = "ARGDIALOG_ARGSIM_CKPT")]
    pub argsim: Option<PathBuf>,
    /// Replace the trained models by a rule-based stand-in.
    #[arg(long, value_enum)]
    pub oracle: Option<OracleKind>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Argument graph JSON files; the bundled topics when absent.
    #[arg(long = "graph")]
    pub graphs: Vec<PathBuf>,
    /// Response template JSON.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgsim {
    /// Tab-separated pairs; the score is the last field.
    #[arg(long, conflicts_with = "synthetic")]
    pub sts: Option<PathBuf>,
    /// Train on this many generated word-overlap pairs instead.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Word vectors in text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, env = "ARGDIALOG_ARGSIM_CKPT")]
    pub out: Option<PathBuf>,
    /// Small dimensions and a larger learning rate.
    #[arg(long)]
    pub toy: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainIntent {
    /// CSV with a `text,category` header.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Train on generated keyword utterances.
    #[arg(long)]
    pub synthetic: bool,
    /// Frozen similarity model whose sentence vector joins the features.
    #[arg(long = "argsim-model", env = "ARGDIALOG_ARGSIM_CKPT")]
    pub argsim: Option<PathBuf>,
    #[arg(long, env = "ARGDIALOG_INTENT_CKPT")]
    pub out: Option<PathBuf>,
    /// Sets the stage-two epoch schedule.
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub toy: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalIntent {
    #[arg(long = "intent-model", env = "ARGDIALOG_INTENT_CKPT")]
    pub model: PathBuf,
    #[arg(long = "argsim-model", env = "ARGDIALOG_ARGSIM_CKPT")]
    pub argsim: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgsim {
    #[arg(long = "argsim-model", env = "ARGDIALOG_ARGSIM_CKPT")]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "synthetic")]
    pub sts: Option<PathBuf>,
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalPipeline {
    /// JSON lines of labeled utterances.
    #[arg(long, conflicts_with = "synthetic")]
    pub records: Option<PathBuf>,
    /// Evaluate on generated records over the bundled topics.
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub graphs: GraphArgs,
    /// Hold out one topic; every topic is scored separately when absent.
    #[arg(long)]
    pub test_topic: Option<String>,
    #[arg(long, value_enum)]
    pub group: Option<GroupArg>,
    #[arg(long)]
    pub json: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Native,
    NonNative,
}

impl From<GroupArg> for Group {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Native => Group::Native,
            GroupArg::NonNative => Group::NonNative,
        }
    }
}

#[derive(Debug, Args)]
pub struct FewShot {
    /// Shots per class.
    #[arg(long = "k", value_delimiter = ',', default_values_t = FEW_SHOT_SIZES)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Training pool CSV.
    #[arg(long, conflicts_with = "synthetic", requires = "test")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Use generated keyword utterances with toy dimensions.
    #[arg(long)]
    pub synthetic: bool,
    /// Add a column trained on the whole pool.
    #[arg(long)]
    pub full: bool,
    /// Frozen similarity model for the features.
    #[arg(long = "argsim-model")]
    pub argsim: Option<PathBuf>,
    /// Row label.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct Chat {
    #[arg(long)]
    pub topic: Option<String>,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub graphs: GraphArgs,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct Serve {
    #[arg(long, env = "ARGDIALOG_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub graphs: GraphArgs,
    #[arg(long)]
    pub default_topic: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep sessions in memory only.
    #[arg(long)]
    pub ephemeral: bool,
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 2 for usage errors, 1 for failures.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{e}") } else { e.print() };
            return code;
        }
    };
    match execute(cli, input, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            1
        }
    }
}

fn io(e: std::io::Error) -> ServiceError {
    ServiceError::Io(e)
}

pub fn execute(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> ServiceResult<()> {
    let data_dir = cli.data_dir;
    match cli.command {
        Command::TrainArgsim(a) => train_argsim(a, &data_dir, out),
        Command::TrainIntent(a) => train_intent(a, &data_dir, out),
        Command::EvalIntent(a) => eval_intent(a, out),
        Command::EvalArgsim(a) => eval_argsim(a, out),
        Command::EvalPipeline(a) => eval_pipeline(a, out),
        Command::FewShot(a) => few_shot(a, out),
        Command::Chat(a) => chat(a, input, out),
        Command::Serve(a) => serve(a, &data_dir),
    }
}

fn sts_pairs(path: &Option<PathBuf>, synthetic: Option<usize>, seed: u64) -> ServiceResult<Vec<SentencePair>> {
    match (path, synthetic) {
        (Some(p), _) => Ok(load_sts(p)?),
        (None, Some(n)) => Ok(synthetic::lexical_sts(n, seed)),
        (None, None) => Err(ServiceError::BadRequest("give --sts or --synthetic".into())),
    }
}

fn intent_data(path: &Option<PathBuf>, synthetic: bool, seed: u64) -> ServiceResult<Vec<IntentExample>> {
    match path {
        Some(p) => Ok(load_intent_csv(p)?),
        None if synthetic => Ok(synthetic::keyword_intents(10, 0, seed).0),
        None => Err(ServiceError::BadRequest("give --data or --synthetic".into())),
    }
}

/// Vocabulary over `texts`, plus every generated word for toy data.
pub fn build_vocabulary<S: AsRef<str>>(texts: &[S], synthetic_words: bool) -> Vocabulary {
    let mut corpus: Vec<String> = texts.iter().map(|t| t.as_ref().to_owned()).collect();
    if synthetic_words {
        corpus.push(synthetic::synthetic_vocabulary().join(" "));
    }
    Vocabulary::build(&corpus, 1, &BasicTokenizer)
}

/// Trains and freezes a similarity model on `pairs`.
pub fn fit_argsim(
    pairs: &[SentencePair],
    mut config: ArgSimConfig,
    train: &StsTrainConfig,
    vocab: Vocabulary,
    embeddings: Option<&Path>,
) -> ServiceResult<(ArgSimModel, argdialog::argsim::StsReport)> {
    config.seed = train.seed;
    let table = match embeddings {
        Some(p) => Some(load_embeddings(p, &vocab, config.embedding_dim, config.seed).map_err(argdialog::ModelError::from)?),
        None => None,
    };
    let mut model = ArgSimModel::new(config, vocab, table)?;
    let report = model.train_sts(pairs, train)?;
    Ok((model, report))
}

/// Trains an intent classifier; labels come from `labels_from` so that a
/// few-shot subset still knows every class.
pub fn fit_intent(
    train: &[IntentExample],
    labels_from: &[IntentExample],
    vocab: Vocabulary,
    argsim: Option<Arc<ArgSimModel>>,
    toy: bool,
    shots: Option<usize>,
    seed: u64,
) -> ServiceResult<(IntentModel, argdialog::intent::IntentReport)> {
    let mut config = if toy { IntentConfig::toy() } else { IntentConfig::default() };
    config.seed = seed;
    config.use_argsim = argsim.is_some();
    let mut tcfg = if toy { IntentTrainConfig::toy() } else { IntentTrainConfig::default() };
    tcfg.shots = shots;
    tcfg.seed = seed;
    let labels = IntentLabels::from_examples(labels_from)?;
    let mut model = IntentModel::new(config, vocab, labels, argsim)?;
    let report = model.train_two_stage(train, &tcfg)?;
    Ok((model, report))
}

fn load_argsim(path: &Option<PathBuf>) -> ServiceResult<Option<Arc<ArgSimModel>>> {
    path.as_deref().map(|p| Ok(Arc::new(ArgSimModel::load(p)?))).transpose()
}

fn train_argsim(a: TrainArgsim, data_dir: &Path, out: &mut dyn Write) -> ServiceResult<()> {
    let pairs = sts_pairs(&a.sts, a.synthetic, a.seed)?;
    let texts: Vec<&str> = pairs.iter().flat_map(|p| [p.sentence1.as_str(), p.sentence2.as_str()]).collect();
    let vocab = build_vocabulary(&texts, a.synthetic.is_some());
    let config = if a.toy { ArgSimConfig::toy() } else { ArgSimConfig::default() };
    let mut train = if a.toy { StsTrainConfig::toy() } else { StsTrainConfig::default() };
    train.seed = a.seed;
    if let Some(e) = a.epochs {
        train.epochs = e;
    }
    let (model, report) = fit_argsim(&pairs, config, &train, vocab, a.embeddings.as_deref())?;
    for (i, l) in report.epoch_losses.iter().enumerate() {
        writeln!(out, "epoch {} loss {l:.5}", i + 1).map_err(io)?;
    }
    writeln!(out, "train spearman {:.4}", evaluate_sts(&model, &pairs)?).map_err(io)?;
    let dir = a.out.unwrap_or_else(|| data_dir.join("argsim"));
    model.save(&dir)?;
    writeln!(out, "saved {}", dir.display()).map_err(io)?;
    Ok(())
}

fn train_intent(a: TrainIntent, data_dir: &Path, out: &mut dyn Write) -> ServiceResult<()> {
    let data = intent_data(&a.data, a.synthetic, a.seed)?;
    let texts: Vec<&str> = data.iter().map(|e| e.text.as_str()).collect();
    let vocab = build_vocabulary(&texts, a.synthetic);
    let argsim = load_argsim(&a.argsim)?;
    let (model, report) = fit_intent(&data, &data, vocab, argsim, a.toy || a.synthetic, a.shots, a.seed)?;
    for (i, l) in report.stage1_losses.iter().enumerate() {
        writeln!(out, "stage 1 epoch {} loss {l:.5}", i + 1).map_err(io)?;
    }
    for (i, l) in report.stage2_losses.iter().enumerate() {
        writeln!(out, "stage 2 epoch {} loss {l:.5}", i + 1).map_err(io)?;
    }
    writeln!(out, "train accuracy {:.4}", report.train_accuracy).map_err(io)?;
    let dir = a.out.unwrap_or_else(|| data_dir.join("intent"));
    model.save(&dir)?;
    writeln!(out, "saved {}", dir.display()).map_err(io)?;
    Ok(())
}

fn eval_intent(a: EvalIntent, out: &mut dyn Write) -> ServiceResult<()> {
    let data = match &a.data {
        Some(p) => load_intent_csv(p)?,
        None if a.synthetic => synthetic::keyword_intents(0, 10, a.seed).1,
        None => return Err(ServiceError::BadRequest("give --data or --synthetic".into())),
    };
    let model = IntentModel::load(&a.model, load_argsim(&a.argsim)?)?;
    let mut predicted = Vec::with_capacity(data.len());
    for e in &data {
        predicted.push(model.predict(&e.text)?.0);
    }
    let gold: Vec<String> = data.iter().map(|e| e.label.clone()).collect();
    writeln!(out, "examples {}", data.len()).map_err(io)?;
    writeln!(out, "accuracy {:.4}", eval::accuracy(&predicted, &gold)?).map_err(io)?;
    writeln!(out, "macro_f1 {:.4}", eval::macro_f1(&predicted, &gold)?).map_err(io)?;
    Ok(())
}

fn eval_argsim(a: EvalArgsim, out: &mut dyn Write) -> ServiceResult<()> {
    let pairs = sts_pairs(&a.sts, a.synthetic, a.seed)?;
    let model = ArgSimModel::load(&a.model)?;
    writeln!(out, "pairs {}", pairs.len()).map_err(io)?;
    writeln!(out, "spearman {:.4}", evaluate_sts(&model, &pairs)?).map_err(io)?;
    Ok(())
}

fn load_graphs(g: &GraphArgs) -> ServiceResult<(Vec<ArgumentGraph>, Templates)> {
    let graphs = if g.graphs.is_empty() {
        synthetic::topic_graphs()
    } else {
        g.graphs
            .iter()
            .map(|p| {
                let doc = std::fs::read_to_string(p)?;
                Ok(parse_graph(&doc)?)
            })
            .collect::<ServiceResult<_>>()?
    };
    let templates = match &g.templates {
        Some(p) => Templates::load(p)?,
        None => Templates::default(),
    };
    Ok((graphs, templates))
}

/// The language-understanding models named by `m`, if any are given.
pub fn load_nlu(m: &ModelArgs, records: &[LabeledUtterance]) -> ServiceResult<Option<Nlu>> {
    match m.oracle {
        Some(OracleKind::Keyword) => return Ok(Some(Nlu::new(Arc::new(KeywordOracle::default()), Arc::new(LexicalResolver), "keyword"))),
        Some(OracleKind::Gold) => {
            let o = Arc::new(GoldOracle::new(records));
            return Ok(Some(Nlu::new(o.clone(), o, "gold")));
        }
        None => {}
    }
    let Some(intent_dir) = &m.intent else {
        return Ok(None);
    };
    let argsim = load_argsim(&m.argsim)?;
    let intent = IntentModel::load(intent_dir, argsim.clone())?;
    let mut fingerprint = intent.params().fingerprint();
    let resolver: Arc<dyn ArgumentResolver + Send + Sync> = match argsim {
        Some(a) => {
            fingerprint.push_str(&a.params().fingerprint());
            a
        }
        None => Arc::new(LexicalResolver),
    };
    Ok(Some(Nlu::new(Arc::new(intent), resolver, fingerprint)))
}

fn eval_pipeline(a: EvalPipeline, out: &mut dyn Write) -> ServiceResult<()> {
    let (graphs, _) = load_graphs(&a.graphs)?;
    let records = match &a.records {
        Some(p) => load_user_study(p)?,
        None if a.synthetic => synthetic::user_study(&graphs, 4, a.seed),
        None => return Err(ServiceError::BadRequest("give --records or --synthetic".into())),
    };
    let nlu = load_nlu(&a.models, &records)?.ok_or(ServiceError::ModelNotLoaded)?;
    let group = a.group.map(Group::from);
    let graph_for = |topic: &str| graphs.iter().find(|g| g.topic == topic).ok_or_else(|| ServiceError::UnknownTopic(topic.to_owned()));
    let runs: Vec<(String, Vec<LabeledUtterance>, Option<eval::SplitDescriptor>)> = match &a.test_topic {
        Some(t) => {
            let mut split = topic_split(&records, t)?;
            split.descriptor.group = group;
            let test = split.test.into_iter().filter(|r| group.is_none_or(|g| r.group == g)).collect();
            vec![(t.clone(), test, Some(split.descriptor))]
        }
        None => {
            let mut topics: Vec<String> = records.iter().map(|r| r.topic.clone()).collect();
            topics.sort();
            topics.dedup();
            topics
                .into_iter()
                .map(|t| {
                    let rs = records.iter().filter(|r| r.topic == t && group.is_none_or(|g| r.group == g)).cloned().collect();
                    (t, rs, None)
                })
                .collect()
        }
    };
    if !a.json {
        writeln!(out, "topic | intent F1 | similarity | overall").map_err(io)?;
    }
    for (topic, rs, split) in runs {
        let report = evaluate_pipeline(&*nlu.intents, &*nlu.resolver, graph_for(&topic)?, &rs, split)?;
        if a.json {
            writeln!(out, "{}", report.to_json()).map_err(io)?;
        } else {
            writeln!(out, "{}", report.table_row(&topic)).map_err(io)?;
        }
    }
    Ok(())
}

fn few_shot(a: FewShot, out: &mut dyn Write) -> ServiceResult<()> {
    let (pool, test, toy) = match (&a.data, &a.test) {
        (Some(d), Some(t)) => (load_intent_csv(d)?, load_intent_csv(t)?, false),
        _ if a.synthetic => {
            let max_k = a.k.iter().copied().max().unwrap_or(10);
            let (pool, test) = synthetic::keyword_intents(max_k + 10, 10, 0);
            (pool, test, true)
        }
        _ => return Err(ServiceError::BadRequest("give --data and --test, or --synthetic".into())),
    };
    let texts: Vec<&str> = pool.iter().map(|e| e.text.as_str()).collect();
    let vocab = build_vocabulary(&texts, a.synthetic);
    let argsim = load_argsim(&a.argsim)?;
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let mut shots: Vec<Option<usize>> = a.k.iter().map(|&k| Some(k)).collect();
    if a.full {
        shots.push(None);
    }
    let mut cells = Vec::with_capacity(shots.len());
    for s in shots {
        let seeds = if s.is_none() { &seeds[..1] } else { &seeds[..] };
        let cell = run_few_shot_protocol(&pool, &test, s, seeds, |subset, seed| {
            fit_intent(subset, &pool, vocab.clone(), argsim.clone(), toy, s, seed).map(|(m, _)| m).map_err(|e| match e {
                ServiceError::Model(m) => m,
                other => argdialog::ModelError::Config(other.to_string()),
            })
        })?;
        cells.push(cell);
    }
    let default_label = if argsim.is_some() { "Intent+ArgSim" } else { "Intent" };
    let row = FewShotRow { model: a.label.unwrap_or_else(|| default_label.to_owned()), cells };
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&row)?).map_err(io)?;
    } else {
        writeln!(out, "{}", row.header()).map_err(io)?;
        writeln!(out, "{}", row.render()).map_err(io)?;
    }
    Ok(())
}

fn chat(a: Chat, input: &mut dyn BufRead, out: &mut dyn Write) -> ServiceResult<()> {
    let (graphs, templates) = load_graphs(&a.graphs)?;
    let nlu = load_nlu(&a.models, &[])?.ok_or(ServiceError::ModelNotLoaded)?;
    let config = PipelineConfig { seed: a.seed, confidence_threshold: a.threshold, default_topic: None };
    let pipeline = Pipeline::new(graphs, templates, Some(nlu), config)?;
    let mut session = pipeline.new_session("chat".into(), a.topic.as_deref())?;
    let engine = pipeline.engine(&session.topic)?;
    let root = engine.graph().root().text.clone();
    writeln!(out, "system: Let us discuss: {root}").map_err(io)?;
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line).map_err(io)? == 0 {
            break;
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match pipeline.handle_utterance(&mut session, text) {
            Ok(reply) => writeln!(out, "system: {}", reply.response_text).map_err(io)?,
            Err(ServiceError::Dialogue(DialogueError::Terminated)) => break,
            Err(e) => writeln!(out, "system: ({}) {e}", e.code()).map_err(io)?,
        }
        if session.state.terminated {
            break;
        }
    }
    writeln!(out, "final stance {:.2}", session.state.stance).map_err(io)?;
    Ok(())
}

fn serve(a: Serve, data_dir: &Path) -> ServiceResult<()> {
    let (graphs, templates) = load_graphs(&a.graphs)?;
    let nlu = load_nlu(&a.models, &[])?;
    if nlu.is_none() {
        eprintln!("no models given; utterances will fail with model_not_loaded");
    }
    let config = PipelineConfig { seed: a.seed, confidence_threshold: a.threshold, default_topic: a.default_topic };
    let pipeline = Pipeline::new(graphs, templates, nlu, config)?;
    let service = if a.ephemeral {
        Service::new(pipeline)
    } else {
        let (service, skipped) = Service::with_store(pipeline, SessionStore::open(data_dir.join("sessions"))?)?;
        for id in skipped {
            eprintln!("session {id} was recorded under another configuration and is not loaded");
        }
        service
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(io)?;
    runtime.block_on(crate::http::serve(Arc::new(service), &a.bind)).map_err(io)
}
