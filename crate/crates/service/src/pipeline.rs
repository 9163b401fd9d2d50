//! Utterance to move: intent classification, argument resolution and the
//! dialogue engine, per topic.

use std::collections::BTreeMap;
use std::sync::Arc;

use argdialog::dialogue::{ArgumentGraph, ArgumentNode, DialogueEngine, DialogueState, MoveKind, SpeechAct, Templates};
use argdialog::eval::ArgumentResolver;
use argdialog::intent::IntentPredictor;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ServiceError, ServiceResult};
use crate::session::{now_millis, Event, Session, StateView};

/// Shown when the classifier is not confident enough to act.
pub const CLARIFICATION: &str = "I am not sure what you mean. Could you rephrase that?";

/// The two language-understanding models.
#[derive(Clone)]
pub struct Nlu {
    pub intents: Arc<dyn IntentPredictor + Send + Sync>,
    pub resolver: Arc<dyn ArgumentResolver + Send + Sync>,
    /// Identifies the loaded weights in the session config hash.
    pub fingerprint: String,
}

impl Nlu {
    pub fn new(
        intents: Arc<dyn IntentPredictor + Send + Sync>,
        resolver: Arc<dyn ArgumentResolver + Send + Sync>,
        fingerprint: impl Into<String>,
    ) -> Self {
        Nlu { intents, resolver, fingerprint: fingerprint.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Below this intent confidence the system asks to rephrase.
    pub confidence_threshold: f64,
    /// Topic used when a session does not name one; else the first graph.
    pub default_topic: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { seed: 0, confidence_threshold: 0.0, default_topic: None }
    }
}

/// Debug payload of one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnDebug {
    pub distribution: Vec<(String, f64)>,
    pub similarity: Vec<(String, f64)>,
    pub act: Option<SpeechAct>,
    pub clarification: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceReply {
    pub response_text: String,
    pub intent: String,
    pub confidence: f64,
    pub resolved_argument: Option<String>,
    pub stance: f64,
    pub state: StateView,
    pub debug: TurnDebug,
}

struct Interpretation {
    intent: String,
    confidence: f64,
    distribution: Vec<(String, f64)>,
    act: Option<SpeechAct>,
    scores: Vec<(String, f64)>,
}

pub struct Pipeline {
    engines: BTreeMap<String, DialogueEngine>,
    default_topic: String,
    nlu: Option<Nlu>,
    config: PipelineConfig,
    config_hash: String,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("topics", &self.engines.keys().collect::<Vec<_>>())
            .field("nlu_loaded", &self.nlu.is_some())
            .field("config", &self.config)
            .finish()
    }
}

impl Pipeline {
    pub fn new(graphs: Vec<ArgumentGraph>, templates: Templates, nlu: Option<Nlu>, config: PipelineConfig) -> ServiceResult<Self> {
        if graphs.is_empty() {
            return Err(ServiceError::Config("at least one argument graph is required".into()));
        }
        if !(0.0..=1.0).contains(&config.confidence_threshold) {
            return Err(ServiceError::Config(format!("confidence threshold {} is outside [0, 1]", config.confidence_threshold)));
        }
        let templates = Arc::new(templates);
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&config)?);
        h.update(serde_json::to_vec(&*templates)?);
        h.update(nlu.as_ref().map_or("", |n| n.fingerprint.as_str()).as_bytes());
        let default_topic = config.default_topic.clone().unwrap_or_else(|| graphs[0].topic.clone());
        let mut engines = BTreeMap::new();
        for g in graphs {
            h.update(g.to_json().as_bytes());
            let topic = g.topic.clone();
            let engine = DialogueEngine::new(Arc::new(g)).with_templates(templates.clone()).with_seed(config.seed);
            if engines.insert(topic.clone(), engine).is_some() {
                return Err(ServiceError::Config(format!("topic {topic:?} is defined twice")));
            }
        }
        if !engines.contains_key(&default_topic) {
            return Err(ServiceError::UnknownTopic(default_topic));
        }
        let config_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Pipeline { engines, default_topic, nlu, config, config_hash })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Hash over graphs, templates, settings and model fingerprint.
    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.engines.keys().map(String::as_str)
    }

    pub fn default_topic(&self) -> &str {
        &self.default_topic
    }

    pub fn has_models(&self) -> bool {
        self.nlu.is_some()
    }

    pub fn engine(&self, topic: &str) -> ServiceResult<&DialogueEngine> {
        self.engines.get(topic).ok_or_else(|| ServiceError::UnknownTopic(topic.to_owned()))
    }

    /// Resolves the topic name, falling back to the default.
    pub fn topic_or_default(&self, topic: Option<&str>) -> ServiceResult<String> {
        let t = topic.unwrap_or(&self.default_topic);
        self.engine(t)?;
        Ok(t.to_owned())
    }

    pub fn new_session(&self, id: String, topic: Option<&str>) -> ServiceResult<Session> {
        let topic = self.topic_or_default(topic)?;
        let state = self.engine(&topic)?.initial_state(id.clone());
        Ok(Session { id, topic, created_at: now_millis(), config_hash: self.config_hash.clone(), state, events: Vec::new() })
    }

    /// Arguments a move of `kind` may refer to in `state`.
    pub fn candidates(kind: MoveKind, state: &DialogueState) -> Vec<String> {
        match kind {
            MoveKind::Why => {
                let mut c = vec![state.current.clone()];
                c.extend(state.displayed.iter().filter(|d| **d != state.current).cloned());
                c
            }
            MoveKind::Prefer | MoveKind::Reject => state.displayed.clone(),
            _ => Vec::new(),
        }
    }

    fn interpret(&self, engine: &DialogueEngine, state: &DialogueState, text: &str) -> ServiceResult<Interpretation> {
        let nlu = self.nlu.as_ref().ok_or(ServiceError::ModelNotLoaded)?;
        let (intent, confidence) = nlu.intents.predict(text)?;
        let distribution = nlu.intents.distribution(text)?;
        let mut out = Interpretation { intent, confidence, distribution, act: None, scores: Vec::new() };
        if confidence < self.config.confidence_threshold {
            return Ok(out);
        }
        let kind: MoveKind = out.intent.parse().map_err(|_| ServiceError::UnknownIntent(out.intent.clone()))?;
        if !kind.takes_argument() {
            out.act = Some(SpeechAct::new(kind, None)?);
            return Ok(out);
        }
        let ids = Self::candidates(kind, state);
        let graph = engine.graph();
        let nodes: Vec<&ArgumentNode> = ids.iter().filter_map(|id| graph.node(id)).collect();
        let scores = nlu.resolver.scores(text, &nodes)?;
        out.scores = ids.iter().cloned().zip(scores.iter().copied()).collect();
        let (best, _) = nlu.resolver.resolve(text, &nodes)?;
        out.act = Some(SpeechAct::new(kind, Some(ids[best].clone()))?);
        Ok(out)
    }

    /// Runs one user turn against `session`, logging it whether it
    /// succeeds or not. A failed turn leaves the state untouched.
    pub fn handle_utterance(&self, session: &mut Session, text: &str) -> ServiceResult<UtteranceReply> {
        let turn = session.events.len() as u64;
        let mut event = Event {
            turn,
            timestamp: now_millis(),
            utterance: text.to_owned(),
            intent: None,
            confidence: None,
            act: None,
            resolved_argument: None,
            scores: Vec::new(),
            response: None,
            stance_after: session.state.stance,
            error: None,
        };
        let result = self.run_turn(session, text, turn, &mut event);
        if let Err(e) = &result {
            event.error = Some(e.code().to_owned());
        }
        session.events.push(event);
        result
    }

    fn run_turn(&self, session: &mut Session, text: &str, turn: u64, event: &mut Event) -> ServiceResult<UtteranceReply> {
        if session.state.terminated {
            return Err(argdialog::dialogue::DialogueError::Terminated.into());
        }
        let engine = self.engine(&session.topic)?;
        let it = self.interpret(engine, &session.state, text)?;
        event.intent = Some(it.intent.clone());
        event.confidence = Some(it.confidence);
        event.scores = it.scores.clone();
        event.act = it.act.clone();
        let resolved_argument = it.act.as_ref().and_then(|a| a.argument.clone());
        event.resolved_argument = resolved_argument.clone();
        let response_text = match &it.act {
            None => CLARIFICATION.to_owned(),
            Some(act) => {
                let (next, response) = engine.respond(&session.state, act, turn)?;
                session.state = next;
                response.text
            }
        };
        event.response = Some(response_text.clone());
        event.stance_after = session.state.stance;
        Ok(UtteranceReply {
            response_text,
            intent: it.intent,
            confidence: it.confidence,
            resolved_argument,
            stance: session.state.stance,
            state: session.view(),
            debug: TurnDebug { distribution: it.distribution, similarity: it.scores, clarification: it.act.is_none(), act: it.act },
        })
    }
}
