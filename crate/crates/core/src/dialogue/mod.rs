//! The argumentative dialogue layer: an argument tree, six user moves,
//! stance propagation and templated replies.

mod graph;
mod stance;
mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{parse_graph, ArgumentGraph, ArgumentNode, Relation, DEFAULT_WEIGHT};
pub use stance::{ClampedAdditive, StancePolicy, StanceResult, PREFERENCE_BOOST};
pub use templates::{format_stance, Templates, PLACEHOLDERS, TEMPLATE_KEYS};

use crate::encoders::seeded;

/// The bundled four-node marriage sub-dialogue.
pub const MARRIAGE_FIXTURE: &str = include_str!("../../data/marriage.json");

pub fn marriage_graph() -> ArgumentGraph {
    parse_graph(MARRIAGE_FIXTURE).expect("bundled fixture is valid")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DialogueError {
    #[error("invalid argument graph: {0}")]
    InvalidDocument(String),
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("graph has no root")]
    NoRoot,
    #[error("graph has several roots: {0:?}")]
    MultiRoot(Vec<String>),
    #[error("node {0:?} is not the root but has no parent")]
    Orphan(String),
    #[error("node {0:?} lists more than one parent")]
    MultiParent(String),
    #[error("node {id:?} references unknown parent {parent:?}")]
    DanglingReference { id: String, parent: String },
    #[error("nodes {0:?} form a cycle")]
    Cycle(Vec<String>),
    #[error("invalid templates: {0}")]
    InvalidTemplates(String),
    #[error("already at the major claim")]
    AtRoot,
    #[error("argument {0:?} has no further arguments")]
    NoChildren(String),
    #[error("argument {0:?} is not among the displayed arguments")]
    UnknownReference(String),
    #[error("the session has ended")]
    Terminated,
    #[error("{0} needs an argument")]
    MissingArgument(MoveKind),
    #[error("{0} takes no argument")]
    UnexpectedArgument(MoveKind),
    #[error("unknown move {0:?}")]
    UnknownMove(String),
}

impl DialogueError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            DialogueError::InvalidDocument(_) => "invalid_document",
            DialogueError::DuplicateId(_) => "duplicate_id",
            DialogueError::NoRoot => "no_root",
            DialogueError::MultiRoot(_) => "multi_root",
            DialogueError::Orphan(_) => "orphan",
            DialogueError::MultiParent(_) => "multi_parent",
            DialogueError::DanglingReference { .. } => "dangling_reference",
            DialogueError::Cycle(_) => "cycle",
            DialogueError::InvalidTemplates(_) => "invalid_templates",
            DialogueError::AtRoot => "at_root",
            DialogueError::NoChildren(_) => "no_children",
            DialogueError::UnknownReference(_) => "unknown_reference",
            DialogueError::Terminated => "session_terminated",
            DialogueError::MissingArgument(_) => "missing_argument",
            DialogueError::UnexpectedArgument(_) => "unexpected_argument",
            DialogueError::UnknownMove(_) => "unknown_move",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Stance,
    Exit,
    LevelUp,
    Why,
    Prefer,
    Reject,
}

impl MoveKind {
    pub const ALL: [MoveKind; 6] = [MoveKind::Stance, MoveKind::Exit, MoveKind::LevelUp, MoveKind::Why, MoveKind::Prefer, MoveKind::Reject];

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Stance => "stance",
            MoveKind::Exit => "exit",
            MoveKind::LevelUp => "level_up",
            MoveKind::Why => "why",
            MoveKind::Prefer => "prefer",
            MoveKind::Reject => "reject",
        }
    }

    /// Whether the move refers to an argument.
    pub fn takes_argument(self) -> bool {
        matches!(self, MoveKind::Why | MoveKind::Prefer | MoveKind::Reject)
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MoveKind {
    type Err = DialogueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        MoveKind::ALL.into_iter().find(|k| k.name() == norm).ok_or_else(|| DialogueError::UnknownMove(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechAct {
    pub kind: MoveKind,
    pub argument: Option<String>,
}

impl SpeechAct {
    pub fn new(kind: MoveKind, argument: Option<String>) -> Result<Self, DialogueError> {
        match (kind.takes_argument(), argument.is_some()) {
            (true, false) => Err(DialogueError::MissingArgument(kind)),
            (false, true) => Err(DialogueError::UnexpectedArgument(kind)),
            _ => Ok(SpeechAct { kind, argument }),
        }
    }

    pub fn stance() -> Self {
        SpeechAct { kind: MoveKind::Stance, argument: None }
    }

    pub fn exit() -> Self {
        SpeechAct { kind: MoveKind::Exit, argument: None }
    }

    pub fn level_up() -> Self {
        SpeechAct { kind: MoveKind::LevelUp, argument: None }
    }

    pub fn why(id: impl Into<String>) -> Self {
        SpeechAct { kind: MoveKind::Why, argument: Some(id.into()) }
    }

    pub fn prefer(id: impl Into<String>) -> Self {
        SpeechAct { kind: MoveKind::Prefer, argument: Some(id.into()) }
    }

    pub fn reject(id: impl Into<String>) -> Self {
        SpeechAct { kind: MoveKind::Reject, argument: Some(id.into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub session_id: String,
    pub current: String,
    /// Non-rejected children of `current`, document order.
    pub displayed: Vec<String>,
    /// Closed under descendants.
    pub rejected: BTreeSet<String>,
    pub preferences: BTreeMap<String, u32>,
    pub strengths: BTreeMap<String, f64>,
    pub stance: f64,
    pub terminated: bool,
}

/// What a move did, before it is put into words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveOutcome {
    pub act: SpeechAct,
    /// Node the reply talks about.
    pub focus: String,
    /// Children presented by a why move, with their relation.
    pub introduced: Vec<(String, Relation)>,
    pub stance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResponse {
    pub text: String,
    pub outcome: MoveOutcome,
}

/// Per-node entry of a tree snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNodeView {
    pub id: String,
    pub text: String,
    pub relation: Relation,
    pub parent: Option<String>,
    pub children: Vec<String>,
    pub weight: f64,
    pub strength: Option<f64>,
    pub rejected: bool,
    pub preferences: u32,
    pub current: bool,
    pub displayed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub topic: String,
    pub root: String,
    pub current: String,
    pub stance: f64,
    pub nodes: Vec<TreeNodeView>,
}

/// Applies moves to states over one shared graph.
#[derive(Clone)]
pub struct DialogueEngine {
    graph: Arc<ArgumentGraph>,
    policy: Arc<dyn StancePolicy>,
    templates: Arc<Templates>,
    seed: u64,
}

impl fmt::Debug for DialogueEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DialogueEngine")
            .field("topic", &self.graph.topic)
            .field("nodes", &self.graph.len())
            .field("seed", &self.seed)
            .finish()
    }
}

impl DialogueEngine {
    pub fn new(graph: Arc<ArgumentGraph>) -> Self {
        DialogueEngine { graph, policy: Arc::new(ClampedAdditive::default()), templates: Arc::new(Templates::default()), seed: 0 }
    }

    pub fn with_policy(mut self, policy: Arc<dyn StancePolicy>) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_templates(mut self, templates: Arc<Templates>) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn graph(&self) -> &Arc<ArgumentGraph> {
        &self.graph
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh state at the major claim.
    pub fn initial_state(&self, session_id: impl Into<String>) -> DialogueState {
        let mut state = DialogueState {
            session_id: session_id.into(),
            current: self.graph.root_id().to_owned(),
            displayed: Vec::new(),
            rejected: BTreeSet::new(),
            preferences: BTreeMap::new(),
            strengths: BTreeMap::new(),
            stance: 0.0,
            terminated: false,
        };
        self.refresh(&mut state);
        state
    }

    pub fn compute_stance(&self, state: &DialogueState) -> StanceResult {
        self.policy.evaluate(&self.graph, &state.rejected, &state.preferences)
    }

    fn refresh(&self, state: &mut DialogueState) {
        state.displayed = self.live_children(&state.current, &state.rejected);
        let r = self.compute_stance(state);
        state.stance = r.stance;
        state.strengths = r.strengths;
    }

    fn live_children(&self, id: &str, rejected: &BTreeSet<String>) -> Vec<String> {
        self.graph.children(id).iter().filter(|c| !rejected.contains(*c)).cloned().collect()
    }

    /// Applies `act` to a copy of `state`. On error nothing changes.
    pub fn apply_move(&self, state: &DialogueState, act: &SpeechAct) -> Result<(DialogueState, MoveOutcome), DialogueError> {
        if state.terminated {
            return Err(DialogueError::Terminated);
        }
        let act = SpeechAct::new(act.kind, act.argument.clone())?;
        let mut next = state.clone();
        let mut introduced = Vec::new();
        let focus = match act.kind {
            MoveKind::Stance => next.current.clone(),
            MoveKind::Exit => {
                next.terminated = true;
                next.current.clone()
            }
            MoveKind::LevelUp => {
                let node = self.graph.node(&next.current).expect("current is in the graph");
                let parent = node.parent.clone().ok_or(DialogueError::AtRoot)?;
                next.current = parent.clone();
                parent
            }
            MoveKind::Why => {
                let a = act.argument.clone().expect("validated");
                if a != next.current && !next.displayed.contains(&a) {
                    return Err(DialogueError::UnknownReference(a));
                }
                let children = self.live_children(&a, &next.rejected);
                if children.is_empty() {
                    return Err(DialogueError::NoChildren(a));
                }
                introduced = children.iter().map(|c| (c.clone(), self.graph.node(c).expect("child").relation)).collect();
                next.current = a.clone();
                a
            }
            MoveKind::Prefer | MoveKind::Reject => {
                let a = act.argument.clone().expect("validated");
                if !next.displayed.contains(&a) {
                    return Err(DialogueError::UnknownReference(a));
                }
                if act.kind == MoveKind::Prefer {
                    *next.preferences.entry(a.clone()).or_insert(0) += 1;
                } else {
                    next.rejected.extend(self.graph.descendants(&a));
                    next.rejected.insert(a.clone());
                }
                a
            }
        };
        self.refresh(&mut next);
        let outcome = MoveOutcome { act, focus, introduced, stance: next.stance };
        Ok((next, outcome))
    }

    /// Words for `outcome`; `turn` selects the phrase stream.
    pub fn render(&self, outcome: &MoveOutcome, turn: u64) -> String {
        let mut rng = seeded(self.seed.wrapping_add(turn));
        let t = &self.templates;
        let text_of = |id: &str| self.graph.node(id).map_or("", |n| n.text.as_str());
        let focus = text_of(&outcome.focus);
        match outcome.act.kind {
            MoveKind::Stance => t.fill("stance", focus, outcome.stance, &mut rng),
            MoveKind::Exit => t.fill("exit", focus, outcome.stance, &mut rng),
            MoveKind::LevelUp => t.fill("level_up", focus, outcome.stance, &mut rng),
            MoveKind::Prefer => t.fill("prefer", focus, outcome.stance, &mut rng),
            MoveKind::Reject => t.fill("reject", focus, outcome.stance, &mut rng),
            MoveKind::Why => {
                let (mut supports, mut attacks) = (0, 0);
                let mut parts = Vec::with_capacity(outcome.introduced.len());
                for (id, relation) in &outcome.introduced {
                    let key = match relation {
                        Relation::Attack => {
                            attacks += 1;
                            if attacks == 1 {
                                "why_attack"
                            } else {
                                "why_attack_more"
                            }
                        }
                        _ => {
                            supports += 1;
                            if supports == 1 {
                                "why_support"
                            } else {
                                "why_support_more"
                            }
                        }
                    };
                    parts.push(t.fill(key, text_of(id), outcome.stance, &mut rng));
                }
                parts.join(" ")
            }
        }
    }

    /// Applies and renders in one step.
    pub fn respond(&self, state: &DialogueState, act: &SpeechAct, turn: u64) -> Result<(DialogueState, SystemResponse), DialogueError> {
        let (next, outcome) = self.apply_move(state, act)?;
        let text = self.render(&outcome, turn);
        Ok((next, SystemResponse { text, outcome }))
    }

    /// Every violated state invariant, empty when the state is consistent.
    pub fn check_invariants(&self, state: &DialogueState) -> Vec<String> {
        let mut problems = Vec::new();
        let g = &self.graph;
        if !g.contains(&state.current) {
            problems.push(format!("current {:?} not in graph", state.current));
            return problems;
        }
        if state.rejected.contains(&state.current) {
            problems.push("current node is rejected".into());
        }
        if state.displayed != self.live_children(&state.current, &state.rejected) {
            problems.push("displayed list differs from the live children of the current node".into());
        }
        for r in &state.rejected {
            if !g.contains(r) {
                problems.push(format!("rejected {r:?} not in graph"));
            } else if !g.descendants(r).iter().all(|d| state.rejected.contains(d)) {
                problems.push(format!("rejection of {r:?} not closed under descendants"));
            }
        }
        if state.rejected.contains(g.root_id()) {
            problems.push("root is rejected".into());
        }
        if state.preferences.keys().any(|k| !g.contains(k)) {
            problems.push("preference on unknown node".into());
        }
        let expected = self.compute_stance(state);
        if expected.strengths != state.strengths || expected.stance != state.stance {
            problems.push("strengths are stale".into());
        }
        if !(0.0..=1.0).contains(&state.stance) || state.strengths.values().any(|s| !(0.0..=1.0).contains(s)) {
            problems.push("strength outside [0, 1]".into());
        }
        if state.strengths.keys().any(|k| state.rejected.contains(k)) {
            problems.push("rejected node has a strength".into());
        }
        problems
    }

    pub fn tree_view(&self, state: &DialogueState) -> TreeView {
        let nodes = self
            .graph
            .nodes()
            .iter()
            .map(|n| TreeNodeView {
                id: n.id.clone(),
                text: n.text.clone(),
                relation: n.relation,
                parent: n.parent.clone(),
                children: n.children.clone(),
                weight: n.weight,
                strength: state.strengths.get(&n.id).copied(),
                rejected: state.rejected.contains(&n.id),
                preferences: state.preferences.get(&n.id).copied().unwrap_or(0),
                current: n.id == state.current,
                displayed: state.displayed.contains(&n.id),
            })
            .collect();
        TreeView {
            topic: self.graph.topic.clone(),
            root: self.graph.root_id().to_owned(),
            current: state.current.clone(),
            stance: state.stance,
            nodes,
        }
    }
}
