//! Sessions: event logs, JSON persistence and deterministic replay.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use argdialog::dialogue::{DialogueEngine, DialogueState, SpeechAct, TreeView};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};
use crate::pipeline::{Pipeline, UtteranceReply};

pub(crate) fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// One logged user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub turn: u64,
    pub timestamp: u64,
    pub utterance: String,
    pub intent: Option<String>,
    pub confidence: Option<f64>,
    pub act: Option<SpeechAct>,
    pub resolved_argument: Option<String>,
    pub scores: Vec<(String, f64)>,
    pub response: Option<String>,
    pub stance_after: f64,
    /// Error code when the turn failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub topic: String,
    pub created_at: u64,
    pub config_hash: String,
    pub state: DialogueState,
    pub events: Vec<Event>,
}

/// Client-facing snapshot of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub topic: String,
    pub turns: usize,
    #[serde(flatten)]
    pub state: DialogueState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub topic: String,
    pub created_at: u64,
    pub turns: usize,
    pub stance: f64,
    pub terminated: bool,
}

impl Session {
    pub fn view(&self) -> StateView {
        StateView { session_id: self.id.clone(), topic: self.topic.clone(), turns: self.events.len(), state: self.state.clone() }
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.id.clone(),
            topic: self.topic.clone(),
            created_at: self.created_at,
            turns: self.events.len(),
            stance: self.state.stance,
            terminated: self.state.terminated,
        }
    }

    /// Rebuilds the state from the logged acts and checks every response,
    /// stance and the final state against the log.
    pub fn replay(&self, engine: &DialogueEngine) -> ServiceResult<DialogueState> {
        let mismatch = |reason: String| ServiceError::ReplayMismatch { id: self.id.clone(), reason };
        let mut state = engine.initial_state(self.id.clone());
        for e in &self.events {
            let Some(act) = &e.act else {
                continue;
            };
            match (engine.respond(&state, act, e.turn), &e.error) {
                (Ok((next, response)), None) => {
                    if e.response.as_deref() != Some(response.text.as_str()) {
                        return Err(mismatch(format!("turn {} response differs", e.turn)));
                    }
                    if next.stance.to_bits() != e.stance_after.to_bits() {
                        return Err(mismatch(format!("turn {} stance differs", e.turn)));
                    }
                    state = next;
                }
                (Err(err), Some(code)) if err.code() == code => {}
                (Ok(_), Some(code)) => return Err(mismatch(format!("turn {} should fail with {code}", e.turn))),
                (Err(err), _) => return Err(mismatch(format!("turn {} failed with {}", e.turn, err.code()))),
            }
        }
        if state != self.state {
            return Err(mismatch("final state differs".into()));
        }
        Ok(state)
    }
}

/// One JSON file per session in a directory.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> ServiceResult<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> ServiceResult<PathBuf> {
        if !valid_id(id) {
            return Err(ServiceError::SessionNotFound(id.to_owned()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    /// Writes through a temporary file so a crash never leaves half a log.
    pub fn save(&self, session: &Session) -> ServiceResult<()> {
        let path = self.path(&session.id)?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(session)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> ServiceResult<Session> {
        let path = self.path(id)?;
        let bytes = std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ServiceError::SessionNotFound(id.to_owned()),
            _ => e.into(),
        })?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn load_all(&self) -> ServiceResult<Vec<Session>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("json") {
                out.push(serde_json::from_slice(&std::fs::read(&path)?)?);
            }
        }
        out.sort_by(|a: &Session, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        Ok(out)
    }

    pub fn delete(&self, id: &str) -> ServiceResult<()> {
        match std::fs::remove_file(self.path(id)?) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }
}

/// All live sessions over one pipeline. Turns within a session are
/// serialized by its lock; different sessions run in parallel.
#[derive(Debug)]
pub struct Service {
    pipeline: Arc<Pipeline>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    store: Option<SessionStore>,
}

impl Service {
    pub fn new(pipeline: Pipeline) -> Self {
        Service { pipeline: Arc::new(pipeline), sessions: RwLock::new(BTreeMap::new()), store: None }
    }

    /// Opens a persistent service and replays every stored session made
    /// under the same configuration. Sessions from another configuration
    /// are skipped and reported in the second return value.
    pub fn with_store(pipeline: Pipeline, store: SessionStore) -> ServiceResult<(Self, Vec<String>)> {
        let service = Service { pipeline: Arc::new(pipeline), sessions: RwLock::new(BTreeMap::new()), store: None };
        let mut skipped = Vec::new();
        {
            let mut map = service.sessions.write();
            for session in store.load_all()? {
                if session.config_hash != service.pipeline.config_hash() {
                    skipped.push(session.id);
                    continue;
                }
                let engine = service.pipeline.engine(&session.topic)?;
                session.replay(engine)?;
                map.insert(session.id.clone(), Arc::new(Mutex::new(session)));
            }
        }
        Ok((Service { store: Some(store), ..service }, skipped))
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    fn get(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.sessions.read().get(id).cloned().ok_or_else(|| ServiceError::SessionNotFound(id.to_owned()))
    }

    fn persist(&self, session: &Session) -> ServiceResult<()> {
        match &self.store {
            Some(store) => store.save(session),
            None => Ok(()),
        }
    }

    pub fn create_session(&self, topic: Option<&str>) -> ServiceResult<StateView> {
        let session = self.pipeline.new_session(uuid::Uuid::new_v4().to_string(), topic)?;
        self.persist(&session)?;
        let view = session.view();
        self.sessions.write().insert(session.id.clone(), Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn list_sessions(&self) -> Vec<SessionSummary> {
        let sessions: Vec<_> = self.sessions.read().values().cloned().collect();
        sessions.iter().map(|s| s.lock().summary()).collect()
    }

    pub fn session(&self, id: &str) -> ServiceResult<Session> {
        Ok(self.get(id)?.lock().clone())
    }

    pub fn state(&self, id: &str) -> ServiceResult<StateView> {
        Ok(self.get(id)?.lock().view())
    }

    pub fn tree(&self, id: &str) -> ServiceResult<TreeView> {
        let handle = self.get(id)?;
        let session = handle.lock();
        Ok(self.pipeline.engine(&session.topic)?.tree_view(&session.state))
    }

    pub fn log(&self, id: &str) -> ServiceResult<Vec<Event>> {
        Ok(self.get(id)?.lock().events.clone())
    }

    pub fn utterance(&self, id: &str, text: &str) -> ServiceResult<UtteranceReply> {
        let handle = self.get(id)?;
        let mut session = handle.lock();
        let reply = self.pipeline.handle_utterance(&mut session, text);
        self.persist(&session)?;
        reply
    }

    pub fn delete_session(&self, id: &str) -> ServiceResult<()> {
        self.sessions.write().remove(id).ok_or_else(|| ServiceError::SessionNotFound(id.to_owned()))?;
        if let Some(store) = &self.store {
            store.delete(id)?;
        }
        Ok(())
    }
}
