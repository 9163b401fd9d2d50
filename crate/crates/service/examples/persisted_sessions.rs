//! Sessions written to disk are replayed on restart and land in the
//! same state, bit for bit.

use std::sync::Arc;

use argdialog::dialogue::Templates;
use argdialog::eval::{KeywordOracle, LexicalResolver};
use argdialog::synthetic::topic_graphs;
use argdialog_service::{Nlu, Pipeline, PipelineConfig, Service, SessionStore};

fn pipeline() -> Pipeline {
    let nlu = Nlu::new(Arc::new(KeywordOracle::default()), Arc::new(LexicalResolver), "keyword");
    let config = PipelineConfig { default_topic: Some("video_games".into()), ..PipelineConfig::default() };
    Pipeline::new(topic_graphs(), Templates::default(), Some(nlu), config).unwrap()
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();

    let (service, _) = Service::with_store(pipeline(), store.clone()).unwrap();
    let id = service.create_session(None).unwrap().session_id;
    for text in ["What is my stance?", "Why is that so?", "I would like to finish now"] {
        match service.utterance(&id, text) {
            Ok(r) => println!("{text:>28} -> {}", r.response_text),
            Err(e) => println!("{text:>28} -> error {}", e.code()),
        }
    }
    let before = service.session(&id).unwrap();
    drop(service);

    let (restarted, skipped) = Service::with_store(pipeline(), store).unwrap();
    let after = restarted.session(&id).unwrap();
    println!("reloaded {} session(s), skipped {:?}", restarted.list_sessions().len(), skipped);
    println!("identical after replay: {}", before == after);
    println!("stance bits {:016x} / {:016x}", before.state.stance.to_bits(), after.state.stance.to_bits());
}
