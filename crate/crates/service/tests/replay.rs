mod common;

use std::sync::Arc;

use argdialog::dialogue::{marriage_graph, Templates};
use argdialog_service::{Pipeline, PipelineConfig, Service, ServiceError, Session, SessionStore};

fn scripted(service: &Service) -> String {
    let id = service.create_session(None).unwrap().session_id;
    for text in common::SCRIPT {
        let _ = service.utterance(&id, text);
    }
    id
}

#[test]
fn reload_replays_to_identical_state() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let (service, skipped) = Service::with_store(common::marriage_pipeline(Some(common::keyword_nlu())), store.clone()).unwrap();
    assert!(skipped.is_empty());
    let id = scripted(&service);
    let original = service.session(&id).unwrap();
    assert!(original.state.terminated);
    assert_eq!(original.events.len(), common::SCRIPT.len());

    let (reloaded, skipped) = Service::with_store(common::marriage_pipeline(Some(common::keyword_nlu())), store).unwrap();
    assert!(skipped.is_empty());
    let again = reloaded.session(&id).unwrap();
    assert_eq!(again, original);
    assert_eq!(again.state.stance.to_bits(), original.state.stance.to_bits());

    let engine = reloaded.pipeline().engine("marriage").unwrap();
    assert_eq!(again.replay(engine).unwrap(), original.state);
}

#[test]
fn same_script_same_log() {
    let a = Service::new(common::marriage_pipeline(Some(common::keyword_nlu())));
    let b = Service::new(common::marriage_pipeline(Some(common::keyword_nlu())));
    let (ia, ib) = (scripted(&a), scripted(&b));
    let strip =
        |s: Session| -> Vec<_> { s.events.into_iter().map(|e| (e.intent, e.act, e.response, e.stance_after.to_bits(), e.error)).collect() };
    assert_eq!(strip(a.session(&ia).unwrap()), strip(b.session(&ib).unwrap()));
}

#[test]
fn tampered_log_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let (service, _) = Service::with_store(common::marriage_pipeline(Some(common::keyword_nlu())), store.clone()).unwrap();
    let id = scripted(&service);
    let mut session = store.load(&id).unwrap();
    session.events[2].response = Some("something else".into());
    store.save(&session).unwrap();
    let err = Service::with_store(common::marriage_pipeline(Some(common::keyword_nlu())), store).unwrap_err();
    assert_eq!(err.code(), "replay_mismatch");
}

#[test]
fn other_configuration_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let (service, _) = Service::with_store(common::marriage_pipeline(Some(common::keyword_nlu())), store.clone()).unwrap();
    let id = scripted(&service);
    let config = PipelineConfig { seed: 9, ..PipelineConfig::default() };
    let pipeline = Pipeline::new(vec![marriage_graph()], Templates::default(), Some(common::keyword_nlu()), config).unwrap();
    let (reloaded, skipped) = Service::with_store(pipeline, store).unwrap();
    assert_eq!(skipped, [id.clone()]);
    assert!(matches!(reloaded.state(&id), Err(ServiceError::SessionNotFound(_))));
}

#[test]
fn store_rejects_path_like_ids() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    assert!(matches!(store.load("../x"), Err(ServiceError::SessionNotFound(_))));
    assert!(matches!(store.load("missing"), Err(ServiceError::SessionNotFound(_))));
}

#[test]
fn concurrent_turns_are_serialized() {
    let service = Arc::new(Service::new(common::marriage_pipeline(Some(common::keyword_nlu()))));
    let id = service.create_session(None).unwrap().session_id;
    let threads: Vec<_> = (0..8)
        .map(|t| {
            let (service, id) = (service.clone(), id.clone());
            std::thread::spawn(move || {
                for i in 0..25 {
                    let text = if (t + i) % 2 == 0 { "What is my stance?" } else { "Go back to the previous one" };
                    let _ = service.utterance(&id, text);
                }
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }
    let session = service.session(&id).unwrap();
    assert_eq!(session.events.len(), 200);
    assert!(session.events.iter().enumerate().all(|(i, e)| e.turn == i as u64));
    let engine = service.pipeline().engine("marriage").unwrap();
    assert_eq!(session.replay(engine).unwrap(), session.state);
}
