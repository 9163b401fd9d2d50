//! Session service around the argdialog models: a pipeline from utterance
//! to dialogue move, replayable sessions persisted as JSON, an HTTP API
//! and the `argdialog` command line.

pub mod cli;
pub mod error;
pub mod http;
pub mod pipeline;
pub mod session;

pub use error::{ServiceError, ServiceResult};
pub use pipeline::{Nlu, Pipeline, PipelineConfig};
pub use session::{Event, Service, Session, SessionStore, StateView};
