//! Natural-language understanding for an argumentative dialogue system.
//!
//! Two models read each user utterance: an intent classifier decides which
//! of the six dialogue moves the user made, and a sentence-similarity
//! model picks the displayed argument the utterance refers to. The
//! [`dialogue`] module applies the move to an argument tree and words the
//! reply. Everything runs on the small autodiff engine in [`tensor`].

pub mod argsim;
pub mod dialogue;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod intent;
pub mod synthetic;
pub mod tensor;
pub mod text;

pub use error::{ModelError, Result};
