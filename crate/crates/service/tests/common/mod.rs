#![allow(dead_code)]

use std::sync::Arc;

use argdialog::dialogue::{marriage_graph, Templates};
use argdialog::eval::{KeywordOracle, LexicalResolver};
use argdialog_service::{Nlu, Pipeline, PipelineConfig};

pub fn keyword_nlu() -> Nlu {
    Nlu::new(Arc::new(KeywordOracle::default()), Arc::new(LexicalResolver), "keyword")
}

pub fn marriage_pipeline(nlu: Option<Nlu>) -> Pipeline {
    Pipeline::new(vec![marriage_graph()], Templates::default(), nlu, PipelineConfig::default()).unwrap()
}

pub const SCRIPT: [&str; 6] = [
    "What is my stance?",
    "Could we go back to the previous point?",
    "Why do you say that marriage undermines same-sex couples?",
    "I reject the idea that the existence of marriage undermines other methods of raising children is ridiculous",
    "I agree that marriage is seen as the best way to raise children",
    "I would like to finish now",
];
