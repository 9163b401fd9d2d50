//! Two-stage intent training on top of a frozen similarity model, then
//! classification of new utterances.

use std::sync::Arc;

use argdialog::argsim::{ArgSimConfig, ArgSimModel, StsTrainConfig};
use argdialog::intent::{accuracy_of, IntentConfig, IntentLabels, IntentModel, IntentPredictor, IntentTrainConfig};
use argdialog::synthetic::{keyword_intents, lexical_sts, synthetic_vocabulary};
use argdialog::text::Vocabulary;

fn main() {
    let vocab = Vocabulary::from_tokens(synthetic_vocabulary());
    let mut argsim = ArgSimModel::new(ArgSimConfig::toy(), vocab.clone(), None).unwrap();
    argsim.train_sts(&lexical_sts(200, 0), &StsTrainConfig { epochs: 2, ..StsTrainConfig::toy() }).unwrap();
    let argsim = Arc::new(argsim);

    let (train, test) = keyword_intents(10, 10, 0);
    let labels = IntentLabels::from_examples(&train).unwrap();
    let mut model = IntentModel::new(IntentConfig::toy(), vocab, labels, Some(argsim)).unwrap();
    let report = model.train_two_stage(&train, &IntentTrainConfig::toy()).unwrap();

    println!("stage 1 ({} epochs, encoder frozen): {:.3?}", report.stage1_epochs, report.stage1_losses);
    println!("stage 2 ({} epochs, all trainable): {:.3?}", report.stage2_epochs, report.stage2_losses);
    println!("encoder untouched by stage 1: {}", report.encoder_before == report.encoder_after_stage1);
    println!("train accuracy {:.3}, test accuracy {:.3}", report.train_accuracy, accuracy_of(&model, &test).unwrap());

    for text in ["why now please", "finish now please", "reject this argument"] {
        let (label, p) = model.predict(text).unwrap();
        println!("{text:>24} -> {label} ({p:.2})");
    }
}
