mod support;

use argdialog::argsim::{ArgSimConfig, ArgSimModel, SentencePair, StsTrainConfig};
use argdialog::encoders::Mode;
use argdialog::synthetic::lexical_sts;
use rand::seq::SliceRandom;
use support::suites::*;
use support::toy_vocabulary;

#[test]
fn stage_one_leaves_the_encoder_untouched() {
    let s = staging_check();
    assert_eq!(s.batches_per_epoch, 3);
    assert!(s.stage1_bit_identical);
    assert!(s.stage2_changed);
    assert!(s.report_agrees);
}

#[test]
fn frozen_similarity_model_gets_no_gradient() {
    let (worst, unchanged) = frozen_argsim_check();
    assert_eq!(worst, 0.0);
    assert!(unchanged);
}

/// Pairs that share all their words score 5; pairs with no common word
/// score 0.
fn shared_or_disjoint(n: usize, seed: u64) -> Vec<SentencePair> {
    let words = argdialog::synthetic::synthetic_vocabulary();
    let mut r = support::rng(seed);
    (0..n)
        .map(|i| {
            let pick: Vec<&str> = words.choose_multiple(&mut r, 6).copied().collect();
            let (a, b) = (pick[..3].join(" "), pick[3..].join(" "));
            if i % 2 == 0 {
                let mut shuffled = pick[..3].to_vec();
                shuffled.shuffle(&mut r);
                SentencePair::new(a, shuffled.join(" "), 5.0).unwrap()
            } else {
                SentencePair::new(a, b, 0.0).unwrap()
            }
        })
        .collect()
}

#[test]
fn sts_loss_halves() {
    let data = shared_or_disjoint(200, 3);
    let mut model = ArgSimModel::new(ArgSimConfig::toy(), toy_vocabulary(), None).unwrap();
    let report = model.train_sts(&data, &StsTrainConfig { epochs: 6, seed: 3, ..StsTrainConfig::toy() }).unwrap();
    assert!(model.is_frozen());
    let (first, last) = (report.epoch_losses[0], *report.epoch_losses.last().unwrap());
    assert!(last <= 0.5 * first, "{:?}", report.epoch_losses);
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let mut model = ArgSimModel::new(ArgSimConfig::toy(), toy_vocabulary(), None).unwrap();
    let before = model.params().fingerprint();
    model.train_sts(&lexical_sts(20, 0), &StsTrainConfig { epochs: 1, learning_rate: 0.0, ..StsTrainConfig::toy() }).unwrap();
    assert_eq!(model.params().fingerprint(), before);
}

#[test]
fn identical_pair_scored_five_has_no_loss() {
    let pair = SentencePair::new("apple river stone", "apple river stone", 5.0).unwrap();
    let mut model = ArgSimModel::new(ArgSimConfig::toy(), toy_vocabulary(), None).unwrap();
    let report = model.train_sts(&vec![pair; 16], &StsTrainConfig { epochs: 3, batch_size: 1, ..StsTrainConfig::toy() }).unwrap();
    assert!(report.steps <= 50);
    assert!(*report.epoch_losses.last().unwrap() < 1e-3, "{:?}", report.epoch_losses);
}

#[test]
fn sts_overfits_one_pair() {
    let pair = SentencePair::new("apple river stone", "cloud garden silver", 4.0).unwrap();
    let mut cfg = ArgSimConfig { lstm_dropout: 0.0, ..ArgSimConfig::toy() };
    cfg.transformer.dropout = 0.0;
    let mut model = ArgSimModel::new(cfg, toy_vocabulary(), None).unwrap();
    let before = (model.score_pair(&pair.sentence1, &pair.sentence2).unwrap() - 0.8).abs();
    let data = vec![pair.clone(); 8];
    model.train_sts(&data, &StsTrainConfig { epochs: 40, batch_size: 2, ..StsTrainConfig::toy() }).unwrap();
    let after = (model.score_pair(&pair.sentence1, &pair.sentence2).unwrap() - 0.8).abs();
    assert!(after < 1e-3, "{before} -> {after}");
}

#[test]
fn zeroed_lstm_branch_equals_disabled_branch() {
    let vocab = toy_vocabulary();
    let full = ArgSimModel::new(ArgSimConfig::toy(), vocab.clone(), None).unwrap();
    let ablated = ArgSimModel::new(ArgSimConfig { use_lstm_branch: false, ..ArgSimConfig::toy() }, vocab, None).unwrap();
    for (_, t) in full.lstm_params().iter() {
        t.assign(&vec![0.0; t.len()]).unwrap();
    }
    for text in ["apple river", "the stone garden of winter", "zephyr"] {
        let a = full.encode(text, &mut Mode::Eval).unwrap().to_vec();
        let b = ablated.encode(text, &mut Mode::Eval).unwrap().to_vec();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{text}");
        }
    }
}

#[test]
fn scripted_dialogue_trace() {
    dialogue_trace().unwrap();
}

#[test]
fn stance_agrees_with_oracle() {
    stance_oracle_agreement().unwrap();
}
