//! The k-shot protocol: balanced samples per seed, one model per
//! sample, mean and spread of test accuracy.

use argdialog::intent::{run_few_shot_protocol, sample_few_shot, FewShotRow, IntentConfig, IntentLabels, IntentModel, IntentTrainConfig};
use argdialog::synthetic::{keyword_intents, synthetic_vocabulary};
use argdialog::text::Vocabulary;

fn main() {
    let (pool, test) = keyword_intents(20, 10, 0);
    let labels = IntentLabels::from_examples(&pool).unwrap();
    let vocab = Vocabulary::from_tokens(synthetic_vocabulary());

    let sample = sample_few_shot(&pool, 5, 0).unwrap();
    for (label, idx) in &sample.selected {
        println!("{label:>9}: {idx:?}");
    }

    let seeds = [0, 1, 2];
    let mut row = FewShotRow { model: "Intent (no similarity)".into(), cells: Vec::new() };
    for k in [5, 10] {
        let cell = run_few_shot_protocol(&pool, &test, Some(k), &seeds, |subset, seed| {
            let cfg = IntentConfig { seed, use_argsim: false, ..IntentConfig::toy() };
            let mut m = IntentModel::new(cfg, vocab.clone(), labels.clone(), None)?;
            m.train_two_stage(subset, &IntentTrainConfig { seed, ..IntentTrainConfig::toy() })?;
            Ok(m)
        })
        .unwrap();
        row.cells.push(cell);
    }
    println!("{}", row.header());
    println!("{}", row.render());
}
