//! Trains the sentence-similarity model on word-overlap pairs, reports
//! held-out Spearman and picks the closest argument for an utterance.

use argdialog::argsim::{ArgSimConfig, ArgSimModel, StsTrainConfig};
use argdialog::eval::evaluate_sts;
use argdialog::synthetic::{lexical_sts, synthetic_vocabulary};
use argdialog::text::Vocabulary;

fn main() {
    let train = lexical_sts(500, 0);
    let test = lexical_sts(300, 1);
    let vocab = Vocabulary::from_tokens(synthetic_vocabulary());
    let mut model = ArgSimModel::new(ArgSimConfig::toy(), vocab, None).unwrap();

    println!("untrained Spearman {:.3}", evaluate_sts(&model, &test).unwrap());
    let report = model.train_sts(&train, &StsTrainConfig::toy()).unwrap();
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        println!("epoch {epoch} loss {loss:.4}");
    }
    println!("held-out Spearman {:.3}", evaluate_sts(&model, &test).unwrap());

    let p = &test[0];
    println!(
        "{:?} vs {:?}: gold {:.2}, predicted {:.2}",
        p.sentence1,
        p.sentence2,
        p.score,
        model.score_pair(&p.sentence1, &p.sentence2).unwrap()
    );

    let candidates = ["apple river stone cloud", "garden silver music window", "forest candle bridge market"];
    let (best, cos) = model.nearest_argument("silver garden window", &candidates).unwrap();
    println!("closest candidate: {:?} (cosine {cos:.3})", candidates[best]);
}
