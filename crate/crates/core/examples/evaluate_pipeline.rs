//! Scores an intent predictor plus argument resolver on held-out topics
//! of the bundled user-study style corpus.

use argdialog::eval::{evaluate_pipeline, topic_split, write_user_study, KeywordOracle, LexicalResolver};
use argdialog::synthetic::{topic_graphs, user_study};

fn main() {
    let graphs = topic_graphs();
    let records = user_study(&graphs, 4, 0);
    println!("{} records; first two as JSON lines:", records.len());
    for line in write_user_study(&records[..2]).lines() {
        println!("  {line}");
    }

    println!("topic | intent F1 | similarity | overall");
    for g in &graphs {
        let split = topic_split(&records, &g.topic).unwrap();
        let report = evaluate_pipeline(&KeywordOracle::default(), &LexicalResolver, g, &split.test, Some(split.descriptor)).unwrap();
        println!("{}", report.table_row(&g.topic));
    }
}
