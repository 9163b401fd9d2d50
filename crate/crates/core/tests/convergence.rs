mod support;

use support::suites::{argsim_toy_spearman, intent_toy_convergence};

#[test]
fn intent_model_learns_keyword_intents() {
    for seed in 0..3 {
        let (train, test) = intent_toy_convergence(seed);
        assert!(train >= 0.95 && test >= 0.90, "seed {seed}: train {train}, test {test}");
    }
}

#[test]
fn argsim_ranks_held_out_pairs() {
    let rho = argsim_toy_spearman();
    assert!(rho >= 0.8, "{rho}");
}
