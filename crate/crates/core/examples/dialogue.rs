//! Walks the argument tree with speech acts and watches stance change.

use std::sync::Arc;

use argdialog::dialogue::{marriage_graph, DialogueEngine, SpeechAct};

fn main() {
    let engine = DialogueEngine::new(Arc::new(marriage_graph())).with_seed(3);
    let mut state = engine.initial_state("demo");
    println!("initial stance {:.3}", state.stance);

    let script = [
        SpeechAct::why("MC"),
        SpeechAct::prefer("C1"),
        SpeechAct::reject("C3"),
        SpeechAct::level_up(),
        SpeechAct::stance(),
        SpeechAct::exit(),
    ];
    for (turn, act) in script.iter().enumerate() {
        println!("> {:?} {}", act.kind, act.argument.as_deref().unwrap_or(""));
        let (next, reply) = match engine.respond(&state, act, turn as u64) {
            Ok(r) => r,
            Err(e) => {
                println!("  refused: {e} ({}), state unchanged", e.code());
                continue;
            }
        };
        println!("  {}", reply.text);
        println!("  stance {:.3}, displayed {:?}", next.stance, next.displayed);
        assert!(engine.check_invariants(&next).is_empty());
        state = next;
    }

    match engine.respond(&state, &SpeechAct::stance(), 99) {
        Err(e) => println!("after exit: {} ({})", e, e.code()),
        Ok(_) => unreachable!(),
    }

    for n in engine.tree_view(&state).nodes {
        println!("{:>3} {:?} strength {:?} rejected {}", n.id, n.relation, n.strength.map(|s| (s * 1000.0).round() / 1000.0), n.rejected);
    }
}
