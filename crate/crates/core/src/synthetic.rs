//! Seeded toy corpora: keyword-marked intents, lexical-overlap sentence
//! pairs and templated user-study records over bundled topic graphs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::argsim::SentencePair;
use crate::dialogue::{parse_graph, ArgumentGraph, MoveKind};
use crate::encoders::seeded;
use crate::eval::{jaccard, Group, LabeledUtterance};
use crate::intent::IntentExample;

/// Marker word of every synthetic intent.
pub const INTENT_KEYWORDS: [(&str, &str); 6] =
    [("stance", "stance"), ("exit", "finish"), ("level_up", "return"), ("why", "why"), ("prefer", "prefer"), ("reject", "reject")];

const FILLER: [&str; 12] = ["please", "the", "now", "argument", "about", "this", "could", "you", "i", "would", "like", "to"];

const WORDS: [&str; 40] = [
    "apple", "river", "stone", "cloud", "garden", "silver", "music", "window", "forest", "candle", "bridge", "market", "winter", "paper",
    "ocean", "mirror", "engine", "letter", "castle", "meadow", "harbor", "tiger", "planet", "violet", "signal", "basket", "desert",
    "falcon", "lantern", "marble", "orchard", "pepper", "quartz", "saddle", "timber", "valley", "walnut", "yellow", "zephyr", "copper",
];

pub const TOPIC_GRAPHS: [&str; 3] = [
    include_str!("../data/topics/marriage.json"),
    include_str!("../data/topics/nuclear_weapons.json"),
    include_str!("../data/topics/video_games.json"),
];

/// The three bundled topic graphs: marriage, nuclear weapons, video games.
pub fn topic_graphs() -> Vec<ArgumentGraph> {
    TOPIC_GRAPHS.iter().map(|d| parse_graph(d).expect("bundled graph is valid")).collect()
}

/// The `i`-th filler frame and the slot where the marker goes. Lengths
/// and slots cycle so that every marker position is covered.
fn frame<R: Rng>(i: usize, rng: &mut R) -> (Vec<&'static str>, usize) {
    let n = 2 + i % 4;
    let words: Vec<&str> = (0..n).map(|_| *FILLER.choose(rng).expect("filler")).collect();
    (words, (i / 4) % (n + 1))
}

/// `per_class` utterances of each of the six intents for training and
/// for test. Every filler frame is used once per intent, so only the
/// marker word carries label information.
pub fn keyword_intents(per_class_train: usize, per_class_test: usize, seed: u64) -> (Vec<IntentExample>, Vec<IntentExample>) {
    let mut rng = seeded(seed);
    let mut make = |per_class: usize| {
        let mut out = Vec::with_capacity(per_class * INTENT_KEYWORDS.len());
        for i in 0..per_class {
            let (words, at) = frame(i + rng.gen_range(0..4), &mut rng);
            for (label, keyword) in INTENT_KEYWORDS {
                let mut w = words.clone();
                w.insert(at, keyword);
                out.push(IntentExample::new(w.join(" "), label));
            }
        }
        out
    };
    let train = make(per_class_train);
    let test = make(per_class_test);
    (train, test)
}

/// `n` pairs scored `5 · jaccard(words)`; the second sentence keeps a
/// random share of the first one's words and redraws the rest.
pub fn lexical_sts(n: usize, seed: u64) -> Vec<SentencePair> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(4..=7);
            let first: Vec<&str> = WORDS.choose_multiple(&mut rng, len).copied().collect();
            let keep = rng.gen_range(0.0..=1.0);
            let second: Vec<&str> =
                first.iter().map(|w| if rng.gen_bool(keep) { *w } else { *WORDS.choose(&mut rng).expect("word") }).collect();
            let (a, b) = (first.join(" "), second.join(" "));
            let score = 5.0 * jaccard(&a, &b);
            SentencePair::new(a, b, score).expect("score in range")
        })
        .collect()
}

/// Every word the synthetic generators can emit.
pub fn synthetic_vocabulary() -> Vec<&'static str> {
    let mut out: BTreeSet<&str> = FILLER.iter().chain(WORDS.iter()).copied().collect();
    out.extend(INTENT_KEYWORDS.iter().map(|(_, k)| *k));
    out.into_iter().collect()
}

const STANCE: [&str; 4] = [
    "What is my stance right now?",
    "Can you tell me my current stance?",
    "Where do I stand on this topic at the moment?",
    "Show me my stance please.",
];
const EXIT: [&str; 4] =
    ["I would like to finish.", "Let us end the conversation here.", "Goodbye, I want to stop now.", "I am done, please exit."];
const LEVEL_UP: [&str; 4] = [
    "Please return to the previous argument.",
    "Can we go back one level?",
    "Go back to the earlier claim please.",
    "I want to return to the argument before.",
];
const WHY: [&str; 3] =
    ["Please tell me more why {arg}.", "Why do people say that {arg}?", "Can you explain more about the claim that {arg}?"];
const PREFER: [&str; 3] = ["I think {arg}.", "I agree that {arg}.", "I prefer the point that {arg}."];
const REJECT: [&str; 3] = ["I reject the argument that {arg}.", "I do not believe that {arg}.", "I disagree that {arg}."];

/// `per_intent` records of every intent for each graph. Argument moves
/// refer to a random non-root node and list its siblings as candidates.
pub fn user_study(graphs: &[ArgumentGraph], per_intent: usize, seed: u64) -> Vec<LabeledUtterance> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    for g in graphs {
        let args: Vec<&str> = g.nodes().iter().filter(|n| n.parent.is_some()).map(|n| n.id.as_str()).collect();
        for i in 0..per_intent {
            for kind in MoveKind::ALL {
                let group = if i % 2 == 0 { Group::Native } else { Group::NonNative };
                let (text, ref_arg, candidates) = match kind {
                    MoveKind::Stance => (STANCE.choose(&mut rng).expect("phrase").to_string(), None, None),
                    MoveKind::Exit => (EXIT.choose(&mut rng).expect("phrase").to_string(), None, None),
                    MoveKind::LevelUp => (LEVEL_UP.choose(&mut rng).expect("phrase").to_string(), None, None),
                    _ => {
                        let id = *args.choose(&mut rng).expect("graph has arguments");
                        let node = g.node(id).expect("id from graph");
                        let parent = node.parent.as_deref().expect("non-root");
                        let list = match kind {
                            MoveKind::Why => &WHY[..],
                            MoveKind::Prefer => &PREFER[..],
                            _ => &REJECT[..],
                        };
                        let phrase = list.choose(&mut rng).expect("phrase");
                        let arg = node.text.trim_end_matches('.');
                        (phrase.replace("{arg}", arg), Some(id.to_owned()), Some(g.children(parent).to_vec()))
                    }
                };
                out.push(LabeledUtterance { text, intent: kind, ref_arg, topic: g.topic.clone(), group, candidates });
            }
        }
    }
    out
}

/// Maps user-study records to classifier examples.
pub fn intent_examples(records: &[LabeledUtterance]) -> Vec<IntentExample> {
    records.iter().map(|r| IntentExample::new(r.text.clone(), r.intent.name())).collect()
}
