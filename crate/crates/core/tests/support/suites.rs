//! Criterion-sized checks shared by the crate tests and the acceptance run.
//! Every function returns the measured quantity; callers compare it with
//! the threshold.

use std::sync::Arc;

use argdialog::argsim::{ArgSimConfig, ArgSimModel, StsTrainConfig};
use argdialog::dialogue::{DialogueEngine, MoveKind, SpeechAct};
use argdialog::encoders::{
    AttentionConfig, BiLstm, InnerAttention, LayerNorm, Linear, LstmCell, Mode, TransformerConfig, TransformerEncoder, ViewAggregation,
};
use argdialog::intent::{IntentConfig, IntentLabels, IntentModel};
use argdialog::synthetic::INTENT_KEYWORDS;
use argdialog::tensor::Tensor;
use argdialog::text::BasicTokenizer;
use rand::seq::SliceRandom;
use rand::Rng;

use super::*;

pub const INSTANCES: u64 = 20;

fn worst_over_instances(mut one: impl FnMut(u64) -> f64) -> f64 {
    (0..INSTANCES).map(&mut one).fold(0.0, f64::max)
}

/// Worst relative error of each primitive over 20 random inputs.
pub fn op_gradient_errors() -> Vec<(&'static str, f64)> {
    type Op = Box<dyn Fn(&[Tensor]) -> Tensor>;
    let cases: Vec<(&'static str, Vec<Vec<usize>>, Op)> = vec![
        ("matmul", vec![vec![3, 4], vec![4, 2]], Box::new(|x| x[0].matmul(&x[1]).unwrap())),
        ("add", vec![vec![2, 3], vec![2, 3]], Box::new(|x| x[0].add(&x[1]).unwrap())),
        ("sub", vec![vec![2, 3], vec![2, 3]], Box::new(|x| x[0].sub(&x[1]).unwrap())),
        ("mul", vec![vec![2, 3], vec![2, 3]], Box::new(|x| x[0].mul(&x[1]).unwrap())),
        ("add_bias", vec![vec![3, 4], vec![4]], Box::new(|x| x[0].add_bias(&x[1]).unwrap())),
        ("mul_row", vec![vec![3, 4], vec![4]], Box::new(|x| x[0].mul_row(&x[1]).unwrap())),
        ("scale", vec![vec![5]], Box::new(|x| x[0].scale(-1.7))),
        ("tanh", vec![vec![2, 3]], Box::new(|x| x[0].tanh())),
        ("sigmoid", vec![vec![2, 3]], Box::new(|x| x[0].sigmoid())),
        ("gelu", vec![vec![2, 3]], Box::new(|x| x[0].gelu())),
        ("softmax_rows", vec![vec![3, 4]], Box::new(|x| x[0].softmax(1).unwrap())),
        ("softmax_columns", vec![vec![3, 4]], Box::new(|x| x[0].softmax(0).unwrap())),
        ("layer_norm", vec![vec![3, 5]], Box::new(|x| x[0].layer_norm(1e-12))),
        ("concat_rows", vec![vec![2, 3], vec![1, 3]], Box::new(|x| Tensor::concat(x, 0).unwrap())),
        ("concat_columns", vec![vec![2, 3], vec![2, 2]], Box::new(|x| Tensor::concat(x, 1).unwrap())),
        ("narrow", vec![vec![4, 3]], Box::new(|x| x[0].narrow(0, 1, 2).unwrap())),
        ("row", vec![vec![4, 3]], Box::new(|x| x[0].row(2).unwrap())),
        ("gather_rows", vec![vec![5, 3]], Box::new(|x| x[0].gather_rows(&[4, 1, 1, 0], None).unwrap())),
        ("transpose", vec![vec![2, 3]], Box::new(|x| x[0].transpose().unwrap())),
        ("reshape", vec![vec![2, 3]], Box::new(|x| x[0].reshape(&[3, 2]).unwrap())),
        ("flatten", vec![vec![2, 3]], Box::new(|x| x[0].flatten())),
        ("sum", vec![vec![2, 3]], Box::new(|x| x[0].sum())),
        ("mean", vec![vec![2, 3]], Box::new(|x| x[0].mean())),
        ("mean_axis_rows", vec![vec![3, 4]], Box::new(|x| x[0].mean_axis(0).unwrap())),
        ("mean_axis_columns", vec![vec![3, 4]], Box::new(|x| x[0].mean_axis(1).unwrap())),
        ("dropout", vec![vec![4, 4]], Box::new(|x| x[0].dropout(0.3, true, &mut rng(9)).unwrap())),
        ("cross_entropy", vec![vec![6]], Box::new(|x| x[0].softmax(0).unwrap().cross_entropy(2).unwrap())),
        ("mse", vec![vec![1]], Box::new(|x| x[0].sum().mse(0.3).unwrap())),
        ("cosine_similarity", vec![vec![5], vec![5]], Box::new(|x| x[0].cosine_similarity(&x[1]).unwrap())),
    ];
    cases
        .into_iter()
        .map(|(name, shapes, op)| {
            let worst = worst_over_instances(|seed| {
                let mut r = rng(seed);
                let inputs: Vec<Tensor> = shapes.iter().map(|s| random_param(&mut r, s)).collect();
                gradient_error(&inputs, None, seed, || probe(&op(&inputs), seed))
            });
            (name, worst)
        })
        .collect()
}

fn toy_transformer() -> TransformerConfig {
    TransformerConfig { dropout: 0.0, ..TransformerConfig::toy() }
}

/// Worst relative error of each block and each full toy model over 20
/// random instances; large tensors are sampled at a few coordinates.
pub fn model_gradient_errors() -> Vec<(&'static str, f64)> {
    let vocab = toy_vocabulary();
    let mut out = Vec::new();

    out.push((
        "linear",
        worst_over_instances(|seed| {
            let mut r = rng(seed);
            let l = Linear::new(4, 3, &mut r);
            let x = random_param(&mut r, &[2, 4]);
            let mut p = l.params().tensors();
            p.push(x.clone());
            gradient_error(&p, None, seed, || probe(&l.forward(&x).unwrap(), seed))
        }),
    ));
    out.push((
        "layer_norm_block",
        worst_over_instances(|seed| {
            let mut r = rng(seed);
            let n = LayerNorm::new(5);
            for t in n.params().tensors() {
                t.assign(&(0..5).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap();
            }
            let x = random_param(&mut r, &[3, 5]);
            let mut p = n.params().tensors();
            p.push(x.clone());
            gradient_error(&p, None, seed, || probe(&n.forward(&x).unwrap(), seed))
        }),
    ));
    out.push((
        "lstm_cell",
        worst_over_instances(|seed| {
            let mut r = rng(seed);
            let cell = LstmCell::new(3, 8, &mut r);
            let (x, h, c) = (random_param(&mut r, &[1, 3]), random_param(&mut r, &[1, 8]), random_param(&mut r, &[1, 8]));
            let mut p = cell.params().tensors();
            p.extend([x.clone(), h.clone(), c.clone()]);
            gradient_error(&p, Some(6), seed, || {
                let (h2, c2) = cell.step(&x, &h, &c).unwrap();
                probe(&h2, seed).add(&probe(&c2, seed + 1)).unwrap()
            })
        }),
    ));
    out.push((
        "bilstm",
        worst_over_instances(|seed| {
            let mut r = rng(seed);
            let lstm = BiLstm::new(4, 8, 0.0, &mut r);
            let x = random_param(&mut r, &[3, 4]);
            let mut p = lstm.params().tensors();
            p.push(x.clone());
            gradient_error(&p, Some(6), seed, || probe(&lstm.forward(&x, &mut Mode::Eval).unwrap(), seed))
        }),
    ));
    for (name, aggregation) in [("inner_attention_concat", ViewAggregation::Concat), ("inner_attention_mean", ViewAggregation::Mean)] {
        out.push((
            name,
            worst_over_instances(|seed| {
                let mut r = rng(seed);
                let cfg = AttentionConfig { aggregation, ..AttentionConfig::toy() };
                let att = InnerAttention::new(6, cfg, &mut r).unwrap();
                let x = random_param(&mut r, &[4, 6]);
                let mut p = att.params().tensors();
                p.push(x.clone());
                gradient_error(&p, Some(6), seed, || probe(&att.forward(&x).unwrap().vector, seed))
            }),
        ));
    }
    out.push((
        "transformer_encoder",
        worst_over_instances(|seed| {
            let mut r = rng(seed);
            let enc = TransformerEncoder::new(toy_transformer(), vocab.len(), &mut r).unwrap();
            let text = random_sentence(&mut r, 5);
            let seq = vocab.encode(&text, &BasicTokenizer, 64);
            gradient_error(&enc.params().tensors(), Some(3), seed, || probe(&enc.forward(&seq, &mut Mode::Eval).unwrap(), seed))
        }),
    ));

    let labels = IntentLabels::new(INTENT_KEYWORDS.iter().map(|(l, _)| *l)).unwrap();
    let argsim = {
        let mut m = ArgSimModel::new(ArgSimConfig::toy(), vocab.clone(), None).unwrap();
        m.freeze();
        Arc::new(m)
    };
    for (name, use_bilstm, use_argsim) in
        [("intent_model", true, true), ("intent_model_no_bilstm", false, true), ("intent_model_no_argsim", true, false)]
    {
        out.push((
            name,
            worst_over_instances(|seed| {
                let mut r = rng(seed);
                let cfg =
                    IntentConfig { transformer: toy_transformer(), lstm_dropout: 0.0, use_bilstm, use_argsim, seed, ..IntentConfig::toy() };
                let model = IntentModel::new(cfg, vocab.clone(), labels.clone(), use_argsim.then(|| argsim.clone())).unwrap();
                // The zero-initialized head would block every upstream gradient.
                for (_, t) in model.head.params().iter() {
                    t.assign(&(0..t.len()).map(|_| r.gen_range(-0.5..0.5)).collect::<Vec<_>>()).unwrap();
                }
                let text = random_sentence(&mut r, 5);
                let target = r.gen_range(0..labels.len());
                let s = model.features(&text).unwrap();
                gradient_error(&model.params().tensors(), Some(3), seed, || {
                    model.logits(&text, s.as_ref(), &mut Mode::Eval).unwrap().softmax(0).unwrap().cross_entropy(target).unwrap()
                })
            }),
        ));
    }
    out.push((
        "argsim_model",
        worst_over_instances(|seed| {
            let mut r = rng(seed);
            let cfg =
                ArgSimConfig { transformer: toy_transformer(), lstm_dropout: 0.0, trainable_embeddings: true, seed, ..ArgSimConfig::toy() };
            let model = ArgSimModel::new(cfg, vocab.clone(), None).unwrap();
            let (a, b) = (random_sentence(&mut r, 5), random_sentence(&mut r, 5));
            let gold = r.gen_range(0.0..1.0);
            gradient_error(&model.params().tensors(), Some(3), seed, || {
                let u = model.encode(&a, &mut Mode::Eval).unwrap();
                let v = model.encode(&b, &mut Mode::Eval).unwrap();
                u.cosine_similarity(&v).unwrap().mse(gold).unwrap()
            })
        }),
    ));
    out
}

/// Largest deviation from a valid distribution over random softmax
/// inputs, attention maps and classifier outputs. Negative entries count
/// as their magnitude.
pub fn normalization_error() -> f64 {
    let mut worst: f64 = 0.0;
    let mut check = |row: &[f64]| {
        let s: f64 = row.iter().sum();
        worst = worst.max((s - 1.0).abs());
        for &p in row {
            if p < 0.0 {
                worst = worst.max(-p);
            }
        }
    };
    let vocab = toy_vocabulary();
    for seed in 0..50 {
        let mut r = rng(seed);
        let rows = r.gen_range(1..6);
        let cols = r.gen_range(1..8);
        let scale = [1.0, 30.0, 700.0][seed as usize % 3];
        let x = Tensor::new((0..rows * cols).map(|_| scale * r.gen_range(-1.0..1.0)).collect(), &[rows, cols]).unwrap();
        let sm = x.softmax(1).unwrap().to_vec();
        for row in sm.chunks(cols) {
            check(row);
        }
        let att = InnerAttention::new(cols, AttentionConfig::toy(), &mut r).unwrap();
        let pooled = att.forward(&x).unwrap();
        for row in pooled.weights.to_vec().chunks(rows) {
            check(row);
        }
        let enc = TransformerEncoder::new(TransformerConfig::toy(), vocab.len(), &mut r).unwrap();
        let seq = vocab.encode(&random_sentence(&mut r, 8), &BasicTokenizer, 64);
        let (_, maps) = enc.forward_with_attention(&seq, &mut Mode::Eval).unwrap();
        for m in maps {
            let t = m.shape()[m.rank() - 1];
            for row in m.to_vec().chunks(t) {
                check(row);
            }
        }
    }
    let labels = IntentLabels::new(INTENT_KEYWORDS.iter().map(|(l, _)| *l)).unwrap();
    let model = IntentModel::new(IntentConfig { use_argsim: false, ..IntentConfig::toy() }, vocab, labels, None).unwrap();
    let mut r = rng(77);
    for (_, t) in model.head.params().iter() {
        t.assign(&(0..t.len()).map(|_| r.gen_range(-3.0..3.0)).collect::<Vec<_>>()).unwrap();
    }
    for _ in 0..50 {
        check(&model.classify(&random_sentence(&mut r, 8)).unwrap());
    }
    worst
}

/// A frozen toy similarity model trained briefly on word-overlap pairs.
pub fn trained_toy_argsim(pairs: usize, epochs: usize, seed: u64) -> ArgSimModel {
    let data = argdialog::synthetic::lexical_sts(pairs, seed);
    let mut model = ArgSimModel::new(ArgSimConfig::toy(), toy_vocabulary(), None).unwrap();
    model.train_sts(&data, &StsTrainConfig { epochs, seed, ..StsTrainConfig::toy() }).unwrap();
    model
}

/// Random moves, valid or not, over random trees. Every accepted move
/// must leave a state that passes the invariant checker and every
/// rejected one must leave the input state as it was. Returns the
/// number of accepted moves.
pub fn fuzz_moves(steps: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let (mut done, mut accepted) = (0, 0);
    while done < steps {
        let g = Arc::new(random_tree(&mut r, 30));
        let engine = DialogueEngine::new(g.clone());
        let mut state = engine.initial_state("fuzz");
        let ids: Vec<String> = g.nodes().iter().map(|n| n.id.clone()).chain(["ghost".to_owned()]).collect();
        for _ in 0..200 {
            done += 1;
            let kind = *MoveKind::ALL.choose(&mut r).unwrap();
            let argument = if r.gen_bool(0.9) == kind.takes_argument() { Some(ids.choose(&mut r).unwrap().clone()) } else { None };
            let act = SpeechAct { kind, argument };
            let before = state.clone();
            match engine.apply_move(&state, &act) {
                Ok((next, _)) => {
                    let problems = engine.check_invariants(&next);
                    if !problems.is_empty() {
                        return Err(format!("{act:?} from {before:?}: {problems:?}"));
                    }
                    state = next;
                    accepted += 1;
                }
                Err(_) if state == before => {}
                Err(e) => return Err(format!("{act:?} failed with {e} but changed the state")),
            }
            if state.terminated && r.gen_bool(0.5) {
                break;
            }
        }
    }
    Ok(accepted)
}

fn snapshot(params: &argdialog::tensor::ParamSet) -> Vec<Vec<u64>> {
    params.iter().map(|(_, t)| t.to_vec().iter().map(|v| v.to_bits()).collect()).collect()
}

fn frozen_argsim(vocab: &argdialog::text::Vocabulary) -> Arc<ArgSimModel> {
    let mut m = ArgSimModel::new(ArgSimConfig::toy(), vocab.clone(), None).unwrap();
    m.freeze();
    Arc::new(m)
}

pub struct Staging {
    pub stage1_bit_identical: bool,
    pub stage2_changed: bool,
    pub report_agrees: bool,
    pub batches_per_epoch: usize,
}

/// Two-stage training over exactly three mini-batches per epoch with
/// one epoch per stage. Encoder bits are compared directly and through
/// the report's hashes.
pub fn staging_check() -> Staging {
    let vocab = toy_vocabulary();
    let (data, _) = argdialog::synthetic::keyword_intents(4, 0, 1);
    let data = &data[..24];
    let labels = IntentLabels::from_examples(data).unwrap();
    let cfg = argdialog::intent::IntentTrainConfig {
        stage1_epochs: 1,
        stage2_epochs: Some(0),
        batch_size: 8,
        ..argdialog::intent::IntentTrainConfig::toy()
    };
    let batches_per_epoch = data.len().div_ceil(cfg.batch_size);
    let build = || IntentModel::new(IntentConfig::toy(), vocab.clone(), labels.clone(), Some(frozen_argsim(&vocab))).unwrap();

    let mut only_stage1 = build();
    let before = snapshot(&only_stage1.encoder_params());
    let task_before = snapshot(&only_stage1.task_params());
    let r1 = only_stage1.train_two_stage(data, &cfg).unwrap();
    let stage1_bit_identical = snapshot(&only_stage1.encoder_params()) == before && snapshot(&only_stage1.task_params()) != task_before;

    let mut both = build();
    assert_eq!(snapshot(&both.encoder_params()), before);
    let r2 = both.train_two_stage(data, &argdialog::intent::IntentTrainConfig { stage2_epochs: Some(1), ..cfg }).unwrap();
    let stage2_changed = snapshot(&both.encoder_params()) != before;
    let report_agrees = r2.encoder_before == r2.encoder_after_stage1
        && r2.encoder_after_stage1 != r2.encoder_after_stage2
        && r1.encoder_after_stage2 == r1.encoder_before;
    Staging { stage1_bit_identical, stage2_changed, report_agrees, batches_per_epoch }
}

/// Largest gradient magnitude found on any similarity-model parameter
/// after an intent loss backward pass, and whether its bits survive a
/// full two-stage training run.
pub fn frozen_argsim_check() -> (f64, bool) {
    let vocab = toy_vocabulary();
    let argsim = frozen_argsim(&vocab);
    let (data, _) = argdialog::synthetic::keyword_intents(2, 0, 4);
    let labels = IntentLabels::from_examples(&data).unwrap();
    let mut model = IntentModel::new(IntentConfig::toy(), vocab, labels, Some(argsim.clone())).unwrap();
    for (_, t) in model.head.params().iter() {
        t.assign(&vec![0.1; t.len()]).unwrap();
    }
    let frozen_bits = snapshot(&argsim.params());
    let mut worst: f64 = 0.0;
    let mut dropout = rng(5);
    for e in &data {
        let s = model.features(&e.text).unwrap();
        let logits = model.logits(&e.text, s.as_ref(), &mut Mode::Train(&mut dropout)).unwrap();
        let target = model.labels.id(&e.label).unwrap();
        logits.softmax(0).unwrap().cross_entropy(target).unwrap().backward().unwrap();
        for (_, t) in argsim.params().iter() {
            if let Some(g) = t.grad() {
                worst = worst.max(g.iter().fold(0.0, |m, v| m.max(v.abs())));
            }
        }
    }
    model.params().zero_grad();
    let cfg = argdialog::intent::IntentTrainConfig { stage2_epochs: Some(1), ..argdialog::intent::IntentTrainConfig::toy() };
    model.train_two_stage(&data, &cfg).unwrap();
    (worst, snapshot(&argsim.params()) == frozen_bits)
}

/// Train and test accuracy on the 60/60 keyword data with the toy
/// schedule and a trained frozen similarity model.
pub fn intent_toy_convergence(seed: u64) -> (f64, f64) {
    let (train, test) = argdialog::synthetic::keyword_intents(10, 10, seed);
    let argsim = Arc::new(trained_toy_argsim(200, 2, seed));
    let labels = IntentLabels::from_examples(&train).unwrap();
    let cfg = IntentConfig { seed, ..IntentConfig::toy() };
    let mut model = IntentModel::new(cfg, toy_vocabulary(), labels, Some(argsim)).unwrap();
    let report = model
        .train_two_stage(&train, &argdialog::intent::IntentTrainConfig { seed, ..argdialog::intent::IntentTrainConfig::toy() })
        .unwrap();
    (report.train_accuracy, argdialog::intent::accuracy_of(&model, &test).unwrap())
}

/// Held-out Spearman after eight toy epochs on 500 word-overlap pairs.
pub fn argsim_toy_spearman() -> f64 {
    let model = trained_toy_argsim(500, 8, 0);
    argdialog::eval::evaluate_sts(&model, &argdialog::synthetic::lexical_sts(300, 1)).unwrap()
}

/// The scripted walk over the four-node marriage fixture.
pub fn dialogue_trace() -> Result<(), String> {
    use argdialog::dialogue::{marriage_graph, DialogueError};
    let engine = DialogueEngine::new(Arc::new(marriage_graph()));
    let g = engine.graph().clone();
    let text = |id: &str| g.node(id).unwrap().text.clone();
    let s0 = engine.initial_state("trace");
    let ensure = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_owned()) };

    let (s1, why) = engine.respond(&s0, &SpeechAct::why("MC"), 0).map_err(|e| e.to_string())?;
    ensure(s1.displayed == ["C1", "C2", "C3"], "why lists C1, C2 and C3")?;
    for id in ["C1", "C2", "C3"] {
        ensure(why.text.contains(&text(id)), &format!("why mentions {id}"))?;
    }
    let introduced = |key: &str, id: &str| {
        engine.templates().phrases(key).iter().any(|p| {
            let lead = p.split("{argument}").next().unwrap();
            why.text.contains(&format!("{lead}{}", text(id)))
        })
    };
    ensure(introduced("why_support", "C1"), "C1 introduced as support")?;
    ensure(introduced("why_support_more", "C2"), "C2 introduced as further support")?;
    ensure(introduced("why_attack", "C3"), "C3 introduced as attack")?;
    let at = |t: &str| why.text.find(&text(t)).unwrap();
    ensure(at("C1") < at("C2") && at("C2") < at("C3"), "supports come before the attack")?;

    let (s2, _) = engine.respond(&s1, &SpeechAct::reject("C1"), 1).map_err(|e| e.to_string())?;
    ensure(s2.displayed == ["C2", "C3"], "C1 leaves the display")?;
    ensure(s2.rejected.iter().eq(["C1"].iter()), "only C1 is rejected")?;
    ensure(!s2.strengths.contains_key("C1"), "C1 carries no strength")?;
    let pruned = DialogueEngine::new(Arc::new(g.without_subtree("C1").unwrap())).initial_state("p");
    ensure(s2.stance == pruned.stance, "stance equals the pruned tree's")?;

    ensure(engine.apply_move(&s2, &SpeechAct::level_up()) == Err(DialogueError::AtRoot), "level_up at root fails")?;
    let (s3, _) = engine.respond(&s2, &SpeechAct::exit(), 2).map_err(|e| e.to_string())?;
    ensure(s3.terminated, "exit terminates")?;
    ensure(engine.apply_move(&s3, &SpeechAct::stance()) == Err(DialogueError::Terminated), "terminated session refuses moves")?;
    ensure(engine.check_invariants(&s3).is_empty(), "final state is valid")
}

/// The hand-computed three-node case and 100 random trees.
pub fn stance_oracle_agreement() -> Result<(), String> {
    let hand = r#"{"topic": "t", "nodes": [
        {"id": "r", "text": "x", "relation": "root", "weight": 0.5},
        {"id": "s", "text": "y", "relation": "support", "parent": "r", "weight": 0.6},
        {"id": "a", "text": "z", "relation": "attack", "parent": "r", "weight": 0.4}]}"#;
    let engine = DialogueEngine::new(Arc::new(argdialog::dialogue::parse_graph(hand).unwrap()));
    let got = engine.initial_state("h").stance;
    if (got - (0.5 + 0.18 - 0.08)).abs() > 1e-12 {
        return Err(format!("hand case gave {got}"));
    }
    for seed in 0..100 {
        let mut r = rng(1000 + seed);
        let g = Arc::new(random_tree(&mut r, 30));
        let engine = DialogueEngine::new(g.clone());
        let mut state = engine.initial_state("o");
        for n in g.nodes() {
            if r.gen_bool(0.3) {
                state.preferences.insert(n.id.clone(), r.gen_range(1..4));
            }
        }
        if let Some(c) = g.children(g.root_id()).first() {
            if r.gen_bool(0.5) {
                state.rejected.insert(c.clone());
                state.rejected.extend(g.descendants(c));
            }
        }
        let got = engine.compute_stance(&state).stance;
        let want = reference_strength(&g, g.root_id(), &state.rejected, &state.preferences);
        if (got - want).abs() > 1e-12 {
            return Err(format!("tree {seed}: {got} vs {want}"));
        }
    }
    Ok(())
}

/// `nearest_argument` against an explicit cosine loop, index for index.
pub fn nearest_argument_agreement(cases: usize) -> Result<(), String> {
    let model = ArgSimModel::new(ArgSimConfig::toy(), toy_vocabulary(), None).unwrap();
    let mut r = rng(11);
    for case in 0..cases {
        let utterance = random_sentence(&mut r, 6);
        let n = r.gen_range(1..6);
        let mut candidates: Vec<String> = (0..n).map(|_| random_sentence(&mut r, 6)).collect();
        if r.gen_bool(0.2) {
            candidates.push(candidates[0].clone());
        }
        if r.gen_bool(0.2) {
            candidates.push(utterance.clone());
        }
        let u = model.embed_sentence(&utterance).unwrap();
        let (mut best, mut best_score) = (0, f64::NEG_INFINITY);
        for (i, c) in candidates.iter().enumerate() {
            let s = brute_force_cosine(&u, &model.embed_sentence(c).unwrap());
            if s > best_score {
                (best, best_score) = (i, s);
            }
        }
        let (idx, score) = model.nearest_argument(&utterance, &candidates).unwrap();
        if idx != best || (score - best_score).abs() > 1e-12 {
            return Err(format!("case {case}: ({idx}, {score}) vs ({best}, {best_score})"));
        }
    }
    Ok(())
}

/// Accuracy, macro- and micro-F1 against the confusion-matrix oracle on
/// random label vectors.
pub fn metric_agreement(cases: u64) -> Result<(), String> {
    use argdialog::eval::{accuracy, macro_f1, micro_f1};
    for seed in 0..cases {
        let mut r = rng(seed);
        let n = r.gen_range(1..80);
        let classes = r.gen_range(1..7);
        let gold: Vec<usize> = (0..n).map(|_| r.gen_range(0..classes)).collect();
        let pred: Vec<usize> = gold.iter().map(|&g| if r.gen_bool(0.6) { g } else { r.gen_range(0..classes + 1) }).collect();
        let (acc, mf1, mif1) = reference_metrics(&pred, &gold);
        let got = (accuracy(&pred, &gold).unwrap(), macro_f1(&pred, &gold).unwrap(), micro_f1(&pred, &gold).unwrap());
        if (got.0 - acc).abs() > 1e-12 || (got.1 - mf1).abs() > 1e-12 || (got.2 - mif1).abs() > 1e-12 {
            return Err(format!("case {seed}: {got:?} vs {:?}", (acc, mf1, mif1)));
        }
    }
    Ok(())
}
