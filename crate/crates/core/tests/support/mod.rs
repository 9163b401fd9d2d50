//! Shared oracles for the integration tests: central finite differences,
//! a recursive stance evaluator, confusion-matrix metrics and random
//! argument trees.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use argdialog::dialogue::{parse_graph, ArgumentGraph, Relation};
use argdialog::synthetic::synthetic_vocabulary;
use argdialog::tensor::Tensor;
use argdialog::text::{BasicTokenizer, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor, so near-zero gradients are compared absolutely.
pub const FLOOR: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_param(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::param((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), shape).unwrap()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// Worst relative error between backprop and central differences of the
/// scalar `f`. With `per_tensor = Some(n)` only `n` random coordinates of
/// every tensor are perturbed.
pub fn gradient_error(params: &[Tensor], per_tensor: Option<usize>, seed: u64, f: impl Fn() -> Tensor) -> f64 {
    for p in params {
        p.zero_grad();
    }
    f().backward().unwrap();
    let analytic: Vec<Vec<f64>> = params.iter().map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.len()])).collect();
    for p in params {
        p.zero_grad();
    }
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for (ti, p) in params.iter().enumerate() {
        let mut coords: Vec<usize> = (0..p.len()).collect();
        if let Some(n) = per_tensor {
            coords.shuffle(&mut r);
            coords.truncate(n);
        }
        for j in coords {
            let orig = p.get(j);
            p.update(|d| d[j] = orig + H);
            let up = f().item();
            p.update(|d| d[j] = orig - H);
            let down = f().item();
            p.update(|d| d[j] = orig);
            worst = worst.max(relative_error(analytic[ti][j], (up - down) / (2.0 * H)));
        }
    }
    worst
}

/// A scalar that depends on every element of `t` with a distinct weight.
pub fn probe(t: &Tensor, seed: u64) -> Tensor {
    let mut r = rng(seed ^ 0x5eed);
    let w = Tensor::new((0..t.len()).map(|_| r.gen_range(-1.0..1.0)).collect(), t.shape()).unwrap();
    t.mul(&w).unwrap().sum()
}

pub fn toy_vocabulary() -> Vocabulary {
    Vocabulary::build(&[synthetic_vocabulary().join(" ")], 1, &BasicTokenizer)
}

pub fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let words = synthetic_vocabulary();
    let n = rng.gen_range(1..=max_len);
    (0..n).map(|_| *words.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Random tree document: node `i` hangs below a uniformly chosen earlier
/// node, relations and weights are random.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> ArgumentGraph {
    let n = rng.gen_range(1..=max_nodes);
    let mut nodes = vec![serde_json::json!({
        "id": "n0", "text": "root claim", "relation": "root", "parent": null, "weight": rng.gen_range(0.0..=1.0)
    })];
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let relation = if rng.gen_bool(0.5) { "support" } else { "attack" };
        nodes.push(serde_json::json!({
            "id": format!("n{i}"),
            "text": format!("argument number {i}"),
            "relation": relation,
            "parent": format!("n{parent}"),
            "weight": rng.gen_range(0.0..=1.0),
        }));
    }
    parse_graph(&serde_json::json!({ "topic": "random", "nodes": nodes }).to_string()).unwrap()
}

/// Straight recursion over the definition: a node without live children
/// keeps its boosted weight; otherwise supporters add and attackers
/// subtract `strength · weight / live`, clipped to `[0, 1]`.
pub fn reference_strength(g: &ArgumentGraph, id: &str, rejected: &BTreeSet<String>, prefs: &BTreeMap<String, u32>) -> f64 {
    let weight = |id: &str| {
        let count = prefs.get(id).copied().unwrap_or(0) as f64;
        (g.node(id).unwrap().weight * (1.0 + 0.25 * count)).min(1.0)
    };
    let live: Vec<&String> = g.children(id).iter().filter(|c| !rejected.contains(*c)).collect();
    if live.is_empty() {
        return weight(id);
    }
    let k = live.len() as f64;
    let mut total = weight(id);
    for c in live {
        let sign = match g.node(c).unwrap().relation {
            Relation::Attack => -1.0,
            _ => 1.0,
        };
        total += sign * reference_strength(g, c, rejected, prefs) * weight(c) / k;
    }
    total.clamp(0.0, 1.0)
}

/// Accuracy and macro-F1 from an explicit confusion matrix over the
/// union of gold and predicted labels.
pub fn reference_metrics(pred: &[usize], gold: &[usize]) -> (f64, f64, f64) {
    let labels: BTreeSet<usize> = pred.iter().chain(gold).copied().collect();
    let idx: BTreeMap<usize, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let n = labels.len();
    let mut m = vec![vec![0usize; n]; n];
    for (p, g) in pred.iter().zip(gold) {
        m[idx[g]][idx[p]] += 1;
    }
    let correct: usize = (0..n).map(|i| m[i][i]).sum();
    let accuracy = correct as f64 / pred.len() as f64;
    let mut f1s = Vec::new();
    for i in 0..n {
        let tp = m[i][i] as f64;
        let gold_i: usize = m[i].iter().sum();
        let pred_i: usize = (0..n).map(|r| m[r][i]).sum();
        let p = if pred_i == 0 { 0.0 } else { tp / pred_i as f64 };
        let r = if gold_i == 0 { 0.0 } else { tp / gold_i as f64 };
        f1s.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
    }
    let macro_f1 = f1s.iter().sum::<f64>() / n as f64;
    // Single-label micro-F1 equals accuracy.
    (accuracy, macro_f1, accuracy)
}

/// Spearman for tie-free data: `1 − 6 Σd² / (n(n²−1))`.
pub fn rank_difference_spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in order.iter().enumerate() {
            r[i] = pos as f64 + 1.0;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

pub fn brute_force_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

pub mod suites;
