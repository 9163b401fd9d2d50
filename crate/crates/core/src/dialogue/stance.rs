use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::graph::{ArgumentGraph, Relation};

pub const PREFERENCE_BOOST: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceResult {
    pub stance: f64,
    /// Strength of every non-rejected node.
    pub strengths: BTreeMap<String, f64>,
}

/// Turns weights, preferences and rejections into node strengths.
pub trait StancePolicy: Send + Sync {
    fn evaluate(&self, graph: &ArgumentGraph, rejected: &BTreeSet<String>, preferences: &BTreeMap<String, u32>) -> StanceResult;
}

/// Clamped additive propagation. A node's strength is its effective
/// weight, plus the weighted strengths of its supporters, minus those of
/// its attackers; every child term is divided by the number of live
/// children and the result is clipped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedAdditive {
    pub preference_boost: f64,
}

impl Default for ClampedAdditive {
    fn default() -> Self {
        ClampedAdditive { preference_boost: PREFERENCE_BOOST }
    }
}

impl ClampedAdditive {
    pub fn effective_weight(&self, base: f64, preferred: u32) -> f64 {
        (base * (1.0 + self.preference_boost * f64::from(preferred))).min(1.0)
    }
}

impl StancePolicy for ClampedAdditive {
    fn evaluate(&self, graph: &ArgumentGraph, rejected: &BTreeSet<String>, preferences: &BTreeMap<String, u32>) -> StanceResult {
        let eff = |id: &str| {
            let n = graph.node(id).expect("id from graph");
            self.effective_weight(n.weight, preferences.get(id).copied().unwrap_or(0))
        };
        // Post-order over the live nodes.
        let mut order = Vec::new();
        let mut stack = vec![(graph.root_id(), false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
                continue;
            }
            stack.push((id, true));
            for c in graph.children(id).iter().rev() {
                if !rejected.contains(c) {
                    stack.push((c, false));
                }
            }
        }
        let mut strengths = BTreeMap::new();
        for id in order {
            let live: Vec<&String> = graph.children(id).iter().filter(|c| !rejected.contains(*c)).collect();
            let own = eff(id);
            let s = if live.is_empty() {
                own
            } else {
                let norm = 1.0 / live.len() as f64;
                let (mut support, mut attack) = (0.0, 0.0);
                for c in live {
                    let term = strengths[c.as_str()] * eff(c) * norm;
                    match graph.node(c).expect("child").relation {
                        Relation::Attack => attack += term,
                        _ => support += term,
                    }
                }
                (own + support - attack).clamp(0.0, 1.0)
            };
            strengths.insert(id.to_owned(), s);
        }
        StanceResult { stance: strengths[graph.root_id()], strengths }
    }
}
