use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::DialogueError;

pub const DEFAULT_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Support,
    Attack,
    Root,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentNode {
    pub id: String,
    pub text: String,
    pub relation: Relation,
    pub parent: Option<String>,
    /// Document order.
    pub children: Vec<String>,
    pub weight: f64,
}

/// A validated argument tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgumentGraph {
    pub topic: String,
    nodes: Vec<ArgumentNode>,
    index: HashMap<String, usize>,
    root: usize,
}

#[derive(Deserialize)]
struct RawGraph {
    topic: String,
    nodes: Vec<RawNode>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawParent {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
struct RawNode {
    id: String,
    text: String,
    relation: Relation,
    #[serde(default)]
    parent: Option<RawParent>,
    #[serde(default)]
    weight: Option<f64>,
}

#[derive(Serialize)]
struct OutNode<'a> {
    id: &'a str,
    text: &'a str,
    relation: Relation,
    parent: Option<&'a str>,
    weight: f64,
}

#[derive(Serialize)]
struct OutGraph<'a> {
    topic: &'a str,
    nodes: Vec<OutNode<'a>>,
}

/// Parses and validates an argument-graph document.
pub fn parse_graph(document: &str) -> Result<ArgumentGraph, DialogueError> {
    let raw: RawGraph = serde_json::from_str(document).map_err(|e| DialogueError::InvalidDocument(e.to_string()))?;
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for n in raw.nodes {
        let parent = match n.parent {
            None => None,
            Some(RawParent::One(p)) => Some(p),
            Some(RawParent::Many(mut ps)) => match ps.len() {
                0 => None,
                1 => ps.pop(),
                _ => return Err(DialogueError::MultiParent(n.id)),
            },
        };
        nodes.push(ArgumentNode {
            id: n.id,
            text: n.text,
            relation: n.relation,
            parent,
            children: Vec::new(),
            weight: n.weight.unwrap_or(DEFAULT_WEIGHT),
        });
    }
    ArgumentGraph::from_nodes(raw.topic, nodes)
}

impl ArgumentGraph {
    /// Validates `nodes` (children lists are rebuilt from the parents).
    pub fn from_nodes(topic: impl Into<String>, mut nodes: Vec<ArgumentNode>) -> Result<Self, DialogueError> {
        if nodes.is_empty() {
            return Err(DialogueError::InvalidDocument("graph has no nodes".into()));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(DialogueError::DuplicateId(n.id.clone()));
            }
            if !(0.0..=1.0).contains(&n.weight) {
                return Err(DialogueError::InvalidDocument(format!("weight of {:?} outside [0, 1]", n.id)));
            }
        }
        let roots: Vec<String> = nodes.iter().filter(|n| n.relation == Relation::Root).map(|n| n.id.clone()).collect();
        match roots.len() {
            0 => return Err(DialogueError::NoRoot),
            1 => {}
            _ => return Err(DialogueError::MultiRoot(roots)),
        }
        let root = index[&roots[0]];
        for n in &nodes {
            match (&n.parent, n.relation) {
                (Some(_), Relation::Root) => return Err(DialogueError::InvalidDocument(format!("root {:?} has a parent", n.id))),
                (None, Relation::Support | Relation::Attack) => return Err(DialogueError::Orphan(n.id.clone())),
                (Some(p), _) if !index.contains_key(p) => {
                    return Err(DialogueError::DanglingReference { id: n.id.clone(), parent: p.clone() })
                }
                _ => {}
            }
        }
        for n in nodes.iter_mut() {
            n.children.clear();
        }
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent.clone() {
                let child = nodes[i].id.clone();
                nodes[index[&p]].children.push(child);
            }
        }
        let g = ArgumentGraph { topic: topic.into(), nodes, index, root };
        let reached = g.descendants(g.root_id()).len() + 1;
        if reached != g.nodes.len() {
            let cyclic: BTreeSet<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
            let mut reach = g.descendants(g.root_id());
            reach.insert(g.root_id().to_owned());
            let left = cyclic.into_iter().filter(|id| !reach.contains(*id)).map(str::to_owned).collect();
            return Err(DialogueError::Cycle(left));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &ArgumentNode {
        &self.nodes[self.root]
    }

    pub fn root_id(&self) -> &str {
        &self.nodes[self.root].id
    }

    pub fn node(&self, id: &str) -> Option<&ArgumentNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    /// Nodes in document order.
    pub fn nodes(&self) -> &[ArgumentNode] {
        &self.nodes
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn children(&self, id: &str) -> &[String] {
        self.node(id).map_or(&[], |n| n.children.as_slice())
    }

    /// Every node strictly below `id`.
    pub fn descendants(&self, id: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<&str> = self.children(id).iter().map(String::as_str).collect();
        while let Some(n) = queue.pop_front() {
            if out.insert(n.to_owned()) {
                queue.extend(self.children(n).iter().map(String::as_str));
            }
        }
        out
    }

    /// A copy without the subtree rooted at `id` (which must not be the root).
    pub fn without_subtree(&self, id: &str) -> Result<Self, DialogueError> {
        if id == self.root_id() {
            return Err(DialogueError::AtRoot);
        }
        let mut gone = self.descendants(id);
        gone.insert(id.to_owned());
        let nodes = self.nodes.iter().filter(|n| !gone.contains(&n.id)).cloned().collect();
        ArgumentGraph::from_nodes(self.topic.clone(), nodes)
    }

    pub fn to_json(&self) -> String {
        let out = OutGraph {
            topic: &self.topic,
            nodes: self
                .nodes
                .iter()
                .map(|n| OutNode { id: &n.id, text: &n.text, relation: n.relation, parent: n.parent.as_deref(), weight: n.weight })
                .collect(),
        };
        serde_json::to_string_pretty(&out).expect("graph serializes")
    }
}
