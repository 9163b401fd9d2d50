use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DialogueError;

/// Keys every template file must define.
pub const TEMPLATE_KEYS: [&str; 9] =
    ["stance", "exit", "level_up", "why_support", "why_support_more", "why_attack", "why_attack_more", "prefer", "reject"];

pub const PLACEHOLDERS: [&str; 2] = ["{argument}", "{stance}"];

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.json");

/// Phrase lists keyed by move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Templates {
    phrases: BTreeMap<String, Vec<String>>,
}

impl Default for Templates {
    fn default() -> Self {
        Templates::from_json(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }
}

impl Templates {
    pub fn from_json(document: &str) -> Result<Self, DialogueError> {
        let phrases: BTreeMap<String, Vec<String>> =
            serde_json::from_str(document).map_err(|e| DialogueError::InvalidTemplates(e.to_string()))?;
        let t = Templates { phrases };
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, DialogueError> {
        let text = std::fs::read_to_string(path).map_err(|e| DialogueError::InvalidTemplates(e.to_string()))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), DialogueError> {
        for key in TEMPLATE_KEYS {
            match self.phrases.get(key) {
                Some(list) if !list.is_empty() => {}
                _ => return Err(DialogueError::InvalidTemplates(format!("missing phrases for {key:?}"))),
            }
        }
        for (key, list) in &self.phrases {
            for phrase in list {
                let mut rest = phrase.clone();
                for p in PLACEHOLDERS {
                    rest = rest.replace(p, "");
                }
                if rest.contains('{') || rest.contains('}') {
                    return Err(DialogueError::InvalidTemplates(format!("unknown placeholder in {key:?}: {phrase:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn phrases(&self, key: &str) -> &[String] {
        self.phrases.get(key).map_or(&[], Vec::as_slice)
    }

    /// Picks a phrase for `key` and fills it in.
    pub fn fill<R: Rng>(&self, key: &str, argument: &str, stance: f64, rng: &mut R) -> String {
        let list = self.phrases(key);
        let phrase = &list[rng.gen_range(0..list.len())];
        phrase.replace("{argument}", argument.trim_end_matches(['.', ' '])).replace("{stance}", &format_stance(stance))
    }
}

pub fn format_stance(stance: f64) -> String {
    format!("{stance:.2}")
}
