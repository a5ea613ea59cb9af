//! Prompt templates as data, with byte-stable rendering.
//!
//! Templates live as plain text files under `data/prompts/` and are
//! embedded into the binary; [`PromptRegistry::from_dir`] loads overrides
//! from disk instead.  Placeholders are `{name}` with snake-case names.
//! Rendering substitutes each placeholder exactly once and never rescans
//! substituted values, so slot text containing braces is safe.

use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template:?} needs slot {slot:?}")]
    MissingSlot { template: String, slot: String },
}

/// Built-in template ids, each embedded from `data/prompts/<id>.txt`.
const BUILTIN: &[(&str, &str)] = &[
    ("story_gen", include_str!("../data/prompts/story_gen.txt")),
    ("story_probe", include_str!("../data/prompts/story_probe.txt")),
    ("time_extract", include_str!("../data/prompts/time_extract.txt")),
    ("tg_construct", include_str!("../data/prompts/tg_construct.txt")),
    ("tg_construct_ordinal", include_str!("../data/prompts/tg_construct_ordinal.txt")),
    ("tg_verify", include_str!("../data/prompts/tg_verify.txt")),
    ("cot_demo", include_str!("../data/prompts/cot_demo.txt")),
    ("cot_query", include_str!("../data/prompts/cot_query.txt")),
];

#[derive(Debug, Clone)]
pub struct PromptRegistry {
    templates: BTreeMap<String, String>,
}

impl PromptRegistry {
    /// The embedded template set.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(id, body)| (id.to_string(), normalize(body)))
            .collect();
        PromptRegistry { templates }
    }

    /// Load `*.txt` files from a directory (file stem becomes the id) on
    /// top of the built-ins, so a partial directory overrides selectively.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut registry = Self::builtin();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                let body = std::fs::read_to_string(&path)?;
                registry.templates.insert(stem.to_string(), normalize(&body));
            }
        }
        Ok(registry)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.templates.keys().map(|s| s.as_str()).collect()
    }

    pub fn body(&self, id: &str) -> Result<&str, PromptError> {
        self.templates
            .get(id)
            .map(|s| s.as_str())
            .ok_or_else(|| PromptError::UnknownTemplate(id.to_string()))
    }

    /// Placeholder names required by a template, in order of appearance.
    pub fn slots(&self, id: &str) -> Result<Vec<String>, PromptError> {
        let body = self.body(id)?;
        let mut slots = Vec::new();
        scan(body, |piece| {
            if let Piece::Slot(name) = piece {
                if !slots.iter().any(|s| s == name) {
                    slots.push(name.to_string());
                }
            }
        });
        Ok(slots)
    }

    /// Render a template.  Every placeholder must be covered by `slots`;
    /// substituted values are emitted verbatim, never rescanned.
    pub fn render(
        &self,
        id: &str,
        slots: &BTreeMap<String, String>,
    ) -> Result<String, PromptError> {
        let body = self.body(id)?;
        let mut out = String::with_capacity(body.len());
        let mut missing = None;
        scan(body, |piece| match piece {
            Piece::Text(text) => out.push_str(text),
            Piece::Slot(name) => match slots.get(name) {
                Some(value) => out.push_str(value),
                None => {
                    if missing.is_none() {
                        missing = Some(name.to_string());
                    }
                }
            },
        });
        match missing {
            Some(slot) => Err(PromptError::MissingSlot { template: id.to_string(), slot }),
            None => Ok(out),
        }
    }
}

/// Strip a single trailing newline that editors tend to append; template
/// content is otherwise byte-exact.
fn normalize(body: &str) -> String {
    body.strip_suffix('\n').unwrap_or(body).to_string()
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

/// Walk a template body, yielding literal text and `{slot}` names.  A brace
/// not introducing a well-formed snake-case placeholder is literal text.
fn scan<'a>(body: &'a str, mut emit: impl FnMut(Piece<'a>)) {
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let candidate = &rest[open + 1..];
        let close = candidate.find('}');
        let is_ident = |s: &str| {
            !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        };
        match close {
            Some(close) if is_ident(&candidate[..close]) => {
                if open > 0 {
                    emit(Piece::Text(&rest[..open]));
                }
                emit(Piece::Slot(&candidate[..close]));
                rest = &candidate[close + 1..];
            }
            _ => {
                emit(Piece::Text(&rest[..open + 1]));
                rest = candidate;
            }
        }
    }
    if !rest.is_empty() {
        emit(Piece::Text(rest));
    }
}
