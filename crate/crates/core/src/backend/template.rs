//! Prompt templates with `{name}` placeholders.
//!
//! `{{` and `}}` render as literal braces. A `{` that does not open an
//! identifier placeholder is kept verbatim.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::TemplateError;

pub const NARRATIVE: &str = "narrative";
pub const PLAN_PARSE: &str = "plan_parse";
pub const RETHINK: &str = "rethink";
pub const MODE_CHOICE: &str = "mode_choice";
pub const DIRECT_PLAN: &str = "direct_plan";

const BUILTIN: &[(&str, &str, &str)] = &[
    (
        NARRATIVE,
        include_str!("../../templates/narrative.system.txt"),
        include_str!("../../templates/narrative.user.txt"),
    ),
    (
        PLAN_PARSE,
        include_str!("../../templates/plan_parse.system.txt"),
        include_str!("../../templates/plan_parse.user.txt"),
    ),
    (RETHINK, include_str!("../../templates/rethink.system.txt"), include_str!("../../templates/rethink.user.txt")),
    (
        MODE_CHOICE,
        include_str!("../../templates/mode_choice.system.txt"),
        include_str!("../../templates/mode_choice.user.txt"),
    ),
    (
        DIRECT_PLAN,
        include_str!("../../templates/direct_plan.system.txt"),
        include_str!("../../templates/direct_plan.user.txt"),
    ),
];

const SYSTEM_MARKER: &str = "@@system";
const USER_MARKER: &str = "@@user";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub system_text: String,
    pub user_text: String,
}

/// A template after substitution, ready for a backend.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prompt {
    pub template: String,
    pub system: String,
    pub user: String,
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

fn tokenize(text: &str) -> Vec<Piece<'_>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut lit_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push(Piece::Literal(&text[lit_start..i + 1]));
                i += 2;
                lit_start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push(Piece::Literal(&text[lit_start..i + 1]));
                i += 2;
                lit_start = i;
            }
            b'{' => {
                let rest = &bytes[i + 1..];
                let len = rest.iter().take_while(|b| b.is_ascii_alphanumeric() || **b == b'_').count();
                let starts_ok = rest.first().is_some_and(|b| b.is_ascii_alphabetic() || *b == b'_');
                if starts_ok && rest.get(len) == Some(&b'}') {
                    out.push(Piece::Literal(&text[lit_start..i]));
                    out.push(Piece::Placeholder(&text[i + 1..i + 1 + len]));
                    i += len + 2;
                    lit_start = i;
                } else {
                    i += 1;
                }
            }
            _ => i += 1,
        }
    }
    out.push(Piece::Literal(&text[lit_start..]));
    out
}

/// Placeholder names in order of first appearance.
pub fn placeholders(text: &str) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for piece in tokenize(text) {
        if let Piece::Placeholder(n) = piece {
            if !names.iter().any(|x| x == n) {
                names.push(n.to_string());
            }
        }
    }
    names
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        Self { name: name.into(), system_text: system_text.into(), user_text: user_text.into() }
    }

    /// Placeholders across system and user text.
    pub fn placeholders(&self) -> Vec<String> {
        let mut names = placeholders(&self.system_text);
        for n in placeholders(&self.user_text) {
            if !names.contains(&n) {
                names.push(n);
            }
        }
        names
    }

    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<Prompt, TemplateError> {
        let wanted = self.placeholders();
        for key in bindings.keys() {
            if !wanted.contains(key) {
                log::warn!("template {}: ignoring unknown binding {key:?}", self.name);
            }
        }
        Ok(Prompt {
            template: self.name.clone(),
            system: self.substitute(&self.system_text, bindings)?,
            user: self.substitute(&self.user_text, bindings)?,
        })
    }

    fn substitute(&self, text: &str, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(text.len());
        for piece in tokenize(text) {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Placeholder(n) => match bindings.get(n) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(TemplateError::MissingBinding { template: self.name.clone(), name: n.to_string() })
                    }
                },
            }
        }
        Ok(out)
    }
}

/// Named templates: built-in defaults, optionally overridden from a directory.
#[derive(Clone, Debug)]
pub struct TemplateSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, sys, user)| (name.to_string(), PromptTemplate::new(*name, *sys, *user)))
            .collect();
        Self { templates }
    }

    /// Reads `<dir>/<name>.txt` for each known template name. The file holds an
    /// `@@system` line, the system text, an `@@user` line and the user text.
    /// Missing files keep the built-in default.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for name in set.templates.keys().cloned().collect::<Vec<_>>() {
            let path = dir.join(format!("{name}.txt"));
            if !path.exists() {
                continue;
            }
            let bad = |reason: &str| TemplateError::BadOverride { path: path.clone(), reason: reason.to_string() };
            let text = std::fs::read_to_string(&path).map_err(|e| bad(&e.to_string()))?;
            let body = text.strip_prefix(SYSTEM_MARKER).ok_or_else(|| bad("must start with @@system"))?;
            let body = body.strip_prefix('\n').unwrap_or(body);
            let split = format!("\n{USER_MARKER}\n");
            let (system, user) = body.split_once(&split).ok_or_else(|| bad("missing @@user line"))?;
            let user = user.strip_suffix('\n').unwrap_or(user);
            set.templates.insert(name.clone(), PromptTemplate::new(name, system, user));
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Option<&PromptTemplate> {
        self.templates.get(name)
    }

    pub fn render(&self, name: &str, bindings: &BTreeMap<String, String>) -> Result<Prompt, TemplateError> {
        let t = self.templates.get(name).ok_or_else(|| TemplateError::MissingBinding {
            template: name.to_string(),
            name: "<template not found>".to_string(),
        })?;
        t.render(bindings)
    }
}

/// Convenience for building binding maps.
pub fn bindings<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
