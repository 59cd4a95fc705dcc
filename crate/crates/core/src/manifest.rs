//! Difficulty-annotated dataset manifests.
//!
//! A manifest is a UTF-8 file holding one JSON object per line:
//!
//! ```text
//! {"id":"n01440764/0001.JPEG","label":"tench","prob_true":0.91,"latent":[0.1,-0.4]}
//! {"id":"n01440764/0002.JPEG","label":"tench","difficulty":0.35}
//! ```
//!
//! Each record carries exactly one of `prob_true` or `difficulty`; the other
//! is derived on load. Derived outputs of the pipeline add
//! `difficulty_smoothed`, `interval` and `center`. Any other key is rejected.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Difficulty of an item the classifier assigns `prob_true` on its true class.
pub fn difficulty(prob_true: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prob_true) {
        return Err(Error::domain(format!(
            "probability {prob_true} is outside [0, 1]"
        )));
    }
    Ok(1.0 - prob_true)
}

/// Which of the two mutually exclusive fields the record was written with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    ProbTrue,
    Difficulty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: String,
    pub label: String,
    pub prob_true: f64,
    pub difficulty: f64,
    /// Field serialized on write. The other one is recomputed on load, so
    /// keeping the source field makes load/write round trips bit-exact.
    pub annotation: Annotation,
    pub latent: Option<Vec<f64>>,
    pub path: Option<String>,
    pub difficulty_smoothed: Option<f64>,
    pub interval: Option<usize>,
    pub center: Option<String>,
}

impl Item {
    pub fn from_prob_true(
        id: impl Into<String>,
        label: impl Into<String>,
        prob_true: f64,
    ) -> Result<Self> {
        let difficulty = difficulty(prob_true)?;
        Ok(Self::bare(
            id.into(),
            label.into(),
            prob_true,
            difficulty,
            Annotation::ProbTrue,
        ))
    }

    pub fn from_difficulty(
        id: impl Into<String>,
        label: impl Into<String>,
        difficulty: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&difficulty) {
            return Err(Error::domain(format!(
                "difficulty {difficulty} is outside [0, 1]"
            )));
        }
        Ok(Self::bare(
            id.into(),
            label.into(),
            1.0 - difficulty,
            difficulty,
            Annotation::Difficulty,
        ))
    }

    fn bare(
        id: String,
        label: String,
        prob_true: f64,
        difficulty: f64,
        annotation: Annotation,
    ) -> Self {
        Item {
            id,
            label,
            prob_true,
            difficulty,
            annotation,
            latent: None,
            path: None,
            difficulty_smoothed: None,
            interval: None,
            center: None,
        }
    }

    pub fn with_latent(mut self, latent: Vec<f64>) -> Self {
        self.latent = Some(latent);
        self
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    fn to_record(&self) -> Record {
        let (prob_true, difficulty) = match self.annotation {
            Annotation::ProbTrue => (Some(self.prob_true), None),
            Annotation::Difficulty => (None, Some(self.difficulty)),
        };
        Record {
            id: self.id.clone(),
            label: self.label.clone(),
            prob_true,
            difficulty,
            latent: self.latent.clone(),
            path: self.path.clone(),
            difficulty_smoothed: self.difficulty_smoothed,
            interval: self.interval,
            center: self.center.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Original,
    Pool,
    Distilled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub items: Vec<Item>,
    pub role: Role,
    /// Shared latent dimension, 0 when the manifest carries no latents.
    pub latent_dim: usize,
}

impl Manifest {
    /// Builds a manifest and checks every invariant.
    pub fn new(items: Vec<Item>, role: Role) -> Result<Self> {
        let latent_dim = items
            .first()
            .and_then(|it| it.latent.as_ref())
            .map_or(0, Vec::len);
        let manifest = Manifest {
            items,
            role,
            latent_dim,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::validation(issues.join("; ")))
        }
    }

    fn issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.items.is_empty() {
            issues.push("manifest is empty".to_string());
            return issues;
        }
        let mut seen = HashSet::new();
        for (i, item) in self.items.iter().enumerate() {
            if !seen.insert(item.id.as_str()) {
                issues.push(format!("item {i}: duplicate id {:?}", item.id));
            }
            issues.extend(
                item_issues(item, self.latent_dim)
                    .into_iter()
                    .map(|m| format!("item {i}: {m}")),
            );
        }
        issues
    }

    /// Sorted distinct class labels.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.items.iter().map(|it| it.label.clone()).collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Items grouped by label, keeping manifest order inside each class.
    pub fn by_label(&self) -> BTreeMap<&str, Vec<&Item>> {
        let mut classes: BTreeMap<&str, Vec<&Item>> = BTreeMap::new();
        for item in &self.items {
            classes.entry(item.label.as_str()).or_default().push(item);
        }
        classes
    }

    pub fn class_items(&self, label: &str) -> Vec<&Item> {
        self.items.iter().filter(|it| it.label == label).collect()
    }

    /// JSON-lines text of the manifest, one record per line with a trailing newline.
    pub fn to_jsonl(&self) -> Result<String> {
        self.validate()?;
        let mut out = String::new();
        for item in &self.items {
            let line = serde_json::to_string(&item.to_record())
                .map_err(|e| Error::validation(format!("cannot serialize {:?}: {e}", item.id)))?;
            writeln!(out, "{line}").expect("writing to a String cannot fail");
        }
        Ok(out)
    }
}

fn item_issues(item: &Item, latent_dim: usize) -> Vec<String> {
    let mut issues = Vec::new();
    if !(0.0..=1.0).contains(&item.difficulty) {
        issues.push(format!("difficulty {} is outside [0, 1]", item.difficulty));
    }
    if !(0.0..=1.0).contains(&item.prob_true) {
        issues.push(format!("prob_true {} is outside [0, 1]", item.prob_true));
    }
    match (&item.latent, latent_dim) {
        (None, 0) => {}
        (None, d) => issues.push(format!("missing latent, expected dimension {d}")),
        (Some(v), d) if v.len() != d => issues.push(format!(
            "latent dimension {} differs from manifest dimension {d}",
            v.len()
        )),
        (Some(v), _) if v.iter().any(|x| !x.is_finite()) => {
            issues.push("latent has a non-finite entry".into())
        }
        _ => {}
    }
    if let Some(s) = item.difficulty_smoothed {
        if !(0.0..=1.0).contains(&s) {
            issues.push(format!("difficulty_smoothed {s} is outside [0, 1]"));
        }
    }
    if let Some(k) = item.interval {
        if k > 9 {
            issues.push(format!("interval {k} is outside 0..=9"));
        }
    }
    issues
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prob_true: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    difficulty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    latent: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    difficulty_smoothed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interval: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<String>,
}

impl Record {
    fn into_item(self) -> std::result::Result<Item, String> {
        let mut item = match (self.prob_true, self.difficulty) {
            (Some(p), None) => Item::from_prob_true(self.id, self.label, p),
            (None, Some(d)) => Item::from_difficulty(self.id, self.label, d),
            (Some(_), Some(_)) => return Err("both prob_true and difficulty are present".into()),
            (None, None) => return Err("neither prob_true nor difficulty is present".into()),
        }
        .map_err(|e| e.to_string())?;
        if matches!(&self.latent, Some(v) if v.is_empty()) {
            return Err("latent must not be empty".into());
        }
        item.latent = self.latent;
        item.path = self.path;
        item.difficulty_smoothed = self.difficulty_smoothed;
        item.interval = self.interval;
        item.center = self.center;
        Ok(item)
    }
}

/// Parses manifest text, collecting every problem instead of stopping at the first.
pub fn parse_manifest(text: &str, role: Role) -> std::result::Result<Manifest, Vec<String>> {
    let mut issues = Vec::new();
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    let mut latent_dim: Option<usize> = None;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                issues.push(format!("line {lineno}: {e}"));
                continue;
            }
        };
        let item = match record.into_item() {
            Ok(item) => item,
            Err(e) => {
                issues.push(format!("line {lineno}: {e}"));
                continue;
            }
        };
        if !seen.insert(item.id.clone()) {
            issues.push(format!("line {lineno}: duplicate id {:?}", item.id));
        }
        let dim = item.latent.as_ref().map_or(0, Vec::len);
        match latent_dim {
            None => latent_dim = Some(dim),
            Some(expected) if expected != dim => issues.push(format!(
                "line {lineno}: latent dimension {dim} differs from {expected} on the first record"
            )),
            _ => {}
        }
        items.push(item);
    }

    if items.is_empty() && issues.is_empty() {
        issues.push("manifest is empty".to_string());
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    let manifest = Manifest {
        items,
        role,
        latent_dim: latent_dim.unwrap_or(0),
    };
    let rest = manifest.issues();
    if rest.is_empty() {
        Ok(manifest)
    } else {
        Err(rest)
    }
}

/// Reads and validates a manifest file, returning every problem found.
pub fn check_manifest(
    path: impl AsRef<Path>,
    role: Role,
) -> std::result::Result<Manifest, Vec<String>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    parse_manifest(&text, role)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    load_manifest_as(path, Role::Original)
}

pub fn load_manifest_as(path: impl AsRef<Path>, role: Role) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, role).map_err(|issues| Error::validation(issues.join("; ")))
}

pub fn write_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = manifest.to_jsonl()?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
