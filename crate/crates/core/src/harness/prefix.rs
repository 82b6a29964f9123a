use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{jsonl, Error, Result};

/// One prompt: a page title and the first sentence of its description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixEntry {
    #[serde(rename = "id")]
    pub prefix_id: String,
    pub title: String,
    pub first_sentence: String,
    /// Reference document for the human row and relevance scores; defaults
    /// to the document whose id equals `prefix_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

impl PrefixEntry {
    pub fn new(id: &str, title: &str, first_sentence: &str) -> Self {
        Self {
            prefix_id: id.into(),
            title: title.into(),
            first_sentence: first_sentence.into(),
            doc_id: None,
        }
    }

    /// `title + ". " + first_sentence`.
    pub fn prefix_text(&self) -> String {
        format!("{}. {}", self.title, self.first_sentence)
    }

    pub fn reference_doc_id(&self) -> &str {
        self.doc_id.as_deref().unwrap_or(&self.prefix_id)
    }
}

/// Loads prefixes in file order, rejecting empty fields and duplicate ids.
pub fn load_prefixes(path: impl AsRef<Path>) -> Result<Vec<PrefixEntry>> {
    let entries: Vec<PrefixEntry> = jsonl::read(path)?;
    validate_prefixes(&entries)?;
    Ok(entries)
}

pub fn validate_prefixes(entries: &[PrefixEntry]) -> Result<()> {
    let mut seen = HashSet::new();
    for e in entries {
        if e.title.trim().is_empty() || e.first_sentence.trim().is_empty() {
            return Err(Error::Validation(format!(
                "prefix {:?} has an empty title or first sentence",
                e.prefix_id
            )));
        }
        if !seen.insert(e.prefix_id.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate prefix id {:?}",
                e.prefix_id
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_and_builds_prefix_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        std::fs::write(
            &p,
            r#"{"id":"whitey","title":"Whitey Bulger","first_sentence":"James Joseph Whitey Bulger Jr. was an Irish-American organized crime boss."}"#,
        )
        .unwrap();
        let entries = load_prefixes(&p).unwrap();
        assert!(entries[0]
            .prefix_text()
            .starts_with("Whitey Bulger. James Joseph"));
        assert_eq!(entries[0].reference_doc_id(), "whitey");
    }

    #[test]
    fn empty_file_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(load_prefixes(&p).unwrap().is_empty());
        let line = r#"{"id":"a","title":"T","first_sentence":"S."}"#;
        std::fs::write(&p, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(load_prefixes(&p), Err(Error::Validation(_))));
        std::fs::write(&p, r#"{"id":"a","title":"","first_sentence":"S."}"#).unwrap();
        assert!(matches!(load_prefixes(&p), Err(Error::Validation(_))));
        std::fs::write(&p, "{\"id\":\"a\"\n").unwrap();
        assert!(matches!(
            load_prefixes(&p),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
