use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendKind {
    Hashtag,
    Phrase,
}

impl TrendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendKind::Hashtag => "hashtag",
            TrendKind::Phrase => "phrase",
        }
    }
}

/// A trending hashtag or phrase.
///
/// Two names are the same trend when their identity keys match: the text is
/// trimmed, NFC-normalized and lowercased. The original (trimmed) spelling is
/// kept for display.
#[derive(Clone)]
pub struct TrendName {
    text: Arc<str>,
    key: Arc<str>,
}

impl TrendName {
    pub fn new(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::TrendName("empty after trimming".to_string()));
        }
        let key: String = trimmed.nfc().collect::<String>().to_lowercase();
        let key: Arc<str> = Arc::from(key);
        let text = if *key == *trimmed {
            key.clone()
        } else {
            Arc::from(trimmed)
        };
        Ok(TrendName { text, key })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn kind(&self) -> TrendKind {
        if self.text.starts_with('#') {
            TrendKind::Hashtag
        } else {
            TrendKind::Phrase
        }
    }
}

impl PartialEq for TrendName {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for TrendName {}

impl Hash for TrendName {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl fmt::Debug for TrendName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TrendName({:?})", self.text)
    }
}

impl fmt::Display for TrendName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}
