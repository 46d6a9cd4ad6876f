use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Opaque subject identifier taken from the recording manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubjectId(pub String);

impl SubjectId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SubjectId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Diagnostic class of a subject. Insomnia is the positive class for
/// precision and recall.
///
/// Class indices: control = 0, insomnia = 1. Prediction ties resolve to
/// index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Control,
    Insomnia,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Control, ClassLabel::Insomnia];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Control => 0,
            ClassLabel::Insomnia => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(ClassLabel::Control),
            1 => Some(ClassLabel::Insomnia),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Control => "control",
            ClassLabel::Insomnia => "insomnia",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown class label {0:?} (expected \"insomnia\" or \"control\")")]
pub struct ParseClassLabelError(pub String);

impl FromStr for ClassLabel {
    type Err = ParseClassLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "insomnia" | "ins" => Ok(ClassLabel::Insomnia),
            "control" | "healthy" | "n" => Ok(ClassLabel::Control),
            _ => Err(ParseClassLabelError(s.to_owned())),
        }
    }
}
