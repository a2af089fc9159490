//! Classification taxonomy shared by every stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Principle behind the likelihood comparison of an argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SentenceType {
    RE,
    PC,
    QU,
    SP,
    Undefined,
}

impl SentenceType {
    /// Table order: RE, PC, QU, SP, Undefined.
    pub const ALL: [SentenceType; 5] = [
        SentenceType::RE,
        SentenceType::PC,
        SentenceType::QU,
        SentenceType::SP,
        SentenceType::Undefined,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SentenceType::RE => "RE",
            SentenceType::PC => "PC",
            SentenceType::QU => "QU",
            SentenceType::SP => "SP",
            SentenceType::Undefined => "Undefined",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            SentenceType::RE => "Resource Allocation",
            SentenceType::PC => "Precondition",
            SentenceType::QU => "Quantity",
            SentenceType::SP => "Specificity",
            SentenceType::Undefined => "Undefined",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap_or(4)
    }
}

/// Direction of the reasoning: negative/positive crossed with simple/reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicCategory {
    NS,
    NR,
    PR,
    PS,
    Undefined,
}

impl LogicCategory {
    /// Table order: NS, NR, PR, PS, Undefined.
    pub const ALL: [LogicCategory; 5] = [
        LogicCategory::NS,
        LogicCategory::NR,
        LogicCategory::PR,
        LogicCategory::PS,
        LogicCategory::Undefined,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LogicCategory::NS => "NS",
            LogicCategory::NR => "NR",
            LogicCategory::PR => "PR",
            LogicCategory::PS => "PS",
            LogicCategory::Undefined => "Undefined",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            LogicCategory::NS => "Negative Simple",
            LogicCategory::NR => "Negative Reversed",
            LogicCategory::PR => "Positive Reversed",
            LogicCategory::PS => "Positive Simple",
            LogicCategory::Undefined => "Undefined",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap_or(4)
    }
}

/// Identification outcome for one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    AF,
    NAF,
    Unknown,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [Verdict::AF, Verdict::NAF, Verdict::Unknown];

    pub fn code(self) -> &'static str {
        match self {
            Verdict::AF => "AF",
            Verdict::NAF => "NAF",
            Verdict::Unknown => "Unknown",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Verdict::AF => 0,
            Verdict::NAF => 1,
            Verdict::Unknown => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognised {kind} label {value:?}")]
pub struct LabelError {
    pub kind: &'static str,
    pub value: String,
}

fn normalise_label(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace(['_', '-'], " ")
}

impl FromStr for SentenceType {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = normalise_label(s);
        Ok(match t.as_str() {
            "re" | "resource allocation" | "resource" => SentenceType::RE,
            "pc" | "precondition" => SentenceType::PC,
            "qu" | "quantity" | "quantitative" => SentenceType::QU,
            "sp" | "specificity" => SentenceType::SP,
            "" | "undefined" | "none" | "n/a" => SentenceType::Undefined,
            _ => {
                return Err(LabelError {
                    kind: "sentence type",
                    value: s.to_string(),
                })
            }
        })
    }
}

impl FromStr for LogicCategory {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = normalise_label(s);
        Ok(match t.as_str() {
            "ns" | "negative simple" => LogicCategory::NS,
            "nr" | "negative reverse" | "negative reversed" => LogicCategory::NR,
            "pr" | "positive reverse" | "positive reversed" => LogicCategory::PR,
            "ps" | "positive simple" => LogicCategory::PS,
            "" | "undefined" | "none" | "n/a" => LogicCategory::Undefined,
            _ => {
                return Err(LabelError {
                    kind: "logic category",
                    value: s.to_string(),
                })
            }
        })
    }
}

impl FromStr for Verdict {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = normalise_label(s);
        Ok(match t.as_str() {
            "af" | "a fortiori" | "yes" | "true" => Verdict::AF,
            "naf" | "non a fortiori" | "no" | "false" => Verdict::NAF,
            "unknown" | "undetermined" => Verdict::Unknown,
            _ => {
                return Err(LabelError {
                    kind: "verdict",
                    value: s.to_string(),
                })
            }
        })
    }
}

impl fmt::Display for SentenceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for LogicCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}
