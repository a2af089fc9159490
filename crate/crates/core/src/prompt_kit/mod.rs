//! Modular prompt assembly.
//!
//! A prompt is an ordered list of named sections whose bodies come from
//! versioned text assets. Sections may point at each other with
//! `{{ref:Name}}` markers; every marker must resolve inside the same bundle.
//! Assembly never truncates: a bundle that does not fit the window is an
//! error.

mod assemble;
mod assets;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use assemble::{check_budget, estimate_tokens, BudgetCheck, PromptKit};
pub use assets::{FewShotExample, LabelledSentence, PromptAssets, StrategyText};
pub use template::{parse_templates, render_template, ExplanationTemplate};

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("asset {file}: {reason}")]
    Asset { file: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("section {section} references missing section {target}")]
    DanglingReference { section: String, target: String },
    #[error("budget violation: prompt {estimate} + input {input} + reserve {reserve} exceeds window {window} by {over}")]
    Budget {
        estimate: usize,
        input: usize,
        reserve: usize,
        window: usize,
        over: usize,
    },
    #[error("template {sentence_type} {number} needs a value for P")]
    MissingProperty { sentence_type: String, number: u8 },
    #[error("example pool has {af} AF and {naf} NAF items, need {need_af} and {need_naf}")]
    InsufficientPool {
        af: usize,
        naf: usize,
        need_af: usize,
        need_naf: usize,
    },
    #[error("unsupported augmentation strategy: {0}")]
    UnsupportedStrategy(String),
    #[error("unknown regime: {0}")]
    UnknownRegime(String),
}

/// Names of the prompt sections, in rendering order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionName {
    Role,
    TaskDescription,
    Class,
    Logic,
    NormalizeShortExplanation,
    CommonProperties,
    Examples,
    CoT,
    ExternalInfo,
    AugmentStrategy,
    FinalPrompt,
}

impl SectionName {
    pub const ALL: [SectionName; 11] = [
        SectionName::Role,
        SectionName::TaskDescription,
        SectionName::Class,
        SectionName::Logic,
        SectionName::NormalizeShortExplanation,
        SectionName::CommonProperties,
        SectionName::Examples,
        SectionName::CoT,
        SectionName::ExternalInfo,
        SectionName::AugmentStrategy,
        SectionName::FinalPrompt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionName::Role => "Role",
            SectionName::TaskDescription => "TaskDescription",
            SectionName::Class => "Class",
            SectionName::Logic => "Logic",
            SectionName::NormalizeShortExplanation => "NormalizeShortExplanation",
            SectionName::CommonProperties => "CommonProperties",
            SectionName::Examples => "Examples",
            SectionName::CoT => "CoT",
            SectionName::ExternalInfo => "ExternalInfo",
            SectionName::AugmentStrategy => "AugmentStrategy",
            SectionName::FinalPrompt => "FinalPrompt",
        }
    }
}

impl fmt::Display for SectionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SectionName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SectionName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSection {
    pub name: SectionName,
    /// Body with cross-references resolved to section headings.
    pub body: String,
    pub references: Vec<SectionName>,
}

/// Whether gold annotations are offered to the model as suggestions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    WithExternalInfo,
    WithoutExternalInfo,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::WithExternalInfo => "with-info",
            Regime::WithoutExternalInfo => "without-info",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "with-info" | "with-external-info" | "with" => Ok(Regime::WithExternalInfo),
            "without-info" | "without-external-info" | "without" => {
                Ok(Regime::WithoutExternalInfo)
            }
            _ => Err(PromptError::UnknownRegime(s.to_string())),
        }
    }
}

/// Gated runs stop after identification when the verdict is not AF; forced
/// runs analyse every sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Gated,
    Forced,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Gated => "gated",
            Mode::Forced => "forced",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gated" => Ok(Mode::Gated),
            "forced" => Ok(Mode::Forced),
            other => Err(format!("unknown mode: {other}")),
        }
    }
}

/// Augmentation strategies. Only the two that produce natural sentences
/// are supported; asking for reversed logic is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentationStrategy {
    SimilarSemantic,
    Novel,
}

impl AugmentationStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            AugmentationStrategy::SimilarSemantic => "similar-semantic",
            AugmentationStrategy::Novel => "novel",
        }
    }
}

impl fmt::Display for AugmentationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AugmentationStrategy {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "similarsemantic" | "similar" => Ok(AugmentationStrategy::SimilarSemantic),
            "novel" => Ok(AugmentationStrategy::Novel),
            _ => Err(PromptError::UnsupportedStrategy(s.to_string())),
        }
    }
}

/// Assembly settings. Lengths are in estimated tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub window: usize,
    pub reserve_out: usize,
    /// Seed for the demonstration order of identification prompts.
    pub seed: u64,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            window: 16384,
            reserve_out: 1600,
            seed: 13,
        }
    }
}

/// Assembled prompt with its budget metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub sections: Vec<PromptSection>,
    pub rendered: String,
    pub regime: Regime,
    pub exemplar_count: usize,
    /// Estimated tokens of the rendered prompt without the input sentence.
    pub token_estimate: usize,
    /// Estimated tokens of the input sentence.
    pub input_estimate: usize,
    pub version: String,
}

impl PromptBundle {
    pub fn digest(&self) -> String {
        crate::digest::sha256_hex(&self.rendered)
    }

    pub fn section(&self, name: SectionName) -> Option<&PromptSection> {
        self.sections.iter().find(|s| s.name == name)
    }
}
