use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::template::{parse_templates, ExplanationTemplate};
use super::PromptError;
use crate::taxonomy::Verdict;

/// One fully worked analysis shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub sentence: String,
    pub correlate: String,
    pub remnant: String,
    pub likelihood: String,
    pub property1: String,
    pub property2: String,
    pub short_explanation: String,
    pub long_explanation: String,
}

impl FewShotExample {
    fn fields(&self) -> [(&'static str, &str); 8] {
        [
            ("sentence", &self.sentence),
            ("correlate", &self.correlate),
            ("remnant", &self.remnant),
            ("likelihood", &self.likelihood),
            ("property1", &self.property1),
            ("property2", &self.property2),
            ("short_explanation", &self.short_explanation),
            ("long_explanation", &self.long_explanation),
        ]
    }
}

/// Identification demonstration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelledSentence {
    pub sentence: String,
    pub label: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyText {
    pub similar_semantic: String,
    pub novel: String,
}

/// Every text asset a prompt can be built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptAssets {
    pub version: String,
    pub bodies: BTreeMap<String, String>,
    pub templates: Vec<ExplanationTemplate>,
    pub exemplars: Vec<FewShotExample>,
    pub identification_pool: Vec<LabelledSentence>,
    pub strategies: StrategyText,
    /// Topic mapping table, `canonical | synonym, synonym` per line.
    pub topics: String,
}

/// Plain-text section bodies, by file stem.
pub const BODY_FILES: [&str; 15] = [
    "role",
    "task_description",
    "identification",
    "class",
    "logic",
    "normalize_short_explanation",
    "common_properties",
    "examples",
    "demonstrations",
    "cot",
    "external_info",
    "augment_strategy",
    "final_prompt",
    "final_identification",
    "final_augmentation",
];

macro_rules! builtin {
    ($name:literal) => {
        ($name, include_str!(concat!("../../assets/prompts/v1/", $name, ".txt")))
    };
}

const BUILTIN_BODIES: [(&str, &str); 15] = [
    builtin!("role"),
    builtin!("task_description"),
    builtin!("identification"),
    builtin!("class"),
    builtin!("logic"),
    builtin!("normalize_short_explanation"),
    builtin!("common_properties"),
    builtin!("examples"),
    builtin!("demonstrations"),
    builtin!("cot"),
    builtin!("external_info"),
    builtin!("augment_strategy"),
    builtin!("final_prompt"),
    builtin!("final_identification"),
    builtin!("final_augmentation"),
];

const BUILTIN_TEMPLATES: &str = include_str!("../../assets/prompts/v1/templates.txt");
const BUILTIN_EXAMPLES: &str = include_str!("../../assets/prompts/v1/examples.json");
const BUILTIN_POOL: &str = include_str!("../../assets/prompts/v1/identification_examples.json");
const BUILTIN_STRATEGIES: &str = include_str!("../../assets/prompts/v1/strategies.txt");
const BUILTIN_TOPICS: &str = include_str!("../../assets/prompts/v1/topics.txt");

impl PromptAssets {
    /// The asset set compiled into the binary.
    pub fn builtin() -> Self {
        let bodies = BUILTIN_BODIES
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self::from_parts(
            "v1".into(),
            bodies,
            BUILTIN_TEMPLATES,
            BUILTIN_EXAMPLES,
            BUILTIN_POOL,
            BUILTIN_STRATEGIES,
            BUILTIN_TOPICS,
        )
        .expect("builtin prompt assets are valid")
    }

    /// Loads an asset directory laid out like `assets/prompts/v1`. The
    /// directory name is taken as the version.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let read = |file: &str| {
            let path = dir.join(file);
            fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let mut bodies = BTreeMap::new();
        for stem in BODY_FILES {
            bodies.insert(stem.to_string(), read(&format!("{stem}.txt"))?);
        }
        let version = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::from_parts(
            version,
            bodies,
            &read("templates.txt")?,
            &read("examples.json")?,
            &read("identification_examples.json")?,
            &read("strategies.txt")?,
            &read("topics.txt")?,
        )
    }

    fn from_parts(
        version: String,
        bodies: BTreeMap<String, String>,
        templates: &str,
        examples: &str,
        pool: &str,
        strategies: &str,
        topics: &str,
    ) -> Result<Self, PromptError> {
        let json_err = |file: &str, e: serde_json::Error| PromptError::Asset {
            file: file.into(),
            reason: e.to_string(),
        };
        let exemplars: Vec<FewShotExample> =
            serde_json::from_str(examples).map_err(|e| json_err("examples.json", e))?;
        for (i, ex) in exemplars.iter().enumerate() {
            if let Some((field, _)) = ex.fields().into_iter().find(|(_, v)| v.trim().is_empty()) {
                return Err(PromptError::Asset {
                    file: "examples.json".into(),
                    reason: format!("example {} has empty {field}", i + 1),
                });
            }
        }
        let identification_pool: Vec<LabelledSentence> = serde_json::from_str(pool)
            .map_err(|e| json_err("identification_examples.json", e))?;
        Ok(PromptAssets {
            version,
            bodies,
            templates: parse_templates(templates)?,
            exemplars,
            identification_pool,
            strategies: parse_strategies(strategies)?,
            topics: topics.to_string(),
        })
    }

    pub fn body(&self, stem: &str) -> &str {
        self.bodies.get(stem).map(|s| s.trim_end()).unwrap_or("")
    }

    /// Numbered entries of the common-property list.
    pub fn common_properties(&self) -> Vec<String> {
        self.body("common_properties")
            .lines()
            .filter_map(|l| {
                let (num, rest) = l.trim().split_once(". ")?;
                num.parse::<u32>().ok()?;
                Some(rest.to_string())
            })
            .collect()
    }

    /// Digest over every asset, recorded in run manifests.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("assets serialize");
        crate::digest::sha256_hex(json)
    }
}

fn parse_strategies(text: &str) -> Result<StrategyText, PromptError> {
    let mut current: Option<String> = None;
    let mut blocks: BTreeMap<String, String> = BTreeMap::new();
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') {
            current = Some(t[1..t.len() - 1].to_string());
            continue;
        }
        if let Some(name) = &current {
            let entry = blocks.entry(name.clone()).or_default();
            if !entry.is_empty() {
                entry.push('\n');
            }
            entry.push_str(line);
        }
    }
    let mut take = |name: &str| {
        blocks
            .remove(name)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| PromptError::Asset {
                file: "strategies.txt".into(),
                reason: format!("missing [{name}] block"),
            })
    };
    Ok(StrategyText {
        similar_semantic: take("SimilarSemantic")?,
        novel: take("Novel")?,
    })
}
