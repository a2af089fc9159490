use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assets::PromptAssets;
use super::{
    AugmentationStrategy, Mode, PromptBundle, PromptConfig, PromptError, PromptSection, Regime,
    SectionName,
};
use crate::corpus::ArgumentRecord;
use crate::pipeline::InterpretationResult;
use crate::taxonomy::Verdict;

const DEMO_AF: usize = 7;
const DEMO_NAF: usize = 3;

/// Outcome of the window inequality `estimate + input + reserve <= window`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BudgetCheck {
    Pass,
    Violation { over: usize },
}

pub fn check_budget(estimate: usize, input_len: usize, reserve_out: usize, window: usize) -> BudgetCheck {
    let need = estimate + input_len + reserve_out;
    if need <= window {
        BudgetCheck::Pass
    } else {
        BudgetCheck::Violation { over: need - window }
    }
}

/// Conservative token estimate: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

impl PromptBundle {
    pub fn check_budget(&self, reserve_out: usize, window: usize) -> BudgetCheck {
        check_budget(self.token_estimate, self.input_estimate, reserve_out, window)
    }
}

/// Prompt assets plus assembly settings.
#[derive(Debug, Clone)]
pub struct PromptKit {
    pub assets: PromptAssets,
    pub config: PromptConfig,
}

impl Default for PromptKit {
    fn default() -> Self {
        PromptKit::new(PromptAssets::builtin(), PromptConfig::default())
    }
}

struct Draft {
    sections: Vec<(SectionName, String)>,
    exemplar_count: usize,
    regime: Regime,
}

impl PromptKit {
    pub fn new(assets: PromptAssets, config: PromptConfig) -> Self {
        PromptKit { assets, config }
    }

    /// Full interpretation prompt. Under `WithExternalInfo` the gold spans,
    /// properties and logic category are offered as suggestions inside the
    /// reasoning steps; otherwise no field of the record other than its text
    /// is read.
    pub fn interpretation(
        &self,
        record: &ArgumentRecord,
        regime: Regime,
        mode: Mode,
    ) -> Result<PromptBundle, PromptError> {
        let a = &self.assets;
        let external = match regime {
            Regime::WithExternalInfo => Some(record),
            Regime::WithoutExternalInfo => None,
        };
        let mut sections = self.analysis_sections(external);
        if regime == Regime::WithExternalInfo {
            sections.push((SectionName::ExternalInfo, a.body("external_info").to_string()));
        }
        let final_body = a.body("final_prompt").replace("{{mode}}", mode_instruction(mode));
        sections.push((SectionName::FinalPrompt, final_body));
        self.finish(
            Draft {
                sections,
                exemplar_count: a.exemplars.len(),
                regime,
            },
            &record.text,
        )
    }

    /// Binary identification prompt, with 7 AF and 3 NAF demonstrations in
    /// seeded order or with none.
    pub fn identification(
        &self,
        record: &ArgumentRecord,
        with_examples: bool,
    ) -> Result<PromptBundle, PromptError> {
        let a = &self.assets;
        let mut sections = vec![
            (SectionName::Role, a.body("role").to_string()),
            (SectionName::TaskDescription, a.body("identification").to_string()),
        ];
        let mut count = 0;
        if with_examples {
            let demos = self.demonstrations(&record.text)?;
            count = demos.len();
            let mut block = String::new();
            for (sentence, label) in demos {
                let _ = write!(
                    block,
                    "<demonstration>\nSentence: {sentence}\nVerdict: {}\n</demonstration>\n",
                    label.code()
                );
            }
            let body = a.body("demonstrations").replace("{{exemplars}}", block.trim_end());
            sections.push((SectionName::Examples, body));
        }
        sections.push((SectionName::FinalPrompt, a.body("final_identification").to_string()));
        self.finish(
            Draft {
                sections,
                exemplar_count: count,
                regime: Regime::WithoutExternalInfo,
            },
            &record.text,
        )
    }

    /// Augmentation prompt: the interpretation sections plus a strategy
    /// section carrying the prior analysis and the constraint set.
    pub fn augmentation(
        &self,
        record: &ArgumentRecord,
        analysis: &InterpretationResult,
        strategy: AugmentationStrategy,
    ) -> Result<PromptBundle, PromptError> {
        let a = &self.assets;
        let mut sections = self.analysis_sections(None);
        let constraint = match strategy {
            AugmentationStrategy::SimilarSemantic => &a.strategies.similar_semantic,
            AugmentationStrategy::Novel => &a.strategies.novel,
        };
        let body = a
            .body("augment_strategy")
            .replace("{{analysis}}", &render_analysis(analysis))
            .replace("{{strategy}}", constraint);
        sections.push((SectionName::AugmentStrategy, body));
        sections.push((SectionName::FinalPrompt, a.body("final_augmentation").to_string()));
        self.finish(
            Draft {
                sections,
                exemplar_count: a.exemplars.len(),
                regime: Regime::WithoutExternalInfo,
            },
            &record.text,
        )
    }

    fn analysis_sections(&self, external: Option<&ArgumentRecord>) -> Vec<(SectionName, String)> {
        let a = &self.assets;
        let mut templates = String::new();
        for t in &a.templates {
            let _ = writeln!(templates, "- {} {}: {}", t.sentence_type.code(), t.number, t.pattern);
        }
        let mut exemplars = String::new();
        for ex in &a.exemplars {
            let _ = write!(
                exemplars,
                "<example>\nSentence: {}\nCorrelate: {}\nRemnant: {}\nCorrelate more likely: {}\n\
                 Property 1: {}\nProperty 2: {}\nShort explanation: {}\nLong explanation: {}\n</example>\n",
                ex.sentence,
                ex.correlate,
                ex.remnant,
                ex.likelihood,
                ex.property1,
                ex.property2,
                ex.short_explanation,
                ex.long_explanation
            );
        }
        vec![
            (SectionName::Role, a.body("role").to_string()),
            (SectionName::TaskDescription, a.body("task_description").to_string()),
            (SectionName::Class, a.body("class").to_string()),
            (SectionName::Logic, a.body("logic").to_string()),
            (
                SectionName::NormalizeShortExplanation,
                a.body("normalize_short_explanation")
                    .replace("{{templates}}", templates.trim_end()),
            ),
            (SectionName::CommonProperties, a.body("common_properties").to_string()),
            (
                SectionName::Examples,
                a.body("examples").replace("{{exemplars}}", exemplars.trim_end()),
            ),
            (SectionName::CoT, fill_external(a.body("cot"), external)),
        ]
    }

    fn demonstrations(&self, exclude: &str) -> Result<Vec<(String, Verdict)>, PromptError> {
        let pool: Vec<_> = self
            .assets
            .identification_pool
            .iter()
            .filter(|d| d.sentence != exclude)
            .collect();
        let mut af: Vec<_> = pool.iter().filter(|d| d.label == Verdict::AF).collect();
        let mut naf: Vec<_> = pool.iter().filter(|d| d.label == Verdict::NAF).collect();
        if af.len() < DEMO_AF || naf.len() < DEMO_NAF {
            return Err(PromptError::InsufficientPool {
                af: af.len(),
                naf: naf.len(),
                need_af: DEMO_AF,
                need_naf: DEMO_NAF,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        af.shuffle(&mut rng);
        naf.shuffle(&mut rng);
        let mut chosen: Vec<(String, Verdict)> = af
            .into_iter()
            .take(DEMO_AF)
            .chain(naf.into_iter().take(DEMO_NAF))
            .map(|d| (d.sentence.clone(), d.label))
            .collect();
        chosen.shuffle(&mut rng);
        Ok(chosen)
    }

    fn finish(&self, draft: Draft, input: &str) -> Result<PromptBundle, PromptError> {
        let present: Vec<SectionName> = draft.sections.iter().map(|(n, _)| *n).collect();
        let mut sections = Vec::with_capacity(draft.sections.len());
        for (name, raw) in draft.sections {
            let (body, references) = resolve_references(name, &raw, &present)?;
            sections.push(PromptSection {
                name,
                body,
                references,
            });
        }
        let mut template = String::new();
        for s in &sections {
            let _ = write!(template, "## {}\n{}\n\n", s.name, s.body);
        }
        let template = template.trim_end().to_string() + "\n";
        if let Some(pos) = template.replace("{{input}}", "").find("{{") {
            return Err(PromptError::Asset {
                file: self.assets.version.clone(),
                reason: format!("unresolved placeholder at byte {pos}"),
            });
        }
        let token_estimate = estimate_tokens(&template.replace("{{input}}", ""));
        let input_estimate = estimate_tokens(input);
        let (window, reserve) = (self.config.window, self.config.reserve_out);
        if let BudgetCheck::Violation { over } =
            check_budget(token_estimate, input_estimate, reserve, window)
        {
            return Err(PromptError::Budget {
                estimate: token_estimate,
                input: input_estimate,
                reserve,
                window,
                over,
            });
        }
        let rendered = template.replace("{{input}}", input);
        for s in &mut sections {
            s.body = s.body.replace("{{input}}", input);
        }
        Ok(PromptBundle {
            sections,
            rendered,
            regime: draft.regime,
            exemplar_count: draft.exemplar_count,
            token_estimate,
            input_estimate,
            version: self.assets.version.clone(),
        })
    }
}

fn mode_instruction(mode: Mode) -> &'static str {
    match mode {
        Mode::Gated => {
            "If it does not, set \"verdict\" to \"NAF\" (or \"Unknown\" when you cannot tell), leave every other key empty and stop."
        }
        Mode::Forced => "Whatever the verdict, complete every step below for this sentence.",
    }
}

/// Fills `{{external:stepN}}` markers. Lines holding an unused marker are
/// dropped.
fn fill_external(cot: &str, record: Option<&ArgumentRecord>) -> String {
    let mut out = String::new();
    for line in cot.lines() {
        let trimmed = line.trim();
        let replacement = match trimmed {
            "{{external:step1}}" => Some(record.and_then(|r| {
                Some(format!(
                    "Suggestion: the correlate is \"{}\" and the remnant is \"{}\".",
                    r.correlate()?,
                    r.remnant()?
                ))
            })),
            "{{external:step2}}" => Some(record.map(|r| {
                format!(
                    "Suggestion: the logic category is {} ({}).",
                    r.logic.code(),
                    r.logic.long_name()
                )
            })),
            "{{external:step3}}" => Some(record.and_then(|r| {
                let props = r.properties();
                if props.is_empty() {
                    return None;
                }
                let quoted: Vec<String> = props.iter().map(|p| format!("\"{p}\"")).collect();
                Some(format!("Suggestion: the hidden properties are {}.", quoted.join(" and ")))
            })),
            _ => None,
        };
        match replacement {
            Some(Some(text)) => {
                out.push_str(&text);
                out.push('\n');
            }
            Some(None) => {}
            None => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    out.trim_end().to_string()
}

fn resolve_references(
    name: SectionName,
    raw: &str,
    present: &[SectionName],
) -> Result<(String, Vec<SectionName>), PromptError> {
    let mut body = String::with_capacity(raw.len());
    let mut refs = Vec::new();
    let mut rest = raw;
    while let Some(start) = rest.find("{{ref:") {
        body.push_str(&rest[..start]);
        let after = &rest[start + 6..];
        let end = after.find("}}").ok_or_else(|| PromptError::Asset {
            file: name.to_string(),
            reason: "unterminated reference".into(),
        })?;
        let target_text = &after[..end];
        let target: SectionName = target_text.parse().map_err(|_| PromptError::DanglingReference {
            section: name.to_string(),
            target: target_text.to_string(),
        })?;
        if !present.contains(&target) {
            return Err(PromptError::DanglingReference {
                section: name.to_string(),
                target: target.to_string(),
            });
        }
        if !refs.contains(&target) {
            refs.push(target);
        }
        let _ = write!(body, "[{target}]");
        rest = &after[end + 2..];
    }
    body.push_str(rest);
    Ok((body, refs))
}

fn render_analysis(r: &InterpretationResult) -> String {
    let opt = |s: &Option<String>| s.clone().unwrap_or_default();
    format!(
        "Correlate: {}\nRemnant: {}\nCorrelate more likely: {}\nSentence type: {}\nLogic category: {}\n\
         Properties: {}\nShort explanation: {}\nLong explanation: {}",
        opt(&r.correlate),
        opt(&r.remnant),
        match r.correlate_more_likely {
            Some(true) => "Yes",
            Some(false) => "No",
            None => "",
        },
        r.sentence_type.code(),
        r.logic_category.code(),
        r.properties.join("; "),
        r.short_explanation,
        r.long_explanation
    )
}
