use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::taxonomy::SentenceType;

/// Normalised short-explanation pattern. `{X}` and `{Y}` are the compared
/// cases, `{P}` the hidden property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationTemplate {
    pub sentence_type: SentenceType,
    pub number: u8,
    pub pattern: String,
}

impl ExplanationTemplate {
    pub fn needs_property(&self) -> bool {
        self.pattern.contains("{P}")
    }
}

/// Reads `type | number | pattern` lines; `#` starts a comment line.
pub fn parse_templates(text: &str) -> Result<Vec<ExplanationTemplate>, PromptError> {
    let bad = |reason: String| PromptError::Asset {
        file: "templates.txt".into(),
        reason,
    };
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.splitn(3, '|').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad(format!("line {}: expected three fields", n + 1)));
        }
        let sentence_type: SentenceType = parts[0]
            .parse()
            .map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
        let number: u8 = parts[1]
            .parse()
            .map_err(|_| bad(format!("line {}: bad number {:?}", n + 1, parts[1])))?;
        let pattern = parts[2].to_string();
        if !pattern.contains("{X}") || !pattern.contains("{Y}") {
            return Err(bad(format!("line {}: pattern lacks {{X}} or {{Y}}", n + 1)));
        }
        out.push(ExplanationTemplate {
            sentence_type,
            number,
            pattern,
        });
    }
    Ok(out)
}

/// Substitutes the placeholders and capitalises the first letter.
pub fn render_template(
    template: &ExplanationTemplate,
    x: &str,
    y: &str,
    p: Option<&str>,
) -> Result<String, PromptError> {
    let mut out = template.pattern.replace("{X}", x).replace("{Y}", y);
    if template.needs_property() {
        let p = p.ok_or_else(|| PromptError::MissingProperty {
            sentence_type: template.sentence_type.code().to_string(),
            number: template.number,
        })?;
        out = out.replace("{P}", p);
    }
    let mut chars = out.chars();
    Ok(match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin() -> Vec<ExplanationTemplate> {
        parse_templates(include_str!("../../assets/prompts/v1/templates.txt")).unwrap()
    }

    fn find(ts: &[ExplanationTemplate], t: SentenceType, n: u8) -> ExplanationTemplate {
        ts.iter()
            .find(|x| x.sentence_type == t && x.number == n)
            .cloned()
            .unwrap()
    }

    #[test]
    fn quantity_pattern_three() {
        let ts = builtin();
        let got = render_template(
            &find(&ts, SentenceType::QU, 3),
            "A 14 sq ft garden shed",
            "a 5 sq ft shed",
            Some("space"),
        )
        .unwrap();
        assert_eq!(got, "A 14 sq ft garden shed provides more space than a 5 sq ft shed.");
    }

    #[test]
    fn precondition_pattern_two() {
        let ts = builtin();
        let got = render_template(
            &find(&ts, SentenceType::PC, 2),
            "one heard of something",
            "one cannot use it",
            None,
        )
        .unwrap();
        assert_eq!(got, "Unless one heard of something, one cannot use it.");
    }

    #[test]
    fn missing_property_is_an_error() {
        let ts = builtin();
        let err = render_template(&find(&ts, SentenceType::RE, 3), "x", "y", None).unwrap_err();
        assert!(matches!(err, PromptError::MissingProperty { .. }));
    }

    #[test]
    fn every_type_has_patterns_with_both_cases() {
        let ts = builtin();
        for t in [SentenceType::QU, SentenceType::RE, SentenceType::SP, SentenceType::PC] {
            assert!(ts.iter().any(|x| x.sentence_type == t));
        }
        for t in &ts {
            if matches!(t.sentence_type, SentenceType::QU | SentenceType::RE) {
                assert!(t.needs_property(), "{t:?}");
            }
        }
    }

    #[test]
    fn rejects_pattern_without_cases() {
        assert!(parse_templates("QU | 1 | more {P} here").is_err());
    }
}
