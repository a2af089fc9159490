//! Plain-text tables in the layouts used for published results.

use std::fmt::Write;

use super::grammar::{GrammarReport, GrammarStatus};
use super::judgments::{ExplanationQuality, PropertyQuality, Slot, SlotComparison};
use super::matrix::{ConfusionMatrix3, IdentificationMetrics, PerClassReport};
use super::properties::PropertyReport;
use super::stats::SimilarityStats;
use crate::taxonomy::Verdict;

/// Labelled accessor for one table row.
type Row<T, V> = (&'static str, fn(&T) -> V);

/// Left-aligned first column, right-aligned others.
pub fn table(headers: &[String], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, cell) in r.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, w) in widths.iter().enumerate() {
            let cell = cells.get(i).map(String::as_str).unwrap_or("");
            if i > 0 {
                s.push_str("  ");
            }
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "{cell:>w$}");
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(headers);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols.saturating_sub(1))));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn frac(n: usize, d: usize) -> String {
    format!("{n}/{d}")
}

fn heads(first: &str, rest: &[&str]) -> Vec<String> {
    std::iter::once(first).chain(rest.iter().copied()).map(String::from).collect()
}

/// Rows are predictions, columns gold labels.
pub fn render_confusion(title: &str, m: &ConfusionMatrix3) -> String {
    let mut rows = Vec::new();
    for p in Verdict::ALL {
        let mut r = vec![format!("pred {p}")];
        r.extend(Verdict::ALL.iter().map(|g| m.get(p, *g).to_string()));
        r.push(m.predicted_total(p).to_string());
        rows.push(r);
    }
    let mut total = vec!["Total".to_string()];
    total.extend(Verdict::ALL.iter().map(|g| m.gold_total(*g).to_string()));
    total.push(m.total().to_string());
    rows.push(total);
    format!("{title}\n{}", table(&heads("", &["AF", "NAF", "Unknown", "Total"]), &rows))
}

/// One column per experiment setting.
pub fn render_identification(columns: &[(&str, &IdentificationMetrics)]) -> String {
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    let metric_rows: [Row<IdentificationMetrics, f64>; 7] = [
        ("Accuracy", |m| m.accuracy),
        ("Precision AF", |m| m.af.precision),
        ("Precision NAF", |m| m.naf.precision),
        ("Recall AF", |m| m.af.recall),
        ("Recall NAF", |m| m.naf.recall),
        ("F1 AF", |m| m.af.f1),
        ("F1 NAF", |m| m.naf.f1),
    ];
    let rows: Vec<Vec<String>> = metric_rows
        .iter()
        .map(|(label, f)| {
            let mut r = vec![label.to_string()];
            r.extend(columns.iter().map(|(_, m)| f4(f(m))));
            r
        })
        .collect();
    let conventions: Vec<String> = columns
        .iter()
        .map(|(n, m)| format!("{n}: {:?}", m.convention))
        .collect();
    format!(
        "{}recall convention: {}\n",
        table(&heads("Metric", &names), &rows),
        conventions.join(", ")
    )
}

/// One row per similarity column, e.g. correlate cosine.
pub fn render_similarity(rows: &[(&str, &SimilarityStats)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(label, s)| {
            vec![
                label.to_string(),
                s.count.to_string(),
                f4(s.mean),
                f4(s.median),
                f4(s.std),
                f4(s.min),
                f4(s.q25),
                f4(s.q75),
                f4(s.max),
            ]
        })
        .collect();
    format!(
        "{}std: sample (n-1); quantiles: linear interpolation\n",
        table(&heads("", &["n", "Mean", "Median", "Std", "Min", "25%", "75%", "Max"]), &body)
    )
}

pub fn render_per_class(title: &str, r: &PerClassReport) -> String {
    let mut rows: Vec<Vec<String>> = r
        .classes
        .iter()
        .map(|c| {
            vec![
                c.label.clone(),
                c.support.to_string(),
                f4(c.metrics.accuracy),
                f4(c.metrics.precision),
                f4(c.metrics.recall),
                f4(c.metrics.f1),
            ]
        })
        .collect();
    rows.push(vec!["Overall accuracy".into(), String::new(), f4(r.accuracy)]);
    rows.push(vec!["Macro F1".into(), String::new(), String::new(), String::new(), String::new(), f4(r.macro_f1)]);
    format!(
        "{title}\n{}",
        table(&heads("Class", &["Support", "Accuracy", "Precision", "Recall", "F1"]), &rows)
    )
}

/// Property quality, one column per campaign.
pub fn render_property_quality(columns: &[(&str, &PropertyQuality)]) -> String {
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    let sentence_rows: [Row<PropertyQuality, usize>; 3] = [
        ("Sentences, all properties novel and relevant", |q| q.sentences_all_novel_relevant),
        ("Sentences, at least one property novel and relevant", |q| q.sentences_at_least_one_novel_relevant),
        ("Sentences, all properties neither", |q| q.sentences_all_neither),
    ];
    let property_rows: [Row<PropertyQuality, usize>; 4] = [
        ("Properties novel and relevant", |q| q.novel_and_relevant),
        ("Properties relevant, not novel", |q| q.relevant_not_novel),
        ("Properties novel, not relevant", |q| q.novel_not_relevant),
        ("Properties neither", |q| q.neither),
    ];
    let mut rows = Vec::new();
    for (label, f) in sentence_rows {
        let mut r = vec![label.to_string()];
        r.extend(columns.iter().map(|(_, q)| frac(f(q), q.sentences)));
        rows.push(r);
    }
    for (label, f) in property_rows {
        let mut r = vec![label.to_string()];
        r.extend(columns.iter().map(|(_, q)| frac(f(q), q.properties)));
        rows.push(r);
    }
    table(&heads("", &names), &rows)
}

fn p_cell(c: Option<&SlotComparison>) -> String {
    match c.and_then(|c| c.test.as_ref()) {
        Some(t) if t.p_two_tailed.is_finite() && t.t != 0.0 => f4(t.p_two_tailed),
        _ => "N/A".into(),
    }
}

/// Explanation quality for two campaigns with a paired p column.
pub fn render_explanation_quality(
    a: (&str, &ExplanationQuality),
    b: (&str, &ExplanationQuality),
    comparisons: &[SlotComparison],
) -> String {
    type SlotRow = (&'static str, Slot, fn(&ExplanationQuality) -> usize);
    let slots: [SlotRow; 5] = [
        ("Logical validity only", Slot::ValidityOnly, |q| q.validity_only),
        ("Validity and completeness, not pertinence", Slot::ValidityCompleteness, |q| {
            q.validity_completeness
        }),
        ("Completeness and pertinence, not validity", Slot::CompletenessPertinence, |q| {
            q.completeness_pertinence
        }),
        ("Validity and pertinence, not completeness", Slot::ValidityPertinence, |q| q.validity_pertinence),
        ("All three", Slot::AllThree, |q| q.all_three),
    ];
    let rows: Vec<Vec<String>> = slots
        .iter()
        .map(|(label, slot, f)| {
            vec![
                label.to_string(),
                f(a.1).to_string(),
                f(b.1).to_string(),
                p_cell(comparisons.iter().find(|c| c.slot == *slot)),
            ]
        })
        .collect();
    format!(
        "{}judged: {} / {}\n",
        table(&heads("Criteria met", &[a.0, b.0, "p"]), &rows),
        a.1.judged,
        b.1.judged
    )
}

pub fn render_property_report(r: &PropertyReport) -> String {
    let rows = vec![
        vec!["Distinct predicted properties".to_string(), r.distinct_count.to_string()],
        vec!["Copied from gold".to_string(), r.copied_count.to_string()],
        vec!["Unseen in gold".to_string(), r.unseen_count.to_string()],
        vec!["At least one match".to_string(), frac(r.at_least_one_match, r.entries)],
        vec!["Both match".to_string(), frac(r.exact_pair_matches, r.entries)],
    ];
    let mut out = table(&heads("", &["Count"]), &rows);
    for (t, top) in &r.top_k {
        let _ = writeln!(out, "\nTop properties, {t}");
        let body: Vec<Vec<String>> = top.iter().map(|(p, n)| vec![p.clone(), n.to_string()]).collect();
        out.push_str(&table(&heads("Property", &["Count"]), &body));
    }
    out
}

pub fn render_grammar(label: &str, r: &GrammarReport) -> String {
    if r.status == GrammarStatus::Skipped {
        return format!("{label}: skipped (no grammar checker configured)\n");
    }
    let mut rows = vec![vec!["Entries with errors".to_string(), frac(r.entries_with_errors, r.texts)]];
    rows.extend(r.error_type_counts.iter().map(|(k, v)| vec![k.clone(), v.to_string()]));
    format!("{label}\n{}", table(&heads("", &["Count"]), &rows))
}
