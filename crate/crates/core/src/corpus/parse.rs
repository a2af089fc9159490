use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{char_slice, ArgumentRecord, RecordId};
use crate::taxonomy::{LogicCategory, SentenceType};

/// The thirteen mandatory columns, in canonical order.
pub const COLUMNS: [&str; 13] = [
    "text", "cor_start", "cor_end", "rem_start", "rem_end", "NAF", "prop1", "prop2", "logic",
    "class", "metaphor", "additive", "comment",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// Tab when the header line has more tabs than commas, comma otherwise.
    #[default]
    Auto,
    Comma,
    Tab,
}

impl Delimiter {
    fn resolve(self, input: &str) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
            Delimiter::Auto => {
                let header = input.lines().next().unwrap_or("");
                let tabs = header.matches('\t').count();
                let commas = header.matches(',').count();
                if tabs > commas {
                    b'\t'
                } else {
                    b','
                }
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("schema error: missing mandatory column(s) {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("schema error: input has no header row")]
    NoHeader,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("record {id}: {reason}")]
    Invalid { id: String, reason: String },
}

/// A data row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub records: Vec<ArgumentRecord>,
    pub rejects: Vec<RejectedRow>,
    /// Non-fatal findings, e.g. a record undefined in only one taxonomy dimension.
    pub warnings: Vec<String>,
}

impl ParsedCorpus {
    pub fn af_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_a_fortiori).count()
    }

    pub fn naf_count(&self) -> usize {
        self.records.len() - self.af_count()
    }
}

fn parse_index(cell: &str) -> Result<Option<usize>, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    // spreadsheets sometimes export integer columns as "12.0"
    let cell = cell.strip_suffix(".0").unwrap_or(cell);
    cell.parse::<usize>()
        .map(Some)
        .map_err(|_| format!("invalid index {cell:?}"))
}

fn parse_flag(cell: &str, column: &str) -> Result<Option<bool>, String> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "yes" | "y" | "true" | "1" | "1.0" => Ok(Some(true)),
        "no" | "n" | "false" | "0" | "0.0" => Ok(Some(false)),
        other => Err(format!("invalid {column} value {other:?}")),
    }
}

fn optional_text(cell: &str) -> Option<String> {
    let t = cell.trim();
    (!t.is_empty()).then(|| t.to_string())
}

fn check_span(
    text: &str,
    start: Option<usize>,
    end: Option<usize>,
    what: &str,
) -> Result<(), String> {
    match (start, end) {
        (None, None) => Ok(()),
        (Some(s), Some(e)) => {
            let len = text.chars().count();
            if s > e || e > len {
                return Err("span out of bounds".to_string());
            }
            match char_slice(text, s, e) {
                Some(sub) if !sub.is_empty() => Ok(()),
                _ => Err(format!("empty {what} span")),
            }
        }
        _ => Err(format!("incomplete {what} span")),
    }
}

/// Span and label checks shared by every loader. Returns warnings for soft
/// findings and an error string for hard violations.
pub(crate) fn validate_record(rec: &ArgumentRecord) -> Result<Vec<String>, String> {
    check_span(&rec.text, rec.cor_start, rec.cor_end, "correlate")?;
    check_span(&rec.text, rec.rem_start, rec.rem_end, "remnant")?;
    let mut warnings = Vec::new();
    let class_undef = rec.class == SentenceType::Undefined;
    let logic_undef = rec.logic == LogicCategory::Undefined;
    if class_undef != logic_undef {
        warnings.push(format!(
            "record {}: class {} / logic {} undefined in only one dimension",
            rec.id, rec.class, rec.logic
        ));
    }
    if rec.is_a_fortiori && rec.text.trim().is_empty() {
        return Err("empty text".to_string());
    }
    if rec.is_a_fortiori && !rec.has_spans() {
        warnings.push(format!("record {}: a fortiori record without spans", rec.id));
    }
    Ok(warnings)
}

/// Parses the delimited corpus. Malformed rows are collected as rejects;
/// only a missing header column fails the whole parse.
pub fn parse_dataset<R: Read>(mut source: R, format: Delimiter) -> Result<ParsedCorpus, CorpusError> {
    let mut input = String::new();
    source.read_to_string(&mut input)?;
    let input = input.strip_prefix('\u{feff}').unwrap_or(&input);
    if input.trim().is_empty() {
        return Err(CorpusError::NoHeader);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.resolve(input))
        .flexible(true)
        .has_headers(true)
        .from_reader(input.as_bytes());

    let headers = reader.headers()?.clone();
    let mut col: HashMap<String, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        col.entry(h.trim().to_ascii_lowercase()).or_insert(i);
    }
    let missing: Vec<String> = COLUMNS
        .iter()
        .filter(|c| !col.contains_key(&c.to_ascii_lowercase()))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingColumns(missing));
    }
    let idx = |name: &str| col[&name.to_ascii_lowercase()];
    let id_col = col.get("id").copied();

    let mut out = ParsedCorpus::default();
    let mut seen: HashSet<RecordId> = HashSet::new();
    for (n, row) in reader.records().enumerate() {
        let row_no = n + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.rejects.push(RejectedRow {
                    row: row_no,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        if row.len() < headers.len() {
            out.rejects.push(RejectedRow {
                row: row_no,
                reason: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
            continue;
        }
        match build_record(&row, row_no, id_col, &idx) {
            Ok(rec) => {
                if !seen.insert(rec.id.clone()) {
                    out.rejects.push(RejectedRow {
                        row: row_no,
                        reason: format!("duplicate id {}", rec.id),
                    });
                    continue;
                }
                match validate_record(&rec) {
                    Ok(w) => {
                        out.warnings.extend(w);
                        out.records.push(rec);
                    }
                    Err(reason) => out.rejects.push(RejectedRow { row: row_no, reason }),
                }
            }
            Err(reason) => out.rejects.push(RejectedRow { row: row_no, reason }),
        }
    }
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(out)
}

fn build_record(
    row: &csv::StringRecord,
    row_no: usize,
    id_col: Option<usize>,
    idx: &dyn Fn(&str) -> usize,
) -> Result<ArgumentRecord, String> {
    let cell = |name: &str| row.get(idx(name)).unwrap_or("");
    let id = id_col
        .and_then(|i| row.get(i))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(RecordId::from)
        .unwrap_or_else(|| RecordId::from(row_no));
    let naf = parse_flag(cell("NAF"), "NAF")?.ok_or_else(|| "missing NAF value".to_string())?;
    let logic = cell("logic")
        .parse::<LogicCategory>()
        .map_err(|e| e.to_string())?;
    let class = cell("class")
        .parse::<SentenceType>()
        .map_err(|e| e.to_string())?;
    Ok(ArgumentRecord {
        id,
        text: cell("text").to_string(),
        cor_start: parse_index(cell("cor_start"))?,
        cor_end: parse_index(cell("cor_end"))?,
        rem_start: parse_index(cell("rem_start"))?,
        rem_end: parse_index(cell("rem_end"))?,
        is_a_fortiori: !naf,
        prop1: optional_text(cell("prop1")),
        prop2: optional_text(cell("prop2")),
        logic,
        class,
        metaphor: parse_flag(cell("metaphor"), "metaphor")?.unwrap_or(false),
        additive: parse_flag(cell("additive"), "additive")?.unwrap_or(false),
        comment: optional_text(cell("comment")),
        context: None,
    })
}

/// Writes records in the tabular input format (with a leading `id` column).
pub fn write_csv<W: Write>(
    records: &[ArgumentRecord],
    writer: W,
    delimiter: Delimiter,
) -> Result<(), CorpusError> {
    let delim = match delimiter {
        Delimiter::Tab => b'\t',
        _ => b',',
    };
    let mut w = csv::WriterBuilder::new().delimiter(delim).from_writer(writer);
    let mut header = vec!["id"];
    header.extend(COLUMNS);
    w.write_record(&header)?;
    let idx = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
    let flag = |b: bool| if b { "Yes" } else { "No" }.to_string();
    for r in records {
        w.write_record([
            r.id.0.clone(),
            r.text.clone(),
            idx(r.cor_start),
            idx(r.cor_end),
            idx(r.rem_start),
            idx(r.rem_end),
            flag(!r.is_a_fortiori),
            r.prop1.clone().unwrap_or_default(),
            r.prop2.clone().unwrap_or_default(),
            r.logic.code().to_string(),
            r.class.code().to_string(),
            flag(r.metaphor),
            flag(r.additive),
            r.comment.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Canonical corpus: one JSON object per line.
pub fn to_jsonl(records: &[ArgumentRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialises"));
        out.push('\n');
    }
    out
}

/// Reads a canonical corpus file, re-validating every record.
pub fn from_jsonl(input: &str) -> Result<Vec<ArgumentRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ArgumentRecord = serde_json::from_str(line).map_err(|e| CorpusError::Json {
            line: i + 1,
            message: e.to_string(),
        })?;
        validate_record(&rec).map_err(|reason| CorpusError::Invalid {
            id: rec.id.0.clone(),
            reason,
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "text,cor_start,cor_end,rem_start,rem_end,NAF,prop1,prop2,logic,class,metaphor,additive,comment";

    #[test]
    fn parses_a_row_and_resolves_the_correlate() {
        let csv = format!(
            "{HEADER}\n\"He could not lift a chair, let alone a sofa\",13,25,37,43,No,Size,Effort physical,NS,QU,0,0,\n"
        );
        let parsed = parse_dataset(csv.as_bytes(), Delimiter::Auto).unwrap();
        assert!(parsed.rejects.is_empty(), "{:?}", parsed.rejects);
        let rec = &parsed.records[0];
        assert_eq!(rec.correlate(), Some("lift a chair"));
        assert_eq!(rec.remnant(), Some("a sofa"));
        assert!(rec.is_a_fortiori);
        assert_eq!(rec.id.as_str(), "1");
        assert_eq!(rec.properties(), vec!["Size", "Effort physical"]);
    }

    #[test]
    fn out_of_bounds_span_is_rejected() {
        let csv = format!("{HEADER}\nshort text,0,99,,,Yes,,,Undefined,Undefined,,,\n");
        let parsed = parse_dataset(csv.as_bytes(), Delimiter::Auto).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.rejects[0].reason, "span out of bounds");
        assert_eq!(parsed.rejects[0].row, 1);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let csv = "text,cor_start\nx,1\n";
        match parse_dataset(csv.as_bytes(), Delimiter::Auto) {
            Err(CorpusError::MissingColumns(cols)) => assert!(cols.contains(&"NAF".to_string())),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn tab_delimiter_is_detected() {
        let tsv = format!(
            "{}\nA, B let alone C\t0\t1\t5\t\tYes\t\t\tUndefined\tUndefined\t\t\t\n",
            HEADER.replace(',', "\t")
        );
        let parsed = parse_dataset(tsv.as_bytes(), Delimiter::Auto).unwrap();
        assert_eq!(parsed.records.len(), 0);
        assert_eq!(parsed.rejects[0].reason, "incomplete remnant span");
    }

    #[test]
    fn naf_rows_may_omit_spans_and_labels() {
        let csv = format!("{HEADER}\nLet alone the cat.,,,,,Yes,,,,,,,leave alone sense\n");
        let parsed = parse_dataset(csv.as_bytes(), Delimiter::Comma).unwrap();
        let rec = &parsed.records[0];
        assert!(!rec.is_a_fortiori);
        assert_eq!(rec.class, SentenceType::Undefined);
        assert_eq!(rec.comment.as_deref(), Some("leave alone sense"));
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn half_undefined_labels_warn_but_load() {
        let csv = format!("{HEADER}\nx let alone y,0,1,12,13,No,,,NS,Undefined,,,\n");
        let parsed = parse_dataset(csv.as_bytes(), Delimiter::Comma).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn bad_labels_and_duplicates_are_rejected() {
        let csv = format!(
            "id,{HEADER}\n5,a let alone b,0,1,12,13,No,,,XX,RE,,,\n6,a let alone b,0,1,12,13,No,,,NS,RE,,,\n6,a let alone b,0,1,12,13,No,,,NS,RE,,,\n"
        );
        let parsed = parse_dataset(csv.as_bytes(), Delimiter::Comma).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].id.as_str(), "6");
        assert_eq!(parsed.rejects.len(), 2);
        assert!(parsed.rejects[1].reason.contains("duplicate"));
    }

    #[test]
    fn jsonl_uses_domain_field_names() {
        let rec = ArgumentRecord::new("3", "a let alone b").with_span_text("a", "b");
        let line = to_jsonl(std::slice::from_ref(&rec));
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        for key in ["id", "text", "cor_start", "rem_end", "is_a_fortiori", "logic", "class"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(from_jsonl(&line).unwrap(), vec![rec]);
    }
}
