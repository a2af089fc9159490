use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::stats::{paired_t_test, TTest};
use crate::corpus::RecordId;

/// What a judgment is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Property1,
    Property2,
    ShortExplanation,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Property1, Target::Property2, Target::ShortExplanation];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Property1 => "property1",
            Target::Property2 => "property2",
            Target::ShortExplanation => "short_explanation",
        }
    }

    pub fn is_property(self) -> bool {
        !matches!(self, Target::ShortExplanation)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown target `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Novelty,
    Relevance,
    LogicalValidity,
    Completeness,
    Pertinence,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Novelty,
        Criterion::Relevance,
        Criterion::LogicalValidity,
        Criterion::Completeness,
        Criterion::Pertinence,
    ];

    pub const PROPERTY: [Criterion; 2] = [Criterion::Novelty, Criterion::Relevance];
    pub const EXPLANATION: [Criterion; 3] =
        [Criterion::LogicalValidity, Criterion::Completeness, Criterion::Pertinence];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Novelty => "novelty",
            Criterion::Relevance => "relevance",
            Criterion::LogicalValidity => "logical_validity",
            Criterion::Completeness => "completeness",
            Criterion::Pertinence => "pertinence",
        }
    }

    /// Novelty and relevance apply to properties, the rest to the short
    /// explanation.
    pub fn applies_to(self, target: Target) -> bool {
        match self {
            Criterion::Novelty | Criterion::Relevance => target.is_property(),
            _ => !target.is_property(),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown criterion `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub annotator: String,
    pub item_id: RecordId,
    pub target: Target,
    pub criterion: Criterion,
    pub value: bool,
    pub version: u32,
    pub timestamp: String,
}

impl JudgmentRecord {
    pub fn key(&self) -> JudgmentKey {
        (self.annotator.clone(), self.item_id.clone(), self.target, self.criterion)
    }
}

pub type JudgmentKey = (String, RecordId, Target, Criterion);

/// Latest version per (annotator, item, target, criterion). On equal
/// versions the later record in the list wins.
pub fn latest_judgments(store: &[JudgmentRecord]) -> BTreeMap<JudgmentKey, &JudgmentRecord> {
    let mut out: BTreeMap<JudgmentKey, &JudgmentRecord> = BTreeMap::new();
    for r in store {
        let key = r.key();
        if out.get(&key).is_none_or(|prev| r.version >= prev.version) {
            out.insert(key, r);
        }
    }
    out
}

/// Table 4.12 slot structure. Sentence slots count items; property slots
/// count judged properties against a nominal denominator of two per item.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyQuality {
    pub sentences: usize,
    pub properties: usize,
    /// At least one judged property and every judged property novel and relevant.
    pub sentences_all_novel_relevant: usize,
    pub sentences_at_least_one_novel_relevant: usize,
    /// At least one judged property and none novel or relevant.
    pub sentences_all_neither: usize,
    pub novel_and_relevant: usize,
    pub relevant_not_novel: usize,
    pub novel_not_relevant: usize,
    pub neither: usize,
}

/// Table 4.13 slot structure over (logical validity, completeness,
/// pertinence). Only items with all three consensus values are counted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationQuality {
    pub judged: usize,
    pub validity_only: usize,
    pub validity_completeness: usize,
    pub completeness_pertinence: usize,
    pub validity_pertinence: usize,
    pub all_three: usize,
    pub completeness_only: usize,
    pub pertinence_only: usize,
    pub none: usize,
    /// Items meeting each criterion, regardless of the others.
    pub per_criterion: BTreeMap<Criterion, usize>,
}

/// Consensus outcome of one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: RecordId,
    pub judged_properties: usize,
    pub novel_relevant_properties: usize,
    /// Consensus per explanation criterion, absent when unjudged.
    pub explanation: BTreeMap<Criterion, bool>,
}

impl ItemOutcome {
    pub fn all_novel_relevant(&self) -> bool {
        self.judged_properties > 0 && self.novel_relevant_properties == self.judged_properties
    }

    pub fn meets(&self, c: Criterion) -> bool {
        self.explanation.get(&c).copied().unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionAgreement {
    /// (item, target) units judged by at least two annotators.
    pub units: usize,
    pub percent_agreement: Option<f64>,
    /// Mean pairwise Cohen's kappa; absent with fewer than two annotators
    /// or when chance agreement is 1.
    pub kappa: Option<f64>,
}

/// Agreement across annotators. The per-item figure counts an item as
/// agreed when every annotator pair agrees on all shared judgments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub annotators: usize,
    pub items: usize,
    pub percent_agreement: Option<f64>,
    pub per_criterion: BTreeMap<Criterion, CriterionAgreement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEntry {
    pub a: Criterion,
    pub b: Criterion,
    pub n: usize,
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentSummary {
    pub properties: PropertyQuality,
    pub explanations: ExplanationQuality,
    pub agreement: Agreement,
    pub phi: Vec<PhiEntry>,
    pub items: Vec<ItemOutcome>,
}

type Unit = (RecordId, Target, Criterion);

/// Majority vote; ties count as false.
fn majority(values: &[bool]) -> bool {
    let yes = values.iter().filter(|v| **v).count();
    2 * yes > values.len()
}

/// Aggregates the latest-version store over `items`. Judgments on other
/// items are ignored.
pub fn judgment_aggregate(store: &[JudgmentRecord], items: &[RecordId]) -> JudgmentSummary {
    let wanted: BTreeSet<&RecordId> = items.iter().collect();
    let latest = latest_judgments(store);

    // unit -> annotator -> value
    let mut units: BTreeMap<Unit, BTreeMap<&str, bool>> = BTreeMap::new();
    for ((annotator, item, target, criterion), r) in &latest {
        if wanted.contains(item) && criterion.applies_to(*target) {
            units
                .entry((item.clone(), *target, *criterion))
                .or_default()
                .insert(annotator.as_str(), r.value);
        }
    }
    let consensus: BTreeMap<&Unit, bool> = units
        .iter()
        .map(|(u, votes)| (u, majority(&votes.values().copied().collect::<Vec<_>>())))
        .collect();

    let mut props = PropertyQuality {
        sentences: wanted.len(),
        properties: 2 * wanted.len(),
        ..Default::default()
    };
    let mut expl = ExplanationQuality::default();
    let mut outcomes = Vec::new();
    for item in &wanted {
        let get = |t: Target, c: Criterion| consensus.get(&((*item).clone(), t, c)).copied();
        let mut outcome = ItemOutcome {
            item_id: (*item).clone(),
            judged_properties: 0,
            novel_relevant_properties: 0,
            explanation: BTreeMap::new(),
        };
        let mut any_positive = false;
        for t in [Target::Property1, Target::Property2] {
            let (Some(n), Some(r)) = (get(t, Criterion::Novelty), get(t, Criterion::Relevance)) else {
                continue;
            };
            outcome.judged_properties += 1;
            any_positive |= n || r;
            match (n, r) {
                (true, true) => {
                    props.novel_and_relevant += 1;
                    outcome.novel_relevant_properties += 1;
                }
                (false, true) => props.relevant_not_novel += 1,
                (true, false) => props.novel_not_relevant += 1,
                (false, false) => props.neither += 1,
            }
        }
        if outcome.all_novel_relevant() {
            props.sentences_all_novel_relevant += 1;
        }
        if outcome.novel_relevant_properties > 0 {
            props.sentences_at_least_one_novel_relevant += 1;
        }
        if outcome.judged_properties > 0 && !any_positive {
            props.sentences_all_neither += 1;
        }

        for c in Criterion::EXPLANATION {
            if let Some(v) = get(Target::ShortExplanation, c) {
                outcome.explanation.insert(c, v);
            }
        }
        if outcome.explanation.len() == 3 {
            expl.judged += 1;
            for c in Criterion::EXPLANATION {
                if outcome.meets(c) {
                    *expl.per_criterion.entry(c).or_default() += 1;
                }
            }
            let slot = match (
                outcome.meets(Criterion::LogicalValidity),
                outcome.meets(Criterion::Completeness),
                outcome.meets(Criterion::Pertinence),
            ) {
                (true, false, false) => &mut expl.validity_only,
                (true, true, false) => &mut expl.validity_completeness,
                (false, true, true) => &mut expl.completeness_pertinence,
                (true, false, true) => &mut expl.validity_pertinence,
                (true, true, true) => &mut expl.all_three,
                (false, true, false) => &mut expl.completeness_only,
                (false, false, true) => &mut expl.pertinence_only,
                (false, false, false) => &mut expl.none,
            };
            *slot += 1;
        }
        outcomes.push(outcome);
    }

    JudgmentSummary {
        properties: props,
        explanations: expl,
        agreement: agreement(&units),
        phi: phi_table(&outcomes),
        items: outcomes,
    }
}

fn agreement(units: &BTreeMap<Unit, BTreeMap<&str, bool>>) -> Agreement {
    let annotators: BTreeSet<&str> = units.values().flat_map(|v| v.keys().copied()).collect();
    let mut item_ok: BTreeMap<&RecordId, bool> = BTreeMap::new();
    let mut per_criterion = BTreeMap::new();
    for c in Criterion::ALL {
        let shared: Vec<&BTreeMap<&str, bool>> = units
            .iter()
            .filter(|((_, _, uc), votes)| *uc == c && votes.len() >= 2)
            .map(|(_, v)| v)
            .collect();
        let mut agree_pairs = 0usize;
        let mut pairs = 0usize;
        for votes in &shared {
            let vs: Vec<bool> = votes.values().copied().collect();
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    pairs += 1;
                    agree_pairs += usize::from(vs[i] == vs[j]);
                }
            }
        }
        per_criterion.insert(
            c,
            CriterionAgreement {
                units: shared.len(),
                percent_agreement: (pairs > 0).then(|| agree_pairs as f64 / pairs as f64),
                kappa: mean_pairwise_kappa(units, c, &annotators),
            },
        );
    }
    for ((item, _, _), votes) in units {
        if votes.len() < 2 {
            continue;
        }
        let mut vs = votes.values();
        let first = vs.next().copied();
        let same = vs.all(|v| Some(*v) == first);
        let entry = item_ok.entry(item).or_insert(true);
        *entry &= same;
    }
    let agreed = item_ok.values().filter(|v| **v).count();
    Agreement {
        annotators: annotators.len(),
        items: item_ok.len(),
        percent_agreement: (!item_ok.is_empty()).then(|| agreed as f64 / item_ok.len() as f64),
        per_criterion,
    }
}

/// Cohen's kappa for two paired boolean lists. `None` when chance
/// agreement is 1.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Option<f64> {
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    let n = a.len() as f64;
    let po = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pa = a.iter().filter(|x| **x).count() as f64 / n;
    let pb = b.iter().filter(|x| **x).count() as f64 / n;
    let pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (1.0 - pe).abs() < f64::EPSILON {
        return None;
    }
    Some((po - pe) / (1.0 - pe))
}

fn mean_pairwise_kappa(
    units: &BTreeMap<Unit, BTreeMap<&str, bool>>,
    c: Criterion,
    annotators: &BTreeSet<&str>,
) -> Option<f64> {
    let names: Vec<&str> = annotators.iter().copied().collect();
    let mut kappas = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for ((_, _, uc), votes) in units {
                if *uc != c {
                    continue;
                }
                if let (Some(x), Some(y)) = (votes.get(names[i]), votes.get(names[j])) {
                    a.push(*x);
                    b.push(*y);
                }
            }
            if let Some(k) = cohen_kappa(&a, &b) {
                kappas.push(k);
            }
        }
    }
    (!kappas.is_empty()).then(|| kappas.iter().sum::<f64>() / kappas.len() as f64)
}

/// Phi coefficient of two paired boolean lists.
pub fn phi_coefficient(a: &[bool], b: &[bool]) -> Option<f64> {
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    let mut n = [[0f64; 2]; 2];
    for (x, y) in a.iter().zip(b) {
        n[usize::from(*x)][usize::from(*y)] += 1.0;
    }
    let row1 = n[1][0] + n[1][1];
    let row0 = n[0][0] + n[0][1];
    let col1 = n[0][1] + n[1][1];
    let col0 = n[0][0] + n[1][0];
    let den = (row1 * row0 * col1 * col0).sqrt();
    (den > 0.0).then(|| (n[1][1] * n[0][0] - n[1][0] * n[0][1]) / den)
}

fn phi_table(outcomes: &[ItemOutcome]) -> Vec<PhiEntry> {
    let cs = Criterion::EXPLANATION;
    let mut out = Vec::new();
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for o in outcomes {
                if let (Some(x), Some(y)) = (o.explanation.get(&cs[i]), o.explanation.get(&cs[j])) {
                    a.push(*x);
                    b.push(*y);
                }
            }
            out.push(PhiEntry {
                a: cs[i],
                b: cs[j],
                n: a.len(),
                phi: phi_coefficient(&a, &b),
            });
        }
    }
    out
}

/// Per-item indicator for one reported slot, used to compare two campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    AllNovelRelevant,
    AtLeastOneNovelRelevant,
    ValidityOnly,
    ValidityCompleteness,
    CompletenessPertinence,
    ValidityPertinence,
    AllThree,
}

impl Slot {
    pub const ALL: [Slot; 7] = [
        Slot::AllNovelRelevant,
        Slot::AtLeastOneNovelRelevant,
        Slot::ValidityOnly,
        Slot::ValidityCompleteness,
        Slot::CompletenessPertinence,
        Slot::ValidityPertinence,
        Slot::AllThree,
    ];

    pub fn indicator(self, o: &ItemOutcome) -> bool {
        let (v, c, p) = (
            o.meets(Criterion::LogicalValidity),
            o.meets(Criterion::Completeness),
            o.meets(Criterion::Pertinence),
        );
        match self {
            Slot::AllNovelRelevant => o.all_novel_relevant(),
            Slot::AtLeastOneNovelRelevant => o.novel_relevant_properties > 0,
            Slot::ValidityOnly => v && !c && !p,
            Slot::ValidityCompleteness => v && c && !p,
            Slot::CompletenessPertinence => !v && c && p,
            Slot::ValidityPertinence => v && !c && p,
            Slot::AllThree => v && c && p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotComparison {
    pub slot: Slot,
    pub a: usize,
    pub b: usize,
    /// Paired test on the shared items; absent when fewer than two items are
    /// shared.
    pub test: Option<TTest>,
}

/// Compares two campaigns slot by slot, pairing items by id.
pub fn compare_summaries(a: &JudgmentSummary, b: &JudgmentSummary) -> Vec<SlotComparison> {
    let bmap: BTreeMap<&RecordId, &ItemOutcome> = b.items.iter().map(|o| (&o.item_id, o)).collect();
    Slot::ALL
        .into_iter()
        .map(|slot| {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for o in &a.items {
                if let Some(p) = bmap.get(&o.item_id) {
                    xs.push(f64::from(u8::from(slot.indicator(o))));
                    ys.push(f64::from(u8::from(slot.indicator(p))));
                }
            }
            SlotComparison {
                slot,
                a: a.items.iter().filter(|o| slot.indicator(o)).count(),
                b: b.items.iter().filter(|o| slot.indicator(o)).count(),
                test: paired_t_test(&xs, &ys).ok(),
            }
        })
        .collect()
}
