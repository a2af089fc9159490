//! Human-judgment campaigns: per-annotator task queues over an evaluation
//! set, an append-only judgment store with latest-wins versioning, progress
//! and aggregates. The HTTP layer in the CLI is a thin wrapper over
//! [`AnnotationService`].

mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::corpus::{ArgumentRecord, EvaluationSet, RecordId};
use crate::digest::{sha256_parts, seed_from_text};
use crate::evaluate::{judgment_aggregate, Criterion, JudgmentRecord, JudgmentSummary, Target};
use crate::pipeline::InterpretationResult;
use crate::prompt_kit::Regime;

pub use store::{read_judgments, JudgmentStore};

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(String),
    #[error("annotator `{0}` is not on the campaign roster")]
    UnknownAnnotator(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("criterion {criterion} does not apply to {target} of item {item}")]
    Inapplicable {
        item: String,
        target: Target,
        criterion: Criterion,
    },
    #[error("campaign `{0}` is closed")]
    Closed(String),
    #[error("item `{0}` is not in the evaluation set")]
    NotInEvaluationSet(String),
    #[error("no run result for item `{0}`")]
    MissingResult(String),
    #[error("invalid campaign: {0}")]
    Invalid(String),
    #[error("judgment store {0} is locked by another process")]
    Locked(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignStatus {
    Open,
    Closed,
}

/// What annotators see for one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub item_id: RecordId,
    pub sentence: String,
    pub regime: Regime,
    /// Predicted properties, at most two.
    pub properties: Vec<String>,
    pub short_explanation: Option<String>,
    /// Spans used for highlighting, and whether they are gold or predicted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlight: Option<Highlight>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    pub source: String,
    pub correlate: String,
    pub remnant: String,
}

impl AnnotationItem {
    pub fn targets(&self) -> Vec<Target> {
        let mut t = Vec::new();
        if !self.properties.is_empty() {
            t.push(Target::Property1);
        }
        if self.properties.len() > 1 {
            t.push(Target::Property2);
        }
        if self.short_explanation.is_some() {
            t.push(Target::ShortExplanation);
        }
        t
    }

    /// Every (target, criterion) pair to judge.
    pub fn judgeable(&self) -> Vec<(Target, Criterion)> {
        self.targets()
            .into_iter()
            .flat_map(|t| Criterion::ALL.into_iter().filter(move |c| c.applies_to(t)).map(move |c| (t, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Campaign {
    pub id: String,
    pub evaluation_set_id: String,
    pub run_id: String,
    pub roster: Vec<String>,
    pub items: Vec<AnnotationItem>,
    pub status: CampaignStatus,
    /// Shared secret required by the HTTP layer when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

/// Content digest of an evaluation set.
pub fn evaluation_set_id(set: &EvaluationSet) -> String {
    sha256_parts(set.record_ids.iter().map(|id| id.as_str()))[..16].to_string()
}

impl Campaign {
    /// Builds a campaign judging `results` of run `run_id` on the items of
    /// `set`. Every evaluation-set item needs a result.
    pub fn from_run(
        id: impl Into<String>,
        set: &EvaluationSet,
        run_id: impl Into<String>,
        records: &[ArgumentRecord],
        results: &[InterpretationResult],
        roster: Vec<String>,
    ) -> Result<Self, AnnotationError> {
        let by_id: BTreeMap<&RecordId, &ArgumentRecord> = records.iter().map(|r| (&r.id, r)).collect();
        let res: BTreeMap<&RecordId, &InterpretationResult> = results.iter().map(|r| (&r.record_id, r)).collect();
        let mut items = Vec::new();
        for item in &set.record_ids {
            let rec = by_id
                .get(item)
                .ok_or_else(|| AnnotationError::UnknownItem(item.to_string()))?;
            let r = res
                .get(item)
                .ok_or_else(|| AnnotationError::MissingResult(item.to_string()))?;
            let highlight = match (rec.correlate(), rec.remnant(), &r.correlate, &r.remnant) {
                (Some(c), Some(m), _, _) => Some(Highlight {
                    source: "gold".into(),
                    correlate: c.into(),
                    remnant: m.into(),
                }),
                (_, _, Some(c), Some(m)) => Some(Highlight {
                    source: "predicted".into(),
                    correlate: c.clone(),
                    remnant: m.clone(),
                }),
                _ => None,
            };
            items.push(AnnotationItem {
                item_id: item.clone(),
                sentence: rec.text.clone(),
                regime: r.regime,
                properties: r.properties.iter().take(2).cloned().collect(),
                short_explanation: Some(r.short_explanation.clone()).filter(|s| !s.trim().is_empty()),
                highlight,
            });
        }
        let c = Campaign {
            id: id.into(),
            evaluation_set_id: evaluation_set_id(set),
            run_id: run_id.into(),
            roster,
            items,
            status: CampaignStatus::Open,
            token: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(AnnotationError::Invalid(format!("campaign id `{}` must be [A-Za-z0-9_-]+", self.id)));
        }
        if self.roster.is_empty() {
            return Err(AnnotationError::Invalid("empty roster".into()));
        }
        let mut seen = BTreeSet::new();
        for i in &self.items {
            if !seen.insert(&i.item_id) {
                return Err(AnnotationError::Invalid(format!("duplicate item {}", i.item_id)));
            }
        }
        Ok(())
    }

    /// Checks that every item belongs to `set`.
    pub fn check_against(&self, set: &EvaluationSet) -> Result<(), AnnotationError> {
        let ids: BTreeSet<&RecordId> = set.record_ids.iter().collect();
        if let Some(i) = self.items.iter().find(|i| !ids.contains(&i.item_id)) {
            return Err(AnnotationError::NotInEvaluationSet(i.item_id.to_string()));
        }
        Ok(())
    }

    pub fn item(&self, id: &RecordId) -> Option<&AnnotationItem> {
        self.items.iter().find(|i| &i.item_id == id)
    }

    pub fn item_ids(&self) -> Vec<RecordId> {
        self.items.iter().map(|i| i.item_id.clone()).collect()
    }

    /// Item order for one annotator, stable across restarts.
    pub fn order_for(&self, annotator: &str) -> Vec<RecordId> {
        let mut ids = self.item_ids();
        ids.sort();
        let seed = seed_from_text(&format!("{}\u{0}{}", self.id, annotator));
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCriterion {
    pub target: Target,
    pub criterion: Criterion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub campaign_id: String,
    pub annotator: String,
    pub item: AnnotationItem,
    pub criteria: Vec<TaskCriterion>,
    /// 1-based position in the annotator's order.
    pub position: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTask {
    Task(Box<AnnotationTask>),
    Done { total: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentInput {
    pub target: Target,
    pub criterion: Criterion,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub annotator: String,
    pub item_id: RecordId,
    pub judgments: Vec<JudgmentInput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredJudgment {
    pub target: Target,
    pub criterion: Criterion,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub campaign_id: String,
    pub item_id: RecordId,
    pub stored: Vec<StoredJudgment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProgress {
    pub annotator: String,
    pub completed: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignAggregate {
    pub campaign_id: String,
    pub summary: JudgmentSummary,
    pub progress: Vec<AnnotatorProgress>,
    /// Agreement statistics go beyond the published evaluation.
    pub agreement_note: String,
}

const AGREEMENT_NOTE: &str = "inter-annotator agreement (percent and Cohen's kappa) is an extension; majority consensus with ties counted false";

struct Entry {
    campaign: Campaign,
    store: JudgmentStore,
}

/// Campaigns with their judgment stores.
pub struct AnnotationService {
    campaigns: BTreeMap<String, Entry>,
    clock: Arc<dyn Clock>,
}

fn judged_by(store: &[JudgmentRecord], annotator: &str) -> BTreeSet<(RecordId, Target, Criterion)> {
    store
        .iter()
        .filter(|r| r.annotator == annotator)
        .map(|r| (r.item_id.clone(), r.target, r.criterion))
        .collect()
}

fn complete(item: &AnnotationItem, done: &BTreeSet<(RecordId, Target, Criterion)>) -> bool {
    item.judgeable()
        .iter()
        .all(|(t, c)| done.contains(&(item.item_id.clone(), *t, *c)))
}

impl AnnotationService {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        AnnotationService {
            campaigns: BTreeMap::new(),
            clock,
        }
    }

    /// Registers a campaign whose judgments live in `store_path`.
    pub fn add_campaign(&mut self, campaign: Campaign, store_path: impl AsRef<Path>) -> Result<(), AnnotationError> {
        campaign.validate()?;
        let store = JudgmentStore::open(store_path)?;
        self.campaigns.insert(campaign.id.clone(), Entry { campaign, store });
        Ok(())
    }

    /// Loads every `<id>.campaign.json` in `dir`, each with its
    /// `<id>.judgments.jsonl` store next to it.
    pub fn load_dir(dir: &Path, clock: Arc<dyn Clock>) -> Result<Self, AnnotationError> {
        let io = |e: std::io::Error| AnnotationError::Io {
            path: dir.display().to_string(),
            source: e,
        };
        let mut svc = AnnotationService::new(clock);
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".campaign.json"))
            .collect();
        paths.sort();
        for p in paths {
            let c = read_campaign(&p)?;
            let store = store_path(dir, &c.id);
            svc.add_campaign(c, store)?;
        }
        Ok(svc)
    }

    pub fn campaign(&self, id: &str) -> Result<&Campaign, AnnotationError> {
        self.entry(id).map(|e| &e.campaign)
    }

    pub fn campaign_ids(&self) -> Vec<String> {
        self.campaigns.keys().cloned().collect()
    }

    fn entry(&self, id: &str) -> Result<&Entry, AnnotationError> {
        self.campaigns
            .get(id)
            .ok_or_else(|| AnnotationError::UnknownCampaign(id.to_string()))
    }

    fn on_roster(c: &Campaign, annotator: &str) -> Result<(), AnnotationError> {
        if c.roster.iter().any(|a| a == annotator) {
            Ok(())
        } else {
            Err(AnnotationError::UnknownAnnotator(annotator.to_string()))
        }
    }

    /// First item in the annotator's order that is not fully judged.
    pub fn next_task(&self, campaign: &str, annotator: &str) -> Result<NextTask, AnnotationError> {
        let e = self.entry(campaign)?;
        Self::on_roster(&e.campaign, annotator)?;
        let done = judged_by(&e.store.snapshot(), annotator);
        let order = e.campaign.order_for(annotator);
        let total = order.len();
        for (i, id) in order.iter().enumerate() {
            let item = e.campaign.item(id).expect("order comes from items");
            if !complete(item, &done) {
                return Ok(NextTask::Task(Box::new(AnnotationTask {
                    campaign_id: e.campaign.id.clone(),
                    annotator: annotator.to_string(),
                    item: item.clone(),
                    criteria: item
                        .judgeable()
                        .into_iter()
                        .map(|(target, criterion)| TaskCriterion { target, criterion })
                        .collect(),
                    position: i + 1,
                    total,
                })));
            }
        }
        Ok(NextTask::Done { total })
    }

    pub fn submit_judgments(&self, campaign: &str, sub: &Submission) -> Result<Acknowledgment, AnnotationError> {
        let e = self.entry(campaign)?;
        if e.campaign.status == CampaignStatus::Closed {
            return Err(AnnotationError::Closed(campaign.to_string()));
        }
        Self::on_roster(&e.campaign, &sub.annotator)?;
        let item = e
            .campaign
            .item(&sub.item_id)
            .ok_or_else(|| AnnotationError::UnknownItem(sub.item_id.to_string()))?;
        let targets = item.targets();
        for j in &sub.judgments {
            if !targets.contains(&j.target) || !j.criterion.applies_to(j.target) {
                return Err(AnnotationError::Inapplicable {
                    item: sub.item_id.to_string(),
                    target: j.target,
                    criterion: j.criterion,
                });
            }
        }
        let timestamp = self.clock.stamp();
        let written = e.store.append_with(|current| {
            let mut versions: BTreeMap<(Target, Criterion), u32> = BTreeMap::new();
            for r in current {
                if r.annotator == sub.annotator && r.item_id == sub.item_id {
                    let v = versions.entry((r.target, r.criterion)).or_default();
                    *v = (*v).max(r.version);
                }
            }
            Ok(sub
                .judgments
                .iter()
                .map(|j| {
                    let v = versions.entry((j.target, j.criterion)).or_default();
                    *v += 1;
                    JudgmentRecord {
                        annotator: sub.annotator.clone(),
                        item_id: sub.item_id.clone(),
                        target: j.target,
                        criterion: j.criterion,
                        value: j.value,
                        version: *v,
                        timestamp: timestamp.clone(),
                    }
                })
                .collect())
        })?;
        Ok(Acknowledgment {
            campaign_id: campaign.to_string(),
            item_id: sub.item_id.clone(),
            stored: written
                .into_iter()
                .map(|r| StoredJudgment {
                    target: r.target,
                    criterion: r.criterion,
                    version: r.version,
                })
                .collect(),
        })
    }

    pub fn progress(&self, campaign: &str) -> Result<Vec<AnnotatorProgress>, AnnotationError> {
        let e = self.entry(campaign)?;
        Ok(progress_of(&e.campaign, &e.store.snapshot()))
    }

    pub fn judgments(&self, campaign: &str) -> Result<Vec<JudgmentRecord>, AnnotationError> {
        Ok(self.entry(campaign)?.store.snapshot())
    }

    pub fn campaign_aggregate(&self, campaign: &str) -> Result<CampaignAggregate, AnnotationError> {
        let e = self.entry(campaign)?;
        Ok(aggregate_campaign(&e.campaign, &e.store.snapshot()))
    }

    /// First campaign item with this id.
    pub fn item(&self, id: &RecordId) -> Result<&AnnotationItem, AnnotationError> {
        self.campaigns
            .values()
            .find_map(|e| e.campaign.item(id))
            .ok_or_else(|| AnnotationError::UnknownItem(id.to_string()))
    }
}

impl Default for AnnotationService {
    fn default() -> Self {
        AnnotationService::new(Arc::new(SystemClock))
    }
}

pub fn progress_of(c: &Campaign, store: &[JudgmentRecord]) -> Vec<AnnotatorProgress> {
    c.roster
        .iter()
        .map(|a| {
            let done = judged_by(store, a);
            let completed = c.items.iter().filter(|i| complete(i, &done)).count();
            let total = c.items.len();
            AnnotatorProgress {
                annotator: a.clone(),
                completed,
                total,
                fraction: if total == 0 { 0.0 } else { completed as f64 / total as f64 },
            }
        })
        .collect()
}

/// Offline equivalent of the aggregate endpoint.
pub fn aggregate_campaign(c: &Campaign, store: &[JudgmentRecord]) -> CampaignAggregate {
    CampaignAggregate {
        campaign_id: c.id.clone(),
        summary: judgment_aggregate(store, &c.item_ids()),
        progress: progress_of(c, store),
        agreement_note: AGREEMENT_NOTE.into(),
    }
}

pub fn campaign_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.campaign.json"))
}

pub fn store_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.judgments.jsonl"))
}

pub fn read_campaign(path: &Path) -> Result<Campaign, AnnotationError> {
    let text = fs::read_to_string(path).map_err(|e| AnnotationError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let c: Campaign = serde_json::from_str(&text).map_err(|e| AnnotationError::Corrupt {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    c.validate()?;
    Ok(c)
}

pub fn write_campaign(dir: &Path, c: &Campaign) -> Result<PathBuf, AnnotationError> {
    let path = campaign_path(dir, &c.id);
    let body = serde_json::to_string_pretty(c).expect("campaign serialises");
    fs::write(&path, body + "\n").map_err(|e| AnnotationError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(path)
}
