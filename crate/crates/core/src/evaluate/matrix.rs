use std::collections::BTreeSet;
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::taxonomy::Verdict;

/// Identification confusion matrix, `cells[prediction][gold]`, both axes in
/// [`Verdict::ALL`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix3 {
    pub cells: [[usize; 3]; 3],
}

impl ConfusionMatrix3 {
    pub fn from_cells(cells: [[usize; 3]; 3]) -> Self {
        ConfusionMatrix3 { cells }
    }

    pub fn get(&self, pred: Verdict, gold: Verdict) -> usize {
        self.cells[pred.index()][gold.index()]
    }

    pub fn predicted_total(&self, pred: Verdict) -> usize {
        self.cells[pred.index()].iter().sum()
    }

    pub fn gold_total(&self, gold: Verdict) -> usize {
        self.cells.iter().map(|row| row[gold.index()]).sum()
    }

    pub fn total(&self) -> usize {
        self.cells.iter().flatten().sum()
    }

    /// Gold labels and predictions reproducing this matrix, gold-major.
    pub fn expand(&self) -> (Vec<Verdict>, Vec<Verdict>) {
        let mut gold = Vec::with_capacity(self.total());
        let mut pred = Vec::with_capacity(self.total());
        for g in Verdict::ALL {
            for p in Verdict::ALL {
                for _ in 0..self.get(p, g) {
                    gold.push(g);
                    pred.push(p);
                }
            }
        }
        (gold, pred)
    }
}

pub fn confusion_matrix(gold: &[Verdict], pred: &[Verdict]) -> Result<ConfusionMatrix3, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred.len()));
    }
    let mut m = ConfusionMatrix3::default();
    for (g, p) in gold.iter().zip(pred) {
        m.cells[p.index()][g.index()] += 1;
    }
    Ok(m)
}

/// Recall denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallConvention {
    /// Every gold item of the class.
    FullGold,
    /// Gold items of the class that received an AF or NAF prediction.
    ExcludeUnknownPredictions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_denominator: usize,
    pub recall_denominator: usize,
    pub convention: RecallConvention,
    /// Names of metrics whose denominator was zero and were set to 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_denominators: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn class_metrics(
    tp: usize,
    predicted: usize,
    recall_den: usize,
    correct_total: (usize, usize),
    convention: RecallConvention,
) -> ClassMetrics {
    let mut flags = Vec::new();
    let precision = ratio(tp, predicted, "precision", &mut flags);
    let recall = ratio(tp, recall_den, "recall", &mut flags);
    let accuracy = ratio(correct_total.0, correct_total.1, "accuracy", &mut flags);
    ClassMetrics {
        accuracy,
        precision,
        recall,
        f1: f1(precision, recall),
        precision_denominator: predicted,
        recall_denominator: recall_den,
        convention,
        zero_denominators: flags,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationMetrics {
    pub matrix: ConfusionMatrix3,
    /// `(AF/AF + NAF/NAF) / total`.
    pub accuracy: f64,
    pub af: ClassMetrics,
    pub naf: ClassMetrics,
    pub convention: RecallConvention,
}

/// Per-class precision, recall and F1 for AF and NAF plus macro accuracy.
pub fn identification_metrics(m: &ConfusionMatrix3, convention: RecallConvention) -> IdentificationMetrics {
    let total = m.total();
    let correct = m.get(Verdict::AF, Verdict::AF) + m.get(Verdict::NAF, Verdict::NAF);
    let per_class = |c: Verdict| {
        let tp = m.get(c, c);
        let recall_den = match convention {
            RecallConvention::FullGold => m.gold_total(c),
            RecallConvention::ExcludeUnknownPredictions => {
                m.get(Verdict::AF, c) + m.get(Verdict::NAF, c)
            }
        };
        // one-vs-rest accuracy
        let fp = m.predicted_total(c) - tp;
        let fn_ = m.gold_total(c) - tp;
        let tn = total - tp - fp - fn_;
        class_metrics(tp, m.predicted_total(c), recall_den, (tp + tn, total), convention)
    };
    let mut flags = Vec::new();
    IdentificationMetrics {
        matrix: *m,
        accuracy: ratio(correct, total, "accuracy", &mut flags),
        af: per_class(Verdict::AF),
        naf: per_class(Verdict::NAF),
        convention,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub label: String,
    pub support: usize,
    pub metrics: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassReport {
    pub classes: Vec<ClassRow>,
    pub accuracy: f64,
    pub macro_f1: f64,
}

impl PerClassReport {
    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.label == label).map(|c| &c.metrics)
    }
}

/// One-vs-rest metrics for every label seen in either list.
pub fn per_class_metrics<L: Ord + Clone + Display>(gold: &[L], pred: &[L]) -> Result<PerClassReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred.len()));
    }
    let n = gold.len();
    let labels: BTreeSet<&L> = gold.iter().chain(pred).collect();
    let mut classes = Vec::new();
    for l in labels {
        let tp = gold.iter().zip(pred).filter(|(g, p)| *g == l && *p == l).count();
        let predicted = pred.iter().filter(|p| *p == l).count();
        let support = gold.iter().filter(|g| *g == l).count();
        let tn = n - predicted - support + tp;
        classes.push(ClassRow {
            label: l.to_string(),
            support,
            metrics: class_metrics(tp, predicted, support, (tp + tn, n), RecallConvention::FullGold),
        });
    }
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    let macro_f1 = if classes.is_empty() {
        0.0
    } else {
        classes.iter().map(|c| c.metrics.f1).sum::<f64>() / classes.len() as f64
    };
    Ok(PerClassReport {
        classes,
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        macro_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matrix_scores_one() {
        let m = ConfusionMatrix3::from_cells([[7, 0, 0], [0, 3, 0], [0, 0, 0]]);
        for conv in [RecallConvention::FullGold, RecallConvention::ExcludeUnknownPredictions] {
            let r = identification_metrics(&m, conv);
            assert_eq!(r.accuracy, 1.0);
            for c in [&r.af, &r.naf] {
                assert_eq!((c.precision, c.recall, c.f1, c.accuracy), (1.0, 1.0, 1.0, 1.0));
            }
        }
    }

    #[test]
    fn single_item() {
        let m = confusion_matrix(&[Verdict::AF], &[Verdict::Unknown]).unwrap();
        assert_eq!(m.get(Verdict::Unknown, Verdict::AF), 1);
        assert_eq!(m.total(), 1);
        assert!(confusion_matrix(&[Verdict::AF], &[]).is_err());
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let m = ConfusionMatrix3::from_cells([[0, 0, 0], [0, 0, 0], [2, 1, 0]]);
        let r = identification_metrics(&m, RecallConvention::ExcludeUnknownPredictions);
        assert_eq!(r.af.precision, 0.0);
        assert!(r.af.zero_denominators.contains(&"precision".to_string()));
        assert!(r.af.zero_denominators.contains(&"recall".to_string()));
    }

    #[test]
    fn expand_round_trips() {
        let m = ConfusionMatrix3::from_cells([[4, 1, 0], [2, 3, 0], [1, 0, 0]]);
        let (g, p) = m.expand();
        assert_eq!(confusion_matrix(&g, &p).unwrap(), m);
    }
}
