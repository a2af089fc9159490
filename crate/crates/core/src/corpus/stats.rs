use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ArgumentRecord;
use crate::taxonomy::{LogicCategory, SentenceType};

/// Class × logic count grid. `counts[logic][class]`, both axes in
/// [`LogicCategory::ALL`] / [`SentenceType::ALL`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub counts: [[usize; 5]; 5],
}

impl DistributionTable {
    pub fn get(&self, class: SentenceType, logic: LogicCategory) -> usize {
        self.counts[logic.index()][class.index()]
    }

    pub fn class_total(&self, class: SentenceType) -> usize {
        self.counts.iter().map(|row| row[class.index()]).sum()
    }

    pub fn logic_total(&self, logic: LogicCategory) -> usize {
        self.counts[logic.index()].iter().sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Plain-text grid with logic rows, class columns and totals.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "");
        for c in SentenceType::ALL {
            let _ = write!(out, "{:>10}", c.code());
        }
        let _ = writeln!(out, "{:>10}", "Total");
        for l in LogicCategory::ALL {
            let _ = write!(out, "{:<10}", l.code());
            for c in SentenceType::ALL {
                let _ = write!(out, "{:>10}", self.get(c, l));
            }
            let _ = writeln!(out, "{:>10}", self.logic_total(l));
        }
        let _ = write!(out, "{:<10}", "Total");
        for c in SentenceType::ALL {
            let _ = write!(out, "{:>10}", self.class_total(c));
        }
        let _ = writeln!(out, "{:>10}", self.total());
        out
    }
}

pub fn dataset_stats(records: &[ArgumentRecord]) -> DistributionTable {
    let mut table = DistributionTable::default();
    for r in records {
        table.counts[r.logic.index()][r.class.index()] += 1;
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_gives_zero_grid() {
        let t = dataset_stats(&[]);
        assert_eq!(t.total(), 0);
        assert_eq!(t, DistributionTable::default());
    }

    #[test]
    fn single_record_fills_one_cell() {
        let rec = ArgumentRecord::new("1", "a let alone b")
            .with_labels(SentenceType::RE, LogicCategory::NS);
        let t = dataset_stats(&[rec]);
        assert_eq!(t.get(SentenceType::RE, LogicCategory::NS), 1);
        assert_eq!(t.class_total(SentenceType::RE), 1);
        assert_eq!(t.logic_total(LogicCategory::NS), 1);
        assert_eq!(t.total(), 1);
        assert!(t.render().contains("Total"));
    }
}
