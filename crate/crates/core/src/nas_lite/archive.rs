use serde::{Deserialize, Serialize};

use super::space::Candidate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub candidate: Candidate,
    pub accuracy: f64,
    pub latency_s: f64,
}

/// `a` is at least as good on both objectives and strictly better on one.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    let ((acc_a, lat_a), (acc_b, lat_b)) = (a, b);
    acc_a >= acc_b && lat_a <= lat_b && (acc_a > acc_b || lat_a < lat_b)
}

/// Nondominated set under (max accuracy, min latency), kept sorted by latency.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the point unless an archived point is at least as good on both objectives.
    /// Returns whether it was kept.
    pub fn insert(&mut self, entry: ArchiveEntry) -> bool {
        let p = (entry.accuracy, entry.latency_s);
        if self
            .entries
            .iter()
            .any(|e| e.accuracy >= p.0 && e.latency_s <= p.1)
        {
            return false;
        }
        self.entries.retain(|e| !dominates(p, (e.accuracy, e.latency_s)));
        let at = self
            .entries
            .partition_point(|e| e.latency_s < entry.latency_s);
        self.entries.insert(at, entry);
        true
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_nondominated(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, a)| {
            self.entries.iter().enumerate().all(|(j, b)| {
                i == j || !dominates((a.accuracy, a.latency_s), (b.accuracy, b.latency_s))
            })
        })
    }
}
