//! Structural retrieval of CDR-like fragments.
//!
//! A query motif is slid over every continuous window of every chain in a
//! corpus; windows within an RMSD threshold become [`FragmentMatch`]es, ranked
//! by RMSD. [`database`] persists the per-query results.

mod database;
mod search;

pub use database::{
    build_database, load_database, save_database, DatabaseQuery, FragmentDatabase, Manifest,
    DATABASE_VERSION, FRAGMENTS_FILE, MANIFEST_FILE,
};
pub use search::{
    search, search_with_stats, window_runs, SearchStats, DEFAULT_MULTISEG_CAP, GAP_DISTANCE,
};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structmodel::MIN_MOTIF_LEN;

/// One contiguous window of a source chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentLoc {
    pub chain_id: char,
    pub start_index: usize,
    pub length: usize,
}

/// A retrieved fragment.
///
/// `chain_id` and `start_index` locate the first segment; `length` and
/// `sequence` cover all segments. Single-segment matches have no
/// `extra_segments`.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentMatch {
    pub source_id: String,
    pub chain_id: char,
    pub start_index: usize,
    pub length: usize,
    pub rmsd: f64,
    pub sequence: String,
    pub extra_segments: Vec<SegmentLoc>,
}

impl FragmentMatch {
    pub fn segments(&self) -> Vec<SegmentLoc> {
        let extra: usize = self.extra_segments.iter().map(|s| s.length).sum();
        let mut out = vec![SegmentLoc {
            chain_id: self.chain_id,
            start_index: self.start_index,
            length: self.length - extra,
        }];
        out.extend_from_slice(&self.extra_segments);
        out
    }

    fn rank_cmp(&self, other: &Self) -> Ordering {
        self.rmsd
            .total_cmp(&other.rmsd)
            .then_with(|| self.source_id.cmp(&other.source_id))
            .then_with(|| self.chain_id.cmp(&other.chain_id))
            .then_with(|| self.start_index.cmp(&other.start_index))
            .then_with(|| self.extra_segments.cmp(&other.extra_segments))
    }
}

/// Where a query itself lives, so the search can drop its own occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceLocation {
    pub source_id: String,
    pub chain_id: char,
    pub start_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub rmsd_threshold: f64,
    pub exclude_source: Option<SourceLocation>,
    pub dedupe_sequences: bool,
    pub max_results: Option<usize>,
    /// Per-segment candidate cap for multi-segment queries; `None` enumerates every tuple.
    pub multiseg_cap: Option<usize>,
}

impl SearchConfig {
    /// Generation-mode defaults: no sequence dedupe.
    pub fn new(rmsd_threshold: f64) -> Self {
        SearchConfig {
            rmsd_threshold,
            exclude_source: None,
            dedupe_sequences: false,
            max_results: None,
            multiseg_cap: Some(DEFAULT_MULTISEG_CAP),
        }
    }

    /// Training-data export defaults: identical sequences collapse to their best match.
    pub fn for_training(rmsd_threshold: f64) -> Self {
        SearchConfig {
            dedupe_sequences: true,
            ..Self::new(rmsd_threshold)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rmsd_threshold > 0.0 && self.rmsd_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "rmsd threshold must be positive, got {}",
                self.rmsd_threshold
            )));
        }
        Ok(())
    }
}

/// Length-dependent RMSD threshold: `min(base + per_residue * (m - 4), cap)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRule {
    pub base: f64,
    pub per_residue: f64,
    pub cap: f64,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule {
            base: 0.4,
            per_residue: 0.05,
            cap: 1.0,
        }
    }
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.base > 0.0 && self.per_residue >= 0.0 && self.cap >= self.base;
        if !ok || ![self.base, self.per_residue, self.cap].iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!("invalid threshold rule {self:?}")));
        }
        Ok(())
    }

    pub fn threshold(&self, m: usize) -> Result<f64> {
        if m < MIN_MOTIF_LEN {
            return Err(Error::Domain(format!(
                "threshold defined for lengths >= {MIN_MOTIF_LEN}, got {m}"
            )));
        }
        let raw = self.base + self.per_residue * (m - MIN_MOTIF_LEN) as f64;
        // Snap to micro-angstroms so 0.4 + 6 * 0.05 is exactly 0.7.
        Ok(((raw.min(self.cap)) * 1e6).round() / 1e6)
    }
}

pub fn default_threshold(m: usize) -> Result<f64> {
    ThresholdRule::default().threshold(m)
}

/// Stable ascending sort by `(rmsd, source_id, chain_id, start_index)`.
pub fn rank(mut matches: Vec<FragmentMatch>) -> Vec<FragmentMatch> {
    matches.sort_by(FragmentMatch::rank_cmp);
    matches
}
