use std::collections::HashSet;
use std::ops::AddAssign;

use rayon::prelude::*;

use super::{rank, FragmentMatch, SearchConfig, SegmentLoc};
use crate::error::Result;
use crate::geom::{kabsch, multi_segment_rmsd, rmsd_bound, Coord};
use crate::structmodel::{BackboneStructure, Chain, MotifQuery};

/// Consecutive CA atoms farther apart than this mark a chain break.
pub const GAP_DISTANCE: f64 = 4.5;

/// Default number of candidate windows kept per segment of a multi-segment query.
pub const DEFAULT_MULTISEG_CAP: usize = 64;

/// Slack added to the threshold before pruning on the lower bound, covering
/// floating-point rounding in the bound itself.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub windows: usize,
    pub pruned: usize,
    pub superposed: usize,
    /// Windows skipped because they contain a non-standard residue.
    pub unknown_residue: usize,
    pub excluded: usize,
    pub deduplicated: usize,
}

impl AddAssign for SearchStats {
    fn add_assign(&mut self, o: Self) {
        self.windows += o.windows;
        self.pruned += o.pruned;
        self.superposed += o.superposed;
        self.unknown_residue += o.unknown_residue;
        self.excluded += o.excluded;
        self.deduplicated += o.deduplicated;
    }
}

fn continuous(a: &crate::structmodel::Residue, b: &crate::structmodel::Residue) -> bool {
    if (b.ca - a.ca).norm() > GAP_DISTANCE {
        return false;
    }
    match b.seq_number - a.seq_number {
        1 => true,
        0 => a.insertion_code != b.insertion_code,
        _ => false,
    }
}

/// For each residue index, the last index of the unbroken run that contains it.
pub fn window_runs(chain: &Chain) -> Vec<usize> {
    let n = chain.len();
    let mut run_end = vec![0; n];
    let mut end = n.saturating_sub(1);
    for i in (0..n).rev() {
        if i + 1 < n && !continuous(&chain.residues[i], &chain.residues[i + 1]) {
            end = i;
        }
        run_end[i] = end;
    }
    run_end
}

struct ChainIndex<'a> {
    chain: &'a Chain,
    coords: Vec<Coord>,
    run_end: Vec<usize>,
    // unknown[i] = number of non-standard residues in [0, i)
    unknown: Vec<usize>,
}

impl<'a> ChainIndex<'a> {
    fn new(chain: &'a Chain) -> Self {
        let mut unknown = Vec::with_capacity(chain.len() + 1);
        unknown.push(0);
        for r in &chain.residues {
            let bad = crate::alphabet::index_of(r.aa).is_none() as usize;
            unknown.push(unknown.last().unwrap() + bad);
        }
        ChainIndex {
            chain,
            coords: chain.coords(),
            run_end: window_runs(chain),
            unknown,
        }
    }

    fn windows(&self, len: usize) -> impl Iterator<Item = usize> + '_ {
        (0..(self.chain.len() + 1).saturating_sub(len)).filter(move |&s| self.run_end[s] >= s + len - 1)
    }

    fn has_unknown(&self, start: usize, len: usize) -> bool {
        self.unknown[start + len] > self.unknown[start]
    }

    fn sequence(&self, start: usize, len: usize) -> String {
        self.chain.residues[start..start + len].iter().map(|r| r.aa).collect()
    }
}

fn search_single(
    query: &[Coord],
    s: &BackboneStructure,
    threshold: f64,
    stats: &mut SearchStats,
) -> Result<Vec<FragmentMatch>> {
    let len = query.len();
    let mut out = Vec::new();
    for chain in &s.chains {
        let idx = ChainIndex::new(chain);
        for start in idx.windows(len) {
            stats.windows += 1;
            if idx.has_unknown(start, len) {
                stats.unknown_residue += 1;
                continue;
            }
            let window = &idx.coords[start..start + len];
            if rmsd_bound(query, window) > threshold + PRUNE_SLACK {
                stats.pruned += 1;
                continue;
            }
            stats.superposed += 1;
            let rmsd = kabsch(query, window)?.rmsd;
            if rmsd <= threshold {
                out.push(FragmentMatch {
                    source_id: s.id.clone(),
                    chain_id: chain.id,
                    start_index: start,
                    length: len,
                    rmsd,
                    sequence: idx.sequence(start, len),
                    extra_segments: vec![],
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct Candidate {
    chain: usize,
    start: usize,
    bound: f64,
}

fn search_multi(
    query: &MotifQuery,
    s: &BackboneStructure,
    threshold: f64,
    cap: Option<usize>,
    stats: &mut SearchStats,
) -> Result<Vec<FragmentMatch>> {
    let total = query.total_len() as f64;
    // Joint RMSD^2 * N >= sum_s n_s * rmsd_s^2 >= sum_s n_s * bound_s^2.
    let budget = total * (threshold + PRUNE_SLACK).powi(2);
    let indices: Vec<ChainIndex> = s.chains.iter().map(ChainIndex::new).collect();

    let mut per_segment: Vec<Vec<Candidate>> = Vec::new();
    for seg in query.segments() {
        let len = seg.len();
        let mut cands = Vec::new();
        for (ci, idx) in indices.iter().enumerate() {
            for start in idx.windows(len) {
                stats.windows += 1;
                if idx.has_unknown(start, len) {
                    stats.unknown_residue += 1;
                    continue;
                }
                let bound = if len >= 2 {
                    rmsd_bound(seg, &idx.coords[start..start + len])
                } else {
                    0.0
                };
                if len as f64 * bound * bound > budget {
                    stats.pruned += 1;
                    continue;
                }
                cands.push(Candidate { chain: ci, start, bound });
            }
        }
        cands.sort_by(|a, b| {
            a.bound
                .total_cmp(&b.bound)
                .then(a.chain.cmp(&b.chain))
                .then(a.start.cmp(&b.start))
        });
        if let Some(cap) = cap {
            cands.truncate(cap);
        }
        per_segment.push(cands);
    }

    let lens = query.segment_lengths();
    let mut out = Vec::new();
    let mut chosen: Vec<Candidate> = Vec::with_capacity(lens.len());

    fn overlaps(chosen: &[Candidate], lens: &[usize], c: &Candidate, len: usize) -> bool {
        chosen.iter().zip(lens).any(|(o, &olen)| {
            o.chain == c.chain && o.start < c.start + len && c.start < o.start + olen
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        depth: usize,
        spent: f64,
        query: &MotifQuery,
        s: &BackboneStructure,
        indices: &[ChainIndex],
        per_segment: &[Vec<Candidate>],
        lens: &[usize],
        budget: f64,
        threshold: f64,
        chosen: &mut Vec<Candidate>,
        out: &mut Vec<FragmentMatch>,
        stats: &mut SearchStats,
    ) -> Result<()> {
        if depth == per_segment.len() {
            let coords: Vec<Vec<Coord>> = chosen
                .iter()
                .zip(lens)
                .map(|(c, &len)| indices[c.chain].coords[c.start..c.start + len].to_vec())
                .collect();
            stats.superposed += 1;
            let rmsd = multi_segment_rmsd(query, &coords)?.rmsd;
            if rmsd <= threshold {
                let locs: Vec<SegmentLoc> = chosen
                    .iter()
                    .zip(lens)
                    .map(|(c, &length)| SegmentLoc {
                        chain_id: s.chains[c.chain].id,
                        start_index: c.start,
                        length,
                    })
                    .collect();
                let sequence = chosen
                    .iter()
                    .zip(lens)
                    .map(|(c, &len)| indices[c.chain].sequence(c.start, len))
                    .collect();
                out.push(FragmentMatch {
                    source_id: s.id.clone(),
                    chain_id: locs[0].chain_id,
                    start_index: locs[0].start_index,
                    length: lens.iter().sum(),
                    rmsd,
                    sequence,
                    extra_segments: locs[1..].to_vec(),
                });
            }
            return Ok(());
        }
        let len = lens[depth];
        for c in &per_segment[depth] {
            let cost = spent + len as f64 * c.bound * c.bound;
            if cost > budget {
                stats.pruned += 1;
                continue;
            }
            if overlaps(chosen, lens, c, len) {
                continue;
            }
            chosen.push(*c);
            recurse(
                depth + 1,
                cost,
                query,
                s,
                indices,
                per_segment,
                lens,
                budget,
                threshold,
                chosen,
                out,
                stats,
            )?;
            chosen.pop();
        }
        Ok(())
    }

    recurse(
        0,
        0.0,
        query,
        s,
        &indices,
        &per_segment,
        &lens,
        budget,
        threshold,
        &mut chosen,
        &mut out,
        stats,
    )?;
    Ok(out)
}

/// Searches every structure of `corpus` for windows superposing onto `query`
/// within the configured threshold.
///
/// Multi-segment queries combine windows drawn from a single structure. The
/// result is ranked, filtered and truncated according to `cfg`.
pub fn search_with_stats(
    query: &MotifQuery,
    corpus: &[BackboneStructure],
    cfg: &SearchConfig,
) -> Result<(Vec<FragmentMatch>, SearchStats)> {
    cfg.validate()?;
    let threshold = cfg.rmsd_threshold;
    let per_structure: Vec<Result<(Vec<FragmentMatch>, SearchStats)>> = corpus
        .par_iter()
        .map(|s| {
            let mut stats = SearchStats::default();
            let found = if query.segments().len() == 1 {
                search_single(&query.segments()[0], s, threshold, &mut stats)?
            } else {
                search_multi(query, s, threshold, cfg.multiseg_cap, &mut stats)?
            };
            Ok((found, stats))
        })
        .collect();

    let mut stats = SearchStats::default();
    let mut all = Vec::new();
    for r in per_structure {
        let (found, st) = r?;
        stats += st;
        all.extend(found);
    }

    if let Some(ex) = &cfg.exclude_source {
        let before = all.len();
        all.retain(|m| {
            !(m.source_id == ex.source_id && m.chain_id == ex.chain_id && m.start_index == ex.start_index)
        });
        stats.excluded = before - all.len();
    }

    let mut ranked = rank(all);
    if cfg.dedupe_sequences {
        let before = ranked.len();
        let mut seen = HashSet::new();
        ranked.retain(|m| seen.insert(m.sequence.clone()));
        stats.deduplicated = before - ranked.len();
    }
    if let Some(max) = cfg.max_results {
        ranked.truncate(max);
    }
    Ok((ranked, stats))
}

pub fn search(
    query: &MotifQuery,
    corpus: &[BackboneStructure],
    cfg: &SearchConfig,
) -> Result<Vec<FragmentMatch>> {
    search_with_stats(query, corpus, cfg).map(|(m, _)| m)
}
