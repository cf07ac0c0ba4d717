//! On-disk fragment database: a JSON manifest plus a TSV of ranked matches.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{rank, search, FragmentMatch, SearchConfig, SegmentLoc, SourceLocation, ThresholdRule};
use crate::alphabet;
use crate::error::{Error, Result};
use crate::structmodel::{BackboneStructure, MotifQuery};

pub const DATABASE_VERSION: u64 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FRAGMENTS_FILE: &str = "fragments.tsv";
const HEADER: &str = "query_id\tsource_id\tchain\tstart_index\tlength\trmsd\tsequence";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u64,
    pub threshold_rule: ThresholdRule,
    pub corpus_size: usize,
    pub queries: usize,
    /// 0 when tuple enumeration is uncapped.
    pub multiseg_cap: usize,
    /// Directory the corpus was read from, if built from disk.
    #[serde(default)]
    pub corpus_dir: Option<String>,
    /// Every query id, including those without matches.
    pub query_ids: Vec<String>,
    /// Hex SHA-256 of `fragments.tsv`.
    pub fragments_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentDatabase {
    pub entries: BTreeMap<String, Vec<FragmentMatch>>,
    pub manifest: Manifest,
}

impl FragmentDatabase {
    pub fn entry(&self, query_id: &str) -> Option<&[FragmentMatch]> {
        self.entries.get(query_id).map(Vec::as_slice)
    }

    /// Assembles a database from precomputed entries; rows are ranked and their
    /// RMSDs rounded to the six decimals the file format stores.
    pub fn from_entries(
        entries: BTreeMap<String, Vec<FragmentMatch>>,
        rule: ThresholdRule,
        corpus_size: usize,
        multiseg_cap: Option<usize>,
    ) -> Self {
        let entries: BTreeMap<_, _> = entries
            .into_iter()
            .map(|(id, rows)| {
                let rows = rows
                    .into_iter()
                    .map(|mut m| {
                        m.rmsd = quantize(m.rmsd);
                        m
                    })
                    .collect();
                (id, rank(rows))
            })
            .collect();
        let mut db = FragmentDatabase {
            manifest: Manifest {
                version: DATABASE_VERSION,
                threshold_rule: rule,
                corpus_size,
                queries: entries.len(),
                multiseg_cap: multiseg_cap.unwrap_or(0),
                corpus_dir: None,
                query_ids: entries.keys().cloned().collect(),
                fragments_sha256: String::new(),
            },
            entries,
        };
        db.manifest.fragments_sha256 = sha256_hex(db.fragments_tsv().as_bytes());
        db
    }

    /// Renders `fragments.tsv`: queries in id order, rows in rank order.
    pub fn fragments_tsv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for (qid, rows) in &self.entries {
            for m in rows {
                let segs = m.segments();
                let join = |f: &dyn Fn(&SegmentLoc) -> String| {
                    segs.iter().map(f).collect::<Vec<_>>().join(",")
                };
                let (chain, start, length) = if segs.len() == 1 {
                    (m.chain_id.to_string(), m.start_index.to_string(), m.length.to_string())
                } else {
                    (
                        join(&|s| s.chain_id.to_string()),
                        join(&|s| s.start_index.to_string()),
                        join(&|s| s.length.to_string()),
                    )
                };
                let _ = writeln!(
                    out,
                    "{qid}\t{}\t{chain}\t{start}\t{length}\t{:.6}\t{}",
                    m.source_id, m.rmsd, m.sequence
                );
            }
        }
        out
    }
}

/// A query for database construction: its motif and, when known, where it came from.
#[derive(Debug, Clone)]
pub struct DatabaseQuery {
    pub id: String,
    pub motif: MotifQuery,
    pub origin: Option<SourceLocation>,
}

fn quantize(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the search for every query with `threshold = rule(query length)`,
/// excluding each query's own location and keeping duplicate sequences.
pub fn build_database(
    queries: &[DatabaseQuery],
    corpus: &[BackboneStructure],
    rule: ThresholdRule,
    multiseg_cap: Option<usize>,
) -> Result<FragmentDatabase> {
    rule.validate()?;
    let mut ids = HashSet::new();
    for q in queries {
        if !ids.insert(q.id.as_str()) {
            return Err(Error::Config(format!("duplicate query id {:?}", q.id)));
        }
        if q.id.is_empty() || q.id.contains(['\t', '\n', '\r']) {
            return Err(Error::Config(format!("invalid query id {:?}", q.id)));
        }
    }
    let mut entries = BTreeMap::new();
    for q in queries {
        let cfg = SearchConfig {
            rmsd_threshold: rule.threshold(q.motif.total_len())?,
            exclude_source: q.origin.clone(),
            dedupe_sequences: false,
            max_results: None,
            multiseg_cap,
        };
        let hits = search(&q.motif, corpus, &cfg)?;
        log::info!("query {}: {} fragments at threshold {:.2}", q.id, hits.len(), cfg.rmsd_threshold);
        entries.insert(q.id.clone(), hits);
    }
    Ok(FragmentDatabase::from_entries(entries, rule, corpus.len(), multiseg_cap))
}

pub fn save_database(db: &FragmentDatabase, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tsv = db.fragments_tsv();
    let mut manifest = db.manifest.clone();
    manifest.fragments_sha256 = sha256_hex(tsv.as_bytes());
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    let tsv_path = dir.join(FRAGMENTS_FILE);
    fs::write(&tsv_path, tsv).map_err(|e| Error::io(&tsv_path, e))?;
    let man_path = dir.join(MANIFEST_FILE);
    fs::write(&man_path, json).map_err(|e| Error::io(&man_path, e))?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str, line: usize) -> Result<Vec<T>> {
    raw.split(',')
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Corruption(format!("line {line}: bad {what} {raw:?}")))
        })
        .collect()
}

fn parse_row(line: &str, lineno: usize) -> Result<(String, FragmentMatch)> {
    let bad = |msg: &str| Error::Corruption(format!("{FRAGMENTS_FILE} line {lineno}: {msg}"));
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 7 {
        return Err(bad(&format!("expected 7 columns, found {}", cols.len())));
    }
    let chains: Vec<char> = cols[2]
        .split(',')
        .map(|c| {
            let mut it = c.chars();
            match (it.next(), it.next()) {
                (Some(ch), None) => Ok(ch),
                _ => Err(bad("chain must be a single character")),
            }
        })
        .collect::<Result<_>>()?;
    let starts: Vec<usize> = parse_list(cols[3], "start_index", lineno)?;
    let lengths: Vec<usize> = parse_list(cols[4], "length", lineno)?;
    if chains.len() != starts.len() || starts.len() != lengths.len() {
        return Err(bad("segment columns disagree in count"));
    }
    let rmsd: f64 = cols[5].parse().map_err(|_| bad("bad rmsd"))?;
    if !(rmsd >= 0.0 && rmsd.is_finite()) {
        return Err(bad("rmsd must be a non-negative number"));
    }
    let sequence = cols[6].to_string();
    let length: usize = lengths.iter().sum();
    if sequence.chars().count() != length || alphabet::encode(&sequence).is_none() {
        return Err(bad("sequence does not match length or alphabet"));
    }
    let extra_segments = (1..chains.len())
        .map(|i| SegmentLoc {
            chain_id: chains[i],
            start_index: starts[i],
            length: lengths[i],
        })
        .collect();
    Ok((
        cols[0].to_string(),
        FragmentMatch {
            source_id: cols[1].to_string(),
            chain_id: chains[0],
            start_index: starts[0],
            length,
            rmsd,
            sequence,
            extra_segments,
        },
    ))
}

pub fn load_database(dir: &Path) -> Result<FragmentDatabase> {
    let man_path = dir.join(MANIFEST_FILE);
    let raw = fs::read_to_string(&man_path).map_err(|e| Error::io(&man_path, e))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| Error::Corruption(format!("{MANIFEST_FILE}: {e}")))?;
    let version = value.get("version").and_then(|v| v.as_u64());
    match version {
        Some(DATABASE_VERSION) => {}
        Some(found) => {
            return Err(Error::Version {
                found,
                supported: DATABASE_VERSION,
            })
        }
        None => return Err(Error::Corruption(format!("{MANIFEST_FILE}: missing version"))),
    }
    let manifest: Manifest = serde_json::from_value(value)
        .map_err(|e| Error::Corruption(format!("{MANIFEST_FILE}: {e}")))?;

    let tsv_path = dir.join(FRAGMENTS_FILE);
    let bytes = fs::read(&tsv_path).map_err(|e| Error::io(&tsv_path, e))?;
    if sha256_hex(&bytes) != manifest.fragments_sha256 {
        return Err(Error::Corruption(format!("{FRAGMENTS_FILE}: checksum mismatch")));
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Corruption(format!("{FRAGMENTS_FILE}: invalid UTF-8")))?;
    let mut lines = text.split_terminator('\n');
    if lines.next() != Some(HEADER) {
        return Err(Error::Corruption(format!("{FRAGMENTS_FILE}: bad header")));
    }
    if manifest.query_ids.len() != manifest.queries {
        return Err(Error::Corruption("manifest query count disagrees with query ids".into()));
    }
    let mut entries: BTreeMap<String, Vec<FragmentMatch>> = manifest
        .query_ids
        .iter()
        .map(|id| (id.clone(), Vec::new()))
        .collect();
    if entries.len() != manifest.queries {
        return Err(Error::Corruption("duplicate query ids in manifest".into()));
    }
    for (i, line) in lines.enumerate() {
        let (qid, m) = parse_row(line, i + 2)?;
        let rows = entries.get_mut(&qid).ok_or_else(|| {
            Error::Corruption(format!("{FRAGMENTS_FILE} line {}: unknown query {qid:?}", i + 2))
        })?;
        if rows.last().is_some_and(|prev| prev.rank_cmp(&m).is_gt()) {
            return Err(Error::Corruption(format!(
                "{FRAGMENTS_FILE} line {}: rows out of rank order",
                i + 2
            )));
        }
        rows.push(m);
    }
    Ok(FragmentDatabase { entries, manifest })
}
