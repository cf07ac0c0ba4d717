//! Alpha-carbon backbone model parsed from PDB fixed-column files.
//!
//! Only `ATOM` records whose atom name is `CA` are kept. Parsing stops at the
//! first `ENDMDL`, so multi-model files contribute their first model only.

use std::collections::HashMap;
use std::fmt::Write as _;

use log::warn;

use crate::alphabet::{self, MASK};
use crate::error::{Error, Result};
use crate::geom::Coord;

/// Minimum number of residues a searchable motif must contain.
pub const MIN_MOTIF_LEN: usize = 4;

/// Consecutive CA distances outside this range flag a suspicious query segment.
pub const CA_CONTINUITY_MIN: f64 = 2.0;
pub const CA_CONTINUITY_MAX: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormatHint {
    #[default]
    Pdb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub chain_id: char,
    pub seq_number: i32,
    pub insertion_code: Option<char>,
    /// One-letter code, or `X` for anything outside the 20 standard residues.
    pub aa: char,
    pub ca: Coord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub id: char,
    pub residues: Vec<Residue>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn sequence(&self) -> String {
        self.residues.iter().map(|r| r.aa).collect()
    }

    pub fn coords(&self) -> Vec<Coord> {
        self.residues.iter().map(|r| r.ca).collect()
    }
}

/// A parsed structure. Chains keep the order of their first appearance in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneStructure {
    pub id: String,
    pub chains: Vec<Chain>,
}

impl BackboneStructure {
    pub fn chain(&self, id: char) -> Option<&Chain> {
        self.chains.iter().find(|c| c.id == id)
    }

    pub fn residue_count(&self) -> usize {
        self.chains.iter().map(Chain::len).sum()
    }

    /// Serializes the CA trace back to PDB `ATOM` records.
    pub fn to_pdb_string(&self) -> String {
        let mut out = String::new();
        let mut serial = 1;
        for chain in &self.chains {
            for r in &chain.residues {
                let _ = writeln!(
                    out,
                    "ATOM  {:>5}  CA  {:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}           C",
                    serial,
                    alphabet::one_to_three(r.aa),
                    r.chain_id,
                    r.seq_number,
                    r.insertion_code.unwrap_or(' '),
                    r.ca.x,
                    r.ca.y,
                    r.ca.z,
                    1.0,
                    0.0
                );
                serial += 1;
            }
            out.push_str("TER\n");
        }
        out.push_str("END\n");
        out
    }
}

/// A designable span: `length` consecutive residues starting at a 0-based chain index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CdrSpan {
    pub chain_id: char,
    pub start_index: usize,
    pub length: usize,
}

impl CdrSpan {
    pub fn new(chain_id: char, start_index: usize, length: usize) -> Self {
        CdrSpan {
            chain_id,
            start_index,
            length,
        }
    }

    /// Resolves the span against a structure, returning the chain it lives on.
    pub fn resolve<'a>(&self, s: &'a BackboneStructure) -> Result<&'a Chain> {
        let chain = s.chain(self.chain_id).ok_or_else(|| {
            Error::Range(format!("chain {} not present in {}", self.chain_id, s.id))
        })?;
        if self.length == 0 {
            return Err(Error::Range("span length must be at least 1".into()));
        }
        if self.start_index + self.length > chain.len() {
            return Err(Error::Range(format!(
                "span {}..{} exceeds chain {} of length {}",
                self.start_index,
                self.start_index + self.length,
                self.chain_id,
                chain.len()
            )));
        }
        Ok(chain)
    }
}

/// Query coordinates, possibly split over several discontiguous segments.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifQuery {
    segments: Vec<Vec<Coord>>,
}

impl MotifQuery {
    pub fn new(segments: Vec<Vec<Coord>>) -> Result<Self> {
        if segments.is_empty() || segments.iter().any(Vec::is_empty) {
            return Err(Error::Range("motif segments must be non-empty".into()));
        }
        if segments.iter().flatten().any(|c| !c.iter().all(|v| v.is_finite())) {
            return Err(Error::Domain("motif coordinates must be finite".into()));
        }
        let q = MotifQuery { segments };
        if q.total_len() < MIN_MOTIF_LEN {
            return Err(Error::Range(format!(
                "motif has {} residues, at least {} required",
                q.total_len(),
                MIN_MOTIF_LEN
            )));
        }
        for (seg, i, d) in q.continuity_violations() {
            warn!(
                "motif segment {seg}: CA distance {d:.2} A between positions {i} and {} outside [{CA_CONTINUITY_MIN}, {CA_CONTINUITY_MAX}]",
                i + 1
            );
        }
        Ok(q)
    }

    pub fn single(coords: Vec<Coord>) -> Result<Self> {
        Self::new(vec![coords])
    }

    pub fn segments(&self) -> &[Vec<Coord>] {
        &self.segments
    }

    pub fn segment_lengths(&self) -> Vec<usize> {
        self.segments.iter().map(Vec::len).collect()
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    /// All coordinates in segment order.
    pub fn concatenated(&self) -> Vec<Coord> {
        self.segments.iter().flatten().copied().collect()
    }

    /// `(segment, position, distance)` for every consecutive pair outside the continuity bounds.
    pub fn continuity_violations(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (s, seg) in self.segments.iter().enumerate() {
            for (i, w) in seg.windows(2).enumerate() {
                let d = (w[1] - w[0]).norm();
                if !(CA_CONTINUITY_MIN..=CA_CONTINUITY_MAX).contains(&d) {
                    out.push((s, i, d));
                }
            }
        }
        out
    }
}

fn field(line: &str, start: usize, end: usize) -> &str {
    // 1-based inclusive columns; lines may be shorter than 80 columns.
    let end = end.min(line.len());
    if start > end {
        return "";
    }
    line.get(start - 1..end).unwrap_or("")
}

struct CaRecord {
    chain_id: char,
    seq_number: i32,
    insertion_code: Option<char>,
    res_name: String,
    ca: Coord,
    occupancy: f64,
}

fn parse_atom_line(line: &str, lineno: usize) -> Result<Option<CaRecord>> {
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    if line.len() < 54 {
        return Err(err(format!(
            "ATOM record has {} columns, coordinates need 54",
            line.len()
        )));
    }
    if !line.is_char_boundary(54) || !line[..54].is_ascii() {
        return Err(err("non-ASCII characters in fixed columns".into()));
    }
    if field(line, 13, 16).trim() != "CA" {
        return Ok(None);
    }
    let chain_id = field(line, 22, 22).chars().next().unwrap_or(' ');
    let seq_number = field(line, 23, 26)
        .trim()
        .parse::<i32>()
        .map_err(|_| err(format!("bad residue number {:?}", field(line, 23, 26))))?;
    let insertion_code = field(line, 27, 27).chars().next().filter(|c| *c != ' ');
    let mut xyz = [0.0; 3];
    for (k, v) in xyz.iter_mut().enumerate() {
        let (a, b) = (31 + 8 * k, 38 + 8 * k);
        let raw = field(line, a, b);
        *v = raw
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| err(format!("bad coordinate {raw:?} in columns {a}-{b}")))?;
    }
    let occ_raw = field(line, 55, 60).trim();
    let occupancy = if occ_raw.is_empty() {
        1.0
    } else {
        occ_raw
            .parse::<f64>()
            .map_err(|_| err(format!("bad occupancy {occ_raw:?}")))?
    };
    Ok(Some(CaRecord {
        chain_id,
        seq_number,
        insertion_code,
        res_name: field(line, 18, 20).trim().to_string(),
        ca: Coord::new(xyz[0], xyz[1], xyz[2]),
        occupancy,
    }))
}

type ResidueKey = (char, i32, Option<char>);

/// Parses a PDB text stream into an alpha-carbon model.
///
/// For residues with alternate locations the highest-occupancy CA wins; ties go
/// to the record that appears first.
pub fn parse_backbone(bytes: &[u8], id: &str, hint: FormatHint) -> Result<BackboneStructure> {
    let FormatHint::Pdb = hint;

    let mut chains: Vec<Chain> = Vec::new();
    // (chain, seq, icode) -> (chain slot, residue slot, occupancy of kept record)
    let mut seen: HashMap<ResidueKey, (usize, usize, f64)> = HashMap::new();

    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let lineno = i + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if raw.starts_with(b"ENDMDL") {
            break;
        }
        if !raw.starts_with(b"ATOM  ") {
            continue;
        }
        let line = std::str::from_utf8(raw).map_err(|_| Error::Parse {
            line: lineno,
            message: "invalid UTF-8".into(),
        })?;
        let Some(rec) = parse_atom_line(line, lineno)? else {
            continue;
        };
        let key = (rec.chain_id, rec.seq_number, rec.insertion_code);
        if let Some(&(ci, ri, occ)) = seen.get(&key) {
            if rec.occupancy > occ {
                let r = &mut chains[ci].residues[ri];
                r.ca = rec.ca;
                r.aa = alphabet::three_to_one(&rec.res_name);
                seen.insert(key, (ci, ri, rec.occupancy));
            }
            continue;
        }
        let ci = match chains.iter().position(|c| c.id == rec.chain_id) {
            Some(ci) => ci,
            None => {
                chains.push(Chain {
                    id: rec.chain_id,
                    residues: Vec::new(),
                });
                chains.len() - 1
            }
        };
        let residues = &mut chains[ci].residues;
        residues.push(Residue {
            chain_id: rec.chain_id,
            seq_number: rec.seq_number,
            insertion_code: rec.insertion_code,
            aa: alphabet::three_to_one(&rec.res_name),
            ca: rec.ca,
        });
        seen.insert(key, (ci, residues.len() - 1, rec.occupancy));
    }

    if chains.is_empty() {
        return Err(Error::EmptyStructure);
    }
    Ok(BackboneStructure {
        id: id.to_string(),
        chains,
    })
}

/// One segment per span, in span order.
pub fn extract_motif(s: &BackboneStructure, spans: &[CdrSpan]) -> Result<MotifQuery> {
    let mut segments = Vec::with_capacity(spans.len());
    for span in spans {
        let chain = span.resolve(s)?;
        segments.push(
            chain.residues[span.start_index..span.start_index + span.length]
                .iter()
                .map(|r| r.ca)
                .collect(),
        );
    }
    MotifQuery::new(segments)
}

/// The chain sequence with the span replaced by [`MASK`].
pub fn framework_sequence(s: &BackboneStructure, span: &CdrSpan) -> Result<String> {
    let chain = span.resolve(s)?;
    let end = span.start_index + span.length;
    Ok(chain
        .residues
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if (span.start_index..end).contains(&i) {
                MASK
            } else {
                r.aa
            }
        })
        .collect())
}
