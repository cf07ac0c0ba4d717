//! Pseudo multiple alignment: the framework sequence stacked with fragment fills.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::FragmentSequenceMatrix;
use crate::alphabet::{self, MASK};
use crate::error::{Error, Result};

/// Row 0 is the framework carrying the current noisy designable span; rows
/// 1..=k carry the fragment sequences in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoMsa {
    pub rows: Vec<String>,
    /// RMSD of the fragment behind each row; `None` for the query row.
    pub rmsds: Vec<Option<f64>>,
}

fn fill(framework: &str, span: &[usize]) -> String {
    let mut it = span.iter();
    framework
        .chars()
        .map(|c| {
            if c == MASK {
                alphabet::letter(*it.next().expect("span length checked"))
            } else {
                c
            }
        })
        .collect()
}

pub fn build_pseudo_msa(
    framework: &str,
    noisy_span: &str,
    fragments: &FragmentSequenceMatrix,
) -> Result<PseudoMsa> {
    let masked = framework.chars().filter(|&c| c == MASK).count();
    let noisy = alphabet::encode(noisy_span)
        .ok_or_else(|| Error::Domain(format!("noisy span {noisy_span:?} has non-standard letters")))?;
    if noisy.len() != masked {
        return Err(Error::Shape(format!(
            "framework masks {masked} positions, noisy span has {}",
            noisy.len()
        )));
    }
    if let Some(bad) = fragments.rows.iter().find(|r| r.len() != masked) {
        return Err(Error::Shape(format!(
            "fragment row of length {} does not fill {masked} masked positions",
            bad.len()
        )));
    }
    let mut rows = vec![fill(framework, &noisy)];
    let mut rmsds = vec![None];
    for (row, &rmsd) in fragments.rows.iter().zip(&fragments.rmsds) {
        rows.push(fill(framework, row));
        rmsds.push(Some(rmsd));
    }
    Ok(PseudoMsa { rows, rmsds })
}

impl PseudoMsa {
    pub fn to_fasta(&self) -> String {
        let mut out = String::new();
        for (i, (row, rmsd)) in self.rows.iter().zip(&self.rmsds).enumerate() {
            match rmsd {
                None => {
                    let _ = writeln!(out, ">row_{i}_query");
                }
                Some(r) => {
                    let _ = writeln!(out, ">row_{i}_frag rmsd={r:.6}");
                }
            }
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

/// Writes the alignment as FASTA with one unwrapped sequence line per record.
pub fn export_msa(msa: &PseudoMsa, path: &Path) -> Result<()> {
    fs::write(path, msa.to_fasta()).map_err(|e| Error::io(path, e))
}

/// Reads `(header, sequence)` records; sequence lines are concatenated.
pub fn read_msa_fasta(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(h) = line.strip_prefix('>') {
            records.push((h.to_string(), String::new()));
        } else if !line.is_empty() {
            let rec = records.last_mut().ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "sequence before first header".into(),
            })?;
            rec.1.push_str(line.trim());
        }
    }
    Ok(records)
}
