//! Position-specific profile built from the top-ranked fragment sequences.

use crate::alphabet::{self, AaDist, NUM_AA};
use crate::diffusion::{Denoiser, DenoiserOutput};
use crate::error::{Error, Result};
use crate::retrieval::FragmentMatch;

pub const DEFAULT_K: usize = 15;
pub const MAX_K: usize = 64;
pub const DEFAULT_PSEUDOCOUNT: f64 = 0.1;
pub const DEFAULT_BLEND_WEIGHT: f64 = 1.0;

/// Top-ranked fragment sequences, encoded, with the RMSD of each source window.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentSequenceMatrix {
    pub rows: Vec<Vec<usize>>,
    pub rmsds: Vec<f64>,
}

impl FragmentSequenceMatrix {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProfileStats {
    pub used: usize,
    pub wrong_length: usize,
    pub invalid_letters: usize,
}

/// Matches in rank order whose sequence has length `len` and only standard
/// letters, capped at `k`.
pub fn usable_matches(matches: &[FragmentMatch], k: usize, len: usize) -> (FragmentSequenceMatrix, ProfileStats) {
    let mut stats = ProfileStats::default();
    let mut rows = Vec::new();
    let mut rmsds = Vec::new();
    for m in matches {
        if rows.len() == k {
            break;
        }
        if m.sequence.chars().count() != len {
            stats.wrong_length += 1;
            continue;
        }
        match alphabet::encode(&m.sequence) {
            Some(enc) => {
                rows.push(enc);
                rmsds.push(m.rmsd);
            }
            None => stats.invalid_letters += 1,
        }
    }
    stats.used = rows.len();
    (FragmentSequenceMatrix { rows, rmsds }, stats)
}

/// Predicts `p(s^0)` from retrieval evidence alone, optionally blended with a context prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDenoiser {
    pub pssm: Vec<AaDist>,
    pub pseudocount: f64,
    pub context_prior: Option<Vec<AaDist>>,
    pub blend_weight: f64,
}

impl ProfileDenoiser {
    pub fn len(&self) -> usize {
        self.pssm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pssm.is_empty()
    }

    pub fn with_blend(mut self, blend_weight: f64, context_prior: Option<Vec<AaDist>>) -> Result<Self> {
        if !(0.0..=1.0).contains(&blend_weight) {
            return Err(Error::Domain(format!("blend weight {blend_weight} outside [0, 1]")));
        }
        if let Some(prior) = &context_prior {
            if prior.len() != self.pssm.len() {
                return Err(Error::Shape(format!(
                    "context prior has {} rows, profile has {}",
                    prior.len(),
                    self.pssm.len()
                )));
            }
        }
        self.blend_weight = blend_weight;
        self.context_prior = context_prior;
        Ok(self)
    }

    /// Most probable letter per position.
    pub fn consensus(&self) -> String {
        self.pssm.iter().map(|r| alphabet::letter(alphabet::argmax(r))).collect()
    }
}

/// `pssm[j][a] = (count_j(a) + lambda) / (k_used + 20 lambda)` over the top-`k`
/// usable matches.
pub fn build_profile(
    matches: &[FragmentMatch],
    k: usize,
    pseudocount: f64,
    len: usize,
) -> Result<(ProfileDenoiser, ProfileStats)> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(pseudocount > 0.0 && pseudocount.is_finite()) {
        return Err(Error::Domain(format!("pseudocount must be positive, got {pseudocount}")));
    }
    let (matrix, stats) = usable_matches(matches, k, len);
    if matrix.is_empty() {
        return Err(Error::NoData(format!(
            "no fragment of length {len} among {} matches",
            matches.len()
        )));
    }
    let denom = matrix.len() as f64 + NUM_AA as f64 * pseudocount;
    let pssm = (0..len)
        .map(|j| {
            let mut counts = [0usize; NUM_AA];
            for row in &matrix.rows {
                counts[row[j]] += 1;
            }
            counts.map(|c| (c as f64 + pseudocount) / denom)
        })
        .collect();
    Ok((
        ProfileDenoiser {
            pssm,
            pseudocount,
            context_prior: None,
            blend_weight: DEFAULT_BLEND_WEIGHT,
        },
        stats,
    ))
}

/// `w * pssm + (1 - w) * prior`, with a uniform prior when none is set.
/// Ignores the timestep and the current noisy sequence.
pub fn profile_denoise(len: usize, profile: &ProfileDenoiser) -> Result<DenoiserOutput> {
    if len != profile.pssm.len() {
        return Err(Error::Shape(format!(
            "profile covers {} positions, state has {len}",
            profile.pssm.len()
        )));
    }
    let w = profile.blend_weight;
    let uniform = alphabet::uniform();
    let rows = profile
        .pssm
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let prior = profile.context_prior.as_ref().map_or(&uniform, |c| &c[j]);
            let mut row: AaDist = std::array::from_fn(|a| w * p[a] + (1.0 - w) * prior[a]);
            let z: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= z);
            row
        })
        .collect();
    Ok(DenoiserOutput::new(rows))
}

impl Denoiser for ProfileDenoiser {
    fn predict(&self, _t: usize, current: &[usize]) -> Result<DenoiserOutput> {
        profile_denoise(current.len(), self)
    }
}

/// Sequence of the best-ranked usable match of length `len`.
pub fn graft_top1(matches: &[FragmentMatch], len: usize) -> Result<String> {
    let (matrix, _) = usable_matches(matches, 1, len);
    matrix
        .rows
        .first()
        .map(|r| alphabet::decode(r))
        .ok_or_else(|| Error::NoData(format!("no fragment of length {len} to graft")))
}
