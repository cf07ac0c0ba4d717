//! Multinomial diffusion over the amino-acid alphabet.
//!
//! Denoisers predict a distribution over the clean sequence `s^0`; the
//! reverse step composes that prediction with the exact posterior
//! `q(s^{t-1} | s^t, s^0)`. Denoisers that instead emit `p(s^{t-1})`
//! directly declare [`Parameterization::PreviousStep`].

mod kernel;
mod sampler;
mod schedule;

pub use kernel::{
    draw, forward_row, forward_step, kl_divergence, kl_loss, marginal, posterior,
    reverse_distribution, transition,
};
pub use sampler::{
    expected_kl, reverse_step, sample, sample_traced, FinalDecode, PreviousStepAdapter,
    SampleOutcome, SamplerOptions,
};
pub use schedule::{
    make_schedule, NoiseSchedule, ScheduleKind, ScheduleParams, DEFAULT_STEPS, MAX_BETA,
    TERMINAL_ALPHA_BAR,
};

use crate::alphabet::AaDist;
use crate::error::{Error, Result};

/// Row sums may drift from 1 by at most this much before a distribution is rejected.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Per-position categorical distributions at timestep `t`, plus the realized
/// sample when one has been drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalSequenceState {
    pub t: usize,
    pub probs: Vec<AaDist>,
    pub sample: Option<Vec<usize>>,
}

impl CategoricalSequenceState {
    /// A realized state with one-hot rows.
    pub fn from_sample(t: usize, sample: Vec<usize>) -> Self {
        CategoricalSequenceState {
            t,
            probs: sample.iter().map(|&s| crate::alphabet::onehot(s)).collect(),
            sample: Some(sample),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// A denoiser's per-position prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserOutput {
    pub s0_probs: Vec<AaDist>,
}

impl DenoiserOutput {
    pub fn new(s0_probs: Vec<AaDist>) -> Self {
        DenoiserOutput { s0_probs }
    }

    /// Checks length and that every row is a probability distribution.
    pub fn validate(&self, len: usize) -> Result<()> {
        if self.s0_probs.len() != len {
            return Err(Error::Shape(format!(
                "denoiser returned {} rows for {} positions",
                self.s0_probs.len(),
                len
            )));
        }
        for (j, row) in self.s0_probs.iter().enumerate() {
            validate_row(row).map_err(|m| Error::Contract(format!("row {j}: {m}")))?;
        }
        Ok(())
    }
}

pub(crate) fn validate_row(row: &AaDist) -> std::result::Result<(), String> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err("entries must be finite and non-negative".into());
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(format!("row sums to {sum}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parameterization {
    /// Rows are `p(s^0)`; the sampler composes them with the exact posterior.
    #[default]
    CleanSequence,
    /// Rows are already `p(s^{t-1})` and are sampled from directly.
    PreviousStep,
}

/// Anything that can score the current noisy sequence.
pub trait Denoiser: Sync {
    /// Prediction for timestep `t` given the realized sequence `current = s^t`.
    fn predict(&self, t: usize, current: &[usize]) -> Result<DenoiserOutput>;

    fn parameterization(&self) -> Parameterization {
        Parameterization::CleanSequence
    }
}

/// Predicts the uniform distribution everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformDenoiser;

impl Denoiser for UniformDenoiser {
    fn predict(&self, _t: usize, current: &[usize]) -> Result<DenoiserOutput> {
        Ok(DenoiserOutput::new(vec![crate::alphabet::uniform(); current.len()]))
    }
}

/// Knows the answer: predicts one-hot rows of a fixed target.
#[derive(Debug, Clone)]
pub struct TargetDenoiser {
    pub target: Vec<usize>,
}

impl Denoiser for TargetDenoiser {
    fn predict(&self, _t: usize, current: &[usize]) -> Result<DenoiserOutput> {
        if current.len() != self.target.len() {
            return Err(Error::Shape(format!(
                "target has {} positions, state has {}",
                self.target.len(),
                current.len()
            )));
        }
        Ok(DenoiserOutput::new(
            self.target.iter().map(|&s| crate::alphabet::onehot(s)).collect(),
        ))
    }
}
