//! Reverse-time sampling loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::{draw, kl_against, marginal, PosteriorTable};
use super::schedule::NoiseSchedule;
use super::{CategoricalSequenceState, Denoiser, DenoiserOutput, Parameterization};
use crate::alphabet::{argmax, AaDist, NUM_AA};
use crate::error::{Error, Result};

/// How the last step (`t = 1`) turns the prediction into a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalDecode {
    /// Most probable letter per position.
    #[default]
    Argmax,
    /// Sample like every other step.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SamplerOptions {
    pub final_decode: FinalDecode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub sequence: Vec<usize>,
    /// `kl_loss` against the reference at each step, from `t = T` down to 1.
    /// Empty when no reference was supplied.
    pub kl_trace: Vec<f64>,
}

impl SampleOutcome {
    pub fn mean_kl(&self) -> Option<f64> {
        if self.kl_trace.is_empty() {
            None
        } else {
            Some(self.kl_trace.iter().sum::<f64>() / self.kl_trace.len() as f64)
        }
    }
}

fn step_distributions(
    current: &[usize],
    out: &DenoiserOutput,
    parameterization: Parameterization,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<Vec<AaDist>> {
    out.validate(current.len())?;
    match parameterization {
        Parameterization::PreviousStep => Ok(out.s0_probs.clone()),
        Parameterization::CleanSequence => {
            let table = PosteriorTable::new(t, schedule)?;
            Ok(current
                .iter()
                .zip(&out.s0_probs)
                .map(|(&s, w)| table.mixture(s, w))
                .collect())
        }
    }
}

fn advance<R: Rng + ?Sized>(
    state: &CategoricalSequenceState,
    out: &DenoiserOutput,
    parameterization: Parameterization,
    schedule: &NoiseSchedule,
    rng: &mut R,
    opts: SamplerOptions,
) -> Result<CategoricalSequenceState> {
    let t = state.t;
    schedule.check_step(t)?;
    let current = state
        .sample
        .as_deref()
        .ok_or_else(|| Error::Contract("reverse step needs a realized sample".into()))?;
    let probs = step_distributions(current, out, parameterization, t, schedule)?;
    let sample = if t == 1 && opts.final_decode == FinalDecode::Argmax {
        out.s0_probs.iter().map(argmax).collect()
    } else {
        probs.iter().map(|row| draw(row, rng)).collect()
    };
    Ok(CategoricalSequenceState {
        t: t - 1,
        probs,
        sample: Some(sample),
    })
}

/// One reverse step from `state.t` to `state.t - 1`.
///
/// Position `j` is drawn from `sum_a q(s^{t-1} | s^t_j, a) * s0_probs[j][a]`.
/// At `t = 1` with [`FinalDecode::Argmax`] the argmax of `s0_probs` is returned instead.
pub fn reverse_step<R: Rng + ?Sized>(
    state: &CategoricalSequenceState,
    out: &DenoiserOutput,
    schedule: &NoiseSchedule,
    rng: &mut R,
    opts: SamplerOptions,
) -> Result<CategoricalSequenceState> {
    advance(state, out, Parameterization::CleanSequence, schedule, rng, opts)
}

/// Runs the full chain from a uniform draw at `t = T` down to `t = 0`,
/// optionally scoring each step against `reference`.
pub fn sample_traced(
    len: usize,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser,
    seed: u64,
    opts: SamplerOptions,
    reference: Option<&[usize]>,
) -> Result<SampleOutcome> {
    if len == 0 {
        return Err(Error::Range("sequence length must be at least 1".into()));
    }
    if let Some(r) = reference {
        if r.len() != len {
            return Err(Error::Shape(format!("reference length {} vs {len}", r.len())));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = schedule.steps();
    let init: Vec<usize> = (0..len).map(|_| rng.random_range(0..NUM_AA)).collect();
    let mut state = CategoricalSequenceState::from_sample(steps, init);
    let mut kl_trace = Vec::new();
    let parameterization = denoiser.parameterization();

    for t in (1..=steps).rev() {
        let current = state.sample.as_deref().expect("chain keeps a realized sample");
        let out = denoiser
            .predict(t, current)
            .and_then(|o| o.validate(len).map(|_| o))
            .map_err(|e| match e {
                Error::Contract(m) => Error::Contract(format!("denoiser at step {t}: {m}")),
                Error::Shape(m) => Error::Contract(format!("denoiser at step {t}: {m}")),
                other => other,
            })?;
        if let Some(reference) = reference {
            let p = step_distributions(current, &out, parameterization, t, schedule)?;
            kl_trace.push(kl_against(reference, current, t, &p, schedule)?);
        }
        state = advance(&state, &out, parameterization, schedule, &mut rng, opts)?;
    }
    Ok(SampleOutcome {
        sequence: state.sample.expect("chain keeps a realized sample"),
        kl_trace,
    })
}

/// Samples a length-`len` sequence; a pure function of its inputs and `seed`.
pub fn sample(
    len: usize,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser,
    seed: u64,
    opts: SamplerOptions,
) -> Result<Vec<usize>> {
    sample_traced(len, schedule, denoiser, seed, opts, None).map(|o| o.sequence)
}

/// Monte-Carlo estimate of the training objective: the mean of `kl_loss` over
/// `t ~ Uniform(1..=T)` and `s^t ~ q(s^t | s^0)`.
pub fn expected_kl(
    true_s0: &[usize],
    denoiser: &dyn Denoiser,
    schedule: &NoiseSchedule,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    if draws == 0 {
        return Err(Error::Domain("need at least one draw".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..draws {
        let t = rng.random_range(1..=schedule.steps());
        let q = marginal(true_s0, t, schedule)?;
        let s_t: Vec<usize> = q.iter().map(|row| draw(row, &mut rng)).collect();
        let out = denoiser.predict(t, &s_t)?;
        let p = step_distributions(&s_t, &out, denoiser.parameterization(), t, schedule)?;
        total += kl_against(true_s0, &s_t, t, &p, schedule)?;
    }
    Ok(total / draws as f64)
}

/// Wraps a function that emits `p(s^{t-1})` rows directly.
pub struct PreviousStepAdapter<F> {
    pub f: F,
}

impl<F> Denoiser for PreviousStepAdapter<F>
where
    F: Fn(usize, &[usize]) -> Vec<AaDist> + Sync,
{
    fn predict(&self, t: usize, current: &[usize]) -> Result<DenoiserOutput> {
        Ok(DenoiserOutput::new((self.f)(t, current)))
    }

    fn parameterization(&self) -> Parameterization {
        Parameterization::PreviousStep
    }
}
