//! Closed-form kernels of the uniform-mixing categorical process.
//!
//! One forward step mixes the current one-hot with the uniform distribution:
//! `q(s^t | s^{t-1}) = (1 - beta_t) onehot(s^{t-1}) + beta_t / 20`.

use rand::Rng;

use super::schedule::NoiseSchedule;
use super::{CategoricalSequenceState, DenoiserOutput};
use crate::alphabet::{onehot, AaDist, NUM_AA};
use crate::error::{Error, Result};

const UNIFORM: f64 = 1.0 / NUM_AA as f64;

/// Draws an index from a categorical row.
pub fn draw<R: Rng + ?Sized>(row: &AaDist, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// `q(s^t = to | s^{t-1} = from)`.
pub fn transition(from: usize, to: usize, beta: f64) -> f64 {
    let stay = if from == to { 1.0 - beta } else { 0.0 };
    stay + beta * UNIFORM
}

/// `q(s^t = x | s^0 = from)` from the cumulative retention.
fn marginal_entry(from: usize, x: usize, alpha_bar: f64) -> f64 {
    let stay = if from == x { alpha_bar } else { 0.0 };
    stay + (1.0 - alpha_bar) * UNIFORM
}

/// `(1 - beta) row + beta / 20`.
pub fn forward_row(row: &AaDist, beta: f64) -> AaDist {
    row.map(|p| (1.0 - beta) * p + beta * UNIFORM)
}

/// Applies one forward step to every row. When the state carries a realized
/// sample and `rng` is given, a new sample is drawn from the kernel row of the
/// realized symbol.
pub fn forward_step<R: Rng + ?Sized>(
    state: &CategoricalSequenceState,
    schedule: &NoiseSchedule,
    rng: Option<&mut R>,
) -> Result<CategoricalSequenceState> {
    let t = state.t + 1;
    schedule.check_step(t)?;
    let beta = schedule.beta(t);
    let probs = state.probs.iter().map(|row| forward_row(row, beta)).collect();
    let sample = match (rng, &state.sample) {
        (Some(rng), Some(prev)) => Some(
            prev.iter()
                .map(|&s| {
                    let row: AaDist = std::array::from_fn(|x| transition(s, x, beta));
                    draw(&row, rng)
                })
                .collect(),
        ),
        _ => None,
    };
    Ok(CategoricalSequenceState { t, probs, sample })
}

/// `q(s^t | s^0)` for every position: `alpha_bar[t] onehot(s^0) + (1 - alpha_bar[t]) / 20`.
pub fn marginal(s0: &[usize], t: usize, schedule: &NoiseSchedule) -> Result<Vec<AaDist>> {
    if t > schedule.steps() {
        return Err(Error::Range(format!("timestep {t} outside 0..={}", schedule.steps())));
    }
    if t == 0 {
        return Ok(s0.iter().map(|&s| onehot(s)).collect());
    }
    let ab = schedule.alpha_bar(t);
    Ok(s0
        .iter()
        .map(|&s| std::array::from_fn(|x| marginal_entry(s, x, ab)))
        .collect())
}

/// Exact one-step posterior `q(s^{t-1} | s^t, s^0)` via
/// `q(s^t | s^{t-1}) q(s^{t-1} | s^0) / q(s^t | s^0)`.
pub fn posterior(s_t: usize, s0: usize, t: usize, schedule: &NoiseSchedule) -> Result<AaDist> {
    schedule.check_step(t)?;
    Ok(posterior_unchecked(s_t, s0, schedule.beta(t), schedule.alpha_bar(t - 1), schedule.alpha_bar(t)))
}

fn posterior_unchecked(s_t: usize, s0: usize, beta: f64, ab_prev: f64, ab: f64) -> AaDist {
    let denom = marginal_entry(s0, s_t, ab);
    let mut out: AaDist = std::array::from_fn(|x| transition(x, s_t, beta) * marginal_entry(s0, x, ab_prev) / denom);
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

/// All 20 x 20 posteriors of one step, indexed `[s_t][s0]`.
pub(crate) struct PosteriorTable {
    rows: Vec<AaDist>,
}

impl PosteriorTable {
    pub(crate) fn new(t: usize, schedule: &NoiseSchedule) -> Result<Self> {
        schedule.check_step(t)?;
        let (beta, ab_prev, ab) = (schedule.beta(t), schedule.alpha_bar(t - 1), schedule.alpha_bar(t));
        let mut rows = Vec::with_capacity(NUM_AA * NUM_AA);
        for s_t in 0..NUM_AA {
            for s0 in 0..NUM_AA {
                rows.push(posterior_unchecked(s_t, s0, beta, ab_prev, ab));
            }
        }
        Ok(PosteriorTable { rows })
    }

    pub(crate) fn get(&self, s_t: usize, s0: usize) -> &AaDist {
        &self.rows[s_t * NUM_AA + s0]
    }

    /// `sum_a q(. | s_t, a) w[a]`.
    pub(crate) fn mixture(&self, s_t: usize, weights: &AaDist) -> AaDist {
        let mut out = [0.0; NUM_AA];
        for (a, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.get(s_t, a)) {
                *o += w * p;
            }
        }
        out
    }
}

/// Reverse-step distributions `p(s^{t-1}_j)` obtained by composing the
/// denoiser's clean-sequence prediction with the exact posterior.
pub fn reverse_distribution(
    s_t: &[usize],
    out: &DenoiserOutput,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<Vec<AaDist>> {
    out.validate(s_t.len())?;
    let table = PosteriorTable::new(t, schedule)?;
    Ok(s_t
        .iter()
        .zip(&out.s0_probs)
        .map(|(&s, w)| table.mixture(s, w))
        .collect())
}

/// `KL(q || p)`; `+inf` when `p` lacks support where `q` has mass.
pub fn kl_divergence(q: &AaDist, p: &AaDist) -> f64 {
    let mut kl = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi <= 0.0 {
            continue;
        }
        if pi <= 0.0 {
            return f64::INFINITY;
        }
        kl += qi * (qi / pi).ln();
    }
    kl.max(0.0)
}

/// Mean over positions of `KL(q(s^{t-1} | s^t, s^0) || p(s^{t-1}))`, where `p`
/// is the reverse-step mixture built from `out`. Returns `+inf` rather than an
/// error when `p` has zero mass somewhere the posterior does not.
pub fn kl_loss(
    true_s0: &[usize],
    s_t: &[usize],
    t: usize,
    out: &DenoiserOutput,
    schedule: &NoiseSchedule,
) -> Result<f64> {
    if true_s0.len() != s_t.len() {
        return Err(Error::Shape(format!(
            "true sequence length {} vs noisy length {}",
            true_s0.len(),
            s_t.len()
        )));
    }
    let p = reverse_distribution(s_t, out, t, schedule)?;
    kl_against(true_s0, s_t, t, &p, schedule)
}

pub(crate) fn kl_against(
    true_s0: &[usize],
    s_t: &[usize],
    t: usize,
    p: &[AaDist],
    schedule: &NoiseSchedule,
) -> Result<f64> {
    let table = PosteriorTable::new(t, schedule)?;
    if true_s0.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = true_s0
        .iter()
        .zip(s_t)
        .zip(p)
        .map(|((&s0, &st), pj)| kl_divergence(table.get(st, s0), pj))
        .sum();
    Ok(total / true_s0.len() as f64)
}
