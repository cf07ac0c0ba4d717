use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest per-step noise rate produced by the built-in schedules. Keeping
/// every beta below 1 keeps all marginal probabilities strictly positive.
pub const MAX_BETA: f64 = 0.999;

/// Terminal retention at or below this value counts as a near-uniform end state.
pub const TERMINAL_ALPHA_BAR: f64 = 1e-3;

pub const DEFAULT_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Cosine,
    Linear,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(ScheduleKind::Cosine),
            "linear" => Ok(ScheduleKind::Linear),
            other => Err(Error::Config(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub cosine_offset: f64,
    pub beta_start: f64,
    pub beta_end: f64,
    pub max_beta: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            cosine_offset: 0.008,
            beta_start: 1e-3,
            beta_end: 0.2,
            max_beta: MAX_BETA,
        }
    }
}

/// Per-step noise rates `beta[t]` and cumulative retention
/// `alpha_bar[t] = prod_{s <= t} (1 - beta[s])`, for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Domain("schedule needs at least one step".into()));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return Err(Error::Domain(format!("beta {b} outside (0, 1]")));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        Ok(NoiseSchedule { betas, alpha_bars })
    }

    /// Number of diffusion steps `T`.
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    /// `beta[t]` for `1 <= t <= T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// `alpha_bar[t]` for `0 <= t <= T`; `alpha_bar[0] = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn is_near_uniform(&self) -> bool {
        self.alpha_bar(self.steps()) <= TERMINAL_ALPHA_BAR
    }

    pub(crate) fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::Range(format!("timestep {t} outside 1..={}", self.steps())));
        }
        Ok(())
    }
}

pub fn make_schedule(steps: usize, kind: ScheduleKind, params: &ScheduleParams) -> Result<NoiseSchedule> {
    if steps < 1 {
        return Err(Error::Domain("schedule needs T >= 1".into()));
    }
    let betas: Vec<f64> = match kind {
        ScheduleKind::Cosine => {
            let s = params.cosine_offset;
            let f = |t: usize| {
                let x = (t as f64 / steps as f64 + s) / (1.0 + s) * std::f64::consts::FRAC_PI_2;
                x.cos().powi(2)
            };
            let f0 = f(0);
            (1..=steps)
                .map(|t| {
                    let prev = f(t - 1) / f0;
                    let cur = f(t) / f0;
                    (1.0 - cur / prev).clamp(0.0, params.max_beta)
                })
                .collect()
        }
        ScheduleKind::Linear => (0..steps)
            .map(|i| {
                let frac = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
                (params.beta_start + (params.beta_end - params.beta_start) * frac).min(params.max_beta)
            })
            .collect(),
    };
    let schedule = NoiseSchedule::from_betas(betas)?;
    if !schedule.is_near_uniform() {
        log::warn!(
            "schedule terminal alpha_bar {:.3e} exceeds {TERMINAL_ALPHA_BAR:e}; final state is not near uniform",
            schedule.alpha_bar(steps)
        );
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        for kind in [ScheduleKind::Cosine, ScheduleKind::Linear] {
            let s = make_schedule(1, kind, &ScheduleParams::default()).unwrap();
            assert_eq!(s.steps(), 1);
            assert_eq!(s.alpha_bar(1), 1.0 - s.beta(1));
        }
    }

    #[test]
    fn default_schedules_reach_near_uniform() {
        for kind in [ScheduleKind::Cosine, ScheduleKind::Linear] {
            let s = make_schedule(100, kind, &ScheduleParams::default()).unwrap();
            assert!(s.alpha_bar(100) <= 1e-3, "{kind:?}: {}", s.alpha_bar(100));
            for t in 1..=100 {
                assert!(s.beta(t) > 0.0 && s.beta(t) <= MAX_BETA);
                assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
            }
        }
    }

    #[test]
    fn linear_betas_increase() {
        let s = make_schedule(100, ScheduleKind::Linear, &ScheduleParams::default()).unwrap();
        assert!(s.betas().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(s.beta(1), 1e-3);
        assert!((s.beta(100) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_schedule(0, ScheduleKind::Cosine, &ScheduleParams::default()).is_err());
        assert!(NoiseSchedule::from_betas(vec![0.0]).is_err());
        assert!(NoiseSchedule::from_betas(vec![1.5]).is_err());
        assert!("quadratic".parse::<ScheduleKind>().is_err());
    }
}
