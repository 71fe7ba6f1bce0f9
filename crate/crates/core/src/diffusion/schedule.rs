use alloc::vec::Vec;

use super::DiffusionError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub timesteps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub gamma_snr: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            timesteps: 1000,
            beta_start: 1e-4,
            beta_end: 2e-2,
            gamma_snr: super::DEFAULT_GAMMA_SNR,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<DiffusionSchedule, DiffusionError> {
        make_schedule(self.timesteps, self.beta_start, self.beta_end)
    }
}

/// Per-timestep noise variances and the quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    snr: Vec<f64>,
}

/// Linear schedule from `beta_start` at `t = 1` to `beta_end` at `t = T`.
pub fn make_schedule(timesteps: usize, beta_start: f64, beta_end: f64) -> Result<DiffusionSchedule, DiffusionError> {
    if timesteps == 0 {
        return Err(DiffusionError::InvalidRange("need at least one timestep"));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(DiffusionError::InvalidRange("require 0 < beta_start <= beta_end < 1"));
    }
    let betas = (0..timesteps)
        .map(|i| {
            if timesteps == 1 {
                beta_start
            } else {
                beta_start + (beta_end - beta_start) * i as f64 / (timesteps - 1) as f64
            }
        })
        .collect();
    DiffusionSchedule::from_betas(betas)
}

impl DiffusionSchedule {
    /// Schedule from explicit `beta_1..beta_T`, each in (0, 1).
    pub fn from_betas(beta: Vec<f64>) -> Result<Self, DiffusionError> {
        if beta.is_empty() {
            return Err(DiffusionError::InvalidRange("need at least one timestep"));
        }
        if beta.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(DiffusionError::InvalidRange("every beta must lie in (0, 1)"));
        }
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_bar.push(acc);
        }
        if alpha_bar.iter().any(|&a| a <= 0.0) {
            return Err(DiffusionError::InvalidRange("cumulative alpha underflowed"));
        }
        let snr = alpha_bar.iter().map(|a| a / (1.0 - a)).collect();
        Ok(Self {
            beta,
            alpha,
            alpha_bar,
            snr,
        })
    }

    /// Number of timesteps `T`.
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub(crate) fn check(&self, t: usize) -> Result<(), DiffusionError> {
        if t == 0 || t > self.len() {
            Err(DiffusionError::TimestepOutOfRange { t, max: self.len() })
        } else {
            Ok(())
        }
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    /// Cumulative product up to `t`; 1 at `t = 0`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn snr(&self, t: usize) -> f64 {
        self.snr[t - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    pub fn snrs(&self) -> &[f64] {
        &self.snr
    }
}
