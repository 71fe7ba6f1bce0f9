//! Latent diffusion math: variance schedules, forward noising, deterministic
//! DDIM sampling, min-SNR loss weighting and a toy image aligner trained
//! against a frozen linear denoiser.
//!
//! Timesteps run from 1 to `T`. Index 0 denotes the clean latent, with
//! `alpha_bar(0) = 1`.

mod aligner;
mod loss;
mod sampler;
mod schedule;

pub use aligner::{
    check_gradients, train_toy_aligner, AlignerGrad, AlignerShape, GradientCheck, Objective, ToyAligner, ToyDenoiser,
    TrainConfig, TrainOutcome, TrainingExample,
};
pub use loss::{ldm_loss, min_snr_weight, weighted_loss, DEFAULT_GAMMA_SNR};
pub use sampler::{
    ddim_sample, ddim_step, ddim_step_to, estimate_z0, guidance_blend, q_sample, uniform_steps, Denoiser, LatentState,
};
pub use schedule::{make_schedule, DiffusionSchedule, ScheduleConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffusionError {
    #[error("invalid schedule: {0}")]
    InvalidRange(&'static str),
    #[error("timestep {t} outside [1, {max}]")]
    TimestepOutOfRange { t: usize, max: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("invalid step sequence: {0}")]
    InvalidStepSequence(&'static str),
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<(), DiffusionError> {
    if a == b {
        Ok(())
    } else {
        Err(DiffusionError::DimMismatch { left: a, right: b })
    }
}
