use super::{same_dim, Denoiser, DiffusionError, DiffusionSchedule, LatentState};

/// Clamp applied to the signal-to-noise ratio in the loss weight.
pub const DEFAULT_GAMMA_SNR: f64 = 5.0;

/// `min(SNR_t, γ) / SNR_t`.
pub fn min_snr_weight(t: usize, sched: &DiffusionSchedule, gamma_snr: f64) -> Result<f64, DiffusionError> {
    sched.check(t)?;
    let snr = sched.snr(t);
    Ok(snr.min(gamma_snr) / snr)
}

/// Min-SNR-weighted noise prediction error `w_t · ‖ε − ε̂‖²`.
pub fn weighted_loss(
    z0: &LatentState,
    eps: &[f64],
    eps_pred: &[f64],
    t: usize,
    sched: &DiffusionSchedule,
    gamma_snr: f64,
) -> Result<f64, DiffusionError> {
    same_dim(z0.z.len(), eps.len())?;
    same_dim(eps.len(), eps_pred.len())?;
    let w = min_snr_weight(t, sched, gamma_snr)?;
    let sq: f64 = eps.iter().zip(eps_pred).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(w * sq)
}

/// Noises `z0` to timestep `t` with `eps`, asks `denoiser` for its
/// prediction and returns the weighted loss.
pub fn ldm_loss<C: ?Sized, D: Denoiser<C> + ?Sized>(
    denoiser: &D,
    z0: &LatentState,
    eps: &[f64],
    t: usize,
    cond: &C,
    sched: &DiffusionSchedule,
    gamma_snr: f64,
) -> Result<f64, DiffusionError> {
    let zt = super::q_sample(z0, t, eps, sched)?;
    let pred = denoiser.predict(&zt.z, t, cond);
    weighted_loss(z0, eps, &pred, t, sched, gamma_snr)
}
