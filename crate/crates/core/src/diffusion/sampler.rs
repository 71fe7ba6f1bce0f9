use alloc::vec::Vec;

use super::{same_dim, DiffusionError, DiffusionSchedule};

/// A latent vector at a given timestep (0 is clean).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub z: Vec<f64>,
    pub t: usize,
}

impl LatentState {
    pub fn new(z: Vec<f64>, t: usize) -> Self {
        Self { z, t }
    }

    pub fn clean(z: Vec<f64>) -> Self {
        Self { z, t: 0 }
    }
}

/// Noise predictor `εθ(z, t, c)`.
pub trait Denoiser<C: ?Sized> {
    fn predict(&self, z: &[f64], t: usize, cond: &C) -> Vec<f64>;
}

impl<C: ?Sized, F> Denoiser<C> for F
where
    F: Fn(&[f64], usize, &C) -> Vec<f64>,
{
    fn predict(&self, z: &[f64], t: usize, cond: &C) -> Vec<f64> {
        self(z, t, cond)
    }
}

/// `z_t = √ᾱ_t · z_0 + √(1 − ᾱ_t) · ε`.
pub fn q_sample(
    z0: &LatentState,
    t: usize,
    eps: &[f64],
    sched: &DiffusionSchedule,
) -> Result<LatentState, DiffusionError> {
    sched.check(t)?;
    same_dim(z0.z.len(), eps.len())?;
    let ab = sched.alpha_bar(t);
    let (s, n) = (libm::sqrt(ab), libm::sqrt(1.0 - ab));
    Ok(LatentState {
        z: z0.z.iter().zip(eps).map(|(z, e)| s * z + n * e).collect(),
        t,
    })
}

/// `ẑ_0 = (z_t − √(1 − ᾱ_t) · ε̂) / √ᾱ_t`.
pub fn estimate_z0(zt: &LatentState, eps_pred: &[f64], sched: &DiffusionSchedule) -> Result<Vec<f64>, DiffusionError> {
    sched.check(zt.t)?;
    same_dim(zt.z.len(), eps_pred.len())?;
    let ab = sched.alpha_bar(zt.t);
    let (s, n) = (libm::sqrt(ab), libm::sqrt(1.0 - ab));
    Ok(zt.z.iter().zip(eps_pred).map(|(z, e)| (z - n * e) / s).collect())
}

/// Deterministic DDIM update from `zt.t` to `t_next < zt.t`.
pub fn ddim_step_to(
    zt: &LatentState,
    eps_pred: &[f64],
    t_next: usize,
    sched: &DiffusionSchedule,
) -> Result<LatentState, DiffusionError> {
    if t_next >= zt.t {
        return Err(DiffusionError::InvalidStepSequence(
            "target must precede the current timestep",
        ));
    }
    let z0 = estimate_z0(zt, eps_pred, sched)?;
    let ab = sched.alpha_bar(t_next);
    if t_next == 0 {
        return Ok(LatentState { z: z0, t: 0 });
    }
    let (s, n) = (libm::sqrt(ab), libm::sqrt(1.0 - ab));
    Ok(LatentState {
        z: z0.iter().zip(eps_pred).map(|(z, e)| s * z + n * e).collect(),
        t: t_next,
    })
}

/// `z_{t−1} = √ᾱ_{t−1} · ẑ_0 + √(1 − ᾱ_{t−1}) · ε̂`; the step out of `t = 1`
/// returns `ẑ_0` exactly.
pub fn ddim_step(zt: &LatentState, eps_pred: &[f64], sched: &DiffusionSchedule) -> Result<LatentState, DiffusionError> {
    sched.check(zt.t)?;
    ddim_step_to(zt, eps_pred, zt.t - 1, sched)
}

/// Runs DDIM along `steps`, a strictly decreasing sequence of timesteps that
/// starts at `z_start.t`. After the last listed timestep the sampler steps to
/// the clean latent, so `[T]` alone yields a single `ẑ_0` estimate.
pub fn ddim_sample<C: ?Sized, D: Denoiser<C> + ?Sized>(
    z_start: &LatentState,
    denoiser: &D,
    cond: &C,
    steps: &[usize],
    sched: &DiffusionSchedule,
) -> Result<Vec<f64>, DiffusionError> {
    let first = *steps.first().ok_or(DiffusionError::InvalidStepSequence("empty"))?;
    if first != z_start.t {
        return Err(DiffusionError::InvalidStepSequence(
            "must start at the latent's timestep",
        ));
    }
    if steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(DiffusionError::InvalidStepSequence("must be strictly decreasing"));
    }
    for &t in steps {
        sched.check(t)?;
    }
    let mut state = z_start.clone();
    for (i, &t) in steps.iter().enumerate() {
        let next = steps.get(i + 1).copied().unwrap_or(0);
        let eps = denoiser.predict(&state.z, t, cond);
        state = ddim_step_to(&state, &eps, next, sched)?;
    }
    Ok(state.z)
}

/// `count` evenly spaced timesteps from `T` down to 1.
pub fn uniform_steps(timesteps: usize, count: usize) -> Result<Vec<usize>, DiffusionError> {
    if count == 0 || count > timesteps {
        return Err(DiffusionError::InvalidStepSequence("count must lie in [1, T]"));
    }
    if count == 1 {
        return Ok(alloc::vec![timesteps]);
    }
    Ok((0..count)
        .rev()
        .map(|i| 1 + i * (timesteps - 1) / (count - 1))
        .collect())
}

/// Classifier-free guidance: `ε_u + scale · (ε_c − ε_u)`.
pub fn guidance_blend(cond_eps: &[f64], uncond_eps: &[f64], scale: f64) -> Result<Vec<f64>, DiffusionError> {
    same_dim(cond_eps.len(), uncond_eps.len())?;
    Ok(cond_eps
        .iter()
        .zip(uncond_eps)
        .map(|(c, u)| u + scale * (c - u))
        .collect())
}
