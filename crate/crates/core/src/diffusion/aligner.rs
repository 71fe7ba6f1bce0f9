//! Toy image aligner trained under a frozen denoiser.
//!
//! The aligner maps an image embedding to `n_tokens` conditioning tokens:
//! embeddings narrower than the staging width go through an upscaler first,
//! then a projection produces the flattened token block. The denoiser is a
//! fixed linear map `ε̂ = A z_t + B c` and is never modified; gradient descent
//! touches only the aligner weights.

use alloc::vec::Vec;

use super::{min_snr_weight, q_sample, same_dim, Denoiser, DiffusionError, DiffusionSchedule, LatentState};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignerShape {
    pub input_dim: usize,
    pub staging_dim: usize,
    pub n_tokens: usize,
    pub token_dim: usize,
}

impl AlignerShape {
    /// 512-wide inputs upscaled to 1024, projected to 768-wide tokens.
    pub fn clip(n_tokens: usize) -> Self {
        Self {
            input_dim: 512,
            staging_dim: 1024,
            n_tokens,
            token_dim: 768,
        }
    }

    /// 1024-wide inputs, no upscaler.
    pub fn imagebind(n_tokens: usize) -> Self {
        Self {
            input_dim: 1024,
            ..Self::clip(n_tokens)
        }
    }

    pub fn has_upscaler(&self) -> bool {
        self.input_dim != self.staging_dim
    }

    pub fn cond_dim(&self) -> usize {
        self.n_tokens * self.token_dim
    }

    fn validate(&self) -> Result<(), DiffusionError> {
        if self.input_dim > self.staging_dim {
            return Err(DiffusionError::DimMismatch {
                left: self.input_dim,
                right: self.staging_dim,
            });
        }
        if self.input_dim == 0 || self.n_tokens == 0 || self.token_dim == 0 {
            return Err(DiffusionError::DimMismatch { left: 0, right: 1 });
        }
        Ok(())
    }
}

/// Upscaler (`staging × input`, optional) and projection
/// (`n_tokens·token_dim × staging`), both row-major, no bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyAligner {
    pub shape: AlignerShape,
    pub w_up: Option<Vec<f64>>,
    pub w_proj: Vec<f64>,
}

fn matvec(w: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
    let cols = x.len();
    (0..rows)
        .map(|r| w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn matvec_t(w: &[f64], y: &[f64], cols: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; cols];
    for (r, &yr) in y.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += a * yr;
        }
    }
    out
}

fn add_outer(acc: &mut [f64], left: &[f64], right: &[f64]) {
    let cols = right.len();
    for (r, &l) in left.iter().enumerate() {
        for (a, x) in acc[r * cols..(r + 1) * cols].iter_mut().zip(right) {
            *a += l * x;
        }
    }
}

impl ToyAligner {
    pub fn zeros(shape: AlignerShape) -> Result<Self, DiffusionError> {
        shape.validate()?;
        Ok(Self {
            shape,
            w_up: shape
                .has_upscaler()
                .then(|| alloc::vec![0.0; shape.staging_dim * shape.input_dim]),
            w_proj: alloc::vec![0.0; shape.cond_dim() * shape.staging_dim],
        })
    }

    /// Uniform init in `±1/√fan_in`.
    pub fn seeded(shape: AlignerShape, seed: u64) -> Result<Self, DiffusionError> {
        let mut a = Self::zeros(shape)?;
        let mut rng = SeededRng::new(seed);
        if let Some(w) = a.w_up.as_mut() {
            let s = 1.0 / libm::sqrt(shape.input_dim as f64);
            w.iter_mut().for_each(|v| *v = rng.symmetric(s));
        }
        let s = 1.0 / libm::sqrt(shape.staging_dim as f64);
        a.w_proj.iter_mut().for_each(|v| *v = rng.symmetric(s));
        Ok(a)
    }

    fn stage(&self, x: &[f64]) -> Vec<f64> {
        match &self.w_up {
            Some(w) => matvec(w, x, self.shape.staging_dim),
            None => x.to_vec(),
        }
    }

    /// Flattened conditioning, `n_tokens · token_dim` long.
    pub fn forward(&self, image: &[f64]) -> Result<Vec<f64>, DiffusionError> {
        same_dim(image.len(), self.shape.input_dim)?;
        Ok(matvec(&self.w_proj, &self.stage(image), self.shape.cond_dim()))
    }

    /// Conditioning reshaped to `n_tokens` rows of `token_dim`.
    pub fn tokens(&self, image: &[f64]) -> Result<Vec<Vec<f64>>, DiffusionError> {
        Ok(self
            .forward(image)?
            .chunks_exact(self.shape.token_dim)
            .map(<[f64]>::to_vec)
            .collect())
    }

    pub fn parameter_count(&self) -> usize {
        self.w_proj.len() + self.w_up.as_ref().map_or(0, Vec::len)
    }

    /// Mutable view of parameter `index`, counting `w_up` first.
    pub fn parameter_mut(&mut self, index: usize) -> &mut f64 {
        let up = self.w_up.as_ref().map_or(0, Vec::len);
        if index < up {
            &mut self.w_up.as_mut().expect("upscaler present")[index]
        } else {
            &mut self.w_proj[index - up]
        }
    }
}

/// Frozen linear denoiser `ε̂ = A z_t + B c`, ignoring the timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    pub latent_dim: usize,
    pub cond_dim: usize,
    /// `latent × latent`.
    pub a: Vec<f64>,
    /// `latent × cond`.
    pub b: Vec<f64>,
}

impl ToyDenoiser {
    pub fn seeded(latent_dim: usize, cond_dim: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
        let sa = 1.0 / libm::sqrt(latent_dim as f64);
        let sb = 1.0 / libm::sqrt(cond_dim as f64);
        Self {
            latent_dim,
            cond_dim,
            a: (0..latent_dim * latent_dim).map(|_| rng.symmetric(sa)).collect(),
            b: (0..latent_dim * cond_dim).map(|_| rng.symmetric(sb)).collect(),
        }
    }

    pub fn eval(&self, z: &[f64], cond: &[f64]) -> Vec<f64> {
        let az = matvec(&self.a, z, self.latent_dim);
        let bc = matvec(&self.b, cond, self.latent_dim);
        az.iter().zip(&bc).map(|(x, y)| x + y).collect()
    }
}

impl Denoiser<[f64]> for ToyDenoiser {
    fn predict(&self, z: &[f64], _t: usize, cond: &[f64]) -> Vec<f64> {
        self.eval(z, cond)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub image: Vec<f64>,
    pub latent: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Draw {
    image: Vec<f64>,
    zt: Vec<f64>,
    eps: Vec<f64>,
    weight: f64,
}

/// Training objective with timesteps and noise drawn once per example, so
/// the loss surface is fixed for the whole run.
#[derive(Debug, Clone)]
pub struct Objective {
    draws: Vec<Draw>,
}

impl Objective {
    pub fn draw(
        examples: &[TrainingExample],
        sched: &DiffusionSchedule,
        gamma_snr: f64,
        seed: u64,
    ) -> Result<Self, DiffusionError> {
        let mut rng = SeededRng::new(seed);
        let mut draws = Vec::with_capacity(examples.len());
        for ex in examples {
            let t = 1 + rng.below(sched.len());
            let eps: Vec<f64> = (0..ex.latent.len()).map(|_| rng.normal()).collect();
            let zt = q_sample(&LatentState::clean(ex.latent.clone()), t, &eps, sched)?;
            draws.push(Draw {
                image: ex.image.clone(),
                zt: zt.z,
                eps,
                weight: min_snr_weight(t, sched, gamma_snr)?,
            });
        }
        Ok(Self { draws })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    fn validate(&self, aligner: &ToyAligner, denoiser: &ToyDenoiser) -> Result<(), DiffusionError> {
        same_dim(aligner.shape.cond_dim(), denoiser.cond_dim)?;
        for d in &self.draws {
            same_dim(d.image.len(), aligner.shape.input_dim)?;
            same_dim(d.zt.len(), denoiser.latent_dim)?;
        }
        Ok(())
    }

    /// Mean weighted squared error.
    pub fn loss(&self, aligner: &ToyAligner, denoiser: &ToyDenoiser) -> Result<f64, DiffusionError> {
        self.validate(aligner, denoiser)?;
        Ok(self.loss_unchecked(aligner, denoiser))
    }

    fn residual(&self, d: &Draw, cond: &[f64], denoiser: &ToyDenoiser) -> Vec<f64> {
        let pred = denoiser.eval(&d.zt, cond);
        d.eps.iter().zip(&pred).map(|(e, p)| e - p).collect()
    }

    fn loss_unchecked(&self, aligner: &ToyAligner, denoiser: &ToyDenoiser) -> f64 {
        if self.draws.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .draws
            .iter()
            .map(|d| {
                let cond = matvec(&aligner.w_proj, &aligner.stage(&d.image), aligner.shape.cond_dim());
                let r = self.residual(d, &cond, denoiser);
                d.weight * r.iter().map(|v| v * v).sum::<f64>()
            })
            .sum();
        total / self.draws.len() as f64
    }

    /// Loss and its gradient with respect to the aligner weights.
    pub fn loss_and_grad(
        &self,
        aligner: &ToyAligner,
        denoiser: &ToyDenoiser,
    ) -> Result<(f64, AlignerGrad), DiffusionError> {
        self.validate(aligner, denoiser)?;
        let shape = aligner.shape;
        let mut grad = AlignerGrad {
            w_up: aligner.w_up.as_ref().map(|w| alloc::vec![0.0; w.len()]),
            w_proj: alloc::vec![0.0; aligner.w_proj.len()],
        };
        if self.draws.is_empty() {
            return Ok((0.0, grad));
        }
        let n = self.draws.len() as f64;
        let mut total = 0.0;
        for d in &self.draws {
            let staged = aligner.stage(&d.image);
            let cond = matvec(&aligner.w_proj, &staged, shape.cond_dim());
            let r = self.residual(d, &cond, denoiser);
            total += d.weight * r.iter().map(|v| v * v).sum::<f64>();
            // dL/dc = -(2w/n) Bᵀ r
            let scale = -2.0 * d.weight / n;
            let mut g_cond = matvec_t(&denoiser.b, &r, denoiser.cond_dim);
            g_cond.iter_mut().for_each(|v| *v *= scale);
            add_outer(&mut grad.w_proj, &g_cond, &staged);
            if let Some(gu) = grad.w_up.as_mut() {
                let g_staged = matvec_t(&aligner.w_proj, &g_cond, shape.staging_dim);
                add_outer(gu, &g_staged, &d.image);
            }
        }
        Ok((total / n, grad))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignerGrad {
    pub w_up: Option<Vec<f64>>,
    pub w_proj: Vec<f64>,
}

impl AlignerGrad {
    /// Component `index`, counting `w_up` first.
    pub fn get(&self, index: usize) -> f64 {
        match &self.w_up {
            Some(w) if index < w.len() => w[index],
            Some(w) => self.w_proj[index - w.len()],
            None => self.w_proj[index],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub gamma_snr: f64,
    /// Seeds the timestep and noise draws.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            lr: 1e-3,
            gamma_snr: super::DEFAULT_GAMMA_SNR,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub aligner: ToyAligner,
    /// Full-batch loss before each step, then after the last one.
    pub losses: Vec<f64>,
}

/// Full-batch gradient descent on the aligner only.
pub fn train_toy_aligner(
    examples: &[TrainingExample],
    sched: &DiffusionSchedule,
    denoiser: &ToyDenoiser,
    init: ToyAligner,
    config: &TrainConfig,
) -> Result<TrainOutcome, DiffusionError> {
    if config.lr.is_nan() || config.lr <= 0.0 {
        return Err(DiffusionError::InvalidRange("learning rate must be positive"));
    }
    let objective = Objective::draw(examples, sched, config.gamma_snr, config.seed)?;
    let mut aligner = init;
    let mut losses = Vec::with_capacity(config.steps + 1);
    for step in 0..config.steps {
        let (loss, grad) = objective.loss_and_grad(&aligner, denoiser)?;
        if !loss.is_finite() {
            return Err(DiffusionError::NonFiniteLoss { step });
        }
        losses.push(loss);
        if let (Some(w), Some(g)) = (aligner.w_up.as_mut(), grad.w_up.as_ref()) {
            w.iter_mut().zip(g).for_each(|(w, g)| *w -= config.lr * g);
        }
        aligner
            .w_proj
            .iter_mut()
            .zip(&grad.w_proj)
            .for_each(|(w, g)| *w -= config.lr * g);
    }
    let last = objective.loss(&aligner, denoiser)?;
    if !last.is_finite() {
        return Err(DiffusionError::NonFiniteLoss { step: config.steps });
    }
    losses.push(last);
    Ok(TrainOutcome { aligner, losses })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub parameters: usize,
}

/// Compares analytic gradients against central differences with step `h`
/// on every aligner parameter. Relative error is
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn check_gradients(
    objective: &Objective,
    aligner: &ToyAligner,
    denoiser: &ToyDenoiser,
    h: f64,
) -> Result<GradientCheck, DiffusionError> {
    let (_, grad) = objective.loss_and_grad(aligner, denoiser)?;
    let mut probe = aligner.clone();
    let mut worst = 0.0f64;
    for i in 0..aligner.parameter_count() {
        let orig = *probe.parameter_mut(i);
        *probe.parameter_mut(i) = orig + h;
        let up = objective.loss_unchecked(&probe, denoiser);
        *probe.parameter_mut(i) = orig - h;
        let down = objective.loss_unchecked(&probe, denoiser);
        *probe.parameter_mut(i) = orig;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grad.get(i);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(GradientCheck {
        max_relative_error: worst,
        parameters: aligner.parameter_count(),
    })
}
