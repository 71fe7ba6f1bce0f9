//! Property suite over the configured schedule. Prints one PASS/FAIL line
//! per property.

use anyhow::anyhow;
use xmf::config::RunConfig;
use xmf_core::diffusion::{
    check_gradients, ddim_sample, min_snr_weight, q_sample, train_toy_aligner, AlignerShape, DiffusionError,
    DiffusionSchedule, LatentState, Objective, ToyAligner, ToyDenoiser, TrainConfig, TrainingExample,
};
use xmf_core::rng::SeededRng;

use super::{Failure, OrFail, Outcome, Outputs};

const TRIALS: usize = 100;
const MAX_DIM: usize = 32;
const RECOVERY_TOL: f64 = 1e-10;
const GRAD_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;

fn numeric(e: DiffusionError) -> Failure {
    match e {
        DiffusionError::InvalidRange(_) => Failure::Input(e.into()),
        other => Failure::Numeric(other.into()),
    }
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn snr_decreasing(s: &DiffusionSchedule) -> Check {
    let t = s.len();
    let pass = (1..t).all(|i| s.snr(i + 1) < s.snr(i));
    Check {
        name: "snr-strictly-decreasing",
        pass,
        detail: format!("T={t}"),
    }
}

fn weights(s: &DiffusionSchedule, gamma: f64) -> Result<Check, Failure> {
    let mut pass = true;
    let mut prev = f64::NEG_INFINITY;
    for t in 1..=s.len() {
        let w = min_snr_weight(t, s, gamma).map_err(numeric)?;
        if !w.is_finite() {
            return Err(Failure::Numeric(anyhow!("non-finite weight at t={t}")));
        }
        pass &= w == s.snr(t).min(gamma) / s.snr(t) && w <= 1.0 && w >= prev;
        prev = w;
    }
    Ok(Check {
        name: "min-snr-weight",
        pass,
        detail: format!("gamma={gamma}"),
    })
}

fn consistency(s: &DiffusionSchedule, rng: &mut SeededRng) -> Result<Check, Failure> {
    let t = s.len();
    let steps: Vec<usize> = (1..=t).rev().collect();
    let mut worst = 0.0f64;
    for _ in 0..TRIALS {
        let d = 1 + rng.below(MAX_DIM);
        let z0: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let eps: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let zt = q_sample(&LatentState::clean(z0.clone()), t, &eps, s).map_err(numeric)?;
        let oracle = |_: &[f64], _: usize, _: &()| eps.clone();
        let out = ddim_sample(&zt, &oracle, &(), &steps, s).map_err(numeric)?;
        for (a, b) in out.iter().zip(&z0) {
            if !a.is_finite() {
                return Err(Failure::Numeric(anyhow!("non-finite sample")));
            }
            worst = worst.max((a - b).abs());
        }
    }
    Ok(Check {
        name: "forward-backward-consistency",
        pass: worst <= RECOVERY_TOL,
        detail: format!("trials={TRIALS} max_abs_err={worst:.3e}"),
    })
}

fn toy(shape: AlignerShape, latent: usize, n: usize, rng: &mut SeededRng) -> Vec<TrainingExample> {
    (0..n)
        .map(|_| TrainingExample {
            image: (0..shape.input_dim).map(|_| rng.normal()).collect(),
            latent: (0..latent).map(|_| rng.normal()).collect(),
        })
        .collect()
}

fn gradients(s: &DiffusionSchedule, gamma: f64, seed: u64, rng: &mut SeededRng) -> Result<Check, Failure> {
    let mut worst = 0.0f64;
    // one shape with the upscaler and one without
    for (input_dim, staging_dim) in [(4, 8), (8, 8)] {
        let shape = AlignerShape {
            input_dim,
            staging_dim,
            n_tokens: 2,
            token_dim: 4,
        };
        let den = ToyDenoiser::seeded(4, shape.cond_dim(), seed);
        let obj = Objective::draw(&toy(shape, 4, 3, rng), s, gamma, seed).map_err(numeric)?;
        let al = ToyAligner::seeded(shape, seed.wrapping_add(1)).map_err(numeric)?;
        let chk = check_gradients(&obj, &al, &den, FD_STEP).map_err(numeric)?;
        if !chk.max_relative_error.is_finite() {
            return Err(Failure::Numeric(anyhow!("non-finite gradient")));
        }
        worst = worst.max(chk.max_relative_error);
    }
    Ok(Check {
        name: "aligner-gradient-check",
        pass: worst < GRAD_TOL,
        detail: format!("max_rel_err={worst:.3e}"),
    })
}

fn frozen(s: &DiffusionSchedule, gamma: f64, seed: u64, rng: &mut SeededRng) -> Result<Check, Failure> {
    let shape = AlignerShape {
        input_dim: 4,
        staging_dim: 8,
        n_tokens: 2,
        token_dim: 4,
    };
    let den = ToyDenoiser::seeded(4, shape.cond_dim(), seed);
    let before = den.clone();
    let cfg = TrainConfig {
        steps: 20,
        lr: 1e-3,
        gamma_snr: gamma,
        seed,
    };
    let out = train_toy_aligner(
        &toy(shape, 4, 4, rng),
        s,
        &den,
        ToyAligner::seeded(shape, seed).map_err(numeric)?,
        &cfg,
    )
    .map_err(numeric)?;
    let same = den.a.iter().zip(&before.a).all(|(x, y)| x.to_bits() == y.to_bits())
        && den.b.iter().zip(&before.b).all(|(x, y)| x.to_bits() == y.to_bits());
    Ok(Check {
        name: "frozen-denoiser",
        pass: same,
        detail: format!(
            "loss {} -> {}",
            xmf::tables::num(out.losses[0]),
            xmf::tables::num(*out.losses.last().expect("at least one loss"))
        ),
    })
}

pub fn run(cfg: RunConfig) -> Outcome {
    let sched = cfg.schedule().build().map_err(numeric)?;
    if cfg.gamma_snr.is_nan() || cfg.gamma_snr <= 0.0 {
        return Err(Failure::Input(anyhow!("--gamma-snr must be positive")));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let checks = [
        snr_decreasing(&sched),
        weights(&sched, cfg.gamma_snr)?,
        consistency(&sched, &mut rng)?,
        gradients(&sched, cfg.gamma_snr, cfg.seed, &mut rng)?,
        frozen(&sched, cfg.gamma_snr, cfg.seed, &mut rng)?,
    ];
    let out = Outputs::new(&cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["property", "result", "detail"]).input()?;
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {} {}", c.name, c.detail);
        w.write_record([c.name, verdict, c.detail.as_str()]).input()?;
    }
    let body = w.into_inner().map_err(|e| anyhow!("{e}")).input()?;
    let mut f = out.create("diffusion_check.csv")?;
    std::io::Write::write_all(&mut f, format!("{}\n", out.header()).as_bytes())
        .and_then(|_| std::io::Write::write_all(&mut f, &body))
        .and_then(|_| std::io::Write::flush(&mut f))
        .input()?;
    out.finish(&cfg)?;
    match checks.iter().find(|c| !c.pass) {
        Some(c) => Err(Failure::Numeric(anyhow!("property `{}` failed", c.name))),
        None => Ok(()),
    }
}
