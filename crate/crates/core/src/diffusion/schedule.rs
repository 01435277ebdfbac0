use serde::{Deserialize, Serialize};

use super::latent::LatentStack;
use crate::{Error, Result};

pub const BETA_START: f64 = 1e-4;
pub const BETA_END: f64 = 2e-2;
pub const DEFAULT_STEPS: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Linear,
}

/// Per-step variances `β_1..β_T` and cumulative products `ᾱ_t`, with
/// `ᾱ_0 = 1` by convention.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// Number of diffusion steps `T`.
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// `ᾱ_t` for `t ∈ [0, T]`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub(crate) fn check_step(&self, t: usize) -> Result<()> {
        if t > self.steps() {
            return Err(Error::invalid(format!("timestep {t} outside [0, {}]", self.steps())));
        }
        Ok(())
    }
}

pub fn make_schedule(steps: usize, kind: ScheduleKind) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::invalid("a noise schedule needs at least one step"));
    }
    let betas: Vec<f64> = match kind {
        ScheduleKind::Linear => (0..steps)
            .map(|i| if steps == 1 { BETA_START } else { BETA_START + (BETA_END - BETA_START) * i as f64 / (steps - 1) as f64 })
            .collect(),
    };
    let alpha_bar = betas
        .iter()
        .scan(1.0, |acc, b| {
            *acc *= 1.0 - b;
            Some(*acc)
        })
        .collect();
    Ok(NoiseSchedule { betas, alpha_bar })
}

/// `√ᾱ·z0 + √(1−ᾱ)·ε` for an explicit `ᾱ ∈ [0, 1]`.
pub fn forward_diffuse_with(z0: &LatentStack, alpha_bar: f64, eps: &LatentStack) -> Result<LatentStack> {
    z0.check_same(eps)?;
    if !(0.0..=1.0).contains(&alpha_bar) {
        return Err(Error::invalid(format!("alpha_bar {alpha_bar} outside [0, 1]")));
    }
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    z0.with_data(z0.data().iter().zip(eps.data()).map(|(z, e)| a * z + b * e).collect())
}

pub fn forward_diffuse(z0: &LatentStack, t: usize, eps: &LatentStack, schedule: &NoiseSchedule) -> Result<LatentStack> {
    schedule.check_step(t)?;
    forward_diffuse_with(z0, schedule.alpha_bar(t), eps)
}

/// Mean squared error between the applied and the predicted noise.
pub fn diffusion_loss(eps: &LatentStack, eps_hat: &LatentStack) -> Result<f64> {
    eps.check_same(eps_hat)?;
    let n = eps.data().len() as f64;
    Ok(eps.data().iter().zip(eps_hat.data()).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / n)
}

/// Gradient of [`diffusion_loss`] with respect to `eps_hat`: `2(ε̂ − ε)/N`.
pub fn diffusion_loss_grad(eps: &LatentStack, eps_hat: &LatentStack) -> Result<LatentStack> {
    eps.check_same(eps_hat)?;
    let n = eps.data().len() as f64;
    eps_hat.with_data(eps.data().iter().zip(eps_hat.data()).map(|(a, b)| 2.0 * (b - a) / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn stack(values: &[f64]) -> LatentStack {
        LatentStack::new(1, 1, values.len(), values.to_vec(), Vec::new()).unwrap()
    }

    #[test]
    fn schedule_examples() {
        let s = make_schedule(1000, ScheduleKind::Linear).unwrap();
        assert!((s.alpha_bar(1) - 0.9999).abs() < 1e-12);
        assert!(s.alpha_bar(1000) < 0.01);
        assert!((1..1000).all(|t| s.alpha_bar(t + 1) < s.alpha_bar(t)));
        assert!(s.betas().iter().all(|&b| b > 0.0 && b < 1.0));
        assert_eq!(s.beta(1000), BETA_END);
        let one = make_schedule(1, ScheduleKind::Linear).unwrap();
        assert_eq!(one.steps(), 1);
        assert_eq!(one.alpha_bar(1), 1.0 - one.beta(1));
        assert!(make_schedule(0, ScheduleKind::Linear).is_err());
    }

    #[test]
    fn forward_examples() {
        let (z0, eps) = (stack(&[2.0, -1.0]), stack(&[1.0, 0.5]));
        assert_eq!(forward_diffuse_with(&z0, 1.0, &eps).unwrap(), z0);
        assert_eq!(forward_diffuse_with(&z0, 0.0, &eps).unwrap(), eps);
        let z = forward_diffuse_with(&z0, 0.25, &eps).unwrap();
        assert!((z.data()[0] - (1.0 + 0.75f64.sqrt())).abs() < 1e-12);
        assert!((z.data()[0] - 1.8660).abs() < 1e-4);
        assert!(forward_diffuse_with(&z0, 0.5, &stack(&[1.0])).is_err());
    }

    #[test]
    fn loss_examples() {
        let e = stack(&[0.3, -0.2]);
        assert_eq!(diffusion_loss(&e, &e).unwrap(), 0.0);
        assert_eq!(diffusion_loss(&stack(&[0.0, 0.0]), &stack(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(diffusion_loss(&stack(&[0.0, 2.0]), &stack(&[1.0, 0.0])).unwrap(), 2.5);
    }

    #[test]
    fn forward_variance_matches_schedule() {
        let s = make_schedule(1000, ScheduleKind::Linear).unwrap();
        let n = 10_000;
        let mut rng = rng_from_seed(11);
        for t in [250, 500, 1000] {
            let z0 = LatentStack::zeros(1, 1, n, Vec::new()).unwrap();
            let eps = z0.with_data((0..n).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
            let z = forward_diffuse(&z0, t, &eps, &s).unwrap();
            let mean = z.data().iter().sum::<f64>() / n as f64;
            let var = z.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let target = 1.0 - s.alpha_bar(t);
            let se = target * (2.0 / (n - 1) as f64).sqrt();
            assert!((var - target).abs() <= 3.0 * se, "t={t}: {var} vs {target}");
        }
    }

    proptest! {
        #[test]
        fn loss_gradient_matches_finite_differences(
            eps in prop::array::uniform4(-2.0f64..2.0),
            hat in prop::array::uniform4(-2.0f64..2.0),
        ) {
            let (e, h) = (stack(&eps), stack(&hat));
            let g = diffusion_loss_grad(&e, &h).unwrap();
            let step = 1e-6;
            for i in 0..4 {
                let mut plus = hat;
                let mut minus = hat;
                plus[i] += step;
                minus[i] -= step;
                let fd = (diffusion_loss(&e, &stack(&plus)).unwrap() - diffusion_loss(&e, &stack(&minus)).unwrap()) / (2.0 * step);
                let an = g.data()[i];
                prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{} vs {}", fd, an);
            }
        }
    }
}
