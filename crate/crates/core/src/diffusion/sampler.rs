use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::latent::{ChannelRange, LatentStack};
use super::schedule::NoiseSchedule;
use crate::{Error, Result};

/// Noise predictor `ε̂ = D(z_t, t, condition)`.
pub trait Denoiser {
    fn predict_noise(&self, z_t: &LatentStack, t: usize, condition: &LatentStack) -> Result<LatentStack>;
}

/// Returns the exact noise assuming the condition is the clean latent `z0`.
#[derive(Clone, Debug)]
pub struct OracleDenoiser {
    schedule: NoiseSchedule,
}

impl OracleDenoiser {
    pub fn new(schedule: NoiseSchedule) -> Self {
        Self { schedule }
    }
}

impl Denoiser for OracleDenoiser {
    fn predict_noise(&self, z_t: &LatentStack, t: usize, condition: &LatentStack) -> Result<LatentStack> {
        z_t.check_same(condition)?;
        self.schedule.check_step(t)?;
        let ab = self.schedule.alpha_bar(t);
        if ab >= 1.0 {
            return z_t.with_data(vec![0.0; z_t.data().len()]);
        }
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        z_t.with_data(z_t.data().iter().zip(condition.data()).map(|(z, z0)| (z - a * z0) / b).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Circular convolution; commutes with circular shifts.
    Periodic,
    /// Zero padding at the borders.
    Zero,
}

/// Toy denoiser whose clean estimate is a blurred copy of the noisy
/// latent's deviation from a per-channel mean,
/// `x̂0 = μ + γ·G ⊛ (z_t − √ᾱ_t·μ)`, converted to a noise prediction.
/// With `γ ≤ 1` repeated application is a contraction.
#[derive(Clone, Debug)]
pub struct ConvDenoiser {
    schedule: NoiseSchedule,
    kernel: Vec<f64>,
    gain: f64,
    prior_mean: Vec<f64>,
    padding: Padding,
}

impl ConvDenoiser {
    /// `prior_mean` holds one value per latent channel.
    pub fn new(schedule: NoiseSchedule, sigma: f64, gain: f64, prior_mean: Vec<f64>, padding: Padding) -> Result<Self> {
        if !(sigma > 0.0 && (0.0..=1.0).contains(&gain)) {
            return Err(Error::invalid("blur sigma must be positive and gain within [0, 1]"));
        }
        let r = (3.0 * sigma).ceil() as isize;
        let g: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let s: f64 = g.iter().sum();
        Ok(Self { schedule, kernel: g.into_iter().map(|v| v / s).collect(), gain, prior_mean, padding })
    }

    pub fn periodic(schedule: NoiseSchedule, prior_mean: Vec<f64>) -> Self {
        Self::new(schedule, 1.5, 1.0, prior_mean, Padding::Periodic).expect("valid defaults")
    }

    pub fn windowed(schedule: NoiseSchedule, prior_mean: Vec<f64>) -> Self {
        Self::new(schedule, 1.5, 1.0, prior_mean, Padding::Zero).expect("valid defaults")
    }

    fn blur_plane(&self, plane: &[f64], h: usize, w: usize) -> Vec<f64> {
        let r = (self.kernel.len() / 2) as isize;
        let fetch = |i: isize, n: usize| -> Option<usize> {
            match self.padding {
                Padding::Periodic => Some(i.rem_euclid(n as isize) as usize),
                Padding::Zero => (i >= 0 && i < n as isize).then_some(i as usize),
            }
        };
        let mut tmp = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                let mut s = 0.0;
                for (k, g) in self.kernel.iter().enumerate() {
                    if let Some(xx) = fetch(x as isize + k as isize - r, w) {
                        s += g * plane[y * w + xx];
                    }
                }
                tmp[y * w + x] = s;
            }
        }
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                let mut s = 0.0;
                for (k, g) in self.kernel.iter().enumerate() {
                    if let Some(yy) = fetch(y as isize + k as isize - r, h) {
                        s += g * tmp[yy * w + x];
                    }
                }
                out[y * w + x] = s;
            }
        }
        out
    }

    /// The clean-latent estimate `x̂0` at a given `ᾱ_t`.
    pub fn estimate_clean(&self, z_t: &LatentStack, alpha_bar: f64) -> Result<LatentStack> {
        let (c, h, w) = z_t.shape();
        if self.prior_mean.len() != c {
            return Err(Error::DimensionMismatch(format!(
                "denoiser has {} channel means, latent has {c} channels",
                self.prior_mean.len()
            )));
        }
        let sa = alpha_bar.sqrt();
        let mut data = Vec::with_capacity(c * h * w);
        for ch in 0..c {
            let m = self.prior_mean[ch];
            let centered: Vec<f64> = z_t.channel(ch).iter().map(|v| v - sa * m).collect();
            data.extend(self.blur_plane(&centered, h, w).into_iter().map(|v| m + self.gain * v));
        }
        z_t.with_data(data)
    }
}

impl Denoiser for ConvDenoiser {
    fn predict_noise(&self, z_t: &LatentStack, t: usize, _condition: &LatentStack) -> Result<LatentStack> {
        self.schedule.check_step(t)?;
        let ab = self.schedule.alpha_bar(t);
        if ab >= 1.0 {
            return z_t.with_data(vec![0.0; z_t.data().len()]);
        }
        let x0 = self.estimate_clean(z_t, ab)?;
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        z_t.with_data(z_t.data().iter().zip(x0.data()).map(|(z, x)| (z - a * x) / b).collect())
    }
}

/// Deterministic (η = 0) DDIM update from `t` to `t_prev`.
pub fn ddim_step(
    z_t: &LatentStack,
    t: usize,
    t_prev: usize,
    denoiser: &dyn Denoiser,
    condition: &LatentStack,
    schedule: &NoiseSchedule,
) -> Result<LatentStack> {
    schedule.check_step(t)?;
    if t_prev > t {
        return Err(Error::invalid(format!("t_prev {t_prev} exceeds t {t}")));
    }
    if t_prev == t {
        return Ok(z_t.clone());
    }
    let eps = denoiser.predict_noise(z_t, t, condition)?;
    z_t.check_same(&eps)?;
    ddim_update(z_t, &eps, schedule.alpha_bar(t), schedule.alpha_bar(t_prev))
}

fn ddim_update(z_t: &LatentStack, eps: &LatentStack, ab_t: f64, ab_prev: f64) -> Result<LatentStack> {
    if ab_t <= 0.0 {
        return Err(Error::invalid("alpha_bar_t is zero; the clean estimate is undefined"));
    }
    let (st, nt) = (ab_t.sqrt(), (1.0 - ab_t).sqrt());
    let (sp, np) = (ab_prev.sqrt(), (1.0 - ab_prev).sqrt());
    z_t.with_data(
        z_t.data()
            .iter()
            .zip(eps.data())
            .map(|(z, e)| {
                let x0 = (z - nt * e) / st;
                sp * x0 + np * e
            })
            .collect(),
    )
}

/// Evenly spaced, strictly decreasing timesteps from `T` down to 0.
pub fn timesteps(total: usize, steps: usize) -> Result<Vec<usize>> {
    if steps == 0 || total == 0 {
        return Err(Error::invalid("sampling needs at least one step"));
    }
    let steps = steps.min(total);
    let mut ts: Vec<usize> = (0..=steps).map(|i| ((total * (steps - i)) as f64 / steps as f64).round() as usize).collect();
    ts.dedup();
    Ok(ts)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rolling {
    #[default]
    Off,
    On,
}

impl std::str::FromStr for Rolling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(Self::On),
            "off" => Ok(Self::Off),
            other => Err(Error::invalid(format!("rolling must be `on` or `off`, got `{other}`"))),
        }
    }
}

/// Runs DDIM from pure noise. With rolling on, every step circularly shifts
/// the latent (and a same-sized condition) by a random offset before the
/// denoiser call and shifts back afterwards.
#[allow(clippy::too_many_arguments)]
pub fn sample<R: Rng + ?Sized>(
    denoiser: &dyn Denoiser,
    condition: &LatentStack,
    shape: (usize, usize, usize),
    layout: Vec<ChannelRange>,
    steps: usize,
    schedule: &NoiseSchedule,
    rolling: Rolling,
    rng: &mut R,
) -> Result<LatentStack> {
    let (c, h, w) = shape;
    let ts = timesteps(schedule.steps(), steps)?;
    let noise: Vec<f64> = (0..c * h * w).map(|_| rng.sample(StandardNormal)).collect();
    let mut z = LatentStack::new(c, h, w, noise, layout)?;
    let roll_condition = (condition.height(), condition.width()) == (h, w);
    for pair in ts.windows(2) {
        let (t, t_prev) = (pair[0], pair[1]);
        z = match rolling {
            Rolling::Off => ddim_step(&z, t, t_prev, denoiser, condition, schedule)?,
            Rolling::On => {
                let dy = rng.random_range(0..h);
                let dx = rng.random_range(0..w);
                let cond = if roll_condition { condition.roll(dy, dx) } else { condition.clone() };
                ddim_step(&z.roll(dy, dx), t, t_prev, denoiser, &cond, schedule)?.unroll(dy, dx)
            }
        };
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::schedule::{forward_diffuse, make_schedule, ScheduleKind};
    use crate::rng::rng_from_seed;

    fn schedule() -> NoiseSchedule {
        make_schedule(1000, ScheduleKind::Linear).unwrap()
    }

    fn random_latent(seed: u64, c: usize, h: usize, w: usize) -> LatentStack {
        let mut rng = rng_from_seed(seed);
        LatentStack::new(c, h, w, (0..c * h * w).map(|_| rng.sample(StandardNormal)).collect(), Vec::new()).unwrap()
    }

    fn max_abs_diff(a: &LatentStack, b: &LatentStack) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn timesteps_are_even_and_decreasing() {
        assert_eq!(timesteps(1000, 10).unwrap(), vec![1000, 900, 800, 700, 600, 500, 400, 300, 200, 100, 0]);
        assert_eq!(timesteps(3, 10).unwrap(), vec![3, 2, 1, 0]);
        assert!(timesteps(1000, 0).is_err());
    }

    #[test]
    fn oracle_single_step_recovers_z0() {
        let s = schedule();
        let z0 = random_latent(1, 4, 6, 6);
        let eps = random_latent(2, 4, 6, 6);
        let oracle = OracleDenoiser::new(s.clone());
        for t in [1, 10, 500, 1000] {
            let zt = forward_diffuse(&z0, t, &eps, &s).unwrap();
            let back = ddim_step(&zt, t, 0, &oracle, &z0, &s).unwrap();
            assert!(max_abs_diff(&back, &z0) < 1e-5, "t={t}");
            assert_eq!(ddim_step(&zt, t, t, &oracle, &z0, &s).unwrap(), zt);
        }
        assert!(ddim_step(&z0, 5, 6, &oracle, &z0, &s).is_err());
    }

    #[test]
    fn oracle_trajectories_recover_z0() {
        let s = schedule();
        let z0 = random_latent(3, 16, 8, 8);
        let oracle = OracleDenoiser::new(s.clone());
        for rolling in [Rolling::Off, Rolling::On] {
            let out = sample(&oracle, &z0, (16, 8, 8), Vec::new(), 10, &s, rolling, &mut rng_from_seed(4)).unwrap();
            assert!(max_abs_diff(&out, &z0) < 1e-4);
        }
    }

    #[test]
    fn periodic_denoiser_commutes_with_roll() {
        let s = schedule();
        let d = ConvDenoiser::periodic(s, vec![0.1, -0.2]);
        let z = random_latent(5, 2, 12, 10);
        let cond = z.clone();
        let lhs = d.predict_noise(&z.roll(5, 3), 400, &cond).unwrap();
        let rhs = d.predict_noise(&z, 400, &cond).unwrap().roll(5, 3);
        assert!(max_abs_diff(&lhs, &rhs) <= 1e-6);
    }

    #[test]
    fn windowed_denoiser_is_not_equivariant() {
        let d = ConvDenoiser::windowed(schedule(), vec![0.0]);
        let z = random_latent(6, 1, 12, 12);
        let lhs = d.predict_noise(&z.roll(6, 6), 400, &z).unwrap();
        let rhs = d.predict_noise(&z, 400, &z).unwrap().roll(6, 6);
        assert!(max_abs_diff(&lhs, &rhs) > 1e-3);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let s = schedule();
        let d = ConvDenoiser::periodic(s.clone(), vec![0.0; 4]);
        let cond = LatentStack::zeros(4, 8, 8, Vec::new()).unwrap();
        let a = sample(&d, &cond, (4, 8, 8), Vec::new(), 5, &s, Rolling::On, &mut rng_from_seed(9)).unwrap();
        let b = sample(&d, &cond, (4, 8, 8), Vec::new(), 5, &s, Rolling::On, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }
}
