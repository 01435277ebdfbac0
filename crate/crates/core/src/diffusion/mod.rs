//! Diffusion arithmetic on latent stacks: a stub codec, the noise schedule,
//! forward noising and its loss, KV-injection attention and DDIM sampling
//! with optional noise rolling against analytic denoisers.

mod attention;
mod codec;
mod latent;
mod sampler;
mod schedule;

pub use attention::{attention_weights, kv_injection_attention};
pub use codec::{StubCodec, DEFAULT_CODEC_SEED, DEFAULT_FACTOR};
pub use latent::{ChannelRange, LatentHeader, LatentStack, LATENT_CHANNELS_PER_MAP, MATERIAL_LATENT_CHANNELS};
pub use sampler::{ddim_step, sample, timesteps, ConvDenoiser, Denoiser, OracleDenoiser, Padding, Rolling};
pub use schedule::{
    diffusion_loss, diffusion_loss_grad, forward_diffuse, forward_diffuse_with, make_schedule, NoiseSchedule, ScheduleKind,
    BETA_END, BETA_START, DEFAULT_STEPS,
};
