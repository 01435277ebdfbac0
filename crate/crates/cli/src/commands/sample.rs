use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use matkit_core::diffusion::{
    make_schedule, sample, ConvDenoiser, Denoiser, LatentStack, OracleDenoiser, Padding, Rolling, ScheduleKind, StubCodec,
    DEFAULT_CODEC_SEED, DEFAULT_FACTOR, DEFAULT_STEPS, MATERIAL_LATENT_CHANNELS,
};
use matkit_core::imaging::{load_material_dir, resample_bilinear, MaterialSet, NormalMap, ATTRIBUTES};
use matkit_core::metrics::seam_ratio;
use matkit_core::procedural;
use matkit_core::rng::{derive_seed, rng_from_seed};
use serde::Serialize;

use super::{invalid, out_path, Named};
use crate::output::{CliResult, Outputs};
use crate::Global;

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum DenoiserKind {
    /// Treats the reference latent as the clean target.
    Oracle,
    /// Blur-based toy denoiser.
    Conv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PaddingArg {
    Periodic,
    Zero,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value = "conv")]
    denoiser: DenoiserKind,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value = "on")]
    rolling: Rolling,
    /// Border handling of the conv denoiser.
    #[arg(long, value_enum, default_value = "periodic")]
    padding: PaddingArg,
    /// Reference material directory; a procedural material when omitted.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Latent side length.
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Output prefix for `PREFIX_{map}.png`, `PREFIX.latent.f32` and `PREFIX.latent.json`.
    #[arg(long, default_value = "sample")]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct SampleConfig {
    denoiser: DenoiserKind,
    steps: usize,
    schedule_steps: usize,
    rolling: Rolling,
    padding: Padding,
    reference: Option<PathBuf>,
    reference_seed: Option<u64>,
    latent_size: usize,
    codec_factor: usize,
    codec_seed: u64,
    seed: u64,
    out: PathBuf,
}

impl Named for SampleConfig {
    const NAME: &'static str = "sample";
}

impl SampleArgs {
    pub fn resolve(self, g: &Global) -> CliResult<SampleConfig> {
        if self.steps == 0 || self.steps > DEFAULT_STEPS {
            return Err(invalid(format!("--steps must lie in 1..={DEFAULT_STEPS}")));
        }
        if self.size < 4 {
            return Err(invalid("--size must be at least 4"));
        }
        Ok(SampleConfig {
            denoiser: self.denoiser,
            steps: self.steps,
            schedule_steps: DEFAULT_STEPS,
            rolling: self.rolling,
            padding: match self.padding {
                PaddingArg::Periodic => Padding::Periodic,
                PaddingArg::Zero => Padding::Zero,
            },
            reference_seed: self.reference.is_none().then(|| derive_seed(g.seed, &[0x7265_6600])),
            reference: self.reference,
            latent_size: self.size,
            codec_factor: DEFAULT_FACTOR,
            codec_seed: DEFAULT_CODEC_SEED,
            seed: g.seed,
            out: out_path(g, &self.out),
        })
    }
}

fn resample_material(mat: &MaterialSet, n: usize) -> CliResult<MaterialSet> {
    if mat.resolution() == n {
        return Ok(mat.clone());
    }
    Ok(MaterialSet::new(
        resample_bilinear(&mat.albedo, n, n)?,
        NormalMap::new(resample_bilinear(mat.normal.encoded(), n, n)?)?,
        resample_bilinear(&mat.roughness, n, n)?,
        resample_bilinear(&mat.height, n, n)?,
    )?)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct LatentRecord<'a> {
    #[serde(flatten)]
    header: matkit_core::diffusion::LatentHeader,
    denoiser: DenoiserKind,
    steps: usize,
    rolling: Rolling,
    padding: Padding,
    seed: u64,
    reference_seed: Option<u64>,
    seam_ratio: Vec<(&'a str, f64)>,
}

pub fn run(c: &SampleConfig) -> CliResult<Vec<PathBuf>> {
    let codec = StubCodec::new(c.codec_factor, c.codec_seed)?;
    let side = c.latent_size * c.codec_factor;
    let reference = match (&c.reference, c.reference_seed) {
        (Some(dir), _) => load_material_dir(dir)?,
        (None, Some(seed)) => procedural::material(seed, side)?,
        (None, None) => unreachable!("resolve sets a reference seed when no directory is given"),
    };
    let condition = codec.encode_material(&resample_material(&reference, side)?)?;
    let schedule = make_schedule(c.schedule_steps, ScheduleKind::Linear)?;
    let denoiser: Box<dyn Denoiser> = match c.denoiser {
        DenoiserKind::Oracle => Box::new(OracleDenoiser::new(schedule.clone())),
        DenoiserKind::Conv => {
            let means = (0..condition.channels())
                .map(|ch| condition.channel(ch).iter().sum::<f64>() / condition.channel(ch).len() as f64)
                .collect();
            Box::new(ConvDenoiser::new(schedule.clone(), 1.5, 1.0, means, c.padding)?)
        }
    };
    let shape = (MATERIAL_LATENT_CHANNELS, c.latent_size, c.latent_size);
    let mut rng = rng_from_seed(derive_seed(c.seed, &[0x6464_696d]));
    let z =
        sample(denoiser.as_ref(), &condition, shape, LatentStack::material_layout(), c.steps, &schedule, c.rolling, &mut rng)?;

    let pooled = codec.decode_material_pooled(&z)?;
    let seams =
        ATTRIBUTES.iter().zip(pooled.maps()).map(|(name, m)| Ok((*name, seam_ratio(m)?))).collect::<CliResult<Vec<_>>>()?;
    let decoded = codec.decode_material(&z)?;
    let mut out = Outputs::new();
    for (name, map) in ATTRIBUTES.iter().zip(decoded.maps()) {
        out.image(&with_suffix(&c.out, &format!("_{name}.png")), map, 8)?;
    }
    out.bytes(&with_suffix(&c.out, ".latent.f32"), &z.to_le_bytes())?;
    let record = LatentRecord {
        header: z.header(),
        denoiser: c.denoiser,
        steps: c.steps,
        rolling: c.rolling,
        padding: c.padding,
        seed: c.seed,
        reference_seed: c.reference_seed,
        seam_ratio: seams,
    };
    out.json(&with_suffix(&c.out, ".latent.json"), &record)?;
    Ok(out.commit())
}
