//! Noise rolling against shift-equivariant and windowed toy denoisers.

use matkit_core::diffusion::{make_schedule, sample, ConvDenoiser, Denoiser, LatentStack, Rolling, ScheduleKind, StubCodec};
use matkit_core::metrics::seam_ratio;
use matkit_core::procedural;
use matkit_core::rng::rng_from_seed;

fn mean_seam(codec: &StubCodec, z: &LatentStack) -> f64 {
    let mat = codec.decode_material_pooled(z).unwrap();
    mat.maps().iter().map(|m| seam_ratio(m).unwrap()).sum::<f64>() / 4.0
}

#[test]
fn rolling_with_equivariant_denoiser_is_seamless() {
    let codec = StubCodec::default();
    let reference = procedural::material(3, 512).unwrap();
    let cond = codec.encode_material(&reference).unwrap();
    let means: Vec<f64> = (0..16).map(|c| cond.channel(c).iter().sum::<f64>() / cond.channel(c).len() as f64).collect();
    let schedule = make_schedule(1000, ScheduleKind::Linear).unwrap();
    let periodic = ConvDenoiser::periodic(schedule.clone(), means.clone());
    let windowed = ConvDenoiser::windowed(schedule.clone(), means);
    let run = |d: &dyn Denoiser, rolling, seed| {
        let z = sample(d, &cond, (16, 64, 64), LatentStack::material_layout(), 50, &schedule, rolling, &mut rng_from_seed(seed))
            .unwrap();
        mean_seam(&codec, &z)
    };
    let mut on = Vec::new();
    let mut off = Vec::new();
    for seed in 0..10 {
        on.push(run(&periodic, Rolling::On, seed));
        off.push(run(&windowed, Rolling::Off, seed));
    }
    let mean_on = on.iter().sum::<f64>() / 10.0;
    assert!(mean_on <= 1.2, "{mean_on}");
    assert!(on.iter().zip(&off).all(|(a, b)| b > a));
}
