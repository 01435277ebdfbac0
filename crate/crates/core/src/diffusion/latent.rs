use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const LATENT_CHANNELS_PER_MAP: usize = 4;
pub const MATERIAL_LATENT_CHANNELS: usize = 16;

/// A named contiguous channel range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

/// Channel-major latent tensor `channels × h × w` with per-map bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentStack {
    channels: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
    layout: Vec<ChannelRange>,
}

/// Shape record written next to raw latent dumps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentHeader {
    pub dtype: String,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub layout: Vec<ChannelRange>,
}

impl LatentStack {
    pub fn new(channels: usize, h: usize, w: usize, data: Vec<f64>, layout: Vec<ChannelRange>) -> Result<Self> {
        if channels == 0 || h == 0 || w == 0 {
            return Err(Error::invalid("latent dimensions must be positive"));
        }
        if data.len() != channels * h * w {
            return Err(Error::DimensionMismatch(format!(
                "{channels}x{h}x{w} latent needs {} values, got {}",
                channels * h * w,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("latent values must be finite"));
        }
        let mut next = 0;
        for r in &layout {
            if r.start != next || r.len == 0 {
                return Err(Error::invalid("latent layout ranges must be contiguous and non-empty"));
            }
            next += r.len;
        }
        if !layout.is_empty() && next != channels {
            return Err(Error::invalid(format!("latent layout covers {next} of {channels} channels")));
        }
        Ok(Self { channels, h, w, data, layout })
    }

    pub fn zeros(channels: usize, h: usize, w: usize, layout: Vec<ChannelRange>) -> Result<Self> {
        Self::new(channels, h, w, vec![0.0; channels * h * w], layout)
    }

    /// Layout of a material latent: four channels each for albedo, normal,
    /// roughness and height.
    pub fn material_layout() -> Vec<ChannelRange> {
        crate::imaging::ATTRIBUTES
            .iter()
            .enumerate()
            .map(|(i, name)| ChannelRange {
                name: name.to_string(),
                start: i * LATENT_CHANNELS_PER_MAP,
                len: LATENT_CHANNELS_PER_MAP,
            })
            .collect()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.h, self.w)
    }

    pub fn layout(&self) -> &[ChannelRange] {
        &self.layout
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.h + y) * self.w + x]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &LatentStack) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn check_same(&self, other: &LatentStack) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch(format!("latent {:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }

    /// Same shape and layout, new values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.channels, self.h, self.w, data, self.layout.clone())
    }

    /// Concatenates stacks along channels, merging their layouts.
    pub fn concat(parts: &[LatentStack]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        let mut data = Vec::new();
        let mut layout = Vec::new();
        let mut channels = 0;
        for p in parts {
            if (p.h, p.w) != (first.h, first.w) {
                return Err(Error::DimensionMismatch("concatenated latents differ in size".into()));
            }
            for r in &p.layout {
                layout.push(ChannelRange { name: r.name.clone(), start: channels + r.start, len: r.len });
            }
            data.extend_from_slice(&p.data);
            channels += p.channels;
        }
        if layout.iter().map(|r| r.len).sum::<usize>() != channels {
            layout.clear();
        }
        Self::new(channels, first.h, first.w, data, layout)
    }

    /// Circular shift: content at `(y, x)` moves to `(y + dy, x + dx)`.
    pub fn roll(&self, dy: usize, dx: usize) -> Self {
        let (h, w) = (self.h, self.w);
        let (dy, dx) = (dy % h, dx % w);
        let mut out = vec![0.0; self.data.len()];
        for c in 0..self.channels {
            let base = c * h * w;
            for y in 0..h {
                let ty = (y + dy) % h;
                for x in 0..w {
                    out[base + ty * w + (x + dx) % w] = self.data[base + y * w + x];
                }
            }
        }
        Self { data: out, ..self.clone() }
    }

    /// Inverse of [`roll`](Self::roll) with the same offsets.
    pub fn unroll(&self, dy: usize, dx: usize) -> Self {
        self.roll(self.h - dy % self.h, self.w - dx % self.w)
    }

    pub fn header(&self) -> LatentHeader {
        LatentHeader {
            dtype: "f32le".into(),
            channels: self.channels,
            height: self.h,
            width: self.w,
            layout: self.layout.clone(),
        }
    }

    /// Raw little-endian 32-bit floats in channel-major order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
    }

    pub fn from_le_bytes(header: &LatentHeader, bytes: &[u8]) -> Result<Self> {
        if header.dtype != "f32le" || !bytes.len().is_multiple_of(4) {
            return Err(Error::invalid("latent dump must be little-endian f32"));
        }
        let data = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64).collect();
        Self::new(header.channels, header.height, header.width, data, header.layout.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(c: usize, h: usize, w: usize) -> LatentStack {
        LatentStack::new(c, h, w, (0..c * h * w).map(|i| i as f64).collect(), Vec::new()).unwrap()
    }

    #[test]
    fn material_layout_has_sixteen_channels() {
        let z = LatentStack::zeros(16, 2, 2, LatentStack::material_layout()).unwrap();
        assert_eq!(z.layout().len(), 4);
        assert_eq!(z.layout()[3].name, "height");
        assert_eq!(z.layout()[3].start, 12);
        assert!(LatentStack::zeros(15, 2, 2, LatentStack::material_layout()).is_err());
    }

    #[test]
    fn roll_moves_content() {
        let z = ramp(1, 3, 4);
        let r = z.roll(1, 2);
        assert_eq!(r.get(0, 1, 2), z.get(0, 0, 0));
        assert_eq!(r.get(0, 0, 1), z.get(0, 2, 3));
    }

    #[test]
    fn concat_and_dump_round_trip() {
        let a = LatentStack::zeros(4, 2, 3, vec![ChannelRange { name: "a".into(), start: 0, len: 4 }]).unwrap();
        let b = ramp(4, 2, 3).with_data((0..24).map(|i| i as f64 * 0.5).collect()).unwrap();
        let b = LatentStack::new(4, 2, 3, b.data().to_vec(), vec![ChannelRange { name: "b".into(), start: 0, len: 4 }]).unwrap();
        let ab = LatentStack::concat(&[a, b]).unwrap();
        assert_eq!(ab.channels(), 8);
        assert_eq!(ab.layout()[1].start, 4);
        let back = LatentStack::from_le_bytes(&ab.header(), &ab.to_le_bytes()).unwrap();
        assert_eq!(back, ab);
    }

    proptest! {
        #[test]
        fn roll_then_unroll_is_identity(c in 1usize..4, h in 1usize..9, w in 1usize..9, dy in 0usize..20, dx in 0usize..20) {
            let z = ramp(c, h, w);
            prop_assert_eq!(z.roll(dy, dx).unroll(dy, dx), z);
        }
    }
}
