//! Video frame container.

use super::SynthError;

/// `T × H × W × C` intensity tensor in [0, 1], stored flat in row-major
/// order with C = 3 channels, plus the frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f32>,
    t: usize,
    h: usize,
    w: usize,
    fps: f64,
}

pub const CHANNELS: usize = 3;

impl FrameSequence {
    pub fn from_raw(
        data: Vec<f32>,
        t: usize,
        h: usize,
        w: usize,
        fps: f64,
    ) -> Result<Self, SynthError> {
        if t < 2 || h == 0 || w == 0 {
            return Err(SynthError::InvalidGeometry { t, h, w });
        }
        if data.len() != t * h * w * CHANNELS {
            return Err(SynthError::InvalidGeometry { t, h, w });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(SynthError::NonFiniteIntensity(idx));
        }
        Ok(Self { data, t, h, w, fps })
    }

    /// All-constant frames, mainly for tests and no-signal controls.
    pub fn constant(t: usize, h: usize, w: usize, value: f32, fps: f64) -> Self {
        Self {
            data: vec![value; t * h * w * CHANNELS],
            t,
            h,
            w,
            fps,
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn c(&self) -> usize {
        CHANNELS
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Values per frame (`H·W·C`).
    pub fn frame_len(&self) -> usize {
        self.h * self.w * CHANNELS
    }

    /// Flattened view of frame `k`.
    pub fn frame(&self, k: usize) -> &[f32] {
        let len = self.frame_len();
        &self.data[k * len..(k + 1) * len]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Spatial mean of one channel in frame `k`.
    pub fn channel_mean(&self, k: usize, channel: usize) -> f64 {
        let frame = self.frame(k);
        let mut acc = 0.0f64;
        let mut count = 0usize;
        for px in frame.chunks_exact(CHANNELS) {
            acc += px[channel] as f64;
            count += 1;
        }
        acc / count as f64
    }
}
