//! Single-channel rasters and multi-channel images in unit-range `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Bit depth of the file an image was decoded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// A single-channel raster, row-major.
///
/// Planes decoded from files hold samples in `[0, 1]`; intermediate planes
/// such as edge images are signed. All samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
    bit_depth: BitDepth,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        Self::with_depth(width, height, samples, BitDepth::Sixteen)
    }

    pub fn with_depth(
        width: usize,
        height: usize,
        samples: Vec<f64>,
        bit_depth: BitDepth,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid("image dimensions must be positive");
        }
        if samples.len() != width * height {
            return invalid(format!(
                "sample count {} does not match {}x{}",
                samples.len(),
                width,
                height
            ));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return invalid("image samples must be finite");
        }
        Ok(Self {
            width,
            height,
            samples,
            bit_depth,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    /// Builds a plane without validation; callers guarantee the invariants.
    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        samples: Vec<f64>,
        bit_depth: BitDepth,
    ) -> Self {
        debug_assert_eq!(samples.len(), width * height);
        Self {
            width,
            height,
            samples,
            bit_depth,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    pub fn same_shape(&self, other: &ImagePlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImagePlane {
        let samples = self.samples.iter().map(|&v| f(v)).collect();
        Self::from_parts(self.width, self.height, samples, self.bit_depth)
    }

    /// `self + scale * other`, sample by sample.
    pub fn add_scaled(&self, other: &ImagePlane, scale: f64) -> Result<ImagePlane> {
        if !self.same_shape(other) {
            return invalid("planes differ in shape");
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(Self::from_parts(self.width, self.height, samples, self.bit_depth))
    }

    pub fn clipped(&self) -> ImagePlane {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn transposed(&self) -> ImagePlane {
        let mut samples = vec![0.0; self.samples.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                samples[x * self.height + y] = self.samples[y * self.width + x];
            }
        }
        Self::from_parts(self.height, self.width, samples, self.bit_depth)
    }

    pub(crate) fn with_bit_depth(mut self, bit_depth: BitDepth) -> Self {
        self.bit_depth = bit_depth;
        self
    }
}

/// A multi-channel image: one plane per channel, all of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: Vec<ImagePlane>,
    bit_depth: BitDepth,
}

impl Image {
    pub fn new(channels: Vec<ImagePlane>, bit_depth: BitDepth) -> Result<Self> {
        let Some(first) = channels.first() else {
            return invalid("image needs at least one channel");
        };
        if channels.iter().any(|c| !c.same_shape(first)) {
            return invalid("channels differ in shape");
        }
        let channels = channels
            .into_iter()
            .map(|c| c.with_bit_depth(bit_depth))
            .collect();
        Ok(Self {
            channels,
            bit_depth,
        })
    }

    pub fn gray(plane: ImagePlane) -> Self {
        let bit_depth = plane.bit_depth();
        Self {
            channels: vec![plane],
            bit_depth,
        }
    }

    pub fn channels(&self) -> &[ImagePlane] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<ImagePlane> {
        self.channels
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    /// Rounds every sample to the nearest code value of the image's bit depth.
    pub fn quantized(&self) -> Image {
        let max = self.bit_depth.max_value();
        let channels = self
            .channels
            .iter()
            .map(|c| c.map(|v| (v.clamp(0.0, 1.0) * max).round() / max))
            .collect();
        Image {
            channels,
            bit_depth: self.bit_depth,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(ImagePlane::new(0, 3, vec![]).is_err());
        assert!(ImagePlane::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImagePlane::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn transpose_round_trip() {
        let p = ImagePlane::from_fn(5, 3, |x, y| (x * 10 + y) as f64).unwrap();
        let t = p.transposed();
        assert_eq!(t.width(), 3);
        assert_eq!(t.get(2, 4), p.get(4, 2));
        assert_eq!(t.transposed(), p);
    }

    #[test]
    fn channels_must_agree() {
        let a = ImagePlane::filled(4, 4, 0.0).unwrap();
        let b = ImagePlane::filled(4, 5, 0.0).unwrap();
        assert!(Image::new(vec![a.clone(), b], BitDepth::Eight).is_err());
        let img = Image::new(vec![a.clone(), a], BitDepth::Eight).unwrap();
        assert_eq!(img.channels()[1].bit_depth(), BitDepth::Eight);
    }
}
