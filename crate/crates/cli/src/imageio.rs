//! PNG and TIFF decoding into unit-range planes, and the reverse.
//!
//! Only 8- and 16-bit grayscale or RGB rasters are accepted; anything with an
//! alpha channel or floating-point samples is rejected rather than silently
//! converted.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma, Rgb};
use oneshot_deblur::{BitDepth, Image, ImagePlane};

use crate::error::{CliError, CliResult};

pub fn is_supported_extension(path: &Path) -> bool {
    output_format(path).is_ok()
}

fn output_format(path: &Path) -> CliResult<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "tif" | "tiff" => Ok(ImageFormat::Tiff),
        _ => Err(CliError::io(path, "unsupported extension (expected .png, .tif or .tiff)")),
    }
}

fn planes_from<T: Copy + Into<f64>>(
    raw: &[T],
    width: usize,
    height: usize,
    channels: usize,
    depth: BitDepth,
) -> Vec<ImagePlane> {
    let max = depth.max_value();
    (0..channels)
        .map(|c| {
            let samples = raw.iter().skip(c).step_by(channels).map(|&v| v.into() / max).collect();
            ImagePlane::with_depth(width, height, samples, depth).expect("decoded raster is well formed")
        })
        .collect()
}

pub fn read_image(path: &Path) -> CliResult<Image> {
    let decoded = ImageReader::open(path)
        .map_err(|e| CliError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| CliError::io(path, e))?
        .decode()
        .map_err(|e| CliError::io(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, depth) = match &decoded {
        DynamicImage::ImageLuma8(b) => (planes_from(b.as_raw(), w, h, 1, BitDepth::Eight), BitDepth::Eight),
        DynamicImage::ImageRgb8(b) => (planes_from(b.as_raw(), w, h, 3, BitDepth::Eight), BitDepth::Eight),
        DynamicImage::ImageLuma16(b) => (planes_from(b.as_raw(), w, h, 1, BitDepth::Sixteen), BitDepth::Sixteen),
        DynamicImage::ImageRgb16(b) => (planes_from(b.as_raw(), w, h, 3, BitDepth::Sixteen), BitDepth::Sixteen),
        other => {
            return Err(CliError::io(
                path,
                format!("unsupported pixel layout {:?}; expected 8/16-bit gray or RGB", other.color()),
            ))
        }
    };
    Ok(Image::new(channels, depth)?)
}

fn codes<T>(image: &Image, to_code: impl Fn(f64) -> T) -> Vec<T> {
    let channels = image.channels();
    let n = image.width() * image.height();
    let mut out = Vec::with_capacity(n * channels.len());
    for i in 0..n {
        for c in channels {
            out.push(to_code(c.samples()[i]));
        }
    }
    out
}

/// Writes `image` at its own bit depth, in the format named by the extension.
pub fn write_image(path: &Path, image: &Image) -> CliResult<()> {
    let format = output_format(path)?;
    let (w, h) = (image.width() as u32, image.height() as u32);
    let max = image.bit_depth().max_value();
    let to_code = |v: f64| (v.clamp(0.0, 1.0) * max).round();
    let dynamic = match (image.bit_depth(), image.channels().len()) {
        (BitDepth::Eight, 1) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, codes(image, |v| to_code(v) as u8)).expect("buffer size"),
        ),
        (BitDepth::Eight, 3) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, codes(image, |v| to_code(v) as u8)).expect("buffer size"),
        ),
        (BitDepth::Sixteen, 1) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, codes(image, |v| to_code(v) as u16)).expect("buffer size"),
        ),
        (BitDepth::Sixteen, 3) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, codes(image, |v| to_code(v) as u16)).expect("buffer size"),
        ),
        (_, n) => return Err(CliError::io(path, format!("cannot encode {n} channels"))),
    };
    dynamic.save_with_format(path, format).map_err(|e| CliError::io(path, e))
}
