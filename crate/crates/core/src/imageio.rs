//! Raster file IO (PNG / PGM, 8- or 16-bit single channel).

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma};

use crate::types::{BinaryMask, BitDepth, RasterImage};

#[derive(Debug, thiserror::Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Decode { path: String, source: image::ImageError },
    #[error("{path}: unsupported pixel format {format:?}; expected single-channel 8/16-bit")]
    UnsupportedFormat { path: String, format: image::ColorType },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub fn load_raster(path: &Path) -> Result<RasterImage, ImageIoError> {
    let img = image::open(path).map_err(|source| ImageIoError::Decode { path: path.display().to_string(), source })?;
    let (w, h) = (img.width(), img.height());
    let raster = match img {
        DynamicImage::ImageLuma8(buf) => {
            RasterImage::new(w, h, BitDepth::Eight, buf.into_raw().into_iter().map(u16::from).collect())
        }
        DynamicImage::ImageLuma16(buf) => RasterImage::new(w, h, BitDepth::Sixteen, buf.into_raw()),
        other => {
            return Err(ImageIoError::UnsupportedFormat { path: path.display().to_string(), format: other.color() })
        }
    };
    Ok(raster.expect("decoder yields consistent buffers"))
}

/// Header-only read of the image dimensions.
pub fn raster_dimensions(path: &Path) -> Result<(u32, u32), ImageIoError> {
    image::image_dimensions(path).map_err(|source| ImageIoError::Decode { path: path.display().to_string(), source })
}

pub fn raster_to_dynamic(img: &RasterImage) -> DynamicImage {
    match img.depth() {
        BitDepth::Eight => {
            let raw: Vec<u8> = img.samples().iter().map(|&v| v as u8).collect();
            DynamicImage::ImageLuma8(GrayImage::from_raw(img.width(), img.height(), raw).expect("buffer size"))
        }
        BitDepth::Sixteen => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(img.width(), img.height(), img.samples().to_vec())
                .expect("buffer size"),
        ),
    }
}

pub fn save_raster(img: &RasterImage, path: &Path) -> Result<(), ImageIoError> {
    raster_to_dynamic(img)
        .save(path)
        .map_err(|source| ImageIoError::Decode { path: path.display().to_string(), source })
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    GrayImage::from_raw(mask.width(), mask.height(), raw).expect("buffer size")
}

pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<(), ImageIoError> {
    mask_to_gray(mask).save(path).map_err(|source| ImageIoError::Decode { path: path.display().to_string(), source })
}

pub fn load_mask(path: &Path) -> Result<BinaryMask, ImageIoError> {
    let img = load_raster(path)?;
    Ok(BinaryMask::new(img.width(), img.height(), img.samples().iter().map(|&v| v > 0).collect()))
}

/// PNG-encodes an image into memory.
pub fn encode_png(img: &DynamicImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).expect("in-memory PNG encode");
    out.into_inner()
}
