//! 8-bit RGB PNG input and output.
//!
//! The only raster format this crate reads or writes. Byte values map to
//! [0, 1] via `value / 255`; saving rounds with `round(value * 255)` after
//! clamping, so save-then-load of 8-bit data is lossless and any image
//! round-trips to within half a quantization step.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Load an 8-bit RGB PNG into a unit-range image.
pub fn load_image(path: &Path) -> Result<Image> {
    let reader = image::ImageReader::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let decoded = reader.decode().map_err(|e| Error::ImageFormat {
        path: path.to_path_buf(),
        message: format!("not a decodable image: {e}"),
    })?;
    let rgb = match decoded {
        image::DynamicImage::ImageRgb8(img) => img,
        other => {
            return Err(Error::ImageFormat {
                path: path.to_path_buf(),
                message: format!(
                    "expected 8-bit RGB PNG, got {:?} pixels",
                    other.color()
                ),
            })
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut out = Image::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let p = rgb.get_pixel(x as u32, y as u32);
            for c in 0..3 {
                out.set(c, y, x, p.0[c] as f64 / 255.0);
            }
        }
    }
    Ok(out)
}

/// Save as an 8-bit RGB PNG, clamping then rounding each sample to 1/255
/// granularity.
pub fn save_image(path: &Path, img: &Image) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    let mut rgb = image::RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let mut px = [0u8; 3];
            for (c, byte) in px.iter_mut().enumerate() {
                let v = img.get(c, y, x).clamp(0.0, 1.0);
                *byte = (v * 255.0).round() as u8;
            }
            rgb.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    rgb.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => Error::ImageFormat {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
}

/// Quantize to the on-disk 8-bit grid without touching the filesystem.
/// `save_image` followed by `load_image` equals this map exactly.
pub fn quantize_to_8bit(img: &Image) -> Image {
    img.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0)
}
