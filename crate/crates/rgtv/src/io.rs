//! Image file I/O: PNG and PGM, 8- or 16-bit, normalized to [0, 1] on load.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::image::ImageBuf;

/// A decoded image: always a luminance plane, plus the RGB planes when the
/// file had color.
#[derive(Debug, Clone)]
pub struct LoadedImage {
    /// Luminance (ITU-R BT.601 weights for color inputs).
    pub gray: ImageBuf,
    /// RGB planes, present iff the source had color.
    pub rgb: Option<[ImageBuf; 3]>,
}

impl LoadedImage {
    pub fn is_color(&self) -> bool {
        self.rgb.is_some()
    }
}

/// BT.601 luma from RGB planes.
pub fn luminance(rgb: &[ImageBuf; 3]) -> ImageBuf {
    let (w, h) = (rgb[0].width(), rgb[0].height());
    ImageBuf::from_fn(w, h, |r, c| {
        0.299 * rgb[0].at(r, c) + 0.587 * rgb[1].at(r, c) + 0.114 * rgb[2].at(r, c)
    })
}

/// Load a PNG or PGM image. 8-bit samples map to `v / 255`, 16-bit to
/// `v / 65535`.
pub fn load_image(path: impl AsRef<Path>) -> Result<LoadedImage> {
    let path = path.as_ref();
    let dynimg = image::open(path).map_err(|e| Error::Image {
        path: path.into(),
        source: e,
    })?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Format(format!("{}: empty image", path.display())));
    }

    let loaded = match dynimg {
        DynamicImage::ImageLuma8(img) => LoadedImage {
            gray: plane_from(w, h, img.as_raw(), |v| v as f64 / 255.0),
            rgb: None,
        },
        DynamicImage::ImageLuma16(img) => LoadedImage {
            gray: plane_from(w, h, img.as_raw(), |v| v as f64 / 65535.0),
            rgb: None,
        },
        DynamicImage::ImageLumaA8(img) => LoadedImage {
            gray: strided_plane(w, h, img.as_raw(), 2, 0, |v: u8| v as f64 / 255.0),
            rgb: None,
        },
        DynamicImage::ImageLumaA16(img) => LoadedImage {
            gray: strided_plane(w, h, img.as_raw(), 2, 0, |v: u16| v as f64 / 65535.0),
            rgb: None,
        },
        other => {
            // Any color layout: normalize through 16-bit RGB.
            let rgb16 = other.into_rgb16();
            let raw = rgb16.as_raw();
            let mk = |off| strided_plane(w, h, raw, 3, off, |v: u16| v as f64 / 65535.0);
            let rgb = [mk(0), mk(1), mk(2)];
            LoadedImage {
                gray: luminance(&rgb),
                rgb: Some(rgb),
            }
        }
    };
    Ok(loaded)
}

fn plane_from<T: Copy>(w: usize, h: usize, raw: &[T], map: impl Fn(T) -> f64) -> ImageBuf {
    ImageBuf::from_raw(w, h, raw.iter().map(|&v| map(v)).collect())
}

fn strided_plane<T: Copy>(
    w: usize,
    h: usize,
    raw: &[T],
    stride: usize,
    offset: usize,
    map: impl Fn(T) -> f64,
) -> ImageBuf {
    let data = raw
        .iter()
        .skip(offset)
        .step_by(stride)
        .map(|&v| map(v))
        .collect();
    ImageBuf::from_raw(w, h, data)
}

/// Save a grayscale image as 8-bit PNG or PGM (picked from the extension),
/// clamping to [0, 1] first.
pub fn save_gray(img: &ImageBuf, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let clamped = img.clamped();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(
        img.width() as u32,
        img.height() as u32,
        |x, y| Luma([to_u8(clamped.at(y as usize, x as usize))]),
    );
    buf.save(path).map_err(|e| Error::Image {
        path: path.into(),
        source: e,
    })
}

/// Save RGB planes as an 8-bit PNG, clamping each channel.
pub fn save_rgb(rgb: &[ImageBuf; 3], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let planes: Vec<ImageBuf> = rgb.iter().map(|p| p.clamped()).collect();
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_fn(
        rgb[0].width() as u32,
        rgb[0].height() as u32,
        |x, y| {
            Rgb([
                to_u8(planes[0].at(y as usize, x as usize)),
                to_u8(planes[1].at(y as usize, x as usize)),
                to_u8(planes[2].at(y as usize, x as usize)),
            ])
        },
    );
    buf.save(path).map_err(|e| Error::Image {
        path: path.into(),
        source: e,
    })
}

fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}
