//! Byte-stream to image converters.
//!
//! Every converter produces a 224x224 RGB [`Canvas`]. Converters are pure
//! functions of the sample bytes and the frozen conventions in
//! [`ImagingOptions`].

mod bigram;
mod entropy;
mod raster;
mod spiral;

use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::corpus::{RawSample, SIDE};
use crate::error::{Error, Result};

pub use bigram::{bigram_counts, polar_target, to_bigram_cartesian, to_bigram_polar, BigramCounts};
pub use entropy::{
    entropy_encode, entropy_series, to_entropy, to_hit, window_entropy, EntropySeries,
    ENTROPY_WINDOW,
};
pub use raster::{
    byteclass_encode, hilbert_grid_side, resize, to_byteclass, to_grayscale, to_hilbert,
    HILBERT_ORDER,
};
pub use spiral::{spiral_cells, to_spiral, SPIRAL_BLOCK};

/// Interleaved 8-bit RGB raster. Converters always emit 224x224; other sizes
/// only appear as intermediate grids.
#[derive(Clone, PartialEq, Eq)]
pub struct Canvas {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for Canvas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Canvas")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas::new()
    }
}

impl Canvas {
    /// Black 224x224 canvas.
    pub fn new() -> Self {
        Canvas::with_size(SIDE, SIDE)
    }

    pub fn with_size(width: usize, height: usize) -> Self {
        Canvas {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: width * height * 3,
                actual: data.len(),
            });
        }
        Ok(Canvas {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        let o = (row * self.width + col) * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let o = (row * self.width + col) * 3;
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    #[inline]
    pub fn set_gray(&mut self, row: usize, col: usize, v: u8) {
        self.set(row, col, [v, v, v]);
    }

    /// One channel (0 = R, 1 = G, 2 = B) as a row-major plane.
    pub fn plane(&self, channel: usize) -> Vec<u8> {
        assert!(channel < 3);
        self.data.iter().skip(channel).step_by(3).copied().collect()
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    pub fn is_gray(&self) -> bool {
        self.pixels().all(|[r, g, b]| r == g && g == b)
    }

    fn to_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer size matches dimensions")
    }
}

/// Lossless 8-bit RGB PNG encoding; identical canvases encode to identical bytes.
pub fn encode_png(canvas: &Canvas) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    canvas
        .to_image()
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: "<memory>".into(),
            source: e,
        })?;
    Ok(out.into_inner())
}

pub fn write_png(canvas: &Canvas, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let bytes = encode_png(canvas)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_png(path: &Path) -> Result<Canvas> {
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Canvas::from_raw(w as usize, h as usize, img.into_raw())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    Grayscale,
    Byteclass,
    Hilbert,
    Entropy,
    Hit,
    BigramCart,
    BigramPolar,
    Spiral,
}

impl Technique {
    pub const ALL: [Technique; 8] = [
        Technique::Grayscale,
        Technique::Byteclass,
        Technique::Hilbert,
        Technique::Entropy,
        Technique::Hit,
        Technique::BigramCart,
        Technique::BigramPolar,
        Technique::Spiral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Grayscale => "grayscale",
            Technique::Byteclass => "byteclass",
            Technique::Hilbert => "hilbert",
            Technique::Entropy => "entropy",
            Technique::Hit => "hit",
            Technique::BigramCart => "bigram_cart",
            Technique::BigramPolar => "bigram_polar",
            Technique::Spiral => "spiral",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown technique `{s}`")))
    }
}

/// Coloring of bytes placed along the Hilbert curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HilbertColoring {
    #[default]
    Byteclass,
    /// Raw byte luminance; for ablation only.
    Grayscale,
}

/// Filter used to bring the 256x256 curve grid down to 224x224.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResizeFilter {
    #[default]
    Nearest,
    Bilinear,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigramIntensity {
    /// Pixel = min(count, 255).
    #[default]
    Saturating,
    /// Pixel = 255 ln(1 + c) / ln(1 + c_max).
    Log,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagingOptions {
    pub hilbert_coloring: HilbertColoring,
    pub resize: ResizeFilter,
    pub bigram_intensity: BigramIntensity,
}

/// Convert a sample with any byte-based technique. Spiral images are built
/// from whole-file histograms via [`to_spiral`] and are rejected here.
pub fn convert(sample: &RawSample, technique: Technique, opts: &ImagingOptions) -> Result<Canvas> {
    Ok(match technique {
        Technique::Grayscale => to_grayscale(sample),
        Technique::Byteclass => to_byteclass(sample),
        Technique::Hilbert => to_hilbert(sample, opts),
        Technique::Entropy => to_entropy(sample, opts),
        Technique::Hit => to_hit(sample, opts),
        Technique::BigramCart => to_bigram_cartesian(sample, opts)?,
        Technique::BigramPolar => to_bigram_polar(sample, opts)?,
        Technique::Spiral => {
            return Err(Error::InvalidArgument(
                "spiral images are built from histograms; use to_spiral".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn technique_names_round_trip() {
        for t in Technique::ALL {
            assert_eq!(t.name().parse::<Technique>().unwrap(), t);
        }
        assert!("qr".parse::<Technique>().is_err());
    }

    #[test]
    fn png_round_trip_and_determinism() {
        let mut c = Canvas::new();
        for r in 0..SIDE {
            for col in 0..SIDE {
                c.set(
                    r,
                    col,
                    [(r % 256) as u8, (col % 256) as u8, ((r * col) % 256) as u8],
                );
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/dir/x.png");
        write_png(&c, &p).unwrap();
        assert_eq!(read_png(&p).unwrap(), c);
        assert_eq!(std::fs::read(&p).unwrap(), encode_png(&c).unwrap());
    }

    #[test]
    fn black_canvas_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("black.png");
        write_png(&Canvas::new(), &p).unwrap();
        let back = read_png(&p).unwrap();
        assert_eq!((back.width(), back.height()), (224, 224));
        assert!(back.pixels().all(|px| px == [0, 0, 0]));
    }

    #[test]
    fn write_png_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = write_png(&Canvas::new(), &blocker.join("a.png")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }

    #[test]
    fn convert_rejects_spiral() {
        let s = RawSample::from_bytes("a", "F", &[1, 2, 3]);
        assert!(convert(&s, Technique::Spiral, &ImagingOptions::default()).is_err());
    }
}
