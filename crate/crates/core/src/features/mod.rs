//! Fixed-length descriptors extracted from canvases.

mod haralick;
mod hog;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Canvas, Technique};

pub use haralick::{
    glcm, haralick, haralick_directions, haralick_stats, haralick_with, Aggregation, Glcm,
    HaralickConfig, HARALICK_NAMES, OFFSETS,
};
pub use hog::{gradients, hog, HogConfig};

/// Single-channel 8-bit plane, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayPlane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayPlane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(GrayPlane {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let data = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        GrayPlane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    /// Rotate 90 degrees counter-clockwise.
    pub fn rotate90(&self) -> GrayPlane {
        GrayPlane::from_fn(self.height, self.width, |r, c| {
            self.get(c, self.width - 1 - r)
        })
    }

    pub fn channel(canvas: &Canvas, channel: usize) -> GrayPlane {
        GrayPlane {
            width: canvas.width(),
            height: canvas.height(),
            data: canvas.plane(channel),
        }
    }
}

/// ITU-R 601 luma, rounded: `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn luma(canvas: &Canvas) -> GrayPlane {
    let data = canvas
        .pixels()
        .map(|[r, g, b]| {
            (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
                .round()
                .clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayPlane {
        width: canvas.width(),
        height: canvas.height(),
        data,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Hog,
    Haralick,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Hog => "hog",
            FeatureKind::Haralick => "haralick",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hog" => Ok(FeatureKind::Hog),
            "haralick" => Ok(FeatureKind::Haralick),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature kind `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub hog: HogConfig,
    pub haralick: HaralickConfig,
    /// Extract from R, G and B separately and concatenate instead of using luma.
    pub per_channel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub technique: Option<Technique>,
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn name(&self) -> String {
        match self.technique {
            Some(t) => format!("{t}_{}", self.kind),
            None => self.kind.to_string(),
        }
    }
}

fn extract(plane: &GrayPlane, kind: FeatureKind, opts: &FeatureOptions) -> Result<Vec<f64>> {
    match kind {
        FeatureKind::Hog => hog(plane, &opts.hog),
        FeatureKind::Haralick => haralick_with(plane, &opts.haralick),
    }
}

pub fn featurize(
    canvas: &Canvas,
    technique: Option<Technique>,
    kind: FeatureKind,
    opts: &FeatureOptions,
) -> Result<FeatureVector> {
    let values = if opts.per_channel {
        let mut all = Vec::new();
        for ch in 0..3 {
            all.extend(extract(&GrayPlane::channel(canvas, ch), kind, opts)?);
        }
        all
    } else {
        extract(&luma(canvas), kind, opts)?
    };
    Ok(FeatureVector {
        technique,
        kind,
        values,
    })
}
