use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::corpus::{RawSample, SIDE};
use crate::error::{Error, Result};

use super::{BigramIntensity, Canvas, ImagingOptions};

/// Counts of consecutive byte pairs `(x, y)`, stored at `[y * 256 + x]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigramCounts {
    counts: Vec<u64>,
}

impl BigramCounts {
    /// Count for the pair where `x` precedes `y`.
    pub fn get(&self, x: u8, y: u8) -> u64 {
        self.counts[y as usize * 256 + x as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn distinct(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    fn nonzero(&self) -> impl Iterator<Item = (u8, u8, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| ((i % 256) as u8, (i / 256) as u8, c))
    }
}

pub fn bigram_counts(bytes: &[u8]) -> Result<BigramCounts> {
    if bytes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "bigram images need at least 2 bytes, got {}",
            bytes.len()
        )));
    }
    let mut counts = vec![0u64; 256 * 256];
    for w in bytes.windows(2) {
        counts[w[1] as usize * 256 + w[0] as usize] += 1;
    }
    Ok(BigramCounts { counts })
}

// Original bytes when there are at least two of them, else the padded buffer.
fn source(sample: &RawSample) -> &[u8] {
    let unpadded = sample.unpadded();
    if unpadded.len() >= 2 {
        unpadded
    } else {
        &sample.bytes
    }
}

fn render(acc: &[u64], mode: BigramIntensity) -> Canvas {
    let mut canvas = Canvas::new();
    let max = acc.iter().copied().max().unwrap_or(0);
    for (i, &c) in acc.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let v = match mode {
            BigramIntensity::Saturating => c.min(255) as u8,
            BigramIntensity::Log => {
                let v = 255.0 * (c as f64).ln_1p() / (max as f64).ln_1p();
                v.floor().clamp(0.0, 255.0) as u8
            }
        };
        canvas.set_gray(i / SIDE, i % SIDE, v);
    }
    canvas
}

/// Pair `(x, y)` lights pixel `(row, col) = (y * 224 / 256, x * 224 / 256)`;
/// counts of merged cells add up before clamping.
pub fn to_bigram_cartesian(sample: &RawSample, opts: &ImagingOptions) -> Result<Canvas> {
    let counts = bigram_counts(source(sample))?;
    let mut acc = vec![0u64; SIDE * SIDE];
    for (x, y, c) in counts.nonzero() {
        let row = y as usize * SIDE / 256;
        let col = x as usize * SIDE / 256;
        acc[row * SIDE + col] += c;
    }
    Ok(render(&acc, opts.bigram_intensity))
}

const POLAR_CENTER: f64 = 111.5;
const POLAR_RADIUS: f64 = 111.0;

/// Pixel hit by pair `(x, y)` in the polar image: `x` sets the radius, `y`
/// the counter-clockwise angle from the +x axis.
pub fn polar_target(x: u8, y: u8) -> (usize, usize) {
    let rho = x as f64 / 255.0 * POLAR_RADIUS;
    let theta = y as f64 / 256.0 * 2.0 * PI;
    let row = (POLAR_CENTER - rho * theta.sin()).round();
    let col = (POLAR_CENTER + rho * theta.cos()).round();
    (row as usize, col as usize)
}

fn polar_table() -> &'static [usize] {
    static TABLE: OnceLock<Vec<usize>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..256 * 256)
            .map(|i| {
                let (r, c) = polar_target((i % 256) as u8, (i / 256) as u8);
                r * SIDE + c
            })
            .collect()
    })
}

pub fn to_bigram_polar(sample: &RawSample, opts: &ImagingOptions) -> Result<Canvas> {
    let counts = bigram_counts(source(sample))?;
    let table = polar_table();
    let mut acc = vec![0u64; SIDE * SIDE];
    for (x, y, c) in counts.nonzero() {
        acc[table[y as usize * 256 + x as usize]] += c;
    }
    Ok(render(&acc, opts.bigram_intensity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SAMPLE_LEN;

    #[test]
    fn counts_by_hand() {
        let c = bigram_counts(&[10, 20, 10, 20, 10]).unwrap();
        assert_eq!(c.get(10, 20), 2);
        assert_eq!(c.get(20, 10), 2);
        assert_eq!(c.total(), 4);
        assert_eq!(c.distinct(), 2);
        assert!(bigram_counts(&[1]).is_err());
    }

    #[test]
    fn constant_buffer_single_saturated_pixel() {
        let s = RawSample::from_bytes("z", "F", &[0; SAMPLE_LEN]);
        let img = to_bigram_cartesian(&s, &ImagingOptions::default()).unwrap();
        assert_eq!(img.get(0, 0), [255, 255, 255]);
        assert_eq!(img.pixels().filter(|p| p[0] > 0).count(), 1);
    }

    #[test]
    fn padding_does_not_create_zero_pairs() {
        let s = RawSample::from_bytes("p", "F", &[5, 6, 5, 6]);
        let img = to_bigram_cartesian(&s, &ImagingOptions::default()).unwrap();
        assert_eq!(img.get(0, 0), [0, 0, 0]);
        assert_eq!(img.pixels().filter(|p| p[0] > 0).count(), 2);
    }

    #[test]
    fn one_byte_file_falls_back_to_buffer() {
        let s = RawSample::from_bytes("o", "F", &[9]);
        let img = to_bigram_cartesian(&s, &ImagingOptions::default()).unwrap();
        // (9,0) once and (0,0) many times
        assert_eq!(img.get(0, 0)[0], 255);
        assert_eq!(img.get(0, 9 * 224 / 256)[0], 1);
    }

    #[test]
    fn polar_examples() {
        for y in [0u8, 17, 128, 255] {
            assert_eq!(polar_target(0, y), (112, 112));
        }
        assert_eq!(polar_target(255, 0), (112, 223));
        for x in 0..=255u8 {
            for y in 0..=255u8 {
                let (r, c) = polar_target(x, y);
                assert!(r < SIDE && c < SIDE);
            }
        }
    }

    #[test]
    fn log_mode_scales_to_full_range() {
        let opts = ImagingOptions {
            bigram_intensity: BigramIntensity::Log,
            ..Default::default()
        };
        let s = RawSample::from_bytes("l", "F", &[1, 2, 1, 2, 1, 2, 1, 2, 3]);
        let img = to_bigram_cartesian(&s, &opts).unwrap();
        let max = img.pixels().map(|p| p[0]).max().unwrap();
        assert_eq!(max, 255);
        assert!(img.is_gray());
    }
}
