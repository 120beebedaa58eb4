use std::sync::OnceLock;

use crate::corpus::{RawSample, SAMPLE_LEN};

use super::raster::{byteclass_encode, hilbert_raster};
use super::{Canvas, ImagingOptions};

/// Bytes per entropy window away from the buffer tail.
pub const ENTROPY_WINDOW: usize = 256;

/// Normalized windowed entropy, one value in `[0, 1]` per buffer position.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropySeries {
    pub values: Vec<f64>,
}

// c log2(c) in fixed point so the sliding sum never drifts.
const FIXED_SHIFT: i32 = 40;

fn clog_table() -> &'static [u64; ENTROPY_WINDOW + 1] {
    static TABLE: OnceLock<[u64; ENTROPY_WINDOW + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let scale = 2f64.powi(FIXED_SHIFT);
        let mut t = [0u64; ENTROPY_WINDOW + 1];
        for (c, slot) in t.iter_mut().enumerate().skip(2) {
            let c = c as f64;
            *slot = (c * c.log2() * scale).round() as u64;
        }
        t
    })
}

// H = log2(n) - (1/n) sum_v c_v log2 c_v
fn entropy_from_sum(clog_sum: u64, n: usize) -> f64 {
    // a single value filling the window; avoids log2(n) - log2(n) residue
    if clog_sum == clog_table()[n] {
        return 0.0;
    }
    let s = clog_sum as f64 / 2f64.powi(FIXED_SHIFT);
    let nf = n as f64;
    (nf.log2() - s / nf).max(0.0)
}

/// Shannon entropy in bits of an arbitrary window.
pub fn window_entropy(window: &[u8]) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let mut counts = [0usize; 256];
    for &b in window {
        counts[b as usize] += 1;
    }
    let n = window.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Per-position entropy over `bytes[i ..= min(i + 255, len - 1)]`, divided by 8.
pub fn entropy_series(bytes: &[u8]) -> EntropySeries {
    let len = bytes.len();
    let table = clog_table();
    let mut counts = [0usize; 256];
    let mut sum = 0u64;
    let first = len.min(ENTROPY_WINDOW);
    for &b in &bytes[..first] {
        let c = &mut counts[b as usize];
        sum = sum - table[*c] + table[*c + 1];
        *c += 1;
    }
    let mut values = Vec::with_capacity(len);
    for i in 0..len {
        let n = (len - i).min(ENTROPY_WINDOW);
        let h = entropy_from_sum(sum, n);
        values.push((h / 8.0).clamp(0.0, 1.0));

        let out = &mut counts[bytes[i] as usize];
        sum = sum - table[*out] + table[*out - 1];
        *out -= 1;
        if let Some(&b) = bytes.get(i + ENTROPY_WINDOW) {
            let c = &mut counts[b as usize];
            sum = sum - table[*c] + table[*c + 1];
            *c += 1;
        }
    }
    EntropySeries { values }
}

/// Map a normalized entropy value to `(red, blue)` intensities.
pub fn entropy_encode(x: f64) -> (u8, u8) {
    let x = x.clamp(0.0, 1.0);
    let r = if x > 0.5 {
        let d = x - 0.5;
        (256.0 * (d - d * d).powi(4)).floor()
    } else {
        0.0
    };
    let b = (255.0 * x * x).floor();
    (r.clamp(0.0, 255.0) as u8, b.clamp(0.0, 255.0) as u8)
}

fn entropy_colors(sample: &RawSample) -> Vec<[u8; 3]> {
    let series = entropy_series(&sample.bytes[..SAMPLE_LEN.min(sample.bytes.len())]);
    series
        .values
        .iter()
        .map(|&x| {
            let (r, b) = entropy_encode(x);
            [r, 0, b]
        })
        .collect()
}

pub fn to_entropy(sample: &RawSample, opts: &ImagingOptions) -> Canvas {
    hilbert_raster(entropy_colors(sample).into_iter(), opts.resize)
}

/// Entropy red/blue merged with byteclass green, all along the Hilbert curve.
pub fn to_hit(sample: &RawSample, opts: &ImagingOptions) -> Canvas {
    let colors = entropy_colors(sample)
        .into_iter()
        .zip(&sample.bytes)
        .map(|([r, _, b], &byte)| [r, byteclass_encode(byte)[1], b]);
    hilbert_raster(colors, opts.resize)
}
