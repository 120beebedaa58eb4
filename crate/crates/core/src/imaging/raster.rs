use std::sync::OnceLock;

use crate::corpus::{RawSample, SAMPLE_LEN, SIDE};
use crate::layout::{self, LayoutMap};

use super::{Canvas, HilbertColoring, ImagingOptions, ResizeFilter};

/// Smallest Hilbert order whose grid holds [`SAMPLE_LEN`] cells.
pub const HILBERT_ORDER: u32 = 8;

pub fn hilbert_grid_side() -> usize {
    1 << HILBERT_ORDER
}

pub(crate) fn hilbert8() -> &'static LayoutMap {
    static MAP: OnceLock<LayoutMap> = OnceLock::new();
    MAP.get_or_init(|| layout::hilbert(HILBERT_ORDER).expect("order 8 is in range"))
}

/// Color of a byte by character class: NULL, control, printable/high, 0xFF.
#[inline]
pub fn byteclass_encode(byte: u8) -> [u8; 3] {
    let g = match byte {
        0 => 0,
        1..=31 | 127 => 255,
        255 => 128,
        _ => 32,
    };
    [0, g, 0]
}

pub fn to_grayscale(sample: &RawSample) -> Canvas {
    let mut canvas = Canvas::new();
    for (i, &b) in sample.bytes.iter().take(SAMPLE_LEN).enumerate() {
        canvas.set_gray(i / SIDE, i % SIDE, b);
    }
    canvas
}

pub fn to_byteclass(sample: &RawSample) -> Canvas {
    let mut canvas = Canvas::new();
    for (i, &b) in sample.bytes.iter().take(SAMPLE_LEN).enumerate() {
        canvas.set(i / SIDE, i % SIDE, byteclass_encode(b));
    }
    canvas
}

/// Lay `colors` along the order-8 Hilbert curve (unvisited cells stay black)
/// and resize the 256x256 grid to 224x224.
pub(crate) fn hilbert_raster(
    colors: impl Iterator<Item = [u8; 3]>,
    filter: ResizeFilter,
) -> Canvas {
    let map = hilbert8();
    let side = map.side();
    let mut grid = Canvas::with_size(side, side);
    for (i, rgb) in colors.take(map.len()).enumerate() {
        let (r, c) = map.cell(i);
        grid.set(r, c, rgb);
    }
    resize(&grid, SIDE, filter)
}

pub fn to_hilbert(sample: &RawSample, opts: &ImagingOptions) -> Canvas {
    let bytes = sample.bytes.iter().take(SAMPLE_LEN);
    match opts.hilbert_coloring {
        HilbertColoring::Byteclass => {
            hilbert_raster(bytes.map(|&b| byteclass_encode(b)), opts.resize)
        }
        HilbertColoring::Grayscale => hilbert_raster(bytes.map(|&b| [b, b, b]), opts.resize),
    }
}

/// Resize a square canvas to `dst` x `dst`.
///
/// Nearest samples the source pixel under each destination pixel centre:
/// `src = floor((2 d + 1) s / (2 D))`. Bilinear uses the same centre alignment.
pub fn resize(src: &Canvas, dst: usize, filter: ResizeFilter) -> Canvas {
    let s = src.width();
    assert_eq!(s, src.height(), "resize expects a square canvas");
    let mut out = Canvas::with_size(dst, dst);
    match filter {
        ResizeFilter::Nearest => {
            let index: Vec<usize> = (0..dst).map(|d| (2 * d + 1) * s / (2 * dst)).collect();
            for (r, &sr) in index.iter().enumerate() {
                for (c, &sc) in index.iter().enumerate() {
                    out.set(r, c, src.get(sr, sc));
                }
            }
        }
        ResizeFilter::Bilinear => {
            let scale = s as f64 / dst as f64;
            let taps: Vec<(usize, usize, f64)> = (0..dst)
                .map(|d| {
                    let x = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (s - 1) as f64);
                    let lo = x.floor() as usize;
                    let hi = (lo + 1).min(s - 1);
                    (lo, hi, x - lo as f64)
                })
                .collect();
            for (r, &(r0, r1, fr)) in taps.iter().enumerate() {
                for (c, &(c0, c1, fc)) in taps.iter().enumerate() {
                    let (p00, p01) = (src.get(r0, c0), src.get(r0, c1));
                    let (p10, p11) = (src.get(r1, c0), src.get(r1, c1));
                    let mut px = [0u8; 3];
                    for ch in 0..3 {
                        let top = p00[ch] as f64 * (1.0 - fc) + p01[ch] as f64 * fc;
                        let bottom = p10[ch] as f64 * (1.0 - fc) + p11[ch] as f64 * fc;
                        px[ch] = (top * (1.0 - fr) + bottom * fr).round().clamp(0.0, 255.0) as u8;
                    }
                    out.set(r, c, px);
                }
            }
        }
    }
    out
}
