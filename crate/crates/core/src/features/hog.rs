use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::GrayPlane;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HogConfig {
    pub orientations: usize,
    /// Cell side in pixels.
    pub cell: usize,
    /// Block side in cells.
    pub block: usize,
    /// Orientations over 0..360 instead of 0..180.
    pub signed: bool,
    /// L2-Hys clipping threshold.
    pub clip: f64,
}

impl Default for HogConfig {
    fn default() -> Self {
        HogConfig {
            orientations: 9,
            cell: 8,
            block: 2,
            signed: false,
            clip: 0.2,
        }
    }
}

const NORM_EPS: f64 = 1e-5;

impl HogConfig {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.orientations == 0 || self.cell == 0 || self.block == 0 {
            return bad("HOG orientations, cell and block must be positive".into());
        }
        if !width.is_multiple_of(self.cell) || !height.is_multiple_of(self.cell) {
            return bad(format!(
                "{width}x{height} plane is not divisible into {}-pixel cells",
                self.cell
            ));
        }
        if self.block > width / self.cell || self.block > height / self.cell {
            return bad(format!(
                "block of {} cells exceeds the cell grid",
                self.block
            ));
        }
        if self.clip.is_nan() || self.clip <= 0.0 {
            return bad("HOG clip must be positive".into());
        }
        Ok(())
    }

    /// Descriptor length for a plane of the given size.
    pub fn dims(&self, width: usize, height: usize) -> usize {
        let bx = width / self.cell - self.block + 1;
        let by = height / self.cell - self.block + 1;
        bx * by * self.block * self.block * self.orientations
    }
}

/// Central-difference gradients `(gx, gy)`; zero on the border rows/columns
/// where the difference is undefined. `gy` grows downward.
pub fn gradients(plane: &GrayPlane) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (plane.width, plane.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            if c > 0 && c + 1 < w {
                gx[r * w + c] = plane.get(r, c + 1) as f64 - plane.get(r, c - 1) as f64;
            }
            if r > 0 && r + 1 < h {
                gy[r * w + c] = plane.get(r + 1, c) as f64 - plane.get(r - 1, c) as f64;
            }
        }
    }
    (gx, gy)
}

fn l2_hys(v: &mut [f64], clip: f64) {
    let scale = |v: &mut [f64]| {
        let norm = (v.iter().map(|x| x * x).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    };
    scale(v);
    v.iter_mut().for_each(|x| *x = x.min(clip));
    scale(v);
}

/// Histogram of oriented gradients.
///
/// Bin `b` is centred on `b * range / orientations` degrees and votes are
/// split linearly between the two nearest bin centres (wrapping around).
/// Blocks slide one cell at a time; each block is L2-Hys normalized and
/// emitted as cell-row, cell-col, orientation.
pub fn hog(plane: &GrayPlane, cfg: &HogConfig) -> Result<Vec<f64>> {
    cfg.validate(plane.width, plane.height)?;
    let (gx, gy) = gradients(plane);
    let cells_x = plane.width / cfg.cell;
    let cells_y = plane.height / cfg.cell;
    let bins = cfg.orientations;
    let range = if cfg.signed { 360.0 } else { 180.0 };
    let bin_width = range / bins as f64;

    let mut hist = vec![0.0; cells_x * cells_y * bins];
    for r in 0..plane.height {
        for c in 0..plane.width {
            let i = r * plane.width + c;
            let mag = gx[i].hypot(gy[i]);
            if mag == 0.0 {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees().rem_euclid(range);
            let pos = angle / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = lo as usize % bins;
            let hi = (lo + 1) % bins;
            let cell = ((r / cfg.cell) * cells_x + c / cfg.cell) * bins;
            hist[cell + lo] += mag * (1.0 - frac);
            hist[cell + hi] += mag * frac;
        }
    }

    let blocks_x = cells_x - cfg.block + 1;
    let blocks_y = cells_y - cfg.block + 1;
    let block_len = cfg.block * cfg.block * bins;
    let mut out = Vec::with_capacity(blocks_x * blocks_y * block_len);
    let mut block = Vec::with_capacity(block_len);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            block.clear();
            for cy in by..by + cfg.block {
                for cx in bx..bx + cfg.block {
                    let o = (cy * cells_x + cx) * bins;
                    block.extend_from_slice(&hist[o..o + bins]);
                }
            }
            l2_hys(&mut block, cfg.clip);
            out.extend_from_slice(&block);
        }
    }
    Ok(out)
}
