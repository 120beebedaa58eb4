//! Gray-level co-occurrence matrices and the 13 Haralick texture statistics.
//!
//! Gray levels are 0-based, so the sum average ranges over `0..=2(G-1)`.
//! Entropies use log base 2 and zero-probability terms contribute nothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::GrayPlane;

/// Offsets `(d_row, d_col)` at distance 1 for 0, 45, 90 and 135 degrees.
pub const OFFSETS: [(isize, isize); 4] = [(0, 1), (-1, 1), (-1, 0), (-1, -1)];

pub const HARALICK_NAMES: [&str; 13] = [
    "angular_second_moment",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "info_measure_correlation_1",
    "info_measure_correlation_2",
];

const EPS: f64 = 1e-12;

/// Symmetric, normalized co-occurrence matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Glcm {
    pub levels: usize,
    pub offset: (isize, isize),
    /// Row-major `levels x levels`.
    pub matrix: Vec<f64>,
}

impl Glcm {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }
}

/// Quantize to `levels` gray levels (`v * levels / 256`), count pairs at
/// `offset`, add the transpose and normalize to sum 1.
pub fn glcm(plane: &GrayPlane, offset: (isize, isize), levels: usize) -> Result<Glcm> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidArgument(format!(
            "GLCM levels {levels} outside 2..=256"
        )));
    }
    let (dr, dc) = offset;
    let (h, w) = (plane.height as isize, plane.width as isize);
    let rows = dr.min(0).abs()..(h - dr.max(0));
    let cols = dc.min(0).abs()..(w - dc.max(0));
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}x{} plane is too small for offset {offset:?}",
            plane.width, plane.height
        )));
    }
    let q = |v: u8| v as usize * levels / 256;
    let mut counts = vec![0u64; levels * levels];
    for r in rows {
        for c in cols.clone() {
            let a = q(plane.get(r as usize, c as usize));
            let b = q(plane.get((r + dr) as usize, (c + dc) as usize));
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let matrix = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(Glcm {
        levels,
        offset,
        matrix,
    })
}

fn entropy(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter()
        .filter(|&v| v > 0.0)
        .map(|v| v * v.log2())
        .sum::<f64>()
}

/// The 13 statistics of one co-occurrence matrix, in [`HARALICK_NAMES`] order.
#[allow(clippy::needless_range_loop)]
pub fn haralick_stats(g: &Glcm) -> [f64; 13] {
    let n = g.levels;
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    let mut asm = 0.0;
    let mut idm = 0.0;
    let mut ij = 0.0;
    let mut hxy = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = g.at(i, j);
            if p == 0.0 {
                continue;
            }
            px[i] += p;
            py[j] += p;
            p_sum[i + j] += p;
            let d = i.abs_diff(j);
            p_diff[d] += p;
            asm += p * p;
            idm += p / (1.0 + (d * d) as f64);
            ij += (i * j) as f64 * p;
            hxy -= p * p.log2();
        }
    }
    let mean = |v: &[f64]| {
        v.iter()
            .enumerate()
            .map(|(k, &p)| k as f64 * p)
            .sum::<f64>()
    };
    let var = |v: &[f64], m: f64| {
        v.iter()
            .enumerate()
            .map(|(k, &p)| (k as f64 - m).powi(2) * p)
            .sum::<f64>()
    };

    let (mx, my) = (mean(&px), mean(&py));
    let (vx, vy) = (var(&px, mx), var(&py, my));
    let contrast: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &p)| (k * k) as f64 * p)
        .sum();
    let sd = (vx * vy).sqrt();
    let correlation = if sd > EPS { (ij - mx * my) / sd } else { 1.0 };
    let sum_avg = mean(&p_sum);
    let sum_var = var(&p_sum, sum_avg);
    let sum_ent = entropy(p_sum.iter().copied());
    let diff_mean = mean(&p_diff);
    let diff_var = var(&p_diff, diff_mean);
    let diff_ent = entropy(p_diff.iter().copied());

    let hx = entropy(px.iter().copied());
    let hy = entropy(py.iter().copied());
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let q = px[i] * py[j];
            if q > 0.0 {
                let lq = q.log2();
                hxy1 -= g.at(i, j) * lq;
                hxy2 -= q * lq;
            }
        }
    }
    let denom = hx.max(hy);
    let imc1 = if denom > EPS {
        (hxy - hxy1) / denom
    } else {
        0.0
    };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    [
        asm,
        contrast,
        correlation,
        vx,
        idm,
        sum_avg,
        sum_var,
        sum_ent,
        hxy,
        diff_var,
        diff_ent,
        imc1,
        imc2,
    ]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean over the four directions (13 values).
    #[default]
    Mean,
    /// Directions concatenated in [`OFFSETS`] order (52 values).
    Concat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HaralickConfig {
    pub levels: usize,
    pub distance: usize,
    pub aggregation: Aggregation,
}

impl Default for HaralickConfig {
    fn default() -> Self {
        HaralickConfig {
            levels: 16,
            distance: 1,
            aggregation: Aggregation::Mean,
        }
    }
}

/// Per-direction statistics in [`OFFSETS`] order.
pub fn haralick_directions(
    plane: &GrayPlane,
    levels: usize,
    distance: usize,
) -> Result<[[f64; 13]; 4]> {
    if distance == 0 {
        return Err(Error::InvalidArgument(
            "GLCM distance must be positive".into(),
        ));
    }
    let d = distance as isize;
    let mut out = [[0.0; 13]; 4];
    for (slot, &(dr, dc)) in out.iter_mut().zip(&OFFSETS) {
        *slot = haralick_stats(&glcm(plane, (dr * d, dc * d), levels)?);
    }
    Ok(out)
}

pub fn haralick_with(plane: &GrayPlane, cfg: &HaralickConfig) -> Result<Vec<f64>> {
    let dirs = haralick_directions(plane, cfg.levels, cfg.distance)?;
    Ok(match cfg.aggregation {
        Aggregation::Mean => (0..13)
            .map(|f| dirs.iter().map(|d| d[f]).sum::<f64>() / 4.0)
            .collect(),
        Aggregation::Concat => dirs.iter().flatten().copied().collect(),
    })
}

/// 13 Haralick statistics on the 16-level GLCM, averaged over four directions.
pub fn haralick(plane: &GrayPlane) -> Result<Vec<f64>> {
    haralick_with(plane, &HaralickConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_image_glcm() {
        let p = GrayPlane::from_fn(2, 2, |_, _| 0);
        let g = glcm(&p, (0, 1), 16).unwrap();
        assert_eq!(g.at(0, 0), 1.0);
    }

    #[test]
    fn two_level_columns() {
        let p = GrayPlane::new(2, 2, vec![0, 255, 0, 255]).unwrap();
        let g = glcm(&p, (0, 1), 16).unwrap();
        assert_eq!(g.at(0, 15), 0.5);
        assert_eq!(g.at(15, 0), 0.5);
        assert_eq!(g.matrix.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn offset_out_of_reach() {
        let p = GrayPlane::from_fn(1, 1, |_, _| 0);
        assert!(glcm(&p, (0, 1), 16).is_err());
        let p = GrayPlane::from_fn(4, 4, |_, _| 0);
        assert!(glcm(&p, (0, 1), 1).is_err());
    }

    #[test]
    fn constant_image_stats() {
        let p = GrayPlane::from_fn(10, 10, |_, _| 200);
        let h = haralick(&p).unwrap();
        assert_eq!(h.len(), 13);
        assert_eq!(h[0], 1.0);
        assert_eq!(h[1], 0.0);
        assert_eq!(h[8], 0.0);
        assert!(h.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn horizontal_stripes_contrast() {
        let p = GrayPlane::from_fn(8, 8, |r, _| if r % 2 == 0 { 0 } else { 255 });
        let dirs = haralick_directions(&p, 16, 1).unwrap();
        assert_eq!(dirs[0][1], 0.0);
        // every vertical pair joins level 0 and level 15
        assert_eq!(dirs[2][1], 225.0);
        assert_eq!(dirs[2][1], 15f64.powi(2));
    }

    #[test]
    fn concat_has_52() {
        let p = GrayPlane::from_fn(8, 8, |r, c| (r * 31 + c * 17) as u8);
        let cfg = HaralickConfig {
            aggregation: Aggregation::Concat,
            ..Default::default()
        };
        assert_eq!(haralick_with(&p, &cfg).unwrap().len(), 52);
    }
}
