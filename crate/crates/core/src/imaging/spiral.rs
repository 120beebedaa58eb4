use std::sync::OnceLock;

use crate::corpus::{ByteHistogram, SIDE};
use crate::error::{Error, Result};
use crate::layout::{self, LayoutMap, SPIRAL_SIDE};
use crate::learn::{FeatureNorms, GiniRanking};

use super::Canvas;

/// Edge length in pixels of one spiral cell after upscaling.
pub const SPIRAL_BLOCK: usize = SIDE / SPIRAL_SIDE;

fn spiral_map() -> &'static LayoutMap {
    static MAP: OnceLock<LayoutMap> = OnceLock::new();
    MAP.get_or_init(layout::spiral16)
}

/// The 16x16 grid of pixel values (row-major) before upscaling.
///
/// Rank `k` of the importance order lands on spiral cell `k`; its value is
/// the min-max normalized histogram entry scaled to 0..=255, truncated and
/// inverted so the corpus minimum is white and the maximum black.
pub fn spiral_cells(
    histogram: &ByteHistogram,
    ranking: &GiniRanking,
    norms: &FeatureNorms,
) -> Result<Vec<u8>> {
    let n = histogram.values.len();
    if ranking.order.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: ranking.order.len(),
        });
    }
    if norms.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: norms.len(),
        });
    }
    let map = spiral_map();
    let mut cells = vec![255u8; SPIRAL_SIDE * SPIRAL_SIDE];
    for (rank, &feature) in ranking.order.iter().enumerate() {
        let v = norms.normalize(feature, histogram.values[feature]);
        let q = (255.0 * v).floor().clamp(0.0, 255.0) as u8;
        let (r, c) = map.cell(rank);
        cells[r * SPIRAL_SIDE + c] = 255 - q;
    }
    Ok(cells)
}

pub fn to_spiral(
    histogram: &ByteHistogram,
    ranking: &GiniRanking,
    norms: &FeatureNorms,
) -> Result<Canvas> {
    let cells = spiral_cells(histogram, ranking, norms)?;
    let mut canvas = Canvas::new();
    for r in 0..SIDE {
        for c in 0..SIDE {
            canvas.set_gray(
                r,
                c,
                cells[(r / SPIRAL_BLOCK) * SPIRAL_SIDE + c / SPIRAL_BLOCK],
            );
        }
    }
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_ranking() -> GiniRanking {
        GiniRanking::from_importances(vec![0.0; 256])
    }

    fn unit_norms() -> FeatureNorms {
        FeatureNorms::new(vec![0.0; 256], vec![1.0; 256]).unwrap()
    }

    #[test]
    fn minimum_everywhere_is_white() {
        let h = ByteHistogram { values: [0.0; 256] };
        let c = to_spiral(&h, &identity_ranking(), &unit_norms()).unwrap();
        assert!(c.pixels().all(|p| p == [255, 255, 255]));
    }

    #[test]
    fn maximum_feature_is_black_block() {
        let mut values = [0.0; 256];
        values[0] = 1.0;
        let h = ByteHistogram { values };
        let c = to_spiral(&h, &identity_ranking(), &unit_norms()).unwrap();
        // rank 0 sits at spiral cell (7, 7)
        for r in 0..SIDE {
            for col in 0..SIDE {
                let inside = (7 * 14..8 * 14).contains(&r) && (7 * 14..8 * 14).contains(&col);
                assert_eq!(c.get(r, col)[0], if inside { 0 } else { 255 });
            }
        }
    }

    #[test]
    fn top_ranked_feature_at_center() {
        let mut imp = vec![0.0; 256];
        imp[200] = 1.0;
        let ranking = GiniRanking::from_importances(imp);
        let mut values = [0.0; 256];
        values[200] = 0.5;
        let h = ByteHistogram { values };
        let cells = spiral_cells(&h, &ranking, &unit_norms()).unwrap();
        assert_eq!(cells[7 * 16 + 7], 255 - 127);
    }

    #[test]
    fn length_mismatch_is_error() {
        let h = ByteHistogram { values: [0.0; 256] };
        let short = GiniRanking {
            order: (0..10).collect(),
            importances: vec![0.0; 10],
        };
        assert!(to_spiral(&h, &short, &unit_norms()).is_err());
        let norms = FeatureNorms::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(to_spiral(&h, &identity_ranking(), &norms).is_err());
    }
}
