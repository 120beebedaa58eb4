//! Index to cell bijections for placing linear data on a square grid.
//!
//! Coordinates are `(row, col)` with row 0 at the top.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    RowMajor,
    Hilbert,
    Spiral,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutMap {
    kind: LayoutKind,
    side: usize,
    cells: Vec<(usize, usize)>,
    inverse: Vec<Option<usize>>,
}

impl LayoutMap {
    fn from_cells(kind: LayoutKind, side: usize, cells: Vec<(usize, usize)>) -> Self {
        let mut inverse = vec![None; side * side];
        for (i, &(r, c)) in cells.iter().enumerate() {
            debug_assert!(r < side && c < side);
            let slot = &mut inverse[r * side + c];
            debug_assert!(slot.is_none(), "cell ({r},{c}) visited twice");
            *slot = Some(i);
        }
        LayoutMap {
            kind,
            side,
            cells,
            inverse,
        }
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell of linear index `i`. Panics if `i >= len()`.
    pub fn cell(&self, i: usize) -> (usize, usize) {
        self.cells[i]
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    /// Linear index placed at `(row, col)`, if any.
    pub fn index_of(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.side || col >= self.side {
            return None;
        }
        self.inverse[row * self.side + col]
    }

    /// Debug dump as CSV `index,row,col`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "index,row,col").map_err(io)?;
        for (i, (r, c)) in self.cells.iter().enumerate() {
            writeln!(w, "{i},{r},{c}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

pub fn row_major(side: usize) -> Result<LayoutMap> {
    if side == 0 {
        return Err(Error::InvalidArgument(
            "row-major side must be at least 1".into(),
        ));
    }
    let cells = (0..side * side).map(|i| (i / side, i % side)).collect();
    Ok(LayoutMap::from_cells(LayoutKind::RowMajor, side, cells))
}

pub const MAX_HILBERT_ORDER: u32 = 12;

/// Hilbert curve of the given order on a `2^order` square grid.
///
/// Orientation: index 0 sits at `(0, 0)` and the last index at `(0, side - 1)`.
pub fn hilbert(order: u32) -> Result<LayoutMap> {
    if !(1..=MAX_HILBERT_ORDER).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "hilbert order {order} outside 1..={MAX_HILBERT_ORDER}"
        )));
    }
    let side = 1usize << order;
    let cells = (0..side * side)
        .map(|d| hilbert_d2xy(order, d))
        .map(|(x, y)| (y, x))
        .collect();
    Ok(LayoutMap::from_cells(LayoutKind::Hilbert, side, cells))
}

// Classic iterative d -> (x, y) conversion; x is the column, y the row.
fn hilbert_d2xy(order: u32, d: usize) -> (usize, usize) {
    let n = 1usize << order;
    let (mut x, mut y) = (0usize, 0usize);
    let mut t = d;
    let mut s = 1usize;
    while s < n {
        let rx = 1 & (t >> 1);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t >>= 2;
        s <<= 1;
    }
    (x, y)
}

pub const SPIRAL_SIDE: usize = 16;

/// Clockwise square spiral over a 16x16 grid starting at `(7, 7)`.
///
/// Runs go right, down, left, up with lengths 1, 1, 2, 2, ..., 15, 15 and a
/// closing run of 15 that walks the last row.
pub fn spiral16() -> LayoutMap {
    const DIRS: [(isize, isize); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
    let start = (SPIRAL_SIDE / 2 - 1) as isize;
    let (mut r, mut c) = (start, start);
    let mut cells = Vec::with_capacity(SPIRAL_SIDE * SPIRAL_SIDE);
    cells.push((r as usize, c as usize));
    let mut runs: Vec<usize> = (1..SPIRAL_SIDE).flat_map(|k| [k, k]).collect();
    runs.push(SPIRAL_SIDE - 1);
    for (dir, run) in runs.into_iter().enumerate() {
        let (dr, dc) = DIRS[dir % 4];
        for _ in 0..run {
            r += dr;
            c += dc;
            cells.push((r as usize, c as usize));
        }
    }
    LayoutMap::from_cells(LayoutKind::Spiral, SPIRAL_SIDE, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_examples() {
        let m = row_major(224).unwrap();
        assert_eq!(m.cell(0), (0, 0));
        assert_eq!(m.cell(224), (1, 0));
        assert_eq!(m.cell(50_175), (223, 223));
        assert!(row_major(0).is_err());
    }

    #[test]
    fn hilbert_order_one() {
        let m = hilbert(1).unwrap();
        assert_eq!(m.cells(), &[(0, 0), (1, 0), (1, 1), (0, 1)]);
    }

    #[test]
    fn hilbert_endpoints() {
        for order in 1..=8 {
            let m = hilbert(order).unwrap();
            assert_eq!(m.cell(0), (0, 0));
            assert_eq!(m.cell(m.len() - 1), (0, m.side() - 1));
        }
    }

    #[test]
    fn hilbert_order_range() {
        assert!(hilbert(0).is_err());
        assert!(hilbert(13).is_err());
    }

    #[test]
    fn spiral_first_steps() {
        let s = spiral16();
        assert_eq!(&s.cells()[..5], &[(7, 7), (7, 8), (8, 8), (8, 7), (8, 6)]);
        assert_eq!(s.len(), 256);
    }

    #[test]
    fn inverse_round_trips() {
        for m in [row_major(7).unwrap(), hilbert(3).unwrap(), spiral16()] {
            for r in 0..m.side() {
                for c in 0..m.side() {
                    let i = m.index_of(r, c).unwrap();
                    assert_eq!(m.cell(i), (r, c));
                }
            }
            assert_eq!(m.index_of(m.side(), 0), None);
        }
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        hilbert(1).unwrap().write_csv(&p).unwrap();
        assert_eq!(
            std::fs::read_to_string(p).unwrap(),
            "index,row,col\n0,0,0\n1,1,0\n2,1,1\n3,0,1\n"
        );
    }
}
