//! Coarse motion vector prediction over the per-CTU 8x8 MV grid.
//!
//! AMVP needs the final partition, which is unknown at FME time. CMVP
//! sidesteps that: the best MVs of 8x8 CUs are stored at 8x8 granularity and
//! any CU reads the slots adjacent to its top-left position, which the
//! interlaced schedule guarantees are complete.

use crate::error::{Error, Result};
use crate::rate::MotionVector;

/// 8x8 positions per CTU edge (128/8).
pub const GRID_DIM: usize = 16;

/// MVs just outside the CTU, injected when chaining multi-CTU runs. Absent
/// by default, which yields a zero predictor at CTU borders.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExternalContext {
    /// Column at grid x = -1, indexed by y.
    pub left: [Option<MotionVector>; GRID_DIM],
    /// Row at grid y = -1, indexed by x.
    pub above: [Option<MotionVector>; GRID_DIM],
}

/// Per-CTU grid of best 8x8-CU motion vectors, single-writer per pass.
#[derive(Debug, Clone)]
pub struct MvGrid {
    slots: [[Option<MotionVector>; GRID_DIM]; GRID_DIM],
    context: ExternalContext,
}

impl MvGrid {
    pub fn new() -> Self {
        MvGrid::with_context(ExternalContext::default())
    }

    pub fn with_context(context: ExternalContext) -> Self {
        MvGrid {
            slots: [[None; GRID_DIM]; GRID_DIM],
            context,
        }
    }

    /// Writes the best MV of the 8x8 CU at grid position `(x, y)`. Each slot
    /// is written at most once per pass; a second write is a schedule bug.
    pub fn record_mv(&mut self, x: usize, y: usize, mv: MotionVector) -> Result<()> {
        assert!(x < GRID_DIM && y < GRID_DIM);
        if self.slots[y][x].is_some() {
            return Err(Error::SlotRewrite { x, y });
        }
        self.slots[y][x] = Some(mv);
        Ok(())
    }

    /// Slot lookup with signed coordinates; `-1` rows/columns come from the
    /// external context, anything else outside the grid is absent.
    pub fn get(&self, x: i32, y: i32) -> Option<MotionVector> {
        match (x, y) {
            (x, y) if (0..GRID_DIM as i32).contains(&x) && (0..GRID_DIM as i32).contains(&y) => {
                self.slots[y as usize][x as usize]
            }
            (-1, y) if (0..GRID_DIM as i32).contains(&y) => self.context.left[y as usize],
            (x, -1) if (0..GRID_DIM as i32).contains(&x) => self.context.above[x as usize],
            _ => None,
        }
    }

    /// Right-edge column of this pass, usable as the next CTU's left context.
    pub fn right_column(&self) -> [Option<MotionVector>; GRID_DIM] {
        std::array::from_fn(|y| self.slots[y][GRID_DIM - 1])
    }

    /// Bottom-edge row of this pass, usable as the below CTU's above context.
    pub fn bottom_row(&self) -> [Option<MotionVector>; GRID_DIM] {
        self.slots[GRID_DIM - 1]
    }
}

impl Default for MvGrid {
    fn default() -> Self {
        MvGrid::new()
    }
}

/// A CU rectangle inside the CTU, aligned to its own size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CuRect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl CuRect {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        assert!(
            x0.is_multiple_of(w) && y0.is_multiple_of(h),
            "CU not aligned to its size"
        );
        assert!(x0 + w <= 128 && y0 + h <= 128, "CU outside the CTU");
        CuRect { x0, y0, w, h }
    }

    /// Top-left 8x8 grid position.
    pub fn grid_pos(&self) -> (usize, usize) {
        (self.x0 / 8, self.y0 / 8)
    }
}

/// Coarse MVP: the stored MV left of the CU's top-left 8x8 position, else
/// the one above it, else zero.
pub fn derive_cmvp(grid: &MvGrid, cu: &CuRect) -> MotionVector {
    let (gx, gy) = cu.grid_pos();
    grid.get(gx as i32 - 1, gy as i32)
        .or_else(|| grid.get(gx as i32, gy as i32 - 1))
        .unwrap_or(MotionVector::ZERO)
}
