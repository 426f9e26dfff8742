//! Integer motion estimation by exhaustive full search.
//!
//! FME needs an integer MV origin for its 3x3 cost grid; full search keeps
//! that origin independent of any fast-IME heuristic. The window precondition
//! includes a one-pel margin so all eight neighbors of the winner are
//! addressable afterwards.

use crate::distortion::{sad, satd_block, Distortion};
use crate::error::{Error, Result};
use crate::pixel::{BlockView, Plane};
use crate::rate::MotionVector;

/// Distortion metric for the integer search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Sad,
    Satd,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Search window half-width in integer pels.
    pub range: i32,
    pub metric: Metric,
}

impl SearchConfig {
    pub fn new(range: i32, metric: Metric) -> Self {
        assert!(range >= 1);
        SearchConfig { range, metric }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            range: 8,
            metric: Metric::Sad,
        }
    }
}

/// Total candidate order: cost, then |x|+|y|, then y, then x. Fixed so every
/// search is bit-exact reproducible.
#[inline]
pub(crate) fn candidate_key(cost: u64, mv: MotionVector) -> (u64, u32, i32, i32) {
    (cost, mv.x.unsigned_abs() + mv.y.unsigned_abs(), mv.y, mv.x)
}

/// Exhaustive integer-pel search over `center +/- range`, returning the
/// winning MV in quarter-pel units and its distortion.
pub fn full_search(
    orig: &BlockView,
    reference: &Plane,
    center: MotionVector,
    cfg: &SearchConfig,
) -> Result<(MotionVector, Distortion)> {
    debug_assert!(center.is_integer_pel());
    let (cx, cy) = center.pel();
    let (bx, by) = orig.origin();
    let w = orig.width();
    let h = orig.height();
    let margin = cfg.range as i64 + 1; // +1 pel for the later 3x3 cost grid
    let x0 = bx as i64 + cx as i64 - margin;
    let y0 = by as i64 + cy as i64 - margin;
    let x1 = bx as i64 + cx as i64 + margin + w as i64;
    let y1 = by as i64 + cy as i64 + margin + h as i64;
    if x0 < 0 || y0 < 0 || x1 > reference.width() as i64 || y1 > reference.height() as i64 {
        return Err(Error::WindowOutOfBounds {
            x0,
            x1,
            y0,
            y1,
            width: reference.width(),
            height: reference.height(),
        });
    }

    let mut best: Option<(MotionVector, Distortion)> = None;
    for dy in -cfg.range..=cfg.range {
        for dx in -cfg.range..=cfg.range {
            let mv = MotionVector::from_pel(cx + dx, cy + dy);
            let pred = reference
                .view_signed(
                    bx as i64 + (cx + dx) as i64,
                    by as i64 + (cy + dy) as i64,
                    w,
                    h,
                )
                .expect("window precondition already checked");
            let cost = match cfg.metric {
                Metric::Sad => sad(orig, &pred)?,
                Metric::Satd => satd_block(orig, &pred)?,
            };
            let better = match best {
                None => true,
                Some((bmv, bcost)) => candidate_key(cost, mv) < candidate_key(bcost, bmv),
            };
            if better {
                best = Some((mv, cost));
            }
        }
    }
    Ok(best.expect("range >= 1 yields candidates"))
}
