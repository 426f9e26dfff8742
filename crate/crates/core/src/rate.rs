//! Motion vectors, MVD rate estimation and the integer R-D cost `J = D + lambda*R`.
//!
//! The rate of an MVD component is the order-0 exp-Golomb code length of its
//! signed mapping, which realizes the hardware's lookup rule as a closed
//! form. Lambda is carried in Q16 fixed point so costs stay integral.

use serde::Serialize;

use crate::distortion::Distortion;
use crate::error::{Error, Result};

/// Motion vector in quarter-pel units. Integer-pel vectors have both
/// components divisible by 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct MotionVector {
    pub x: i32,
    pub y: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        MotionVector { x, y }
    }

    /// Quarter-pel vector for an integer-pel displacement.
    pub const fn from_pel(x: i32, y: i32) -> Self {
        MotionVector { x: x * 4, y: y * 4 }
    }

    pub fn is_integer_pel(self) -> bool {
        self.x % 4 == 0 && self.y % 4 == 0
    }

    /// Integer-pel part; valid only when `is_integer_pel`.
    pub fn pel(self) -> (i32, i32) {
        debug_assert!(self.is_integer_pel());
        (self.x / 4, self.y / 4)
    }
}

impl std::ops::Add for MotionVector {
    type Output = MotionVector;
    fn add(self, rhs: MotionVector) -> MotionVector {
        MotionVector::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for MotionVector {
    type Output = MotionVector;
    fn sub(self, rhs: MotionVector) -> MotionVector {
        MotionVector::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Lagrange multiplier scaled by 2^16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LambdaFixed {
    pub q16: u64,
}

impl LambdaFixed {
    pub const ZERO: LambdaFixed = LambdaFixed { q16: 0 };

    pub const fn from_q16(q16: u64) -> Self {
        LambdaFixed { q16 }
    }

    /// Conventional encoder lambda `0.57 * 2^((qp-12)/3)`, rounded into Q16.
    pub fn from_qp(qp: i32) -> Self {
        let lambda = 0.57f64 * 2f64.powf((qp as f64 - 12.0) / 3.0);
        LambdaFixed {
            q16: (lambda * 65536.0).round() as u64,
        }
    }
}

/// Integer R-D cost.
pub type RdCost = u64;

#[inline]
fn component_bits(v: i32) -> u32 {
    debug_assert!(v.unsigned_abs() < 1 << 15);
    // Signed-to-unsigned zigzag, then order-0 exp-Golomb length.
    let m = if v <= 0 {
        (-2 * v) as u32
    } else {
        (2 * v - 1) as u32
    };
    2 * (m + 1).ilog2() + 1
}

/// Bits to code a motion vector difference, summed over both components.
pub fn mvd_bits(mvd: MotionVector) -> u32 {
    component_bits(mvd.x) + component_bits(mvd.y)
}

/// `J = D + round(lambda * R)` with the Q16 product rounded to nearest.
/// Overflowing the 64-bit accumulator signals an invalid configuration.
pub fn rd_cost(d: Distortion, mvd: MotionVector, lambda: LambdaFixed) -> Result<RdCost> {
    let rate = mvd_bits(mvd) as u64;
    let weighted = lambda
        .q16
        .checked_mul(rate)
        .and_then(|p| p.checked_add(1 << 15))
        .ok_or(Error::CostOverflow)?
        >> 16;
    d.checked_add(weighted).ok_or(Error::CostOverflow)
}
