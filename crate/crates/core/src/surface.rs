//! Quadratic error-surface fit over a 3x3 cost grid and divider-free
//! quarter-pel extremum extraction.
//!
//! The surface `C(x,y) = P1*x^2 + P2*y^2 + P3*x*y + P4*x + P5*y + P6` is fit
//! by least squares to the nine costs at the integer MV and its eight
//! neighbors. Because the sample coordinates are fixed, the pseudo-inverse
//! collapses to constant integer weights once the parameters are scaled by
//! (6, 6, 12, 12, 12):
//!
//! ```text
//! p1 = 6*P1  = 3*sum(C*x^2) - 2*sum(C)
//! p2 = 6*P2  = 3*sum(C*y^2) - 2*sum(C)
//! p3 = 12*P3 = 3*sum(C*x*y)
//! p4 = 12*P4 = 2*sum(C*x)
//! p5 = 12*P5 = 2*sum(C*y)
//! ```
//!
//! With that scaling the extremum of the surface is exactly
//! `(num_x/den, num_y/den)` with `num_x = 4*p2*p4 - p3*p5`,
//! `num_y = 4*p1*p5 - p3*p4` and `den = p3*p3 - 16*p1*p2`; both the weights
//! and this algebra are pinned against a floating-point least-squares
//! reference in the tests. Rounding the ratio to quarter-pel precision needs
//! no divider: 8x the numerator is compared against the 1x/3x/5x/7x
//! denominator.

use crate::rate::MotionVector;

/// Nine R-D costs indexed by offset `(x, y)` in `{-1, 0, 1}^2`, row-major
/// with `(-1,-1)` first; the best integer MV is the origin.
///
/// Entries must stay below 2^53 so the fit, the extremum products and the
/// x8 rounding comparisons all have integer headroom; real R-D costs are
/// far smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostGrid3x3 {
    costs: [u64; 9],
}

pub const MAX_GRID_COST: u64 = 1 << 53;

impl CostGrid3x3 {
    pub fn new(costs: [u64; 9]) -> Self {
        assert!(
            costs.iter().all(|&c| c < MAX_GRID_COST),
            "grid cost exceeds {MAX_GRID_COST}"
        );
        CostGrid3x3 { costs }
    }

    pub fn from_fn(mut f: impl FnMut(i32, i32) -> u64) -> Self {
        let mut costs = [0u64; 9];
        for (i, c) in costs.iter_mut().enumerate() {
            *c = f(i as i32 % 3 - 1, i as i32 / 3 - 1);
        }
        CostGrid3x3::new(costs)
    }

    #[inline]
    pub fn get(&self, x: i32, y: i32) -> u64 {
        debug_assert!((-1..=1).contains(&x) && (-1..=1).contains(&y));
        self.costs[((y + 1) * 3 + (x + 1)) as usize]
    }

    pub fn costs(&self) -> &[u64; 9] {
        &self.costs
    }

    pub fn min_cost(&self) -> u64 {
        *self.costs.iter().min().unwrap()
    }

    /// Grid with the minimum cost subtracted from every entry, the
    /// bit-width reduction applied ahead of the parameter generator. By
    /// shift invariance of the fit it cannot change any output.
    pub fn shifted_to_zero(&self) -> CostGrid3x3 {
        let m = self.min_cost();
        CostGrid3x3 {
            costs: self.costs.map(|c| c - m),
        }
    }

    pub fn mirrored_x(&self) -> CostGrid3x3 {
        CostGrid3x3::from_fn(|x, y| self.get(-x, y))
    }

    pub fn mirrored_y(&self) -> CostGrid3x3 {
        CostGrid3x3::from_fn(|x, y| self.get(x, -y))
    }

    pub fn transposed(&self) -> CostGrid3x3 {
        CostGrid3x3::from_fn(|x, y| self.get(y, x))
    }
}

/// Integer-scaled least-squares surface parameters: `p1 = 6*P1`, `p2 = 6*P2`,
/// `p3 = 12*P3`, `p4 = 12*P4`, `p5 = 12*P5`. The constant term is dropped;
/// it never moves the extremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceParams {
    pub p1: i64,
    pub p2: i64,
    pub p3: i64,
    pub p4: i64,
    pub p5: i64,
}

/// Quarter-pel offset from the integer MV, each component in `[-3, 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct QuarterPelOffset {
    pub qx: i32,
    pub qy: i32,
}

impl QuarterPelOffset {
    pub const ZERO: QuarterPelOffset = QuarterPelOffset { qx: 0, qy: 0 };

    pub fn as_mv(self) -> MotionVector {
        MotionVector::new(self.qx, self.qy)
    }
}

/// Exact integer-scaled least-squares solution for the fixed 3x3 design.
pub fn fit_surface(grid: &CostGrid3x3) -> SurfaceParams {
    let mut sum_x2 = 0i128; // sum(C * x^2)
    let mut sum_y2 = 0i128;
    let mut sum_xy = 0i128;
    let mut sum_x = 0i128;
    let mut sum_y = 0i128;
    let mut sum = 0i128;
    for y in -1i128..=1 {
        for x in -1i128..=1 {
            let c = grid.get(x as i32, y as i32) as i128;
            sum_x2 += c * x * x;
            sum_y2 += c * y * y;
            sum_xy += c * x * y;
            sum_x += c * x;
            sum_y += c * y;
            sum += c;
        }
    }
    let narrow = |v: i128| -> i64 { i64::try_from(v).expect("grid cost out of range") };
    SurfaceParams {
        p1: narrow(3 * sum_x2 - 2 * sum),
        p2: narrow(3 * sum_y2 - 2 * sum),
        p3: narrow(3 * sum_xy),
        p4: narrow(2 * sum_x),
        p5: narrow(2 * sum_y),
    }
}

/// Exact rational extremum of the fitted surface as `(num_x, num_y, den)`
/// with `FMV_x = num_x/den`, `FMV_y = num_y/den` whenever `den != 0`.
pub fn extremum(params: &SurfaceParams) -> (i128, i128, i128) {
    let p1 = params.p1 as i128;
    let p2 = params.p2 as i128;
    let p3 = params.p3 as i128;
    let p4 = params.p4 as i128;
    let p5 = params.p5 as i128;
    let num_x = 4 * p2 * p4 - p3 * p5;
    let num_y = 4 * p1 * p5 - p3 * p4;
    let den = p3 * p3 - 16 * p1 * p2;
    (num_x, num_y, den)
}

/// Rounds `4*num/den` to the nearest integer without dividing, ties toward
/// zero, clamped to `[-3, 3]`.
///
/// After normalizing the denominator positive, `8*|num|` is compared against
/// the 1x/3x/5x/7x denominator; each strict exceedance advances the
/// magnitude one quarter step.
pub fn round_quarter_divfree(num: i128, den: i128) -> i32 {
    assert!(den != 0, "degenerate denominator");
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let scaled = 8 * num.abs();
    let mut magnitude = 0i32;
    for threshold in [1i128, 3, 5, 7] {
        if scaled > threshold * den {
            magnitude += 1;
        }
    }
    magnitude = magnitude.min(3);
    if num < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Fits the surface and returns the quarter-pel offset of its minimum.
///
/// Falls back to `(0, 0)` unless the fit is a strict local minimum: the
/// discriminant `den` must be negative and both curvatures positive.
pub fn fractional_refine(grid: &CostGrid3x3) -> QuarterPelOffset {
    fractional_refine_clamped(grid, 3)
}

/// [`fractional_refine`] with a tighter clamp on the offset magnitude
/// (`max_abs` in quarters, 1..=3).
pub fn fractional_refine_clamped(grid: &CostGrid3x3, max_abs: i32) -> QuarterPelOffset {
    assert!((1..=3).contains(&max_abs));
    let params = fit_surface(grid);
    let (num_x, num_y, den) = extremum(&params);
    if den >= 0 || params.p1 <= 0 || params.p2 <= 0 {
        return QuarterPelOffset::ZERO;
    }
    QuarterPelOffset {
        qx: round_quarter_divfree(num_x, den).clamp(-max_abs, max_abs),
        qy: round_quarter_divfree(num_y, den).clamp(-max_abs, max_abs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, max: u64) -> CostGrid3x3 {
        CostGrid3x3::new(std::array::from_fn(|_| rng.random_range(0..=max)))
    }

    #[test]
    fn flat_grid_fits_to_zero() {
        let grid = CostGrid3x3::new([100; 9]);
        let p = fit_surface(&grid);
        assert_eq!((p.p1, p.p2, p.p3, p.p4, p.p5), (0, 0, 0, 0, 0));
    }

    #[test]
    fn unit_paraboloid_recovered_exactly() {
        // C(x,y) = x^2 + y^2
        let grid = CostGrid3x3::new([2, 1, 2, 1, 0, 1, 2, 1, 2]);
        let p = fit_surface(&grid);
        assert_eq!((p.p1, p.p2, p.p3, p.p4, p.p5), (6, 6, 0, 0, 0));
        let (nx, ny, den) = extremum(&p);
        assert_eq!((nx, ny), (0, 0));
        assert!(den < 0);
        assert_eq!(fractional_refine(&grid), QuarterPelOffset::ZERO);
    }

    #[test]
    fn shifted_paraboloid_recovers_exact_extremum() {
        // C(x,y) = 16*(x - 1/4)^2 + 16*(y + 1/2)^2, integer at all nine
        // sample points.
        let grid = CostGrid3x3::new([29, 5, 13, 29, 5, 13, 61, 37, 45]);
        let p = fit_surface(&grid);
        assert_eq!((p.p1, p.p2, p.p3, p.p4, p.p5), (96, 96, 0, -96, 192));
        let (nx, ny, den) = extremum(&p);
        assert!(den < 0);
        assert_eq!(nx * 4, den); // nx/den == 1/4
        assert_eq!(ny * 2, -den); // ny/den == -1/2
        assert_eq!(fractional_refine(&grid), QuarterPelOffset { qx: 1, qy: -2 });
    }

    #[test]
    fn degenerate_flat_surface_has_zero_discriminant() {
        let p = fit_surface(&CostGrid3x3::new([7; 9]));
        let (_, _, den) = extremum(&p);
        assert_eq!(den, 0);
        assert_eq!(
            fractional_refine(&CostGrid3x3::new([7; 9])),
            QuarterPelOffset::ZERO
        );
    }

    #[test]
    fn rounding_cases() {
        assert_eq!(round_quarter_divfree(0, 123), 0);
        assert_eq!(round_quarter_divfree(1, 3), 1); // 4/3 quarters
        assert_eq!(round_quarter_divfree(-5, 8), -2); // tie at -2.5 quarters, toward zero
        assert_eq!(round_quarter_divfree(9, 2), 3); // 18 quarters, clamped
        assert_eq!(round_quarter_divfree(9, -2), -3);
        assert_eq!(round_quarter_divfree(1, 8), 0); // tie at 0.5 quarters
        assert_eq!(round_quarter_divfree(-1, -8), 0);
    }

    #[test]
    fn rounding_matches_float_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x524e_4421);
        for _ in 0..50_000 {
            let num = rng.random_range(-1_000_000i64..=1_000_000) as i128;
            let den = loop {
                let d = rng.random_range(-1_000_000i64..=1_000_000) as i128;
                if d != 0 {
                    break d;
                }
            };
            let exact = round_quarter_divfree(num, den);
            // Round to nearest with ties toward zero, in exact rational
            // arithmetic so the oracle itself cannot misround.
            let (n, d) = if den < 0 { (-num, -den) } else { (num, den) };
            let twice = 8 * n; // (4*n/d) * 2*d
            let q = twice.div_euclid(2 * d);
            let r = twice.rem_euclid(2 * d);
            let nearest = if r * 2 > 2 * d {
                q + 1
            } else if r * 2 < 2 * d {
                q
            } else {
                // exact half: toward zero
                if q >= 0 {
                    q
                } else {
                    q + 1
                }
            };
            let expect = (nearest as i32).clamp(-3, 3);
            assert_eq!(exact, expect, "num={num} den={den}");
        }
    }

    #[test]
    fn fit_matches_float_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4649_5400);
        for _ in 0..20_000 {
            let grid = random_grid(&mut rng, 1 << 20);
            let p = fit_surface(&grid);
            let sol = oracle::fit_surface_float(&grid).unwrap();
            let scaled = [
                (p.p1 as f64 / 6.0, sol[0]),
                (p.p2 as f64 / 6.0, sol[1]),
                (p.p3 as f64 / 12.0, sol[2]),
                (p.p4 as f64 / 12.0, sol[3]),
                (p.p5 as f64 / 12.0, sol[4]),
            ];
            for (ours, theirs) in scaled {
                let tol = 1e-9 * theirs.abs().max(1.0);
                assert!(
                    (ours - theirs).abs() <= tol,
                    "{ours} vs {theirs} on {:?}",
                    grid
                );
            }
        }
    }

    #[test]
    fn refine_matches_float_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5246_4c54);
        for _ in 0..20_000 {
            let grid = random_grid(&mut rng, 1 << 20);
            assert_eq!(
                fractional_refine(&grid),
                oracle::fractional_refine_float(&grid, 3),
                "{:?}",
                grid
            );
        }
    }

    #[test]
    fn shift_and_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5348_4654);
        for _ in 0..10_000 {
            let grid = random_grid(&mut rng, 1 << 20);
            let c = rng.random_range(0..=1u64 << 20);
            let k = rng.random_range(1..=64u64);
            let shifted = CostGrid3x3::from_fn(|x, y| grid.get(x, y) + c);
            let scaled = CostGrid3x3::from_fn(|x, y| grid.get(x, y) * k);
            assert_eq!(fit_surface(&grid), fit_surface(&shifted));
            assert_eq!(fractional_refine(&grid), fractional_refine(&shifted));
            assert_eq!(fractional_refine(&grid), fractional_refine(&scaled));
            assert_eq!(
                fractional_refine(&grid),
                fractional_refine(&grid.shifted_to_zero())
            );
        }
    }

    #[test]
    fn mirror_and_transpose_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4d49_5252);
        for _ in 0..10_000 {
            let grid = random_grid(&mut rng, 1 << 20);
            let base = fractional_refine(&grid);
            let mx = fractional_refine(&grid.mirrored_x());
            let my = fractional_refine(&grid.mirrored_y());
            let tr = fractional_refine(&grid.transposed());
            assert_eq!((mx.qx, mx.qy), (-base.qx, base.qy));
            assert_eq!((my.qx, my.qy), (base.qx, -base.qy));
            assert_eq!((tr.qx, tr.qy), (base.qy, base.qx));
        }
    }

    #[test]
    fn exact_convex_quadratic_lands_within_a_quarter() {
        // Integer-valued convex quadratics with minimum on a 1/32 grid:
        // the fit is exact, so quarter rounding is the only error source.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5155_4144);
        for _ in 0..2_000 {
            let a = rng.random_range(1..=64i64);
            let b = rng.random_range(1..=64i64);
            let c_max = (4.0 * (a as f64) * (b as f64)).sqrt().floor() as i64;
            let c = rng.random_range(-(c_max - 1).max(0)..=(c_max - 1).max(0));
            let u = rng.random_range(-28..=28i64); // min at (u/32, v/32)
            let v = rng.random_range(-28..=28i64);
            let base = rng.random_range(0..=1000i64);
            let sample = |x: i64, y: i64| -> u64 {
                let dx = 32 * x - u;
                let dy = 32 * y - v;
                let val = a * dx * dx + b * dy * dy + c * dx * dy;
                debug_assert!(val >= 0);
                (val + base) as u64
            };
            let grid = CostGrid3x3::from_fn(|x, y| sample(x as i64, y as i64));
            let got = fractional_refine(&grid);
            let true_x = u as f64 / 32.0;
            let true_y = v as f64 / 32.0;
            assert!(
                (got.qx as f64 / 4.0 - true_x).abs() <= 0.25 + 1e-12
                    && (got.qy as f64 / 4.0 - true_y).abs() <= 0.25 + 1e-12,
                "min ({true_x},{true_y}) -> offset {:?}",
                got
            );
        }
    }

    #[test]
    fn tight_clamp_restricts_range() {
        // Extremum at (3/4, 0): (4x-3)^2 + 16y^2 sampled on the grid.
        let grid = CostGrid3x3::from_fn(|x, y| {
            let dx = 4 * x as i64 - 3;
            (dx * dx + 16 * (y * y) as i64) as u64
        });
        assert_eq!(fractional_refine(&grid), QuarterPelOffset { qx: 3, qy: 0 });
        assert_eq!(fractional_refine_clamped(&grid, 2).qx, 2);
    }
}
