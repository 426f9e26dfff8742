//! SAD and SATD distortion kernels.
//!
//! SATD is built from 4x4 Hadamard submodules: an 8x8 residual is split into
//! four 4x4 quadrants, each transformed and absolute-summed, mirroring the
//! per-block accumulation of the hardware datapath. Everything here is exact
//! integer arithmetic.

use crate::error::{Error, Result};
use crate::pixel::BlockView;

/// 4x4 residual block (original minus prediction), row-major.
pub type Residual4x4 = [i32; 16];

/// Distortion in SATD or SAD units.
pub type Distortion = u64;

/// 2-D Hadamard transform `H * R * H^T` of a 4x4 residual, where `H` is the
/// unnormalized Sylvester-order matrix with +/-1 entries and an all-ones
/// first row. Butterfly form, two passes.
#[inline]
pub fn hadamard4x4(r: &Residual4x4) -> [i32; 16] {
    let mut tmp = [0i32; 16];
    for row in 0..4 {
        let i = row * 4;
        let a0 = r[i] + r[i + 1];
        let a1 = r[i] - r[i + 1];
        let a2 = r[i + 2] + r[i + 3];
        let a3 = r[i + 2] - r[i + 3];
        tmp[i] = a0 + a2;
        tmp[i + 1] = a1 + a3;
        tmp[i + 2] = a0 - a2;
        tmp[i + 3] = a1 - a3;
    }
    let mut out = [0i32; 16];
    for col in 0..4 {
        let b0 = tmp[col] + tmp[col + 4];
        let b1 = tmp[col] - tmp[col + 4];
        let b2 = tmp[col + 8] + tmp[col + 12];
        let b3 = tmp[col + 8] - tmp[col + 12];
        out[col] = b0 + b2;
        out[col + 4] = b1 + b3;
        out[col + 8] = b0 - b2;
        out[col + 12] = b1 - b3;
    }
    out
}

/// SATD of one 4x4 residual: sum of absolute transform coefficients, halved
/// with round-half-up.
#[inline]
pub fn satd4x4(r: &Residual4x4) -> Distortion {
    let coeffs = hadamard4x4(r);
    let sum: u64 = coeffs.iter().map(|&c| c.unsigned_abs() as u64).sum();
    (sum + 1) >> 1
}

/// SATD of an 8x8 block pair, summed over the four 4x4 quadrants.
pub fn satd8x8(orig: &BlockView, pred: &BlockView) -> Distortion {
    assert!(
        orig.width() == 8 && orig.height() == 8 && pred.width() == 8 && pred.height() == 8,
        "satd8x8 takes 8x8 views"
    );
    let mut total = 0u64;
    for qy in 0..2 {
        for qx in 0..2 {
            let mut residual = [0i32; 16];
            for y in 0..4 {
                let orow = orig.row(qy * 4 + y);
                let prow = pred.row(qy * 4 + y);
                for x in 0..4 {
                    residual[y * 4 + x] = orow[qx * 4 + x] as i32 - prow[qx * 4 + x] as i32;
                }
            }
            total += satd4x4(&residual);
        }
    }
    total
}

/// SATD of an arbitrary block pair with dimensions divisible by 8, as the sum
/// over its 8x8 sub-blocks.
pub fn satd_block(orig: &BlockView, pred: &BlockView) -> Result<Distortion> {
    if orig.width() != pred.width() || orig.height() != pred.height() {
        return Err(Error::DimensionMismatch {
            a_w: orig.width(),
            a_h: orig.height(),
            b_w: pred.width(),
            b_h: pred.height(),
        });
    }
    let mut total = 0u64;
    for (o, p) in orig.subblocks_8x8().iter().zip(pred.subblocks_8x8().iter()) {
        total += satd8x8(o, p);
    }
    Ok(total)
}

/// Sum of absolute differences over an equally sized block pair.
pub fn sad(orig: &BlockView, pred: &BlockView) -> Result<Distortion> {
    if orig.width() != pred.width() || orig.height() != pred.height() {
        return Err(Error::DimensionMismatch {
            a_w: orig.width(),
            a_h: orig.height(),
            b_w: pred.width(),
            b_h: pred.height(),
        });
    }
    let mut total = 0u64;
    for y in 0..orig.height() {
        let orow = orig.row(y);
        let prow = pred.row(y);
        for x in 0..orig.width() {
            total += (orow[x] as i32 - prow[x] as i32).unsigned_abs() as u64;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::Plane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct H*R*H^T with explicit matrix products, the independent route.
    fn hadamard4x4_oracle(r: &Residual4x4) -> [i32; 16] {
        const H: [[i32; 4]; 4] = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]];
        let mut hr = [[0i32; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    hr[i][j] += H[i][k] * r[k * 4 + j];
                }
            }
        }
        let mut out = [0i32; 16];
        for i in 0..4 {
            for j in 0..4 {
                let mut v = 0;
                for k in 0..4 {
                    v += hr[i][k] * H[j][k];
                }
                out[i * 4 + j] = v;
            }
        }
        out
    }

    fn satd4x4_oracle(r: &Residual4x4) -> u64 {
        let sum: u64 = hadamard4x4_oracle(r)
            .iter()
            .map(|&c| c.unsigned_abs() as u64)
            .sum();
        (sum + 1) >> 1
    }

    fn random_residual(rng: &mut ChaCha8Rng) -> Residual4x4 {
        let mut r = [0i32; 16];
        for v in r.iter_mut() {
            *v = rng.random_range(-255..=255);
        }
        r
    }

    #[test]
    fn hadamard_zero_residual() {
        assert_eq!(hadamard4x4(&[0; 16]), [0; 16]);
    }

    #[test]
    fn hadamard_constant_residual_is_pure_dc() {
        let coeffs = hadamard4x4(&[1; 16]);
        assert_eq!(coeffs[0], 16);
        assert!(coeffs[1..].iter().all(|&c| c == 0));
    }

    #[test]
    fn hadamard_matches_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4841_4441);
        for _ in 0..2000 {
            let r = random_residual(&mut rng);
            assert_eq!(hadamard4x4(&r), hadamard4x4_oracle(&r));
        }
    }

    #[test]
    fn hadamard_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5041_5253);
        for _ in 0..2000 {
            let r = random_residual(&mut rng);
            let coeffs = hadamard4x4(&r);
            let lhs: i64 = coeffs.iter().map(|&c| c as i64 * c as i64).sum();
            let rhs: i64 = r.iter().map(|&v| v as i64 * v as i64).sum();
            assert_eq!(lhs, 16 * rhs);
        }
    }

    #[test]
    fn satd4x4_examples() {
        assert_eq!(satd4x4(&[0; 16]), 0);
        assert_eq!(satd4x4(&[1; 16]), 8);
    }

    #[test]
    fn satd4x4_matches_oracle_and_sign_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5341_5444);
        for _ in 0..2000 {
            let r = random_residual(&mut rng);
            let neg: Residual4x4 = std::array::from_fn(|i| -r[i]);
            assert_eq!(satd4x4(&r), satd4x4_oracle(&r));
            assert_eq!(satd4x4(&r), satd4x4(&neg));
        }
    }

    #[test]
    fn satd8x8_zero_for_identical_blocks() {
        let plane = Plane::from_fn(8, 8, |x, y| (x * 16 + y) as u8);
        let v = plane.view(0, 0, 8, 8).unwrap();
        assert_eq!(satd8x8(&v, &v), 0);
    }

    #[test]
    fn satd8x8_constant_one_residual() {
        let ones = Plane::filled(8, 8, 1);
        let zeros = Plane::filled(8, 8, 0);
        let o = ones.view(0, 0, 8, 8).unwrap();
        let p = zeros.view(0, 0, 8, 8).unwrap();
        assert_eq!(satd8x8(&o, &p), 32);
    }

    #[test]
    fn satd8x8_quadrant_sum_and_argument_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x3878_3800);
        for _ in 0..200 {
            let a = Plane::from_fn(8, 8, |_, _| rng.random());
            let b = Plane::from_fn(8, 8, |_, _| rng.random());
            let av = a.view(0, 0, 8, 8).unwrap();
            let bv = b.view(0, 0, 8, 8).unwrap();

            let mut by_quadrant = 0u64;
            for qy in 0..2 {
                for qx in 0..2 {
                    let mut r = [0i32; 16];
                    for y in 0..4 {
                        for x in 0..4 {
                            r[y * 4 + x] = a.sample(qx * 4 + x, qy * 4 + y) as i32
                                - b.sample(qx * 4 + x, qy * 4 + y) as i32;
                        }
                    }
                    by_quadrant += satd4x4_oracle(&r);
                }
            }
            assert_eq!(satd8x8(&av, &bv), by_quadrant);
            assert_eq!(satd8x8(&av, &bv), satd8x8(&bv, &av));
        }
    }

    #[test]
    fn satd8x8_single_nonzero_quadrant() {
        // Residual nonzero only in the top-right quadrant.
        let orig = Plane::from_fn(8, 8, |x, y| if x >= 4 && y < 4 { 9 } else { 0 });
        let pred = Plane::filled(8, 8, 0);
        let mut r = [0i32; 16];
        for y in 0..4 {
            for x in 0..4 {
                r[y * 4 + x] = orig.sample(4 + x, y) as i32;
            }
        }
        assert_eq!(
            satd8x8(
                &orig.view(0, 0, 8, 8).unwrap(),
                &pred.view(0, 0, 8, 8).unwrap()
            ),
            satd4x4(&r)
        );
    }

    #[test]
    fn sad_examples() {
        let a = Plane::filled(8, 8, 7);
        let b = Plane::filled(8, 8, 5);
        let av = a.view(0, 0, 8, 8).unwrap();
        let bv = b.view(0, 0, 8, 8).unwrap();
        assert_eq!(sad(&av, &av).unwrap(), 0);
        assert_eq!(sad(&av, &bv).unwrap(), 128);
    }

    #[test]
    fn sad_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5341_4400);
        let a = Plane::from_fn(16, 8, |_, _| rng.random());
        let b = Plane::from_fn(16, 8, |_, _| rng.random());
        let mut expect = 0u64;
        for y in 0..8 {
            for x in 0..16 {
                expect += (a.sample(x, y) as i64 - b.sample(x, y) as i64).unsigned_abs();
            }
        }
        assert_eq!(
            sad(&a.view(0, 0, 16, 8).unwrap(), &b.view(0, 0, 16, 8).unwrap()).unwrap(),
            expect
        );
    }

    #[test]
    fn sad_rejects_mismatched_dimensions() {
        let a = Plane::filled(8, 8, 0);
        let b = Plane::filled(16, 8, 0);
        assert!(sad(&a.view(0, 0, 8, 8).unwrap(), &b.view(0, 0, 16, 8).unwrap()).is_err());
    }
}
