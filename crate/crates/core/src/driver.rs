//! Frame-level drivers: sweep every eligible CTU of a frame pair.
//!
//! CTU passes are independent (each owns its accumulators and MV grid), so
//! the sweep is data-parallel. With the `parallel` feature the default entry
//! points fan out over rayon; the `_seq` variants always run single-threaded
//! and produce byte-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use serde::Serialize;

use crate::error::Result;
use crate::oracle;
use crate::pixel::Plane;
use crate::rate::MotionVector;
use crate::schedule::{run_ctu, CtuPass, CuSize, EstimateParams, CTU_SIZE};

/// Estimation output for one frame pair.
#[derive(Debug, Clone, Serialize)]
pub struct FrameEstimate {
    pub ctus: Vec<CtuPass>,
    /// CTUs whose search window (range + one pel of grid margin) would
    /// leave the reference plane; the engine never pads.
    pub skipped_ctus: Vec<[usize; 2]>,
}

/// Full CTUs whose windows fit, in raster order, plus the skipped ones.
pub fn plan_ctus(
    frame_w: usize,
    frame_h: usize,
    range: i32,
) -> (Vec<(usize, usize)>, Vec<[usize; 2]>) {
    let margin = range as usize + 1;
    let mut eligible = Vec::new();
    let mut skipped = Vec::new();
    let mut y = 0;
    while y + CTU_SIZE <= frame_h {
        let mut x = 0;
        while x + CTU_SIZE <= frame_w {
            if x >= margin
                && y >= margin
                && x + CTU_SIZE + margin <= frame_w
                && y + CTU_SIZE + margin <= frame_h
            {
                eligible.push((x, y));
            } else {
                skipped.push([x, y]);
            }
            x += CTU_SIZE;
        }
        y += CTU_SIZE;
    }
    (eligible, skipped)
}

fn check_same_dims(orig: &Plane, reference: &Plane) -> Result<()> {
    if orig.width() != reference.width() || orig.height() != reference.height() {
        return Err(crate::error::Error::DimensionMismatch {
            a_w: orig.width(),
            a_h: orig.height(),
            b_w: reference.width(),
            b_h: reference.height(),
        });
    }
    Ok(())
}

/// Sequential frame estimation.
pub fn estimate_frame_seq(
    orig: &Plane,
    reference: &Plane,
    sizes: &[CuSize],
    params: &EstimateParams,
) -> Result<FrameEstimate> {
    check_same_dims(orig, reference)?;
    let (eligible, skipped_ctus) = plan_ctus(orig.width(), orig.height(), params.search.range);
    let ctus = eligible
        .iter()
        .map(|&origin| run_ctu(orig, reference, origin, sizes, params, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameEstimate { ctus, skipped_ctus })
}

/// Frame estimation, parallel over CTUs when the `parallel` feature is on.
/// Output is byte-identical to [`estimate_frame_seq`].
pub fn estimate_frame(
    orig: &Plane,
    reference: &Plane,
    sizes: &[CuSize],
    params: &EstimateParams,
) -> Result<FrameEstimate> {
    #[cfg(feature = "parallel")]
    {
        check_same_dims(orig, reference)?;
        let (eligible, skipped_ctus) = plan_ctus(orig.width(), orig.height(), params.search.range);
        let ctus = eligible
            .par_iter()
            .map(|&origin| run_ctu(orig, reference, origin, sizes, params, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameEstimate { ctus, skipped_ctus })
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_frame_seq(orig, reference, sizes, params)
    }
}

/// Hit-rate and cost metrics for one method against the exhaustive optimum.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MethodMetrics {
    /// Fraction of CUs where the method's MV equals the exhaustive winner.
    pub hit_rate: f64,
    /// Fraction within one quarter-pel (Chebyshev) of the winner.
    pub near_hit_rate: f64,
    /// Mean of `(J_method - J_exhaustive) / max(J_exhaustive, 1)`.
    pub mean_rel_cost_excess: f64,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct EvalMetrics {
    pub cu_count: u64,
    pub surface: MethodMetrics,
    pub two_step: MethodMetrics,
}

#[derive(Default, Clone, Copy)]
struct MethodTally {
    hits: u64,
    near_hits: u64,
    excess_sum: f64,
}

impl MethodTally {
    fn add(&mut self, mv: MotionVector, j: u64, best_mv: MotionVector, best_j: u64) {
        if mv == best_mv {
            self.hits += 1;
        }
        let d = mv - best_mv;
        if d.x.abs() <= 1 && d.y.abs() <= 1 {
            self.near_hits += 1;
        }
        self.excess_sum += (j.saturating_sub(best_j)) as f64 / (best_j.max(1)) as f64;
    }

    fn merge(&mut self, other: &MethodTally) {
        self.hits += other.hits;
        self.near_hits += other.near_hits;
        self.excess_sum += other.excess_sum;
    }

    fn into_metrics(self, n: u64) -> MethodMetrics {
        if n == 0 {
            return MethodMetrics {
                hit_rate: 0.0,
                near_hit_rate: 0.0,
                mean_rel_cost_excess: 0.0,
            };
        }
        MethodMetrics {
            hit_rate: self.hits as f64 / n as f64,
            near_hit_rate: self.near_hits as f64 / n as f64,
            mean_rel_cost_excess: self.excess_sum / n as f64,
        }
    }
}

#[derive(Default, Clone, Copy)]
struct CtuTally {
    cus: u64,
    surface: MethodTally,
    two_step: MethodTally,
}

fn evaluate_ctu(
    orig: &Plane,
    reference: &Plane,
    params: &EstimateParams,
    pass: &CtuPass,
) -> Result<CtuTally> {
    let mut tally = CtuTally::default();
    for cu in &pass.cus {
        let block = orig.view(pass.ctu_x + cu.x0, pass.ctu_y + cu.y0, cu.w, cu.h)?;
        let (best_mv, best_j) =
            oracle::exhaustive_quarter_search(&block, reference, cu.imv, params.lambda, cu.mvp)?;
        let (ts_mv, ts_j) =
            oracle::two_step_search(&block, reference, cu.imv, params.lambda, cu.mvp)?;
        let surf_j = oracle::cost_at(&block, reference, cu.mv, params.lambda, cu.mvp)?;
        tally.cus += 1;
        tally.surface.add(cu.mv, surf_j, best_mv, best_j);
        tally.two_step.add(ts_mv, ts_j, best_mv, best_j);
    }
    Ok(tally)
}

fn fold_tallies(tallies: Vec<CtuTally>) -> EvalMetrics {
    let mut total = CtuTally::default();
    for t in &tallies {
        total.cus += t.cus;
        total.surface.merge(&t.surface);
        total.two_step.merge(&t.two_step);
    }
    EvalMetrics {
        cu_count: total.cus,
        surface: total.surface.into_metrics(total.cus),
        two_step: total.two_step.into_metrics(total.cus),
    }
}

/// Sequential evaluation of the surface path and the two-step baseline
/// against the exhaustive quarter-pel optimum.
pub fn evaluate_frame_seq(
    orig: &Plane,
    reference: &Plane,
    sizes: &[CuSize],
    params: &EstimateParams,
) -> Result<EvalMetrics> {
    let estimate = estimate_frame_seq(orig, reference, sizes, params)?;
    let tallies = estimate
        .ctus
        .iter()
        .map(|pass| evaluate_ctu(orig, reference, params, pass))
        .collect::<Result<Vec<_>>>()?;
    Ok(fold_tallies(tallies))
}

/// [`evaluate_frame_seq`], parallel over CTUs when enabled. The fold order
/// is fixed, so results are byte-identical to the sequential path.
pub fn evaluate_frame(
    orig: &Plane,
    reference: &Plane,
    sizes: &[CuSize],
    params: &EstimateParams,
) -> Result<EvalMetrics> {
    #[cfg(feature = "parallel")]
    {
        let estimate = estimate_frame(orig, reference, sizes, params)?;
        let tallies = estimate
            .ctus
            .par_iter()
            .map(|pass| evaluate_ctu(orig, reference, params, pass))
            .collect::<Result<Vec<_>>>()?;
        Ok(fold_tallies(tallies))
    }
    #[cfg(not(feature = "parallel"))]
    {
        evaluate_frame_seq(orig, reference, sizes, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ime::{Metric, SearchConfig};
    use crate::rate::LambdaFixed;
    use crate::schedule::{cu_size_set, SizeMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(w, h, |_, _| rng.random())
    }

    fn small_params() -> EstimateParams {
        EstimateParams {
            search: SearchConfig::new(4, Metric::Sad),
            lambda: LambdaFixed::from_qp(32),
            max_quarter: 3,
        }
    }

    #[test]
    fn plan_skips_ctus_without_margin() {
        let (eligible, skipped) = plan_ctus(3 * 128 + 16, 2 * 128 + 16, 8);
        // Column 0 and row 0 lack the left/top margin; the last full column
        // and row lack the right/bottom margin within 16 spare pixels.
        assert!(eligible.contains(&(128, 128)));
        assert!(skipped.contains(&[0, 0]));
        for &(x, y) in &eligible {
            assert!(x >= 9 && y >= 9);
        }
        assert_eq!(eligible.len() + skipped.len(), 3 * 2);
    }

    #[test]
    fn parallel_and_sequential_estimates_are_byte_identical() {
        // 3x2 CTU grid; the (128,128) and (256,128) CTUs have full margins.
        let orig = noise(416, 288, 50);
        let reference = noise(416, 288, 51);
        let sizes = cu_size_set(SizeMode::Quadtree);
        let params = small_params();
        let a = estimate_frame(&orig, &reference, &sizes, &params).unwrap();
        let b = estimate_frame_seq(&orig, &reference, &sizes, &params).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn evaluation_on_identical_frames_is_all_hits() {
        let p = noise(288, 288, 52);
        let sizes = cu_size_set(SizeMode::Quadtree);
        let params = EstimateParams {
            lambda: LambdaFixed::ZERO,
            ..small_params()
        };
        let m = evaluate_frame(&p, &p, &sizes, &params).unwrap();
        assert!(m.cu_count > 0);
        assert_eq!(m.surface.hit_rate, 1.0);
        assert_eq!(m.surface.mean_rel_cost_excess, 0.0);
        assert_eq!(m.two_step.hit_rate, 1.0);
        assert!(m.two_step.mean_rel_cost_excess == 0.0);
    }

    #[test]
    fn two_step_excess_is_never_negative() {
        let orig = noise(288, 288, 53);
        let reference = noise(288, 288, 54);
        let sizes = cu_size_set(SizeMode::Quadtree);
        let m = evaluate_frame(&orig, &reference, &sizes, &small_params()).unwrap();
        assert!(m.two_step.mean_rel_cost_excess >= 0.0);
        assert!(m.surface.mean_rel_cost_excess >= 0.0);
        assert!(m.two_step.near_hit_rate >= m.two_step.hit_rate);
    }
}
