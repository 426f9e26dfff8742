//! Ground-truth baselines for evaluating the interpolation-free path:
//! bilinear fractional interpolation, exhaustive quarter-pel search, the
//! classic two-step search, and a generic floating-point least-squares
//! solver. The main estimation path never calls into this module.

use crate::distortion::satd_block;
use crate::error::{Error, Result};
use crate::ime::candidate_key;
use crate::pixel::{BlockView, Plane};
use crate::rate::{rd_cost, LambdaFixed, MotionVector, RdCost};
use crate::surface::{CostGrid3x3, QuarterPelOffset};

/// Bilinear quarter-pel interpolation of a `size` block at `origin`, with
/// `frac` components in `[0, 3]`:
///
/// ```text
/// out = ((4-fx)(4-fy)*p00 + fx(4-fy)*p10 + (4-fx)fy*p01 + fx*fy*p11 + 8) >> 4
/// ```
pub fn interp_block(
    reference: &Plane,
    origin: (i64, i64),
    size: (usize, usize),
    frac: (i32, i32),
) -> Result<Plane> {
    let (w, h) = size;
    let (fx, fy) = frac;
    assert!((0..=3).contains(&fx) && (0..=3).contains(&fy));
    let extra_x = (fx > 0) as usize;
    let extra_y = (fy > 0) as usize;
    // One fetch covering every tap.
    let window = reference.view_signed(origin.0, origin.1, w + extra_x, h + extra_y)?;
    if fx == 0 && fy == 0 {
        return Plane::new(w, h, (0..h).flat_map(|y| window.row(y).to_vec()).collect());
    }
    let wx0 = (4 - fx) as u32;
    let wx1 = fx as u32;
    let wy0 = (4 - fy) as u32;
    let wy1 = fy as u32;
    let mut samples = Vec::with_capacity(w * h);
    for y in 0..h {
        let row0 = window.row(y);
        let row1 = window.row(y + extra_y);
        for x in 0..w {
            let p00 = row0[x] as u32;
            let p10 = row0[x + extra_x] as u32;
            let p01 = row1[x] as u32;
            let p11 = row1[x + extra_x] as u32;
            let v =
                (wx0 * wy0 * p00 + wx1 * wy0 * p10 + wx0 * wy1 * p01 + wx1 * wy1 * p11 + 8) >> 4;
            samples.push(v as u8);
        }
    }
    Plane::new(w, h, samples)
}

/// True R-D cost of `mv` for a block: interpolated SATD plus the MVD rate.
pub fn cost_at(
    orig: &BlockView,
    reference: &Plane,
    mv: MotionVector,
    lambda: LambdaFixed,
    mvp: MotionVector,
) -> Result<RdCost> {
    let (bx, by) = orig.origin();
    let pel = (mv.x.div_euclid(4) as i64, mv.y.div_euclid(4) as i64);
    let frac = (mv.x.rem_euclid(4), mv.y.rem_euclid(4));
    let pred = interp_block(
        reference,
        (bx as i64 + pel.0, by as i64 + pel.1),
        (orig.width(), orig.height()),
        frac,
    )?;
    let d = satd_block(orig, &pred.view(0, 0, pred.width(), pred.height())?)?;
    rd_cost(d, mv - mvp, lambda)
}

fn search_candidates(
    orig: &BlockView,
    reference: &Plane,
    candidates: impl Iterator<Item = MotionVector>,
    lambda: LambdaFixed,
    mvp: MotionVector,
    best: &mut Option<(MotionVector, RdCost)>,
) -> Result<()> {
    for mv in candidates {
        let j = cost_at(orig, reference, mv, lambda, mvp)?;
        let better = match *best {
            None => true,
            Some((bmv, bj)) => candidate_key(j, mv) < candidate_key(bj, bmv),
        };
        if better {
            *best = Some((mv, j));
        }
    }
    Ok(())
}

/// Minimizes the true R-D cost over all 49 quarter-pel points in
/// `imv + [-3,3]^2`; the reference optimum for hit-rate metrics.
pub fn exhaustive_quarter_search(
    orig: &BlockView,
    reference: &Plane,
    imv: MotionVector,
    lambda: LambdaFixed,
    mvp: MotionVector,
) -> Result<(MotionVector, RdCost)> {
    debug_assert!(imv.is_integer_pel());
    let mut best = None;
    search_candidates(
        orig,
        reference,
        (-3..=3).flat_map(|qy| (-3..=3).map(move |qx| imv + MotionVector::new(qx, qy))),
        lambda,
        mvp,
        &mut best,
    )?;
    Ok(best.unwrap())
}

/// Half-pel ring around the integer MV, then quarter-pel ring around the
/// half-pel winner; returns the best point seen overall.
pub fn two_step_search(
    orig: &BlockView,
    reference: &Plane,
    imv: MotionVector,
    lambda: LambdaFixed,
    mvp: MotionVector,
) -> Result<(MotionVector, RdCost)> {
    debug_assert!(imv.is_integer_pel());
    let mut best = None;
    search_candidates(
        orig,
        reference,
        [-2, 0, 2]
            .iter()
            .flat_map(|&hy| [-2, 0, 2].map(move |hx| imv + MotionVector::new(hx, hy))),
        lambda,
        mvp,
        &mut best,
    )?;
    let center = best.unwrap().0;
    search_candidates(
        orig,
        reference,
        (-1..=1)
            .flat_map(|qy| (-1..=1).map(move |qx| center + MotionVector::new(qx, qy)))
            .filter(move |&mv| mv != center),
        lambda,
        mvp,
        &mut best,
    )?;
    Ok(best.unwrap())
}

/// Least-squares solve of an overdetermined `rows x 6` system via normal
/// equations, in floating point.
pub fn lsq_solve(design: &[[f64; 6]], costs: &[f64]) -> Result<[f64; 6]> {
    assert_eq!(design.len(), costs.len());
    let mut ata = [[0f64; 6]; 6];
    let mut atb = [0f64; 6];
    for (row, &c) in design.iter().zip(costs.iter()) {
        for i in 0..6 {
            atb[i] += row[i] * c;
            for j in 0..6 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve_6x6(ata, atb)
}

fn solve_6x6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> Result<[f64; 6]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0f64, |acc, v| acc.max(v.abs()));
    for col in 0..6 {
        let mut pivot = col;
        for row in col + 1..6 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() <= 1e-12 * scale.max(1.0) {
            return Err(Error::RankDeficient);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (i, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (dst, src) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[col + 1 + i] -= f * b[col];
        }
    }
    let mut x = [0f64; 6];
    for col in (0..6).rev() {
        let mut v = b[col];
        for k in col + 1..6 {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Ok(x)
}

/// The fixed 3x3 design matrix, rows `[x^2, y^2, x*y, x, y, 1]` in grid
/// order.
pub fn grid_design() -> [[f64; 6]; 9] {
    let mut rows = [[0f64; 6]; 9];
    for (i, row) in rows.iter_mut().enumerate() {
        let x = (i % 3) as f64 - 1.0;
        let y = (i / 3) as f64 - 1.0;
        *row = [x * x, y * y, x * y, x, y, 1.0];
    }
    rows
}

/// Floating-point surface fit `[P1..P6]` of a cost grid; the reference the
/// integer fit is checked against.
pub fn fit_surface_float(grid: &CostGrid3x3) -> Result<[f64; 6]> {
    let costs: Vec<f64> = grid.costs().iter().map(|&c| c as f64).collect();
    lsq_solve(&grid_design(), &costs)
}

fn round_quarters_ties_toward_zero(v: f64) -> i32 {
    let a = v.abs();
    let k = if a.fract() == 0.5 {
        a.trunc()
    } else {
        a.round()
    };
    let k = (k as i32).min(3);
    if v < 0.0 {
        -k
    } else {
        k
    }
}

/// Floating-point reference for the whole fractional refinement: float fit,
/// float extremum, nearest-quarter rounding with ties toward zero, and the
/// same strict-minimum fallback.
pub fn fractional_refine_float(grid: &CostGrid3x3, max_abs: i32) -> QuarterPelOffset {
    let p = fit_surface_float(grid).expect("fixed design is full rank");
    let (p1, p2, p3, p4, p5) = (p[0], p[1], p[2], p[3], p[4]);
    let den = p3 * p3 - 4.0 * p1 * p2;
    let strict_minimum = den < 0.0 && p1 > 0.0 && p2 > 0.0;
    if !strict_minimum {
        return QuarterPelOffset::ZERO;
    }
    let fx = (2.0 * p2 * p4 - p3 * p5) / den;
    let fy = (2.0 * p1 * p5 - p3 * p4) / den;
    QuarterPelOffset {
        qx: round_quarters_ties_toward_zero(4.0 * fx).clamp(-max_abs, max_abs),
        qy: round_quarters_ties_toward_zero(4.0 * fy).clamp(-max_abs, max_abs),
    }
}
