//! Interlaced per-CTU processing schedule, cycle accounting and the full
//! FME pass.
//!
//! All supported CU sizes are swept at every 8x8 position in z-scan order,
//! so a CU's distortion accumulates one 8x8 block at a time and its FMV is
//! produced when its bottom-right block retires. Z-scan guarantees the left
//! and above neighbors of any position were visited earlier, which is what
//! lets CMVP read completed 8x8 MVs mid-pass.

use serde::Serialize;

use crate::cmvp::{derive_cmvp, CuRect, ExternalContext, MvGrid, GRID_DIM};
use crate::distortion::satd8x8;
use crate::error::Result;
use crate::ime::{full_search, SearchConfig};
use crate::pixel::Plane;
use crate::rate::{rd_cost, LambdaFixed, MotionVector};
use crate::surface::{fractional_refine_clamped, CostGrid3x3, QuarterPelOffset};

/// CTU edge length in pixels.
pub const CTU_SIZE: usize = 128;

/// Cycles the nine parallel SATD kernels spend on one 8x8 block
/// (8x1 pixels per cycle).
pub const SATD_CYCLES_PER_BLOCK: u64 = 8;

/// Cycles from task start to its FMV leaving the pipeline.
pub const FMV_OUTPUT_LATENCY: u64 = 12;

/// Grid offsets of the nine cost-grid candidates, in [`CostGrid3x3`] index
/// order.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// A supported CU size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CuSize {
    pub w: usize,
    pub h: usize,
}

impl CuSize {
    pub const fn new(w: usize, h: usize) -> Self {
        CuSize { w, h }
    }
}

/// Which CU-size family the engine sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SizeMode {
    /// All 13 quadtree/binary-tree sizes with aspect ratio <= 2.
    Full,
    /// The five square quadtree sizes.
    Quadtree,
}

impl std::str::FromStr for SizeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(SizeMode::Full),
            "quadtree" => Ok(SizeMode::Quadtree),
            other => Err(format!("unknown size mode `{other}`")),
        }
    }
}

/// The ordered size set, smallest area first (and the wider rectangle first
/// within an area), which is the per-position interleave order.
pub fn cu_size_set(mode: SizeMode) -> Vec<CuSize> {
    match mode {
        SizeMode::Full => vec![
            CuSize::new(8, 8),
            CuSize::new(16, 8),
            CuSize::new(8, 16),
            CuSize::new(16, 16),
            CuSize::new(32, 16),
            CuSize::new(16, 32),
            CuSize::new(32, 32),
            CuSize::new(64, 32),
            CuSize::new(32, 64),
            CuSize::new(64, 64),
            CuSize::new(128, 64),
            CuSize::new(64, 128),
            CuSize::new(128, 128),
        ],
        SizeMode::Quadtree => vec![
            CuSize::new(8, 8),
            CuSize::new(16, 16),
            CuSize::new(32, 32),
            CuSize::new(64, 64),
            CuSize::new(128, 128),
        ],
    }
}

/// Z-scan (Morton) index of an 8x8 grid position, 4 bits per axis.
#[inline]
pub fn zscan_index(x: usize, y: usize) -> usize {
    debug_assert!(x < GRID_DIM && y < GRID_DIM);
    let mut idx = 0;
    for bit in 0..4 {
        idx |= ((x >> bit) & 1) << (2 * bit);
        idx |= ((y >> bit) & 1) << (2 * bit + 1);
    }
    idx
}

/// Inverse of [`zscan_index`].
#[inline]
pub fn zscan_position(idx: usize) -> (usize, usize) {
    debug_assert!(idx < GRID_DIM * GRID_DIM);
    let mut x = 0;
    let mut y = 0;
    for bit in 0..4 {
        x |= ((idx >> (2 * bit)) & 1) << bit;
        y |= ((idx >> (2 * bit + 1)) & 1) << bit;
    }
    (x, y)
}

/// One 8x8 unit of work: a grid position processed for one CU size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    /// 8x8 grid position inside the CTU.
    pub pos: (usize, usize),
    /// Index into the size set.
    pub size_index: usize,
    /// Whether this position is the bottom-right 8x8 block of its CU.
    pub is_last_block: bool,
}

/// The interlaced order: positions in z-scan, one task per size at each
/// position.
pub fn task_order(sizes: &[CuSize]) -> Vec<Task> {
    let mut tasks = Vec::with_capacity(GRID_DIM * GRID_DIM * sizes.len());
    for idx in 0..GRID_DIM * GRID_DIM {
        let (x, y) = zscan_position(idx);
        for (size_index, size) in sizes.iter().enumerate() {
            let wb = size.w / 8;
            let hb = size.h / 8;
            tasks.push(Task {
                pos: (x, y),
                size_index,
                is_last_block: x % wb == wb - 1 && y % hb == hb - 1,
            });
        }
    }
    tasks
}

/// Closed-form cycles per CTU: the pipeline fill excess plus 8 cycles for
/// each of the `256 * |sizes|` tasks.
pub fn cycle_count(sizes: &[CuSize]) -> u64 {
    (FMV_OUTPUT_LATENCY - SATD_CYCLES_PER_BLOCK)
        + SATD_CYCLES_PER_BLOCK * sizes.len() as u64 * (GRID_DIM * GRID_DIM) as u64
}

/// Cycle-stepped pipeline model: the kernel array holds one task for
/// [`SATD_CYCLES_PER_BLOCK`] cycles, results leave [`FMV_OUTPUT_LATENCY`]
/// cycles after task start, back to back thereafter. Cross-checks the
/// closed form.
pub fn simulate_pipeline(num_tasks: u64) -> u64 {
    if num_tasks == 0 {
        return 0;
    }
    let mut pending = num_tasks;
    let mut kernel_busy = 0u64;
    let mut in_flight: std::collections::VecDeque<u64> = std::collections::VecDeque::new();
    let mut retired = 0u64;
    let mut cycle = 0u64;
    loop {
        if kernel_busy == 0 && pending > 0 {
            pending -= 1;
            kernel_busy = SATD_CYCLES_PER_BLOCK;
            in_flight.push_back(FMV_OUTPUT_LATENCY);
        }
        cycle += 1;
        kernel_busy = kernel_busy.saturating_sub(1);
        for t in in_flight.iter_mut() {
            *t -= 1;
        }
        while in_flight.front() == Some(&0) {
            in_flight.pop_front();
            retired += 1;
        }
        if retired == num_tasks {
            return cycle;
        }
    }
}

/// [`simulate_pipeline`] over a CTU's task count for a size set.
pub fn simulate_ctu_cycles(sizes: &[CuSize]) -> u64 {
    simulate_pipeline(sizes.len() as u64 * (GRID_DIM * GRID_DIM) as u64)
}

/// Exact unsigned rational, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0);
        let g = gcd(num, den);
        Ratio {
            num: num / g.max(1),
            den: den / g.max(1),
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// How fractional frame dimensions are turned into a CTU count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CtuCountMode {
    /// `width * height / 16384`, possibly fractional.
    ExactArea,
    /// `ceil(width/128) * ceil(height/128)`.
    CeilGrid,
}

impl std::str::FromStr for CtuCountMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact-area" | "exact_area" => Ok(CtuCountMode::ExactArea),
            "ceil-grid" | "ceil_grid" => Ok(CtuCountMode::CeilGrid),
            other => Err(format!("unknown ctu count mode `{other}`")),
        }
    }
}

/// CTUs per frame under the chosen counting mode.
pub fn ctus_per_frame(frame_w: usize, frame_h: usize, mode: CtuCountMode) -> Ratio {
    assert!(frame_w > 0 && frame_h > 0);
    match mode {
        CtuCountMode::ExactArea => Ratio::new(
            frame_w as u64 * frame_h as u64,
            (CTU_SIZE * CTU_SIZE) as u64,
        ),
        CtuCountMode::CeilGrid => Ratio::new(
            (frame_w.div_ceil(CTU_SIZE) * frame_h.div_ceil(CTU_SIZE)) as u64,
            1,
        ),
    }
}

/// Clock frequency in Hz needed to sustain `fps`:
/// `cycles_per_ctu * ctus_per_frame * fps`.
pub fn required_frequency(
    sizes: &[CuSize],
    frame_w: usize,
    frame_h: usize,
    fps: u32,
    mode: CtuCountMode,
) -> Ratio {
    let ctus = ctus_per_frame(frame_w, frame_h, mode);
    let num = cycle_count(sizes) as u128 * ctus.num as u128 * fps as u128;
    let den = ctus.den as u128;
    let g = gcd128(num, den);
    Ratio::new(
        u64::try_from(num / g).expect("frequency numerator fits u64"),
        u64::try_from(den / g).expect("frequency denominator fits u64"),
    )
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Knobs for one estimation pass.
#[derive(Debug, Clone, Copy)]
pub struct EstimateParams {
    pub search: SearchConfig,
    pub lambda: LambdaFixed,
    /// Quarter-offset clamp, 2 or 3.
    pub max_quarter: i32,
}

impl Default for EstimateParams {
    fn default() -> Self {
        EstimateParams {
            search: SearchConfig::default(),
            lambda: LambdaFixed::from_qp(32),
            max_quarter: 3,
        }
    }
}

/// Result for one CU: where it sits, its integer MV, the refined offset and
/// the nine grid costs that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CuRecord {
    /// CU origin in pixels, CTU-relative.
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
    pub imv: MotionVector,
    pub mvp: MotionVector,
    pub fmv_offset: QuarterPelOffset,
    pub mv: MotionVector,
    pub costs: [u64; 9],
}

/// Everything produced by one CTU pass. CUs appear in completion order,
/// which is deterministic for a given size set.
#[derive(Debug, Clone, Serialize)]
pub struct CtuPass {
    /// CTU origin in pixels.
    pub ctu_x: usize,
    pub ctu_y: usize,
    pub cus: Vec<CuRecord>,
    /// Edge MVs for optional context chaining into neighboring CTUs.
    #[serde(skip)]
    pub right_column: [Option<MotionVector>; GRID_DIM],
    #[serde(skip)]
    pub bottom_row: [Option<MotionVector>; GRID_DIM],
}

struct CuState {
    imv: MotionVector,
    acc: [u64; 9],
}

/// Runs the full interlaced pass over one CTU: per-CU integer search, 8x8
/// SATD accumulation for the nine grid candidates, CMVP-based rate, surface
/// refinement, and the MV-grid writes that feed later CMVP reads.
pub fn run_ctu(
    orig: &Plane,
    reference: &Plane,
    ctu_origin: (usize, usize),
    sizes: &[CuSize],
    params: &EstimateParams,
    context: Option<ExternalContext>,
) -> Result<CtuPass> {
    let mut grid = context.map(MvGrid::with_context).unwrap_or_default();
    let mut states: Vec<Vec<Option<CuState>>> = sizes
        .iter()
        .map(|s| {
            let n = (GRID_DIM / (s.w / 8)) * (GRID_DIM / (s.h / 8));
            let mut v = Vec::with_capacity(n);
            v.resize_with(n, || None);
            v
        })
        .collect();
    let mut records = Vec::new();

    for task in task_order(sizes) {
        let size = sizes[task.size_index];
        let (wb, hb) = (size.w / 8, size.h / 8);
        let (px, py) = task.pos;
        let (cx, cy) = (px / wb, py / hb);
        let cu_index = cy * (GRID_DIM / wb) + cx;

        if states[task.size_index][cu_index].is_none() {
            let cu_view = orig.view(
                ctu_origin.0 + cx * size.w,
                ctu_origin.1 + cy * size.h,
                size.w,
                size.h,
            )?;
            let (imv, _) = full_search(&cu_view, reference, MotionVector::ZERO, &params.search)?;
            states[task.size_index][cu_index] = Some(CuState { imv, acc: [0; 9] });
        }

        let state = states[task.size_index][cu_index].as_mut().unwrap();
        let (ipx, ipy) = state.imv.pel();
        let block = orig.view(ctu_origin.0 + px * 8, ctu_origin.1 + py * 8, 8, 8)?;
        for (k, (ox, oy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let pred = reference.view_signed(
                (ctu_origin.0 + px * 8) as i64 + (ipx + ox) as i64,
                (ctu_origin.1 + py * 8) as i64 + (ipy + oy) as i64,
                8,
                8,
            )?;
            state.acc[k] += satd8x8(&block, &pred);
        }

        if task.is_last_block {
            let state = states[task.size_index][cu_index].take().unwrap();
            let cu = CuRect::new(cx * size.w, cy * size.h, size.w, size.h);
            let mvp = derive_cmvp(&grid, &cu);
            let mut costs = [0u64; 9];
            for (k, (ox, oy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                let candidate = state.imv + MotionVector::from_pel(*ox, *oy);
                costs[k] = rd_cost(state.acc[k], candidate - mvp, params.lambda)?;
            }
            // Bit-width reduction before the parameter generator; provably
            // output-neutral by shift invariance.
            let grid3 = CostGrid3x3::new(costs).shifted_to_zero();
            let offset = fractional_refine_clamped(&grid3, params.max_quarter);
            let mv = state.imv + offset.as_mv();
            if size.w == 8 && size.h == 8 {
                grid.record_mv(px, py, mv)?;
            }
            records.push(CuRecord {
                x0: cu.x0,
                y0: cu.y0,
                w: size.w,
                h: size.h,
                imv: state.imv,
                mvp,
                fmv_offset: offset,
                mv,
                costs,
            });
        }
    }

    Ok(CtuPass {
        ctu_x: ctu_origin.0,
        ctu_y: ctu_origin.1,
        cus: records,
        right_column: grid.right_column(),
        bottom_row: grid.bottom_row(),
    })
}
