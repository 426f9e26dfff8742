//! Machine-readable report assembly: canonical JSON and the lossy CSV
//! projection. Field order is fixed by the struct layout, record order by
//! the deterministic pass order, so repeated runs serialize byte-identically.

use serde::Serialize;

use crate::driver::{EvalMetrics, FrameEstimate};
use crate::schedule::{
    ctus_per_frame, cycle_count, required_frequency, CtuCountMode, CuSize, Ratio, SizeMode,
};

/// Cycle and throughput arithmetic for one configuration.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct ScheduleSummary {
    pub cycles_per_ctu: u64,
    pub ctus_per_frame: Ratio,
    pub required_hz: Ratio,
}

pub fn schedule_summary(
    sizes: &[CuSize],
    frame_w: usize,
    frame_h: usize,
    fps: u32,
    mode: CtuCountMode,
) -> ScheduleSummary {
    ScheduleSummary {
        cycles_per_ctu: cycle_count(sizes),
        ctus_per_frame: ctus_per_frame(frame_w, frame_h, mode),
        required_hz: required_frequency(sizes, frame_w, frame_h, fps, mode),
    }
}

/// Configuration echo carried in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportConfig {
    pub width: usize,
    pub height: usize,
    pub orig_frame: usize,
    pub ref_frame: usize,
    pub size_mode: SizeMode,
    pub search_range: i32,
    pub lambda_q16: u64,
    pub max_quarter: i32,
    pub fps: u32,
    pub ctu_count_mode: CtuCountMode,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub config: ReportConfig,
    pub schedule: ScheduleSummary,
    #[serde(flatten)]
    pub frame: FrameEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateReport {
    pub config: ReportConfig,
    #[serde(flatten)]
    pub metrics: EvalMetrics,
}

/// Rounds metric floats to nine decimals so serialized output has a fixed
/// precision everywhere.
pub fn fixed9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl EvaluateReport {
    pub fn normalized(mut self) -> Self {
        for m in [&mut self.metrics.surface, &mut self.metrics.two_step] {
            m.hit_rate = fixed9(m.hit_rate);
            m.near_hit_rate = fixed9(m.near_hit_rate);
            m.mean_rel_cost_excess = fixed9(m.mean_rel_cost_excess);
        }
        self
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}

/// One row per CU: the lossy projection of an estimate report.
pub fn estimate_csv(report: &EstimateReport) -> String {
    let mut out = String::from(
        "frame,ctu_x,ctu_y,x0,y0,w,h,imv_x,imv_y,mvp_x,mvp_y,qx,qy,mv_x,mv_y,\
         c0,c1,c2,c3,c4,c5,c6,c7,c8\n",
    );
    for ctu in &report.frame.ctus {
        for cu in &ctu.cus {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                report.config.orig_frame,
                ctu.ctu_x,
                ctu.ctu_y,
                cu.x0,
                cu.y0,
                cu.w,
                cu.h,
                cu.imv.x,
                cu.imv.y,
                cu.mvp.x,
                cu.mvp.y,
                cu.fmv_offset.qx,
                cu.fmv_offset.qy,
                cu.mv.x,
                cu.mv.y,
            ));
            for c in &cu.costs {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    out
}
