use std::path::PathBuf;

/// Errors surfaced by the estimation engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file too short: {path}: need {needed} bytes for {frames} frame(s), have {actual}")]
    FileTooShort {
        path: PathBuf,
        needed: u64,
        actual: u64,
        frames: usize,
    },

    #[error("invalid frame dimensions {width}x{height}")]
    BadDimensions { width: usize, height: usize },

    #[error("unknown raw format `{0}` (expected `gray8` or `yuv420p`)")]
    UnknownFormat(String),

    #[error("block dimensions differ: {a_w}x{a_h} vs {b_w}x{b_h}")]
    DimensionMismatch {
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },

    #[error("window x[{x0}..{x1}) y[{y0}..{y1}) outside plane {width}x{height}")]
    WindowOutOfBounds {
        x0: i64,
        x1: i64,
        y0: i64,
        y1: i64,
        width: usize,
        height: usize,
    },

    #[error("mv grid slot ({x},{y}) written twice in one pass")]
    SlotRewrite { x: usize, y: usize },

    #[error("r-d cost overflowed a 64-bit accumulator (lambda or distortion out of range)")]
    CostOverflow,

    #[error("least-squares design matrix is rank deficient")]
    RankDeficient,
}

pub type Result<T> = std::result::Result<T, Error>;
