//! Raw luma frame storage and rectangular pixel windows.
//!
//! Frames are 8-bit luma planes in row-major order. The engine never pads a
//! plane; callers are responsible for keeping search windows inside it.

use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Raw file layouts understood by [`load_raw_frames`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFormat {
    /// One byte per luma sample, no chroma.
    Gray8,
    /// Planar 4:2:0; only the leading luma plane of each frame is kept.
    Yuv420p,
}

impl RawFormat {
    /// Bytes occupied by one frame in the file.
    pub fn frame_stride(self, width: usize, height: usize) -> usize {
        match self {
            RawFormat::Gray8 => width * height,
            RawFormat::Yuv420p => width * height * 3 / 2,
        }
    }
}

impl FromStr for RawFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray8" | "y8" => Ok(RawFormat::Gray8),
            "yuv420p" => Ok(RawFormat::Yuv420p),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// An 8-bit luma plane, immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::BadDimensions { width, height });
        }
        assert_eq!(
            samples.len(),
            width * height,
            "sample buffer does not match {width}x{height}"
        );
        Ok(Plane {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Plane {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    /// Builds a plane from a per-pixel generator, mostly for tests and
    /// synthetic content.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major sample storage; re-serializing a gray8 plane is exactly
    /// these bytes.
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    /// Bounds-checked rectangular window.
    pub fn view(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<BlockView<'_>> {
        if x0 + w > self.width || y0 + h > self.height || w == 0 || h == 0 {
            return Err(Error::WindowOutOfBounds {
                x0: x0 as i64,
                x1: (x0 + w) as i64,
                y0: y0 as i64,
                y1: (y0 + h) as i64,
                width: self.width,
                height: self.height,
            });
        }
        Ok(BlockView {
            plane: self,
            x0,
            y0,
            w,
            h,
        })
    }

    /// Window addressed with signed coordinates, for motion-compensated
    /// positions that may fall outside the plane.
    pub fn view_signed(&self, x0: i64, y0: i64, w: usize, h: usize) -> Result<BlockView<'_>> {
        if x0 < 0
            || y0 < 0
            || x0 + w as i64 > self.width as i64
            || y0 + h as i64 > self.height as i64
        {
            return Err(Error::WindowOutOfBounds {
                x0,
                x1: x0 + w as i64,
                y0,
                y1: y0 + h as i64,
                width: self.width,
                height: self.height,
            });
        }
        self.view(x0 as usize, y0 as usize, w, h)
    }
}

/// A rectangular window into a [`Plane`].
#[derive(Debug, Clone, Copy)]
pub struct BlockView<'a> {
    plane: &'a Plane,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
}

impl<'a> BlockView<'a> {
    pub fn origin(&self) -> (usize, usize) {
        (self.x0, self.y0)
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn plane(&self) -> &'a Plane {
        self.plane
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        debug_assert!(y < self.h);
        let base = (self.y0 + y) * self.plane.width + self.x0;
        &self.plane.samples[base..base + self.w]
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.w && y < self.h);
        self.plane.sample(self.x0 + x, self.y0 + y)
    }

    /// Non-overlapping 8x8 sub-windows in raster order, tiling the view
    /// exactly. Dimensions must be multiples of 8.
    pub fn subblocks_8x8(&self) -> Vec<BlockView<'a>> {
        assert!(
            self.w.is_multiple_of(8) && self.h.is_multiple_of(8),
            "8x8 decomposition needs dimensions divisible by 8, got {}x{}",
            self.w,
            self.h
        );
        let mut out = Vec::with_capacity((self.w / 8) * (self.h / 8));
        for by in (0..self.h).step_by(8) {
            for bx in (0..self.w).step_by(8) {
                out.push(BlockView {
                    plane: self.plane,
                    x0: self.x0 + bx,
                    y0: self.y0 + by,
                    w: 8,
                    h: 8,
                });
            }
        }
        out
    }
}

/// Loads `count` frames from a raw file, keeping only the luma plane.
///
/// Dimensions are always supplied by the caller; nothing is inferred from
/// the file.
pub fn load_raw_frames(
    path: &Path,
    width: usize,
    height: usize,
    format: RawFormat,
    count: usize,
) -> Result<Vec<Plane>> {
    if width == 0 || height == 0 {
        return Err(Error::BadDimensions { width, height });
    }
    if format == RawFormat::Yuv420p && (!width.is_multiple_of(2) || !height.is_multiple_of(2)) {
        return Err(Error::BadDimensions { width, height });
    }
    let stride = format.frame_stride(width, height);
    let luma_len = width * height;

    let mut file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file_len = file
        .metadata()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .len();
    let needed = stride as u64 * count as u64;
    if file_len < needed {
        return Err(Error::FileTooShort {
            path: path.to_path_buf(),
            needed,
            actual: file_len,
            frames: count,
        });
    }

    let mut planes = Vec::with_capacity(count);
    let mut frame = vec![0u8; stride];
    for _ in 0..count {
        file.read_exact(&mut frame).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        planes.push(Plane::new(width, height, frame[..luma_len].to_vec())?);
    }
    Ok(planes)
}
