//! RGB frames and per-camera frame sequences.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame dimensions must be at least 1x1, got {width}x{height}")]
    EmptyFrame { width: usize, height: usize },
    #[error("pixel buffer holds {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("sequence needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("frame {index} is {width}x{height}, sequence is {expected_width}x{expected_height}")]
    MixedDimensions {
        index: usize,
        width: usize,
        height: usize,
        expected_width: usize,
        expected_height: usize,
    },
}

/// Row-major 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyFrame { width, height });
        }
        let expected = width * height * 3;
        if pixels.len() != expected {
            return Err(FrameError::BufferSize {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Frame filled with one color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, FrameError> {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Luma plane, `0.299 R + 0.587 G + 0.114 B`, row-major.
    pub fn luma(&self) -> Vec<f64> {
        self.pixels
            .chunks_exact(3)
            .map(|p| luma(p[0], p[1], p[2]))
            .collect()
    }
}

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

/// Bilinear resize to `width x height` using pixel-center alignment.
///
/// Source coordinates are `(x + 0.5) * src / dst - 0.5`, clamped to the
/// image, so a same-size resize returns the input unchanged. Channel values
/// are rounded to nearest and clamped to `[0, 255]`.
pub fn rescale_frame(frame: &Frame, width: usize, height: usize) -> Frame {
    assert!(width >= 1 && height >= 1, "target size must be at least 1x1");
    if width == frame.width && height == frame.height {
        return frame.clone();
    }
    let xs = axis_weights(frame.width, width);
    let ys = axis_weights(frame.height, height);
    let src = &frame.pixels;
    let sw = frame.width;
    let mut out = Vec::with_capacity(width * height * 3);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let p = |x: usize, y: usize| f64::from(src[(y * sw + x) * 3 + c]);
                let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Frame {
        width,
        height,
        pixels: out,
    }
}

/// Per destination index: (left source index, right source index, weight of right).
fn axis_weights(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

/// Ordered frames of one person seen by one camera.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    person_id: String,
    camera_id: String,
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(
        person_id: impl Into<String>,
        camera_id: impl Into<String>,
        frames: Vec<Frame>,
    ) -> Result<Self, FrameError> {
        if frames.len() < 2 {
            return Err(FrameError::TooFewFrames(frames.len()));
        }
        let (w, h) = (frames[0].width, frames[0].height);
        if let Some((index, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.width != w || f.height != h)
        {
            return Err(FrameError::MixedDimensions {
                index,
                width: f.width,
                height: f.height,
                expected_width: w,
                expected_height: h,
            });
        }
        Ok(Self {
            person_id: person_id.into(),
            camera_id: camera_id.into(),
            frames,
        })
    }

    pub fn person_id(&self) -> &str {
        &self.person_id
    }

    pub fn camera_id(&self) -> &str {
        &self.camera_id
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }
}
