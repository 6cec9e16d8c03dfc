//! Built-in appearance descriptor: per horizontal stripe, a joint
//! hue/saturation histogram plus a gradient-orientation histogram.
//!
//! The frame is resized to 64x128 (width x height) and split into six
//! stripes; row `y` belongs to stripe `y * 6 / 128`, giving stripe heights of
//! 22 and 21 rows. Per stripe:
//!
//! * 8 hue x 8 saturation bins (HSV), each pixel contributing `1 / pixels`;
//! * 16 unsigned orientation bins over `[0, 180)` degrees of the Sobel
//!   gradient of luma, weighted by gradient magnitude and scaled to unit sum
//!   (left at zero for a flat stripe).
//!
//! The 80 values of a stripe are then L2-normalized, so every entry lies in
//! `[0, 1]`. Total length is 480.

use std::f64::consts::PI;

use crate::frame::{rescale_frame, Frame};

use super::{Extractor, FeatureVector};

pub const INPUT_WIDTH: usize = 64;
pub const INPUT_HEIGHT: usize = 128;
pub const STRIPES: usize = 6;
pub const HUE_BINS: usize = 8;
pub const SAT_BINS: usize = 8;
pub const ORIENT_BINS: usize = 16;
pub const STRIPE_DIM: usize = HUE_BINS * SAT_BINS + ORIENT_BINS;
pub const DIM: usize = STRIPES * STRIPE_DIM;

/// Stripe-wise color and texture histograms (see module docs).
#[derive(Debug, Clone, Copy, Default)]
pub struct Handcrafted;

/// Histograms of one stripe before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct StripeHistogram {
    /// Index `hue_bin * SAT_BINS + sat_bin`; sums to 1.
    pub hue_sat: [f64; HUE_BINS * SAT_BINS],
    /// Magnitude-weighted orientation mass (not yet scaled).
    pub orientation: [f64; ORIENT_BINS],
}

/// HSV hue in degrees `[0, 360)` and saturation `[0, 1]`; gray has hue 0.
pub fn hue_saturation(rgb: [u8; 3]) -> (f64, f64) {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let c = max - min;
    if c == 0.0 {
        return (0.0, 0.0);
    }
    let h = if max == r {
        60.0 * ((g - b) / c).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / c + 2.0)
    } else {
        60.0 * ((r - g) / c + 4.0)
    };
    (h.rem_euclid(360.0), c / max)
}

pub fn hue_sat_bin(rgb: [u8; 3]) -> usize {
    let (h, s) = hue_saturation(rgb);
    let hb = ((h / (360.0 / HUE_BINS as f64)) as usize).min(HUE_BINS - 1);
    let sb = ((s * SAT_BINS as f64) as usize).min(SAT_BINS - 1);
    hb * SAT_BINS + sb
}

pub fn stripe_of_row(y: usize, height: usize) -> usize {
    y * STRIPES / height
}

/// Raw stripe histograms of a frame that is already 64x128.
pub fn stripe_histograms(frame: &Frame) -> Vec<StripeHistogram> {
    let (w, h) = (frame.width(), frame.height());
    let mut out = vec![
        StripeHistogram {
            hue_sat: [0.0; HUE_BINS * SAT_BINS],
            orientation: [0.0; ORIENT_BINS],
        };
        STRIPES
    ];
    let mut counts = [0usize; STRIPES];
    let luma = frame.luma();
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        luma[y * w + x]
    };
    for y in 0..h {
        let s = stripe_of_row(y, h);
        let hist = &mut out[s];
        for x in 0..w {
            hist.hue_sat[hue_sat_bin(frame.rgb(x, y))] += 1.0;
            counts[s] += 1;

            let (xi, yi) = (x as isize, y as isize);
            let gx = (at(xi + 1, yi - 1) + 2.0 * at(xi + 1, yi) + at(xi + 1, yi + 1))
                - (at(xi - 1, yi - 1) + 2.0 * at(xi - 1, yi) + at(xi - 1, yi + 1));
            let gy = (at(xi - 1, yi + 1) + 2.0 * at(xi, yi + 1) + at(xi + 1, yi + 1))
                - (at(xi - 1, yi - 1) + 2.0 * at(xi, yi - 1) + at(xi + 1, yi - 1));
            let mag = gx.hypot(gy);
            if mag > 0.0 {
                let theta = gy.atan2(gx).rem_euclid(PI);
                let bin = ((theta / (PI / ORIENT_BINS as f64)) as usize).min(ORIENT_BINS - 1);
                hist.orientation[bin] += mag;
            }
        }
    }
    for (hist, &n) in out.iter_mut().zip(&counts) {
        if n > 0 {
            hist.hue_sat.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    out
}

impl StripeHistogram {
    /// Normalized 80-value block for this stripe.
    pub fn to_block(&self) -> [f64; STRIPE_DIM] {
        let mut block = [0.0; STRIPE_DIM];
        block[..HUE_BINS * SAT_BINS].copy_from_slice(&self.hue_sat);
        let total: f64 = self.orientation.iter().sum();
        if total > 0.0 {
            for (dst, v) in block[HUE_BINS * SAT_BINS..].iter_mut().zip(&self.orientation) {
                *dst = v / total;
            }
        }
        let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            block.iter_mut().for_each(|v| *v /= norm);
        }
        block
    }
}

pub fn extract_handcrafted(frame: &Frame) -> FeatureVector {
    let resized = rescale_frame(frame, INPUT_WIDTH, INPUT_HEIGHT);
    let values = stripe_histograms(&resized)
        .iter()
        .flat_map(|h| h.to_block())
        .map(|v| v as f32)
        .collect();
    FeatureVector::new(values)
}

impl Extractor for Handcrafted {
    fn dim(&self) -> usize {
        DIM
    }

    fn extract(&self, frame: &Frame) -> FeatureVector {
        extract_handcrafted(frame)
    }
}
