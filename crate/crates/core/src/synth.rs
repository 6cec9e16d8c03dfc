//! Synthetic walking sequences with known gait timing.
//!
//! Each identity is drawn as a head, a torso in the identity's shirt color,
//! two legs in its trouser color, and a carried bag in its bag color. Two
//! identities share every color except the bag, so telling them apart
//! depends on frames where the bag is visible. It swings into view only
//! within one frame of each FEP minimum (legs farthest apart), and even
//! then is hidden behind the body in some frames.
//!
//! Leg motion is a brightness ramp scrolling down the trousers at speed
//! `v(t) = v0 + v1 cos(2π (t - phase) / P)`, so the lower-half change
//! between frames `t` and `t + 1` peaks at `t = phase + kP` and bottoms out
//! at `t = phase + P/2 + kP`. Those positions are reported as ground truth.
//!
//! Some frames have a background-toned occluder in front of the upper body,
//! above the rows that drive the FEP.
//!
//! Camera 2 applies a fixed global color shift. Every pixel channel also
//! receives independent uniform noise in `±noise * LEG_CONTRAST`, so `noise`
//! is relative to the brightness swing of the moving leg texture.

use thiserror::Error;

use crate::cycle::{Extremum, ExtremumKind};
use crate::dataset::Dataset;
use crate::frame::{Frame, FrameSequence};
use crate::rng::RngHandle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

/// Camera labels written by the generator.
pub const CAMERAS: [&str; 2] = ["cam1", "cam2"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub identities: usize,
    pub frames: usize,
    /// Gait period in frames (one step: max to max of the FEP).
    pub period: usize,
    pub width: usize,
    pub height: usize,
    /// Uniform pixel noise amplitude relative to the leg texture contrast.
    pub noise: f64,
    /// Per-frame probability of a foreground occluder over the upper body.
    pub occlusion: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            identities: 20,
            frames: 64,
            period: 16,
            width: 32,
            height: 64,
            noise: 0.1,
            occlusion: 0.3,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.identities == 0 {
            return bad("identities must be at least 1".into());
        }
        if self.period < 4 {
            return bad(format!("period {} < 4", self.period));
        }
        if self.frames < 2 * self.period {
            return bad(format!(
                "{} frames do not cover two periods of {}",
                self.frames, self.period
            ));
        }
        if self.width < 8 || self.height < 16 {
            return bad(format!("frame {}x{} is smaller than 8x16", self.width, self.height));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 1]", self.noise));
        }
        if !(0.0..=1.0).contains(&self.occlusion) {
            return bad(format!("occlusion {} outside [0, 1]", self.occlusion));
        }
        Ok(())
    }
}

/// Ground truth for one generated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTruth {
    pub camera: String,
    pub person: String,
    /// Frame index of the first FEP maximum (`0..period`).
    pub phase: usize,
    /// Interior FEP extrema (indices into the transition signal), time ordered.
    pub extrema: Vec<Extremum>,
    /// Frames in which the bag is drawn.
    pub bag_frames: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub truth: Vec<SequenceTruth>,
}

impl SynthOutput {
    pub fn truth_for(&self, camera: &str, person: &str) -> Option<&SequenceTruth> {
        self.truth
            .iter()
            .find(|t| t.camera == camera && t.person == person)
    }
}

/// Identity colors: shirt, trousers, bag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorSignature {
    pub shirt: [u8; 3],
    pub trousers: [u8; 3],
    pub bag: [u8; 3],
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = (h / 60.0).rem_euclid(6.0);
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round() as u8)
}

/// Signature of identity `i`; identities `2j` and `2j + 1` differ only in bag color.
pub fn signature(i: usize) -> ColorSignature {
    let pair = i / 2;
    // Hues sit on 45-degree bin centers so small camera shifts keep them in bin.
    let shirt_hue = 22.5 + 45.0 * (pair % 8) as f64;
    let shirt_sat = if (pair / 8) % 2 == 0 { 0.85 } else { 0.45 };
    let trouser_hue = 22.5 + 45.0 * ((pair * 3 + 5) % 8) as f64;
    let trouser_sat = if (pair / 8) % 2 == 0 { 0.6 } else { 0.9 };
    let bag_hue = 22.5 + 45.0 * ((pair + 2 + 3 * (i % 2)) % 8) as f64;
    ColorSignature {
        shirt: hsv_to_rgb(shirt_hue, shirt_sat, 0.8),
        trousers: hsv_to_rgb(trouser_hue, trouser_sat, 0.7),
        bag: hsv_to_rgb(bag_hue, 0.95, 0.9),
    }
}

pub fn person_label(i: usize) -> String {
    format!("p{:03}", i + 1)
}

const BACKGROUND: [u8; 3] = [118, 122, 116];
const SKIN: [u8; 3] = [224, 172, 140];
const LEG_RAMP_PERIOD: f64 = 12.0;
const LEG_SHADE_SWING: f64 = 0.45;
/// Brightness swing (8-bit levels) of the leg texture at full scale.
pub const LEG_CONTRAST: f64 = LEG_SHADE_SWING * 255.0;
const SPEED_BASE: f64 = 1.5;
const SPEED_SWING: f64 = 1.0;

/// Half-width, in frames, of the window around each FEP minimum in which
/// the bag shows.
const BAG_REACH: i64 = 1;
/// Chance that the bag stays hidden in a frame inside its window.
const BAG_HIDE: f64 = 0.2;

fn in_bag_window(t: usize, phase: usize, period: usize) -> bool {
    let p = period as i64;
    let u = t as i64 - phase as i64 - p / 2;
    let step = (u as f64 / p as f64).round() as i64;
    (u - step * p).abs() <= BAG_REACH
}

fn camera_shift(camera: usize, rgb: [u8; 3]) -> [f64; 3] {
    let rgb = rgb.map(f64::from);
    if camera == 0 {
        rgb
    } else {
        [rgb[0] * 0.92 + 10.0, rgb[1] * 0.92 + 8.0, rgb[2] * 0.92 + 4.0]
    }
}

fn triangle(x: f64) -> f64 {
    let f = x.rem_euclid(1.0);
    if f < 0.5 {
        2.0 * f
    } else {
        2.0 - 2.0 * f
    }
}

struct Layout {
    head: (usize, usize, usize, usize),
    torso: (usize, usize, usize, usize),
    bag: (usize, usize, usize, usize),
    legs: [(usize, usize); 2],
    legs_rows: (usize, usize),
    occluder_width: usize,
    occluder_rows: (usize, usize),
}

fn layout(w: usize, h: usize) -> Layout {
    let cx = w / 2;
    let torso_half = w / 4;
    let leg_w = (w / 6).max(1);
    Layout {
        // (x0, x1, y0, y1), half-open
        head: (cx - w / 8, cx + w / 8, h / 32, h * 3 / 20),
        torso: (cx - torso_half, cx + torso_half, h * 3 / 20, h / 2),
        bag: (cx + 1, (cx + torso_half + w / 6).min(w), h / 4, h * 9 / 20),
        legs: [(cx - leg_w - 1, cx - 1), (cx + 1, cx + 1 + leg_w)],
        legs_rows: (h / 2, h - h / 32),
        occluder_width: w / 3,
        occluder_rows: (h / 8, h / 2),
    }
}

fn fill(buf: &mut [[f64; 3]], w: usize, (x0, x1, y0, y1): (usize, usize, usize, usize), c: [f64; 3]) {
    for y in y0..y1 {
        for x in x0..x1 {
            buf[y * w + x] = c;
        }
    }
}

fn render_sequence(
    spec: &SynthSpec,
    sig: &ColorSignature,
    camera: usize,
    phase: usize,
    rng: &mut RngHandle,
) -> (Vec<Frame>, Vec<usize>) {
    let (w, h) = (spec.width, spec.height);
    let lay = layout(w, h);
    let p = spec.period as f64;
    let amp = spec.noise * LEG_CONTRAST;
    let mut position = rng.uniform_in(0.0, LEG_RAMP_PERIOD);
    let mut frames = Vec::with_capacity(spec.frames);
    let mut bag_frames = Vec::new();
    for t in 0..spec.frames {
        let mut buf = vec![camera_shift(camera, BACKGROUND); w * h];
        fill(&mut buf, w, lay.head, camera_shift(camera, SKIN));
        fill(&mut buf, w, lay.torso, camera_shift(camera, sig.shirt));
        if in_bag_window(t, phase, spec.period) && rng.uniform() >= BAG_HIDE {
            fill(&mut buf, w, lay.bag, camera_shift(camera, sig.bag));
            bag_frames.push(t);
        }
        if rng.uniform() < spec.occlusion {
            let x0 = rng.below(w - lay.occluder_width + 1);
            let shade = rng.uniform_in(0.6, 1.0);
            let c = camera_shift(camera, BACKGROUND).map(|ch| ch * shade);
            fill(&mut buf, w, (x0, x0 + lay.occluder_width, lay.occluder_rows.0, lay.occluder_rows.1), c);
        }
        let trousers = camera_shift(camera, sig.trousers);
        for y in lay.legs_rows.0..lay.legs_rows.1 {
            let shade = 1.0 - LEG_SHADE_SWING + LEG_SHADE_SWING * triangle((y as f64 - position) / LEG_RAMP_PERIOD);
            let c = trousers.map(|ch| ch * shade);
            for &(x0, x1) in &lay.legs {
                for x in x0..x1 {
                    buf[y * w + x] = c;
                }
            }
        }
        let pixels = buf
            .iter()
            .flat_map(|px| {
                px.map(|ch| {
                    let n = if amp > 0.0 { rng.uniform_in(-amp, amp) } else { 0.0 };
                    (ch + n).round().clamp(0.0, 255.0) as u8
                })
            })
            .collect();
        frames.push(Frame::new(w, h, pixels).expect("generator dimensions"));
        // speed of the transition t -> t + 1
        let speed = SPEED_BASE + SPEED_SWING * (std::f64::consts::TAU * (t as f64 - phase as f64) / p).cos();
        position += speed;
    }
    (frames, bag_frames)
}

/// Interior extrema of a length-`len` transition signal with maxima at
/// `phase + kP` and minima at `phase + P/2 + kP`.
pub fn truth_extrema(len: usize, period: usize, phase: usize) -> Vec<Extremum> {
    (1..len.saturating_sub(1))
        .filter_map(|t| {
            let r = (t + period - phase % period) % period;
            if r == 0 {
                Some(Extremum { index: t, kind: ExtremumKind::Max })
            } else if r == period / 2 {
                Some(Extremum { index: t, kind: ExtremumKind::Min })
            } else {
                None
            }
        })
        .collect()
}

/// Generates two sequences (cameras `cam1`, `cam2`) per identity.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let base = RngHandle::new(spec.seed);
    let mut sequences = Vec::with_capacity(spec.identities * 2);
    let mut truth = Vec::with_capacity(spec.identities * 2);
    for i in 0..spec.identities {
        let sig = signature(i);
        let person = person_label(i);
        for (c, camera) in CAMERAS.iter().enumerate() {
            let mut rng = base.derive(&[i as u64, c as u64]);
            let phase = rng.below(spec.period);
            let (frames, bag_frames) = render_sequence(spec, &sig, c, phase, &mut rng);
            sequences.push(FrameSequence::new(person.clone(), *camera, frames).expect("valid frames"));
            truth.push(SequenceTruth {
                camera: camera.to_string(),
                person: person.clone(),
                phase,
                extrema: truth_extrema(spec.frames - 1, spec.period, phase),
                bag_frames,
            });
        }
    }
    Ok(SynthOutput {
        dataset: Dataset::new(sequences),
        truth,
    })
}

/// `camera,person,kind,index` lines for every ground-truth extremum.
pub fn truth_csv(truth: &[SequenceTruth]) -> String {
    let mut out = String::from("camera,person,kind,index\n");
    for t in truth {
        for e in &t.extrema {
            let kind = match e.kind {
                ExtremumKind::Max => "max",
                ExtremumKind::Min => "min",
            };
            out.push_str(&format!("{},{},{},{}\n", t.camera, t.person, kind, e.index));
        }
    }
    out
}
