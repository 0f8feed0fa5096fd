//! Colour appearance model: 32-bin HSV histograms compared with the
//! Bhattacharyya coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BINS: usize = 32;

pub type Rgb = [u8; 3];

/// An 8-bit RGB image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::config(format!(
                "frame {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, color: Rgb) {
        self.pixels[y * self.width + x] = color;
    }
}

/// Axis-aligned box in pixel coordinates; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(Error::config("bounding box has non-finite coordinates"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::config(format!("bounding box size {w}x{h} must be positive")));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Integer pixel range `[x0, x1) x [y0, y1)` covered by the box after
    /// truncating its edges and clipping to a `width x height` frame.
    pub fn pixel_range(&self, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
        let clip = |v: f64, max: usize| v.floor().clamp(0.0, max as f64) as usize;
        let (x0, x1) = (clip(self.x, width), clip(self.x + self.w, width));
        let (y0, y1) = (clip(self.y, height), clip(self.y + self.h, height));
        (x1 > x0 && y1 > y0).then_some((x0, x1, y0, y1))
    }
}

/// Hexcone RGB to HSV. Hue in degrees `[0, 360)`, saturation and value in
/// `[0, 1]`. Achromatic pixels get hue 0.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (rf, gf, bf) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == rf {
        60.0 * ((gf - bf) / delta).rem_euclid(6.0)
    } else if max == gf {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    // rem_euclid can round up to exactly 360 for tiny negative ratios.
    let h = if h >= 360.0 { 0.0 } else { h };
    (h, s, v)
}

/// How HSV space is split into the 32 histogram bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinLayout {
    /// 8 hue x 2 saturation x 2 value joint bins.
    #[default]
    HsvJoint,
    /// 32 uniform hue bins.
    HueOnly,
}

impl BinLayout {
    pub fn bin(self, h: f64, s: f64, v: f64) -> usize {
        match self {
            BinLayout::HsvJoint => {
                let h_bin = ((h / 45.0).floor() as usize).min(7);
                let s_bin = ((s * 2.0).floor() as usize).min(1);
                let v_bin = ((v * 2.0).floor() as usize).min(1);
                h_bin * 4 + s_bin * 2 + v_bin
            }
            BinLayout::HueOnly => ((h / 360.0 * BINS as f64).floor() as usize).min(BINS - 1),
        }
    }

    pub fn bin_rgb(self, [r, g, b]: Rgb) -> usize {
        let (h, s, v) = rgb_to_hsv(r, g, b);
        self.bin(h, s, v)
    }
}

/// Normalized 32-bin histogram. A histogram of zero pixels is flagged empty
/// and has all bins zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Histogram {
    bins: [f64; BINS],
    empty: bool,
}

impl Histogram {
    pub fn empty() -> Self {
        Self {
            bins: [0.0; BINS],
            empty: true,
        }
    }

    /// Normalizes raw non-negative weights. All-zero input yields an empty
    /// histogram.
    pub fn from_weights(weights: &[f64; BINS]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config("histogram weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Ok(Self::empty());
        }
        let mut bins = [0.0; BINS];
        for (b, w) in bins.iter_mut().zip(weights) {
            *b = w / total;
        }
        Ok(Self { bins, empty: false })
    }

    fn from_counts(counts: &[u32; BINS], total: u32) -> Self {
        if total == 0 {
            return Self::empty();
        }
        let mut bins = [0.0; BINS];
        let total = total as f64;
        for (b, &c) in bins.iter_mut().zip(counts) {
            *b = c as f64 / total;
        }
        Self { bins, empty: false }
    }

    pub fn bins(&self) -> &[f64; BINS] {
        &self.bins
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }
}

/// Per-pixel bin indices of a frame, computed once so that many candidate
/// boxes can be histogrammed cheaply.
#[derive(Debug, Clone)]
pub struct BinnedFrame {
    width: usize,
    height: usize,
    bins: Vec<u8>,
}

impl BinnedFrame {
    pub fn new(frame: &Frame, layout: BinLayout) -> Self {
        Self {
            width: frame.width(),
            height: frame.height(),
            bins: frame
                .pixels()
                .iter()
                .map(|&px| layout.bin_rgb(px) as u8)
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn histogram(&self, bbox: &BoundingBox) -> Histogram {
        let Some((x0, x1, y0, y1)) = bbox.pixel_range(self.width, self.height) else {
            return Histogram::empty();
        };
        let mut counts = [0u32; BINS];
        for y in y0..y1 {
            let row = &self.bins[y * self.width + x0..y * self.width + x1];
            for &b in row {
                counts[b as usize] += 1;
            }
        }
        Histogram::from_counts(&counts, ((x1 - x0) * (y1 - y0)) as u32)
    }
}

/// Histogram of the pixels covered by `bbox` using the default joint layout.
pub fn extract_histogram(frame: &Frame, bbox: &BoundingBox) -> Histogram {
    extract_histogram_with(frame, bbox, BinLayout::default())
}

pub fn extract_histogram_with(frame: &Frame, bbox: &BoundingBox, layout: BinLayout) -> Histogram {
    let Some((x0, x1, y0, y1)) = bbox.pixel_range(frame.width(), frame.height()) else {
        return Histogram::empty();
    };
    let mut counts = [0u32; BINS];
    for y in y0..y1 {
        for x in x0..x1 {
            counts[layout.bin_rgb(frame.pixel(x, y))] += 1;
        }
    }
    Histogram::from_counts(&counts, ((x1 - x0) * (y1 - y0)) as u32)
}

/// Outcome of comparing two histograms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Observed(f64),
    /// At least one side had no pixels.
    NoObservation,
}

impl Observation {
    /// Similarity in [0, 1]; zero when nothing was observed.
    pub fn fitness(self) -> f64 {
        match self {
            Observation::Observed(v) => v,
            Observation::NoObservation => 0.0,
        }
    }

    pub fn is_observed(self) -> bool {
        matches!(self, Observation::Observed(_))
    }
}

/// Bhattacharyya coefficient `sum_i sqrt(p_i * q_i)`: 1 for identical
/// distributions, 0 for disjoint support.
pub fn bhattacharyya_fitness(p: &Histogram, q: &Histogram) -> Observation {
    if p.is_empty() || q.is_empty() {
        return Observation::NoObservation;
    }
    let bc: f64 = p
        .bins
        .iter()
        .zip(&q.bins)
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Observation::Observed(bc.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const RED: Rgb = [255, 0, 0];
    const GREEN: Rgb = [0, 255, 0];

    fn weights(pairs: &[(usize, f64)]) -> Histogram {
        let mut w = [0.0; BINS];
        for &(i, v) in pairs {
            w[i] = v;
        }
        Histogram::from_weights(&w).unwrap()
    }

    #[test]
    fn hsv_primaries_and_gray() {
        assert_eq!(rgb_to_hsv(255, 0, 0), (0.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv(128, 128, 128), (0.0, 0.0, 128.0 / 255.0));
        let (h, s, v) = rgb_to_hsv(0, 128, 255);
        // b is max: 60 * ((r - g)/delta + 4) = 240 - 60 * 128/255
        assert_abs_diff_eq!(h, 240.0 - 60.0 * 128.0 / 255.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h, 209.88, epsilon = 0.01);
        assert_eq!((s, v), (1.0, 1.0));
        assert_eq!(rgb_to_hsv(0, 0, 0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hsv_hue_stays_below_360() {
        for r in (0..=255).step_by(5) {
            for g in (0..=255).step_by(15) {
                for b in (0..=255).step_by(15) {
                    let (h, s, v) = rgb_to_hsv(r as u8, g as u8, b as u8);
                    assert!((0.0..360.0).contains(&h));
                    assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn red_patch_single_bin() {
        let frame = Frame::filled(20, 20, RED);
        let h = extract_histogram(&frame, &BoundingBox::new(2.0, 3.0, 5.0, 5.0).unwrap());
        assert_eq!(h.bins()[3], 1.0);
        assert_eq!(h.bins().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn box_outside_frame_is_empty() {
        let frame = Frame::filled(20, 20, RED);
        let h = extract_histogram(&frame, &BoundingBox::new(30.0, 3.0, 5.0, 5.0).unwrap());
        assert!(h.is_empty());
        let h = extract_histogram(&frame, &BoundingBox::new(-10.0, -10.0, 5.0, 5.0).unwrap());
        assert!(h.is_empty());
    }

    #[test]
    fn two_pixel_patch() {
        let frame = Frame::new(2, 1, vec![RED, GREEN]).unwrap();
        let h = extract_histogram(&frame, &BoundingBox::new(0.0, 0.0, 2.0, 1.0).unwrap());
        assert_eq!(h.bins()[3], 0.5);
        assert_eq!(h.bins()[11], 0.5);
        assert_eq!(h.bins().iter().filter(|&&b| b > 0.0).count(), 2);
    }

    #[test]
    fn binned_frame_matches_direct_extraction() {
        let mut frame = Frame::filled(30, 20, [10, 200, 30]);
        for y in 0..20 {
            for x in 0..30 {
                if (x * 7 + y * 3) % 5 == 0 {
                    frame.set_pixel(x, y, [(x * 8) as u8, (y * 12) as u8, 200]);
                }
            }
        }
        let binned = BinnedFrame::new(&frame, BinLayout::HsvJoint);
        for bbox in [
            BoundingBox::new(0.0, 0.0, 30.0, 20.0).unwrap(),
            BoundingBox::new(-4.5, 3.2, 11.0, 9.7).unwrap(),
            BoundingBox::new(25.9, 15.1, 10.0, 10.0).unwrap(),
        ] {
            assert_eq!(binned.histogram(&bbox), extract_histogram(&frame, &bbox));
        }
    }

    #[test]
    fn hue_only_layout() {
        let l = BinLayout::HueOnly;
        assert_eq!(l.bin_rgb(RED), 0);
        assert_eq!(l.bin_rgb(GREEN), 10);
        assert_eq!(l.bin(359.999, 1.0, 1.0), 31);
    }

    #[test]
    fn bc_identical_is_one() {
        let p = weights(&[(0, 0.2), (5, 0.3), (31, 0.5)]);
        assert_abs_diff_eq!(bhattacharyya_fitness(&p, &p).fitness(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bc_disjoint_is_zero() {
        let p = weights(&[(0, 1.0)]);
        let q = weights(&[(1, 0.5), (2, 0.5)]);
        assert_eq!(bhattacharyya_fitness(&p, &q).fitness(), 0.0);
    }

    #[test]
    fn bc_hand_example() {
        let p = weights(&[(0, 0.5), (1, 0.5)]);
        let q = weights(&[(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]);
        let bc = bhattacharyya_fitness(&p, &q).fitness();
        assert_abs_diff_eq!(bc, 2.0 * 0.125f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(bc, 0.70711, epsilon = 1e-5);
    }

    #[test]
    fn bc_empty_is_no_observation() {
        let p = weights(&[(0, 1.0)]);
        let o = bhattacharyya_fitness(&p, &Histogram::empty());
        assert_eq!(o, Observation::NoObservation);
        assert_eq!(o.fitness(), 0.0);
    }

    fn simplex() -> impl Strategy<Value = Histogram> {
        proptest::collection::vec(0.0f64..1.0, BINS).prop_filter_map("all zero", |v| {
            let mut w = [0.0; BINS];
            w.copy_from_slice(&v);
            Histogram::from_weights(&w).ok().filter(|h| !h.is_empty())
        })
    }

    proptest! {
        #[test]
        fn bc_symmetric_and_bounded(p in simplex(), q in simplex()) {
            let a = bhattacharyya_fitness(&p, &q).fitness();
            let b = bhattacharyya_fitness(&q, &p).fitness();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn histogram_sums_to_one(
            x in -20.0f64..40.0, y in -20.0f64..40.0, w in 0.5f64..30.0, h in 0.5f64..30.0,
        ) {
            let mut frame = Frame::filled(32, 24, [0, 0, 0]);
            for (i, px) in frame.pixels.iter_mut().enumerate() {
                *px = [(i * 37 % 256) as u8, (i * 91 % 256) as u8, (i * 13 % 256) as u8];
            }
            let hist = extract_histogram(&frame, &BoundingBox::new(x, y, w, h).unwrap());
            if !hist.is_empty() {
                prop_assert!((hist.bins().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn uniform_frame_translation_invariant(
            x in -5.0f64..35.0, y in -5.0f64..25.0, w in 1.0f64..12.0, h in 1.0f64..12.0,
        ) {
            let frame = Frame::filled(32, 24, [40, 90, 200]);
            let reference = extract_histogram(&frame, &BoundingBox::new(0.0, 0.0, 4.0, 4.0).unwrap());
            let hist = extract_histogram(&frame, &BoundingBox::new(x, y, w, h).unwrap());
            if !hist.is_empty() {
                prop_assert_eq!(hist, reference);
            }
        }
    }
}
