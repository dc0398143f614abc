//! Stroke representation, arc-length resampling, geometric features and
//! sketch-to-bounding-box composition.
//!
//! Pixel origin is top-left, `x` is the column and `y` the row. Every module
//! in the crate shares this convention.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{self, SketchShape};

/// Number of points strokes are resampled to before feature extraction.
pub const RESAMPLE_COUNT: usize = 64;

/// Segments shorter than this (px) do not contribute turning angles.
pub const MIN_TURN_SEGMENT: f64 = 0.5;

/// Padding (px per side) applied to a bounding box that collapsed to a point.
pub const DEGENERATE_BOX_PAD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("degenerate stroke: fewer than two distinct points")]
    DegenerateStroke,
    #[error("sketch contains no strokes")]
    EmptySketch,
    #[error("resample count must be at least 2 (got {0})")]
    BadResampleCount(usize),
    #[error("stroke timestamps decrease at point {0}")]
    NonMonotoneTime(usize),
    #[error("stroke coordinate is not finite at point {0}")]
    NonFinite(usize),
    #[error("bounding box does not intersect the {width}x{height} frame")]
    OutsideFrame { width: u32, height: u32 },
    #[error("circle-and-arrow sketches are boxed per part; split the sketch first")]
    CompositeShape,
}

/// Identifier of an observation frame. Serialized as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FrameId(pub u64);

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for FrameId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(FrameId)
    }
}

impl Serialize for FrameId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FrameId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One sampled pointer position. Serialized as `[x, y, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct StrokePoint {
    pub x: f64,
    pub y: f64,
    /// Milliseconds since the stroke started.
    pub t: f64,
}

impl StrokePoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn xy(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

impl From<[f64; 3]> for StrokePoint {
    fn from([x, y, t]: [f64; 3]) -> Self {
        Self { x, y, t }
    }
}

impl From<StrokePoint> for [f64; 3] {
    fn from(p: StrokePoint) -> Self {
        [p.x, p.y, p.t]
    }
}

/// An ordered polyline with at least two distinct points and positive length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<StrokePoint>", into = "Vec<StrokePoint>")]
pub struct Stroke {
    points: Vec<StrokePoint>,
}

impl Stroke {
    /// Ingests raw points: drops consecutive duplicates and checks that time
    /// never runs backwards.
    pub fn new(points: Vec<StrokePoint>) -> Result<Self, SketchError> {
        let mut out: Vec<StrokePoint> = Vec::with_capacity(points.len());
        for (i, p) in points.into_iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.t.is_finite()) {
                return Err(SketchError::NonFinite(i));
            }
            if let Some(prev) = out.last() {
                if p.t < prev.t {
                    return Err(SketchError::NonMonotoneTime(i));
                }
                if prev.x == p.x && prev.y == p.y {
                    continue;
                }
            }
            out.push(p);
        }
        if out.len() < 2 {
            return Err(SketchError::DegenerateStroke);
        }
        Ok(Self { points: out })
    }

    /// Builds a stroke from pixel positions, timestamping at 1 px/ms of arc.
    pub fn from_xy<I>(xy: I) -> Result<Self, SketchError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut t = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        let points = xy
            .into_iter()
            .map(|(x, y)| {
                if let Some((px, py)) = prev {
                    t += ((x - px).powi(2) + (y - py).powi(2)).sqrt();
                }
                prev = Some((x, y));
                StrokePoint::new(x, y, t)
            })
            .collect();
        Self::new(points)
    }

    pub(crate) fn from_points_unchecked(points: Vec<StrokePoint>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[StrokePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point2<f64> {
        self.points[0].xy()
    }

    pub fn last(&self) -> Point2<f64> {
        self.points[self.points.len() - 1].xy()
    }

    pub fn xy(&self) -> Vec<Point2<f64>> {
        self.points.iter().map(StrokePoint::xy).collect()
    }

    pub fn arc_length(&self) -> f64 {
        polyline_length(&self.xy())
    }

    /// Applies `f` to every pixel position, keeping timestamps.
    pub fn map_xy(&self, f: impl Fn(Point2<f64>) -> Point2<f64>) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| {
                let q = f(p.xy());
                StrokePoint::new(q.x, q.y, p.t)
            })
            .collect();
        Self { points }
    }

    pub fn translated(&self, d: Vector2<f64>) -> Self {
        self.map_xy(|p| p + d)
    }
}

impl TryFrom<Vec<StrokePoint>> for Stroke {
    type Error = SketchError;

    fn try_from(points: Vec<StrokePoint>) -> Result<Self, Self::Error> {
        Stroke::new(points)
    }
}

impl From<Stroke> for Vec<StrokePoint> {
    fn from(s: Stroke) -> Self {
        s.points
    }
}

#[derive(Deserialize)]
struct RawSketchSet {
    frame_id: FrameId,
    #[serde(default)]
    label: Option<String>,
    strokes: Vec<Stroke>,
}

/// All strokes the operator drew on one observation frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSketchSet")]
pub struct SketchSet {
    pub frame_id: FrameId,
    /// Optional text tag from the UI (e.g. "rotate").
    pub label: Option<String>,
    pub strokes: Vec<Stroke>,
}

impl TryFrom<RawSketchSet> for SketchSet {
    type Error = SketchError;

    fn try_from(raw: RawSketchSet) -> Result<Self, Self::Error> {
        SketchSet::new(raw.frame_id, raw.strokes, raw.label)
    }
}

impl SketchSet {
    pub fn new(
        frame_id: FrameId,
        strokes: Vec<Stroke>,
        label: Option<String>,
    ) -> Result<Self, SketchError> {
        if strokes.is_empty() {
            return Err(SketchError::EmptySketch);
        }
        Ok(Self {
            frame_id,
            label,
            strokes,
        })
    }

    pub fn all_points(&self) -> impl Iterator<Item = Point2<f64>> + '_ {
        self.strokes
            .iter()
            .flat_map(|s| s.points().iter().map(StrokePoint::xy))
    }

    pub fn translated(&self, d: Vector2<f64>) -> Self {
        Self {
            frame_id: self.frame_id,
            label: self.label.clone(),
            strokes: self.strokes.iter().map(|s| s.translated(d)).collect(),
        }
    }

    /// Sub-sketch made of the strokes at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, SketchError> {
        let strokes = indices
            .iter()
            .filter_map(|&i| self.strokes.get(i).cloned())
            .collect();
        SketchSet::new(self.frame_id, strokes, self.label.clone())
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.label
            .as_deref()
            .is_some_and(|l| l.trim().eq_ignore_ascii_case(label))
    }
}

pub(crate) fn polyline_length(points: &[Point2<f64>]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Resamples `stroke` to `n` points equally spaced by arc length along the
/// polyline. First and last points are kept exactly; timestamps are
/// interpolated linearly.
pub fn resample_stroke(stroke: &Stroke, n: usize) -> Result<Stroke, SketchError> {
    if n < 2 {
        return Err(SketchError::BadResampleCount(n));
    }
    let pts = stroke.points();
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        let d = (w[1].xy() - w[0].xy()).norm();
        cum.push(cum[cum.len() - 1] + d);
    }
    let total = cum[cum.len() - 1];
    if !(total > 0.0) {
        return Err(SketchError::DegenerateStroke);
    }

    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let mut seg = 0;
    for i in 1..n - 1 {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 2 < pts.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[seg + 1]);
        let len = cum[seg + 1] - cum[seg];
        let f = if len > 0.0 {
            ((target - cum[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(StrokePoint::new(
            a.x + (b.x - a.x) * f,
            a.y + (b.y - a.y) * f,
            a.t + (b.t - a.t) * f,
        ));
    }
    out.push(pts[pts.len() - 1]);
    Ok(Stroke::from_points_unchecked(out))
}

/// A turning event at a polyline vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Turn {
    /// Index of the vertex where the direction changes.
    pub vertex: usize,
    /// Signed angle in radians; positive turns clockwise on screen.
    pub angle: f64,
}

/// Signed turning angles between consecutive segments longer than
/// [`MIN_TURN_SEGMENT`]. With `closed`, the closing segment and the turns
/// around the start vertex are included, so the sum is a multiple of 2π.
pub(crate) fn turns(points: &[Point2<f64>], closed: bool) -> Vec<Turn> {
    let n = points.len();
    // (start vertex, direction)
    let mut segs: Vec<(usize, Vector2<f64>)> = Vec::with_capacity(n);
    for i in 0..n.saturating_sub(1) {
        let d = points[i + 1] - points[i];
        if d.norm() > MIN_TURN_SEGMENT {
            segs.push((i, d));
        }
    }
    if closed && n > 2 {
        let d = points[0] - points[n - 1];
        if d.norm() > MIN_TURN_SEGMENT {
            segs.push((n - 1, d));
        }
    }
    let mut out = Vec::with_capacity(segs.len());
    let pair = |a: &(usize, Vector2<f64>), b: &(usize, Vector2<f64>)| Turn {
        vertex: b.0,
        angle: signed_angle(a.1, b.1),
    };
    for w in segs.windows(2) {
        out.push(pair(&w[0], &w[1]));
    }
    if closed && segs.len() > 1 {
        out.push(pair(&segs[segs.len() - 1], &segs[0]));
    }
    out
}

pub(crate) fn signed_angle(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let cross = a.x * b.y - a.y * b.x;
    let dot = a.dot(&b);
    cross.atan2(dot)
}

pub(crate) fn centroid(points: &[Point2<f64>]) -> Point2<f64> {
    let sum = points
        .iter()
        .fold(Vector2::zeros(), |acc, p| acc + p.coords);
    Point2::from(sum / points.len() as f64)
}

/// Shape descriptors of one stroke, measured on its resampled polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeFeatures {
    pub arc_length: f64,
    /// Endpoint distance over arc length.
    pub closure_ratio: f64,
    /// Signed sum of turning angles (radians).
    pub net_turning: f64,
    /// Coefficient of variation of centroid-to-point distances.
    pub radius_cv: f64,
    pub endpoint_vector: Vector2<f64>,
    pub centroid: Point2<f64>,
}

pub fn stroke_features(stroke: &Stroke) -> Result<StrokeFeatures, SketchError> {
    let resampled = resample_stroke(stroke, RESAMPLE_COUNT)?;
    Ok(features_of_resampled(&resampled.xy()))
}

pub(crate) fn features_of_resampled(pts: &[Point2<f64>]) -> StrokeFeatures {
    let arc_length = polyline_length(pts);
    let endpoint_vector = pts[pts.len() - 1] - pts[0];
    let gap = endpoint_vector.norm();
    // Endpoints closer than the jitter floor form a closed polygon.
    let closed = gap < MIN_TURN_SEGMENT;
    let net_turning = turns(pts, closed).iter().map(|t| t.angle).sum();
    let c = centroid(pts);
    let radii: Vec<f64> = pts.iter().map(|p| (p - c).norm()).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let var = radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / radii.len() as f64;
    let radius_cv = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
    StrokeFeatures {
        arc_length,
        closure_ratio: gap / arc_length,
        net_turning,
        radius_cv,
        endpoint_vector,
        centroid: c,
    }
}

/// Axis-aligned pixel box; bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl PixelBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point2<f64>>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Self::new(first.x, first.y, first.x, first.y);
        for p in it {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        Some(b)
    }

    /// Box spanned by two corner points.
    pub fn spanning(a: Point2<f64>, b: Point2<f64>) -> Self {
        Self::new(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y))
    }

    pub fn around(center: Point2<f64>, half: f64) -> Self {
        Self::new(
            center.x - half,
            center.y - half,
            center.x + half,
            center.y + half,
        )
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Point2<f64> {
        Point2::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn is_point(&self) -> bool {
        self.width() == 0.0 && self.height() == 0.0
    }

    fn padded(&self, pad: f64) -> Self {
        Self::new(
            self.min_x - pad,
            self.min_y - pad,
            self.max_x + pad,
            self.max_y + pad,
        )
    }

    /// Clamps to `[0, width-1] x [0, height-1]`.
    pub fn clamped(&self, width: u32, height: u32) -> Result<Self, SketchError> {
        let (wx, hy) = ((width as f64) - 1.0, (height as f64) - 1.0);
        if self.max_x < 0.0 || self.max_y < 0.0 || self.min_x > wx || self.min_y > hy {
            return Err(SketchError::OutsideFrame { width, height });
        }
        Ok(Self::new(
            self.min_x.max(0.0),
            self.min_y.max(0.0),
            self.max_x.min(wx),
            self.max_y.min(hy),
        ))
    }

    /// Point-sized boxes grow by [`DEGENERATE_BOX_PAD`] per side, then the
    /// result is clamped to the frame.
    pub fn finalize(&self, width: u32, height: u32) -> Result<Self, SketchError> {
        let b = if self.is_point() {
            self.padded(DEGENERATE_BOX_PAD)
        } else {
            *self
        };
        b.clamped(width, height)
    }
}

/// Bounding box used to look up the object a sketch refers to.
///
/// Non-arrow shapes use the min/max over every stroke point. Arrows use only
/// the box spanned by the arrow's start and end. Circle-and-arrow sketches are
/// boxed per part (see [`crate::classify::split_composite`]).
pub fn compose_bbox(
    sketch: &SketchSet,
    shape: SketchShape,
    frame_size: (u32, u32),
) -> Result<PixelBox, SketchError> {
    if sketch.strokes.is_empty() {
        return Err(SketchError::EmptySketch);
    }
    let raw = match shape {
        SketchShape::CircleAndArrow => return Err(SketchError::CompositeShape),
        SketchShape::Arrow => {
            let (start, end) = classify::arrow_endpoints(&sketch.strokes);
            PixelBox::spanning(start, end)
        }
        _ => PixelBox::from_points(sketch.all_points()).ok_or(SketchError::EmptySketch)?,
    };
    raw.finalize(frame_size.0, frame_size.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn line(a: (f64, f64), b: (f64, f64), n: usize) -> Stroke {
        Stroke::from_xy((0..n).map(|i| {
            let f = i as f64 / (n - 1) as f64;
            (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f)
        }))
        .unwrap()
    }

    fn circle(cx: f64, cy: f64, r: f64, n: usize) -> Stroke {
        // closed: last point repeats the first
        Stroke::from_xy((0..n).map(|i| {
            let a = 2.0 * PI * i as f64 / (n - 1) as f64;
            (cx + r * a.cos(), cy + r * a.sin())
        }))
        .unwrap()
    }

    #[test]
    fn ingestion_drops_consecutive_duplicates() {
        let s = Stroke::new(vec![
            StrokePoint::new(1.0, 1.0, 0.0),
            StrokePoint::new(1.0, 1.0, 1.0),
            StrokePoint::new(2.0, 1.0, 2.0),
        ])
        .unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn ingestion_rejects_point_strokes_and_time_reversal() {
        let p = StrokePoint::new(3.0, 3.0, 0.0);
        assert_eq!(Stroke::new(vec![p, p, p]), Err(SketchError::DegenerateStroke));
        let err = Stroke::new(vec![
            StrokePoint::new(0.0, 0.0, 5.0),
            StrokePoint::new(1.0, 0.0, 4.0),
        ]);
        assert_eq!(err, Err(SketchError::NonMonotoneTime(1)));
    }

    #[test]
    fn resample_straight_segment() {
        let s = Stroke::from_xy([(0.0, 0.0), (10.0, 0.0)]).unwrap();
        let r = resample_stroke(&s, 3).unwrap();
        let xy: Vec<_> = r.points().iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(xy, vec![(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)]);
    }

    #[test]
    fn resample_uniform_polyline_is_identity() {
        let s = circle(100.0, 100.0, 40.0, 32);
        let r = resample_stroke(&s, s.len()).unwrap();
        for (a, b) in s.points().iter().zip(r.points()) {
            assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_rejects_bad_count() {
        let s = line((0.0, 0.0), (1.0, 0.0), 2);
        assert_eq!(resample_stroke(&s, 1), Err(SketchError::BadResampleCount(1)));
    }

    #[test]
    fn resample_quarter_circle_tracks_true_arc() {
        // 7 irregular samples on a radius-100 quarter circle
        let angles = [0.0, 0.1, 0.35, 0.6, 0.9, 1.3, FRAC_PI_2];
        let s = Stroke::from_xy(angles.iter().map(|a| (100.0 * a.cos(), 100.0 * a.sin())))
            .unwrap();
        let r = resample_stroke(&s, 64).unwrap();
        // analytic oracle: distance from the true arc is |radius - 100|
        let worst = r
            .points()
            .iter()
            .map(|p| ((p.x * p.x + p.y * p.y).sqrt() - 100.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 2.0, "max deviation {worst}");
    }

    #[test]
    fn features_of_circle() {
        let f = stroke_features(&circle(200.0, 200.0, 50.0, 64)).unwrap();
        assert!(f.closure_ratio < 0.05);
        assert!((f.net_turning.abs() - 2.0 * PI).abs() < 0.1);
        assert!(f.radius_cv < 0.02);
    }

    #[test]
    fn features_of_straight_segment() {
        let f = stroke_features(&line((10.0, 10.0), (110.0, 10.0), 5)).unwrap();
        assert_eq!(f.net_turning, 0.0);
        assert!((f.closure_ratio - 1.0).abs() < 1e-12);
        // uniform samples on a line through the centroid: cv -> 1/sqrt(3)
        assert!((f.radius_cv - 1.0 / 3f64.sqrt()).abs() < 0.02, "{}", f.radius_cv);
    }

    #[test]
    fn features_of_semicircle() {
        let s = Stroke::from_xy((0..40).map(|i| {
            let a = PI * i as f64 / 39.0;
            (300.0 + 60.0 * a.cos(), 300.0 + 60.0 * a.sin())
        }))
        .unwrap();
        let f = stroke_features(&s).unwrap();
        assert!((f.net_turning.abs() - PI).abs() < 0.15, "{}", f.net_turning);
    }

    #[test]
    fn bbox_circle_extremes() {
        let s = Stroke::from_xy([(10.0, 20.0), (30.0, 5.0), (20.0, 40.0), (10.5, 20.0)]).unwrap();
        let sk = SketchSet::new(FrameId(1), vec![s], None).unwrap();
        let b = compose_bbox(&sk, SketchShape::Circle, (320, 240)).unwrap();
        assert_eq!(b, PixelBox::new(10.0, 5.0, 30.0, 40.0));
    }

    #[test]
    fn bbox_arrow_uses_shaft_endpoints_only() {
        let shaft = line((50.0, 50.0), (120.0, 90.0), 10);
        let h1 = Stroke::from_xy([(120.0, 90.0), (100.0, 95.0)]).unwrap();
        let h2 = Stroke::from_xy([(121.0, 89.0), (112.0, 70.0)]).unwrap();
        let sk = SketchSet::new(FrameId(1), vec![shaft, h1, h2], None).unwrap();
        let b = compose_bbox(&sk, SketchShape::Arrow, (320, 240)).unwrap();
        assert_eq!(b, PixelBox::new(50.0, 50.0, 120.0, 90.0));
    }

    #[test]
    fn bbox_point_is_padded_and_clamped() {
        let b = PixelBox::spanning(Point2::new(2.0, 50.0), Point2::new(2.0, 50.0));
        let f = b.finalize(320, 240).unwrap();
        assert_eq!(f, PixelBox::new(0.0, 46.0, 6.0, 54.0));
        let thin = PixelBox::new(10.0, 5.0, 10.0, 9.0);
        assert_eq!(thin.finalize(320, 240).unwrap(), thin);
    }

    #[test]
    fn bbox_outside_frame_is_rejected() {
        let s = line((400.0, 400.0), (500.0, 450.0), 3);
        let sk = SketchSet::new(FrameId(1), vec![s], None).unwrap();
        assert!(matches!(
            compose_bbox(&sk, SketchShape::Path, (320, 240)),
            Err(SketchError::OutsideFrame { .. })
        ));
    }

    #[test]
    fn sketch_json_shape() {
        let json = r#"{"frame_id":"7","label":null,"strokes":[[[1,2,0],[3,4,16]]]}"#;
        let sk: SketchSet = serde_json::from_str(json).unwrap();
        assert_eq!(sk.frame_id, FrameId(7));
        assert_eq!(sk.strokes[0].points()[1], StrokePoint::new(3.0, 4.0, 16.0));
        assert_eq!(serde_json::to_string(&sk).unwrap(), json.replace("[1,2,0]", "[1.0,2.0,0.0]").replace("[3,4,16]", "[3.0,4.0,16.0]"));
        assert!(serde_json::from_str::<SketchSet>(r#"{"frame_id":"1","strokes":[]}"#).is_err());
    }
}
