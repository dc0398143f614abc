//! Deterministic classification of a sketch into the five-shape vocabulary,
//! plus per-shape parameters consumed by perception and planning.
//!
//! All geometric thresholds live in [`ClassifierConfig`].

mod synth;

pub use synth::{
    draw_arc_arrow, draw_arrow, draw_circle, draw_u, generate_synthetic, jittered_sketch, single_stroke_arrow,
    SyntheticSample, SyntheticSpec, SYNTH_CANVAS,
};

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Point2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::sketch::{
    self, centroid, features_of_resampled, polyline_length, resample_stroke, turns, PixelBox,
    SketchError, SketchSet, Stroke, StrokeFeatures,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchShape {
    Circle,
    UShape,
    Arrow,
    Path,
    CircleAndArrow,
}

impl SketchShape {
    pub const ALL: [SketchShape; 5] = [
        SketchShape::Circle,
        SketchShape::UShape,
        SketchShape::Arrow,
        SketchShape::Path,
        SketchShape::CircleAndArrow,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SketchShape::Circle => "circle",
            SketchShape::UShape => "u_shape",
            SketchShape::Arrow => "arrow",
            SketchShape::Path => "path",
            SketchShape::CircleAndArrow => "circle_and_arrow",
        }
    }
}

impl fmt::Display for SketchShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SketchShape {
    type Err = String;

    /// Case-insensitive; accepts common spellings ("U-shape", "circle&arrow").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '&')
            .collect();
        match key.as_str() {
            "circle" => Ok(SketchShape::Circle),
            "ushape" | "u" => Ok(SketchShape::UShape),
            "arrow" => Ok(SketchShape::Arrow),
            "path" => Ok(SketchShape::Path),
            "circleandarrow" | "circle&arrow" | "circlearrow" | "c&a" | "ca" => {
                Ok(SketchShape::CircleAndArrow)
            }
            _ => Err(s.to_string()),
        }
    }
}

/// Side of the object the gripper reaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachDirection {
    Right,
    Left,
    Above,
    Front,
}

impl ApproachDirection {
    pub const ALL: [ApproachDirection; 4] = [
        ApproachDirection::Right,
        ApproachDirection::Left,
        ApproachDirection::Above,
        ApproachDirection::Front,
    ];

    /// Maps an image-space opening vector: up is Above, down is Front.
    /// Ties between axes resolve to Above.
    pub fn from_image_vector(v: Vector2<f64>) -> Self {
        let (ax, ay) = (v.x.abs(), v.y.abs());
        if ax == ay {
            ApproachDirection::Above
        } else if ay > ax {
            if v.y < 0.0 {
                ApproachDirection::Above
            } else {
                ApproachDirection::Front
            }
        } else if v.x < 0.0 {
            ApproachDirection::Left
        } else {
            ApproachDirection::Right
        }
    }

    /// Next direction for a +90° image rotation (clockwise on screen).
    pub fn rotated_cw(self) -> Self {
        match self {
            ApproachDirection::Above => ApproachDirection::Right,
            ApproachDirection::Right => ApproachDirection::Front,
            ApproachDirection::Front => ApproachDirection::Left,
            ApproachDirection::Left => ApproachDirection::Above,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub center: Point2<f64>,
    pub radius: f64,
}

impl CircleParams {
    pub fn bbox(&self) -> PixelBox {
        PixelBox::around(self.center, self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrowParams {
    pub start: Point2<f64>,
    pub end: Point2<f64>,
    /// Net turning of the shaft (radians, positive is clockwise on screen).
    pub shaft_turning: f64,
}

impl ArrowParams {
    pub fn bbox(&self) -> PixelBox {
        PixelBox::spanning(self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UShapeParams {
    pub opening: ApproachDirection,
    pub bbox: PixelBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub polyline: Vec<Point2<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeParams {
    pub circle: CircleParams,
    pub arrow: ArrowParams,
    /// Stroke indices forming the circle part.
    pub circle_strokes: Vec<usize>,
    /// Stroke indices forming the arrow part (shaft first).
    pub arrow_strokes: Vec<usize>,
}

/// Geometric parameters; only the field matching the shape is populated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShapeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle: Option<CircleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrow: Option<ArrowParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_shape: Option<UShapeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<CompositeParams>,
}

impl ShapeParams {
    /// The shape whose parameters are populated, if exactly one is.
    pub fn populated_shape(&self) -> Option<SketchShape> {
        let flags = [
            (self.circle.is_some(), SketchShape::Circle),
            (self.u_shape.is_some(), SketchShape::UShape),
            (self.arrow.is_some(), SketchShape::Arrow),
            (self.path.is_some(), SketchShape::Path),
            (self.composite.is_some(), SketchShape::CircleAndArrow),
        ];
        let mut set = flags.iter().filter(|(on, _)| *on);
        match (set.next(), set.next()) {
            (Some((_, s)), None) => Some(*s),
            _ => None,
        }
    }

    /// Arrow part of an arrow or circle-and-arrow sketch.
    pub fn any_arrow(&self) -> Option<&ArrowParams> {
        self.arrow
            .as_ref()
            .or(self.composite.as_ref().map(|c| &c.arrow))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub shape: SketchShape,
    pub params: ShapeParams,
}

/// Tunable thresholds of the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub resample_count: usize,
    /// Closed strokes have endpoint gap / arc length below this.
    pub closure_max: f64,
    /// Allowed deviation of a closed stroke's turning from 2π (rad).
    pub circle_turn_tolerance: f64,
    /// Allowed deviation of a U-shape's turning from π (rad).
    pub u_turn_tolerance: f64,
    /// U endpoint separation relative to the stroke's largest extent.
    pub u_separation_min: f64,
    pub u_separation_max: f64,
    /// Head strokes must be shorter than this fraction of the shaft.
    pub head_length_ratio: f64,
    /// Head strokes must start within this many pixels of a shaft endpoint.
    pub head_snap_px: f64,
    /// Corner angle (rad) counted as a backtrack in single-stroke arrows.
    pub backtrack_angle: f64,
    /// Trailing fraction of arc length searched for backtracks.
    pub backtrack_tail_fraction: f64,
    pub backtrack_min_events: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            resample_count: sketch::RESAMPLE_COUNT,
            closure_max: 0.2,
            circle_turn_tolerance: 0.8,
            u_turn_tolerance: 0.7,
            u_separation_min: 0.3,
            u_separation_max: 1.3,
            head_length_ratio: 0.35,
            head_snap_px: 12.0,
            backtrack_angle: 1.7,
            backtrack_tail_fraction: 0.25,
            backtrack_min_events: 2,
        }
    }
}

/// Result of arrow detection over a list of open strokes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowDetection {
    pub start: Point2<f64>,
    pub end: Point2<f64>,
    /// Index (into the detector's input) of the shaft stroke.
    pub shaft: usize,
    /// Indices (into the detector's input) of head strokes; empty for the
    /// single-stroke idiom.
    pub head_strokes: Vec<usize>,
    pub shaft_turning: f64,
}

struct Measured {
    index: usize,
    resampled: Vec<Point2<f64>>,
    features: StrokeFeatures,
    closed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Classifier {
    pub config: ClassifierConfig,
}

impl Classifier {
    pub fn new(config: ClassifierConfig) -> Self {
        Self { config }
    }

    fn measure(&self, index: usize, stroke: &Stroke) -> Result<Measured, SketchError> {
        let resampled = resample_stroke(stroke, self.config.resample_count)?.xy();
        let features = features_of_resampled(&resampled);
        let closed = features.closure_ratio < self.config.closure_max && {
            // Winding about the centroid of the stroke closed by its endpoint
            // gap: a multiple of 2π that equals the net turning of a loop
            // and is blind to jitter at the seam.
            let winding = winding_about(&resampled, features.centroid);
            (winding.abs() - TAU).abs() <= self.config.circle_turn_tolerance
        };
        Ok(Measured {
            index,
            resampled,
            features,
            closed,
        })
    }

    pub fn classify(&self, sketch: &SketchSet) -> Result<Classification, SketchError> {
        if sketch.strokes.is_empty() {
            return Err(SketchError::EmptySketch);
        }
        let measured = sketch
            .strokes
            .iter()
            .enumerate()
            .map(|(i, s)| self.measure(i, s))
            .collect::<Result<Vec<_>, _>>()?;
        let (closed, open): (Vec<&Measured>, Vec<&Measured>) =
            measured.iter().partition(|m| m.closed);

        let open_strokes: Vec<Stroke> = open.iter().map(|m| sketch.strokes[m.index].clone()).collect();
        let arrow = if open_strokes.is_empty() {
            None
        } else {
            self.detect_arrowhead(&open_strokes)
        };

        let mut params = ShapeParams::default();
        let shape = match (closed.first(), arrow) {
            (Some(circle), Some(arrow)) => {
                let mut arrow_strokes = vec![open[arrow.shaft].index];
                arrow_strokes.extend(arrow.head_strokes.iter().map(|&h| open[h].index));
                params.composite = Some(CompositeParams {
                    circle: fit_circle(&circle.resampled),
                    arrow: ArrowParams {
                        start: arrow.start,
                        end: arrow.end,
                        shaft_turning: arrow.shaft_turning,
                    },
                    circle_strokes: vec![circle.index],
                    arrow_strokes,
                });
                SketchShape::CircleAndArrow
            }
            (None, Some(arrow)) => {
                params.arrow = Some(ArrowParams {
                    start: arrow.start,
                    end: arrow.end,
                    shaft_turning: arrow.shaft_turning,
                });
                SketchShape::Arrow
            }
            _ if measured.len() == 1 && closed.len() == 1 => {
                params.circle = Some(fit_circle(&closed[0].resampled));
                SketchShape::Circle
            }
            _ if measured.len() == 1 && self.is_u_shape(&measured[0]) => {
                params.u_shape = Some(UShapeParams {
                    opening: opening_of(&measured[0].resampled),
                    bbox: bbox_of(&sketch.strokes[0].xy()),
                });
                SketchShape::UShape
            }
            _ => {
                params.path = Some(path_params(sketch, self.config.resample_count)?);
                SketchShape::Path
            }
        };
        Ok(Classification { shape, params })
    }

    fn is_u_shape(&self, m: &Measured) -> bool {
        if m.closed {
            return false;
        }
        let turning = m.features.net_turning.abs();
        if (turning - PI).abs() > self.config.u_turn_tolerance {
            return false;
        }
        let b = bbox_of(&m.resampled);
        let extent = b.width().max(b.height());
        if extent <= 0.0 {
            return false;
        }
        let sep = m.features.endpoint_vector.norm() / extent;
        (self.config.u_separation_min..=self.config.u_separation_max).contains(&sep)
    }

    /// Finds an arrow among open strokes: either a shaft with one or two short
    /// head strokes at one end, or a single stroke that doubles back on itself
    /// near its end.
    pub fn detect_arrowhead(&self, strokes: &[Stroke]) -> Option<ArrowDetection> {
        if strokes.is_empty() {
            return None;
        }
        let lengths: Vec<f64> = strokes.iter().map(Stroke::arc_length).collect();
        let shaft = (0..strokes.len()).fold(0, |best, i| {
            if lengths[i] > lengths[best] {
                i
            } else {
                best
            }
        });

        if strokes.len() >= 2 {
            if let Some(found) = self.multi_stroke_arrow(strokes, &lengths, shaft) {
                return Some(found);
            }
        }

        let mut order: Vec<usize> = (0..strokes.len()).collect();
        order.sort_by(|a, b| lengths[*b].total_cmp(&lengths[*a]));
        order
            .into_iter()
            .find_map(|i| self.backtrack_arrow(&strokes[i], i))
    }

    fn multi_stroke_arrow(
        &self,
        strokes: &[Stroke],
        lengths: &[f64],
        shaft: usize,
    ) -> Option<ArrowDetection> {
        let shaft_stroke = &strokes[shaft];
        let (tail, tip) = (shaft_stroke.first(), shaft_stroke.last());
        // (stroke index, distance) attached at the shaft start / end
        let mut at_start = Vec::new();
        let mut at_end = Vec::new();
        for (i, s) in strokes.iter().enumerate() {
            if i == shaft || lengths[i] >= self.config.head_length_ratio * lengths[shaft] {
                continue;
            }
            let near = |p: Point2<f64>| (s.first() - p).norm().min((s.last() - p).norm());
            let (ds, de) = (near(tail), near(tip));
            if ds.min(de) > self.config.head_snap_px {
                continue;
            }
            if de <= ds {
                at_end.push((i, de));
            } else {
                at_start.push((i, ds));
            }
        }
        // Prefer the drawn end when both ends collect candidates equally.
        let (mut heads, start, end) = if at_start.len() > at_end.len() {
            (at_start, tip, tail)
        } else {
            (at_end, tail, tip)
        };
        if heads.is_empty() {
            return None;
        }
        heads.sort_by(|a, b| a.1.total_cmp(&b.1));
        heads.truncate(2);
        let mut head_strokes: Vec<usize> = heads.into_iter().map(|(i, _)| i).collect();
        head_strokes.sort_unstable();
        let resampled = resample_stroke(shaft_stroke, self.config.resample_count)
            .ok()?
            .xy();
        let mut shaft_turning: f64 = turns(&resampled, false).iter().map(|t| t.angle).sum();
        if end == tail {
            // shaft drawn tip-to-tail
            shaft_turning = -shaft_turning;
        }
        Some(ArrowDetection {
            start,
            end,
            shaft,
            head_strokes,
            shaft_turning,
        })
    }

    fn backtrack_arrow(&self, stroke: &Stroke, index: usize) -> Option<ArrowDetection> {
        let pts = resample_stroke(stroke, self.config.resample_count).ok()?.xy();
        let total = polyline_length(&pts);
        let tail_from = total * (1.0 - self.config.backtrack_tail_fraction);
        let spacing = total / (pts.len() - 1) as f64;
        let corners = corners(&pts, spacing * 1.5);
        let mut events = corners
            .iter()
            .filter(|c| c.angle.abs() > self.config.backtrack_angle && c.arc >= tail_from);
        let first = events.next()?;
        if 1 + events.count() < self.config.backtrack_min_events {
            return None;
        }
        let apex = first.point;
        let apex_vertex = first.vertex.min(pts.len() - 1);
        let shaft_turning = turns(&pts[..=apex_vertex], false)
            .iter()
            .map(|t| t.angle)
            .sum();
        Some(ArrowDetection {
            start: pts[0],
            end: apex,
            shaft: index,
            head_strokes: Vec::new(),
            shaft_turning,
        })
    }
}

/// Sharp direction change possibly spread over adjacent resampled vertices.
#[derive(Debug, Clone, Copy)]
struct Corner {
    angle: f64,
    /// Arc position of the corner (px from the stroke start).
    arc: f64,
    point: Point2<f64>,
    vertex: usize,
}

/// Merges pairs of adjacent same-sign turns whose vertices lie within
/// `window` px of arc. Uniform resampling rarely lands on the true apex, so a
/// sharp corner usually shows up as two partial turns.
fn corners(pts: &[Point2<f64>], window: f64) -> Vec<Corner> {
    let mut arc = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        arc[i] = arc[i - 1] + (pts[i] - pts[i - 1]).norm();
    }
    let ts = turns(pts, false);
    let mut out: Vec<Corner> = Vec::new();
    let mut i = 0;
    while i < ts.len() {
        let mut j = i + 1;
        while j < ts.len()
            && j - i < 2
            && ts[j].angle.signum() == ts[i].angle.signum()
            && arc[ts[j].vertex] - arc[ts[i].vertex] <= window
        {
            j += 1;
        }
        let group = &ts[i..j];
        let angle: f64 = group.iter().map(|t| t.angle).sum();
        let weight: f64 = group.iter().map(|t| t.angle.abs()).sum();
        let (mut p, mut a) = (Vector2::zeros(), 0.0);
        for t in group {
            p += pts[t.vertex].coords * (t.angle.abs() / weight);
            a += arc[t.vertex] * (t.angle.abs() / weight);
        }
        let vertex = group
            .iter()
            .max_by(|x, y| x.angle.abs().total_cmp(&y.angle.abs()))
            .map(|t| t.vertex)
            .unwrap_or(group[0].vertex);
        out.push(Corner {
            angle,
            arc: a,
            point: Point2::from(p),
            vertex,
        });
        i = j;
    }
    out
}

/// Signed angle swept by the closed polygon `pts` around `c`.
fn winding_about(pts: &[Point2<f64>], c: Point2<f64>) -> f64 {
    (0..pts.len())
        .map(|i| {
            let (a, b) = (pts[i] - c, pts[(i + 1) % pts.len()] - c);
            sketch::signed_angle(a, b)
        })
        .sum()
}

fn bbox_of(points: &[Point2<f64>]) -> PixelBox {
    PixelBox::from_points(points.iter().copied()).expect("non-empty stroke")
}

fn opening_of(resampled: &[Point2<f64>]) -> ApproachDirection {
    let c = centroid(resampled);
    let mid = Point2::from((resampled[0].coords + resampled[resampled.len() - 1].coords) * 0.5);
    ApproachDirection::from_image_vector(mid - c)
}

fn path_params(sketch: &SketchSet, n: usize) -> Result<PathParams, SketchError> {
    let joined: Vec<_> = sketch
        .strokes
        .iter()
        .flat_map(|s| s.points().iter().copied())
        .collect();
    let mut t = 0.0;
    let retimed: Vec<_> = joined
        .iter()
        .map(|p| {
            t += 1.0;
            sketch::StrokePoint::new(p.x, p.y, t)
        })
        .collect();
    let stroke = Stroke::new(retimed)?;
    Ok(PathParams {
        polyline: resample_stroke(&stroke, n)?.xy(),
    })
}

/// Algebraic least-squares circle fit.
pub fn fit_circle(points: &[Point2<f64>]) -> CircleParams {
    let c = centroid(points);
    // Solve x² + y² + a·x + b·y + k = 0 around the centroid for stability.
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let (x, y) = (p.x - c.x, p.y - c.y);
        let row = Vector3::new(x, y, 1.0);
        ata += row * row.transpose();
        atb += row * -(x * x + y * y);
    }
    match ata.lu().solve(&atb) {
        Some(sol) => {
            let (a, b, k) = (sol[0], sol[1], sol[2]);
            let r2 = (a * a + b * b) / 4.0 - k;
            CircleParams {
                center: Point2::new(c.x - a / 2.0, c.y - b / 2.0),
                radius: r2.max(0.0).sqrt(),
            }
        }
        None => {
            let r = points.iter().map(|p| (p - c).norm()).sum::<f64>() / points.len() as f64;
            CircleParams {
                center: c,
                radius: r,
            }
        }
    }
}

/// Classifies with the default thresholds.
pub fn classify_sketch(sketch: &SketchSet) -> Result<Classification, SketchError> {
    Classifier::default().classify(sketch)
}

/// Arrow detection with the default thresholds.
pub fn detect_arrowhead(strokes: &[Stroke]) -> Option<ArrowDetection> {
    Classifier::default().detect_arrowhead(strokes)
}

/// Opening direction of a U-shaped stroke, from the arc centroid toward the
/// midpoint of its endpoints.
pub fn u_opening_direction(stroke: &Stroke) -> Result<ApproachDirection, SketchError> {
    let pts = resample_stroke(stroke, sketch::RESAMPLE_COUNT)?.xy();
    Ok(opening_of(&pts))
}

/// Start and end of the arrow drawn in `strokes`. Falls back to the longest
/// stroke's first and last points when no head is recognized.
pub fn arrow_endpoints(strokes: &[Stroke]) -> (Point2<f64>, Point2<f64>) {
    if let Some(a) = detect_arrowhead(strokes) {
        return (a.start, a.end);
    }
    let longest = strokes
        .iter()
        .max_by(|a, b| a.arc_length().total_cmp(&b.arc_length()))
        .expect("non-empty strokes");
    (longest.first(), longest.last())
}

/// Splits a circle-and-arrow sketch into its circle part and arrow part.
pub fn split_composite(
    sketch: &SketchSet,
    params: &CompositeParams,
) -> Result<(SketchSet, SketchSet), SketchError> {
    Ok((
        sketch.subset(&params.circle_strokes)?,
        sketch.subset(&params.arrow_strokes)?,
    ))
}

/// Parameters for `shape` even when the classifier would pick another shape,
/// e.g. when a remote model names the shape.
pub fn params_for_shape(sketch: &SketchSet, shape: SketchShape) -> Result<ShapeParams, SketchError> {
    let classifier = Classifier::default();
    let own = classifier.classify(sketch)?;
    if own.shape == shape {
        return Ok(own.params);
    }
    let n = classifier.config.resample_count;
    let all: Vec<Point2<f64>> = sketch.all_points().collect();
    let mut params = ShapeParams::default();
    match shape {
        SketchShape::Circle => params.circle = Some(fit_circle(&all)),
        SketchShape::UShape => {
            let stroke = &sketch.strokes[0];
            params.u_shape = Some(UShapeParams {
                opening: u_opening_direction(stroke)?,
                bbox: bbox_of(&all),
            });
        }
        SketchShape::Arrow => {
            let detection = classifier.detect_arrowhead(&sketch.strokes);
            let (start, end) = arrow_endpoints(&sketch.strokes);
            params.arrow = Some(ArrowParams {
                start,
                end,
                shaft_turning: detection.map(|d| d.shaft_turning).unwrap_or(0.0),
            });
        }
        SketchShape::Path => params.path = Some(path_params(sketch, n)?),
        SketchShape::CircleAndArrow => {
            // Longest stroke with the best closure is the circle; the rest is the arrow.
            let mut scored: Vec<(usize, f64)> = sketch
                .strokes
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let f = sketch::stroke_features(s).map(|f| f.closure_ratio).unwrap_or(f64::MAX);
                    (i, f)
                })
                .collect();
            scored.sort_by(|a, b| a.1.total_cmp(&b.1));
            let circle_index = scored[0].0;
            let rest: Vec<usize> = (0..sketch.strokes.len()).filter(|&i| i != circle_index).collect();
            if rest.is_empty() {
                return Err(SketchError::EmptySketch);
            }
            let arrow_strokes: Vec<Stroke> = rest.iter().map(|&i| sketch.strokes[i].clone()).collect();
            let (start, end) = arrow_endpoints(&arrow_strokes);
            params.composite = Some(CompositeParams {
                circle: fit_circle(&sketch.strokes[circle_index].xy()),
                arrow: ArrowParams {
                    start,
                    end,
                    shaft_turning: 0.0,
                },
                circle_strokes: vec![circle_index],
                arrow_strokes: rest,
            });
        }
    }
    Ok(params)
}
