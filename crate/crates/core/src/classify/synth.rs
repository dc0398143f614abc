//! Seeded synthetic sketches with ground-truth labels.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point2, Rotation2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    ApproachDirection, ArrowParams, CircleParams, CompositeParams, PathParams, ShapeParams,
    SketchShape, UShapeParams,
};
use crate::sketch::{resample_stroke, FrameId, PixelBox, SketchSet, Stroke, StrokePoint};

/// Drawing speed used to timestamp synthetic points.
const PX_PER_MS: f64 = 0.5;

/// Nominal canvas the generator draws on.
pub const SYNTH_CANVAS: (u32, u32) = (1024, 1024);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub shape: SketchShape,
    pub jitter_sigma: f64,
    pub scale: f64,
    pub rotation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(shape: SketchShape, jitter_sigma: f64, scale: f64, rotation: f64, seed: u64) -> Self {
        Self {
            shape,
            jitter_sigma,
            scale,
            rotation,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub sketch: SketchSet,
    pub shape: SketchShape,
    pub params: ShapeParams,
}

struct Canvas {
    center: Point2<f64>,
    rot: Rotation2<f64>,
}

impl Canvas {
    fn place(&self, v: Vector2<f64>) -> Point2<f64> {
        self.center + self.rot * v
    }
}

/// Deterministic sketch of `spec.shape`. Jitter is added per point after the
/// canonical polyline is built; ground truth refers to the canonical shape.
pub fn generate_synthetic(spec: &SyntheticSpec) -> SyntheticSample {
    assert!(spec.jitter_sigma >= 0.0 && spec.scale > 0.0, "invalid synthetic spec");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let offset = Vector2::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
    let canvas = Canvas {
        center: Point2::new(512.0, 512.0) + offset,
        rot: Rotation2::new(spec.rotation),
    };
    let s = spec.scale;
    let mut params = ShapeParams::default();

    let canonical: Vec<Vec<Point2<f64>>> = match spec.shape {
        SketchShape::Circle => {
            let start = rng.random_range(0.0..TAU);
            let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            params.circle = Some(CircleParams {
                center: canvas.center,
                radius: s,
            });
            vec![circle_points(&canvas, Vector2::zeros(), s, start, dir)]
        }
        SketchShape::UShape => {
            let pts = u_points(&canvas, s);
            let opening = canvas.rot * Vector2::new(0.0, -1.0);
            params.u_shape = Some(UShapeParams {
                opening: ApproachDirection::from_image_vector(opening),
                bbox: PixelBox::from_points(pts.iter().copied()).unwrap(),
            });
            vec![pts]
        }
        SketchShape::Arrow => {
            let half = Vector2::new(s, 0.0);
            let strokes = arrow_strokes(&canvas, -half, half);
            params.arrow = Some(ArrowParams {
                start: canvas.place(-half),
                end: canvas.place(half),
                shaft_turning: 0.0,
            });
            strokes
        }
        SketchShape::Path => {
            let pts = path_points(&canvas, s, rng.random_range(0..3));
            params.path = Some(PathParams { polyline: Vec::new() });
            vec![pts]
        }
        SketchShape::CircleAndArrow => {
            let r = 0.6 * s;
            let c = Vector2::new(-s, 0.0);
            let start = c + Vector2::new(r + 0.1 * s, 0.0);
            let end = start + Vector2::new(1.5 * s, 0.0);
            let circle = circle_points(&canvas, c, r, rng.random_range(0.0..TAU), 1.0);
            let mut strokes = vec![circle];
            strokes.extend(arrow_strokes(&canvas, start, end));
            params.composite = Some(CompositeParams {
                circle: CircleParams {
                    center: canvas.place(c),
                    radius: r,
                },
                arrow: ArrowParams {
                    start: canvas.place(start),
                    end: canvas.place(end),
                    shaft_turning: 0.0,
                },
                circle_strokes: vec![0],
                arrow_strokes: vec![1, 2, 3],
            });
            strokes
        }
    };

    let noise = Normal::new(0.0, spec.jitter_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let strokes: Vec<Stroke> = canonical
        .iter()
        .map(|pts| {
            let timed = timestamps(pts);
            let jittered = pts
                .iter()
                .zip(timed)
                .map(|(p, t)| {
                    let (dx, dy) = if spec.jitter_sigma > 0.0 {
                        (noise.sample(&mut rng), noise.sample(&mut rng))
                    } else {
                        (0.0, 0.0)
                    };
                    StrokePoint::new(p.x + dx, p.y + dy, t)
                })
                .collect();
            Stroke::new(jittered).expect("synthetic strokes are non-degenerate")
        })
        .collect();

    let sketch = SketchSet::new(FrameId(spec.seed), strokes, None).expect("non-empty");
    if let Some(path) = params.path.as_mut() {
        path.polyline = resample_stroke(&Stroke::from_xy(canonical[0].iter().map(|p| (p.x, p.y))).unwrap(), 64)
            .unwrap()
            .xy();
    }
    SyntheticSample {
        sketch,
        shape: spec.shape,
        params,
    }
}

fn timestamps(pts: &[Point2<f64>]) -> Vec<f64> {
    let mut t = 0.0;
    let mut out = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            t += (p - pts[i - 1]).norm() / PX_PER_MS;
        }
        out.push(t);
    }
    out
}

fn circle_points(canvas: &Canvas, c: Vector2<f64>, r: f64, start: f64, dir: f64) -> Vec<Point2<f64>> {
    (0..64)
        .map(|i| {
            let a = start + dir * TAU * i as f64 / 63.0;
            canvas.place(c + Vector2::new(r * a.cos(), r * a.sin()))
        })
        .collect()
}

/// "∪": two straight arms joined by a half circle at the bottom. Arms are
/// single segments so jitter barely tilts the end directions.
fn u_points(canvas: &Canvas, r: f64) -> Vec<Point2<f64>> {
    let arm = 0.8 * r;
    let mut pts = vec![canvas.place(Vector2::new(-r, -arm))];
    for i in 0..=28 {
        let a = PI - PI * i as f64 / 28.0;
        pts.push(canvas.place(Vector2::new(r * a.cos(), r * a.sin())));
    }
    pts.push(canvas.place(Vector2::new(r, -arm)));
    pts
}

/// Shaft from `tail` to `tip` (canonical frame) plus two head strokes drawn
/// outward from the tip.
fn arrow_strokes(canvas: &Canvas, tail: Vector2<f64>, tip: Vector2<f64>) -> Vec<Vec<Point2<f64>>> {
    let shaft: Vec<_> = (0..16)
        .map(|i| canvas.place(tail + (tip - tail) * (i as f64 / 15.0)))
        .collect();
    let len = (tip - tail).norm();
    let dir = (tip - tail) / len;
    let heads = [150f64.to_radians(), -150f64.to_radians()].map(|a| {
        let barb = Rotation2::new(a) * dir * (0.25 * len);
        (0..4)
            .map(|i| canvas.place(tip + barb * (i as f64 / 3.0)))
            .collect()
    });
    let [h1, h2] = heads;
    vec![shaft, h1, h2]
}

/// Point count giving roughly 10 px between canonical points.
fn count_for(length: f64) -> usize {
    ((length / 10.0).ceil() as usize).clamp(12, 160)
}

fn path_points(canvas: &Canvas, s: f64, variant: u32) -> Vec<Point2<f64>> {
    match variant {
        // spiral turning 3π
        0 => {
            let n = count_for(8.25 * s);
            (0..n)
                .map(|i| {
                    let th = 3.0 * PI * i as f64 / (n - 1) as f64;
                    let r = s * (0.5 + 0.25 * th / PI);
                    canvas.place(Vector2::new(r * th.cos(), r * th.sin()))
                })
                .collect()
        }
        // S-curve
        1 => {
            let n = count_for(2.6 * s);
            (0..n)
                .map(|i| {
                    let f = i as f64 / (n - 1) as f64;
                    canvas.place(Vector2::new(2.0 * s * (f - 0.5), 0.5 * s * (TAU * f).sin()))
                })
                .collect()
        }
        // gentle arc turning π/3
        _ => {
            let n = count_for(2.1 * s);
            (0..n)
                .map(|i| {
                    let a = -PI / 6.0 + (PI / 3.0) * i as f64 / (n - 1) as f64;
                    let r = 2.0 * s;
                    canvas.place(Vector2::new(r * a.sin(), r - r * a.cos()))
                })
                .collect()
        }
    }
}

/// One stroke: tail → tip → barb → tip → barb, the "drawn-back head" idiom.
/// Returns the stroke and the tip (apex) position.
pub fn single_stroke_arrow(tail: Point2<f64>, tip: Point2<f64>) -> (Stroke, Point2<f64>) {
    let len = (tip - tail).norm();
    let dir = (tip - tail) / len;
    let barb = |a: f64| tip + Rotation2::new(a) * dir * (0.07 * len);
    let mut pts: Vec<Point2<f64>> = (0..16).map(|i| tail + (tip - tail) * (i as f64 / 15.0)).collect();
    pts.extend([barb(150f64.to_radians()), tip, barb(-150f64.to_radians())]);
    let times = timestamps(&pts);
    let stroke = Stroke::new(
        pts.iter()
            .zip(times)
            .map(|(p, t)| StrokePoint::new(p.x, p.y, t))
            .collect(),
    )
    .expect("non-degenerate arrow");
    (stroke, tip)
}

/// Circle of radius `r` around `center`, starting at angle `start`.
pub fn draw_circle(center: Point2<f64>, r: f64, start: f64, clockwise: bool) -> Vec<Point2<f64>> {
    let canvas = Canvas {
        center,
        rot: Rotation2::identity(),
    };
    circle_points(&canvas, Vector2::zeros(), r, start, if clockwise { 1.0 } else { -1.0 })
}

/// U of half-width `r` centered on `center`, open toward `opening`.
pub fn draw_u(center: Point2<f64>, r: f64, opening: Vector2<f64>) -> Vec<Point2<f64>> {
    let angle = opening.y.atan2(opening.x) - (-1.0f64).atan2(0.0);
    let canvas = Canvas {
        center,
        rot: Rotation2::new(angle),
    };
    u_points(&canvas, r)
}

/// Straight arrow as shaft plus two head strokes.
pub fn draw_arrow(tail: Point2<f64>, tip: Point2<f64>) -> Vec<Vec<Point2<f64>>> {
    let canvas = Canvas {
        center: Point2::origin(),
        rot: Rotation2::identity(),
    };
    arrow_strokes(&canvas, tail.coords, tip.coords)
}

/// Arrow whose shaft is a circular arc of radius `r` about `center`, from
/// angle `start` sweeping `sweep` radians (positive is clockwise on screen).
pub fn draw_arc_arrow(center: Point2<f64>, r: f64, start: f64, sweep: f64) -> Vec<Vec<Point2<f64>>> {
    let n = count_for(r * sweep.abs()).max(16);
    let at = |a: f64| center + Vector2::new(r * a.cos(), r * a.sin());
    let shaft: Vec<Point2<f64>> = (0..n).map(|i| at(start + sweep * i as f64 / (n - 1) as f64)).collect();
    let end = start + sweep;
    let tip = at(end);
    let tangent = Vector2::new(-end.sin(), end.cos()) * sweep.signum();
    let len = 0.5 * r;
    let heads = [150f64.to_radians(), -150f64.to_radians()].map(|a| {
        let barb = Rotation2::new(a) * tangent * len;
        (0..4).map(|i| tip + barb * (i as f64 / 3.0)).collect::<Vec<_>>()
    });
    let [h1, h2] = heads;
    vec![shaft, h1, h2]
}

/// Timestamped strokes with N(0, sigma) jitter per point.
pub fn jittered_sketch(
    strokes: &[Vec<Point2<f64>>],
    sigma: f64,
    seed: u64,
    frame_id: FrameId,
    label: Option<String>,
) -> Result<SketchSet, crate::sketch::SketchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let strokes = strokes
        .iter()
        .map(|pts| {
            let times = timestamps(pts);
            let jittered = pts
                .iter()
                .zip(times)
                .map(|(p, t)| {
                    let (dx, dy) = if sigma > 0.0 {
                        (noise.sample(&mut rng), noise.sample(&mut rng))
                    } else {
                        (0.0, 0.0)
                    };
                    StrokePoint::new(p.x + dx, p.y + dy, t)
                })
                .collect();
            Stroke::new(jittered)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SketchSet::new(frame_id, strokes, label)
}
