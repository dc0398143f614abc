use nalgebra::{Point2, Point3, Vector3};

use crate::classify::ArrowParams;
use crate::interpret::SceneProbe;
use crate::scene::{backproject, detect_object, ObservationFrame};
use crate::sketch::PixelBox;

fn pixel(frame: &ObservationFrame, p: Point2<f64>) -> Option<(u32, u32)> {
    let (u, v) = (p.x.round(), p.y.round());
    if u < 0.0 || v < 0.0 || u >= frame.width() as f64 || v >= frame.height() as f64 {
        return None;
    }
    Some((u as u32, v as u32))
}

/// World point and instance id seen at `p`. Pixels without depth borrow the
/// nearest valid neighbour within 2 px.
pub fn surface_point(frame: &ObservationFrame, p: Point2<f64>) -> Option<(Point3<f64>, u32)> {
    let (u, v) = pixel(frame, p)?;
    let mut best: Option<(i64, u32, u32)> = None;
    for dv in -2i64..=2 {
        for du in -2i64..=2 {
            let (x, y) = (u as i64 + du, v as i64 + dv);
            if x < 0 || y < 0 || x >= frame.width() as i64 || y >= frame.height() as i64 {
                continue;
            }
            let (x, y) = (x as u32, y as u32);
            let d2 = du * du + dv * dv;
            if frame.depth_at(x, y) > 0.0 && best.is_none_or(|(bd, _, _)| d2 < bd) {
                best = Some((d2, x, y));
            }
        }
    }
    let (_, x, y) = best?;
    Some((backproject(x, y, frame).ok()?, frame.instance_at(x, y)))
}

/// Graspable object covering most of a small box around `p`.
pub fn object_at(frame: &ObservationFrame, p: Point2<f64>, half: f64) -> Option<u32> {
    detect_object(frame, &PixelBox::around(p, half)).ok()
}

/// Object an arrow acts on: near its start, else anywhere along it.
pub fn target_for_arrow(frame: &ObservationFrame, arrow: &ArrowParams, half: f64) -> Option<u32> {
    object_at(frame, arrow.start, half).or_else(|| detect_object(frame, &arrow.bbox()).ok())
}

/// Horizontal world displacement from the arrow start to its end.
pub fn arrow_displacement(frame: &ObservationFrame, arrow: &ArrowParams) -> Option<Vector3<f64>> {
    let (a, _) = surface_point(frame, arrow.start)?;
    let (b, _) = surface_point(frame, arrow.end)?;
    Some(Vector3::new(b.x - a.x, b.y - a.y, 0.0))
}

fn instance_bbox(frame: &ObservationFrame, id: u32) -> Option<PixelBox> {
    let mut pts = Vec::new();
    for v in 0..frame.height() {
        for u in 0..frame.width() {
            if frame.instance_at(u, v) == id {
                pts.push(Point2::new(u as f64, v as f64));
            }
        }
    }
    PixelBox::from_points(pts)
}

/// Scene facts about an arrow used by the rule-based interpreter.
pub fn scene_probe(frame: &ObservationFrame, arrow: &ArrowParams, half: f64) -> SceneProbe {
    let source = object_at(frame, arrow.start, half);
    let end_id = pixel(frame, arrow.end).map(|(u, v)| frame.instance_at(u, v)).unwrap_or(0);
    let end_is_other = end_id != 0 && Some(end_id) != source;
    let ratio = source
        .and_then(|id| instance_bbox(frame, id))
        .map(|b| {
            let diag = (b.width().powi(2) + b.height().powi(2)).sqrt().max(1.0);
            (arrow.end - arrow.start).norm() / diag
        })
        .unwrap_or(0.0);
    SceneProbe {
        start_on_object: source.is_some(),
        end_on_object: end_is_other && frame.is_graspable(end_id),
        end_image_dy: arrow.end.y - arrow.start.y,
        end_on_support: end_is_other,
        end_distance_ratio: ratio,
    }
}
