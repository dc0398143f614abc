use std::collections::BTreeMap;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::render::ObservationFrame;
use super::SceneError;
use crate::sketch::{resample_stroke, PixelBox, Stroke};

/// Pixel counts per instance id over the integer pixels inside `b`.
pub fn instance_histogram(frame: &ObservationFrame, b: &PixelBox) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let u0 = b.min_x.ceil().max(0.0) as u32;
    let v0 = b.min_y.ceil().max(0.0) as u32;
    let u1 = b.max_x.floor().min(w - 1.0);
    let v1 = b.max_y.floor().min(h - 1.0);
    if u1 < 0.0 || v1 < 0.0 {
        return counts;
    }
    for v in v0..=v1 as u32 {
        for u in u0..=u1 as u32 {
            *counts.entry(frame.instance_at(u, v)).or_insert(0) += 1;
        }
    }
    counts
}

fn largest(counts: BTreeMap<u32, usize>, keep: impl Fn(u32) -> bool) -> Result<u32, SceneError> {
    // BTreeMap iterates ids ascending, so `>` keeps the smaller id on ties.
    let mut best: Option<(u32, usize)> = None;
    for (id, n) in counts {
        if id != 0 && keep(id) && best.is_none_or(|(_, bn)| n > bn) {
            best = Some((id, n));
        }
    }
    best.map(|(id, _)| id).ok_or(SceneError::NoObjectInBox)
}

/// Graspable object covering the most pixels inside the box.
pub fn detect_object(frame: &ObservationFrame, b: &PixelBox) -> Result<u32, SceneError> {
    largest(instance_histogram(frame, b), |id| frame.is_graspable(id))
}

/// Any non-floor object covering the most pixels inside the box.
pub fn detect_surface(frame: &ObservationFrame, b: &PixelBox) -> Result<u32, SceneError> {
    largest(instance_histogram(frame, b), |_| true)
}

/// World point seen at integer pixel (u, v).
pub fn backproject(u: u32, v: u32, frame: &ObservationFrame) -> Result<Point3<f64>, SceneError> {
    let d = frame.depth_at(u, v);
    if d <= 0.0 {
        return Err(SceneError::InvalidDepth { u, v });
    }
    Ok(frame.camera.world_point(u as f64, v as f64, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathConfig {
    pub samples: usize,
    pub min_spacing: f64,
    pub min_floor_fraction: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            samples: 64,
            min_spacing: 0.10,
            min_floor_fraction: 0.5,
        }
    }
}

/// Depth at a fractional pixel on the floor. Inverse depth is affine in the
/// image for a plane, so bilinear interpolation of 1/z is exact there. All
/// four neighbours must be valid floor pixels.
fn floor_depth(frame: &ObservationFrame, x: f64, y: f64) -> Option<f64> {
    let (w, h) = (frame.width(), frame.height());
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return None;
    }
    let (u0, v0) = (x.floor() as u32, y.floor() as u32);
    let (u1, v1) = ((u0 + 1).min(w - 1), (v0 + 1).min(h - 1));
    let (fx, fy) = (x - u0 as f64, y - v0 as f64);
    let mut inv = 0.0;
    for (u, v, wgt) in [
        (u0, v0, (1.0 - fx) * (1.0 - fy)),
        (u1, v0, fx * (1.0 - fy)),
        (u0, v1, (1.0 - fx) * fy),
        (u1, v1, fx * fy),
    ] {
        let d = frame.depth_at(u, v);
        if frame.instance_at(u, v) != 0 || d <= 0.0 {
            return None;
        }
        inv += wgt / d;
    }
    Some(1.0 / inv)
}

/// Floor waypoints under a drawn path, in drawing order, at least
/// `min_spacing` apart.
pub fn path_from_sketch(stroke: &Stroke, frame: &ObservationFrame, cfg: &PathConfig) -> Result<Vec<Point3<f64>>, SceneError> {
    let pts = resample_stroke(stroke, cfg.samples)?.xy();
    let floor: Vec<Point3<f64>> = pts
        .iter()
        .filter_map(|p| {
            let d = floor_depth(frame, p.x, p.y)?;
            let w = frame.camera.world_point(p.x, p.y, d);
            Some(Point3::new(w.x, w.y, 0.0))
        })
        .collect();
    if (floor.len() as f64) < cfg.min_floor_fraction * pts.len() as f64 {
        return Err(SceneError::PathOffFloor {
            valid: floor.len(),
            total: pts.len(),
        });
    }
    let mut out: Vec<Point3<f64>> = Vec::new();
    for p in &floor {
        if out.last().is_none_or(|q| (p - q).norm() >= cfg.min_spacing) {
            out.push(*p);
        }
    }
    // Keep the drawn end point when it was swallowed by the spacing rule.
    if let (Some(end), true) = (floor.last(), out.len() >= 2) {
        let n = out.len();
        if out[n - 1] != *end && (end - out[n - 2]).norm() >= cfg.min_spacing {
            out[n - 1] = *end;
        }
    }
    if out.len() < 2 {
        return Err(SceneError::TooShort);
    }
    Ok(out)
}
