use nalgebra::Point2;

use super::InterpretError;
use crate::scene::{ObservationFrame, RgbImage};
use crate::sketch::SketchSet;

pub const SKETCH_COLOR: [u8; 3] = [255, 0, 0];
pub const SKETCH_WIDTH_PX: f64 = 3.0;

fn segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Copy of the frame's color image with the strokes drawn as red polylines.
pub fn overlay(frame: &ObservationFrame, sketch: &SketchSet) -> Result<RgbImage, InterpretError> {
    if sketch.frame_id != frame.frame_id {
        return Err(InterpretError::FrameMismatch {
            sketch: sketch.frame_id,
            frame: frame.frame_id,
        });
    }
    let mut img = frame.rgb.clone();
    let r = SKETCH_WIDTH_PX / 2.0;
    let (w, h) = (img.width as i64, img.height as i64);
    for stroke in &sketch.strokes {
        let pts = stroke.xy();
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let x0 = ((a.x.min(b.x) - r).floor() as i64).max(0);
            let x1 = ((a.x.max(b.x) + r).ceil() as i64).min(w - 1);
            let y0 = ((a.y.min(b.y) - r).floor() as i64).max(0);
            let y1 = ((a.y.max(b.y) + r).ceil() as i64).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if segment_distance(Point2::new(x as f64, y as f64), a, b) <= r {
                        img.put(x as u32, y as u32, SKETCH_COLOR);
                    }
                }
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::ConstraintState;
    use crate::scene::{CameraModel, Intrinsics, Pose, Pose2, RobotState};
    use crate::sketch::{FrameId, Stroke};

    fn gray_frame() -> ObservationFrame {
        ObservationFrame {
            frame_id: FrameId(4),
            rgb: RgbImage::filled(64, 48, [128, 128, 128]),
            depth: vec![0.0; 64 * 48],
            instance: vec![0; 64 * 48],
            camera: CameraModel::new(
                Intrinsics {
                    fx: 50.0,
                    fy: 50.0,
                    cx: 32.0,
                    cy: 24.0,
                    width: 64,
                    height: 48,
                },
                Pose::identity(),
            ),
            robot_state: RobotState {
                base: Pose2::default(),
                ee: Pose::identity(),
                constraint: ConstraintState::free(),
            },
            graspable_ids: vec![],
        }
    }

    fn changed(a: &RgbImage, b: &RgbImage) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for y in 0..a.height {
            for x in 0..a.width {
                if a.get(x, y) != b.get(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    #[test]
    fn only_stroke_pixels_change() {
        let f = gray_frame();
        let s1 = Stroke::from_xy([(5.0, 5.0), (40.0, 20.0)]).unwrap();
        let s2 = Stroke::from_xy([(10.0, 40.0), (60.0, 40.0), (60.0, 10.0)]).unwrap();
        let sk = SketchSet::new(FrameId(4), vec![s1.clone(), s2.clone()], None).unwrap();
        let img = overlay(&f, &sk).unwrap();
        assert_eq!(f.rgb, RgbImage::filled(64, 48, [128, 128, 128]));
        let diff = changed(&f.rgb, &img);
        let total_len = s1.arc_length() + s2.arc_length();
        assert!(diff.len() as f64 >= total_len);
        for (x, y) in diff {
            assert_eq!(img.get(x, y), SKETCH_COLOR);
            let p = Point2::new(x as f64, y as f64);
            let near = [&s1, &s2].iter().any(|s| {
                s.xy().windows(2).any(|w| segment_distance(p, w[0], w[1]) <= 3.0)
            });
            assert!(near, "pixel {x},{y} is far from every stroke");
        }
        assert_eq!(overlay(&f, &sk).unwrap(), img);
    }

    #[test]
    fn wrong_frame_is_rejected() {
        let sk = SketchSet::new(FrameId(5), vec![Stroke::from_xy([(1.0, 1.0), (9.0, 9.0)]).unwrap()], None).unwrap();
        assert!(matches!(overlay(&gray_frame(), &sk), Err(InterpretError::FrameMismatch { .. })));
    }
}
