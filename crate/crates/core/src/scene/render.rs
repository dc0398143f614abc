use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use super::geom::{Pose, Pose2};
use super::objects::Scene;
use crate::interpret::ConstraintState;
use crate::sketch::FrameId;

const FLOOR_COLOR: [u8; 3] = [170, 170, 165];
const SKY_COLOR: [u8; 3] = [215, 225, 235];
const AMBIENT: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: rgb.repeat((width * height) as usize),
        }
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        3 * (y as usize * self.width as usize + x as usize)
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.offset(x, y);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().expect("png header");
            w.write_image_data(&self.data).expect("png data");
        }
        out
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, String> {
        let dec = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = dec.read_info().map_err(|e| e.to_string())?;
        let mut buf = vec![0; reader.output_buffer_size().ok_or("png too large")?];
        let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
        if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
            return Err(format!("unsupported png format {:?}/{:?}", info.color_type, info.bit_depth));
        }
        buf.truncate(info.buffer_size());
        Ok(Self {
            width: info.width,
            height: info.height,
            data: buf,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub base: Pose2,
    /// End-effector pose in the world frame.
    pub ee: Pose,
    pub constraint: ConstraintState,
}

/// One rendered observation: color, z-depth (0 = no hit) and instance ids
/// (0 = floor or background), all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFrame {
    pub frame_id: FrameId,
    pub rgb: RgbImage,
    pub depth: Vec<f64>,
    pub instance: Vec<u32>,
    pub camera: CameraModel,
    pub robot_state: RobotState,
    /// Ids of graspable objects; the rest of the instance ids are background
    /// for object detection.
    pub graspable_ids: Vec<u32>,
}

impl ObservationFrame {
    pub fn width(&self) -> u32 {
        self.rgb.width
    }

    pub fn height(&self) -> u32 {
        self.rgb.height
    }

    fn index(&self, u: u32, v: u32) -> usize {
        v as usize * self.width() as usize + u as usize
    }

    pub fn depth_at(&self, u: u32, v: u32) -> f64 {
        self.depth[self.index(u, v)]
    }

    pub fn instance_at(&self, u: u32, v: u32) -> u32 {
        self.instance[self.index(u, v)]
    }

    pub fn is_graspable(&self, id: u32) -> bool {
        self.graspable_ids.binary_search(&id).is_ok()
    }
}

fn shade(color: [u8; 3], n: &Vector3<f64>, light: &Vector3<f64>) -> [u8; 3] {
    let k = AMBIENT + (1.0 - AMBIENT) * n.dot(light).max(0.0);
    color.map(|c| (c as f64 * k).round().clamp(0.0, 255.0) as u8)
}

/// Ray casts every pixel through integer pixel coordinates against the
/// scene primitives and the floor plane z = 0.
pub fn render(scene: &Scene, camera: &CameraModel, robot_state: &RobotState, frame_id: FrameId) -> ObservationFrame {
    let (w, h) = (camera.width(), camera.height());
    let light = Vector3::new(0.3, 0.2, 1.0).normalize();
    let mut rgb = RgbImage::filled(w, h, SKY_COLOR);
    let mut depth = vec![0.0; (w * h) as usize];
    let mut instance = vec![0u32; (w * h) as usize];
    for v in 0..h {
        for u in 0..w {
            let (origin, dir) = camera.ray(u as f64, v as f64);
            let mut best: Option<(f64, u32, [u8; 3])> = None;
            if dir.z < 0.0 {
                let t = -origin.z / dir.z;
                if t > 0.0 {
                    best = Some((t, 0, shade(FLOOR_COLOR, &Vector3::z(), &light)));
                }
            }
            for o in &scene.objects {
                if let Some((t, n)) = o.ray_hit(&origin, &dir) {
                    if best.is_none_or(|(bt, _, _)| t < bt) {
                        best = Some((t, o.id, shade(o.color, &n, &light)));
                    }
                }
            }
            if let Some((t, id, color)) = best {
                let i = (v * w + u) as usize;
                depth[i] = t;
                instance[i] = id;
                rgb.put(u, v, color);
            }
        }
    }
    let mut graspable_ids = scene.graspable_ids();
    graspable_ids.sort_unstable();
    ObservationFrame {
        frame_id,
        rgb,
        depth,
        instance,
        camera: *camera,
        robot_state: *robot_state,
        graspable_ids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{CameraMount, Intrinsics, ObjectKind, SceneObject};

    fn state() -> RobotState {
        RobotState {
            base: Pose2::default(),
            ee: Pose::identity(),
            constraint: ConstraintState::free(),
        }
    }

    #[test]
    fn floor_center_depth_is_analytic() {
        let mount = CameraMount {
            height: 1.2,
            pitch: 30f64.to_radians(),
            ..Default::default()
        };
        let cam = mount.camera(&Pose2::default());
        let f = render(&Scene::new(vec![]).unwrap(), &cam, &state(), FrameId(1));
        let d = f.depth_at(160, 120);
        assert!((d - 1.2 / 30f64.to_radians().sin()).abs() < 1e-6);
        assert_eq!(f.instance_at(160, 120), 0);
        assert!(f.depth_at(160, 0) > d);
        let level = CameraMount { pitch: 0.1, ..mount }.camera(&Pose2::default());
        let f = render(&Scene::new(vec![]).unwrap(), &level, &state(), FrameId(2));
        // top row looks above the horizon
        assert_eq!(f.depth_at(160, 0), 0.0);
    }

    #[test]
    fn box_on_axis() {
        let mount = CameraMount {
            pitch: 0.0,
            height: 0.5,
            intrinsics: Intrinsics::default(),
            ..Default::default()
        };
        let cam = mount.camera(&Pose2::default());
        let cube = SceneObject {
            id: 7,
            name: None,
            kind: ObjectKind::Box,
            dims: [1.0, 1.0, 1.0],
            pose: Pose::at([2.0, 0.0, 0.5]),
            color: [0, 200, 0],
            graspable: true,
            support: None,
        };
        let scene = Scene::new(vec![cube]).unwrap();
        let f = render(&scene, &cam, &state(), FrameId(1));
        assert_eq!(f.instance_at(160, 120), 7);
        assert!((f.depth_at(160, 120) - 1.5).abs() < 1e-12);
        let g = render(&scene, &cam, &state(), FrameId(1));
        assert_eq!(f, g);
    }

    #[test]
    fn png_round_trip() {
        let mut img = RgbImage::filled(5, 4, [1, 2, 3]);
        img.put(4, 3, [255, 0, 9]);
        let back = RgbImage::from_png(&img.to_png()).unwrap();
        assert_eq!(img, back);
    }
}
