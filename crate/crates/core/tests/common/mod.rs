//! Shared fixtures for the integration suites: brute-force measurement oracles
//! written without the library's geometry, random scene builders, and a few
//! canned configurations.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use perception_entropy::entropy::ApCurve;
use perception_entropy::evaluator::{Configuration, SensorEntry};
use perception_entropy::prior::{ClassPrior, Histogram2D, PerceptionSpace, PriorField};
use perception_entropy::sensor::{Aabb, CameraModel, LidarModel, Modality, SensorPose, SensorSpec, VehicleBody};
use rand::Rng;

pub type V3 = [f64; 3];

// ---------------------------------------------------------------------------
// Oracles

/// Sensor-to-ground rotation `Rz(yaw) Ry(pitch) Rx(roll)`, row-major.
pub fn rotation(roll: f64, pitch: f64, yaw: f64) -> [[f64; 3]; 3] {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
}

fn mul(m: &[[f64; 3]; 3], v: V3) -> V3 {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn mul_t(m: &[[f64; 3]; 3], v: V3) -> V3 {
    [0, 1, 2].map(|i| m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2])
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Parametric interval of `o + t·d` inside the box `[lo, hi]`.
pub fn slab(o: V3, d: V3, lo: V3, hi: V3) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if d[k] == 0.0 {
            if o[k] < lo[k] || o[k] > hi[k] {
                return None;
            }
        } else {
            let a = (lo[k] - o[k]) / d[k];
            let b = (hi[k] - o[k]) / d[k];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

pub struct OraclePose {
    pub t: V3,
    pub rot: [[f64; 3]; 3],
}

impl OraclePose {
    pub fn new(t: V3, rpy: V3) -> Self {
        OraclePose {
            t,
            rot: rotation(rpy[0], rpy[1], rpy[2]),
        }
    }
}

fn blocked(o: V3, d: V3, t_max: f64, body: &[(V3, V3)]) -> bool {
    body.iter()
        .any(|(lo, hi)| matches!(slab(o, d, *lo, *hi), Some((a, b)) if a < t_max && b > 1e-6))
}

/// Beams through a 0.1 m cube, tested one by one.
pub fn lidar_oracle(
    channels: &[f64],
    azimuth_step: f64,
    max_range: f64,
    pose: &OraclePose,
    body: &[(V3, V3)],
    center: V3,
) -> u32 {
    let lo = center.map(|c| c - 0.05);
    let hi = center.map(|c| c + 0.05);
    let n = ((TAU / azimuth_step).round() as usize).max(1);
    let mut hits = 0;
    for &theta in channels {
        for j in 0..n {
            let phi = j as f64 * azimuth_step;
            let local = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let d = mul(&pose.rot, local);
            let Some((t0, t1)) = slab(pose.t, d, lo, hi) else { continue };
            if t1 < 0.0 {
                continue;
            }
            let t = t0.max(0.0);
            if t <= max_range && !blocked(pose.t, d, t, body) {
                hits += 1;
            }
        }
    }
    hits
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull by gift wrapping.
pub fn gift_wrap(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let start = (0..pts.len())
        .min_by(|&i, &j| pts[i][0].total_cmp(&pts[j][0]).then(pts[i][1].total_cmp(&pts[j][1])))
        .unwrap();
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut hull = Vec::new();
    let mut p = start;
    loop {
        hull.push(pts[p]);
        let mut q = if p == 0 { 1 } else { 0 };
        for r in 0..pts.len() {
            let c = cross2(pts[p], pts[q], pts[r]);
            if c < 0.0 || (c == 0.0 && dist(pts[p], pts[r]) > dist(pts[p], pts[q])) {
                q = r;
            }
        }
        p = q;
        if pts[p] == pts[start] || hull.len() > pts.len() {
            break;
        }
    }
    hull
}

/// Pixel centers inside the projected cube, visiting every pixel of the clipped bounding box.
#[allow(clippy::too_many_arguments)]
pub fn camera_oracle(
    hfov: f64,
    width: u32,
    height: u32,
    max_range: f64,
    pose: &OraclePose,
    body: &[(V3, V3)],
    center: V3,
) -> u32 {
    let rel = sub(center, pose.t);
    let dist = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
    if dist > max_range {
        return 0;
    }
    let f = width as f64 / (2.0 * (hfov / 2.0).tan());
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let mut pts = Vec::with_capacity(8);
    for k in 0..8 {
        let corner = [
            center[0] + if k & 1 == 0 { -0.05 } else { 0.05 },
            center[1] + if k & 2 == 0 { -0.05 } else { 0.05 },
            center[2] + if k & 4 == 0 { -0.05 } else { 0.05 },
        ];
        let s = mul_t(&pose.rot, sub(corner, pose.t));
        // Optical axes: right = -y, down = -z, forward = x.
        let (x, y, z) = (-s[1], -s[2], s[0]);
        if z <= 0.0 {
            return 0;
        }
        pts.push([f * x / z + cx, f * y / z + cy]);
    }
    if mul_t(&pose.rot, rel)[0] <= 0.0 {
        return 0;
    }
    if blocked(pose.t, rel.map(|c| c / dist), dist, body) {
        return 0;
    }
    let hull = gift_wrap(&pts);
    if hull.len() < 3 {
        return 0;
    }
    let min = |k: usize| pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
    let max = |k: usize| pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
    let u0 = (min(0).floor().max(0.0)) as u32;
    let u1 = (max(0).ceil().min(width as f64)) as u32;
    let v0 = (min(1).floor().max(0.0)) as u32;
    let v1 = (max(1).ceil().min(height as f64)) as u32;
    let mut count = 0;
    for v in v0..v1 {
        for u in u0..u1 {
            let c = [u as f64 + 0.5, v as f64 + 0.5];
            if (0..hull.len()).all(|i| cross2(hull[i], hull[(i + 1) % hull.len()], c) >= 0.0) {
                count += 1;
            }
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Scene builders

pub fn v3(a: V3) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

pub fn curves() -> BTreeMap<Modality, ApCurve> {
    BTreeMap::from([
        (Modality::Lidar, ApCurve::lidar_default()),
        (Modality::Camera, ApCurve::camera_default()),
    ])
}

pub fn random_body<R: Rng>(rng: &mut R, around: V3, count: usize) -> Vec<(V3, V3)> {
    (0..count)
        .map(|_| {
            let lo: V3 = [0, 1, 2].map(|k| around[k] + rng.gen_range(-1.5..1.0));
            let hi: V3 = [0, 1, 2].map(|k| lo[k] + rng.gen_range(0.05..0.8));
            (lo, hi)
        })
        .collect()
}

pub fn body_of(boxes: &[(V3, V3)]) -> VehicleBody {
    VehicleBody::new(boxes.iter().map(|(lo, hi)| Aabb::new(v3(*lo), v3(*hi)).unwrap()).collect())
}

/// Contiguous `n³` block of 0.1 m voxel centers starting at `origin`.
pub fn voxel_block(origin: V3, n: usize) -> Vec<V3> {
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push([
                    origin[0] + 0.1 * i as f64,
                    origin[1] + 0.1 * j as f64,
                    origin[2] + 0.1 * k as f64,
                ]);
            }
        }
    }
    out
}

pub struct LidarScene {
    pub channels: Vec<f64>,
    pub azimuth_step: f64,
    pub max_range: f64,
    pub t: V3,
    pub rpy: V3,
    pub body: Vec<(V3, V3)>,
    pub voxels: Vec<V3>,
}

/// At most 8 channels, azimuth step of at least 10°, at most 20³ voxels around the sensor.
pub fn lidar_scene<R: Rng>(rng: &mut R) -> LidarScene {
    let channels = (0..rng.gen_range(1..=8))
        .map(|_| rng.gen_range(30f64..150.0).to_radians())
        .collect();
    let t: V3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)];
    let rpy = [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6), rng.gen_range(-PI + 1e-6..PI)];
    let n = rng.gen_range(6..=20);
    let half = 0.05 * n as f64;
    let origin = [0, 1, 2].map(|k| t[k] - half + rng.gen_range(-0.5..0.5));
    let n_boxes = rng.gen_range(0..=2);
    LidarScene {
        channels,
        azimuth_step: rng.gen_range(10f64..40.0).to_radians(),
        max_range: rng.gen_range(0.4..2.5),
        t,
        rpy,
        body: random_body(rng, t, n_boxes),
        voxels: voxel_block(origin, n),
    }
}

impl LidarScene {
    pub fn model(&self) -> LidarModel {
        LidarModel::new(self.channels.clone(), self.azimuth_step, self.max_range).unwrap()
    }

    pub fn pose(&self) -> SensorPose {
        SensorPose::new(v3(self.t), self.rpy[0], self.rpy[1], self.rpy[2]).unwrap()
    }

    pub fn oracle(&self, center: V3) -> u32 {
        let pose = OraclePose::new(self.t, self.rpy);
        lidar_oracle(&self.channels, self.azimuth_step, self.max_range, &pose, &self.body, center)
    }
}

pub struct CameraScene {
    pub hfov: f64,
    pub width: u32,
    pub height: u32,
    pub max_range: f64,
    pub t: V3,
    pub rpy: V3,
    pub body: Vec<(V3, V3)>,
    pub voxels: Vec<V3>,
}

/// Small sensor, a block of up to 12³ voxels placed ahead of it.
pub fn camera_scene<R: Rng>(rng: &mut R) -> CameraScene {
    let t: V3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)];
    let rpy = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-PI + 1e-6..PI)];
    let rot = rotation(rpy[0], rpy[1], rpy[2]);
    let ahead = mul(&rot, [rng.gen_range(0.6..3.0), rng.gen_range(-0.8..0.8), rng.gen_range(-0.6..0.6)]);
    let n = rng.gen_range(4..=12);
    let half = 0.05 * n as f64;
    let origin = [0, 1, 2].map(|k| t[k] + ahead[k] - half);
    let n_boxes = rng.gen_range(0..=2);
    CameraScene {
        hfov: rng.gen_range(20f64..150.0).to_radians(),
        width: rng.gen_range(8..=96),
        height: rng.gen_range(6..=72),
        max_range: rng.gen_range(1.0..5.0),
        t,
        rpy,
        body: random_body(rng, t, n_boxes),
        voxels: voxel_block(origin, n),
    }
}

impl CameraScene {
    pub fn model(&self) -> CameraModel {
        CameraModel::new(self.hfov, self.width, self.height, self.max_range).unwrap()
    }

    pub fn pose(&self) -> SensorPose {
        SensorPose::new(v3(self.t), self.rpy[0], self.rpy[1], self.rpy[2]).unwrap()
    }

    pub fn oracle(&self, center: V3) -> u32 {
        let pose = OraclePose::new(self.t, self.rpy);
        camera_oracle(self.hfov, self.width, self.height, self.max_range, &pose, &self.body, center)
    }
}

// ---------------------------------------------------------------------------
// Canned configurations

pub fn lidar_entry(name: &str, channels_deg: &[f64], step_deg: f64, range: f64, pose: SensorPose, group: u32) -> SensorEntry {
    SensorEntry {
        name: name.into(),
        spec: SensorSpec::Lidar(
            LidarModel::new(
                channels_deg.iter().map(|d| d.to_radians()).collect(),
                step_deg.to_radians(),
                range,
            )
            .unwrap(),
        ),
        pose,
        fusion_group: group,
    }
}

pub fn camera_entry(name: &str, hfov_deg: f64, width: u32, height: u32, range: f64, pose: SensorPose, group: u32) -> SensorEntry {
    SensorEntry {
        name: name.into(),
        spec: SensorSpec::Camera(CameraModel::new(hfov_deg.to_radians(), width, height, range).unwrap()),
        pose,
        fusion_group: group,
    }
}

pub fn pose(t: V3, pitch_deg: f64, yaw_deg: f64) -> SensorPose {
    SensorPose::new(v3(t), 0.0, pitch_deg.to_radians(), yaw_deg.to_radians()).unwrap()
}

/// 16 channels from 75° to 105° zenith in 2° steps.
pub fn sixteen_channels() -> Vec<f64> {
    (0..16).map(|i| 75.0 + 2.0 * i as f64).collect()
}

/// Roof lidars and a front and rear camera on a car-sized body.
pub fn four_sensor_rig() -> Configuration {
    let car = VehicleBody::new(vec![
        Aabb::new(Vector3::new(-2.3, -0.9, 0.2), Vector3::new(2.3, 0.9, 1.0)).unwrap(),
        Aabb::new(Vector3::new(-1.2, -0.8, 1.0), Vector3::new(1.0, 0.8, 1.5)).unwrap(),
    ]);
    let ch = sixteen_channels();
    Configuration::new(
        vec![
            lidar_entry("roof_front", &ch, 0.2, 120.0, pose([0.8, 0.0, 1.7], 2.0, 0.0), 0),
            lidar_entry("roof_rear", &ch, 0.2, 120.0, pose([-1.0, 0.0, 1.7], 1.0, 180.0), 0),
            camera_entry("front", 60.0, 1920, 1080, 150.0, pose([1.1, 0.0, 1.45], 3.0, 0.0), 1),
            camera_entry("rear", 90.0, 1920, 1080, 100.0, pose([-1.3, 0.0, 1.45], 3.0, 180.0), 2),
        ],
        car,
        curves(),
    )
    .unwrap()
}

/// Narrow camera at `(0, 0, 4)`, hotspot class covering grid samples at x = 40.25.
pub struct Hotspot {
    pub config: Configuration,
    pub field: PriorField,
    pub space: PerceptionSpace,
    /// Pitch that puts the weighted sample centroid on the optical axis.
    pub aim: f64,
}

pub fn hotspot(initial_pitch_deg: f64) -> Hotspot {
    let space = PerceptionSpace::default();
    let hist = Histogram2D::new(40.0, -0.5, 0.5, 1, 2, vec![1.0, 1.0]).unwrap();
    let field = PriorField::new(
        space,
        vec![ClassPrior {
            class_name: "hotspot".into(),
            histogram: hist,
            z_extent: (0.0, 3.0),
        }],
        vec![],
    )
    .unwrap();
    let hfov = 2.0 * (1920.0f64 / (2.0 * 14058.0)).atan();
    let config = Configuration::new(
        vec![camera_entry("mast", hfov.to_degrees(), 1920, 1080, 200.0, pose([0.0, 0.0, 4.0], initial_pitch_deg, 0.0), 0)],
        VehicleBody::empty(),
        curves(),
    )
    .unwrap();
    // Weighted samples: x = 40.25, y = ±0.25, z = 0.25..2.75 in 0.5 steps.
    let aim = (4.0f64 - 1.5).atan2(40.25);
    Hotspot {
        config,
        field,
        space,
        aim,
    }
}
