use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};

use super::body::VehicleBody;
use super::geometry::{Voxel, VOXEL_SIDE};
use super::pose::SensorPose;
use crate::error::{Error, Result};

/// Sensor frame (x forward, y left, z up) to optical frame (x right, y down, z forward).
pub const OPTICAL_FROM_SENSOR: Matrix3<f64> =
    Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);

/// Pinhole camera described by horizontal FOV and active resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    hfov: f64,
    width: u32,
    height: u32,
    max_range: f64,
}

impl CameraModel {
    pub fn new(hfov: f64, width: u32, height: u32, max_range: f64) -> Result<Self> {
        if !(hfov > 0.0 && hfov < PI) {
            return Err(Error::invalid("hfov", format!("{hfov} rad must be in (0, pi)")));
        }
        if width == 0 {
            return Err(Error::invalid("width", "must be at least 1 pixel"));
        }
        if height == 0 {
            return Err(Error::invalid("height", "must be at least 1 pixel"));
        }
        if !(max_range > 0.0 && max_range.is_finite()) {
            return Err(Error::invalid("max_range", format!("{max_range} m must be positive")));
        }
        let f = focal_length(hfov, width);
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::invalid("hfov", "focal length is not finite and positive"));
        }
        Ok(CameraModel {
            hfov,
            width,
            height,
            max_range,
        })
    }

    pub fn hfov(&self) -> f64 {
        self.hfov
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn focal_length(&self) -> f64 {
        focal_length(self.hfov, self.width)
    }
}

fn focal_length(hfov: f64, width: u32) -> f64 {
    width as f64 / (2.0 * (hfov / 2.0).tan())
}

/// Intrinsic matrix from HFOV and resolution. Both focal entries use the width.
pub fn intrinsics_from_spec(cam: &CameraModel) -> Matrix3<f64> {
    let f = cam.focal_length();
    Matrix3::new(
        f,
        0.0,
        cam.width as f64 / 2.0,
        0.0,
        f,
        cam.height as f64 / 2.0,
        0.0,
        0.0,
        1.0,
    )
}

fn ground_to_optical(pose: &SensorPose) -> Matrix3<f64> {
    OPTICAL_FROM_SENSOR * pose.rotation().transpose()
}

#[inline]
fn dehomogenize(k: &Matrix3<f64>, p: &Vector3<f64>) -> Vector2<f64> {
    let h = k * p;
    Vector2::new(h.x / h.z, h.y / h.z)
}

/// Pixel location of a ground point, or `None` when its depth is not positive.
pub fn project_point(p_ground: &Vector3<f64>, pose: &SensorPose, k: &Matrix3<f64>) -> Option<Vector2<f64>> {
    let p = ground_to_optical(pose) * (p_ground - pose.translation());
    (p.z > 0.0).then(|| dehomogenize(k, &p))
}

/// A camera at a fixed pose.
#[derive(Debug, Clone)]
pub struct CameraSensor {
    origin: Vector3<f64>,
    rotation: Matrix3<f64>,
    k: Matrix3<f64>,
    width: u32,
    height: u32,
    max_range: f64,
}

impl CameraSensor {
    pub fn new(model: &CameraModel, pose: &SensorPose) -> Self {
        CameraSensor {
            origin: *pose.translation(),
            rotation: ground_to_optical(pose),
            k: intrinsics_from_spec(model),
            width: model.width,
            height: model.height,
            max_range: model.max_range,
        }
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.k
    }

    /// Pixel centers covered by the voxel's projected hull.
    pub fn measure(&self, body: &VehicleBody, voxel: &Voxel) -> u32 {
        let rel = voxel.center - self.origin;
        let dist = rel.norm();
        if dist > self.max_range {
            return 0;
        }
        let center = self.rotation * rel;
        if center.z <= 0.0 {
            return 0;
        }

        let h = VOXEL_SIDE / 2.0;
        let axes = [
            self.rotation.column(0) * h,
            self.rotation.column(1) * h,
            self.rotation.column(2) * h,
        ];
        let mut pts = [Vector2::zeros(); 8];
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for (k, pt) in pts.iter_mut().enumerate() {
            let sx = if k & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if k & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if k & 4 == 0 { -1.0 } else { 1.0 };
            let c = center + axes[0] * sx + axes[1] * sy + axes[2] * sz;
            // Straddling the image plane: treated as invisible.
            if c.z <= 0.0 {
                return 0;
            }
            *pt = dehomogenize(&self.k, &c);
            xmin = xmin.min(pt.x);
            xmax = xmax.max(pt.x);
            ymin = ymin.min(pt.y);
            ymax = ymax.max(pt.y);
        }
        if xmax < 0.5 || ymax < 0.5 || xmin > self.width as f64 - 0.5 || ymin > self.height as f64 - 0.5 {
            return 0;
        }
        if body.blocks(&self.origin, &(rel / dist), dist) {
            return 0;
        }
        count_pixels_in_hull(&pts, self.width, self.height)
    }
}

pub fn camera_voxel_measurement(
    cam: &CameraModel,
    pose: &SensorPose,
    body: &VehicleBody,
    voxel: &Voxel,
) -> u32 {
    CameraSensor::new(cam, pose).measure(body, voxel)
}

#[inline]
fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(pts.len() * 2);
    for p in &pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

#[inline]
fn inside(hull: &[Vector2<f64>], p: &Vector2<f64>) -> bool {
    let n = hull.len();
    (0..n).all(|i| cross(&hull[i], &hull[(i + 1) % n], p) >= 0.0)
}

/// Number of pixel centers `(u + 0.5, v + 0.5)` inside the convex hull of `points`
/// (boundary included), clipped to a `width × height` image.
pub fn count_pixels_in_hull(points: &[Vector2<f64>], width: u32, height: u32) -> u32 {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0;
    }
    let ymin = hull.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let ymax = hull.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = ((ymin - 0.5).ceil().max(0.0)) as i64;
    let row_hi = ((ymax - 0.5).floor()).min(height as f64 - 1.0) as i64;
    let last_col = width as i64 - 1;
    let n = hull.len();

    let mut count = 0u32;
    for row in row_lo..=row_hi {
        let y = row as f64 + 0.5;
        let (mut xl, mut xr) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let a = hull[i];
            let b = hull[(i + 1) % n];
            if (a.y <= y && y <= b.y) || (b.y <= y && y <= a.y) {
                if a.y == b.y {
                    xl = xl.min(a.x.min(b.x));
                    xr = xr.max(a.x.max(b.x));
                } else {
                    let x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
                    xl = xl.min(x);
                    xr = xr.max(x);
                }
            }
        }
        if xl > xr {
            continue;
        }
        let mut lo = ((xl - 0.5).ceil() as i64).max(0);
        let mut hi = ((xr - 0.5).floor() as i64).min(last_col);
        let at = |u: i64| Vector2::new(u as f64 + 0.5, y);
        // Settle the span ends on the exact inside predicate.
        while lo <= hi && !inside(&hull, &at(lo)) {
            lo += 1;
        }
        while lo > 0 && lo <= last_col && inside(&hull, &at(lo - 1)) {
            lo -= 1;
        }
        while hi >= lo && !inside(&hull, &at(hi)) {
            hi -= 1;
        }
        while hi < last_col && hi >= lo && inside(&hull, &at(hi + 1)) {
            hi += 1;
        }
        if hi >= lo {
            count += (hi - lo + 1) as u32;
        }
    }
    count
}
