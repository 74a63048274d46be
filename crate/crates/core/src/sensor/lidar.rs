use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use super::body::VehicleBody;
use super::geometry::{Voxel, VOXEL_SIDE};
use super::pose::SensorPose;
use crate::error::{Error, Result};

/// Spinning LiDAR: one beam per (channel, azimuth sample).
#[derive(Debug, Clone, PartialEq)]
pub struct LidarModel {
    channels: Vec<f64>,
    azimuth_step: f64,
    max_range: f64,
}

impl LidarModel {
    /// `channels` are zenith angles in radians measured from the sensor's +z axis.
    pub fn new(channels: Vec<f64>, azimuth_step: f64, max_range: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("channels", "at least one channel is required"));
        }
        if let Some(bad) = channels.iter().find(|t| !(**t > 0.0 && **t < PI)) {
            return Err(Error::invalid(
                "channels",
                format!("zenith angle {bad} rad is outside (0, pi)"),
            ));
        }
        if !(azimuth_step > 0.0 && azimuth_step <= TAU) {
            return Err(Error::invalid(
                "azimuth_step",
                format!("{azimuth_step} rad must be in (0, 2pi]"),
            ));
        }
        if !(max_range > 0.0 && max_range.is_finite()) {
            return Err(Error::invalid("max_range", format!("{max_range} m must be positive")));
        }
        Ok(LidarModel {
            channels,
            azimuth_step,
            max_range,
        })
    }

    pub fn channels(&self) -> &[f64] {
        &self.channels
    }

    pub fn azimuth_step(&self) -> f64 {
        self.azimuth_step
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn azimuth_samples(&self) -> usize {
        ((TAU / self.azimuth_step).round() as usize).max(1)
    }

    pub fn beam_count(&self) -> usize {
        self.channels.len() * self.azimuth_samples()
    }
}

/// Ground-frame unit direction of the beam at zenith `theta`, azimuth `phi`.
pub fn beam_direction(theta: f64, phi: f64, pose: &SensorPose) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    pose.rotation() * Vector3::new(st * cp, st * sp, ct)
}

/// A LiDAR at a fixed pose with its beam table in the ground frame.
///
/// Beams are stored channel-major with channels sorted by zenith so a voxel's
/// angular window maps to contiguous index ranges.
#[derive(Debug, Clone)]
pub struct LidarSensor {
    pose: SensorPose,
    max_range: f64,
    azimuth_step: f64,
    azimuth_samples: usize,
    zeniths: Vec<f64>,
    directions: Vec<Vector3<f64>>,
}

/// Bounding-sphere radius of a voxel plus slack for rounding in the window math.
const VOXEL_RADIUS: f64 = VOXEL_SIDE * 0.866_025_403_784_438_7 * (1.0 + 1e-9) + 1e-12;
const WINDOW_SLACK: f64 = 1e-9;

impl LidarSensor {
    pub fn new(model: &LidarModel, pose: &SensorPose) -> Self {
        let mut zeniths = model.channels.clone();
        zeniths.sort_by(f64::total_cmp);
        let n_az = model.azimuth_samples();
        let mut directions = Vec::with_capacity(zeniths.len() * n_az);
        for &theta in &zeniths {
            for j in 0..n_az {
                directions.push(beam_direction(theta, j as f64 * model.azimuth_step, pose));
            }
        }
        LidarSensor {
            pose: *pose,
            max_range: model.max_range,
            azimuth_step: model.azimuth_step,
            azimuth_samples: n_az,
            zeniths,
            directions,
        }
    }

    pub fn pose(&self) -> &SensorPose {
        &self.pose
    }

    #[inline]
    fn beam_hits(&self, dir: &Vector3<f64>, voxel: &Voxel, body: &VehicleBody) -> bool {
        let origin = self.pose.translation();
        match voxel.aabb().ray_hit(origin, dir) {
            Some(t) if t <= self.max_range => !body.blocks(origin, dir, t),
            _ => false,
        }
    }

    /// Beam hits on `voxel`, testing only beams inside the voxel's angular window.
    pub fn measure(&self, body: &VehicleBody, voxel: &Voxel) -> u32 {
        let local = self.pose.to_sensor(&voxel.center);
        let dist = local.norm();
        if dist - VOXEL_RADIUS > self.max_range {
            return 0;
        }
        if dist <= VOXEL_RADIUS {
            return self.measure_exhaustive(body, voxel);
        }

        let half = (VOXEL_RADIUS / dist).asin() + WINDOW_SLACK;
        let theta = (local.z / dist).clamp(-1.0, 1.0).acos();
        let ch_lo = self.zeniths.partition_point(|&z| z < theta - half);
        let ch_hi = self.zeniths.partition_point(|&z| z <= theta + half);
        if ch_lo >= ch_hi {
            return 0;
        }

        let n = self.azimuth_samples;
        let horiz = local.x.hypot(local.y);
        let (k_lo, k_hi) = if horiz <= VOXEL_RADIUS {
            (0i64, n as i64 - 1)
        } else {
            let w = (VOXEL_RADIUS / horiz).asin() + WINDOW_SLACK;
            let phi = local.y.atan2(local.x);
            // One extra sample each side covers the wrap-around phase error when
            // the step does not divide 2π exactly.
            let lo = ((phi - w) / self.azimuth_step).floor() as i64 - 1;
            let hi = ((phi + w) / self.azimuth_step).ceil() as i64 + 1;
            if hi - lo + 1 >= n as i64 {
                (0, n as i64 - 1)
            } else {
                (lo, hi)
            }
        };

        let mut count = 0;
        for ch in ch_lo..ch_hi {
            let row = &self.directions[ch * n..(ch + 1) * n];
            for k in k_lo..=k_hi {
                let j = k.rem_euclid(n as i64) as usize;
                if self.beam_hits(&row[j], voxel, body) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Beam hits on `voxel`, testing every beam.
    pub fn measure_exhaustive(&self, body: &VehicleBody, voxel: &Voxel) -> u32 {
        self.directions
            .iter()
            .filter(|d| self.beam_hits(d, voxel, body))
            .count() as u32
    }
}

pub fn lidar_voxel_measurement(
    lidar: &LidarModel,
    pose: &SensorPose,
    body: &VehicleBody,
    voxel: &Voxel,
) -> u32 {
    LidarSensor::new(lidar, pose).measure(body, voxel)
}
