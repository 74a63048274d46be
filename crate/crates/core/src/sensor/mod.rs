//! Geometric sensor simulation: how many beam hits or pixel centers a voxel gets.
//!
//! Ground frame: x forward, y left, z up. Sensor frames share that layout before
//! mounting rotation; the camera optical frame is z forward, x right, y down.

mod body;
mod camera;
mod geometry;
mod lidar;
mod pose;

pub use body::{ray_blocked, VehicleBody, OCCLUSION_EPSILON};
pub use camera::{
    camera_voxel_measurement, count_pixels_in_hull, intrinsics_from_spec, project_point,
    CameraModel, CameraSensor, OPTICAL_FROM_SENSOR,
};
pub use geometry::{Aabb, Voxel, VOXEL_SIDE};
pub use lidar::{beam_direction, lidar_voxel_measurement, LidarModel, LidarSensor};
pub use pose::SensorPose;

/// Sensor specification of either modality.
#[derive(Debug, Clone, PartialEq)]
pub enum SensorSpec {
    Lidar(LidarModel),
    Camera(CameraModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Lidar,
    Camera,
}

impl SensorSpec {
    pub fn modality(&self) -> Modality {
        match self {
            SensorSpec::Lidar(_) => Modality::Lidar,
            SensorSpec::Camera(_) => Modality::Camera,
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modality::Lidar => f.write_str("lidar"),
            Modality::Camera => f.write_str("camera"),
        }
    }
}

/// A sensor spec bound to a pose, with per-placement tables precomputed.
#[derive(Debug, Clone)]
pub enum PlacedSensor {
    Lidar(LidarSensor),
    Camera(CameraSensor),
}

impl PlacedSensor {
    pub fn new(spec: &SensorSpec, pose: &SensorPose) -> Self {
        match spec {
            SensorSpec::Lidar(l) => PlacedSensor::Lidar(LidarSensor::new(l, pose)),
            SensorSpec::Camera(c) => PlacedSensor::Camera(CameraSensor::new(c, pose)),
        }
    }

    pub fn measure(&self, body: &VehicleBody, voxel: &Voxel) -> u32 {
        match self {
            PlacedSensor::Lidar(l) => l.measure(body, voxel),
            PlacedSensor::Camera(c) => c.measure(body, voxel),
        }
    }
}
