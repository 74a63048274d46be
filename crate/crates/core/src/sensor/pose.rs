use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Mounting pose of a sensor in the ground frame.
///
/// The rotation maps sensor-frame vectors to the ground frame and is composed as
/// `Rz(yaw) · Ry(pitch) · Rx(roll)`. Positive pitch tilts the sensor's +x axis
/// toward the ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    translation: Vector3<f64>,
    roll: f64,
    pitch: f64,
    yaw: f64,
    rotation: Matrix3<f64>,
}

impl SensorPose {
    /// Angles in radians, each in (−π, π].
    pub fn new(translation: Vector3<f64>, roll: f64, pitch: f64, yaw: f64) -> Result<Self> {
        for (name, a) in [("roll", roll), ("pitch", pitch), ("yaw", yaw)] {
            if !(a > -PI && a <= PI) {
                return Err(Error::invalid(name, format!("{a} rad is outside (-pi, pi]")));
            }
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("t", "translation must be finite"));
        }
        let rotation = *Rotation3::from_euler_angles(roll, pitch, yaw).matrix();
        Ok(SensorPose {
            translation,
            roll,
            pitch,
            yaw,
            rotation,
        })
    }

    pub fn identity() -> Self {
        SensorPose::at(Vector3::zeros())
    }

    pub fn at(translation: Vector3<f64>) -> Self {
        SensorPose {
            translation,
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            rotation: Matrix3::identity(),
        }
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    /// Sensor-to-ground rotation.
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn with_translation(&self, translation: Vector3<f64>) -> Result<Self> {
        SensorPose::new(translation, self.roll, self.pitch, self.yaw)
    }

    pub fn with_pitch(&self, pitch: f64) -> Result<Self> {
        SensorPose::new(self.translation, self.roll, pitch, self.yaw)
    }

    /// Ground point expressed in the sensor frame.
    pub fn to_sensor(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }
}
