use nalgebra::Vector3;

use super::geometry::Aabb;

/// Rays start counting as blocked only beyond this distance, so a sensor
/// mounted flush on a body surface does not hit its own mount.
pub const OCCLUSION_EPSILON: f64 = 1e-6;

/// Ego-vehicle geometry as a union of ground-frame boxes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VehicleBody {
    pub boxes: Vec<Aabb>,
}

impl VehicleBody {
    pub fn new(boxes: Vec<Aabb>) -> Self {
        VehicleBody { boxes }
    }

    pub fn empty() -> Self {
        VehicleBody::default()
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    pub fn blocks(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, t_max: f64) -> bool {
        ray_blocked(origin, dir, t_max, self)
    }
}

/// Whether the open segment `origin + t·dir`, `t ∈ (ε, t_max)`, touches any body box.
pub fn ray_blocked(origin: &Vector3<f64>, dir: &Vector3<f64>, t_max: f64, body: &VehicleBody) -> bool {
    body.boxes.iter().any(|b| match b.ray_interval(origin, dir) {
        Some((t_enter, t_exit)) => t_enter < t_max && t_exit > OCCLUSION_EPSILON,
        None => false,
    })
}
