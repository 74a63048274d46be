use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Side length of an evaluation voxel, meters.
pub const VOXEL_SIDE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self> {
        for i in 0..3 {
            if !(min[i] < max[i]) {
                return Err(Error::invalid(
                    "box",
                    format!("min corner must be below max corner on every axis, got {min:?} / {max:?}"),
                ));
            }
        }
        Ok(Aabb { min, max })
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Parameter interval `[t_enter, t_exit]` over which the line `origin + t·dir`
    /// is inside the box (slab method), or `None` if the line misses it.
    /// `t_enter` may be negative when the origin is inside or past the box.
    pub fn ray_interval(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64)> {
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        for i in 0..3 {
            let o = origin[i];
            let d = dir[i];
            if d == 0.0 {
                if o < self.min[i] || o > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let mut a = (self.min[i] - o) * inv;
            let mut b = (self.max[i] - o) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t_enter = t_enter.max(a);
            t_exit = t_exit.min(b);
            if t_enter > t_exit {
                return None;
            }
        }
        Some((t_enter, t_exit))
    }

    /// Distance along a ray (t ≥ 0) to the first point inside the box.
    pub fn ray_hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let (t_enter, t_exit) = self.ray_interval(origin, dir)?;
        if t_exit < 0.0 {
            return None;
        }
        Some(t_enter.max(0.0))
    }
}

/// A 0.1 m evaluation cube, axis-aligned in the ground frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voxel {
    pub center: Vector3<f64>,
}

impl Voxel {
    pub fn new(center: Vector3<f64>) -> Self {
        Voxel { center }
    }

    pub fn side(&self) -> f64 {
        VOXEL_SIDE
    }

    pub fn aabb(&self) -> Aabb {
        let h = Vector3::repeat(VOXEL_SIDE / 2.0);
        Aabb {
            min: self.center - h,
            max: self.center + h,
        }
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let h = VOXEL_SIDE / 2.0;
        let c = self.center;
        let mut out = [c; 8];
        for (k, corner) in out.iter_mut().enumerate() {
            let sx = if k & 1 == 0 { -h } else { h };
            let sy = if k & 2 == 0 { -h } else { h };
            let sz = if k & 4 == 0 { -h } else { h };
            *corner = c + Vector3::new(sx, sy, sz);
        }
        out
    }
}
