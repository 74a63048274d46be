//! Early fusion sums raw counts inside a group of homogeneous sensors; late fusion
//! multiplies the groups' Gaussians, combining their σ by inverse variance.

use crate::entropy::{entropy_of_sigma, sigma_from_measurement, ApCurve};
use crate::error::{Error, Result};
use crate::sensor::Modality;

/// Sensors whose raw measurements are summed before estimating σ.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGroup {
    sensor_ids: Vec<usize>,
    modality: Modality,
    curve: ApCurve,
}

impl FusionGroup {
    pub fn new(sensor_ids: Vec<usize>, modality: Modality, curve: ApCurve) -> Result<Self> {
        if sensor_ids.is_empty() {
            return Err(Error::invalid("fusion_group", "a fusion group needs at least one sensor"));
        }
        if modality == Modality::Camera && sensor_ids.len() != 1 {
            return Err(Error::invalid(
                "fusion_group",
                format!(
                    "camera images cannot be early-fused: a camera group must contain exactly one sensor, got sensors {sensor_ids:?}"
                ),
            ));
        }
        curve.validate()?;
        Ok(FusionGroup {
            sensor_ids,
            modality,
            curve,
        })
    }

    pub fn sensor_ids(&self) -> &[usize] {
        &self.sensor_ids
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn curve(&self) -> &ApCurve {
        &self.curve
    }
}

/// A partition of all configured sensors into fusion groups.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGraph {
    groups: Vec<FusionGroup>,
    sensor_count: usize,
}

impl FusionGraph {
    /// `modalities[i]` is the modality of sensor `i`.
    pub fn new(groups: Vec<FusionGroup>, modalities: &[Modality]) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("fusion_group", "at least one fusion group is required"));
        }
        let mut owner = vec![None; modalities.len()];
        for (g, group) in groups.iter().enumerate() {
            for &id in &group.sensor_ids {
                let slot = owner.get_mut(id).ok_or_else(|| {
                    Error::invalid("fusion_group", format!("sensor index {id} does not exist"))
                })?;
                if let Some(prev) = *slot {
                    return Err(Error::invalid(
                        "fusion_group",
                        format!("sensor {id} appears in groups {prev} and {g}"),
                    ));
                }
                *slot = Some(g);
                if modalities[id] != group.modality {
                    return Err(Error::invalid(
                        "fusion_group",
                        format!(
                            "sensor {id} is a {} but group {g} fuses {} sensors",
                            modalities[id], group.modality
                        ),
                    ));
                }
            }
        }
        if let Some(missing) = owner.iter().position(Option::is_none) {
            return Err(Error::invalid(
                "fusion_group",
                format!("sensor {missing} is not assigned to any group"),
            ));
        }
        Ok(FusionGraph {
            groups,
            sensor_count: modalities.len(),
        })
    }

    pub fn groups(&self) -> &[FusionGroup] {
        &self.groups
    }

    pub fn sensor_count(&self) -> usize {
        self.sensor_count
    }
}

pub fn fuse_early(measurements: &[u32]) -> Result<u64> {
    if measurements.is_empty() {
        return Err(Error::invalid("measurements", "early fusion needs at least one measurement"));
    }
    Ok(measurements.iter().map(|&m| m as u64).sum())
}

pub fn fuse_late(sigmas: &[f64]) -> Result<f64> {
    if sigmas.is_empty() {
        return Err(Error::invalid("sigmas", "late fusion needs at least one sigma"));
    }
    if let Some(bad) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::invalid("sigmas", format!("sigma {bad} must be positive")));
    }
    Ok(late_fusion(sigmas.iter().copied()))
}

/// Inverse-variance combination; a single σ passes through unchanged.
#[inline]
pub(crate) fn late_fusion(mut sigmas: impl Iterator<Item = f64>) -> f64 {
    let first = sigmas.next().expect("late fusion of an empty set");
    let mut precision = 0.0;
    let mut several = false;
    for s in sigmas {
        if !several {
            precision = 1.0 / (first * first);
            several = true;
        }
        precision += 1.0 / (s * s);
    }
    if several {
        (1.0 / precision).sqrt()
    } else {
        first
    }
}

/// Entropy of one voxel given one measurement per configured sensor.
pub fn fused_voxel_entropy(graph: &FusionGraph, per_sensor_measurements: &[u32]) -> Result<f64> {
    if per_sensor_measurements.len() != graph.sensor_count {
        return Err(Error::invalid(
            "measurements",
            format!(
                "expected {} per-sensor measurements, got {}",
                graph.sensor_count,
                per_sensor_measurements.len()
            ),
        ));
    }
    let sigma = late_fusion(graph.groups.iter().map(|g| {
        let m: u64 = g.sensor_ids.iter().map(|&i| per_sensor_measurements[i] as u64).sum();
        sigma_from_measurement(m as f64, &g.curve)
    }));
    Ok(entropy_of_sigma(sigma))
}
