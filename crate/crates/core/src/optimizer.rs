//! Shrinking-neighborhood random search over sensor placements.
//!
//! Each round draws candidates uniformly from a box around the incumbent
//! (±`n_trans` per translation axis, ±`n_rot` pitch, for every searched sensor at
//! once), clamps them into the mount regions, evaluates them and recenters on the
//! best. Both neighborhood sizes then shrink by `decay`; the search ends after the
//! round in which both are at or below their final sizes.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluator::{Configuration, PreparedGrid};
use crate::prior::{PerceptionSpace, PriorField};
use crate::sensor::SensorPose;

/// Admissible placement of one searched sensor. Roll and yaw stay as in the template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSearch {
    pub mount_min: Vector3<f64>,
    pub mount_max: Vector3<f64>,
    /// Radians, inside (−π/2, π/2).
    pub pitch_range: (f64, f64),
}

impl SensorSearch {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.mount_min[i] <= self.mount_max[i]) {
                return Err(Error::invalid(
                    "search.mount_min",
                    format!("mount region min {:?} exceeds max {:?}", self.mount_min, self.mount_max),
                ));
            }
        }
        let (lo, hi) = self.pitch_range;
        let half = std::f64::consts::FRAC_PI_2;
        if !(lo <= hi && lo > -half && hi < half) {
            return Err(Error::invalid(
                "search.pitch_range_deg",
                format!("[{}, {}] deg must be ordered and inside (-90, 90)", lo.to_degrees(), hi.to_degrees()),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, pose: &SensorPose) -> bool {
        let t = pose.translation();
        (0..3).all(|i| t[i] >= self.mount_min[i] && t[i] <= self.mount_max[i])
            && pose.pitch() >= self.pitch_range.0
            && pose.pitch() <= self.pitch_range.1
    }

    pub fn clamp(&self, t: Vector3<f64>, pitch: f64) -> (Vector3<f64>, f64) {
        let t = Vector3::from_fn(|i, _| t[i].clamp(self.mount_min[i], self.mount_max[i]));
        (t, pitch.clamp(self.pitch_range.0, self.pitch_range.1))
    }
}

/// Per-sensor search regions; `None` keeps that sensor fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub sensors: Vec<Option<SensorSearch>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodSchedule {
    pub n_init_trans: f64,
    pub n_init_rot: f64,
    pub n_final_trans: f64,
    pub n_final_rot: f64,
    pub samples_per_round: usize,
    pub decay: f64,
}

impl Default for NeighborhoodSchedule {
    fn default() -> Self {
        NeighborhoodSchedule {
            n_init_trans: 1.0,
            n_init_rot: 30f64.to_radians(),
            n_final_trans: 0.01,
            n_final_rot: 0.3f64.to_radians(),
            samples_per_round: 1000,
            decay: 0.5,
        }
    }
}

impl NeighborhoodSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_final_trans > 0.0 && self.n_final_trans <= self.n_init_trans && self.n_init_trans.is_finite()) {
            return Err(Error::invalid(
                "optimizer.n_final_trans_m",
                "translation neighborhood must satisfy 0 < final <= initial",
            ));
        }
        if !(self.n_final_rot > 0.0 && self.n_final_rot <= self.n_init_rot && self.n_init_rot.is_finite()) {
            return Err(Error::invalid(
                "optimizer.n_final_rot_deg",
                "rotation neighborhood must satisfy 0 < final <= initial",
            ));
        }
        if self.samples_per_round == 0 {
            return Err(Error::invalid("optimizer.samples_per_round", "must be at least 1"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::invalid("optimizer.decay", format!("{} must be in (0, 1)", self.decay)));
        }
        Ok(())
    }

    /// Neighborhood sizes `(trans, rot)` of every round, in order.
    pub fn rounds(&self) -> Vec<(f64, f64)> {
        let (mut t, mut r) = (self.n_init_trans, self.n_init_rot);
        let mut out = vec![(t, r)];
        while !(t <= self.n_final_trans && r <= self.n_final_rot) {
            t *= self.decay;
            r *= self.decay;
            out.push((t, r));
        }
        out
    }
}

/// Pose of one searched sensor: translation and pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub translation: Vector3<f64>,
    pub pitch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRound {
    pub n_trans: f64,
    pub n_rot: f64,
    pub best_entropy: f64,
    /// One entry per configured sensor.
    pub best_placement: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub seed: u64,
    pub initial_entropy: f64,
    pub rounds: Vec<TraceRound>,
}

impl OptimizationTrace {
    /// One JSON object per round.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (k, r) in self.rounds.iter().enumerate() {
            let placement: Vec<_> = r
                .best_placement
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "t": [p.translation.x, p.translation.y, p.translation.z],
                        "pitch_deg": p.pitch.to_degrees(),
                    })
                })
                .collect();
            let line = serde_json::json!({
                "round": k,
                "seed": self.seed,
                "n_trans_m": r.n_trans,
                "n_rot_deg": r.n_rot.to_degrees(),
                "best_entropy": r.best_entropy,
                "best_placement": placement,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

pub fn optimize(
    template: &Configuration,
    search: &SearchSpace,
    schedule: &NeighborhoodSchedule,
    field: &PriorField,
    space: &PerceptionSpace,
    seed: u64,
) -> Result<(Configuration, OptimizationTrace)> {
    let grid = PreparedGrid::new(field, space, template.body())?;
    optimize_on(template, search, schedule, &grid, seed)
}

/// Like [`optimize`] with the weighted grid already prepared for the template's body.
pub fn optimize_on(
    template: &Configuration,
    search: &SearchSpace,
    schedule: &NeighborhoodSchedule,
    grid: &PreparedGrid,
    seed: u64,
) -> Result<(Configuration, OptimizationTrace)> {
    schedule.validate()?;
    let sensors = template.sensors();
    if search.sensors.len() != sensors.len() {
        return Err(Error::invalid(
            "search",
            format!("{} search entries for {} sensors", search.sensors.len(), sensors.len()),
        ));
    }
    for (i, (s, region)) in sensors.iter().zip(&search.sensors).enumerate() {
        if let Some(region) = region {
            region.validate()?;
            if !region.contains(&s.pose) {
                return Err(Error::invalid(
                    format!("sensors[{i}].pose"),
                    "template pose lies outside its search region",
                ));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_poses = template.poses();
    let initial_entropy = grid.total_entropy(template);
    let mut best_entropy = initial_entropy;
    let mut rounds = Vec::new();

    for (n_trans, n_rot) in schedule.rounds() {
        // All candidates of a round come from one RNG stream before any evaluation.
        let candidates: Vec<Vec<SensorPose>> = (0..schedule.samples_per_round)
            .map(|_| {
                best_poses
                    .iter()
                    .zip(&search.sensors)
                    .map(|(pose, region)| match region {
                        None => *pose,
                        Some(region) => {
                            let mut draw = |n: f64| n * (2.0 * rng.gen::<f64>() - 1.0);
                            let dt = Vector3::new(draw(n_trans), draw(n_trans), draw(n_trans));
                            let dp = draw(n_rot);
                            let pitch = (pose.pitch() + dp).to_degrees().to_radians();
                            let (t, pitch) = region.clamp(pose.translation() + dt, pitch);
                            SensorPose::new(t, pose.roll(), pitch, pose.yaw())
                                .expect("clamped pitch stays inside (-pi/2, pi/2)")
                        }
                    })
                    .collect()
            })
            .collect();

        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|poses| grid.total_entropy(&template.with_poses(poses)))
            .collect();

        // Strict improvement only: ties keep the incumbent, then the lowest index.
        let mut winner = None;
        for (i, &h) in scores.iter().enumerate() {
            if h < best_entropy {
                best_entropy = h;
                winner = Some(i);
            }
        }
        if let Some(i) = winner {
            best_poses = candidates[i].clone();
        }
        rounds.push(TraceRound {
            n_trans,
            n_rot,
            best_entropy,
            best_placement: best_poses
                .iter()
                .map(|p| Placement {
                    translation: *p.translation(),
                    pitch: p.pitch(),
                })
                .collect(),
        });
    }

    Ok((
        template.with_poses(&best_poses),
        OptimizationTrace {
            seed,
            initial_entropy,
            rounds,
        },
    ))
}
