//! Sweeps the sample grid and reduces per-voxel fused entropy to the
//! configuration's perception entropy, the prior-weighted average.
//!
//! Grid indices are split into fixed chunks of [`CHUNK`] samples. Each chunk is
//! summed sequentially and chunk partials are added in chunk order, so results
//! are bit-identical for any thread count, and identical between the streaming
//! sweep and a [`PreparedGrid`] that keeps only the weighted samples.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::entropy::{entropy_of_sigma, sigma_from_measurement, ApCurve};
use crate::error::{Error, Result};
use crate::fusion::{late_fusion, FusionGraph, FusionGroup};
use crate::prior::{PerceptionSpace, PriorField};
use crate::sensor::{Modality, PlacedSensor, SensorPose, SensorSpec, VehicleBody, Voxel};

pub const CHUNK: usize = 4096;

/// Fused measurements up to this count use a precomputed σ table.
const SIGMA_TABLE_LEN: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorEntry {
    pub name: String,
    pub spec: SensorSpec,
    pub pose: SensorPose,
    pub fusion_group: u32,
}

/// Posed sensors, their fusion grouping, the ego body and one AP curve per modality.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    sensors: Vec<SensorEntry>,
    body: VehicleBody,
    curves: BTreeMap<Modality, ApCurve>,
    graph: FusionGraph,
}

impl Configuration {
    /// Groups are formed by `fusion_group` id, ordered by id.
    pub fn new(sensors: Vec<SensorEntry>, body: VehicleBody, curves: BTreeMap<Modality, ApCurve>) -> Result<Self> {
        if sensors.is_empty() {
            return Err(Error::invalid("sensors", "at least one sensor is required"));
        }
        let mut by_id: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, s) in sensors.iter().enumerate() {
            by_id.entry(s.fusion_group).or_default().push(i);
        }
        let mut groups = Vec::with_capacity(by_id.len());
        for (id, members) in by_id {
            let modality = sensors[members[0]].spec.modality();
            if let Some(&other) = members.iter().find(|&&i| sensors[i].spec.modality() != modality) {
                return Err(Error::invalid(
                    format!("sensors[{other}].fusion_group"),
                    format!("group {id} mixes lidar and camera sensors; only lidars may share a group"),
                ));
            }
            let curve = *curves.get(&modality).ok_or_else(|| {
                Error::invalid(format!("curves.{modality}"), "no AP curve for a modality in use")
            })?;
            let group = FusionGroup::new(members, modality, curve).map_err(|e| match e {
                Error::Invalid { reason, .. } => Error::invalid(
                    format!("sensors[*].fusion_group (group {id})"),
                    reason,
                ),
                other => other,
            })?;
            groups.push(group);
        }
        let modalities: Vec<Modality> = sensors.iter().map(|s| s.spec.modality()).collect();
        let graph = FusionGraph::new(groups, &modalities)?;
        Ok(Configuration {
            sensors,
            body,
            curves,
            graph,
        })
    }

    pub fn sensors(&self) -> &[SensorEntry] {
        &self.sensors
    }

    pub fn body(&self) -> &VehicleBody {
        &self.body
    }

    pub fn curves(&self) -> &BTreeMap<Modality, ApCurve> {
        &self.curves
    }

    pub fn graph(&self) -> &FusionGraph {
        &self.graph
    }

    /// Same configuration with every sensor moved to `poses[i]`.
    pub fn with_poses(&self, poses: &[SensorPose]) -> Configuration {
        assert_eq!(poses.len(), self.sensors.len(), "one pose per sensor");
        let mut out = self.clone();
        for (s, p) in out.sensors.iter_mut().zip(poses) {
            s.pose = *p;
        }
        out
    }

    pub fn poses(&self) -> Vec<SensorPose> {
        self.sensors.iter().map(|s| s.pose).collect()
    }

    /// SHA-256 over the exact bit patterns of every parameter.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        let mut f = |v: f64| h.update(v.to_bits().to_le_bytes());
        for s in &self.sensors {
            match &s.spec {
                SensorSpec::Lidar(l) => {
                    f(0.0);
                    l.channels().iter().for_each(|&c| f(c));
                    f(l.azimuth_step());
                    f(l.max_range());
                }
                SensorSpec::Camera(c) => {
                    f(1.0);
                    f(c.hfov());
                    f(c.width() as f64);
                    f(c.height() as f64);
                    f(c.max_range());
                }
            }
            s.pose.translation().iter().for_each(|&v| f(v));
            f(s.pose.roll());
            f(s.pose.pitch());
            f(s.pose.yaw());
            f(s.fusion_group as f64);
        }
        for b in &self.body.boxes {
            b.min.iter().chain(b.max.iter()).for_each(|&v| f(v));
        }
        for c in self.curves.values() {
            f(c.a);
            f(c.b);
            f(c.ap_min);
            f(c.ap_max);
        }
        for s in &self.sensors {
            h.update(s.name.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

struct GroupModel {
    members: Vec<usize>,
    curve: ApCurve,
    sigma_table: Vec<f64>,
}

impl GroupModel {
    #[inline]
    fn sigma(&self, m: u64) -> f64 {
        match self.sigma_table.get(m as usize) {
            Some(s) => *s,
            None => sigma_from_measurement(m as f64, &self.curve),
        }
    }
}

/// A configuration with every sensor's per-placement tables built.
pub struct ScenarioModel {
    sensors: Vec<PlacedSensor>,
    groups: Vec<GroupModel>,
    body: VehicleBody,
    blind_entropy: f64,
}

impl ScenarioModel {
    pub fn new(config: &Configuration) -> Self {
        let sensors = config
            .sensors
            .iter()
            .map(|s| PlacedSensor::new(&s.spec, &s.pose))
            .collect();
        let groups = config
            .graph
            .groups()
            .iter()
            .map(|g| GroupModel {
                members: g.sensor_ids().to_vec(),
                curve: *g.curve(),
                sigma_table: (0..SIGMA_TABLE_LEN)
                    .map(|m| sigma_from_measurement(m as f64, g.curve()))
                    .collect(),
            })
            .collect::<Vec<GroupModel>>();
        let blind_entropy = entropy_of_sigma(late_fusion(groups.iter().map(|g| g.sigma(0))));
        ScenarioModel {
            sensors,
            groups,
            body: config.body.clone(),
            blind_entropy,
        }
    }

    /// Entropy of a voxel no sensor measures.
    pub fn blind_entropy(&self) -> f64 {
        self.blind_entropy
    }

    pub fn sensor_measurement(&self, sensor: usize, voxel: &Voxel) -> u32 {
        self.sensors[sensor].measure(&self.body, voxel)
    }

    fn group_measurement(&self, g: &GroupModel, voxel: &Voxel) -> u64 {
        g.members
            .iter()
            .map(|&i| self.sensors[i].measure(&self.body, voxel) as u64)
            .sum()
    }

    /// Fused entropy of the voxel centered at `center`.
    #[inline]
    pub fn voxel_entropy(&self, center: &Vector3<f64>) -> f64 {
        let voxel = Voxel::new(*center);
        let sigma = late_fusion(
            self.groups
                .iter()
                .map(|g| g.sigma(self.group_measurement(g, &voxel))),
        );
        entropy_of_sigma(sigma)
    }

    fn voxel_record(&self, center: &Vector3<f64>, weight: f64) -> VoxelRecord {
        let voxel = Voxel::new(*center);
        let group_measurements: Vec<u64> = self
            .groups
            .iter()
            .map(|g| self.group_measurement(g, &voxel))
            .collect();
        let sigma = late_fusion(
            self.groups
                .iter()
                .zip(&group_measurements)
                .map(|(g, &m)| g.sigma(m)),
        );
        VoxelRecord {
            position: *center,
            weight,
            group_measurements,
            entropy: entropy_of_sigma(sigma),
        }
    }
}

/// Per-voxel evaluation detail.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelRecord {
    pub position: Vector3<f64>,
    /// Normalized prior weight.
    pub weight: f64,
    /// Fused measurement of each fusion group, in group order.
    pub group_measurements: Vec<u64>,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridInfo {
    pub space: PerceptionSpace,
    pub dims: [usize; 3],
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub total_entropy: f64,
    pub per_voxel: Option<Vec<VoxelRecord>>,
    pub config_hash: String,
    pub grid: GridInfo,
    pub runtime_ms: u128,
}

impl EntropyReport {
    pub fn to_json(&self) -> serde_json::Value {
        let s = &self.grid.space;
        serde_json::json!({
            "total_entropy": self.total_entropy,
            "grid": {
                "x_range": [s.x_range.0, s.x_range.1],
                "y_range": [s.y_range.0, s.y_range.1],
                "z_range": [s.z_range.0, s.z_range.1],
                "sample_interval_m": s.sample_interval,
                "dims": self.grid.dims,
                "samples": self.grid.samples,
            },
            "config_hash": self.config_hash,
            "runtime_ms": self.runtime_ms as u64,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvaluateOptions {
    /// Keep a [`VoxelRecord`] for every grid sample.
    pub retain_voxels: bool,
}

/// Prior weight of a grid sample: the field's density, zero inside the ego body.
#[inline]
fn sample_weight(field: &PriorField, body: &VehicleBody, s: &Vector3<f64>) -> f64 {
    if body.contains(s) {
        0.0
    } else {
        field.density(s)
    }
}

struct Partial {
    weight: f64,
    /// Σ w·(h − blind entropy).
    weighted_excess: f64,
    records: Vec<VoxelRecord>,
}

fn reduce(partials: Vec<Partial>) -> Result<(f64, f64, Vec<VoxelRecord>)> {
    let mut w = 0.0;
    let mut wh = 0.0;
    let mut records = Vec::new();
    for p in partials {
        w += p.weight;
        wh += p.weighted_excess;
        records.extend(p.records);
    }
    if !(w > 0.0) {
        return Err(Error::invalid(
            "prior",
            "no prior mass outside the vehicle body on this grid",
        ));
    }
    Ok((w, wh, records))
}

pub fn evaluate(config: &Configuration, field: &PriorField, space: &PerceptionSpace) -> Result<EntropyReport> {
    evaluate_with(config, field, space, EvaluateOptions::default())
}

pub fn evaluate_with(
    config: &Configuration,
    field: &PriorField,
    space: &PerceptionSpace,
    options: EvaluateOptions,
) -> Result<EntropyReport> {
    space.validate()?;
    let start = Instant::now();
    let model = ScenarioModel::new(config);
    let n = space.sample_count();
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut p = Partial {
                weight: 0.0,
                weighted_excess: 0.0,
                records: Vec::new(),
            };
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let s = space.position(i);
                let w = sample_weight(field, &config.body, &s);
                if options.retain_voxels {
                    let rec = model.voxel_record(&s, w);
                    p.weight += w;
                    p.weighted_excess += w * (rec.entropy - model.blind_entropy);
                    p.records.push(rec);
                } else if w > 0.0 {
                    p.weight += w;
                    p.weighted_excess += w * (model.voxel_entropy(&s) - model.blind_entropy);
                }
            }
            p
        })
        .collect();
    let (w, wh, mut records) = reduce(partials)?;
    for r in &mut records {
        r.weight /= w;
    }
    Ok(EntropyReport {
        total_entropy: model.blind_entropy + wh / w,
        per_voxel: options.retain_voxels.then_some(records),
        config_hash: config.hash_hex(),
        grid: GridInfo {
            space: *space,
            dims: space.dims(),
            samples: n,
        },
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// The positively weighted grid samples, kept for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedGrid {
    positions: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    /// `(start, end)` into `positions` for each non-empty grid chunk, in order.
    chunks: Vec<(usize, usize)>,
    space: PerceptionSpace,
}

impl PreparedGrid {
    pub fn new(field: &PriorField, space: &PerceptionSpace, body: &VehicleBody) -> Result<Self> {
        space.validate()?;
        let n = space.sample_count();
        let mut positions = Vec::new();
        let mut weights = Vec::new();
        let mut chunks = Vec::new();
        for c in 0..n.div_ceil(CHUNK) {
            let start = positions.len();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let s = space.position(i);
                let w = sample_weight(field, body, &s);
                if w > 0.0 {
                    positions.push(s);
                    weights.push(w);
                }
            }
            if positions.len() > start {
                chunks.push((start, positions.len()));
            }
        }
        if positions.is_empty() {
            return Err(Error::invalid(
                "prior",
                "no prior mass outside the vehicle body on this grid",
            ));
        }
        Ok(PreparedGrid {
            positions,
            weights,
            chunks,
            space: *space,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn space(&self) -> &PerceptionSpace {
        &self.space
    }

    /// Perception entropy of `config`; bit-identical to [`evaluate`] on the same
    /// field, space and body.
    pub fn total_entropy(&self, config: &Configuration) -> f64 {
        let model = ScenarioModel::new(config);
        let partials: Vec<Partial> = self
            .chunks
            .par_iter()
            .map(|&(a, b)| {
                let mut p = Partial {
                    weight: 0.0,
                    weighted_excess: 0.0,
                    records: Vec::new(),
                };
                for i in a..b {
                    let w = self.weights[i];
                    p.weight += w;
                    p.weighted_excess += w * (model.voxel_entropy(&self.positions[i]) - model.blind_entropy);
                }
                p
            })
            .collect();
        let (w, wh, _) = reduce(partials).expect("prepared grid has positive mass");
        model.blind_entropy + wh / w
    }
}

/// Writes `x,y,entropy` rows, one per grid column, averaging over z by prior weight
/// (plain mean for columns without weight).
pub fn export_heatmap(report: &EntropyReport, path: &Path) -> Result<()> {
    let records = report.per_voxel.as_ref().ok_or(Error::MissingVoxelData)?;
    let rows = heatmap_rows(records, report.grid.dims[2]);
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "x,y,entropy")?;
        for (x, y, h) in &rows {
            writeln!(out, "{x},{y},{h}")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Collapses lexicographically ordered records into (x, y, entropy) columns of `nz`.
pub fn heatmap_rows(records: &[VoxelRecord], nz: usize) -> Vec<(f64, f64, f64)> {
    records
        .chunks(nz.max(1))
        .map(|col| {
            let w: f64 = col.iter().map(|r| r.weight).sum();
            let h = if w > 0.0 {
                col.iter().map(|r| r.weight * r.entropy).sum::<f64>() / w
            } else {
                col.iter().map(|r| r.entropy).sum::<f64>() / col.len() as f64
            };
            (col[0].position.x, col[0].position.y, h)
        })
        .collect()
}
