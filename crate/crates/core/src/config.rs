//! The single-file JSON scenario: perception space, sensors with poses and
//! optional search regions, vehicle boxes, prior sources, AP curves and the
//! optimizer schedule. Angles are degrees and lengths meters on disk; everything
//! is converted to radians when building the in-memory types.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::entropy::ApCurve;
use crate::error::{Error, Result};
use crate::evaluator::{Configuration, SensorEntry};
use crate::optimizer::{NeighborhoodSchedule, SearchSpace, SensorSearch};
use crate::prior::{load_prior, ClassSource, PerceptionSpace, PriorField, WeightRegion};
use crate::sensor::{Aabb, CameraModel, LidarModel, Modality, SensorPose, SensorSpec, VehicleBody};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub perception_space: SpaceConfig,
    #[serde(default = "default_interval")]
    pub sampling_interval_m: f64,
    pub sensors: Vec<SensorConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vehicle_boxes: Vec<BoxConfig>,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub curves: CurvesConfig,
    #[serde(default)]
    pub optimizer: ScheduleConfig,
}

fn default_interval() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub z_range: [f64; 2],
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            x_range: [-80.0, 80.0],
            y_range: [-40.0, 40.0],
            z_range: [0.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub spec: SpecConfig,
    pub pose: PoseConfig,
    pub fusion_group: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpecConfig {
    Lidar {
        channels_deg: Vec<f64>,
        azimuth_step_deg: f64,
        max_range_m: f64,
    },
    Camera {
        hfov_deg: f64,
        width: u32,
        height: u32,
        max_range_m: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseConfig {
    pub t: [f64; 3],
    /// Roll, pitch, yaw in degrees.
    #[serde(default)]
    pub rpy_deg: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub mount_min: [f64; 3],
    pub mount_max: [f64; 3],
    pub pitch_range_deg: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub classes: BTreeMap<String, ClassConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RegionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    /// Histogram CSV, relative to the config file's directory.
    pub file: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// `[min, max)`; `null` for an open side.
    #[serde(default)]
    pub x_range: [Option<f64>; 2],
    #[serde(default)]
    pub y_range: [Option<f64>; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    pub multiplier: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lidar: Option<ApCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<ApCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub n_init_trans_m: f64,
    pub n_init_rot_deg: f64,
    pub n_final_trans_m: f64,
    pub n_final_rot_deg: f64,
    pub samples_per_round: usize,
    pub decay: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            n_init_trans_m: 1.0,
            n_init_rot_deg: 30.0,
            n_final_trans_m: 0.01,
            n_final_rot_deg: 0.3,
            samples_per_round: 1000,
            decay: 0.5,
        }
    }
}

impl ScheduleConfig {
    pub fn to_schedule(&self) -> Result<NeighborhoodSchedule> {
        let s = NeighborhoodSchedule {
            n_init_trans: self.n_init_trans_m,
            n_init_rot: self.n_init_rot_deg.to_radians(),
            n_final_trans: self.n_final_trans_m,
            n_final_rot: self.n_final_rot_deg.to_radians(),
            samples_per_round: self.samples_per_round,
            decay: self.decay,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Everything a run needs, in validated in-memory form.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub configuration: Configuration,
    pub space: PerceptionSpace,
    pub prior: PriorField,
    pub search: SearchSpace,
    pub schedule: NeighborhoodSchedule,
}

fn at(prefix: &str, e: Error) -> Error {
    match e {
        Error::Invalid { field, reason } => Error::Invalid {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let rc: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if rc.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", rc.schema_version),
            ));
        }
        Ok(rc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn space(&self) -> Result<PerceptionSpace> {
        let p = &self.perception_space;
        PerceptionSpace::new(
            (p.x_range[0], p.x_range[1]),
            (p.y_range[0], p.y_range[1]),
            (p.z_range[0], p.z_range[1]),
            self.sampling_interval_m,
        )
        .map_err(|e| at("perception_space", e))
    }

    pub fn configuration(&self) -> Result<Configuration> {
        let mut sensors = Vec::with_capacity(self.sensors.len());
        for (i, s) in self.sensors.iter().enumerate() {
            let prefix = format!("sensors[{i}]");
            let spec = s.spec.to_spec().map_err(|e| at(&format!("{prefix}.spec"), e))?;
            let pose = s.pose.to_pose().map_err(|e| at(&format!("{prefix}.pose"), e))?;
            sensors.push(SensorEntry {
                name: s.name.clone().unwrap_or_else(|| format!("sensor{i}")),
                spec,
                pose,
                fusion_group: s.fusion_group,
            });
        }
        let mut boxes = Vec::with_capacity(self.vehicle_boxes.len());
        for (i, b) in self.vehicle_boxes.iter().enumerate() {
            boxes.push(Aabb::new(vec3(b.min), vec3(b.max)).map_err(|e| at(&format!("vehicle_boxes[{i}]"), e))?);
        }
        let mut curves = BTreeMap::new();
        for (modality, given, default) in [
            (Modality::Lidar, self.curves.lidar, ApCurve::lidar_default()),
            (Modality::Camera, self.curves.camera, ApCurve::camera_default()),
        ] {
            let curve = given.unwrap_or(default);
            curve.validate().map_err(|e| at(&format!("curves.{modality}"), e))?;
            curves.insert(modality, curve);
        }
        Configuration::new(sensors, VehicleBody::new(boxes), curves)
    }

    pub fn search_space(&self) -> Result<SearchSpace> {
        let mut sensors = Vec::with_capacity(self.sensors.len());
        for (i, s) in self.sensors.iter().enumerate() {
            sensors.push(match &s.search {
                None => None,
                Some(c) => {
                    let r = SensorSearch {
                        mount_min: vec3(c.mount_min),
                        mount_max: vec3(c.mount_max),
                        pitch_range: (c.pitch_range_deg[0].to_radians(), c.pitch_range_deg[1].to_radians()),
                    };
                    r.validate().map_err(|e| at(&format!("sensors[{i}]"), e))?;
                    Some(r)
                }
            });
        }
        Ok(SearchSpace { sensors })
    }

    /// Prior on the configured space; class files resolve against `base_dir`.
    pub fn prior(&self, base_dir: &Path, space: PerceptionSpace) -> Result<PriorField> {
        let files: BTreeMap<String, ClassSource> = self
            .prior
            .classes
            .iter()
            .map(|(name, c)| {
                (
                    name.clone(),
                    ClassSource {
                        path: base_dir.join(&c.file),
                        z_extent: c.z_range.map(|z| (z[0], z[1])),
                    },
                )
            })
            .collect();
        let mut regions = Vec::with_capacity(self.prior.regions.len());
        for (i, r) in self.prior.regions.iter().enumerate() {
            let region = WeightRegion {
                x_range: (r.x_range[0], r.x_range[1]),
                y_range: (r.y_range[0], r.y_range[1]),
                class_filter: r.class.clone(),
                multiplier: r.multiplier,
            };
            region.validate().map_err(|e| at(&format!("prior.regions[{i}]"), e))?;
            regions.push(region);
        }
        load_prior(space, &files, regions)
    }

    pub fn scenario(&self, base_dir: &Path) -> Result<Scenario> {
        let space = self.space()?;
        let configuration = self.configuration()?;
        let search = self.search_space()?;
        let schedule = self.optimizer.to_schedule()?;
        let prior = self.prior(base_dir, space)?;
        Ok(Scenario {
            configuration,
            space,
            prior,
            search,
            schedule,
        })
    }

    /// Copy with each sensor's translation and pitch taken from `config`.
    /// Angles are stored in degrees, so re-parsing the result is exact.
    pub fn with_poses_from(&self, config: &Configuration) -> RunConfig {
        let mut out = self.clone();
        for (s, e) in out.sensors.iter_mut().zip(config.sensors()) {
            let t = e.pose.translation();
            s.pose.t = [t.x, t.y, t.z];
            s.pose.rpy_deg = [
                exact_degrees(e.pose.roll()),
                exact_degrees(e.pose.pitch()),
                exact_degrees(e.pose.yaw()),
            ];
        }
        out
    }
}

/// Degrees that convert back to exactly `rad` when one exists, else the nearest.
pub fn exact_degrees(rad: f64) -> f64 {
    let d = rad.to_degrees();
    [d, d.next_up(), d.next_down()]
        .into_iter()
        .find(|v| v.to_radians() == rad)
        .unwrap_or(d)
}

impl SpecConfig {
    pub fn to_spec(&self) -> Result<SensorSpec> {
        match self {
            SpecConfig::Lidar {
                channels_deg,
                azimuth_step_deg,
                max_range_m,
            } => {
                let channels = channels_deg.iter().map(|d| d.to_radians()).collect();
                LidarModel::new(channels, azimuth_step_deg.to_radians(), *max_range_m)
                    .map(SensorSpec::Lidar)
                    .map_err(|e| match e {
                        Error::Invalid { field, reason } => Error::Invalid {
                            field: match field.as_str() {
                                "channels" => "channels_deg".into(),
                                "azimuth_step" => "azimuth_step_deg".into(),
                                "max_range" => "max_range_m".into(),
                                _ => field,
                            },
                            reason,
                        },
                        other => other,
                    })
            }
            SpecConfig::Camera {
                hfov_deg,
                width,
                height,
                max_range_m,
            } => CameraModel::new(hfov_deg.to_radians(), *width, *height, *max_range_m)
                .map(SensorSpec::Camera)
                .map_err(|e| match e {
                    Error::Invalid { field, reason } => Error::Invalid {
                        field: match field.as_str() {
                            "hfov" => "hfov_deg".into(),
                            "max_range" => "max_range_m".into(),
                            _ => field,
                        },
                        reason,
                    },
                    other => other,
                }),
        }
    }
}

impl PoseConfig {
    pub fn to_pose(&self) -> Result<SensorPose> {
        let [r, p, y] = self.rpy_deg;
        SensorPose::new(vec3(self.t), r.to_radians(), p.to_radians(), y.to_radians()).map_err(|e| match e {
            Error::Invalid { field, reason } => Error::Invalid {
                field: format!("rpy_deg ({field})"),
                reason,
            },
            other => other,
        })
    }
}
