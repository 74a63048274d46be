mod common;

use common::*;
use nalgebra::Vector3;
use perception_entropy::entropy::gaussian_entropy;
use perception_entropy::evaluator::{evaluate, evaluate_with, Configuration, EvaluateOptions, SensorEntry};
use perception_entropy::prior::{PerceptionSpace, PriorField, WeightRegion};
use perception_entropy::sensor::{Aabb, CameraModel, SensorSpec, VehicleBody};
use proptest::prelude::*;

fn space() -> PerceptionSpace {
    PerceptionSpace::new((-8.0, 8.0), (-6.0, 6.0), (0.0, 2.0), 0.5).unwrap()
}

/// Two heavier regions so the prior is not flat.
fn field() -> PriorField {
    PriorField::new(
        space(),
        vec![],
        vec![
            WeightRegion {
                x_range: (Some(3.0), None),
                y_range: (None, None),
                class_filter: None,
                multiplier: 2.0,
            },
            WeightRegion {
                x_range: (None, None),
                y_range: (Some(-1.0), Some(1.0)),
                class_filter: None,
                multiplier: 1.5,
            },
        ],
    )
    .unwrap()
}

fn car() -> VehicleBody {
    VehicleBody::new(vec![Aabb::new(Vector3::new(-2.0, -0.9, 0.0), Vector3::new(2.0, 0.9, 1.4)).unwrap()])
}

fn total(c: &Configuration) -> f64 {
    evaluate(c, &field(), &space()).unwrap().total_entropy
}

#[derive(Debug, Clone)]
enum Proto {
    Lidar { channels: Vec<f64>, step: f64, t: [f64; 3], pitch: f64, yaw: f64 },
    Camera { hfov: f64, w: u32, h: u32, t: [f64; 3], pitch: f64, yaw: f64 },
}

impl Proto {
    fn entry(&self, group: u32) -> SensorEntry {
        match self {
            Proto::Lidar { channels, step, t, pitch, yaw } => lidar_entry("l", channels, *step, 30.0, pose(*t, *pitch, *yaw), group),
            Proto::Camera { hfov, w, h, t, pitch, yaw } => camera_entry("c", *hfov, *w, *h, 30.0, pose(*t, *pitch, *yaw), group),
        }
    }
}

fn mount() -> impl Strategy<Value = [f64; 3]> {
    [-2.0f64..2.0, -0.9f64..0.9, 1.45f64..1.9]
}

fn lidar_proto() -> impl Strategy<Value = Proto> {
    (prop::collection::vec(70f64..110.0, 2..8), 2f64..6.0, mount(), -10f64..10.0, -180f64..180.0)
        .prop_map(|(channels, step, t, pitch, yaw)| Proto::Lidar { channels, step, t, pitch, yaw })
}

fn camera_proto() -> impl Strategy<Value = Proto> {
    (30f64..130.0, 32u32..200, 24u32..150, mount(), -15f64..15.0, -180f64..180.0)
        .prop_map(|(hfov, w, h, t, pitch, yaw)| Proto::Camera { hfov, w, h, t, pitch, yaw })
}

fn any_proto() -> impl Strategy<Value = Proto> {
    prop_oneof![lidar_proto(), camera_proto()]
}

/// Lidars share group 0, cameras get a group each.
fn build(protos: &[Proto], body: VehicleBody) -> Configuration {
    let mut next = 1;
    let sensors = protos
        .iter()
        .map(|p| match p {
            Proto::Lidar { .. } => p.entry(0),
            Proto::Camera { .. } => {
                next += 1;
                p.entry(next - 1)
            }
        })
        .collect();
    Configuration::new(sensors, body, curves()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adding_a_sensor_never_increases_entropy(
        base in prop::collection::vec(any_proto(), 1..3),
        extra in any_proto(),
        separate_group in any::<bool>(),
    ) {
        let before = total(&build(&base, car()));
        let mut sensors = build(&base, car()).sensors().to_vec();
        let group = match (&extra, separate_group) {
            (Proto::Lidar { .. }, false) => 0,
            _ => 100,
        };
        sensors.push(extra.entry(group));
        let after = total(&Configuration::new(sensors, car(), curves()).unwrap());
        prop_assert!(after <= before, "{after} > {before}");
    }

    #[test]
    fn extra_channels_never_increase_entropy(
        lidar in lidar_proto(),
        others in prop::collection::vec(any_proto(), 0..2),
        extra in prop::collection::vec(60f64..120.0, 1..6),
    ) {
        let mut protos = vec![lidar.clone()];
        protos.extend(others);
        let before = total(&build(&protos, car()));
        if let Proto::Lidar { channels, .. } = &mut protos[0] {
            channels.extend(extra);
        }
        let after = total(&build(&protos, car()));
        prop_assert!(after <= before, "{after} > {before}");
    }

    #[test]
    fn triple_resolution_never_increases_entropy(
        camera in camera_proto(),
        others in prop::collection::vec(any_proto(), 0..2),
    ) {
        // Every pixel center of the coarse image is also a center of the 3x image.
        let mut protos = vec![camera];
        protos.extend(others);
        let before = total(&build(&protos, car()));
        if let Proto::Camera { w, h, .. } = &mut protos[0] {
            *w *= 3;
            *h *= 3;
        }
        let after = total(&build(&protos, car()));
        prop_assert!(after <= before, "{after} > {before}");
    }

    #[test]
    fn removing_body_boxes_never_increases_entropy(
        protos in prop::collection::vec(any_proto(), 1..4),
        slabs in prop::collection::vec((0usize..3, -6i32..6, -2.0f64..2.0, 0.3f64..3.0), 1..4),
        drop in any::<prop::sample::Index>(),
    ) {
        // Thin panels between sample planes: they occlude but hold no grid sample.
        let boxes: Vec<Aabb> = slabs
            .iter()
            .map(|&(axis, k, at, size)| {
                let mut lo = Vector3::repeat(at - size / 2.0);
                let mut hi = Vector3::repeat(at + size / 2.0);
                lo.z = lo.z.max(0.0) + 0.6;
                hi.z = hi.z.max(lo.z + 0.4);
                lo[axis] = 0.5 * k as f64 + 0.05;
                hi[axis] = 0.5 * k as f64 + 0.2;
                Aabb::new(lo, hi).unwrap()
            })
            .collect();
        let mut fewer = boxes.clone();
        fewer.remove(drop.index(boxes.len()));
        let with = total(&build(&protos, VehicleBody::new(boxes)));
        let without = total(&build(&protos, VehicleBody::new(fewer)));
        prop_assert!(without <= with, "{without} > {with}");
    }

    #[test]
    fn uniform_total_lies_within_voxel_extremes(protos in prop::collection::vec(any_proto(), 1..3)) {
        let c = build(&protos, VehicleBody::empty());
        let s = space();
        let r = evaluate_with(&c, &PriorField::uniform(s).unwrap(), &s, EvaluateOptions { retain_voxels: true }).unwrap();
        let voxels = r.per_voxel.as_ref().unwrap();
        let lo = voxels.iter().map(|v| v.entropy).fold(f64::INFINITY, f64::min);
        let hi = voxels.iter().map(|v| v.entropy).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= r.total_entropy && r.total_entropy <= hi);
        let weighted: f64 = voxels.iter().map(|v| v.weight * v.entropy).sum();
        prop_assert!((weighted - r.total_entropy).abs() <= 1e-9);
    }
}

#[test]
fn retained_voxels_reproduce_total_with_body_and_prior() {
    let c = four_sensor_rig();
    let s = space();
    let r = evaluate_with(&c, &field(), &s, EvaluateOptions { retain_voxels: true }).unwrap();
    let voxels = r.per_voxel.as_ref().unwrap();
    assert_eq!(voxels.len(), s.sample_count());
    let weighted: f64 = voxels.iter().map(|v| v.weight * v.entropy).sum();
    assert!((weighted - r.total_entropy).abs() <= 1e-9);
    assert!((voxels.iter().map(|v| v.weight).sum::<f64>() - 1.0).abs() <= 1e-9);
    assert!(voxels.iter().filter(|v| c.body().contains(&v.position)).all(|v| v.weight == 0.0));
}

#[test]
fn thread_count_does_not_change_bits() {
    let c = four_sensor_rig();
    let s = PerceptionSpace::new((-20.0, 20.0), (-10.0, 10.0), (0.0, 3.0), 0.5).unwrap();
    let f = PriorField::uniform(s).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| evaluate(&c, &f, &s).unwrap().total_entropy)
    };
    let one = run(1);
    for n in [2, 3, 8] {
        assert_eq!(run(n).to_bits(), one.to_bits());
    }
}

#[test]
fn zero_range_sensors_give_clamp_entropy_exactly() {
    let tiny = 1e-9;
    let c = Configuration::new(
        vec![
            lidar_entry("l", &[80.0, 90.0, 100.0], 1.0, tiny, pose([0.0, 0.0, 2.0], 0.0, 0.0), 0),
            SensorEntry {
                name: "c".into(),
                spec: SensorSpec::Camera(CameraModel::new(1.0, 640, 480, tiny).unwrap()),
                pose: pose([1.0, 0.0, 1.5], 0.0, 0.0),
                fusion_group: 1,
            },
        ],
        car(),
        curves(),
    )
    .unwrap();
    let clamp = gaussian_entropy(999.0).unwrap();
    // Late fusion of two blind groups still sees σ = 999/√2, so check each modality alone too.
    let lidar_only = Configuration::new(vec![c.sensors()[0].clone()], car(), curves()).unwrap();
    assert_eq!(total(&lidar_only), clamp);
    assert_eq!(total(&lidar_only), 16.651386623706454);
    let camera_only = Configuration::new(
        vec![SensorEntry {
            fusion_group: 0,
            ..c.sensors()[1].clone()
        }],
        car(),
        curves(),
    )
    .unwrap();
    assert_eq!(total(&camera_only), clamp);
    let both = total(&c);
    assert!((both - (clamp - 2f64.ln())).abs() < 1e-12);
}
