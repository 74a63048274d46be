//! Measurement → AP → σ → entropy.
//!
//! Average precision is modeled as `a·ln(m) + b`, clamped to `[ap_min, ap_max]`;
//! the positional uncertainty is `σ = 1/AP − 1`; the entropy of the isotropic
//! 2D Gaussian is `2·ln σ + 1 + ln 2π` nats.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_AP_MIN: f64 = 0.001;
pub const DEFAULT_AP_MAX: f64 = 0.999;

/// Surface area of one 0.1 m voxel cube, m².
pub const VOXEL_SURFACE_AREA: f64 = 0.06;

/// Log-linear AP curve of one sensor modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApCurve {
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_ap_min")]
    pub ap_min: f64,
    #[serde(default = "default_ap_max")]
    pub ap_max: f64,
}

fn default_ap_min() -> f64 {
    DEFAULT_AP_MIN
}

fn default_ap_max() -> f64 {
    DEFAULT_AP_MAX
}

impl ApCurve {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        ApCurve::with_bounds(a, b, DEFAULT_AP_MIN, DEFAULT_AP_MAX)
    }

    pub fn with_bounds(a: f64, b: f64, ap_min: f64, ap_max: f64) -> Result<Self> {
        let c = ApCurve { a, b, ap_min, ap_max };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::invalid("a", format!("slope {} must be positive", self.a)));
        }
        if !self.b.is_finite() {
            return Err(Error::invalid("b", "intercept must be finite"));
        }
        if !(0.0 < self.ap_min && self.ap_min < self.ap_max && self.ap_max < 1.0) {
            return Err(Error::invalid(
                "ap_min",
                format!(
                    "clamp bounds must satisfy 0 < ap_min < ap_max < 1, got [{}, {}]",
                    self.ap_min, self.ap_max
                ),
            ));
        }
        Ok(())
    }

    /// PointPillars-derived LiDAR curve.
    pub fn lidar_default() -> Self {
        ApCurve {
            a: 0.152,
            b: 0.659,
            ap_min: DEFAULT_AP_MIN,
            ap_max: DEFAULT_AP_MAX,
        }
    }

    /// RTM3D-derived monocular camera curve.
    pub fn camera_default() -> Self {
        ApCurve {
            a: 0.055,
            b: 0.155,
            ap_min: DEFAULT_AP_MIN,
            ap_max: DEFAULT_AP_MAX,
        }
    }
}

/// One (normalized measurement, AP) observation for curve fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApSample {
    pub m_norm: f64,
    pub ap: f64,
}

impl ApSample {
    pub fn new(m_norm: f64, ap: f64) -> Result<Self> {
        if !(m_norm > 0.0 && m_norm.is_finite()) {
            return Err(Error::invalid("m_norm", format!("{m_norm} must be positive")));
        }
        if !(0.0..=1.0).contains(&ap) {
            return Err(Error::invalid("ap", format!("{ap} must lie in [0, 1]")));
        }
        Ok(ApSample { m_norm, ap })
    }
}

pub fn ap_from_measurement(m: f64, curve: &ApCurve) -> f64 {
    if m <= 0.0 {
        return curve.ap_min;
    }
    (curve.a * m.ln() + curve.b).clamp(curve.ap_min, curve.ap_max)
}

pub fn sigma_from_ap(ap: f64) -> Result<f64> {
    if !(ap > 0.0 && ap <= 1.0) {
        return Err(Error::invalid("ap", format!("{ap} must lie in (0, 1]")));
    }
    Ok(1.0 / ap - 1.0)
}

pub fn gaussian_entropy(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("{sigma} must be positive")));
    }
    Ok(entropy_of_sigma(sigma))
}

#[inline]
pub(crate) fn entropy_of_sigma(sigma: f64) -> f64 {
    2.0 * sigma.ln() + 1.0 + TAU.ln()
}

/// σ for a (possibly fused) measurement. Always within `[1/ap_max − 1, 1/ap_min − 1]`.
#[inline]
pub fn sigma_from_measurement(m: f64, curve: &ApCurve) -> f64 {
    1.0 / ap_from_measurement(m, curve) - 1.0
}

pub fn voxel_entropy(m: f64, curve: &ApCurve) -> f64 {
    entropy_of_sigma(sigma_from_measurement(m, curve))
}

/// Scales an object-level measurement to a per-voxel one by the ratio of surface areas.
pub fn normalize_measurement(m_object: f64, object_surface_area: f64, voxel_surface_area: f64) -> Result<f64> {
    if !(object_surface_area > 0.0) {
        return Err(Error::invalid(
            "object_surface_area",
            format!("{object_surface_area} m² must be positive"),
        ));
    }
    if !(voxel_surface_area > 0.0) {
        return Err(Error::invalid(
            "voxel_surface_area",
            format!("{voxel_surface_area} m² must be positive"),
        ));
    }
    Ok(m_object / (object_surface_area / voxel_surface_area))
}

/// Total surface area of an axis-aligned box with the given extents.
pub fn box_surface_area(dx: f64, dy: f64, dz: f64) -> f64 {
    2.0 * (dx * dy + dy * dz + dx * dz)
}

/// Reads `m_norm,ap` rows.
pub fn read_ap_samples(path: &Path) -> Result<Vec<ApSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ap_samples(&text, path)
}

pub fn parse_ap_samples(text: &str, path: &Path) -> Result<Vec<ApSample>> {
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["m_norm", "ap"] {
        return Err(parse_err(1, format!("expected header m_norm,ap, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut samples = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("`{}` is not a number", &rec[i])))
        };
        let sample = ApSample::new(num(0)?, num(1)?).map_err(|e| parse_err(line, e.to_string()))?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(parse_err(2, "expected at least one m_norm,ap row".into()));
    }
    Ok(samples)
}

/// Ordinary least squares of AP against `ln(m_norm)`.
pub fn fit_ap_curve(samples: &[ApSample]) -> Result<ApCurve> {
    if samples.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.m_norm.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = samples.iter().map(|s| s.ap).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, s) in xs.iter().zip(samples) {
        let dx = x - x_mean;
        sxx += dx * dx;
        sxy += dx * (s.ap - y_mean);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all m_norm values are equal".into()));
    }
    let a = sxy / sxx;
    if !(a > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted slope {a} is not positive")));
    }
    Ok(ApCurve {
        a,
        b: y_mean - a * x_mean,
        ap_min: DEFAULT_AP_MIN,
        ap_max: DEFAULT_AP_MAX,
    })
}
