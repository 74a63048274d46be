//! Where objects are expected: the sampling grid over the perception space and the
//! normalized, weighted mixture of per-class spatial densities on it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Axis-aligned region around the ego vehicle that gets evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptionSpace {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    pub sample_interval: f64,
}

impl Default for PerceptionSpace {
    fn default() -> Self {
        PerceptionSpace {
            x_range: (-80.0, 80.0),
            y_range: (-40.0, 40.0),
            z_range: (0.0, 5.0),
            sample_interval: 0.5,
        }
    }
}

fn axis_count(range: (f64, f64), interval: f64) -> usize {
    let r = (range.1 - range.0) / interval;
    let n = if (r - r.round()).abs() < 1e-6 { r.round() } else { r.floor() };
    (n as usize).max(1)
}

impl PerceptionSpace {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), z_range: (f64, f64), sample_interval: f64) -> Result<Self> {
        let s = PerceptionSpace {
            x_range,
            y_range,
            z_range,
            sample_interval,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("x_range", self.x_range), ("y_range", self.y_range), ("z_range", self.z_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(name, format!("[{lo}, {hi}] is not a proper interval")));
            }
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::invalid(
                "sampling_interval_m",
                format!("{} m must be positive", self.sample_interval),
            ));
        }
        Ok(())
    }

    pub fn with_interval(&self, sample_interval: f64) -> Self {
        PerceptionSpace {
            sample_interval,
            ..*self
        }
    }

    /// Grid points along x, y, z.
    pub fn dims(&self) -> [usize; 3] {
        [
            axis_count(self.x_range, self.sample_interval),
            axis_count(self.y_range, self.sample_interval),
            axis_count(self.z_range, self.sample_interval),
        ]
    }

    pub fn sample_count(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn contains(&self, s: &Vector3<f64>) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(s.x, self.x_range) && inside(s.y, self.y_range) && inside(s.z, self.z_range)
    }

    /// Grid point `index` in lexicographic (x, y, z) order, z fastest.
    #[inline]
    pub fn position(&self, index: usize) -> Vector3<f64> {
        let [_, ny, nz] = self.dims();
        let iz = index % nz;
        let iy = (index / nz) % ny;
        let ix = index / (nz * ny);
        self.position_at(ix, iy, iz)
    }

    #[inline]
    pub fn position_at(&self, ix: usize, iy: usize, iz: usize) -> Vector3<f64> {
        let h = self.sample_interval;
        Vector3::new(
            self.x_range.0 + (ix as f64 + 0.5) * h,
            self.y_range.0 + (iy as f64 + 0.5) * h,
            self.z_range.0 + (iz as f64 + 0.5) * h,
        )
    }
}

/// Cell-center positions of the space, x outermost and z innermost.
pub fn sample_grid(space: &PerceptionSpace) -> impl ExactSizeIterator<Item = Vector3<f64>> + '_ {
    (0..space.sample_count()).map(move |i| space.position(i))
}

/// 2D density histogram over (x, y). Values are row-major with y as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    pub x_min: f64,
    pub y_min: f64,
    pub bin_size: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl Histogram2D {
    pub fn new(x_min: f64, y_min: f64, bin_size: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if !(bin_size > 0.0 && bin_size.is_finite()) {
            return Err(Error::invalid("bin_size", format!("{bin_size} must be positive")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("nx", "histogram needs at least one bin per axis"));
        }
        if values.len() != nx * ny {
            return Err(Error::invalid(
                "values",
                format!("expected nx·ny = {} values, got {}", nx * ny, values.len()),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("values", format!("density {bad} must be non-negative")));
        }
        if !values.iter().any(|v| *v > 0.0) {
            return Err(Error::invalid("values", "histogram has no positive bin"));
        }
        Ok(Histogram2D {
            x_min,
            y_min,
            bin_size,
            nx,
            ny,
            values,
        })
    }

    /// Value of the bin containing (x, y); zero outside the histogram.
    #[inline]
    pub fn lookup(&self, x: f64, y: f64) -> f64 {
        let fx = ((x - self.x_min) / self.bin_size).floor();
        let fy = ((y - self.y_min) / self.bin_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return 0.0;
        }
        self.values[fy as usize * self.nx + fx as usize]
    }

    /// Reads the histogram CSV: a `x_min,y_min,bin_size,nx,ny` header line, the
    /// matching values on line 2, then `nx·ny` densities in any line layout.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Histogram2D::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: u64, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header != ["x_min", "y_min", "bin_size", "nx", "ny"] {
            return Err(parse_err(1, format!("expected header x_min,y_min,bin_size,nx,ny, got {}", header.join(","))));
        }

        let mut records = reader.records();
        let meta = match records.next() {
            Some(r) => r.map_err(|e| parse_err(2, e.to_string()))?,
            None => return Err(parse_err(2, "missing histogram geometry values".into())),
        };
        if meta.len() != 5 {
            return Err(parse_err(2, format!("expected 5 geometry values, got {}", meta.len())));
        }
        let num = |i: usize| -> Result<f64> {
            meta[i]
                .parse::<f64>()
                .map_err(|_| parse_err(2, format!("`{}` is not a number", &meta[i])))
        };
        let count = |i: usize| -> Result<usize> {
            meta[i]
                .parse::<usize>()
                .map_err(|_| parse_err(2, format!("`{}` is not a bin count", &meta[i])))
        };
        let (x_min, y_min, bin_size, nx, ny) = (num(0)?, num(1)?, num(2)?, count(3)?, count(4)?);

        let mut values = Vec::with_capacity(nx.saturating_mul(ny).min(1 << 24));
        for rec in records {
            let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            for field in rec.iter().filter(|f| !f.is_empty()) {
                let v = field
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("`{field}` is not a number")))?;
                values.push(v);
            }
        }
        Histogram2D::new(x_min, y_min, bin_size, nx, ny, values).map_err(|e| parse_err(0, e.to_string()))
    }
}

/// Spatial density of one object class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrior {
    pub class_name: String,
    pub histogram: Histogram2D,
    /// Heights (m) the class occupies; zero density outside.
    pub z_extent: (f64, f64),
}

impl ClassPrior {
    #[inline]
    pub fn density(&self, s: &Vector3<f64>) -> f64 {
        if s.z < self.z_extent.0 || s.z > self.z_extent.1 {
            return 0.0;
        }
        self.histogram.lookup(s.x, s.y)
    }
}

/// Multiplies the weight of matching classes inside an (x, y) box.
/// Open bounds are `None`; intervals are half-open `[min, max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRegion {
    pub x_range: (Option<f64>, Option<f64>),
    pub y_range: (Option<f64>, Option<f64>),
    pub class_filter: Option<String>,
    pub multiplier: f64,
}

impl WeightRegion {
    pub fn everywhere(multiplier: f64) -> Self {
        WeightRegion {
            x_range: (None, None),
            y_range: (None, None),
            class_filter: None,
            multiplier,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.multiplier > 0.0 && self.multiplier.is_finite()) {
            return Err(Error::invalid(
                "multiplier",
                format!("{} must be positive", self.multiplier),
            ));
        }
        Ok(())
    }

    #[inline]
    fn applies(&self, s: &Vector3<f64>, class: Option<&str>) -> bool {
        let within = |v: f64, (lo, hi): (Option<f64>, Option<f64>)| {
            lo.is_none_or(|l| v >= l) && hi.is_none_or(|h| v < h)
        };
        let class_ok = match (&self.class_filter, class) {
            (None, _) => true,
            (Some(f), Some(c)) => f == c,
            (Some(_), None) => false,
        };
        class_ok && within(s.x, self.x_range) && within(s.y, self.y_range)
    }
}

/// Where a class histogram lives on disk and which heights the class spans.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSource {
    pub path: PathBuf,
    pub z_extent: Option<(f64, f64)>,
}

/// Normalized prior `p_S(s) = η · Σ_c w(s, c) · p_c(s)` over the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorField {
    space: PerceptionSpace,
    classes: Vec<ClassPrior>,
    regions: Vec<WeightRegion>,
    eta: f64,
}

impl PriorField {
    /// With no classes the prior is uniform over the space; class-agnostic
    /// regions still reweight it.
    pub fn new(space: PerceptionSpace, classes: Vec<ClassPrior>, regions: Vec<WeightRegion>) -> Result<Self> {
        space.validate()?;
        for r in &regions {
            r.validate()?;
        }
        let mut field = PriorField {
            space,
            classes,
            regions,
            eta: 1.0,
        };
        let total = neumaier_sum(sample_grid(&space).map(|s| field.unnormalized(&s)));
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("prior", "combined density is zero over the whole grid"));
        }
        field.eta = 1.0 / total;
        Ok(field)
    }

    pub fn uniform(space: PerceptionSpace) -> Result<Self> {
        PriorField::new(space, Vec::new(), Vec::new())
    }

    pub fn space(&self) -> &PerceptionSpace {
        &self.space
    }

    pub fn classes(&self) -> &[ClassPrior] {
        &self.classes
    }

    pub fn regions(&self) -> &[WeightRegion] {
        &self.regions
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn weight(&self, s: &Vector3<f64>, class: Option<&str>) -> f64 {
        self.regions
            .iter()
            .filter(|r| r.applies(s, class))
            .map(|r| r.multiplier)
            .product()
    }

    /// `Σ_c w(s, c) · p_c(s)` before normalization.
    pub fn unnormalized(&self, s: &Vector3<f64>) -> f64 {
        if self.classes.is_empty() {
            return self.weight(s, None);
        }
        self.classes
            .iter()
            .map(|c| {
                let d = c.density(s);
                if d == 0.0 {
                    0.0
                } else {
                    self.weight(s, Some(&c.class_name)) * d
                }
            })
            .sum()
    }

    /// Normalized density at a grid position; zero outside the space.
    pub fn density(&self, s: &Vector3<f64>) -> f64 {
        if !self.space.contains(s) {
            return 0.0;
        }
        self.eta * self.unnormalized(s)
    }
}

pub fn prior_density(field: &PriorField, s: &Vector3<f64>) -> f64 {
    field.density(s)
}

/// Builds the prior from per-class histogram files. Classes whose file does not
/// exist are skipped.
pub fn load_prior(
    space: PerceptionSpace,
    class_files: &BTreeMap<String, ClassSource>,
    regions: Vec<WeightRegion>,
) -> Result<PriorField> {
    let mut classes = Vec::new();
    for (name, src) in class_files {
        if !src.path.exists() {
            continue;
        }
        let histogram = Histogram2D::from_csv(&src.path)?;
        let z_extent = src.z_extent.unwrap_or(space.z_range);
        if !(z_extent.0 <= z_extent.1) {
            return Err(Error::invalid(
                format!("prior.classes.{name}.z_range"),
                "lower bound exceeds upper bound",
            ));
        }
        classes.push(ClassPrior {
            class_name: name.clone(),
            histogram,
            z_extent,
        });
    }
    PriorField::new(space, classes, regions)
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
