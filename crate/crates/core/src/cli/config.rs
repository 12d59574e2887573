//! JSON run configuration.
//!
//! Rationals are `"p/q"` strings and points are `[re, im]` pairs. Every
//! rejection names the offending field, e.g. `solenoids[1].intensity`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

use crate::flux::{format_rational, parse_rational, Bump, ExtensionKind, FieldConfig, FluxError, Rational, Solenoid};
use crate::numerics::Thresholds;

/// A rejected document, with the path of the field at fault.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Sampling grid `nx × ny` over `[-extent, extent]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub extent: f64,
    /// Points closer than this to a solenoid are reported as missing.
    #[serde(default = "default_exclusion")]
    pub exclusion: f64,
}

fn default_exclusion() -> f64 {
    1e-3
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, extent: f64) -> Self {
        Self {
            nx,
            ny,
            extent,
            exclusion: default_exclusion(),
        }
    }

    fn axis(n: usize, extent: f64, i: usize) -> f64 {
        if n == 1 {
            0.0
        } else {
            -extent + 2.0 * extent * i as f64 / (n - 1) as f64
        }
    }

    /// Row-major points, `x` varying fastest.
    pub fn points(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push(Complex64::new(
                    Self::axis(self.nx, self.extent, ix),
                    Self::axis(self.ny, self.extent, iy),
                ));
            }
        }
        out
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        let err = |field: &str, message: &str| ConfigError {
            path: format!("{path}.{field}"),
            message: message.into(),
        };
        if self.nx == 0 {
            return Err(err("nx", "must be positive"));
        }
        if self.ny == 0 {
            return Err(err("ny", "must be positive"));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(err("extent", "must be positive"));
        }
        if !(self.exclusion >= 0.0 && self.exclusion.is_finite()) {
            return Err(err("exclusion", "must be nonnegative"));
        }
        Ok(())
    }
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    /// `NX,NY,EXTENT`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected NX,NY,EXTENT, got `{s}`"));
        }
        let nx = parts[0].parse().map_err(|_| format!("bad NX `{}`", parts[0]))?;
        let ny = parts[1].parse().map_err(|_| format!("bad NY `{}`", parts[1]))?;
        let extent = parts[2].parse().map_err(|_| format!("bad EXTENT `{}`", parts[2]))?;
        let grid = GridSpec::new(nx, ny, extent);
        grid.validate("grid").map_err(|e| e.to_string())?;
        Ok(grid)
    }
}

/// Optional changes to the default quadrature layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_panels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_panels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

impl QuadratureOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

impl Outputs {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Field, extension, sampling and threshold settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub field: FieldConfig,
    pub extension: Option<ExtensionKind>,
    pub grid: Option<GridSpec>,
    pub quadrature: QuadratureOverrides,
    pub thresholds: Thresholds,
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn from_field(field: FieldConfig) -> Self {
        Self {
            field,
            extension: None,
            grid: None,
            quadrature: QuadratureOverrides::default(),
            thresholds: Thresholds::default(),
            outputs: Outputs::default(),
        }
    }
}

mod rational_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBump {
    center: [f64; 2],
    radius: f64,
    #[serde(with = "rational_string")]
    flux_over_2pi: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolenoid {
    position: [f64; 2],
    #[serde(with = "rational_string")]
    intensity: Rational,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawThresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gram_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gauge_identity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quadrature_tolerance: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    bumps: Vec<RawBump>,
    #[serde(default)]
    solenoids: Vec<RawSolenoid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extension: Option<ExtensionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "QuadratureOverrides::is_empty")]
    quadrature: QuadratureOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<RawThresholds>,
    #[serde(default, skip_serializing_if = "Outputs::is_empty")]
    outputs: Outputs,
}

fn point(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn positive(value: Option<f64>, path: &str) -> Result<(), ConfigError> {
    match value {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(ConfigError {
            path: path.into(),
            message: format!("must be positive, got {v}"),
        }),
        _ => Ok(()),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let mut bumps = Vec::with_capacity(raw.bumps.len());
    for (i, b) in raw.bumps.iter().enumerate() {
        let bump = Bump::new(point(b.center), b.radius, b.flux_over_2pi).map_err(|e| ConfigError {
            path: match e {
                FluxError::BadRadius(_) => format!("bumps[{i}].radius"),
                _ => format!("bumps[{i}].center"),
            },
            message: e.to_string(),
        })?;
        bumps.push(bump);
    }
    let mut solenoids = Vec::with_capacity(raw.solenoids.len());
    for (i, s) in raw.solenoids.iter().enumerate() {
        let sol = Solenoid::new(point(s.position), s.intensity).map_err(|e| ConfigError {
            path: match e {
                FluxError::IntegerIntensity(_) => format!("solenoids[{i}].intensity"),
                _ => format!("solenoids[{i}].position"),
            },
            message: e.to_string(),
        })?;
        solenoids.push(sol);
    }
    let field = FieldConfig::new(bumps, solenoids).map_err(|e| ConfigError {
        path: match &e {
            FluxError::DuplicateSolenoid { second, .. } => format!("solenoids[{second}].position"),
            _ => "solenoids".into(),
        },
        message: e.to_string(),
    })?;

    if let Some(grid) = &raw.grid {
        grid.validate("grid")?;
    }
    let q = &raw.quadrature;
    positive(q.inner_radius, "quadrature.inner_radius")?;
    positive(q.outer_radius, "quadrature.outer_radius")?;
    for (v, name) in [
        (q.radial_panels, "radial_panels"),
        (q.angular_panels, "angular_panels"),
        (q.order, "order"),
    ] {
        if v == Some(0) {
            return Err(ConfigError {
                path: format!("quadrature.{name}"),
                message: "must be positive".into(),
            });
        }
    }

    let mut thresholds = Thresholds::default();
    if let Some(t) = &raw.thresholds {
        for (v, name, slot) in [
            (t.kernel_residual, "kernel_residual", &mut thresholds.kernel_residual),
            (t.gram_ratio, "gram_ratio", &mut thresholds.gram_ratio),
            (t.gauge_identity, "gauge_identity", &mut thresholds.gauge_identity),
            (t.quadrature_tolerance, "quadrature_tolerance", &mut thresholds.quadrature_tolerance),
        ] {
            positive(v, &format!("thresholds.{name}"))?;
            if let Some(v) = v {
                *slot = v;
            }
        }
    }

    Ok(RunConfig {
        field,
        extension: raw.extension,
        grid: raw.grid,
        quadrature: raw.quadrature,
        thresholds,
        outputs: raw.outputs,
    })
}

/// Serializes a configuration so that [`parse_config`] returns it unchanged.
pub fn emit_config(config: &RunConfig) -> String {
    let defaults = Thresholds::default();
    let t = &config.thresholds;
    let pick = |v: f64, d: f64| if v == d { None } else { Some(v) };
    let thresholds = RawThresholds {
        kernel_residual: pick(t.kernel_residual, defaults.kernel_residual),
        gram_ratio: pick(t.gram_ratio, defaults.gram_ratio),
        gauge_identity: pick(t.gauge_identity, defaults.gauge_identity),
        quadrature_tolerance: pick(t.quadrature_tolerance, defaults.quadrature_tolerance),
    };
    let has_thresholds = thresholds.kernel_residual.is_some()
        || thresholds.gram_ratio.is_some()
        || thresholds.gauge_identity.is_some()
        || thresholds.quadrature_tolerance.is_some();
    let raw = RawConfig {
        bumps: config
            .field
            .bumps()
            .iter()
            .map(|b| RawBump {
                center: [b.center().re, b.center().im],
                radius: b.radius(),
                flux_over_2pi: b.flux(),
            })
            .collect(),
        solenoids: config
            .field
            .solenoids()
            .iter()
            .map(|s| RawSolenoid {
                position: [s.position().re, s.position().im],
                intensity: s.intensity(),
            })
            .collect(),
        extension: config.extension,
        grid: config.grid,
        quadrature: config.quadrature.clone(),
        thresholds: has_thresholds.then_some(thresholds),
        outputs: config.outputs.clone(),
    };
    serde_json::to_string_pretty(&raw).expect("configuration serializes")
}
