//! Exact flux bookkeeping for a field made of smooth bumps plus Aharonov-Bohm
//! solenoids, gauge reductions of the solenoid intensities, and the
//! Aharonov-Casher zero-mode counts for the supported self-adjoint extensions.
//!
//! Every flux quantity is a [`Rational`], so the bracket function, which jumps at
//! integers, is always decided exactly.

use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational flux value (flux divided by 2π).
pub type Rational = num_rational::Rational64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("solenoid intensity {0} is an integer")]
    IntegerIntensity(Rational),
    #[error("bump radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("coordinate is not finite")]
    NonFiniteCoordinate,
    #[error("solenoids {first} and {second} share the position {position}")]
    DuplicateSolenoid {
        first: usize,
        second: usize,
        position: Complex64,
    },
    #[error("expected {expected} gauge shifts, got {got}")]
    ShiftLengthMismatch { expected: usize, got: usize },
    #[error("non-reduced EV operator needs every intensity in (-1, 1); solenoid {index} has {alpha}")]
    IntensityOutOfRange { index: usize, alpha: Rational },
}

/// The self-adjoint extension whose kernel is being counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ExtensionKind {
    /// Derivatives taken in distributions on the punctured plane.
    #[serde(rename = "maximal")]
    Maximal,
    /// Erdős-Vougalter operator after reducing intensities to `[-1/2, 1/2)`.
    #[serde(rename = "ev")]
    Ev,
    /// Erdős-Vougalter form applied directly, intensities must lie in `(-1, 1)`.
    #[serde(rename = "ev-nonreduced")]
    NonReducedEv,
}

impl ExtensionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtensionKind::Maximal => "maximal",
            ExtensionKind::Ev => "ev",
            ExtensionKind::NonReducedEv => "ev-nonreduced",
        }
    }
}

impl fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExtensionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maximal" => Ok(ExtensionKind::Maximal),
            "ev" => Ok(ExtensionKind::Ev),
            "ev-nonreduced" => Ok(ExtensionKind::NonReducedEv),
            other => Err(format!(
                "unknown extension `{other}` (expected maximal, ev or ev-nonreduced)"
            )),
        }
    }
}

/// Spinor component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Up => "up",
            Spin::Down => "down",
        })
    }
}

/// An Aharonov-Bohm solenoid `2π α δ_{z_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solenoid {
    position: Complex64,
    intensity: Rational,
}

impl Solenoid {
    pub fn new(position: Complex64, intensity: Rational) -> Result<Self, FluxError> {
        if !position.re.is_finite() || !position.im.is_finite() {
            return Err(FluxError::NonFiniteCoordinate);
        }
        if intensity.is_integer() {
            return Err(FluxError::IntegerIntensity(intensity));
        }
        Ok(Self {
            position,
            intensity,
        })
    }

    pub fn position(&self) -> Complex64 {
        self.position
    }

    pub fn intensity(&self) -> Rational {
        self.intensity
    }
}

/// A radial C¹ bump of the regular field with compact support in a disc.
///
/// The profile is `(1 - (r/radius)²)²`, scaled so that the bump carries
/// `flux_over_2pi` units of flux.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    center: Complex64,
    radius: f64,
    flux_over_2pi: Rational,
}

impl Bump {
    pub fn new(center: Complex64, radius: f64, flux_over_2pi: Rational) -> Result<Self, FluxError> {
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(FluxError::NonFiniteCoordinate);
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(FluxError::BadRadius(radius));
        }
        Ok(Self {
            center,
            radius,
            flux_over_2pi,
        })
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn flux(&self) -> Rational {
        self.flux_over_2pi
    }
}

/// Magnetic field `B = B₀ + Σ 2π α_j δ_{z_j}` with `B₀` a finite sum of bumps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldConfig {
    bumps: Vec<Bump>,
    solenoids: Vec<Solenoid>,
}

impl FieldConfig {
    pub fn new(bumps: Vec<Bump>, solenoids: Vec<Solenoid>) -> Result<Self, FluxError> {
        for (i, a) in solenoids.iter().enumerate() {
            for (j, b) in solenoids.iter().enumerate().skip(i + 1) {
                if a.position == b.position {
                    return Err(FluxError::DuplicateSolenoid {
                        first: i,
                        second: j,
                        position: a.position,
                    });
                }
            }
        }
        Ok(Self { bumps, solenoids })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn solenoids(&self) -> &[Solenoid] {
        &self.solenoids
    }

    /// Number of solenoids `n`.
    pub fn n(&self) -> usize {
        self.solenoids.len()
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.solenoids.iter().map(|s| s.position).collect()
    }

    pub fn intensities(&self) -> Vec<Rational> {
        self.solenoids.iter().map(|s| s.intensity).collect()
    }

    /// Regular-part flux `Φ₀`.
    pub fn bump_flux(&self) -> Rational {
        self.bumps.iter().map(|b| b.flux_over_2pi).sum()
    }

    fn with_intensities(&self, intensities: impl Iterator<Item = Rational>) -> Self {
        let solenoids = self
            .solenoids
            .iter()
            .zip(intensities)
            .map(|(s, a)| Solenoid {
                position: s.position,
                intensity: a,
            })
            .collect();
        Self {
            bumps: self.bumps.clone(),
            solenoids,
        }
    }

    /// True when all intensities lie in `(0, 1)`.
    pub fn is_unit_normalized(&self) -> bool {
        self.solenoids
            .iter()
            .all(|s| s.intensity > Rational::zero() && s.intensity < Rational::one())
    }
}

/// Pair of kernel dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct ModeCount {
    pub spin_up: u64,
    pub spin_down: u64,
}

impl ModeCount {
    pub fn total(&self) -> u64 {
        self.spin_up + self.spin_down
    }
}

/// `{x}`: zero for `x ≤ 1`, otherwise the largest integer strictly below `x`.
pub fn curly_bracket(x: Rational) -> u64 {
    if x <= Rational::one() {
        return 0;
    }
    let below = x.ceil().to_integer() - 1;
    below as u64
}

/// Total flux `Φ = Φ₀ + Σ α_j`.
pub fn total_flux(config: &FieldConfig) -> Rational {
    config.bump_flux() + config.solenoids.iter().map(|s| s.intensity).sum::<Rational>()
}

/// Shift every intensity by an integer, `α_j ↦ α_j + m_j`.
pub fn gauge_shift(config: &FieldConfig, shifts: &[i64]) -> Result<FieldConfig, FluxError> {
    if shifts.len() != config.n() {
        return Err(FluxError::ShiftLengthMismatch {
            expected: config.n(),
            got: shifts.len(),
        });
    }
    Ok(config.with_intensities(
        config
            .solenoids
            .iter()
            .zip(shifts)
            .map(|(s, &m)| s.intensity + Rational::from_integer(m)),
    ))
}

/// Gauge every intensity into `(0, 1)`. Returns the shifted config and the
/// shifts `m_j` that were applied.
pub fn normalize_to_unit_interval(config: &FieldConfig) -> (FieldConfig, Vec<i64>) {
    let shifts: Vec<i64> = config
        .solenoids
        .iter()
        .map(|s| -s.intensity.floor().to_integer())
        .collect();
    let out = gauge_shift(config, &shifts).expect("one shift per solenoid");
    (out, shifts)
}

/// Gauge every intensity into `[-1/2, 1/2)`.
pub fn reduce_to_ev_interval(config: &FieldConfig) -> (FieldConfig, Vec<i64>) {
    let half = Rational::new(1, 2);
    let shifts: Vec<i64> = config
        .solenoids
        .iter()
        .map(|s| -(s.intensity + half).floor().to_integer())
        .collect();
    let out = gauge_shift(config, &shifts).expect("one shift per solenoid");
    (out, shifts)
}

/// `B ↦ -B`.
pub fn negate_field(config: &FieldConfig) -> FieldConfig {
    FieldConfig {
        bumps: config
            .bumps
            .iter()
            .map(|b| Bump {
                flux_over_2pi: -b.flux_over_2pi,
                ..b.clone()
            })
            .collect(),
        solenoids: config
            .solenoids
            .iter()
            .map(|s| Solenoid {
                position: s.position,
                intensity: -s.intensity,
            })
            .collect(),
    }
}

/// Dimension of the kernel of the chosen extension, split by spin.
pub fn count_zero_modes(config: &FieldConfig, kind: ExtensionKind) -> Result<ModeCount, FluxError> {
    match kind {
        ExtensionKind::Maximal => {
            let (normalized, _) = normalize_to_unit_interval(config);
            let phi = total_flux(&normalized);
            let n = Rational::from_integer(normalized.n() as i64);
            Ok(ModeCount {
                spin_up: curly_bracket(n - phi),
                spin_down: curly_bracket(phi),
            })
        }
        ExtensionKind::Ev => {
            let (reduced, _) = reduce_to_ev_interval(config);
            let phi = total_flux(&reduced);
            let total = curly_bracket(phi.abs());
            Ok(if phi.is_positive() {
                ModeCount {
                    spin_up: 0,
                    spin_down: total,
                }
            } else {
                ModeCount {
                    spin_up: total,
                    spin_down: 0,
                }
            })
        }
        ExtensionKind::NonReducedEv => {
            let one = Rational::one();
            if let Some((index, s)) = config
                .solenoids
                .iter()
                .enumerate()
                .find(|(_, s)| s.intensity <= -one || s.intensity >= one)
            {
                return Err(FluxError::IntensityOutOfRange {
                    index,
                    alpha: s.intensity,
                });
            }
            let phi = total_flux(config);
            Ok(ModeCount {
                spin_up: curly_bracket(-phi),
                spin_down: curly_bracket(phi),
            })
        }
    }
}

/// Parse `"p/q"` or `"p"` into a rational in lowest terms.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: i64 = num
        .parse()
        .map_err(|_| format!("`{text}` is not a rational of the form p/q"))?;
    let den: i64 = den
        .parse()
        .map_err(|_| format!("`{text}` is not a rational of the form p/q"))?;
    if den == 0 {
        return Err(format!("`{text}` has a zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// Render a rational as `"p/q"`, or `"p"` when integral.
pub fn format_rational(x: Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Integer part helper shared with mode construction: smallest integer `> x`.
pub(crate) fn smallest_integer_above(x: Rational) -> i64 {
    x.floor().to_integer() + 1
}
