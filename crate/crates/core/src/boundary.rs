//! Asymptotic coefficients at a solenoid, the `ν₀`/`ν₁` extension
//! parameters, and approximability by regular fields.
//!
//! Near a solenoid of intensity `α ∈ (0, 1)` at the origin, functions in the
//! form domain behave like
//!
//! ```text
//! ψ ∼ c_{-α} r^{-α} + c_α r^α + (c_{α-1} r^{α-1} + c_{1-α} r^{1-α}) e^{∓iθ} + O(r^γ)
//! ```
//!
//! with `γ = min(1 + α, 2 - α)`, the angular factor being `e^{-iθ}` for spin
//! up and `e^{+iθ}` for spin down.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

use crate::flux::{format_rational, ExtensionKind, Rational, Spin};
use crate::potential::{rational_to_f64, PotentialEvaluator};

/// Condition number above which a fit is refused.
pub const MAX_CONDITION: f64 = 1e10;
/// Relative coefficient change allowed when the largest radius is dropped.
pub const STABILITY_TOLERANCE: f64 = 1e-4;
/// Relative least-squares residual above which the data is not of the expected form.
pub const FIT_TOLERANCE: f64 = 1e-6;
/// Relative size below which a coefficient is treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("need at least 3 radii, got {0}")]
    TooFewRadii(usize),
    #[error("radii must be positive and strictly decreasing")]
    BadRadii,
    #[error("angular quadrature needs at least 16 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("sampler failed at r = {r}, θ = {theta}")]
    SamplerFailure { r: f64, theta: f64 },
    #[error("fit is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("fit residual {0:.3e} too large: data is not a power-law expansion of the expected form")]
    PoorFit(f64),
    #[error("coefficients changed by {0:.3e} when the largest radius was dropped")]
    Unstable(f64),
    #[error("both coefficients of `{0}` vanish")]
    Indeterminate(&'static str),
    #[error("intensity {0} must lie in (0, 1)")]
    AlphaOutOfRange(String),
    #[error("the EV parameters are only available for intensities in (0, 1/2), got {0}")]
    UnsupportedRange(String),
    #[error("probe needs one solenoid at the origin and no bumps: {0}")]
    ProbeConfig(String),
    #[error("probe coefficient `{name}` should vanish but measured {value:.3e}")]
    Inconsistent { name: &'static str, value: f64 },
}

/// The four functionals of the local expansion, with the remainder exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCoeffs {
    pub c_minus_alpha: Complex64,
    pub c_alpha: Complex64,
    pub c_alpha_minus_1: Complex64,
    pub c_1_minus_alpha: Complex64,
    pub alpha: Rational,
    pub gamma: Rational,
    /// Relative least-squares residual of the fit.
    pub residual: f64,
}

/// `min(1 + α, 2 - α)`.
pub fn remainder_exponent(alpha: Rational) -> Rational {
    let one = Rational::one();
    (one + alpha).min(Rational::from_integer(2) - alpha)
}

impl AsymptoticCoeffs {
    pub fn zero(alpha: Rational) -> Self {
        Self {
            c_minus_alpha: Complex64::zero(),
            c_alpha: Complex64::zero(),
            c_alpha_minus_1: Complex64::zero(),
            c_1_minus_alpha: Complex64::zero(),
            alpha,
            gamma: remainder_exponent(alpha),
            residual: 0.0,
        }
    }

    fn as_array(&self) -> [Complex64; 4] {
        [self.c_minus_alpha, self.c_alpha, self.c_alpha_minus_1, self.c_1_minus_alpha]
    }

    /// Largest coefficient modulus.
    pub fn scale(&self) -> f64 {
        self.as_array().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinity)
    }

    /// Agreement within `tol` relative (absolute near zero); infinities agree only with each other.
    pub fn approx_eq(self, other: ExtendedReal, tol: f64) -> bool {
        match (self, other) {
            (ExtendedReal::Infinity, ExtendedReal::Infinity) => true,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0),
            _ => false,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => s.serialize_f64(*x),
            ExtendedReal::Infinity => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuParams {
    pub nu0: ExtendedReal,
    pub nu1: ExtendedReal,
    pub spin: Spin,
}

impl NuParams {
    pub fn approx_eq(&self, other: &NuParams, tol: f64) -> bool {
        self.spin == other.spin && self.nu0.approx_eq(other.nu0, tol) && self.nu1.approx_eq(other.nu1, tol)
    }
}

/// `(1/2π)∫₀^{2π} sampler(r, θ)·e^{ikθ} dθ` by the trapezoidal rule.
pub fn angular_moment<F>(sampler: F, r: f64, k: i32, nodes: usize) -> Result<Complex64, BoundaryError>
where
    F: Fn(f64, f64) -> Option<Complex64>,
{
    if nodes < 16 {
        return Err(BoundaryError::TooFewNodes(nodes));
    }
    let mut sum = Complex64::zero();
    for m in 0..nodes {
        let theta = 2.0 * PI * m as f64 / nodes as f64;
        let v = sampler(r, theta).ok_or(BoundaryError::SamplerFailure { r, theta })?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(BoundaryError::SamplerFailure { r, theta });
        }
        sum += v * Complex64::from_polar(1.0, k as f64 * theta);
    }
    Ok(sum / nodes as f64)
}

const MOMENT_NODES: usize = 64;

struct Fit {
    coeffs: Vec<Complex64>,
    residual_norm: f64,
    data_norm: f64,
    condition: f64,
}

/// Least squares `Σ_i x_i r^{p_i} ≈ data(r)` with normalized columns.
fn power_fit(radii: &[f64], powers: &[f64], data: &[Complex64]) -> Fit {
    let m = radii.len();
    let mut a = DMatrix::<f64>::from_fn(m, powers.len(), |i, j| radii[i].powf(powers[j]));
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    for (j, n) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let re = nalgebra::DVector::from_iterator(m, data.iter().map(|c| c.re));
    let im = nalgebra::DVector::from_iterator(m, data.iter().map(|c| c.im));
    let eps = smax * 1e-14;
    let xr = svd.solve(&re, eps).unwrap_or_else(|_| nalgebra::DVector::zeros(powers.len()));
    let xi = svd.solve(&im, eps).unwrap_or_else(|_| nalgebra::DVector::zeros(powers.len()));
    let rr = &re - &a * &xr;
    let ri = &im - &a * &xi;
    let data_norm = (re.norm_squared() + im.norm_squared()).sqrt();
    let res_norm = (rr.norm_squared() + ri.norm_squared()).sqrt();
    let coeffs = (0..powers.len())
        .map(|j| Complex64::new(xr[j], xi[j]) / norms[j])
        .collect();
    Fit {
        coeffs,
        residual_norm: res_norm,
        data_norm,
        condition,
    }
}

/// Residual of both sector fits relative to the size of all the data.
fn relative_residual(f0: &Fit, f1: &Fit) -> f64 {
    let data = f0.data_norm.hypot(f1.data_norm);
    if data > 0.0 {
        f0.residual_norm.hypot(f1.residual_norm) / data
    } else {
        0.0
    }
}

fn fit_once(
    m0: &[Complex64],
    m1: &[Complex64],
    radii: &[f64],
    alpha: Rational,
) -> Result<AsymptoticCoeffs, BoundaryError> {
    let a = rational_to_f64(alpha);
    let g = rational_to_f64(remainder_exponent(alpha));
    let f0 = power_fit(radii, &[-a, a, g], m0);
    let f1 = power_fit(radii, &[a - 1.0, 1.0 - a, g], m1);
    let condition = f0.condition.max(f1.condition);
    if condition > MAX_CONDITION {
        return Err(BoundaryError::IllConditioned(condition));
    }
    Ok(AsymptoticCoeffs {
        c_minus_alpha: f0.coeffs[0],
        c_alpha: f0.coeffs[1],
        c_alpha_minus_1: f1.coeffs[0],
        c_1_minus_alpha: f1.coeffs[1],
        alpha,
        gamma: remainder_exponent(alpha),
        residual: relative_residual(&f0, &f1),
    })
}

/// Fit of the local expansion, reading the `r^{α-1}`, `r^{1-α}` terms from
/// the `e^{-ikθ}` angular component (so `k = 1` pairs with `e^{-iθ}`).
pub fn extract_coeffs_sector<F>(
    sampler: F,
    alpha: Rational,
    radii: &[f64],
    k: i32,
) -> Result<AsymptoticCoeffs, BoundaryError>
where
    F: Fn(f64, f64) -> Option<Complex64>,
{
    check_alpha(alpha)?;
    if radii.len() < 3 {
        return Err(BoundaryError::TooFewRadii(radii.len()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(BoundaryError::BadRadii);
    }
    let mut m0 = Vec::with_capacity(radii.len());
    let mut m1 = Vec::with_capacity(radii.len());
    for &r in radii {
        m0.push(angular_moment(&sampler, r, 0, MOMENT_NODES)?);
        m1.push(angular_moment(&sampler, r, k, MOMENT_NODES)?);
    }
    let full = fit_once(&m0, &m1, radii, alpha)?;
    if full.residual > FIT_TOLERANCE {
        return Err(BoundaryError::PoorFit(full.residual));
    }
    if radii.len() > 3 {
        let reduced = fit_once(&m0[1..], &m1[1..], &radii[1..], alpha)?;
        let scale = full.scale();
        let change = full
            .as_array()
            .iter()
            .zip(reduced.as_array())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if scale > 0.0 && change > STABILITY_TOLERANCE * scale {
            return Err(BoundaryError::Unstable(change / scale));
        }
    }
    Ok(full)
}

/// Coefficients with the `r^{α-1}`, `r^{1-α}` terms read from the `e^{-iθ}` component.
pub fn extract_coeffs<F>(sampler: F, alpha: Rational, radii: &[f64]) -> Result<AsymptoticCoeffs, BoundaryError>
where
    F: Fn(f64, f64) -> Option<Complex64>,
{
    extract_coeffs_sector(sampler, alpha, radii, 1)
}

fn ratio(num: Complex64, den: Complex64, threshold: f64, name: &'static str) -> Result<ExtendedReal, BoundaryError> {
    let small_den = den.norm() <= threshold;
    if small_den && num.norm() <= threshold {
        return Err(BoundaryError::Indeterminate(name));
    }
    if small_den {
        return Ok(ExtendedReal::Infinity);
    }
    Ok(ExtendedReal::Finite((num / den).re))
}

/// `ν₀ = c_α/c_{-α}` and `ν₁ = c_{1-α}/c_{α-1}`.
pub fn nu_params(coeffs: &AsymptoticCoeffs, spin: Spin) -> Result<NuParams, BoundaryError> {
    let threshold = ZERO_THRESHOLD * coeffs.scale();
    Ok(NuParams {
        nu0: ratio(coeffs.c_alpha, coeffs.c_minus_alpha, threshold, "nu0")?,
        nu1: ratio(coeffs.c_1_minus_alpha, coeffs.c_alpha_minus_1, threshold, "nu1")?,
        spin,
    })
}

/// Approximable by regular fields iff exactly one parameter is infinite.
pub fn classify_approximable(nu: &NuParams) -> bool {
    nu.nu0.is_infinite() != nu.nu1.is_infinite()
}

fn check_alpha(alpha: Rational) -> Result<(), BoundaryError> {
    if alpha <= Rational::zero() || alpha >= Rational::one() {
        return Err(BoundaryError::AlphaOutOfRange(format_rational(alpha)));
    }
    Ok(())
}

fn check_kind(kind: ExtensionKind, alpha: Rational) -> Result<(), BoundaryError> {
    check_alpha(alpha)?;
    if kind != ExtensionKind::Maximal && alpha >= Rational::new(1, 2) {
        return Err(BoundaryError::UnsupportedRange(format_rational(alpha)));
    }
    Ok(())
}

/// Known parameters of the Maximal and EV extensions at one solenoid.
///
/// The non-reduced EV form coincides with the EV form for `α ∈ (0, 1/2)`.
pub fn extension_reference_params(kind: ExtensionKind, spin: Spin, alpha: Rational) -> Result<NuParams, BoundaryError> {
    check_kind(kind, alpha)?;
    use ExtendedReal::{Finite, Infinity};
    let (nu0, nu1) = match (kind, spin) {
        (ExtensionKind::Maximal, Spin::Up) => (Infinity, Finite(0.0)),
        (_, Spin::Down) => (Finite(0.0), Infinity),
        (_, Spin::Up) => (Infinity, Infinity),
    };
    Ok(NuParams { nu0, nu1, spin })
}

/// Settings for [`probe_extension`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    /// Multiplies the default radii `1e-2·2^{-k}`, `k = 0..7`.
    pub radii_scale: f64,
    /// Coefficient attached to the subleading form-core direction.
    pub mix: Complex64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            radii_scale: 1.0,
            mix: Complex64::new(0.5, 0.25),
        }
    }
}

/// Measured parameters together with the data they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub nu: NuParams,
    /// Coefficients fitted from the form-core element.
    pub measured: AsymptoticCoeffs,
    /// Which of `c_{-α}, c_α, c_{α-1}, c_{1-α}` vanish across the core.
    pub forced_zero: [bool; 4],
}

/// `1` on `r ≤ 1/4`, smoothly down to `0` at `r = 1/2`.
pub fn plateau(r: f64) -> f64 {
    let s = (4.0 * r - 1.0).clamp(0.0, 1.0);
    if s == 0.0 {
        return 1.0;
    }
    if s == 1.0 {
        return 0.0;
    }
    let a = (-1.0 / (1.0 - s)).exp();
    let b = (-1.0 / s).exp();
    a / (a + b)
}

const COEFF_NAMES: [&str; 4] = ["c_minus_alpha", "c_alpha", "c_alpha_minus_1", "c_1_minus_alpha"];

/// Recovers `(ν₀, ν₁)` of an extension from a representative form-core element.
///
/// The element is sampled on small circles about the solenoid and fitted. A
/// coefficient is exhibited when it is visibly nonzero. The dual partner of an
/// exhibited coefficient (`c_α ↔ c_{-α}`, `c_{α-1} ↔ c_{1-α}`, the spin
/// deciding which side wins) and every term more singular than the most
/// singular exhibited one vanish across the core. The parameters are read off
/// a representative with those coefficients set to zero and the rest nonzero.
pub fn probe_extension(
    kind: ExtensionKind,
    spin: Spin,
    alpha: Rational,
    evaluator: &PotentialEvaluator,
    options: &ProbeOptions,
) -> Result<ProbeOutcome, BoundaryError> {
    check_kind(kind, alpha)?;
    let cfg = evaluator.config();
    if !cfg.bumps().is_empty() {
        return Err(BoundaryError::ProbeConfig("bumps present".into()));
    }
    if cfg.n() != 1 || cfg.positions()[0] != Complex64::zero() {
        return Err(BoundaryError::ProbeConfig("need exactly one solenoid at the origin".into()));
    }
    if cfg.intensities()[0] != alpha {
        return Err(BoundaryError::ProbeConfig(format!(
            "solenoid intensity {} differs from {}",
            format_rational(cfg.intensities()[0]),
            format_rational(alpha)
        )));
    }
    let c = options.mix;
    let sampler = |r: f64, theta: f64| -> Option<Complex64> {
        let z = Complex64::from_polar(r, theta);
        let core = match (kind, spin) {
            (ExtensionKind::Maximal, Spin::Up) => 1.0 + c / z,
            _ => 1.0 + c * z,
        };
        let sign = match spin {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        };
        Some(core * plateau(r) * evaluator.exp_h(z, sign).ok()?)
    };
    let radii: Vec<f64> = (0..8).map(|k| options.radii_scale * 1e-2 * 0.5f64.powi(k)).collect();
    let sector = match spin {
        Spin::Up => 1,
        Spin::Down => -1,
    };
    let measured = extract_coeffs_sector(sampler, alpha, &radii, sector)?;

    let values = measured.as_array();
    let threshold = ZERO_THRESHOLD * measured.scale();
    let exhibited: Vec<bool> = values.iter().map(|v| v.norm() >= threshold).collect();
    let exponents = [-alpha, alpha, alpha - Rational::one(), Rational::one() - alpha];
    let mut forced = [false; 4];
    // Duality: the winning side of each pair depends on the spin.
    let (pair0, pair1) = match spin {
        Spin::Up => ((1, 0), (2, 3)),
        Spin::Down => ((0, 1), (3, 2)),
    };
    for (winner, loser) in [pair0, pair1] {
        if exhibited[winner] {
            forced[loser] = true;
        }
    }
    if let Some(worst) = (0..4).filter(|&i| exhibited[i]).map(|i| exponents[i]).min() {
        for i in 0..4 {
            if exponents[i] < worst {
                forced[i] = true;
            }
        }
    }
    for i in 0..4 {
        if forced[i] && exhibited[i] {
            return Err(BoundaryError::Inconsistent {
                name: COEFF_NAMES[i],
                value: values[i].norm(),
            });
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let pick = |i: usize| {
        if forced[i] {
            Complex64::zero()
        } else if exhibited[i] {
            values[i]
        } else {
            one
        }
    };
    let representative = AsymptoticCoeffs {
        c_minus_alpha: pick(0),
        c_alpha: pick(1),
        c_alpha_minus_1: pick(2),
        c_1_minus_alpha: pick(3),
        ..measured.clone()
    };
    let nu = nu_params(&representative, spin)?;
    Ok(ProbeOutcome {
        nu,
        measured,
        forced_zero: forced,
    })
}
