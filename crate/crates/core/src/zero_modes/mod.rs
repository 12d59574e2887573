//! Explicit bases of `ker Q₊` and `ker Q₋` for the Maximal extension.
//!
//! A spin-up mode is `ψ₊ = (Σ c_j/(z - z_j) + Σ a_m z^m)·e^{h}` and a spin-down
//! mode is `ψ₋ = (Σ a_m z̄^m)·e^{-h}`. After a gauge shift a mode may carry an
//! extra factor `∏(z - z_j)^{-g_j}` (spin-up) or `∏(z̄ - z̄_j)^{g_j}` (spin-down)
//! that cannot always be folded back into that normal form; such modes are kept
//! in factored form and still evaluate pointwise.

mod poly;
mod vandermonde;

pub use vandermonde::{leading_order, vandermonde_null_space, DUPLICATE_TOLERANCE, RANK_TOLERANCE};

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::flux::{
    count_zero_modes, curly_bracket, gauge_shift, smallest_integer_above, total_flux,
    ExtensionKind, FieldConfig, FluxError, ModeCount, Rational, Spin,
};
use crate::potential::{PotentialError, PotentialEvaluator};

/// Relative size below which a coefficient counts as absent.
const COEFF_TOLERANCE: f64 = 1e-12;
/// Relative size below which `N(z_j)` counts as a root during re-expansion.
const ROOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone)]
pub enum ModeError {
    #[error("points {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },
    #[error("{l} constraints exceed the {n} unknowns")]
    TooManyConstraints { l: usize, n: usize },
    #[error("Vandermonde block has numerical rank {found}, expected {expected}")]
    RankDeficient { expected: usize, found: usize },
    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("all coefficients vanish")]
    ZeroCoefficients,
    #[error("spin-down modes carry no pole coefficients")]
    SpinDownPoles,
    #[error("configuration must have every intensity in (0, 1)")]
    NotNormalized,
    #[error("mode is not square integrable: tail exponent {tail}, smallest local exponent {local:?}")]
    NotSquareIntegrable {
        tail: Rational,
        local: Option<Rational>,
    },
    #[error("gauge-transformed mode has no pole-plus-polynomial normal form")]
    Unrepresentable(Box<ZeroMode>),
    #[error("evaluator was built for a different configuration")]
    ConfigMismatch,
    #[error("constructed {built} modes but the counting formula gives {expected}")]
    CountMismatch { built: usize, expected: u64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Flux(#[from] FluxError),
}

/// One zero mode, represented symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroMode {
    spin: Spin,
    pole_coeffs: Vec<Complex64>,
    poly_coeffs: Vec<Complex64>,
    config: FieldConfig,
    gauge: Vec<i64>,
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn present(c: Complex64, scale: f64) -> bool {
    c.norm() > COEFF_TOLERANCE * scale
}

impl ZeroMode {
    /// Build a mode in normal form, rejecting anything that is not square
    /// integrable at infinity or at a solenoid.
    pub fn new(
        config: &FieldConfig,
        spin: Spin,
        pole_coeffs: Vec<Complex64>,
        poly_coeffs: Vec<Complex64>,
    ) -> Result<Self, ModeError> {
        let n = config.n();
        let zero = Complex64::zero();
        let pole_coeffs = if pole_coeffs.is_empty() {
            vec![zero; n]
        } else {
            pole_coeffs
        };
        if pole_coeffs.len() != n {
            return Err(ModeError::LengthMismatch {
                expected: n,
                got: pole_coeffs.len(),
            });
        }
        if spin == Spin::Down && pole_coeffs.iter().any(|c| *c != zero) {
            return Err(ModeError::SpinDownPoles);
        }
        let scale = max_norm(&pole_coeffs).max(max_norm(&poly_coeffs));
        if scale == 0.0 {
            return Err(ModeError::ZeroCoefficients);
        }
        let mode = Self {
            spin,
            pole_coeffs,
            poly_coeffs: poly::trim(poly_coeffs, COEFF_TOLERANCE * scale),
            config: config.clone(),
            gauge: vec![0; n],
        };
        mode.check_square_integrable()?;
        Ok(mode)
    }

    fn check_square_integrable(&self) -> Result<(), ModeError> {
        let tail = self.tail_exponent()?;
        let local = self.local_exponents().into_iter().min();
        let minus_one = -Rational::one();
        if tail >= minus_one || local.is_some_and(|e| e <= minus_one) {
            return Err(ModeError::NotSquareIntegrable { tail, local });
        }
        Ok(())
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn pole_coeffs(&self) -> &[Complex64] {
        &self.pole_coeffs
    }

    pub fn poly_coeffs(&self) -> &[Complex64] {
        &self.poly_coeffs
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    /// Accumulated gauge exponents of the factored form (all zero in normal form).
    pub fn gauge(&self) -> &[i64] {
        &self.gauge
    }

    pub fn is_factored(&self) -> bool {
        self.gauge.iter().any(|&g| g != 0)
    }

    /// Intensities of the configuration the coefficients refer to.
    fn base_intensities(&self) -> Vec<Rational> {
        self.config
            .intensities()
            .into_iter()
            .zip(&self.gauge)
            .map(|(a, &g)| a - Rational::from_integer(g))
            .collect()
    }

    fn base_flux(&self) -> Rational {
        total_flux(&self.config) - Rational::from_integer(self.gauge.iter().sum())
    }

    fn coeff_scale(&self) -> f64 {
        max_norm(&self.pole_coeffs).max(max_norm(&self.poly_coeffs))
    }

    /// Exponent `e` with `|ψ(z)| ∼ |z|^e` as `|z| → ∞`.
    pub fn tail_exponent(&self) -> Result<Rational, ModeError> {
        let phi = self.base_flux();
        let degree = self.poly_coeffs.len().checked_sub(1);
        match self.spin {
            Spin::Down => {
                let d = degree.ok_or(ModeError::ZeroCoefficients)?;
                Ok(Rational::from_integer(d as i64) - phi)
            }
            Spin::Up => match degree {
                Some(d) => Ok(Rational::from_integer(d as i64) + phi),
                None => {
                    let (l, _) = leading_order(&self.pole_coeffs, &self.config.positions())?;
                    Ok(phi - Rational::from_integer(l as i64 + 1))
                }
            },
        }
    }

    /// Exponents `e_j` with `|ψ(z)| ∼ |z - z_j|^{e_j}` near each solenoid.
    pub fn local_exponents(&self) -> Vec<Rational> {
        let alphas = self.base_intensities();
        let scale = self.coeff_scale();
        (0..self.config.n())
            .map(|j| {
                let a = alphas[j];
                match self.spin {
                    Spin::Up if present(self.pole_coeffs[j], scale) => a - Rational::one(),
                    Spin::Up => a + Rational::from_integer(self.vanishing_order(j) as i64),
                    Spin::Down => -a + Rational::from_integer(self.vanishing_order(j) as i64),
                }
            })
            .collect()
    }

    /// Order of vanishing at `z_j` of the analytic factor, for a solenoid without a pole.
    fn vanishing_order(&self, j: usize) -> usize {
        let positions = self.config.positions();
        let zj = positions[j];
        let center = match self.spin {
            Spin::Up => zj,
            Spin::Down => zj.conj(),
        };
        let taylor = poly::shift(&self.poly_coeffs, center);
        let scale = self.coeff_scale();
        // Bounds every Taylor coefficient of the polynomial part about `center`.
        let reach = 1.0 + center.norm();
        let poly_size = self
            .poly_coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, a| acc * reach + a.norm());
        let max_order = self.poly_coeffs.len() + positions.len() + 1;
        for k in 0..max_order {
            let mut coeff = taylor.get(k).copied().unwrap_or_default();
            let mut size = poly_size;
            if self.spin == Spin::Up {
                for (i, (&c, &zi)) in self.pole_coeffs.iter().zip(&positions).enumerate() {
                    if i == j || !present(c, scale) {
                        continue;
                    }
                    let term = -c / (zi - zj).powu(k as u32 + 1);
                    coeff += term;
                    size += term.norm();
                }
            }
            if coeff.norm() > ROOT_TOLERANCE * size.max(f64::MIN_POSITIVE) {
                return k;
            }
        }
        max_order
    }

    /// Value of `e^{∓h}ψ`, the analytic (spin-up) or antianalytic (spin-down) factor.
    pub fn analytic_factor(&self, z: Complex64) -> Result<Complex64, ModeError> {
        let positions = self.config.positions();
        for (index, &p) in positions.iter().enumerate() {
            if z == p {
                return Err(PotentialError::SingularPoint { index, position: p }.into());
            }
        }
        let value = match self.spin {
            Spin::Up => {
                let mut f = poly::eval(&self.poly_coeffs, z);
                for (&c, &p) in self.pole_coeffs.iter().zip(&positions) {
                    if c != Complex64::zero() {
                        f += c / (z - p);
                    }
                }
                for (&g, &p) in self.gauge.iter().zip(&positions) {
                    if g != 0 {
                        f *= (z - p).powi(-g as i32);
                    }
                }
                f
            }
            Spin::Down => {
                let w = z.conj();
                let mut f = poly::eval(&self.poly_coeffs, w);
                for (&g, &p) in self.gauge.iter().zip(&positions) {
                    if g != 0 {
                        f *= (w - p.conj()).powi(g as i32);
                    }
                }
                f
            }
        };
        Ok(value)
    }
}

/// A basis of the Maximal kernel together with its predicted dimensions.
#[derive(Debug, Clone)]
pub struct ZeroModeBasis {
    pub modes: Vec<ZeroMode>,
    pub counts: ModeCount,
}

/// Smallest nonnegative integer strictly greater than `phi`.
pub fn smallest_l(phi: Rational) -> usize {
    smallest_integer_above(phi).max(0) as usize
}

/// Basis of the Maximal kernel for a configuration with all `α_j ∈ (0, 1)`.
pub fn build_basis(config: &FieldConfig) -> Result<ZeroModeBasis, ModeError> {
    if !config.is_unit_normalized() {
        return Err(ModeError::NotNormalized);
    }
    let n = config.n();
    let phi = total_flux(config);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::zero();
    let monomial = |m: usize| {
        let mut a = vec![zero; m + 1];
        a[m] = one;
        a
    };
    let mut modes = Vec::new();

    let minus_one = -Rational::one();
    let n_minus_one = Rational::from_integer(n as i64 - 1);
    if phi < minus_one {
        for j in 0..n {
            let mut c = vec![zero; n];
            c[j] = one;
            modes.push(ZeroMode::new(config, Spin::Up, c, Vec::new())?);
        }
        for m in 0..curly_bracket(-phi) as usize {
            modes.push(ZeroMode::new(config, Spin::Up, Vec::new(), monomial(m))?);
        }
    } else if phi < n_minus_one {
        let l = smallest_l(phi);
        for c in vandermonde_null_space(&config.positions(), l)? {
            modes.push(ZeroMode::new(config, Spin::Up, c, Vec::new())?);
        }
    }
    for m in 0..curly_bracket(phi) as usize {
        modes.push(ZeroMode::new(config, Spin::Down, Vec::new(), monomial(m))?);
    }

    let counts = count_zero_modes(config, ExtensionKind::Maximal)?;
    if modes.len() as u64 != counts.total() {
        return Err(ModeError::CountMismatch {
            built: modes.len(),
            expected: counts.total(),
        });
    }
    Ok(ZeroModeBasis { modes, counts })
}

/// `ψ(z) = f(z)·e^{±h(z)}`.
pub fn evaluate_mode(
    mode: &ZeroMode,
    evaluator: &PotentialEvaluator,
    z: Complex64,
) -> Result<Complex64, ModeError> {
    if evaluator.positions() != mode.config.positions().as_slice() {
        return Err(ModeError::ConfigMismatch);
    }
    let f = mode.analytic_factor(z)?;
    let sign = match mode.spin {
        Spin::Up => 1.0,
        Spin::Down => -1.0,
    };
    Ok(f * evaluator.exp_h(z, sign)?)
}

/// Re-express `e^{-iφ}ψ`, `φ = Σ m_j arg(z - z_j)`, as a mode of the shifted field.
///
/// Returns [`ModeError::Unrepresentable`] carrying the factored mode when the
/// result has a pole of order two or more, or an antiholomorphic pole.
pub fn gauge_transform_mode(mode: &ZeroMode, shifts: &[i64]) -> Result<ZeroMode, ModeError> {
    let config = gauge_shift(&mode.config, shifts)?;
    let gauge: Vec<i64> = mode.gauge.iter().zip(shifts).map(|(g, m)| g + m).collect();
    let factored = ZeroMode {
        spin: mode.spin,
        pole_coeffs: mode.pole_coeffs.clone(),
        poly_coeffs: mode.poly_coeffs.clone(),
        config,
        gauge,
    };
    if !factored.is_factored() {
        return Ok(factored);
    }
    match normal_form(&factored) {
        Some((pole_coeffs, poly_coeffs)) => Ok(ZeroMode {
            pole_coeffs,
            poly_coeffs,
            gauge: vec![0; factored.gauge.len()],
            ..factored
        }),
        None => Err(ModeError::Unrepresentable(Box::new(factored))),
    }
}

/// Partial-fraction re-expansion of `f·G` into simple poles at the solenoids plus a polynomial.
fn normal_form(mode: &ZeroMode) -> Option<(Vec<Complex64>, Vec<Complex64>)> {
    let zero = Complex64::zero();
    let one = Complex64::new(1.0, 0.0);
    let n = mode.config.n();
    let (roots, spin_sign): (Vec<Complex64>, i64) = match mode.spin {
        Spin::Up => (mode.config.positions(), 1),
        Spin::Down => (mode.config.positions().iter().map(|p| p.conj()).collect(), -1),
    };
    let scale = mode.coeff_scale();

    // f = N / ∏_{j∈S} (x - x_j)
    let poles: Vec<bool> = mode.pole_coeffs.iter().map(|&c| present(c, scale)).collect();
    let mut numerator = mode.poly_coeffs.clone();
    for (j, &root) in roots.iter().enumerate() {
        if poles[j] {
            numerator = poly::mul_linear(&numerator, root);
        }
    }
    for (j, &c) in mode.pole_coeffs.iter().enumerate() {
        if !poles[j] {
            continue;
        }
        let mut term = vec![c];
        for (i, &root) in roots.iter().enumerate() {
            if i != j && poles[i] {
                term = poly::mul_linear(&term, root);
            }
        }
        numerator = poly::add(&numerator, &term);
    }

    // Denominator power of (x - x_j) after applying the gauge factor.
    let mut power: Vec<i64> = (0..n)
        .map(|j| poles[j] as i64 + spin_sign * mode.gauge[j])
        .collect();
    for j in 0..n {
        while power[j] > 0 {
            let size = poly::magnitude_at(&numerator, roots[j]);
            let (q, r) = poly::div_linear(&numerator, roots[j]);
            if r.norm() > ROOT_TOLERANCE * size.max(f64::MIN_POSITIVE) {
                break;
            }
            numerator = q;
            power[j] -= 1;
        }
        if power[j] > 1 {
            return None;
        }
    }
    for j in 0..n {
        while power[j] < 0 {
            numerator = poly::mul_linear(&numerator, roots[j]);
            power[j] += 1;
        }
    }
    let simple: Vec<usize> = (0..n).filter(|&j| power[j] == 1).collect();
    if mode.spin == Spin::Down && !simple.is_empty() {
        return None;
    }

    let mut quotient = numerator.clone();
    for &j in &simple {
        quotient = poly::div_linear(&quotient, roots[j]).0;
    }
    let mut pole_coeffs = vec![zero; n];
    for &j in &simple {
        let mut denom = one;
        for &i in &simple {
            if i != j {
                denom *= roots[j] - roots[i];
            }
        }
        pole_coeffs[j] = poly::eval(&numerator, roots[j]) / denom;
    }
    let new_scale = max_norm(&pole_coeffs).max(max_norm(&quotient));
    Some((pole_coeffs, poly::trim(quotient, COEFF_TOLERANCE * new_scale)))
}
