//! Finite differences, kernel residuals, quadrature, L² norms with analytic
//! tails, Gram matrices and annulus form values.

mod fd;
mod quadrature;
mod report;

pub use fd::{wirtinger_fd, wirtinger_fd6};
pub use quadrature::{QuadratureRule, QuadratureSpec};
pub use report::{
    modes_for, verify_configuration, GaugeCheck, GramCheck, ModeCheck, NegativeControl, SignFlipCheck, Thresholds,
    VerificationReport, VerifyOptions,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::flux::{gauge_shift, FluxError, Rational, Spin};
use crate::potential::{rational_to_f64, PotentialError, PotentialEvaluator};
use crate::zero_modes::{evaluate_mode, ModeError, ZeroMode};

#[derive(Debug, Error, Clone)]
pub enum NumericsError {
    #[error("finite-difference stencil hit a singular or non-finite value near {point}")]
    SingularStencil { point: Complex64 },
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("grid point {point} is only {distance:.3e} from a solenoid")]
    GridTooClose { point: Complex64, distance: f64 },
    #[error("invalid quadrature layout: {0}")]
    InvalidQuadrature(String),
    #[error("quadrature did not converge: estimate {value:.6e}, change under refinement {change:.3e}")]
    NonConvergence { value: f64, change: f64 },
    #[error("evaluator was built for a different configuration")]
    ConfigMismatch,
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Flux(#[from] FluxError),
}

fn spin_sign(spin: Spin) -> f64 {
    match spin {
        Spin::Up => 1.0,
        Spin::Down => -1.0,
    }
}

fn distance_to_set(z: Complex64, positions: &[Complex64]) -> f64 {
    positions.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
}

fn check_grid(grid: &[Complex64], positions: &[Complex64], min_distance: f64) -> Result<(), NumericsError> {
    for &z in grid {
        let distance = distance_to_set(z, positions);
        if distance < min_distance {
            return Err(NumericsError::GridTooClose { point: z, distance });
        }
    }
    Ok(())
}

fn check_config(mode: &ZeroMode, evaluator: &PotentialEvaluator) -> Result<(), NumericsError> {
    if evaluator.positions() != mode.config().positions().as_slice() {
        return Err(NumericsError::ConfigMismatch);
    }
    Ok(())
}

/// Sample points and step used for residual checks on one configuration.
#[derive(Debug, Clone)]
pub struct VerificationGrid {
    pub points: Vec<Complex64>,
    /// Length scale: a quarter of the smallest solenoid separation, at most 1/4.
    pub length: f64,
    pub step: f64,
}

/// Square `side × side` grid covering the interesting region, with points
/// closer than twice the length scale to a solenoid dropped.
pub fn verification_grid(evaluator: &PotentialEvaluator, side: usize) -> VerificationGrid {
    let positions = evaluator.positions();
    let mut sep = f64::INFINITY;
    for (i, p) in positions.iter().enumerate() {
        for q in &positions[i + 1..] {
            sep = sep.min((p - q).norm());
        }
    }
    let length = (sep / 4.0).min(0.25);
    let half = 1.5 * evaluator.extent().max(1.0);
    let side = side.max(2);
    let mut points = Vec::with_capacity(side * side);
    for iy in 0..side {
        for ix in 0..side {
            let x = -half + 2.0 * half * ix as f64 / (side - 1) as f64;
            let y = -half + 2.0 * half * iy as f64 / (side - 1) as f64;
            let z = Complex64::new(x, y);
            if distance_to_set(z, positions) >= 2.0 * length {
                points.push(z);
            }
        }
    }
    VerificationGrid {
        points,
        length,
        step: 1e-3 * length,
    }
}

/// Kernel residual of a mode with its size for normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualMeasure {
    /// `max |∂_z̄(e^{-h}ψ₊)|·e^h` (or the spin-down analogue).
    pub absolute: f64,
    /// `max (|∂_z(e^{-h}ψ₊)| + |e^{-h}ψ₊|/L)·e^h`, the size of the derivative being tested.
    pub scale: f64,
    pub relative: f64,
}

/// Residual of `ψ` against the spin-appropriate Cauchy–Riemann operator.
pub fn function_residual<F>(
    psi: F,
    spin: Spin,
    evaluator: &PotentialEvaluator,
    grid: &[Complex64],
    step: f64,
    length: f64,
) -> Result<ResidualMeasure, NumericsError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    check_grid(grid, evaluator.positions(), 10.0 * step)?;
    let sign = spin_sign(spin);
    let g = |z: Complex64| Some(psi(z)? * evaluator.exp_h(z, -sign).ok()?);
    let mut absolute = 0.0f64;
    let mut scale = 0.0f64;
    for &z in grid {
        let (dz, dzb) = wirtinger_fd(g, z, step)?;
        let (tested, other) = match spin {
            Spin::Up => (dzb, dz),
            Spin::Down => (dz, dzb),
        };
        let weight = evaluator.exp_h(z, sign)?;
        let value = g(z).ok_or(NumericsError::SingularStencil { point: z })?;
        absolute = absolute.max(tested.norm() * weight);
        scale = scale.max((other.norm() + value.norm() / length) * weight);
    }
    let relative = if scale > 0.0 { absolute / scale } else { 0.0 };
    Ok(ResidualMeasure {
        absolute,
        scale,
        relative,
    })
}

/// Absolute kernel residual `max |∂_z̄(e^{-h}ψ₊)|·e^h` or `max |∂_z(e^h ψ₋)|·e^{-h}`.
pub fn kernel_residual(
    mode: &ZeroMode,
    evaluator: &PotentialEvaluator,
    grid: &[Complex64],
    step: f64,
) -> Result<f64, NumericsError> {
    Ok(kernel_residual_measure(mode, evaluator, grid, step, 1.0)?.absolute)
}

/// Kernel residual together with its normalization at length scale `length`.
pub fn kernel_residual_measure(
    mode: &ZeroMode,
    evaluator: &PotentialEvaluator,
    grid: &[Complex64],
    step: f64,
    length: f64,
) -> Result<ResidualMeasure, NumericsError> {
    check_config(mode, evaluator)?;
    function_residual(
        |z| evaluate_mode(mode, evaluator, z).ok(),
        mode.spin(),
        evaluator,
        grid,
        step,
        length,
    )
}

/// Result of [`l2_norm_with_tail`].
#[derive(Debug, Clone, PartialEq)]
pub struct L2Report {
    /// Numeric part plus the analytic tail bound; infinite when not square integrable.
    pub value: f64,
    pub numeric: f64,
    pub tail_bound: f64,
    /// Estimate of the mass inside the excluded discs from the local power law.
    pub inner_estimate: f64,
    pub tail_exponent: Rational,
    pub local_exponents: Vec<Rational>,
    pub finite: bool,
    /// Change of the numeric part when every panel count is doubled.
    pub error_estimate: f64,
}

fn mode_values(
    modes: &[ZeroMode],
    evaluator: &PotentialEvaluator,
    z: Complex64,
    out: &mut [Complex64],
) -> Result<(), NumericsError> {
    let h = evaluator.eval_h(z)?;
    let (up, down) = (h.exp(), (-h).exp());
    for (slot, mode) in out.iter_mut().zip(modes) {
        let f = mode.analytic_factor(z)?;
        *slot = match mode.spin() {
            Spin::Up => f * up,
            Spin::Down => f * down,
        };
    }
    Ok(())
}

fn accumulate_gram(
    modes: &[ZeroMode],
    evaluator: &PotentialEvaluator,
    rule: &QuadratureRule,
) -> Result<DMatrix<Complex64>, NumericsError> {
    let m = modes.len();
    let mut gram = DMatrix::<Complex64>::zeros(m, m);
    let mut values = vec![Complex64::default(); m];
    for (&z, &w) in rule.nodes().iter().zip(rule.weights()) {
        mode_values(modes, evaluator, z, &mut values)?;
        for i in 0..m {
            for j in i..m {
                if modes[i].spin() == modes[j].spin() {
                    gram[(i, j)] += w * values[i].conj() * values[j];
                }
            }
        }
    }
    for i in 0..m {
        gram[(i, i)].im = 0.0;
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)].conj();
        }
    }
    Ok(gram)
}

/// Gram matrices at the given and at doubled resolution.
fn converged_gram(
    modes: &[ZeroMode],
    evaluator: &PotentialEvaluator,
    quad: &QuadratureSpec,
) -> Result<(DMatrix<Complex64>, f64), NumericsError> {
    for mode in modes {
        check_config(mode, evaluator)?;
    }
    let core = evaluator.extent();
    let positions = evaluator.positions();
    let coarse = accumulate_gram(modes, evaluator, &QuadratureRule::new(quad, positions, core)?)?;
    let fine = accumulate_gram(modes, evaluator, &QuadratureRule::new(&quad.refined(), positions, core)?)?;
    let diag = (0..modes.len()).map(|i| fine[(i, i)].re).fold(0.0, f64::max);
    let change = (&fine - &coarse).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if change > quad.tolerance * diag {
        return Err(NumericsError::NonConvergence { value: diag, change });
    }
    Ok((fine, change))
}

fn radial_constant(
    mode: &ZeroMode,
    evaluator: &PotentialEvaluator,
    center: Complex64,
    radius: f64,
    exponent: f64,
) -> Result<f64, NumericsError> {
    let mut c = 0.0f64;
    for k in 0..256 {
        let z = center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / 256.0);
        c = c.max(evaluate_mode(mode, evaluator, z)?.norm() / radius.powf(exponent));
    }
    Ok(c)
}

/// `‖ψ‖²` over the truncated region plus the analytic tail `2πC²R^{2e+2}/|2e+2|`.
pub fn l2_norm_with_tail(
    mode: &ZeroMode,
    evaluator: &PotentialEvaluator,
    quad: &QuadratureSpec,
) -> Result<L2Report, NumericsError> {
    let (gram, error_estimate) = converged_gram(std::slice::from_ref(mode), evaluator, quad)?;
    let numeric = gram[(0, 0)].re;
    let tail_exponent = mode.tail_exponent()?;
    let local_exponents = mode.local_exponents();
    let e = rational_to_f64(tail_exponent);
    let big_r = quad.outer_radius;
    let tail_bound = if e < -1.0 {
        let c = radial_constant(mode, evaluator, Complex64::default(), big_r, e)?;
        2.0 * PI * c * c * big_r.powf(2.0 * e + 2.0) / (-(2.0 * e + 2.0))
    } else {
        f64::INFINITY
    };
    let mut inner_estimate = 0.0;
    for ((&p, &eps), a) in evaluator.positions().iter().zip(&quad.inner_radii).zip(&local_exponents) {
        let a = rational_to_f64(*a);
        if a <= -1.0 {
            inner_estimate = f64::INFINITY;
            continue;
        }
        let k = radial_constant(mode, evaluator, p, eps, a)?;
        inner_estimate += 2.0 * PI * k * k * eps.powf(2.0 * a + 2.0) / (2.0 * a + 2.0);
    }
    let finite = tail_bound.is_finite() && inner_estimate.is_finite();
    Ok(L2Report {
        value: if finite { numeric + tail_bound } else { f64::INFINITY },
        numeric,
        tail_bound,
        inner_estimate,
        tail_exponent,
        local_exponents,
        finite,
        error_estimate,
    })
}

/// Result of [`gram_matrix`].
#[derive(Debug, Clone)]
pub struct GramReport {
    pub matrix: DMatrix<Complex64>,
    /// Extreme singular values of the diagonally normalized matrix.
    pub min_singular: f64,
    pub max_singular: f64,
    pub error_estimate: f64,
}

impl GramReport {
    pub fn ratio(&self) -> f64 {
        if self.matrix.nrows() == 0 {
            1.0
        } else {
            self.min_singular / self.max_singular
        }
    }
}

/// Inner products `⟨ψ_i, ψ_j⟩` over the truncated region.
///
/// Modes of different spin are orthogonal exactly. Singular values are taken
/// after scaling to unit diagonal so that the ratio measures independence
/// rather than relative size.
pub fn gram_matrix(
    modes: &[ZeroMode],
    evaluator: &PotentialEvaluator,
    quad: &QuadratureSpec,
) -> Result<GramReport, NumericsError> {
    let (matrix, error_estimate) = converged_gram(modes, evaluator, quad)?;
    let m = modes.len();
    if m == 0 {
        return Ok(GramReport {
            matrix,
            min_singular: 0.0,
            max_singular: 0.0,
            error_estimate,
        });
    }
    let d: Vec<f64> = (0..m).map(|i| matrix[(i, i)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let normalized = DMatrix::from_fn(m, m, |i, j| matrix[(i, j)] / (d[i] * d[j]));
    let sv = normalized.singular_values();
    Ok(GramReport {
        matrix,
        min_singular: sv.iter().copied().fold(f64::INFINITY, f64::min),
        max_singular: sv.iter().copied().fold(0.0, f64::max),
        error_estimate,
    })
}

/// Form value and its change under panel doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// `4∫|∂_z̄(e^{-h}ψ₊)|² e^{2h}` (or `4∫|∂_z(e^h ψ₋)|² e^{-2h}`) over
/// `eps < |z - z_j|`, `|z| < big_r`.
pub fn form_value_annulus<F>(
    psi: F,
    spin: Spin,
    evaluator: &PotentialEvaluator,
    eps: f64,
    big_r: f64,
) -> Result<FormValue, NumericsError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    if !(eps > 0.0 && eps < big_r) {
        return Err(NumericsError::InvalidQuadrature(format!(
            "need 0 < eps < R, got eps = {eps}, R = {big_r}"
        )));
    }
    let positions = evaluator.positions();
    let mut spec = QuadratureSpec::for_positions(positions, evaluator.extent());
    spec.inner_radii = vec![eps; positions.len()];
    spec.outer_radius = big_r;
    let sign = spin_sign(spin);
    let g = |z: Complex64| Some(psi(z)? * evaluator.exp_h(z, -sign).ok()?);
    let integrand = |z: Complex64| -> Result<f64, NumericsError> {
        let step = 1e-2 * distance_to_set(z, positions).min(1.0);
        let (dz, dzb) = wirtinger_fd6(g, z, step)?;
        let d = match spin {
            Spin::Up => dzb,
            Spin::Down => dz,
        };
        Ok(4.0 * d.norm_sqr() * evaluator.exp_h(z, 2.0 * sign)?)
    };
    let core = evaluator.extent();
    let coarse = QuadratureRule::new(&spec, positions, core)?.integrate(integrand)?;
    let value = QuadratureRule::new(&spec.refined(), positions, core)?.integrate(integrand)?;
    Ok(FormValue {
        value,
        error_estimate: (value - coarse).abs(),
    })
}

/// `e^{-iφ(z)}` with `φ = Σ m_j arg(z - z_j)`.
pub fn gauge_phase(positions: &[Complex64], shifts: &[i64], z: Complex64) -> Complex64 {
    let mut u = Complex64::new(1.0, 0.0);
    for (&p, &m) in positions.iter().zip(shifts) {
        if m != 0 {
            let d = z - p;
            u *= (d / d.norm()).powi(-m as i32);
        }
    }
    u
}

/// Largest relative difference, over `points`, between the residual integrand
/// `|∂_z̄(e^{-h}ψ)|e^h` of `ψ` and that of `e^{-iφ}ψ` for the shifted potential
/// (spin-down: `|∂_z(e^{h}ψ)|e^{-h}`). Sixth-order differences at `step`.
pub fn gauge_integrand_discrepancy<F>(
    psi: F,
    spin: Spin,
    evaluator: &PotentialEvaluator,
    shifts: &[i64],
    points: &[Complex64],
    step: f64,
) -> Result<f64, NumericsError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let positions = evaluator.positions();
    check_grid(points, positions, 10.0 * step)?;
    let shifted = PotentialEvaluator::new(&gauge_shift(evaluator.config(), shifts)?);
    let sign = spin_sign(spin);
    let integrand = |ev: &PotentialEvaluator, f: &dyn Fn(Complex64) -> Option<Complex64>, z: Complex64| {
        let g = |w: Complex64| Some(f(w)? * ev.exp_h(w, -sign).ok()?);
        let (dz, dzb) = wirtinger_fd6(g, z, step)?;
        let d = match spin {
            Spin::Up => dzb,
            Spin::Down => dz,
        };
        Ok::<f64, NumericsError>(d.norm() * ev.exp_h(z, sign)?)
    };
    let transformed = |z: Complex64| Some(gauge_phase(positions, shifts, z) * psi(z)?);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &z in points {
        let before = integrand(evaluator, &psi, z)?;
        let after = integrand(&shifted, &transformed, z)?;
        worst = worst.max((before - after).abs());
        scale = scale.max(before);
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}
