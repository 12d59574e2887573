use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    gauge_integrand_discrepancy, gram_matrix, kernel_residual_measure, l2_norm_with_tail, verification_grid,
    NumericsError, QuadratureSpec,
};
use crate::flux::{
    count_zero_modes, curly_bracket, format_rational, gauge_shift, negate_field, normalize_to_unit_interval,
    total_flux, ExtensionKind, FieldConfig, ModeCount, Rational, Spin,
};
use crate::potential::PotentialEvaluator;
use crate::zero_modes::{build_basis, evaluate_mode, gauge_transform_mode, ModeError, ZeroMode};

/// Pass/fail thresholds recorded in every report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Thresholds {
    pub kernel_residual: f64,
    pub gram_ratio: f64,
    pub gauge_identity: f64,
    pub quadrature_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            kernel_residual: 1e-6,
            gram_ratio: 1e-6,
            gauge_identity: 1e-10,
            quadrature_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub thresholds: Thresholds,
    pub seed: u64,
    pub gauge_trials: usize,
    pub grid_side: usize,
    pub extension: ExtensionKind,
    /// Overrides the default layout; its tolerance is replaced by the threshold.
    pub quadrature: Option<QuadratureSpec>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            seed: 0,
            gauge_trials: 5,
            grid_side: 12,
            extension: ExtensionKind::Maximal,
            quadrature: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeCheck {
    pub index: usize,
    pub spin: Spin,
    pub factored: bool,
    pub kernel_residual: f64,
    pub kernel_residual_absolute: f64,
    pub l2_value: f64,
    pub l2_numeric: f64,
    pub tail_bound: f64,
    pub tail_exponent: String,
    pub local_exponents: Vec<String>,
    pub finite: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GramCheck {
    pub size: usize,
    pub min_singular: f64,
    pub max_singular: f64,
    pub ratio: f64,
    pub error_estimate: f64,
    pub pass: bool,
}

/// The first spin-down degree beyond the basis, which must fail to be square integrable.
#[derive(Debug, Clone, Serialize)]
pub struct NegativeControl {
    pub degree: u64,
    pub tail_exponent: String,
    pub rejected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeCheck {
    pub shifts: Vec<i64>,
    pub total_before: u64,
    pub total_after: u64,
    pub modulus_discrepancy: f64,
    pub integrand_discrepancy: f64,
    pub unrepresentable: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignFlipCheck {
    pub total: u64,
    pub flipped_total: u64,
    pub identity_lhs: u64,
    pub identity_rhs: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub phi0: String,
    pub phi: String,
    pub n: usize,
    pub maximal_counts: ModeCount,
    pub extension: ExtensionKind,
    pub extension_counts: Option<ModeCount>,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub modes: Vec<ModeCheck>,
    pub gram: GramCheck,
    pub negative_control: NegativeControl,
    pub gauge: Vec<GaugeCheck>,
    pub sign_flip: SignFlipCheck,
    pub pass: bool,
}

/// Maximal zero modes of `config`, built on the normalized field and shifted back.
pub fn modes_for(config: &FieldConfig) -> Result<Vec<ZeroMode>, NumericsError> {
    let (normalized, shifts) = normalize_to_unit_interval(config);
    let back: Vec<i64> = shifts.iter().map(|m| -m).collect();
    let basis = build_basis(&normalized)?;
    basis.modes.iter().map(|m| transform_or_factored(m, &back)).collect()
}

fn transform_or_factored(mode: &ZeroMode, shifts: &[i64]) -> Result<ZeroMode, NumericsError> {
    match gauge_transform_mode(mode, shifts) {
        Ok(m) => Ok(m),
        Err(ModeError::Unrepresentable(m)) => Ok(*m),
        Err(e) => Err(e.into()),
    }
}

/// Runs the full invariant suite on one configuration.
pub fn verify_configuration(
    config: &FieldConfig,
    options: &VerifyOptions,
) -> Result<VerificationReport, NumericsError> {
    let th = &options.thresholds;
    let evaluator = PotentialEvaluator::new(config);
    let grid = verification_grid(&evaluator, options.grid_side);
    let mut quad = options
        .quadrature
        .clone()
        .unwrap_or_else(|| QuadratureSpec::for_positions(evaluator.positions(), evaluator.extent()));
    quad.tolerance = th.quadrature_tolerance;

    let modes = modes_for(config)?;
    let mut checks = Vec::with_capacity(modes.len());
    for (index, mode) in modes.iter().enumerate() {
        let res = kernel_residual_measure(mode, &evaluator, &grid.points, grid.step, grid.length)?;
        let l2 = l2_norm_with_tail(mode, &evaluator, &quad)?;
        checks.push(ModeCheck {
            index,
            spin: mode.spin(),
            factored: mode.is_factored(),
            kernel_residual: res.relative,
            kernel_residual_absolute: res.absolute,
            l2_value: l2.value,
            l2_numeric: l2.numeric,
            tail_bound: l2.tail_bound,
            tail_exponent: format_rational(l2.tail_exponent),
            local_exponents: l2.local_exponents.iter().map(|e| format_rational(*e)).collect(),
            finite: l2.finite,
            pass: res.relative <= th.kernel_residual && l2.finite,
        });
    }

    let gram = gram_matrix(&modes, &evaluator, &quad)?;
    let gram = GramCheck {
        size: modes.len(),
        min_singular: gram.min_singular,
        max_singular: gram.max_singular,
        ratio: gram.ratio(),
        error_estimate: gram.error_estimate,
        pass: gram.ratio() > th.gram_ratio,
    };

    let (normalized, _) = normalize_to_unit_interval(config);
    let degree = curly_bracket(total_flux(&normalized));
    let mut poly = vec![Complex64::default(); degree as usize + 1];
    poly[degree as usize] = Complex64::new(1.0, 0.0);
    let negative_control = match ZeroMode::new(&normalized, Spin::Down, vec![], poly) {
        Err(ModeError::NotSquareIntegrable { tail, .. }) => NegativeControl {
            degree,
            tail_exponent: format_rational(tail),
            rejected: true,
        },
        Ok(m) => NegativeControl {
            degree,
            tail_exponent: format_rational(m.tail_exponent()?),
            rejected: false,
        },
        Err(e) => return Err(e.into()),
    };

    let maximal_counts = count_zero_modes(config, ExtensionKind::Maximal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut gauge = Vec::with_capacity(options.gauge_trials);
    for _ in 0..options.gauge_trials {
        let shifts: Vec<i64> = (0..config.n()).map(|_| rng.random_range(-3..=3)).collect();
        gauge.push(gauge_check(config, &evaluator, &modes, &shifts, &grid, th, maximal_counts.total())?);
    }

    let sign_flip = sign_flip_check(config)?;
    let pass = checks.iter().all(|c| c.pass)
        && gram.pass
        && negative_control.rejected
        && gauge.iter().all(|g| g.pass)
        && sign_flip.pass;
    Ok(VerificationReport {
        phi0: format_rational(config.bump_flux()),
        phi: format_rational(total_flux(config)),
        n: config.n(),
        maximal_counts,
        extension: options.extension,
        extension_counts: count_zero_modes(config, options.extension).ok(),
        thresholds: th.clone(),
        seed: options.seed,
        modes: checks,
        gram,
        negative_control,
        gauge,
        sign_flip,
        pass,
    })
}

fn gauge_check(
    config: &FieldConfig,
    evaluator: &PotentialEvaluator,
    modes: &[ZeroMode],
    shifts: &[i64],
    grid: &super::VerificationGrid,
    th: &Thresholds,
    total_before: u64,
) -> Result<GaugeCheck, NumericsError> {
    let shifted_config = gauge_shift(config, shifts)?;
    let shifted = PotentialEvaluator::new(&shifted_config);
    let total_after = count_zero_modes(&shifted_config, ExtensionKind::Maximal)?.total();
    let mut modulus_discrepancy = 0.0f64;
    let mut integrand_discrepancy = 0.0f64;
    let mut unrepresentable = 0;
    for mode in modes {
        let moved = match gauge_transform_mode(mode, shifts) {
            Ok(m) => m,
            Err(ModeError::Unrepresentable(m)) => {
                unrepresentable += 1;
                *m
            }
            Err(e) => return Err(e.into()),
        };
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for &z in &grid.points {
            let a = evaluate_mode(mode, evaluator, z)?.norm();
            let b = evaluate_mode(&moved, &shifted, z)?.norm();
            worst = worst.max((a - b).abs());
            scale = scale.max(a);
        }
        modulus_discrepancy = modulus_discrepancy.max(if scale > 0.0 { worst / scale } else { worst });

        // A non-kernel perturbation keeps the compared integrands away from zero.
        let spin = mode.spin();
        let test_fn = |z: Complex64| {
            let psi = evaluate_mode(mode, evaluator, z).ok()?;
            let bump = match spin {
                Spin::Up => z.conj() * evaluator.exp_h(z, 1.0).ok()?,
                Spin::Down => z * evaluator.exp_h(z, -1.0).ok()?,
            };
            Some(psi + bump)
        };
        let d = gauge_integrand_discrepancy(test_fn, spin, evaluator, shifts, &grid.points, grid.step)?;
        integrand_discrepancy = integrand_discrepancy.max(d);
    }
    Ok(GaugeCheck {
        shifts: shifts.to_vec(),
        total_before,
        total_after,
        modulus_discrepancy,
        integrand_discrepancy,
        unrepresentable,
        pass: total_before == total_after
            && modulus_discrepancy <= th.gauge_identity
            && integrand_discrepancy <= th.gauge_identity,
    })
}

fn sign_flip_check(config: &FieldConfig) -> Result<SignFlipCheck, NumericsError> {
    let total = count_zero_modes(config, ExtensionKind::Maximal)?.total();
    let flipped_total = count_zero_modes(&negate_field(config), ExtensionKind::Maximal)?.total();
    let (normalized, _) = normalize_to_unit_interval(config);
    let n = Rational::from_integer(config.n() as i64);
    let phi = total_flux(&normalized);
    let phi_hat = n - phi;
    let identity_lhs = curly_bracket(phi_hat) + curly_bracket(n - phi_hat);
    let identity_rhs = curly_bracket(n - phi) + curly_bracket(phi);
    Ok(SignFlipCheck {
        total,
        flipped_total,
        identity_lhs,
        identity_rhs,
        pass: total == flipped_total && identity_lhs == identity_rhs && identity_lhs == total,
    })
}
