//! Scalar potential `h` with `Δh = B`, evaluated in closed form.
//!
//! Each bump `F·(6/ρ²)·(1 - r²/ρ²)²` has the radial solution
//!
//! ```text
//! u(r) = F·(log ρ - 11/12 + 3t/2 - 3t²/4 + t³/6),   t = r²/ρ²,  r < ρ
//! u(r) = F·log r,                                              r ≥ ρ
//! ```
//!
//! which is the logarithmic convolution of the bump, so the exterior
//! contribution is exactly `F·log|z - center|`.

use num_complex::Complex64;
use thiserror::Error;

use crate::flux::{total_flux, Bump, FieldConfig, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("h is singular at solenoid {index} ({position})")]
    SingularPoint { index: usize, position: Complex64 },
    #[error("solenoid index {index} out of range (n = {n})")]
    InvalidIndex { index: usize, n: usize },
}

/// Quartic C¹ profile `(1 - (r/radius)²)²` on `r < radius`, zero outside.
pub fn bump_profile(r: f64, radius: f64) -> f64 {
    if r >= radius {
        return 0.0;
    }
    let t = (r / radius) * (r / radius);
    (1.0 - t) * (1.0 - t)
}

#[derive(Debug, Clone)]
struct RadialBump {
    center: Complex64,
    radius: f64,
    flux: f64,
    /// Value of u at r = 0 divided by flux, `log ρ - 11/12`.
    inner_constant: f64,
}

impl RadialBump {
    fn new(b: &Bump) -> Self {
        Self {
            center: b.center(),
            radius: b.radius(),
            flux: rational_to_f64(b.flux()),
            inner_constant: b.radius().ln() - 11.0 / 12.0,
        }
    }

    fn value(&self, z: Complex64) -> f64 {
        let r = (z - self.center).norm();
        if r >= self.radius {
            return self.flux * r.ln();
        }
        let t = (r / self.radius).powi(2);
        self.flux * (self.inner_constant + t * (1.5 + t * (-0.75 + t / 6.0)))
    }

    fn field(&self, z: Complex64) -> f64 {
        let r = (z - self.center).norm();
        6.0 * self.flux / (self.radius * self.radius) * bump_profile(r, self.radius)
    }
}

pub(crate) fn rational_to_f64(x: Rational) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Evaluates `h₀`, `h` and `e^{±h}` for one field configuration.
#[derive(Debug, Clone)]
pub struct PotentialEvaluator {
    config: FieldConfig,
    bumps: Vec<RadialBump>,
    positions: Vec<Complex64>,
    alphas: Vec<f64>,
}

impl PotentialEvaluator {
    pub fn new(config: &FieldConfig) -> Self {
        Self {
            bumps: config.bumps().iter().map(RadialBump::new).collect(),
            positions: config.positions(),
            alphas: config.intensities().into_iter().map(rational_to_f64).collect(),
            config: config.clone(),
        }
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    /// Regular part `h₀(z)`.
    pub fn eval_h0(&self, z: Complex64) -> f64 {
        self.bumps.iter().fold(0.0, |acc, b| acc + b.value(z))
    }

    /// Contribution of a single bump to `h₀`.
    pub fn bump_contribution(&self, bump: usize, z: Complex64) -> f64 {
        self.bumps[bump].value(z)
    }

    /// One-sided radial derivative of a bump's contribution at distance `r`
    /// from its center; `inside` selects the interior polynomial branch.
    pub fn bump_radial_derivative(&self, bump: usize, r: f64, inside: bool) -> f64 {
        let b = &self.bumps[bump];
        if inside {
            let t = (r / b.radius).powi(2);
            b.flux * (3.0 * t - 3.0 * t * t + t * t * t) / r
        } else {
            b.flux / r
        }
    }

    /// `B₀(z)`, the smooth part of the field.
    pub fn regular_field(&self, z: Complex64) -> f64 {
        self.bumps.iter().fold(0.0, |acc, b| acc + b.field(z))
    }

    /// `h(z) = h₀(z) + Σ α_j log|z - z_j|`.
    pub fn eval_h(&self, z: Complex64) -> Result<f64, PotentialError> {
        let mut h = self.eval_h0(z);
        for (index, (&p, &a)) in self.positions.iter().zip(&self.alphas).enumerate() {
            let d = (z - p).norm();
            if d == 0.0 {
                return Err(PotentialError::SingularPoint { index, position: p });
            }
            h += a * d.ln();
        }
        Ok(h)
    }

    /// `e^{sign·h(z)}`.
    pub fn exp_h(&self, z: Complex64, sign: f64) -> Result<f64, PotentialError> {
        Ok((sign * self.eval_h(z)?).exp())
    }

    /// `h(z) - α_j log|z - z_j|`, which extends continuously to `z_j`.
    pub fn regular_remainder(&self, j: usize, z: Complex64) -> Result<f64, PotentialError> {
        self.check_index(j)?;
        let mut h = self.eval_h0(z);
        for (index, (&p, &a)) in self.positions.iter().zip(&self.alphas).enumerate() {
            if index == j {
                continue;
            }
            let d = (z - p).norm();
            if d == 0.0 {
                return Err(PotentialError::SingularPoint { index, position: p });
            }
            h += a * d.ln();
        }
        Ok(h)
    }

    /// Exponent `Φ` in `e^{±h} ∼ |z|^{±Φ}` at infinity.
    pub fn far_field_exponent(&self) -> Rational {
        total_flux(&self.config)
    }

    /// Exponent `α_j` in `e^{±h} ∼ |z - z_j|^{±α_j}`.
    pub fn local_exponent(&self, j: usize) -> Result<Rational, PotentialError> {
        self.check_index(j)?;
        Ok(self.config.solenoids()[j].intensity())
    }

    /// Upper bound on `|h(z) - Φ log|z||` for `z` outside every bump support,
    /// from `|log|1 - a/z|| ≤ -log(1 - |a|/|z|)` applied term by term.
    /// Returns `None` when `z` is not far enough out for the bound to apply.
    pub fn far_field_bound(&self, z: Complex64) -> Option<f64> {
        let rz = z.norm();
        let mut bound = 0.0;
        for b in &self.bumps {
            if (z - b.center).norm() < b.radius || b.center.norm() >= rz {
                return None;
            }
            bound += b.flux.abs() * -(1.0 - b.center.norm() / rz).ln();
        }
        for (&p, &a) in self.positions.iter().zip(&self.alphas) {
            if p.norm() >= rz {
                return None;
            }
            bound += a.abs() * -(1.0 - p.norm() / rz).ln();
        }
        Some(bound)
    }

    /// Largest distance from the origin reached by a solenoid or a bump support.
    pub fn extent(&self) -> f64 {
        let s = self.positions.iter().map(|p| p.norm()).fold(0.0, f64::max);
        self.bumps
            .iter()
            .map(|b| b.center.norm() + b.radius)
            .fold(s, f64::max)
    }

    pub fn positions(&self) -> &[Complex64] {
        &self.positions
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    fn check_index(&self, j: usize) -> Result<(), PotentialError> {
        if j >= self.positions.len() {
            return Err(PotentialError::InvalidIndex {
                index: j,
                n: self.positions.len(),
            });
        }
        Ok(())
    }
}
