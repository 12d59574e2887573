//! Tensor-product Gauss–Legendre quadrature on a disc with small discs removed.
//!
//! The region `{|z| < R} ∖ ∪ {|z - z_j| ≤ ε_j}` is split with a smooth partition
//! of unity: each solenoid gets a polar patch of radius `ρ_j` with geometrically
//! graded radial panels, and the remainder is covered by a polar grid about the
//! origin whose weights are multiplied by `1 - Σ χ_j`.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::NumericsError;

/// Panel layout for integrals over the truncated plane.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Radius of the excluded disc about each solenoid.
    pub inner_radii: Vec<f64>,
    pub outer_radius: f64,
    pub radial_panels: usize,
    pub angular_panels: usize,
    /// Gauss–Legendre nodes per panel and direction.
    pub order: usize,
    /// Relative tolerance for the panel-doubling convergence check.
    pub tolerance: f64,
}

fn nearest_other(positions: &[Complex64], j: usize) -> f64 {
    positions
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, p)| (p - positions[j]).norm())
        .fold(f64::INFINITY, f64::min)
}

impl QuadratureSpec {
    /// Default layout for a configuration whose singular points and supports lie within `extent`.
    pub fn for_positions(positions: &[Complex64], extent: f64) -> Self {
        let inner_radii = (0..positions.len())
            .map(|j| 1e-6 * nearest_other(positions, j).min(1.0))
            .collect();
        Self {
            inner_radii,
            outer_radius: (4.0 * extent).max(8.0),
            radial_panels: 12,
            angular_panels: 24,
            order: 8,
            tolerance: 1e-6,
        }
    }

    /// Same region with every panel count doubled.
    pub fn refined(&self) -> Self {
        Self {
            radial_panels: 2 * self.radial_panels,
            angular_panels: 2 * self.angular_panels,
            ..self.clone()
        }
    }

    /// Radius of the partition-of-unity patch about each solenoid.
    pub fn patch_radii(&self, positions: &[Complex64]) -> Vec<f64> {
        (0..positions.len())
            .map(|j| {
                let room = (self.outer_radius - positions[j].norm()) / 2.0;
                (0.4 * nearest_other(positions, j)).min(0.5).min(room)
            })
            .collect()
    }

    pub fn validate(&self, positions: &[Complex64]) -> Result<(), NumericsError> {
        let bad = |msg: String| Err(NumericsError::InvalidQuadrature(msg));
        if self.inner_radii.len() != positions.len() {
            return bad(format!(
                "{} inner radii for {} solenoids",
                self.inner_radii.len(),
                positions.len()
            ));
        }
        if self.radial_panels == 0 || self.angular_panels == 0 || self.order < 2 {
            return bad("panel counts must be positive and order at least 2".into());
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        for (j, (&eps, rho)) in self.inner_radii.iter().zip(self.patch_radii(positions)).enumerate() {
            if !(eps > 0.0) {
                return bad(format!("inner radius {j} must be positive"));
            }
            if !(rho > 0.0) || eps >= 0.5 * rho {
                return bad(format!("inner radius {j} ({eps}) too large for its patch ({rho})"));
            }
        }
        Ok(())
    }
}

/// `1` on `s ≤ 1/2`, `0` on `s ≥ 1`, C^∞ in between.
pub(crate) fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let x = 2.0 * (s - 0.5);
    let a = (-1.0 / (1.0 - x)).exp();
    let b = (-1.0 / x).exp();
    a / (a + b)
}

fn panels_on(breaks: &[f64], gl: &GaussLegendre) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(x, wt) in gl.as_node_weight_pairs() {
            out.push((mid + half * x, half * wt));
        }
    }
    out
}

fn uniform_breaks(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|k| a + (b - a) * k as f64 / count as f64).collect()
}

/// Nodes and weights realizing a [`QuadratureSpec`].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `core` is the radius containing every bump support and solenoid.
    pub fn new(spec: &QuadratureSpec, positions: &[Complex64], core: f64) -> Result<Self, NumericsError> {
        spec.validate(positions)?;
        let gl = GaussLegendre::new(spec.order)
            .map_err(|e| NumericsError::InvalidQuadrature(e.to_string()))?;
        let rho = spec.patch_radii(positions);
        let rho_min = rho.iter().copied().fold(1.0, f64::min);
        let big_r = spec.outer_radius;
        let core = positions
            .iter()
            .zip(&rho)
            .map(|(p, r)| p.norm() + r)
            .fold(core.max(1.0), f64::max)
            .min(big_r);

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let theta_panels = |count: usize| panels_on(&uniform_breaks(0.0, 2.0 * PI, count), &gl);

        // Background polar grid with the patches cut out smoothly.
        let feature = 0.5 * rho_min;
        let n_core = spec.radial_panels + (core / feature).ceil() as usize;
        let mut breaks = uniform_breaks(0.0, core, n_core);
        let mut r = core;
        while r < big_r {
            r = (1.5 * r).min(big_r);
            breaks.push(r);
        }
        let radial = panels_on(&breaks, &gl);
        let angular = theta_panels(spec.angular_panels + (2.0 * PI * core / feature).ceil() as usize);
        for &(r, wr) in &radial {
            for &(t, wt) in &angular {
                let z = Complex64::from_polar(r, t);
                let covered: f64 = positions
                    .iter()
                    .zip(&rho)
                    .map(|(p, rj)| cutoff((z - p).norm() / rj))
                    .sum();
                let w = wr * wt * r * (1.0 - covered);
                if w != 0.0 {
                    nodes.push(z);
                    weights.push(w);
                }
            }
        }

        // Graded patches about each solenoid.
        let angular = theta_panels(spec.angular_panels);
        for ((&p, &rj), &eps) in positions.iter().zip(&rho).zip(&spec.inner_radii) {
            let plateau = 0.5 * rj;
            let count = ((plateau / eps).log2().ceil() as usize).max(1) + spec.radial_panels / 2;
            let ratio = (plateau / eps).powf(1.0 / count as f64);
            let mut breaks: Vec<f64> = (0..count).map(|k| eps * ratio.powi(k as i32)).collect();
            breaks.extend(uniform_breaks(plateau, rj, spec.radial_panels.max(2)));
            for &(r, wr) in &panels_on(&breaks, &gl) {
                let chi = cutoff(r / rj);
                if chi == 0.0 {
                    continue;
                }
                for &(t, wt) in &angular {
                    nodes.push(p + Complex64::from_polar(r, t));
                    weights.push(wr * wt * r * chi);
                }
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_k f(z_k)` in node order.
    pub fn integrate<F>(&self, mut f: F) -> Result<f64, NumericsError>
    where
        F: FnMut(Complex64) -> Result<f64, NumericsError>,
    {
        let mut sum = 0.0;
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(z)?;
        }
        Ok(sum)
    }
}
