//! Dense complex polynomials, coefficients in ascending order.

use num_complex::Complex64;

pub(crate) fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `p(z)·(z - root)`.
pub(crate) fn mul_linear(coeffs: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
    for (k, &c) in coeffs.iter().enumerate() {
        out[k + 1] += c;
        out[k] -= c * root;
    }
    out
}

/// Synthetic division by `(z - root)`: returns quotient and remainder `p(root)`.
pub(crate) fn div_linear(coeffs: &[Complex64], root: Complex64) -> (Vec<Complex64>, Complex64) {
    if coeffs.is_empty() {
        return (Vec::new(), Complex64::new(0.0, 0.0));
    }
    let mut quotient = vec![Complex64::new(0.0, 0.0); coeffs.len() - 1];
    let mut carry = Complex64::new(0.0, 0.0);
    for k in (0..coeffs.len()).rev() {
        carry = carry * root + coeffs[k];
        if k > 0 {
            quotient[k - 1] = carry;
        }
    }
    (quotient, carry)
}

pub(crate) fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len().max(b.len())];
    for (k, &c) in a.iter().enumerate() {
        out[k] += c;
    }
    for (k, &c) in b.iter().enumerate() {
        out[k] += c;
    }
    out
}

/// `Σ |c_k| |z|^k`, the natural size against which `p(z)` is compared to zero.
pub(crate) fn magnitude_at(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Taylor coefficients of `p` about `center`.
pub(crate) fn shift(coeffs: &[Complex64], center: Complex64) -> Vec<Complex64> {
    let mut rest = coeffs.to_vec();
    let mut out = Vec::with_capacity(coeffs.len());
    while !rest.is_empty() {
        let (q, r) = div_linear(&rest, center);
        out.push(r);
        rest = q;
    }
    out
}

/// Drop leading coefficients whose modulus is below `tol`.
pub(crate) fn trim(mut coeffs: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    while coeffs.last().is_some_and(|c| c.norm() <= tol) {
        coeffs.pop();
    }
    coeffs
}
