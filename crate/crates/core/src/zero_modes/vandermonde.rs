//! Pole-coefficient constraints `Σ_j c_j z_j^k = 0, k < l`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ModeError;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Points closer than this (relative to the point-set scale) are duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-8;

fn check_distinct(points: &[Complex64]) -> Result<(), ModeError> {
    let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            if (a - b).norm() < DUPLICATE_TOLERANCE * scale {
                return Err(ModeError::DuplicatePoints { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Orthonormal basis of `{c ∈ ℂⁿ : Σ_j c_j z_j^k = 0 for k = 0..l-1}`.
///
/// The basis is obtained by Gram-Schmidt on the columns of the orthogonal
/// projector onto the null space, taken in solenoid order, so it does not
/// depend on the arbitrary basis an SVD returns inside a degenerate subspace.
pub fn vandermonde_null_space(
    points: &[Complex64],
    l: usize,
) -> Result<Vec<Vec<Complex64>>, ModeError> {
    let n = points.len();
    if l > n {
        return Err(ModeError::TooManyConstraints { l, n });
    }
    check_distinct(points)?;
    let zero = Complex64::new(0.0, 0.0);
    if l == 0 {
        return Ok((0..n)
            .map(|j| {
                let mut e = vec![zero; n];
                e[j] = Complex64::new(1.0, 0.0);
                e
            })
            .collect());
    }
    if l == n {
        return Ok(Vec::new());
    }

    // Rescaling the points leaves the null space unchanged and keeps powers O(1).
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let scaled: Vec<Complex64> = points.iter().map(|p| p / scale).collect();
    let matrix = DMatrix::from_fn(n, n, |k, j| if k < l { scaled[j].powu(k as u32) } else { zero });
    let svd = matrix.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let sigma_max = sigma[order[0]];
    let rank = order
        .iter()
        .filter(|&&i| sigma[i] > RANK_TOLERANCE * sigma_max)
        .count();
    if rank != l {
        return Err(ModeError::RankDeficient { expected: l, found: rank });
    }

    let null_rows = &order[l..];
    let projector = DMatrix::from_fn(n, n, |a, b| {
        null_rows
            .iter()
            .map(|&r| v_t[(r, a)].conj() * v_t[(r, b)])
            .sum::<Complex64>()
    });

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n - l);
    for j in 0..n {
        if basis.len() == n - l {
            break;
        }
        let mut v: Vec<Complex64> = (0..n).map(|a| projector[(a, j)]).collect();
        for _ in 0..2 {
            for b in &basis {
                let dot: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    debug_assert_eq!(basis.len(), n - l);
    Ok(basis)
}

/// Smallest `l` with `Σ c_j z_j^l ≠ 0`, together with that sum. It governs the
/// decay `Σ c_j/(z - z_j) ∼ (Σ c_j z_j^l)·z^{-l-1}`.
pub fn leading_order(
    coeffs: &[Complex64],
    points: &[Complex64],
) -> Result<(usize, Complex64), ModeError> {
    if coeffs.len() != points.len() {
        return Err(ModeError::LengthMismatch {
            expected: points.len(),
            got: coeffs.len(),
        });
    }
    if coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
        return Err(ModeError::ZeroCoefficients);
    }
    check_distinct(points)?;
    let n = points.len();
    for l in 0..n {
        let sum: Complex64 = coeffs.iter().zip(points).map(|(c, z)| c * z.powu(l as u32)).sum();
        let size: f64 = coeffs
            .iter()
            .zip(points)
            .map(|(c, z)| c.norm() * z.norm().powi(l as i32))
            .sum();
        if sum.norm() > 1e-10 * size {
            return Ok((l, sum));
        }
    }
    Err(ModeError::ZeroCoefficients)
}
