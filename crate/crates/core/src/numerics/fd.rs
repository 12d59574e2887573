//! Central-difference Wirtinger derivatives.

use num_complex::Complex64;

use super::NumericsError;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn sample<F>(f: &F, z: Complex64) -> Result<Complex64, NumericsError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    match f(z) {
        Some(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
        _ => Err(NumericsError::SingularStencil { point: z }),
    }
}

fn combine(fx: Complex64, fy: Complex64) -> (Complex64, Complex64) {
    (0.5 * (fx - I * fy), 0.5 * (fx + I * fy))
}

/// `(∂_z f, ∂_z̄ f)` from the four-point second-order stencil.
pub fn wirtinger_fd<F>(f: F, z: Complex64, step: f64) -> Result<(Complex64, Complex64), NumericsError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(NumericsError::InvalidStep(step));
    }
    let dx = Complex64::new(step, 0.0);
    let dy = Complex64::new(0.0, step);
    let fx = (sample(&f, z + dx)? - sample(&f, z - dx)?) / (2.0 * step);
    let fy = (sample(&f, z + dy)? - sample(&f, z - dy)?) / (2.0 * step);
    Ok(combine(fx, fy))
}

/// Sixth-order variant on a twelve-point stencil.
pub fn wirtinger_fd6<F>(f: F, z: Complex64, step: f64) -> Result<(Complex64, Complex64), NumericsError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(NumericsError::InvalidStep(step));
    }
    const W: [f64; 3] = [45.0, -9.0, 1.0];
    let mut fx = Complex64::default();
    let mut fy = Complex64::default();
    for (k, w) in W.iter().enumerate() {
        let s = step * (k + 1) as f64;
        let dx = Complex64::new(s, 0.0);
        let dy = Complex64::new(0.0, s);
        fx += *w * (sample(&f, z + dx)? - sample(&f, z - dx)?);
        fy += *w * (sample(&f, z + dy)? - sample(&f, z - dy)?);
    }
    Ok(combine(fx / (60.0 * step), fy / (60.0 * step)))
}
