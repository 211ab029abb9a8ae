//! Dense matrix exponential of `-iHt` by scaling and squaring a truncated
//! Taylor series. Independent of the eigendecomposition, so it serves as an
//! oracle for the spectral propagator.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Scaled matrix norm target before the Taylor series is applied.
const SCALED_NORM: f64 = 0.5;
/// `0.5^19 / 19! ≈ 1.6e-23`, far below double precision.
const TAYLOR_TERMS: usize = 18;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` for a dense complex matrix.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / Complex64::new(2f64.powi(squarings), 0.0);

    // Horner: I + X(I + X/2(I + X/3(...)))
    let identity = DMatrix::<Complex64>::identity(n, n);
    let mut result = identity.clone();
    for k in (1..=TAYLOR_TERMS).rev() {
        result = &identity + (&scaled * &result) / Complex64::new(k as f64, 0.0);
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(-iHt)` for a real symmetric `H`.
pub fn propagator(h: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
    let a = h.map(|x| Complex64::new(0.0, -x * t));
    expm(&a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let h = DMatrix::from_element(1, 1, 5.0);
        let u = propagator(&h, std::f64::consts::PI / 5.0);
        assert!((u[(0, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn zero_time_is_identity() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let u = propagator(&h, 0.0);
        assert_eq!(u, DMatrix::identity(2, 2));
    }

    #[test]
    fn two_level_rotation() {
        // H = σ_x: exp(-iσ_x t) = cos t I - i sin t σ_x
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let t = 3.7;
        let u = propagator(&h, t);
        assert!((u[(0, 0)] - Complex64::new(t.cos(), 0.0)).norm() < 1e-13);
        assert!((u[(0, 1)] - Complex64::new(0.0, -t.sin())).norm() < 1e-13);
    }

    #[test]
    fn unitary_for_large_norm() {
        let h = DMatrix::from_fn(6, 6, |r, c| ((r * 7 + c * 7) % 5) as f64 - 2.0);
        let h = (&h + h.transpose()) * 3.0;
        let u = propagator(&h, 11.0);
        let prod = u.adjoint() * &u;
        let err = (prod - DMatrix::<Complex64>::identity(6, 6)).norm();
        assert!(err < 1e-11, "unitarity error {err}");
    }
}
