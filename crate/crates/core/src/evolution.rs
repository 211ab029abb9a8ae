//! Time evolution `u(t) = exp(-iHt) u₀` in the eigenbasis and sampled
//! vertex intensities `|u(t, m)|²`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm;
use crate::graph::Hamiltonian;
use crate::spectral::EigenSystem;

/// Coefficients `a_j = ⟨u₀, φ_j⟩` of a state in a given eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<'a> {
    coeffs: Vec<Complex64>,
    basis: &'a EigenSystem,
}

impl<'a> CoefficientVector<'a> {
    pub fn new(coeffs: Vec<Complex64>, basis: &'a EigenSystem) -> Result<Self> {
        if coeffs.len() != basis.n() {
            return Err(Error::DimensionMismatch {
                expected: basis.n(),
                found: coeffs.len(),
                context: "coefficient count vs eigenbasis size",
            });
        }
        Ok(Self { coeffs, basis })
    }

    /// The `j`-th basis state.
    pub fn eigenmode(j: usize, basis: &'a EigenSystem) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.n()];
        coeffs[j] = Complex64::new(1.0, 0.0);
        Self { coeffs, basis }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &'a EigenSystem {
        self.basis
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    /// `u₀ = Σ_j a_j φ_j`.
    pub fn to_state(&self) -> Vec<Complex64> {
        combine(self.basis, &self.coeffs)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            basis: self.basis,
        }
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn combine(es: &EigenSystem, coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = es.n();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (j, a) in coeffs.iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (m, slot) in out.iter_mut().enumerate() {
            *slot += a * es.phi(j, m);
        }
    }
    out
}

/// Expands `u0` in the eigenbasis. The basis is real, so no conjugation on `φ`.
pub fn to_coefficients<'a>(u0: &[Complex64], es: &'a EigenSystem) -> Result<CoefficientVector<'a>> {
    let n = es.n();
    if u0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u0.len(),
            context: "state length vs vertex count",
        });
    }
    let coeffs = (0..n)
        .map(|j| {
            u0.iter()
                .enumerate()
                .map(|(m, u)| u * es.phi(j, m))
                .sum::<Complex64>()
        })
        .collect();
    Ok(CoefficientVector { coeffs, basis: es })
}

pub fn from_coefficients(c: &CoefficientVector<'_>) -> Vec<Complex64> {
    c.to_state()
}

/// `e^{-iλt}`. Evolution and the frequency fit both build their phases from
/// this, so the two agree to rounding even at large `t`.
#[inline]
pub fn mode_phase(lambda: f64, t: f64) -> Complex64 {
    let (s, c) = (lambda * t).sin_cos();
    Complex64::new(c, -s)
}

/// `u(t, m) = Σ_j a_j e^{-iλ_j t} φ_{j,m}`.
pub fn evolve(c: &CoefficientVector<'_>, t: f64) -> Vec<Complex64> {
    let es = c.basis;
    let phased: Vec<Complex64> = c
        .coeffs
        .iter()
        .zip(es.eigenvalues())
        .map(|(a, &l)| a * mode_phase(l, t))
        .collect();
    combine(es, &phased)
}

/// `exp(-iHt) u0` through a dense matrix exponential, without the eigenbasis.
pub fn evolve_direct(h: &Hamiltonian, u0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let n = h.n();
    if u0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u0.len(),
            context: "state length vs vertex count",
        });
    }
    let prop = expm::propagator(h.matrix(), t);
    let u = nalgebra::DVector::from_column_slice(u0);
    Ok((prop * u).iter().copied().collect())
}

/// Sampled intensities: `values[(s, m)] = |u(times[s], m)|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    times: Vec<f64>,
    values: DMatrix<f64>,
}

impl IntensityTrace {
    pub fn new(times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.nrows(),
                context: "trace rows vs time samples",
            });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTimes);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("intensity values"));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `T × n` matrix of intensities.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest absolute entrywise difference to another trace on the same grid.
    pub fn max_abs_diff(&self, other: &IntensityTrace) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn sample_intensity(c: &CoefficientVector<'_>, times: &[f64]) -> Result<IntensityTrace> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidTimes);
    }
    let n = c.basis.n();
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| evolve(c, t).iter().map(|z| z.norm_sqr()).collect())
        .collect();
    let values = DMatrix::from_fn(times.len(), n, |s, m| rows[s][m]);
    IntensityTrace::new(times.to_vec(), values)
}

const GRID_OVERSAMPLING: usize = 4;
/// Required span, in units of `2π / gap`, for resolving the closest pair of frequencies.
const BEAT_PERIODS: f64 = 1.0;
const GRID_SEED: u64 = 0x6772_6170_6861_7365;

/// Number of distinct frequencies `λ_j - λ_k` (`j > k`) plus the zero frequency.
pub fn frequency_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2 + 1
}

/// Sample times for retrieval.
///
/// Uses the uniform grid `t_s = s·τ`, `τ = π / (2·max(1, max|λ|))`, with
/// four samples per frequency. When that grid is too short to separate the
/// closest pair of frequencies the same number of samples is spread over a
/// longer window with deterministic jitter, which keeps the fit free of
/// aliasing.
pub fn retrieval_grid(es: &EigenSystem, min_difference_gap: f64) -> Vec<f64> {
    let count = GRID_OVERSAMPLING * frequency_count(es.n());
    let tau = std::f64::consts::PI / (2.0 * es.spectral_scale());
    let uniform_span = count as f64 * tau;
    let needed_span = if min_difference_gap.is_finite() && min_difference_gap > 0.0 {
        BEAT_PERIODS * 2.0 * std::f64::consts::PI / min_difference_gap
    } else {
        0.0
    };
    if uniform_span >= needed_span {
        return (0..count).map(|s| s as f64 * tau).collect();
    }
    let step = needed_span / count as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED);
    (0..count)
        .map(|s| (s as f64 + rng.random::<f64>()) * step)
        .collect()
}
