//! Recovery of an initial state from its vertex intensity trace.
//!
//! The intensity at vertex `m` is the trigonometric polynomial
//!
//! ```text
//! |u(t,m)|² = Σ_{j,k} a_j conj(a_k) φ_{j,m} φ_{k,m} e^{-i(λ_j - λ_k)t}
//! ```
//!
//! With a totally dissociated spectrum every nonzero frequency belongs to
//! exactly one ordered pair `(j, k)`, so a least-squares fit over the known
//! frequencies yields the off-diagonal cross terms. The diagonal terms all
//! sit at frequency zero and only their sum per vertex is observed; the
//! individual weights `|a_j|²` are recovered from the off-diagonal terms
//! (`|a_j|² = |G_jk| |G_jl| / |G_kl|` with `G_jk = a_j conj(a_k)`) and, where
//! that is not possible, from the zero-frequency sums.
//!
//! The state is then rebuilt by anchoring the phase of one mode (the pivot)
//! and dividing every other cross term against it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{combine, mode_phase, IntensityTrace};
use crate::spectral::{check_dissociated, support_graph, validate_tol, EigenSystem, SupportGraph};

/// Numerical thresholds used by retrieval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Minimum separation of eigenvalues and of eigenvalue differences.
    pub dissociation: f64,
    /// `|φ_{j,m} φ_{k,m}|` above this counts as co-support.
    pub support: f64,
    /// A mode is active when `|a_j| > amplitude · max_k |a_k|`.
    pub amplitude: f64,
    /// Largest accepted condition number of the frequency design matrix.
    pub max_condition: f64,
}

impl Tolerances {
    pub fn for_system(es: &EigenSystem) -> Self {
        Self {
            dissociation: es.default_dissociation_tol(),
            support: es.default_support_tol(),
            amplitude: 1e-8,
            max_condition: 1e8,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_tol(self.dissociation)?;
        validate_tol(self.support)?;
        validate_tol(self.amplitude)?;
        validate_tol(self.max_condition)?;
        Ok(())
    }
}

/// Cross-product magnitudes below this fraction of `‖u₀‖²` are treated as zero
/// when choosing the triangle that determines a mode weight.
const CROSS_TERM_FLOOR: f64 = 1e-9;
/// Relative residual accepted when a zero-frequency profile is matched by one mode.
const SINGLE_MODE_FIT_TOL: f64 = 1e-6;
const WEIGHT_SYSTEM_MAX_CONDITION: f64 = 1e8;

/// `C[j,k,m] ≈ a_j conj(a_k) φ_{j,m} φ_{k,m}` for all `j, k, m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTermTensor {
    n: usize,
    data: Vec<Complex64>,
    dc: Vec<f64>,
    vertex_residuals: Vec<f64>,
    condition: f64,
    ambiguous_modes: Vec<usize>,
}

impl CrossTermTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, m: usize) -> Complex64 {
        self.data[(j * self.n + k) * self.n + m]
    }

    fn set(&mut self, j: usize, k: usize, m: usize, value: Complex64) {
        let n = self.n;
        self.data[(j * n + k) * n + m] = value;
    }

    /// Fitted zero-frequency component at vertex `m`, i.e. `Σ_j C[j,j,m]`.
    pub fn dc(&self, m: usize) -> f64 {
        self.dc[m]
    }

    /// RMS fit residual per vertex.
    pub fn vertex_residuals(&self) -> &[f64] {
        &self.vertex_residuals
    }

    pub fn residual(&self) -> f64 {
        self.vertex_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Modes whose weight `|a_j|²` is not determined by the trace.
    pub fn ambiguous_modes(&self) -> &[usize] {
        &self.ambiguous_modes
    }

    /// Largest `|C[j,k,m] - other[j,k,m]|`.
    pub fn max_abs_diff(&self, other: &CrossTermTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Fits every vertex intensity to the known frequency set and assembles the
/// cross-term tensor.
pub fn recover_cross_terms(
    trace: &IntensityTrace,
    es: &EigenSystem,
    tol: &Tolerances,
) -> Result<CrossTermTensor> {
    tol.validate()?;
    let n = es.n();
    if trace.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: trace.n(),
            context: "trace columns vs vertex count",
        });
    }
    let dis = check_dissociated(es.eigenvalues(), tol.dissociation);
    if !dis.dissociated {
        return Err(Error::NotDissociated {
            gap: dis.min_difference_gap,
            tol: tol.dissociation,
        });
    }
    let mut sorted = trace.times().to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes);
    }

    let pairs: Vec<(usize, usize)> = (1..n).flat_map(|j| (0..j).map(move |k| (j, k))).collect();
    let unknowns = 1 + 2 * pairs.len();
    let samples = trace.len();
    if samples < unknowns {
        return Err(Error::InsufficientSamples { samples, unknowns });
    }

    // Real basis {1, cos ω_jk t, sin ω_jk t}, ω_jk = λ_j - λ_k > 0.
    let lambdas = es.eigenvalues();
    let mut design = DMatrix::<f64>::zeros(samples, unknowns);
    let mut phases = vec![Complex64::new(0.0, 0.0); n];
    for (s, &t) in trace.times().iter().enumerate() {
        for (p, &l) in phases.iter_mut().zip(lambdas) {
            *p = mode_phase(l, t);
        }
        design[(s, 0)] = 1.0;
        for (idx, &(j, k)) in pairs.iter().enumerate() {
            let z = phases[j] * phases[k].conj();
            design[(s, 1 + 2 * idx)] = z.re;
            design[(s, 2 + 2 * idx)] = -z.im;
        }
    }

    let (coeffs, condition) = least_squares(&design, trace.values(), tol.max_condition)?;
    let fitted = &design * &coeffs;
    let vertex_residuals = (0..n)
        .map(|m| {
            let diff = trace.values().column(m) - fitted.column(m);
            diff.norm() / (samples as f64).sqrt()
        })
        .collect();

    let mut tensor = CrossTermTensor {
        n,
        data: vec![Complex64::new(0.0, 0.0); n * n * n],
        dc: (0..n).map(|m| coeffs[(0, m)]).collect(),
        vertex_residuals,
        condition,
        ambiguous_modes: Vec::new(),
    };
    for (idx, &(j, k)) in pairs.iter().enumerate() {
        for m in 0..n {
            // 2 Re(C e^{-iωt}) = 2 Re C cos ωt + 2 Im C sin ωt
            let c = Complex64::new(coeffs[(1 + 2 * idx, m)], coeffs[(2 + 2 * idx, m)]) * 0.5;
            tensor.set(j, k, m, c);
            tensor.set(k, j, m, c.conj());
        }
    }

    let (weights, ambiguous) = mode_weights(&tensor, es, tol);
    for (j, w) in weights.iter().enumerate() {
        for m in 0..n {
            let phi = es.phi(j, m);
            tensor.set(j, j, m, Complex64::new(w * phi * phi, 0.0));
        }
    }
    tensor.ambiguous_modes = ambiguous;
    Ok(tensor)
}

/// Least squares through a Householder QR of `a`. Conditioning is read off
/// the singular values of `R`, which equal those of `a`.
fn least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>, max_condition: f64) -> Result<(DMatrix<f64>, f64)> {
    let cols = a.ncols();
    let qr = a.clone().qr();
    let r = qr.r();
    let singular = r.singular_values();
    let max_sv = singular.max();
    let min_sv = singular.min();
    let condition = if min_sv > 0.0 { max_sv / min_sv } else { f64::INFINITY };
    if !(condition <= max_condition) {
        return Err(Error::IllConditioned { condition });
    }
    let mut rhs = b.clone();
    qr.q_tr_mul(&mut rhs);
    let top = rhs.rows(0, cols).into_owned();
    let x = r
        .solve_upper_triangular(&top)
        .ok_or(Error::IllConditioned { condition })?;
    Ok((x, condition))
}

/// Off-diagonal products `G_jk = a_j conj(a_k)`, fitted over all vertices.
/// `None` where the two eigenvectors share no support.
fn pair_products(ct: &CrossTermTensor, es: &EigenSystem, support_tol: f64) -> Vec<Option<Complex64>> {
    let n = es.n();
    let mut g = vec![None; n * n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            let mut peak = 0.0_f64;
            for m in 0..n {
                let p = es.phi(j, m) * es.phi(k, m);
                num += ct.get(j, k, m) * p;
                den += p * p;
                peak = peak.max(p.abs());
            }
            if peak > support_tol {
                g[j * n + k] = Some(num / den);
            }
        }
    }
    g
}

/// Estimates `|a_j|²` for every mode. Returns the weights and the modes
/// whose weight the trace leaves undetermined.
fn mode_weights(ct: &CrossTermTensor, es: &EigenSystem, tol: &Tolerances) -> (Vec<f64>, Vec<usize>) {
    let n = es.n();
    let total: f64 = ct.dc.iter().sum();
    if total <= 0.0 {
        return (vec![0.0; n], Vec::new());
    }
    let g = pair_products(ct, es, tol.support);
    let mag = |j: usize, k: usize| g[j * n + k].map(|z| z.norm());
    let floor = CROSS_TERM_FLOOR * total;

    let mut weights = vec![0.0; n];
    let mut undetermined = Vec::new();
    for j in 0..n {
        // best triangle (k, l): |a_j|² = |G_jk| |G_jl| / |G_kl|
        let mut best: Option<(f64, f64)> = None;
        for k in 0..n {
            if k == j {
                continue;
            }
            let Some(gjk) = mag(j, k) else { continue };
            for l in k + 1..n {
                if l == j {
                    continue;
                }
                let (Some(gjl), Some(gkl)) = (mag(j, l), mag(k, l)) else {
                    continue;
                };
                if gkl <= floor {
                    continue;
                }
                let score = gjk * gjl * gkl;
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, gjk * gjl / gkl));
                }
            }
        }
        match best {
            Some((_, w)) => weights[j] = w,
            None => undetermined.push(j),
        }
    }
    if undetermined.is_empty() {
        return (weights, Vec::new());
    }

    // Remaining weights from the zero-frequency profile.
    let residual: Vec<f64> = (0..n)
        .map(|m| {
            ct.dc[m]
                - (0..n)
                    .filter(|j| !undetermined.contains(j))
                    .map(|j| weights[j] * es.phi(j, m).powi(2))
                    .sum::<f64>()
        })
        .collect();
    let residual_norm = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    if residual_norm <= 1e-12 * total {
        // Σ_U w_j φ_j² = 0 with w_j ≥ 0 forces every w_j = 0.
        return (weights, Vec::new());
    }

    let profile = DMatrix::from_fn(n, undetermined.len(), |m, c| es.phi(undetermined[c], m).powi(2));
    let rhs = DMatrix::from_column_slice(n, 1, &residual);
    let svd = profile.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    let full_rank = undetermined.len() <= n && min_sv > 0.0 && max_sv / min_sv <= WEIGHT_SYSTEM_MAX_CONDITION;
    if full_rank {
        if let Ok(sol) = svd.solve(&rhs, 0.0) {
            for (c, &j) in undetermined.iter().enumerate() {
                weights[j] = sol[(c, 0)].max(0.0);
            }
            return (weights, Vec::new());
        }
    }

    // Rank-deficient profile. If every pair inside the undetermined set is
    // observed to vanish, at most one of them is active: accept a unique
    // single-mode match.
    let pairs_vanish = undetermined.iter().enumerate().all(|(i, &j)| {
        undetermined[i + 1..]
            .iter()
            .all(|&k| mag(j, k).is_some_and(|v| v <= floor))
    });
    if pairs_vanish {
        let matches: Vec<(usize, f64)> = undetermined
            .iter()
            .filter_map(|&j| {
                let prof: Vec<f64> = (0..n).map(|m| es.phi(j, m).powi(2)).collect();
                let pp: f64 = prof.iter().map(|x| x * x).sum();
                let w = prof.iter().zip(&residual).map(|(p, r)| p * r).sum::<f64>() / pp;
                let miss = prof
                    .iter()
                    .zip(&residual)
                    .map(|(p, r)| (r - w * p).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (w > 0.0 && miss <= SINGLE_MODE_FIT_TOL * residual_norm).then_some((j, w))
            })
            .collect();
        if let [(j, w)] = matches[..] {
            weights[j] = w;
            return (weights, Vec::new());
        }
    }

    if let Ok(sol) = svd.solve(&rhs, 1e-12 * max_sv) {
        for (c, &j) in undetermined.iter().enumerate() {
            weights[j] = sol[(c, 0)].max(0.0);
        }
    }
    (weights, undetermined)
}

/// Fit quality of a retrieval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Largest per-vertex RMS residual of the frequency fit.
    pub residual: f64,
    /// Condition number of the frequency design matrix.
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    /// Reconstructed state, phase-normalized so that `a_pivot > 0`.
    pub u0: Vec<Complex64>,
    pub coefficients: Vec<Complex64>,
    /// Eigenbasis index used as the phase anchor; `None` for the zero state.
    pub pivot: Option<usize>,
    /// The trace provably determines `u0` up to a global phase.
    pub certified: bool,
    /// Active modes that could not be reconstructed or whose weight is undetermined.
    pub ambiguous_modes: Vec<usize>,
    pub diagnostics: Diagnostics,
}

/// Rebuilds `u₀` from a cross-term tensor.
///
/// 1. `|a_j|²` by least squares of `C[j,j,m] = |a_j|² φ_{j,m}²` over support vertices.
/// 2. Pivot `ℓ`: the strongest active mode that is universal in the support
///    graph (the strongest active mode if none is); `a_ℓ = |a_ℓ|`. Any active
///    universal mode anchors the phase; the strongest one keeps the division
///    in step 3 away from noise-level amplitudes.
/// 3. `a_j = C[j,ℓ,m] / (a_ℓ φ_{j,m} φ_{ℓ,m})` at the witness vertex `m` of `(j, ℓ)`.
/// 4. `u₀ = Σ_j a_j φ_j`.
pub fn reconstruct(
    ct: &CrossTermTensor,
    es: &EigenSystem,
    sg: &SupportGraph,
    tol: &Tolerances,
) -> Result<RetrievalResult> {
    tol.validate()?;
    let n = es.n();
    for (found, context) in [(ct.n(), "tensor size vs eigenbasis"), (sg.n(), "support graph vs eigenbasis")] {
        if found != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found,
                context,
            });
        }
    }
    let dissociated = check_dissociated(es.eigenvalues(), tol.dissociation).dissociated;
    let diagnostics = Diagnostics {
        residual: ct.residual(),
        condition: ct.condition(),
    };

    let amplitudes: Vec<f64> = (0..n)
        .map(|j| {
            let (num, den) = (0..n)
                .map(|m| es.phi(j, m).powi(2))
                .enumerate()
                .filter(|(_, p)| *p > tol.support)
                .fold((0.0, 0.0), |(num, den), (m, p)| (num + ct.get(j, j, m).re * p, den + p * p));
            if den > 0.0 {
                (num / den).max(0.0).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let peak = amplitudes.iter().copied().fold(0.0, f64::max);
    let cutoff = tol.amplitude * peak;
    let active: Vec<usize> = (0..n).filter(|&j| amplitudes[j] > 0.0 && amplitudes[j] > cutoff).collect();

    let mut coefficients = vec![Complex64::new(0.0, 0.0); n];
    let Some(&first) = active.first() else {
        return Ok(RetrievalResult {
            u0: coefficients.clone(),
            coefficients,
            pivot: None,
            certified: dissociated && ct.ambiguous_modes().is_empty(),
            ambiguous_modes: ct.ambiguous_modes().to_vec(),
            diagnostics,
        });
    };
    let strongest = |candidates: &mut dyn Iterator<Item = usize>| {
        candidates.max_by(|&a, &b| amplitudes[a].total_cmp(&amplitudes[b]).then(b.cmp(&a)))
    };
    let pivot = strongest(&mut active.iter().copied().filter(|&j| sg.is_universal(j)))
        .or_else(|| strongest(&mut active.iter().copied()))
        .unwrap_or(first);
    let anchor = amplitudes[pivot];
    coefficients[pivot] = Complex64::new(anchor, 0.0);

    let mut refused = Vec::new();
    for &j in &active {
        if j == pivot {
            continue;
        }
        match sg.witness(j, pivot) {
            Some(m) => {
                let scale = anchor * es.phi(j, m) * es.phi(pivot, m);
                coefficients[j] = ct.get(j, pivot, m) / scale;
            }
            None => refused.push(j),
        }
    }

    let mut ambiguous_modes = refused.clone();
    ambiguous_modes.extend_from_slice(ct.ambiguous_modes());
    ambiguous_modes.sort_unstable();
    ambiguous_modes.dedup();

    let certified = dissociated && sg.is_universal(pivot) && ambiguous_modes.is_empty();
    Ok(RetrievalResult {
        u0: combine(es, &coefficients),
        coefficients,
        pivot: Some(pivot),
        certified,
        ambiguous_modes,
        diagnostics,
    })
}

/// Full pipeline from a trace: cross terms, support graph, reconstruction.
pub fn retrieve(trace: &IntensityTrace, es: &EigenSystem, tol: &Tolerances) -> Result<RetrievalResult> {
    let ct = recover_cross_terms(trace, es, tol)?;
    let sg = support_graph(es, tol.support);
    reconstruct(&ct, es, &sg, tol)
}

/// `min_{|c|=1} ‖u - c v‖`, attained at `c = ⟨u, v⟩ / |⟨u, v⟩|`.
///
/// Evaluated as the norm of `u - c v` rather than through
/// `‖u‖² + ‖v‖² - 2|⟨u,v⟩|`, which loses half the digits near zero.
pub fn phase_aligned_distance(u: &[Complex64], v: &[Complex64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
            context: "phase-aligned distance operands",
        });
    }
    let inner: Complex64 = u.iter().zip(v).map(|(a, b)| a * b.conj()).sum();
    let c = if inner.norm() > 0.0 {
        inner / inner.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(u
        .iter()
        .zip(v)
        .map(|(a, b)| (a - c * b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}
