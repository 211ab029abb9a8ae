//! Constructions of distinct initial states with identical intensity traces.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{evolve, norm, to_coefficients};
use crate::graph::{build_hamiltonian, Graph, Hamiltonian, Potential};
use crate::retrieval::phase_aligned_distance;
use crate::spectral::{EigenSystem, SupportGraph};

/// Moduli must agree to this, relative to the largest entry.
const MODULUS_TOL: f64 = 1e-10;
const NON_MULTIPLE_TOL: f64 = 1e-6;
const ORTHOGONAL_TOL: f64 = 1e-12;
const UNIMODULAR_TOL: f64 = 1e-12;

fn inner(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum()
}

/// Largest `||f_j| - |g_j||`.
pub fn max_modulus_deviation(f: &[Complex64], g: &[Complex64]) -> f64 {
    f.iter()
        .zip(g)
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max)
}

/// Two vectors with `|f_j| = |g_j|` for every `j` that are not unimodular
/// multiples of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualModulusPair {
    pub f: Vec<Complex64>,
    pub g: Vec<Complex64>,
}

impl EqualModulusPair {
    pub fn new(f: Vec<Complex64>, g: Vec<Complex64>) -> Result<Self> {
        if f.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: f.len(),
                found: g.len(),
                context: "equal-modulus pair lengths",
            });
        }
        let scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let dev = max_modulus_deviation(&f, &g);
        if dev > MODULUS_TOL * scale {
            return Err(Error::UnequalModuli(dev));
        }
        if phase_aligned_distance(&f, &g)? <= NON_MULTIPLE_TOL * norm(&f) {
            return Err(Error::DegeneratePair);
        }
        Ok(Self { f, g })
    }

    pub fn inner_product(&self) -> Complex64 {
        inner(&self.f, &self.g)
    }
}

/// Result of [`orthogonalize_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalizedPair {
    pub pair: EqualModulusPair,
    /// Root `λ* ∈ (0, 1)` of `⟨f_λ, g_λ⟩`, or `None` when the input was
    /// already orthogonal and is returned unchanged.
    pub lambda: Option<f64>,
    /// Unimodular `c` applied to `g` so that `⟨f, c g⟩ > 0`.
    pub phase: Complex64,
}

/// Moves an equal-modulus pair to an orthogonal one inside `span{f, g}`.
///
/// After rotating `g` so that `⟨f, g⟩ > 0`, the pair
/// `f_λ = f - λ(f+g)/2`, `g_λ = g - λ(f+g)/2` keeps equal coordinate moduli
/// for `λ ∈ [0, 1]`, and `q(λ) = ⟨f_λ, g_λ⟩` is a real quadratic with
/// `q(0) > 0 > q(1)`. Its root in `(0, 1)` gives the orthogonal pair.
pub fn orthogonalize_pair(p: &EqualModulusPair) -> Result<OrthogonalizedPair> {
    let (f, g) = (&p.f, &p.g);
    let ip = inner(f, g);
    let one = Complex64::new(1.0, 0.0);
    if ip.norm() <= ORTHOGONAL_TOL * norm(f) * norm(g) {
        return Ok(OrthogonalizedPair {
            pair: p.clone(),
            lambda: None,
            phase: one,
        });
    }
    let phase = ip / ip.norm();
    let g: Vec<Complex64> = g.iter().map(|z| z * phase).collect();
    let half_sum: Vec<Complex64> = f.iter().zip(&g).map(|(a, b)| (a + b) * 0.5).collect();

    // q(λ) = a - bλ + cλ²
    let a = inner(f, &g).re;
    let b = (inner(f, &half_sum) + inner(&half_sum, &g)).re;
    let c = inner(&half_sum, &half_sum).re;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    // smaller root, written to avoid cancellation: 2a / (b + √disc)
    let lambda = 2.0 * a / (b + disc.sqrt());
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::DegeneratePair);
    }

    let f_out = f.iter().zip(&half_sum).map(|(x, h)| x - h * lambda).collect();
    let g_out = g.iter().zip(&half_sum).map(|(x, h)| x - h * lambda).collect();
    Ok(OrthogonalizedPair {
        pair: EqualModulusPair { f: f_out, g: g_out },
        lambda: Some(lambda),
        phase,
    })
}

/// Equal-modulus eigenpair of `-Δ` on the complete graph `K_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteGraphPair {
    pub pair: EqualModulusPair,
    pub hamiltonian: Hamiltonian,
    /// `max(‖H f - n f‖, ‖H g - n g‖)`.
    pub eigen_residual: f64,
}

/// `f = (ω^j)`, `g = (ω^{2j})` with `ω = e^{2πi/n}`: two orthogonal
/// unimodular vectors in the eigenspace of eigenvalue `n` of `-Δ` on `K_n`.
pub fn complete_graph_pair(n: usize) -> Result<CompleteGraphPair> {
    if n < 3 {
        return Err(Error::CompleteGraphTooSmall(n));
    }
    let character = |power: usize| -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let k = (power * j) % n;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
            })
            .collect()
    };
    let f = character(1);
    let g = character(2);
    let hamiltonian = build_hamiltonian(&Graph::complete(n)?, &Potential::zeros(n))?;
    let residual = |v: &[Complex64]| -> f64 {
        let h = hamiltonian.matrix();
        let diff: Vec<Complex64> = (0..n)
            .map(|r| (0..n).map(|c| v[c] * h[(r, c)]).sum::<Complex64>() - v[r] * n as f64)
            .collect();
        norm(&diff)
    };
    let eigen_residual = residual(&f).max(residual(&g));
    Ok(CompleteGraphPair {
        pair: EqualModulusPair::new(f, g)?,
        hamiltonian,
        eigen_residual,
    })
}

/// States `u₀ = φ_ℓ + Σ_{j∈S} φ_j` and `v₀ = φ_ℓ - Σ_{j∈S} φ_j`, where `S`
/// is the set of indices with no support-graph edge to `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignFlipPair {
    pub u0: Vec<Complex64>,
    pub v0: Vec<Complex64>,
    /// Anchor index `ℓ` (0-based).
    pub anchor: usize,
    /// Flipped indices `S` (0-based).
    pub flipped: Vec<usize>,
}

/// Builds the sign-flip pair for an incomplete support graph, anchored at
/// the first index that is not universal.
pub fn incomplete_support_counterexample(es: &EigenSystem, sg: &SupportGraph) -> Result<SignFlipPair> {
    let n = es.n();
    if sg.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sg.n(),
            context: "support graph vs eigenbasis",
        });
    }
    let anchor = (0..n)
        .find(|&j| !sg.is_universal(j))
        .ok_or(Error::SupportGraphComplete)?;
    let flipped = sg.non_neighbors(anchor);

    let mut u0 = vec![Complex64::new(0.0, 0.0); n];
    let mut v0 = u0.clone();
    for m in 0..n {
        let base = es.phi(anchor, m);
        let tail: f64 = flipped.iter().map(|&j| es.phi(j, m)).sum();
        u0[m] = Complex64::new(base + tail, 0.0);
        v0[m] = Complex64::new(base - tail, 0.0);
    }
    Ok(SignFlipPair {
        u0,
        v0,
        anchor,
        flipped,
    })
}

/// Connected graph whose support graph is incomplete while the spectrum is
/// totally dissociated: two 3-paths joined at their middle vertices, each
/// with a potential symmetric under its own reflection. The antisymmetric
/// mode of each path vanishes at the joint, so it stays an eigenvector of
/// the joined graph and the two such modes have disjoint supports.
pub fn gapped_support_instance() -> (Graph, Potential) {
    let graph = Graph::new(6, [(0, 1), (1, 2), (3, 4), (4, 5), (1, 4)])
        .expect("fixed edge list is valid");
    let potential = Potential::new(vec![0.0, 0.5, 0.0, 0.37, 0.9, 0.37]).expect("finite");
    (graph, potential)
}

/// Multiplies the restriction of `u0` to each connected component by the
/// matching unimodular phase.
pub fn disconnected_phase_family(
    h: &Hamiltonian,
    u0: &[Complex64],
    phases: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = h.n();
    if u0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u0.len(),
            context: "state length vs vertex count",
        });
    }
    let components = h.graph().connected_components();
    if components.len() < 2 {
        return Err(Error::GraphConnected);
    }
    if phases.len() != components.len() {
        return Err(Error::PhaseCountMismatch {
            expected: components.len(),
            found: phases.len(),
        });
    }
    if let Some(i) = phases.iter().position(|c| (c.norm() - 1.0).abs() > UNIMODULAR_TOL) {
        return Err(Error::NotUnimodular(i + 1));
    }
    let mut out = u0.to_vec();
    for (component, phase) in components.iter().zip(phases) {
        for &x in component {
            out[x] = u0[x] * phase;
        }
    }
    Ok(out)
}

/// Largest `||u(t,m)| - |v(t,m)||` over the given times and all vertices.
pub fn max_trace_deviation(
    es: &EigenSystem,
    u0: &[Complex64],
    v0: &[Complex64],
    times: &[f64],
) -> Result<f64> {
    let a = to_coefficients(u0, es)?;
    let b = to_coefficients(v0, es)?;
    Ok(times
        .iter()
        .map(|&t| max_modulus_deviation(&evolve(&a, t), &evolve(&b, t)))
        .fold(0.0, f64::max))
}
