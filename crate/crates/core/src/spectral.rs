//! Eigendecomposition of the Hamiltonian and the two spectral hypotheses
//! used by retrieval: total dissociation of the eigenvalues and completeness
//! of the eigenvector support graph.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::Hamiltonian;

/// Entries with magnitude at or below this are skipped when fixing signs.
const SIGN_THRESHOLD: f64 = 1e-12;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenvalues in nondecreasing order with an orthonormal real eigenbasis.
/// Column `j` of `eigenvectors` is `φ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    /// Assembles a system from parts without checking orthonormality.
    /// Used for hand-built bases in tests and counterexamples.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: eigenvectors.ncols(),
                context: "eigenvector matrix vs eigenvalue count",
            });
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `φ_{j,m}`: entry `m` of eigenvector `j`.
    #[inline]
    pub fn phi(&self, j: usize, m: usize) -> f64 {
        self.eigenvectors[(m, j)]
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }

    /// Largest `|λ_j|`, floored at 1.
    pub fn spectral_scale(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(1.0_f64, |acc, l| acc.max(l.abs()))
    }

    /// `1e-9 · max(1, max |λ|)`.
    pub fn default_dissociation_tol(&self) -> f64 {
        1e-9 * self.spectral_scale()
    }

    /// `1e-10 · max φ_{j,m}²`.
    pub fn default_support_tol(&self) -> f64 {
        let max_sq = self.eigenvectors.iter().fold(0.0_f64, |acc, v| acc.max(v * v));
        1e-10 * max_sq
    }

    /// `Σ_j λ_j φ_j φ_jᵗ`.
    pub fn reconstruct_matrix(&self) -> DMatrix<f64> {
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * diag * self.eigenvectors.transpose()
    }
}

/// Dense symmetric eigendecomposition, sorted ascending, with the first
/// significant entry of every eigenvector made positive.
pub fn eigendecompose(h: &Hamiltonian) -> Result<EigenSystem> {
    let n = h.n();
    let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenSolverFailed)?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::EigenSolverFailed);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let sign = col
            .iter()
            .find(|v| v.abs() > SIGN_THRESHOLD)
            .map_or(1.0, |v| v.signum());
        eigenvectors.set_column(dst, &(col * sign));
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Outcome of the total-dissociation test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissociation {
    pub dissociated: bool,
    /// All eigenvalues pairwise separated by more than the tolerance.
    pub simple: bool,
    pub min_eigenvalue_gap: f64,
    /// Smallest gap between members of `{λ_j - λ_k}` over all ordered pairs
    /// (the `j = k` pairs contribute the zero frequency once).
    pub min_difference_gap: f64,
}

/// Total dissociation: `λ` distinct and `(j, k) ↦ λ_j - λ_k` injective on
/// ordered pairs `j ≠ k`, both with separation `> tol`.
///
/// The zero frequency is kept in the difference set, so a difference close
/// to zero also counts as a collision.
pub fn check_dissociated(eigenvalues: &[f64], tol: f64) -> Dissociation {
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min_eigenvalue_gap = min_consecutive_gap(&sorted);

    let n = sorted.len();
    let mut diffs = Vec::with_capacity(n * n.saturating_sub(1) + 1);
    diffs.push(0.0);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                diffs.push(sorted[j] - sorted[k]);
            }
        }
    }
    diffs.sort_by(f64::total_cmp);
    let min_difference_gap = min_consecutive_gap(&diffs);

    let simple = min_eigenvalue_gap > tol;
    Dissociation {
        dissociated: simple && min_difference_gap > tol,
        simple,
        min_eigenvalue_gap,
        min_difference_gap,
    }
}

fn min_consecutive_gap(sorted: &[f64]) -> f64 {
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// Graph on eigenbasis indices: `(j, k)` is an edge when some vertex `m`
/// has `|φ_{j,m} φ_{k,m}| > threshold`. The witness is the maximizing `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGraph {
    n: usize,
    threshold: f64,
    witness: Vec<Option<usize>>,
}

impl SupportGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        j != k && self.witness[j * self.n + k].is_some()
    }

    /// Vertex `m` maximizing `|φ_{j,m} φ_{k,m}|`, when the pair is an edge.
    pub fn witness(&self, j: usize, k: usize) -> Option<usize> {
        if j == k {
            None
        } else {
            self.witness[j * self.n + k]
        }
    }

    /// Edges `(j, k, m)` with `j < k`.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            for k in j + 1..self.n {
                if let Some(m) = self.witness(j, k) {
                    out.push((j, k, m));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn is_universal(&self, j: usize) -> bool {
        (0..self.n).all(|k| k == j || self.has_edge(j, k))
    }

    pub fn universal_vertices(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| self.is_universal(j)).collect()
    }

    /// Indices with no edge to `j` (excluding `j`).
    pub fn non_neighbors(&self, j: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&k| k != j && !self.has_edge(j, k))
            .collect()
    }
}

pub fn support_graph(es: &EigenSystem, threshold: f64) -> SupportGraph {
    let n = es.n();
    let mut witness = vec![None; n * n];
    for j in 0..n {
        for k in j + 1..n {
            let (best_m, best) = (0..n)
                .map(|m| (m, (es.phi(j, m) * es.phi(k, m)).abs()))
                .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best > threshold {
                witness[j * n + k] = Some(best_m);
                witness[k * n + j] = Some(best_m);
            }
        }
    }
    SupportGraph {
        n,
        threshold,
        witness,
    }
}

/// Property (S): the support graph is complete.
pub fn check_property_s(sg: &SupportGraph) -> bool {
    sg.edge_count() == sg.n * sg.n.saturating_sub(1) / 2
}

/// Aggregated verdict on both hypotheses for one Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub simple: bool,
    pub totally_dissociated: bool,
    pub min_eigenvalue_gap: f64,
    pub min_difference_gap: f64,
    pub property_s: bool,
    /// 0-based eigenbasis indices adjacent to every other index in the support graph.
    pub universal_vertices: Vec<usize>,
    pub eigenvalues: Vec<f64>,
}

/// Eigendecomposes `h` and runs both checks. `None` tolerances use the
/// system defaults.
pub fn spectrum_report(
    h: &Hamiltonian,
    tol_dissoc: Option<f64>,
    tol_support: Option<f64>,
) -> Result<(EigenSystem, SupportGraph, SpectrumReport)> {
    let es = eigendecompose(h)?;
    let tol_dissoc = validate_tol(tol_dissoc.unwrap_or_else(|| es.default_dissociation_tol()))?;
    let tol_support = validate_tol(tol_support.unwrap_or_else(|| es.default_support_tol()))?;
    let dis = check_dissociated(es.eigenvalues(), tol_dissoc);
    let sg = support_graph(&es, tol_support);
    let report = SpectrumReport {
        simple: dis.simple,
        totally_dissociated: dis.dissociated,
        min_eigenvalue_gap: dis.min_eigenvalue_gap,
        min_difference_gap: dis.min_difference_gap,
        property_s: check_property_s(&sg),
        universal_vertices: sg.universal_vertices(),
        eigenvalues: es.eigenvalues().to_vec(),
    };
    Ok((es, sg, report))
}

pub(crate) fn validate_tol(tol: f64) -> Result<f64> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_hamiltonian, Graph, Potential};
    use approx::assert_abs_diff_eq;

    fn ham(g: Graph) -> Hamiltonian {
        let n = g.n();
        build_hamiltonian(&g, &Potential::zeros(n)).unwrap()
    }

    /// Roots of the characteristic polynomial of a symmetric 3×3 matrix via
    /// the trigonometric form of the cubic.
    fn cubic_eigenvalues(m: &DMatrix<f64>) -> [f64; 3] {
        let tr = m.trace();
        let q = tr / 3.0;
        let shifted = m - DMatrix::identity(3, 3) * q;
        let p2 = (&shifted * &shifted).trace() / 6.0;
        let p = p2.sqrt();
        if p < 1e-300 {
            return [q, q, q];
        }
        let b = shifted / p;
        let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let mut roots = [
            q + 2.0 * p * phi.cos(),
            q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos(),
            q + 2.0 * p * (phi + 4.0 * std::f64::consts::PI / 3.0).cos(),
        ];
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn triangle_eigenvalues_match_characteristic_polynomial() {
        let h = ham(Graph::complete(3).unwrap());
        let oracle = cubic_eigenvalues(h.matrix());
        assert_abs_diff_eq!(oracle[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[1], 3.0, epsilon = 1e-7);
        assert_abs_diff_eq!(oracle[2], 3.0, epsilon = 1e-7);
        let es = eigendecompose(&h).unwrap();
        for (got, want) in es.eigenvalues().iter().zip([0.0, 3.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn path_eigensystem() {
        let h = ham(Graph::path(3).unwrap());
        let oracle = cubic_eigenvalues(h.matrix());
        let es = eigendecompose(&h).unwrap();
        for (got, want) in es.eigenvalues().iter().zip(oracle) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        for (got, want) in es.eigenvalues().iter().zip([0.0, 1.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let s3 = 3f64.sqrt();
        let s2 = 2f64.sqrt();
        let s6 = 6f64.sqrt();
        let expected = [
            [1.0 / s3, 1.0 / s3, 1.0 / s3],
            [1.0 / s2, 0.0, -1.0 / s2],
            [1.0 / s6, -2.0 / s6, 1.0 / s6],
        ];
        for (j, phi) in expected.iter().enumerate() {
            for (m, want) in phi.iter().enumerate() {
                assert_abs_diff_eq!(es.phi(j, m), *want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_vertex_system() {
        let g = Graph::empty(1).unwrap();
        let h = build_hamiltonian(&g, &Potential::new(vec![5.0]).unwrap()).unwrap();
        let es = eigendecompose(&h).unwrap();
        assert_eq!(es.eigenvalues(), &[5.0]);
        assert_eq!(es.phi(0, 0), 1.0);
        let sg = support_graph(&es, es.default_support_tol());
        assert_eq!(sg.edge_count(), 0);
        assert!(check_property_s(&sg));
    }

    #[test]
    fn dissociation_examples() {
        let d = check_dissociated(&[0.0, 1.0, 3.0], 1e-9);
        assert!(d.dissociated);
        assert_eq!(d.min_difference_gap, 1.0);
        assert_eq!(d.min_eigenvalue_gap, 1.0);

        let d = check_dissociated(&[0.0, 3.0, 3.0], 1e-9);
        assert!(!d.dissociated);
        assert!(!d.simple);

        let d = check_dissociated(&[0.0, 1.0, 2.0], 1e-9);
        assert!(d.simple);
        assert!(!d.dissociated);
        assert_eq!(d.min_difference_gap, 0.0);
    }

    #[test]
    fn dissociation_single_eigenvalue() {
        let d = check_dissociated(&[2.5], 1e-9);
        assert!(d.dissociated);
        assert!(d.min_eigenvalue_gap.is_infinite());
    }

    #[test]
    fn path_support_graph_is_complete_with_vertex_one_witness() {
        let es = eigendecompose(&ham(Graph::path(3).unwrap())).unwrap();
        let sg = support_graph(&es, es.default_support_tol());
        assert!(check_property_s(&sg));
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    let m = sg.witness(j, k).unwrap();
                    assert!((es.phi(j, m) * es.phi(k, m)).abs() > sg.threshold());
                    // vertex 1 (0-based 0) is nonzero in every eigenvector
                    assert!((es.phi(j, 0) * es.phi(k, 0)).abs() > sg.threshold());
                }
            }
        }
        assert_eq!(sg.universal_vertices(), vec![0, 1, 2]);
    }

    #[test]
    fn missing_edge_breaks_property_s() {
        // φ_1 = e_1 shares no vertex with the other two.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let basis = DMatrix::from_row_slice(3, 3, &[
            1.0, 0.0, 0.0,
            0.0, s, s,
            0.0, s, -s,
        ]);
        // columns: φ_1 = e_1, φ_2 = (0, s, s), φ_3 = (0, s, -s)
        let es = EigenSystem::from_parts(vec![0.0, 1.0, 3.0], basis).unwrap();
        let sg = support_graph(&es, 1e-12);
        assert!(!sg.has_edge(0, 1));
        assert!(!sg.has_edge(0, 2));
        assert!(!check_property_s(&sg));
        assert_eq!(sg.universal_vertices(), Vec::<usize>::new());
        assert!(sg.has_edge(1, 2));
    }

    #[test]
    fn two_vectors_sharing_a_vertex() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let es = EigenSystem::from_parts(
            vec![0.0, 2.0],
            DMatrix::from_row_slice(2, 2, &[s, s, s, -s]),
        )
        .unwrap();
        assert!(check_property_s(&support_graph(&es, 1e-12)));
    }

    #[test]
    fn report_examples() {
        let (_, _, p3) = spectrum_report(&ham(Graph::path(3).unwrap()), None, None).unwrap();
        assert!(p3.simple && p3.totally_dissociated && p3.property_s);

        let (_, _, k3) = spectrum_report(&ham(Graph::complete(3).unwrap()), None, None).unwrap();
        assert!(!k3.simple && !k3.totally_dissociated);

        let (es, _, e2) = spectrum_report(&ham(Graph::empty(2).unwrap()), None, None).unwrap();
        assert_eq!(es.eigenvalues(), &[0.0, 0.0]);
        assert!(!e2.simple);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let h = ham(Graph::path(3).unwrap());
        assert!(matches!(
            spectrum_report(&h, Some(0.0), None),
            Err(Error::InvalidTolerance(_))
        ));
    }

    #[test]
    fn kernel_vector_on_connected_graph() {
        let es = eigendecompose(&ham(Graph::cycle(7).unwrap())).unwrap();
        assert_abs_diff_eq!(es.eigenvalues()[0], 0.0, epsilon = 1e-10);
        let c = 1.0 / 7f64.sqrt();
        for m in 0..7 {
            assert_abs_diff_eq!(es.phi(0, m), c, epsilon = 1e-10);
        }
        let sg = support_graph(&es, es.default_support_tol());
        assert!(sg.is_universal(0));
    }
}
