use std::f64::consts::TAU;

use graphase::counterexamples::{
    gapped_support_instance, incomplete_support_counterexample, max_modulus_deviation,
    orthogonalize_pair, EqualModulusPair,
};
use graphase::experiments::{run_trials, TrialConfig};
use graphase::{
    build_hamiltonian, check_dissociated, eigendecompose, evolve, evolve_direct,
    phase_aligned_distance, recover_cross_terms, retrieval_grid, retrieve, sample_intensity,
    spectrum_report, support_graph, to_coefficients, CoefficientVector, Complex64, Graph,
    Hamiltonian, Potential, Tolerances,
};
use proptest::prelude::*;

fn graph_strategy(n_max: usize) -> impl Strategy<Value = Hamiltonian> {
    (1..=n_max).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            proptest::collection::vec(any::<bool>(), pairs),
            proptest::collection::vec(0.0..1.0f64, n),
        )
            .prop_map(move |(mask, w)| {
                let mut edges = Vec::new();
                let mut i = 0;
                for x in 0..n {
                    for y in x + 1..n {
                        if mask[i] {
                            edges.push((x, y));
                        }
                        i += 1;
                    }
                }
                let g = Graph::new(n, edges).unwrap();
                build_hamiltonian(&g, &Potential::new(w).unwrap()).unwrap()
            })
    })
}

fn state_strategy(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn with_state(n_max: usize) -> impl Strategy<Value = (Hamiltonian, Vec<Complex64>)> {
    graph_strategy(n_max).prop_flat_map(|h| {
        let n = h.n();
        (Just(h), state_strategy(n))
    })
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn diff(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn hamiltonian_is_symmetric_and_follows_edges(h in graph_strategy(12)) {
        let m = h.matrix();
        let n = h.n();
        for x in 0..n {
            prop_assert_eq!(m[(x, x)], h.graph().degree(x) as f64 + h.potential().values()[x]);
            for y in 0..n {
                prop_assert_eq!(m[(x, y)], m[(y, x)]);
                if x != y {
                    let want = if h.graph().has_edge(x, y) { -1.0 } else { 0.0 };
                    prop_assert_eq!(m[(x, y)], want);
                }
            }
        }
    }

    #[test]
    fn constants_lie_in_the_laplacian_kernel(h in graph_strategy(12)) {
        let lap = build_hamiltonian(h.graph(), &Potential::zeros(h.n())).unwrap();
        for x in 0..h.n() {
            let row: f64 = lap.matrix().row(x).iter().sum();
            prop_assert!(row.abs() < 1e-12);
        }
    }

    #[test]
    fn components_partition_the_vertices(h in graph_strategy(12)) {
        let comps = h.graph().connected_components();
        let mut seen = vec![false; h.n()];
        for c in &comps {
            for &x in c {
                prop_assert!(!seen[x]);
                seen[x] = true;
                for &y in h.graph().neighbors(x) {
                    prop_assert!(c.contains(&y));
                }
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        prop_assert_eq!(comps.len() == 1, h.graph().is_connected());
    }

    #[test]
    fn eigensystem_invariants(h in graph_strategy(16)) {
        let es = eigendecompose(&h).unwrap();
        let m = h.matrix();
        let hnorm = m.norm().max(1.0);
        let v = es.eigenvectors();
        let lam = es.eigenvalues();
        for w in lam.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for j in 0..h.n() {
            let col = v.column(j);
            let r = (m * col - col * lam[j]).norm();
            prop_assert!(r <= 1e-10 * (1.0 + lam[j].abs()) * hnorm);
        }
        let gram = v.transpose() * v;
        let eye = nalgebra_identity(h.n());
        prop_assert!((gram - eye).amax() <= 1e-12);
        prop_assert!((es.reconstruct_matrix() - m).amax() <= 1e-9 * hnorm);
    }

    #[test]
    fn dissociation_is_monotone_in_tolerance(h in graph_strategy(10), a in 1e-12..1e-2f64, b in 1e-12..1e-2f64) {
        let es = eigendecompose(&h).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if check_dissociated(es.eigenvalues(), hi).dissociated {
            prop_assert!(check_dissociated(es.eigenvalues(), lo).dissociated);
        }
    }

    #[test]
    fn evolution_is_unitary_and_matches_the_exponential((h, u0) in with_state(20), t in -20.0..20.0f64, s in -5.0..5.0f64) {
        let es = eigendecompose(&h).unwrap();
        let a = to_coefficients(&u0, &es).unwrap();
        let ut = evolve(&a, t);
        prop_assert!((norm(&ut) - norm(&u0)).abs() <= 1e-12 * (1.0 + norm(&u0)));
        let direct = evolve_direct(&h, &u0, t).unwrap();
        prop_assert!(diff(&ut, &direct) <= 1e-9 * norm(&u0).max(1e-300));
        // u(t + s) = U(s) u(t)
        let b = to_coefficients(&ut, &es).unwrap();
        let composed = evolve(&b, s);
        let joint = evolve(&a, t + s);
        prop_assert!(diff(&composed, &joint) <= 1e-10 * (1.0 + norm(&u0)));
    }

    #[test]
    fn traces_ignore_global_phase((h, u0) in with_state(10), theta in 0.0..TAU) {
        let es = eigendecompose(&h).unwrap();
        let rot = Complex64::from_polar(1.0, theta);
        let v0: Vec<Complex64> = u0.iter().map(|z| z * rot).collect();
        let times: Vec<f64> = (0..25).map(|k| 0.37 * k as f64).collect();
        let a = sample_intensity(&to_coefficients(&u0, &es).unwrap(), &times).unwrap();
        let b = sample_intensity(&to_coefficients(&v0, &es).unwrap(), &times).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12);
    }

    #[test]
    fn orthogonalized_pairs_keep_moduli(
        (mods, ph_f, ph_g) in (2usize..30).prop_flat_map(|n| (
            proptest::collection::vec(0.1..2.0f64, n),
            proptest::collection::vec(0.0..TAU, n),
            proptest::collection::vec(0.0..TAU, n),
        ))
    ) {
        let f: Vec<Complex64> = mods.iter().zip(&ph_f).map(|(&r, &p)| Complex64::from_polar(r, p)).collect();
        let g: Vec<Complex64> = mods.iter().zip(&ph_g).map(|(&r, &p)| Complex64::from_polar(r, p)).collect();
        let Ok(pair) = EqualModulusPair::new(f, g) else { return Ok(()); };
        let out = orthogonalize_pair(&pair).unwrap();
        let scale: f64 = mods.iter().map(|r| r * r).sum();
        prop_assert!(out.pair.inner_product().norm() <= 1e-10 * scale);
        prop_assert!(max_modulus_deviation(&out.pair.f, &out.pair.g) <= 1e-10);
        if let Some(l) = out.lambda {
            prop_assert!(l > 0.0 && l < 1.0);
        }
    }
}

fn nalgebra_identity(n: usize) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::identity(n, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn retrieval_round_trips_on_admissible_instances(
        h in graph_strategy(9),
        mods in proptest::collection::vec(0.05..1.0f64, 9),
        phases in proptest::collection::vec(0.0..TAU, 9),
    ) {
        let n = h.n();
        let (es, _, report) = spectrum_report(&h, None, None).unwrap();
        if n < 2 || !h.graph().is_connected() || !report.totally_dissociated || !report.property_s {
            return Ok(());
        }
        let coeffs: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(mods[j], phases[j])).collect();
        let a = CoefficientVector::new(coeffs, &es).unwrap();
        let u0 = a.to_state();
        let times = retrieval_grid(&es, report.min_difference_gap);
        let trace = sample_intensity(&a, &times).unwrap();
        let r = retrieve(&trace, &es, &Tolerances::for_system(&es)).unwrap();
        prop_assert!(r.certified);
        prop_assert!(phase_aligned_distance(&r.u0, &u0).unwrap() <= 1e-7 * norm(&u0));
    }

    #[test]
    fn recovered_tensor_ignores_global_phase(
        h in graph_strategy(8),
        theta in 0.0..TAU,
        seed in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8),
    ) {
        let n = h.n();
        let es = eigendecompose(&h).unwrap();
        let d = check_dissociated(es.eigenvalues(), es.default_dissociation_tol());
        if n < 2 || !d.dissociated {
            return Ok(());
        }
        let u0: Vec<Complex64> = seed[..n].iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let rot = Complex64::from_polar(1.0, theta);
        let v0: Vec<Complex64> = u0.iter().map(|z| z * rot).collect();
        let times = retrieval_grid(&es, d.min_difference_gap);
        let tol = Tolerances::for_system(&es);
        let ta = sample_intensity(&to_coefficients(&u0, &es).unwrap(), &times).unwrap();
        let tb = sample_intensity(&to_coefficients(&v0, &es).unwrap(), &times).unwrap();
        let (Ok(ca), Ok(cb)) = (recover_cross_terms(&ta, &es, &tol), recover_cross_terms(&tb, &es, &tol)) else {
            return Ok(());
        };
        prop_assert!(ca.max_abs_diff(&cb) <= 1e-10);
    }
}

#[test]
fn refusal_is_sound_across_many_trials() {
    // Sparse graphs and sparse states exercise every refusal path.
    let mut total = 0;
    for (i, p) in [0.25, 0.45, 0.7].into_iter().enumerate() {
        let mut cfg = TrialConfig::new(6, p, 400, 91 + i as u64);
        cfg.sparse = true;
        let stats = run_trials(&cfg).unwrap();
        assert_eq!(stats.counts.certified_wrong, 0, "p = {p}");
        total += stats.trials;
    }
    assert!(total >= 1000);
}

#[test]
fn sign_flip_pair_has_identical_tensors_and_is_refused() {
    let (g, w) = gapped_support_instance();
    let h = build_hamiltonian(&g, &w).unwrap();
    let es = eigendecompose(&h).unwrap();
    let tol = Tolerances::for_system(&es);
    let sg = support_graph(&es, tol.support);
    let pair = incomplete_support_counterexample(&es, &sg).unwrap();
    let d = check_dissociated(es.eigenvalues(), tol.dissociation);
    let times = retrieval_grid(&es, d.min_difference_gap);
    let ta = sample_intensity(&to_coefficients(&pair.u0, &es).unwrap(), &times).unwrap();
    let tb = sample_intensity(&to_coefficients(&pair.v0, &es).unwrap(), &times).unwrap();
    assert!(ta.max_abs_diff(&tb) <= 1e-12);
    let ca = recover_cross_terms(&ta, &es, &tol).unwrap();
    let cb = recover_cross_terms(&tb, &es, &tol).unwrap();
    assert!(ca.max_abs_diff(&cb) <= 1e-10);
    assert!(!retrieve(&ta, &es, &tol).unwrap().certified);
    assert!(!retrieve(&tb, &es, &tol).unwrap().certified);
}

#[test]
fn disconnected_states_are_never_certified() {
    let g = Graph::new(5, [(0, 1), (2, 3), (3, 4)]).unwrap();
    let h = build_hamiltonian(&g, &Potential::new(vec![0.1, 0.7, 0.2, 0.55, 0.9]).unwrap()).unwrap();
    let es = eigendecompose(&h).unwrap();
    let tol = Tolerances::for_system(&es);
    let d = check_dissociated(es.eigenvalues(), tol.dissociation);
    assert!(d.dissociated);
    let u0: Vec<Complex64> = [(1.0, 0.2), (0.4, -0.3), (0.8, 0.1), (-0.2, 0.5), (0.3, 0.3)]
        .iter()
        .map(|&(re, im)| Complex64::new(re, im))
        .collect();
    let times = retrieval_grid(&es, d.min_difference_gap);
    let trace = sample_intensity(&to_coefficients(&u0, &es).unwrap(), &times).unwrap();
    assert!(!retrieve(&trace, &es, &tol).unwrap().certified);
}
