//! Random-graph trials: how often `G(n, p)` with a random potential is
//! connected, has a simple and totally dissociated spectrum, satisfies
//! property (S), and survives a full simulate → retrieve round trip.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{norm, retrieval_grid, sample_intensity, to_coefficients, CoefficientVector};
use crate::graph::{build_hamiltonian, Graph, Potential};
use crate::retrieval::{phase_aligned_distance, retrieve, Tolerances};
use crate::spectral::spectrum_report;

/// Retrieval counts as successful below this relative phase-aligned error.
pub const SUCCESS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialLaw {
    Zero,
    /// Independent `scale · U[0, 1)` per vertex.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub p: f64,
    pub potential: PotentialLaw,
    pub scale: f64,
    pub trials: usize,
    pub seed: u64,
    /// Zero each eigen-coefficient of `u₀` with probability 1/2 (keeping at
    /// least one), so the pivot is not always the first mode.
    pub sparse: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_dissoc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_support: Option<f64>,
}

impl TrialConfig {
    pub fn new(n: usize, p: f64, trials: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            potential: PotentialLaw::Uniform,
            scale: 1.0,
            trials,
            seed,
            sparse: false,
            tol_dissoc: None,
            tol_support: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidProbability(self.p));
        }
        if self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if !self.scale.is_finite() {
            return Err(Error::NonFinite("potential scale"));
        }
        Ok(())
    }
}

/// One trial, replayable from `seed` with the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub edges: usize,
    pub connected: bool,
    pub simple: bool,
    pub dissociated: bool,
    /// Only set on connected instances.
    pub property_s: bool,
    pub attempted: bool,
    pub certified: bool,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pivot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub connected: usize,
    pub simple: usize,
    pub dissociated: usize,
    pub property_s: usize,
    pub attempted: usize,
    pub certified: usize,
    pub success: usize,
    /// Certified reconstructions whose error exceeded [`SUCCESS_TOL`].
    pub certified_wrong: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub connected: f64,
    pub simple: f64,
    pub dissociated: f64,
    pub property_s: f64,
    pub success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub config: TrialConfig,
    pub trials: usize,
    pub counts: Counts,
    /// Counts divided by the number of trials.
    pub rates: Rates,
    pub max_certified_error: f64,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

/// SplitMix64 step; gives each trial an independent, order-free seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Erdős–Rényi `G(n, p)` from a seeded generator.
pub fn sample_gnp(n: usize, p: f64, rng: &mut impl Rng) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let mut edges = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if rng.random::<f64>() < p {
                edges.push((x, y));
            }
        }
    }
    Graph::new(n, edges)
}

pub fn sample_gnp_seeded(n: usize, p: f64, seed: u64) -> Result<Graph> {
    sample_gnp(n, p, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_potential(n: usize, law: PotentialLaw, scale: f64, rng: &mut impl Rng) -> Potential {
    let values = match law {
        PotentialLaw::Zero => vec![0.0; n],
        PotentialLaw::Uniform => (0..n).map(|_| scale * rng.random::<f64>()).collect(),
    };
    Potential::new(values).expect("finite scale gives finite potential")
}

/// Complex standard normal vector of unit norm.
pub fn random_state(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let scale = norm(&v);
    v.into_iter().map(|z| z / scale).collect()
}

fn run_one(cfg: &TrialConfig, index: usize) -> TrialRecord {
    let seed = derive_seed(cfg.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = sample_gnp(cfg.n, cfg.p, &mut rng).expect("validated config");
    let potential = sample_potential(cfg.n, cfg.potential, cfg.scale, &mut rng);
    let connected = graph.is_connected();
    let mut record = TrialRecord {
        index,
        seed,
        edges: graph.edges().len(),
        connected,
        simple: false,
        dissociated: false,
        property_s: false,
        attempted: false,
        certified: false,
        success: false,
        relative_error: None,
        pivot: None,
        failure: None,
    };

    let h = build_hamiltonian(&graph, &potential).expect("sizes agree");
    let (es, _, report) = match spectrum_report(&h, cfg.tol_dissoc, cfg.tol_support) {
        Ok(out) => out,
        Err(e) => {
            record.failure = Some(e.to_string());
            return record;
        }
    };
    record.simple = report.simple;
    record.dissociated = report.totally_dissociated;
    record.property_s = connected && report.property_s;
    if !(connected && record.dissociated && record.property_s) {
        return record;
    }

    record.attempted = true;
    let mut u0 = random_state(cfg.n, &mut rng);
    if cfg.sparse {
        let a = to_coefficients(&u0, &es).expect("sizes agree");
        let keep = rng.random_range(0..cfg.n);
        let coeffs: Vec<Complex64> = a
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, z)| if j == keep || rng.random::<bool>() { *z } else { Complex64::new(0.0, 0.0) })
            .collect();
        let sparse = CoefficientVector::new(coeffs, &es).expect("sizes agree");
        let scale = sparse.norm();
        u0 = sparse.to_state().into_iter().map(|z| z / scale).collect();
    }

    let mut tol = Tolerances::for_system(&es);
    if let Some(t) = cfg.tol_dissoc {
        tol.dissociation = t;
    }
    if let Some(t) = cfg.tol_support {
        tol.support = t;
    }
    let a = to_coefficients(&u0, &es).expect("sizes agree");
    let times = retrieval_grid(&es, report.min_difference_gap);
    let outcome = sample_intensity(&a, &times).and_then(|trace| retrieve(&trace, &es, &tol));
    match outcome {
        Ok(res) => {
            let err = phase_aligned_distance(&res.u0, &u0).expect("sizes agree") / norm(&u0);
            record.certified = res.certified;
            record.relative_error = Some(err);
            record.pivot = res.pivot.map(|p| p + 1);
            record.success = err <= SUCCESS_TOL;
        }
        Err(e) => record.failure = Some(e.to_string()),
    }
    record
}

/// Runs all trials (in parallel) and aggregates them. Results depend only on
/// the configuration, not on scheduling.
pub fn run_trials(cfg: &TrialConfig) -> Result<TrialStats> {
    cfg.validate()?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_one(cfg, i))
        .collect();

    let mut counts = Counts::default();
    let mut max_certified_error = 0.0_f64;
    for r in &records {
        counts.connected += r.connected as usize;
        counts.simple += r.simple as usize;
        counts.dissociated += r.dissociated as usize;
        counts.property_s += r.property_s as usize;
        counts.attempted += r.attempted as usize;
        counts.certified += r.certified as usize;
        counts.success += r.success as usize;
        if r.certified {
            let err = r.relative_error.unwrap_or(f64::INFINITY);
            max_certified_error = max_certified_error.max(err);
            counts.certified_wrong += (err > SUCCESS_TOL) as usize;
        }
    }
    let total = cfg.trials as f64;
    let rates = Rates {
        connected: counts.connected as f64 / total,
        simple: counts.simple as f64 / total,
        dissociated: counts.dissociated as f64 / total,
        property_s: counts.property_s as f64 / total,
        success: counts.success as f64 / total,
    };
    Ok(TrialStats {
        config: cfg.clone(),
        trials: cfg.trials,
        counts,
        rates,
        max_certified_error,
        records,
    })
}
