use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphase::counterexamples::{
    complete_graph_pair, disconnected_phase_family, gapped_support_instance,
    incomplete_support_counterexample, max_modulus_deviation, max_trace_deviation,
    orthogonalize_pair, EqualModulusPair,
};
use graphase::experiments::{run_trials, PotentialLaw, TrialConfig};
use graphase::io::{
    parse_graph, parse_state, read_trace_csv, state_pairs, write_trace_csv, RetrievalJson,
    SpectrumReportJson,
};
use graphase::{
    check_dissociated, eigendecompose, phase_aligned_distance, retrieval_grid,
    retrieve, sample_intensity, spectrum_report, to_coefficients, Complex64, EigenSystem,
    GraphFile, Hamiltonian, Tolerances,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type BoxError = Box<dyn std::error::Error>;

#[derive(Debug, Parser)]
#[command(
    name = "graphase",
    version,
    about = "Schrödinger evolution on finite graphs and phase retrieval from vertex intensities",
    after_help = "Exit codes: 0 success or certified, 1 input or numerical error, \
                  2 hypothesis check failed, 3 uncertified retrieval.\n\
                  GRAPHASE_THREADS caps internal parallelism (0 = automatic)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve an initial state and write the intensity trace |u(t,x)|² as CSV.
    Simulate(SimulateArgs),
    /// Report whether the spectrum is totally dissociated and property (S) holds.
    Check(CheckArgs),
    /// Reconstruct the initial state from an intensity trace.
    Retrieve(RetrieveArgs),
    /// Construct pairs of distinct states with identical intensity traces.
    Counterexample(CounterexampleArgs),
    /// Run seeded random-graph trials and report rates as JSON.
    Trials(TrialsArgs),
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// Minimum eigenvalue and frequency separation [default: 1e-9 · max(1, max|λ|)].
    #[arg(long)]
    pub tol_dissoc: Option<f64>,
    /// Co-support threshold for |φ_j(m) φ_k(m)| [default: 1e-10 · max φ²].
    #[arg(long)]
    pub tol_support: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Graph JSON: {"n": .., "edges": [[x,y],..], "potential": [..]} (1-based vertices).
    #[arg(long)]
    pub graph: PathBuf,
    /// Initial state JSON: [[re, im], ...], one pair per vertex.
    #[arg(long)]
    pub state: PathBuf,
    /// First sample time (with --t1 and --steps).
    #[arg(long, requires_all = ["t1", "steps"], conflicts_with_all = ["times", "retrieval_grid"])]
    pub t0: Option<f64>,
    /// Last sample time.
    #[arg(long, requires = "t0")]
    pub t1: Option<f64>,
    /// Number of equal steps from t0 to t1; writes steps + 1 rows.
    #[arg(long, requires = "t0")]
    pub steps: Option<usize>,
    /// Explicit comma-separated sample times.
    #[arg(long, value_delimiter = ',', conflicts_with = "retrieval_grid")]
    pub times: Option<Vec<f64>>,
    /// Use the sampling grid that `retrieve` needs to resolve every frequency.
    #[arg(long)]
    pub retrieval_grid: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Graph JSON with 1-based edges and optional potential.
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub tol: ToleranceArgs,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Graph JSON with 1-based edges and optional potential.
    #[arg(long)]
    pub graph: PathBuf,
    /// Intensity CSV in the format written by `simulate`.
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    /// Relative amplitude below which a mode counts as absent.
    #[arg(long)]
    pub amplitude_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[command(subcommand)]
    pub mode: CounterexampleMode,
    /// Random times used to verify equal moduli.
    #[arg(long, global = true, default_value_t = 100)]
    pub samples: usize,
    /// Seed for the verification times.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum CounterexampleMode {
    /// Orthogonalize an equal-modulus pair (defaults to f=(1,1,1), g=(1,1,-1)).
    Lemma {
        /// State JSON for f.
        #[arg(long, requires = "g")]
        f: Option<PathBuf>,
        /// State JSON for g, with |g| = |f| entrywise.
        #[arg(long, requires = "f")]
        g: Option<PathBuf>,
    },
    /// Two orthogonal unimodular eigenvectors of -Δ on K_n.
    CompleteGraph {
        /// Number of vertices (at least 3).
        #[arg(long)]
        n: usize,
    },
    /// Sign-flip pair for a graph whose support graph is incomplete
    /// (defaults to a built-in connected 6-vertex instance).
    SupportGap {
        /// Graph JSON to use instead of the built-in instance.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Per-component phase change on a disconnected graph.
    Disconnected {
        /// Graph JSON with more than one connected component.
        #[arg(long)]
        graph: PathBuf,
        /// Initial state JSON.
        #[arg(long)]
        state: PathBuf,
        /// JSON array of [re, im] unit phases, one per connected component.
        #[arg(long)]
        phases: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PotentialArg {
    Zero,
    Uniform,
}

#[derive(Debug, Args)]
pub struct TrialsArgs {
    /// Vertices per graph.
    #[arg(long)]
    pub n: usize,
    /// Edge probability of G(n, p).
    #[arg(long)]
    pub p: f64,
    /// Number of independent trials.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Master seed; trial i uses a seed derived from (seed, i).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Potential law: zero, or i.i.d. uniform on [0, scale].
    #[arg(long, value_enum, default_value_t = PotentialArg::Uniform)]
    pub potential: PotentialArg,
    /// Multiplier for the uniform potential.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Zero random eigen-coefficients of the test state.
    #[arg(long)]
    pub sparse: bool,
    /// Write one JSON line per trial here.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[command(flatten)]
    pub tol: ToleranceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    HypothesisFailed,
    Uncertified,
}

pub fn dispatch(cli: Cli) -> Result<Outcome, BoxError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Check(args) => check(args),
        Command::Retrieve(args) => retrieve_cmd(args),
        Command::Counterexample(args) => counterexample(args),
        Command::Trials(args) => trials(args),
    }
}

fn read(path: &Path) -> Result<String, BoxError> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()).into())
}

fn with_path<T>(path: &Path, r: graphase::Result<T>) -> Result<T, BoxError> {
    r.map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_graph(path: &Path) -> Result<GraphFile, BoxError> {
    with_path(path, parse_graph(&read(path)?))
}

fn load_hamiltonian(path: &Path) -> Result<Hamiltonian, BoxError> {
    with_path(path, load_graph(path)?.hamiltonian())
}

fn load_state(path: &Path) -> Result<Vec<Complex64>, BoxError> {
    with_path(path, parse_state(&read(path)?))
}

fn print_json(value: &impl serde::Serialize) -> Result<(), BoxError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn tolerances(es: &EigenSystem, tol: &ToleranceArgs) -> Tolerances {
    let mut t = Tolerances::for_system(es);
    if let Some(x) = tol.tol_dissoc {
        t.dissociation = x;
    }
    if let Some(x) = tol.tol_support {
        t.support = x;
    }
    t
}

fn simulate(args: SimulateArgs) -> Result<Outcome, BoxError> {
    let h = load_hamiltonian(&args.graph)?;
    let u0 = load_state(&args.state)?;
    if u0.len() != h.n() {
        return Err(format!(
            "dimension mismatch: state has {} entries but the graph has {} vertices",
            u0.len(),
            h.n()
        )
        .into());
    }
    let es = eigendecompose(&h)?;
    let times = if let Some(times) = args.times {
        times
    } else if args.retrieval_grid {
        let gap = check_dissociated(es.eigenvalues(), es.default_dissociation_tol()).min_difference_gap;
        retrieval_grid(&es, gap)
    } else if let (Some(t0), Some(t1), Some(steps)) = (args.t0, args.t1, args.steps) {
        if steps == 0 {
            vec![t0]
        } else {
            (0..=steps)
                .map(|s| t0 + (t1 - t0) * s as f64 / steps as f64)
                .collect()
        }
    } else {
        return Err("specify sample times with --t0/--t1/--steps, --times or --retrieval-grid".into());
    };
    let a = to_coefficients(&u0, &es)?;
    let trace = sample_intensity(&a, &times)?;
    match args.out {
        Some(path) => {
            let file = fs::File::create(&path)
                .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
            write_trace_csv(&trace, std::io::BufWriter::new(file))?;
        }
        None => write_trace_csv(&trace, std::io::stdout().lock())?,
    }
    Ok(Outcome::Success)
}

fn check(args: CheckArgs) -> Result<Outcome, BoxError> {
    let h = load_hamiltonian(&args.graph)?;
    let (_, _, report) = spectrum_report(&h, args.tol.tol_dissoc, args.tol.tol_support)?;
    print_json(&SpectrumReportJson::from(&report))?;
    Ok(if report.totally_dissociated && report.property_s {
        Outcome::Success
    } else {
        Outcome::HypothesisFailed
    })
}

fn retrieve_cmd(args: RetrieveArgs) -> Result<Outcome, BoxError> {
    let h = load_hamiltonian(&args.graph)?;
    let file = fs::File::open(&args.trace)
        .map_err(|e| format!("cannot read {}: {e}", args.trace.display()))?;
    let trace = with_path(&args.trace, read_trace_csv(std::io::BufReader::new(file), Some(h.n())))?;
    let es = eigendecompose(&h)?;
    let mut tol = tolerances(&es, &args.tol);
    if let Some(a) = args.amplitude_tol {
        tol.amplitude = a;
    }
    let result = retrieve(&trace, &es, &tol)?;
    print_json(&RetrievalJson::from(&result))?;
    Ok(if result.certified {
        Outcome::Success
    } else {
        Outcome::Uncertified
    })
}

fn verification_times(es: &EigenSystem, samples: usize, seed: u64) -> Vec<f64> {
    let horizon = 20.0 * std::f64::consts::PI / es.spectral_scale().clamp(1e-6, 1e6) + 20.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(|_| rng.random::<f64>() * horizon).collect()
}

fn counterexample(args: CounterexampleArgs) -> Result<Outcome, BoxError> {
    let samples = args.samples;
    let seed = args.seed;
    let output = match args.mode {
        CounterexampleMode::Lemma { f, g } => {
            let (f, g) = match (f, g) {
                (Some(f), Some(g)) => (load_state(&f)?, load_state(&g)?),
                _ => {
                    let r = |v: [f64; 3]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
                    (r([1.0, 1.0, 1.0]), r([1.0, 1.0, -1.0]))
                }
            };
            let input = EqualModulusPair::new(f, g)?;
            let out = orthogonalize_pair(&input)?;
            let ip = out.pair.inner_product();
            json!({
                "mode": "lemma",
                "f": state_pairs(&out.pair.f),
                "g": state_pairs(&out.pair.g),
                "lambda": out.lambda,
                "phase": [out.phase.re, out.phase.im],
                "verification": {
                    "inner_product_abs": ip.norm(),
                    "max_modulus_deviation": max_modulus_deviation(&out.pair.f, &out.pair.g),
                    "phase_aligned_distance": phase_aligned_distance(&out.pair.f, &out.pair.g)?,
                },
            })
        }
        CounterexampleMode::CompleteGraph { n } => {
            let pair = complete_graph_pair(n)?;
            let es = eigendecompose(&pair.hamiltonian)?;
            let times = verification_times(&es, samples, seed);
            json!({
                "mode": "complete-graph",
                "n": n,
                "f": state_pairs(&pair.pair.f),
                "g": state_pairs(&pair.pair.g),
                "verification": {
                    "eigen_residual": pair.eigen_residual,
                    "inner_product_abs": pair.pair.inner_product().norm(),
                    "times_sampled": times.len(),
                    "max_modulus_deviation": max_trace_deviation(&es, &pair.pair.f, &pair.pair.g, &times)?,
                    "phase_aligned_distance": phase_aligned_distance(&pair.pair.f, &pair.pair.g)?,
                },
            })
        }
        CounterexampleMode::SupportGap { graph, tol } => {
            let file = match graph {
                Some(path) => load_graph(&path)?,
                None => {
                    let (g, w) = gapped_support_instance();
                    GraphFile::from_parts(&g, &w)
                }
            };
            let h = file.clone().hamiltonian()?;
            let es = eigendecompose(&h)?;
            let t = tolerances(&es, &tol);
            let sg = graphase::support_graph(&es, t.support);
            let pair = incomplete_support_counterexample(&es, &sg)?;
            let times = verification_times(&es, samples, seed);
            json!({
                "mode": "support-gap",
                "graph": file,
                "anchor": pair.anchor + 1,
                "flipped": pair.flipped.iter().map(|j| j + 1).collect::<Vec<_>>(),
                "u0": state_pairs(&pair.u0),
                "v0": state_pairs(&pair.v0),
                "verification": {
                    "times_sampled": times.len(),
                    "max_modulus_deviation": max_trace_deviation(&es, &pair.u0, &pair.v0, &times)?,
                    "phase_aligned_distance": phase_aligned_distance(&pair.u0, &pair.v0)?,
                },
            })
        }
        CounterexampleMode::Disconnected { graph, state, phases } => {
            let h = load_hamiltonian(&graph)?;
            let u0 = load_state(&state)?;
            let phases = parse_state(&phases).map_err(|e| format!("--phases: {e}"))?;
            let uc = disconnected_phase_family(&h, &u0, &phases)?;
            let es = eigendecompose(&h)?;
            let times = verification_times(&es, samples, seed);
            json!({
                "mode": "disconnected",
                "u0": state_pairs(&u0),
                "uc": state_pairs(&uc),
                "verification": {
                    "times_sampled": times.len(),
                    "max_modulus_deviation": max_trace_deviation(&es, &u0, &uc, &times)?,
                    "phase_aligned_distance": phase_aligned_distance(&u0, &uc)?,
                },
            })
        }
    };
    print_json(&output)?;
    Ok(Outcome::Success)
}

fn trials(args: TrialsArgs) -> Result<Outcome, BoxError> {
    let cfg = TrialConfig {
        n: args.n,
        p: args.p,
        potential: match args.potential {
            PotentialArg::Zero => PotentialLaw::Zero,
            PotentialArg::Uniform => PotentialLaw::Uniform,
        },
        scale: args.scale,
        trials: args.trials,
        seed: args.seed,
        sparse: args.sparse,
        tol_dissoc: args.tol.tol_dissoc,
        tol_support: args.tol.tol_support,
    };
    let stats = run_trials(&cfg)?;
    if let Some(path) = args.records {
        let file = fs::File::create(&path)
            .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        for r in &stats.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    print_json(&stats)?;
    Ok(Outcome::Success)
}
