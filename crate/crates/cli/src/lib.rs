//! The `lentil` command line.
//!
//! Exit codes: 0 for PASS reports, 2 for FAIL or uncertified reports, 1 for
//! errors. Inversion commands (`disentangle`, `observables`, `reconstruct`,
//! `window`) read only the cloud, its header and derived files.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use lentil_core::acceptance::{self, AcceptanceConfig};
use lentil_core::constants::{estimate_derived, EstimateSpec, FundamentalConstants, GeometryConstants};
use lentil_core::disentangle::{association_accuracy, dedupe_spatial, separate, Ambiguity, ArrivalFunction, Merge, PartialFunction, SeparateParams};
use lentil_core::geometry::{BoundaryGrid, ManifoldConfig, ManifoldModel};
use lentil_core::io::{self, read_cloud, read_json, read_truth, truth_path, write_cloud, write_json, write_truth};
use lentil_core::metricspace::{lgh_lower, sampled_lgh_vs_manifold, LabeledMetricSpace, SpaceFile};
use lentil_core::observables::{assemble, dd_rows, default_obs_tol, DiscreteSpace};
use lentil_core::par;
use lentil_core::reconstruct::checks::{lentil_geometry_checks, LentilCheckParams};
use lentil_core::reconstruct::reverse::{reverse_check, ReverseParams};
use lentil_core::reconstruct::window::{window_reconstruct, WindowParams};
use lentil_core::reconstruct::{reconstruct, sweep_epsilon1, Bound, ReconstructParams, ReconstructReport, Status};
use lentil_core::scene::{forward, sources_from_spec, ForwardOptions, SourceSpec, Window};

pub use config::Tolerances;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "lentil", version, about = "Reconstruct point sources from unlabeled boundary arrival times")]
pub struct Cli {
    /// Seed for every stochastic step (default 0; the suite's own seed for `selftest`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true, env = "LENTIL_THREADS")]
    threads: Option<usize>,
    /// Tolerance file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an arrival cloud and its ground-truth sidecar.
    Simulate(SimulateArgs),
    /// Separate a cloud into per-source arrival functions.
    Disentangle(DisentangleArgs),
    /// Recover pairwise distances and time differences.
    Observables(ObservablesArgs),
    /// Certify density and bound the reconstruction error.
    Reconstruct(ReconstructArgs),
    /// Reconstruct from growing observation windows.
    Window(WindowArgs),
    /// Estimate or validate geometry constants.
    Constants(ConstantsCmd),
    /// Compare results with ground truth.
    #[command(subcommand)]
    Evaluate(EvaluateCmd),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    manifold: PathBuf,
    /// Source specification (catalog, poisson or lattice).
    #[arg(long)]
    sources: PathBuf,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Keep arrivals up to this time; unbounded when absent.
    #[arg(long)]
    t_max: Option<f64>,
    /// Uniform noise amplitude on arrival times.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Cloud CSV; the header and sidecar are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DisentangleArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Plot data: one row per function and node.
    #[arg(long)]
    graphs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ObservablesArgs {
    /// Output of `disentangle`.
    #[arg(long)]
    functions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Distance-difference functions as CSV.
    #[arg(long)]
    dd: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ConstantsArgs {
    /// Constants file.
    #[arg(long, conflicts_with_all = ["estimate", "analytic"])]
    constants: Option<PathBuf>,
    /// Estimate the constants from the manifold model.
    #[arg(long, requires = "manifold")]
    estimate: bool,
    /// Closed-form constants of a constant-curvature disk.
    #[arg(long, requires = "manifold", conflicts_with = "estimate")]
    analytic: bool,
    #[arg(long)]
    manifold: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Output of `observables`.
    #[arg(long)]
    space: PathBuf,
    #[command(flatten)]
    constants: ConstantsArgs,
    #[arg(long, conflicts_with = "sweep_eps1", required_unless_present = "sweep_eps1")]
    eps1: Option<f64>,
    /// Scan a log grid of ε₁ and keep the best certified bound.
    #[arg(long)]
    sweep_eps1: bool,
    #[arg(long)]
    out: PathBuf,
    /// The labeled space `(P, α)` as a space file.
    #[arg(long)]
    labeled: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[command(flatten)]
    constants: ConstantsArgs,
    /// Ascending window ends; `inf` for all data.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Plot data: bound against T.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstantsCmd {
    #[command(flatten)]
    source: ConstantsArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum EvaluateCmd {
    /// Recovered distances and time differences against the sidecar.
    Distances {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        manifold: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Association accuracy of `disentangle` on a cloud.
    Association {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        manifold: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measured density of the true sources against a certified bound.
    Density {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        manifold: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certification of a lattice at the density required for `epsilon`.
    Reverse {
        #[command(flatten)]
        constants: ConstantsArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo checks of lentil geometry.
    Lentils {
        #[command(flatten)]
        constants: ConstantsArgs,
        #[arg(long, default_value_t = 500)]
        lentils: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Labeled GH bounds against a sampled snapshot of M or another space.
    Lgh {
        /// Space file with boundary-node labels.
        #[arg(long)]
        space: PathBuf,
        #[arg(long, required_unless_present = "against")]
        manifold: Option<PathBuf>,
        /// A second space file; bounds between the two spaces.
        #[arg(long, conflicts_with = "manifold")]
        against: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        /// Certified bound to test the sampled lower bound against.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Reduced sample counts (smoke run).
    #[arg(long)]
    quick: bool,
    /// Comma-separated criterion ids; all when absent.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
    /// Write the outcomes as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Output of `disentangle`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionsDoc {
    pub grid: BoundaryGrid,
    pub manifold_hash: String,
    pub seam: usize,
    pub functions: Vec<ArrivalFunction>,
    pub partial: Vec<PartialFunction>,
    pub ambiguities: Vec<Ambiguity>,
}

/// Output of `observables`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub manifold_hash: String,
    pub merges: Vec<Merge>,
    #[serde(flatten)]
    pub space: DiscreteSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct WindowEntry {
    t: f64,
    complete_graphs: usize,
    one_point: bool,
    lgh_bound: Bound,
    status: Status,
    report: Option<ReconstructReport>,
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    complete_graphs: usize,
    lgh_bound: String,
    status: Status,
}

fn verdict(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn status_code(s: Status) -> i32 {
    verdict(s == Status::Pass)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        // Only the first configuration in a process takes effect.
        let _ = par::configure_threads(t);
    }
    let tol = match &cli.config {
        Some(p) => Tolerances::load(p)?,
        None => Tolerances::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
    match cli.command {
        Command::Simulate(a) => simulate(a, &tol, &mut rng),
        Command::Disentangle(a) => disentangle(a, &tol),
        Command::Observables(a) => observables(a, &tol),
        Command::Reconstruct(a) => run_reconstruct(a, &tol),
        Command::Window(a) => window(a, &tol),
        Command::Constants(a) => {
            let c = load_constants(&a.source, &tol)?;
            write_json(&a.out, &c)?;
            println!("constants written (estimated: {})", c.estimated);
            Ok(EXIT_PASS)
        }
        Command::Evaluate(e) => evaluate(e, &tol, &mut rng),
        Command::Selftest(a) => selftest(a, cli.seed),
    }
}

fn load_model(path: &Path, tol: &Tolerances) -> Result<ManifoldModel> {
    let config: ManifoldConfig = read_json(path)?;
    let model = ManifoldModel::from_config(config).with_context(|| format!("{}", path.display()))?;
    Ok(match tol.tol_dist {
        Some(t) => model.with_tol_dist(t),
        None => model,
    })
}

/// Fundamental constants from a file; derived constants are recomputed.
fn load_constants(args: &ConstantsArgs, tol: &Tolerances) -> Result<GeometryConstants> {
    if let Some(path) = &args.constants {
        let value: serde_json::Value = read_json(path)?;
        let fundamental: FundamentalConstants = serde_json::from_value(value.clone()).with_context(|| format!("{}", path.display()))?;
        let mut c = GeometryConstants::derive(fundamental).with_context(|| format!("{}", path.display()))?;
        c.estimated = value.get("estimated").and_then(|v| v.as_bool()).unwrap_or(false);
        return Ok(c);
    }
    let manifold = args.manifold.as_deref().ok_or_else(|| anyhow!("one of --constants, --estimate or --analytic is required"))?;
    let model = load_model(manifold, tol)?;
    if args.analytic {
        return Ok(GeometryConstants::analytic(&model)?);
    }
    if args.estimate {
        let spec = EstimateSpec { safety: tol.safety, ..EstimateSpec::default() };
        return Ok(estimate_derived(&model, &spec)?);
    }
    bail!("one of --constants, --estimate or --analytic is required")
}

fn reconstruct_params(tol: &Tolerances) -> ReconstructParams {
    ReconstructParams {
        r_grid: tol.r_grid,
        stencil: tol.h_hess,
        sweep_points: tol.sweep_points,
    }
}

fn separate_params(tol: &Tolerances) -> SeparateParams {
    SeparateParams { jet_tol: tol.jet_tol, ..SeparateParams::default() }
}

fn simulate(a: SimulateArgs, tol: &Tolerances, rng: &mut ChaCha8Rng) -> Result<i32> {
    let model = load_model(&a.manifold, tol)?;
    let spec: SourceSpec = read_json(&a.sources)?;
    let sources = sources_from_spec(&model, &spec, rng).with_context(|| format!("{}", a.sources.display()))?;
    if a.grid < 4 {
        bail!("--grid must be at least 4");
    }
    let grid = BoundaryGrid::for_model(&model, a.grid);
    let window = match a.t_max {
        Some(t) => Window::up_to(t),
        None => Window::unbounded(),
    };
    let data = forward(&model, &sources, &grid, window, ForwardOptions { noise: a.noise }, rng)?;
    write_cloud(&a.out, &data.cloud)?;
    write_truth(&truth_path(&a.out), &sources)?;
    println!("{} sources, {} samples", sources.len(), data.cloud.samples.len());
    Ok(EXIT_PASS)
}

fn disentangle(a: DisentangleArgs, tol: &Tolerances) -> Result<i32> {
    let cloud = read_cloud(&a.cloud)?;
    let sep = separate(&cloud, &separate_params(tol))?;
    if let Some(path) = &a.graphs {
        let series: Vec<(usize, &[f64])> = sep.functions.iter().map(|f| (f.tag, f.values.as_slice())).collect();
        io::write_series(path, sep.grid.spacing(), &series)?;
    }
    let doc = FunctionsDoc {
        grid: sep.grid,
        manifold_hash: cloud.header.manifold_hash.clone(),
        seam: sep.seam,
        functions: sep.functions,
        partial: sep.partial,
        ambiguities: sep.ambiguities,
    };
    write_json(&a.out, &doc)?;
    println!(
        "{} complete functions, {} partial, {} ambiguities",
        doc.functions.len(),
        doc.partial.len(),
        doc.ambiguities.len()
    );
    Ok(EXIT_PASS)
}

fn observables(a: ObservablesArgs, tol: &Tolerances) -> Result<i32> {
    let doc: FunctionsDoc = read_json(&a.functions)?;
    let deduped = dedupe_spatial(&doc.functions, tol.const_tol);
    let obs_tol = tol.obs_tol.unwrap_or_else(|| default_obs_tol(&doc.grid));
    let space = assemble(&doc.grid, &deduped.functions, obs_tol)?;
    if let Some(path) = &a.dd {
        io::write_dd(path, &dd_rows(&space))?;
    }
    println!("{} points, {} merged", space.len(), deduped.merges.len());
    write_json(
        &a.out,
        &SpaceDoc {
            manifold_hash: doc.manifold_hash,
            merges: deduped.merges,
            space,
        },
    )?;
    Ok(EXIT_PASS)
}

fn run_reconstruct(a: ReconstructArgs, tol: &Tolerances) -> Result<i32> {
    let doc: SpaceDoc = read_json(&a.space)?;
    let constants = load_constants(&a.constants, tol)?;
    let params = reconstruct_params(tol);
    let rec = match a.eps1 {
        Some(eps1) => reconstruct(&doc.space, &constants, eps1, &params)?,
        None => sweep_epsilon1(&doc.space, &constants, &params)?,
    };
    write_json(&a.out, &rec.report)?;
    if let Some(path) = &a.labeled {
        let alpha = rec.alpha.clone().ok_or_else(|| anyhow!("E is infinite, so α is undefined and --labeled cannot be written"))?;
        let space = LabeledMetricSpace::new(doc.space.dist.clone(), alpha)?;
        write_json(path, &SpaceFile::from_space(&space))?;
    }
    println!(
        "status {} epsilon1 {} E {} epsilon_bound {} lgh_bound {}",
        rec.report.status, rec.report.epsilon1, rec.report.e, rec.report.epsilon_bound, rec.report.lgh_bound
    );
    Ok(status_code(rec.report.status))
}

fn window(a: WindowArgs, tol: &Tolerances) -> Result<i32> {
    let cloud = read_cloud(&a.cloud)?;
    let constants = load_constants(&a.constants, tol)?;
    let params = WindowParams {
        separate: separate_params(tol),
        reconstruct: reconstruct_params(tol),
        obs_tol: tol.obs_tol,
        const_tol: tol.const_tol,
    };
    let results = window_reconstruct(&cloud, &a.t, &constants, &params)?;
    let entries: Vec<WindowEntry> = results
        .into_iter()
        .map(|w| WindowEntry {
            t: w.t,
            complete_graphs: w.complete_graphs,
            one_point: w.is_one_point(),
            lgh_bound: w.lgh_bound,
            status: w.report.as_ref().map_or(Status::NotCertified, |r| r.status),
            report: w.report,
        })
        .collect();
    write_json(&a.out, &entries)?;
    if let Some(path) = &a.curve {
        let rows: Vec<CurveRow> = entries
            .iter()
            .map(|e| CurveRow {
                t: e.t,
                complete_graphs: e.complete_graphs,
                lgh_bound: e.lgh_bound.to_string(),
                status: e.status,
            })
            .collect();
        io::write_csv(path, &rows)?;
    }
    for e in &entries {
        println!(
            "T={} graphs={} {}lgh_bound={} status={}",
            e.t,
            e.complete_graphs,
            if e.one_point { "one-point " } else { "" },
            e.lgh_bound,
            e.status
        );
    }
    Ok(entries.last().map_or(EXIT_FAIL, |e| status_code(e.status)))
}

#[derive(Serialize)]
struct DistanceEvaluation {
    points: usize,
    max_distance_error: f64,
    distance_tolerance: f64,
    max_time_error: f64,
    time_tolerance: f64,
    status: Status,
}

#[derive(Serialize)]
struct DensityEvaluation {
    epsilon_bound: Bound,
    report_status: Status,
    measured_density: f64,
    status: Status,
}

#[derive(Serialize)]
struct LghEvaluation {
    lower: f64,
    upper: f64,
    exact: bool,
    slack: f64,
    bound: Option<f64>,
    status: Status,
}

fn evaluate(cmd: EvaluateCmd, tol: &Tolerances, rng: &mut ChaCha8Rng) -> Result<i32> {
    match cmd {
        EvaluateCmd::Distances { space, truth, manifold, out } => {
            let doc: SpaceDoc = read_json(&space)?;
            let sources = read_truth(&truth)?;
            let model = load_model(&manifold, tol)?;
            let s = &doc.space;
            let matched = acceptance::match_truth(&model, &s.grid, &s.functions, &sources).map_err(|e| anyhow!(e))?;
            let (mut dist_err, mut time_err) = (0.0f64, 0.0f64);
            for i in 0..s.len() {
                for j in 0..s.len() {
                    let (a, b) = (&sources[matched[i]], &sources[matched[j]]);
                    dist_err = dist_err.max((s.dist[i][j] - model.distance(a.position, b.position)?).abs());
                    time_err = time_err.max((s.time_diffs[i][j] - (a.time - b.time)).abs());
                }
            }
            let dist_tol = 2.0 * s.grid.spacing() + 3.0 * model.tol_dist();
            let pass = dist_err <= dist_tol && time_err <= s.obs_tol;
            let e = DistanceEvaluation {
                points: s.len(),
                max_distance_error: dist_err,
                distance_tolerance: dist_tol,
                max_time_error: time_err,
                time_tolerance: s.obs_tol,
                status: if pass { Status::Pass } else { Status::Fail },
            };
            write_json(&out, &e)?;
            println!("max distance error {dist_err:.3e}, max time error {time_err:.3e}: {}", e.status);
            Ok(verdict(pass))
        }
        EvaluateCmd::Association { cloud, truth, manifold, out } => {
            let cloud = read_cloud(&cloud)?;
            let sources = read_truth(&truth)?;
            let model = load_model(&manifold, tol)?;
            let labels = acceptance::sample_labels(&model, &cloud, &sources).map_err(|e| anyhow!(e))?;
            let sep = separate(&cloud, &separate_params(tol))?;
            let r = association_accuracy(&sep, &cloud, &labels);
            write_json(&out, &r)?;
            println!("accuracy {:.6}, {} of {} sources recovered", r.accuracy, r.recovered, r.true_sources);
            Ok(verdict(r.accuracy == 1.0))
        }
        EvaluateCmd::Density { report, truth, manifold, samples, out } => {
            let report: ReconstructReport = read_json(&report)?;
            let sources = read_truth(&truth)?;
            let model = load_model(&manifold, tol)?;
            let points: Vec<_> = sources.iter().map(|s| s.position).collect();
            let measured = acceptance::true_density(&model, &points, samples, rng).map_err(|e| anyhow!(e))?;
            let status = match (report.status, report.epsilon_bound) {
                (Status::Pass, Bound::Finite(eps)) if measured > eps => Status::Fail,
                (Status::Pass, Bound::Finite(_)) => Status::Pass,
                _ => Status::NotApplicable,
            };
            let e = DensityEvaluation { epsilon_bound: report.epsilon_bound, report_status: report.status, measured_density: measured, status };
            write_json(&out, &e)?;
            println!("measured density {measured:.4e}, certified {}: {status}", report.epsilon_bound);
            Ok(verdict(status != Status::Fail))
        }
        EvaluateCmd::Reverse { constants, epsilon, out } => {
            let model = load_model(constants.manifold.as_deref().ok_or_else(|| anyhow!("--manifold is required"))?, tol)?;
            let c = load_constants(&constants, tol)?;
            let r = reverse_check(&model, &c, epsilon, &ReverseParams::default(), rng)?;
            write_json(&out, &r)?;
            println!("hat_epsilon {:.4e}, certified epsilon {}, lentils {}/{} failed: {}", r.hat_epsilon, r.certified_epsilon, r.lentils_failed, r.lentils_tested, r.status);
            Ok(status_code(r.status))
        }
        EvaluateCmd::Lentils { constants, lentils, out } => {
            let model = load_model(constants.manifold.as_deref().ok_or_else(|| anyhow!("--manifold is required"))?, tol)?;
            let c = load_constants(&constants, tol)?;
            let params = LentilCheckParams { lentils, ..LentilCheckParams::default() };
            let r = lentil_geometry_checks(&model, &c, &params, rng)?;
            write_json(&out, &r)?;
            println!("{} lentils: {}", r.lentils, r.status);
            Ok(status_code(r.status))
        }
        EvaluateCmd::Lgh { space, manifold, against, samples, bound, out } => {
            let x = read_json::<SpaceFile>(&space)?.to_space().with_context(|| format!("{}", space.display()))?;
            let e = if let Some(other) = against {
                let y = read_json::<SpaceFile>(&other)?.to_space().with_context(|| format!("{}", other.display()))?;
                let b = lgh_lower(&x, &y)?;
                LghEvaluation { lower: b.lower, upper: b.upper, exact: b.exact, slack: 0.0, bound, status: Status::NotApplicable }
            } else {
                let model = load_model(manifold.as_deref().expect("required by clap"), tol)?;
                let grid = BoundaryGrid::for_model(&model, x.labels.len());
                let s = sampled_lgh_vs_manifold(&x, &model, &grid, samples, rng)?;
                LghEvaluation { lower: s.lower, upper: s.upper, exact: false, slack: s.slack, bound, status: Status::NotApplicable }
            };
            let status = match bound {
                Some(b) if e.lower - e.slack > b => Status::Fail,
                Some(_) => Status::Pass,
                None => Status::NotApplicable,
            };
            let e = LghEvaluation { status, ..e };
            write_json(&out, &e)?;
            println!("lower {:.4e}, upper {:.4e}, slack {:.4e}: {}", e.lower, e.upper, e.slack, e.status);
            Ok(verdict(status != Status::Fail))
        }
    }
}

fn selftest(a: SelftestArgs, seed: Option<u64>) -> Result<i32> {
    let cfg = AcceptanceConfig {
        quick: a.quick,
        seed: seed.unwrap_or(AcceptanceConfig::default().seed),
        ..AcceptanceConfig::default()
    };
    let ids: Vec<u8> = if a.criteria.is_empty() { (1..=10).collect() } else { a.criteria };
    let mut outcomes = Vec::new();
    for id in ids {
        if !(1..=10).contains(&id) {
            bail!("--criteria: no criterion {id} (valid ids are 1..=10)");
        }
        let o = acceptance::run_criterion(id, &cfg);
        println!("{o}");
        outcomes.push(o);
    }
    if let Some(path) = &a.out {
        write_json(path, &outcomes)?;
    }
    Ok(verdict(outcomes.iter().all(|o| o.pass)))
}
