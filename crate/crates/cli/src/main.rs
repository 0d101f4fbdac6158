use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use matmean::convexity::{
    midpoint_convexity_test, monotonicity_check, region_csv, region_probe, semiclassical_monotonicity_check, ChannelFamily,
    ConvexityConfig, Mode, CVX_TOL,
};
use matmean::divergence::{
    divergence_from_mean, maximal_divergence, measured_divergence_lb, petz, regularized_measured_estimate, sandwiched,
    MeasurementStrategy,
};
use matmean::equality::{commutation_defect, norm_equality_probe, taylor_check, z4_gap, z4_gap_closed_form};
use matmean::majorization::{eigen_order_le, log_majorize, weak_log_majorize, DET_TOL, MAJ_TOL};
use matmean::means::{default_eps_sequence, epsilon_limit};
use matmean::relations::{
    builtin_catalog, find_claim, region_scan, render_table34, table34_layout, verify_claim, ClaimReport, Side, Verdict, VerifyConfig,
};
use matmean::sample::{derive_rng, label_stream, random_hermitian, sample_psd};
use matmean::spectral::MatrixJson;
use matmean::suite::{run_suite, ReportFormat, SuiteConfig};
use matmean::{compute_mean, MeanKind, MeanSpec, Psd};

#[derive(Parser)]
#[command(name = "matmean", version, about = "Quasi-geometric matrix means: evaluation, majorization checks and verification suite")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Base seed of every random stream.
    #[arg(long, global = true, env = "MATMEAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Trial count (each command has its own default).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Largest matrix dimension for random pairs.
    #[arg(long, global = true, default_value_t = 5)]
    nmax: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// R, G, SG, SGt, LE, Arith or Harm.
    #[arg(long)]
    kind: MeanKind,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

impl SpecArgs {
    fn spec(&self) -> Result<MeanSpec> {
        Ok(MeanSpec::new(self.kind, self.alpha, self.p)?)
    }
}

#[derive(Args, Clone)]
struct PairArgs {
    /// Matrix file for A (JSON exchange format); random if omitted.
    #[arg(long = "A", alias = "a")]
    a: Option<PathBuf>,
    /// Matrix file for B.
    #[arg(long = "B", alias = "b")]
    b: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelationArg {
    Weak,
    Log,
    Eigen,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Concave,
    Convex,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Concave => Mode::Concavity,
            ModeArg::Convex => Mode::Convexity,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate M_{α,p}(A, B).
    Mean {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        pair: PairArgs,
        /// Evaluate as the limit of M(A + εI, B + εI).
        #[arg(long)]
        eps_limit: bool,
    },
    /// Compare the eigenvalues of X and Y.
    Majorize {
        #[arg(long = "X", alias = "x")]
        x: PathBuf,
        #[arg(long = "Y", alias = "y")]
        y: PathBuf,
        #[arg(long, value_enum, default_value_t = RelationArg::Log)]
        relation: RelationArg,
        #[arg(long, default_value_t = MAJ_TOL)]
        tol: f64,
    },
    /// Verify catalog claims (all of them when no ID is given).
    Check {
        ids: Vec<String>,
        /// List the catalog instead of verifying.
        #[arg(long)]
        list: bool,
    },
    /// Empirical region of `lhs ≺_log rhs` over an (α, p/q) grid.
    Scan {
        /// Left side as KIND:p, KIND:q or LE.
        #[arg(long)]
        lhs: String,
        #[arg(long)]
        rhs: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.15, 0.25, 0.35, 0.45, 0.55, 0.7, 0.85])]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.08, 0.15, 0.25, 0.35, 0.5, 0.65, 0.8, 0.92, 1.1])]
        ratios: Vec<f64>,
    },
    /// Reproduce the LE comparison table.
    Table34,
    /// Taylor coefficients of t ↦ Tr G_α(e^{tH}, e^{tK}) against finite differences.
    Taylor {
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        /// Hermitian H file; random 3×3 if omitted.
        #[arg(long = "H", alias = "h")]
        h: Option<PathBuf>,
        #[arg(long = "K", alias = "k")]
        k: Option<PathBuf>,
    },
    /// Norm gap between two means related by log-majorization.
    Eqprobe {
        /// KIND:alpha:p
        #[arg(long)]
        lhs: String,
        #[arg(long)]
        rhs: String,
        #[arg(long, default_value_t = 2.0)]
        schatten: f64,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// D^M(B‖A) alongside the Petz, sandwiched and maximal divergences.
    Divergence {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Measured divergence lower bound.
    Measured {
        #[arg(long)]
        alpha: f64,
        /// pinching, grid:DIRECTIONS or povm:OUTCOMES:TRIALS
        #[arg(long, default_value = "pinching")]
        strategy: String,
        /// Also report regularized pinching estimates up to this tensor power.
        #[arg(long)]
        regularized: Option<usize>,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Midpoint test of joint concavity/convexity of Tr M_{α,p}.
    Convexity {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Monotonicity of the divergence under a channel family.
    Monotone {
        #[command(flatten)]
        spec: SpecArgs,
        /// cptp, qc, cq, pinch or transpose
        #[arg(long, default_value = "cptp")]
        family: ChannelFamily,
        /// Check the semi-classical trace condition against the observed behaviour.
        #[arg(long)]
        semiclassical: bool,
    },
    /// Convexity region map of one mean kind.
    Regionprobe {
        #[arg(long)]
        kind: MeanKind,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.3, 0.5, 0.7, 1.3, 1.6, 2.0])]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 4.0])]
        ps: Vec<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run the full verification suite.
    Suite {
        /// Restrict the catalog to these claim IDs.
        #[arg(long, value_delimiter = ',')]
        claims: Vec<String>,
        /// Tolerance override, NAME=VALUE (repeatable).
        #[arg(long = "tol")]
        tolerances: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.context("writing to stdout"),
            }
        }
    }
}

fn emit_json<T: Serialize>(g: &Global, value: &T) -> Result<()> {
    emit(g, &serde_json::to_string_pretty(value)?)
}

fn emit_rows<T: Serialize>(g: &Global, rows: &[T]) -> Result<()> {
    match g.format {
        Format::Json => emit_json(g, &rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            emit(g, String::from_utf8(w.into_inner()?)?.trim_end())
        }
    }
}

fn read_matrix(path: &Path) -> Result<MatrixJson> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_psd(path: &Path) -> Result<Psd> {
    Ok(read_matrix(path)?.to_psd()?)
}

/// Both matrices from files, or a random full-rank pair of dimension `nmax`.
fn load_pair(g: &Global, pair: &PairArgs) -> Result<(Psd, Psd)> {
    match (&pair.a, &pair.b) {
        (Some(a), Some(b)) => Ok((read_psd(a)?, read_psd(b)?)),
        (None, None) => {
            let mut rng = derive_rng(g.seed, label_stream("cli-pair"), 0);
            Ok((sample_psd(g.nmax, Some(10.0), &mut rng)?, sample_psd(g.nmax, Some(10.0), &mut rng)?))
        }
        _ => bail!("give both --A and --B, or neither"),
    }
}

fn parse_side(s: &str) -> Result<Side> {
    if s.eq_ignore_ascii_case("le") {
        return Ok(Side::le());
    }
    let (kind, exp) = s.split_once(':').with_context(|| format!("expected KIND:p or KIND:q, got '{s}'"))?;
    let kind: MeanKind = kind.parse()?;
    match exp {
        "p" => Ok(Side::p(kind)),
        "q" => Ok(Side::q(kind)),
        _ => bail!("exponent must be p or q, got '{exp}'"),
    }
}

fn parse_spec(s: &str) -> Result<MeanSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let (kind, alpha, p) = match parts.as_slice() {
        [k, a] => (k, a, "1"),
        [k, a, p] => (k, a, *p),
        _ => bail!("expected KIND:alpha[:p], got '{s}'"),
    };
    Ok(MeanSpec::new(kind.parse()?, alpha.parse()?, p.parse()?)?)
}

fn parse_strategy(s: &str) -> Result<MeasurementStrategy> {
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["pinching"] => MeasurementStrategy::PinchingBasis,
        ["grid", d] => MeasurementStrategy::ProjectiveGrid { directions: d.parse()? },
        ["povm", k, t] => MeasurementStrategy::RandomPovm { outcomes: k.parse()?, trials: t.parse()? },
        _ => bail!("unknown strategy '{s}'"),
    })
}

fn verify_config(g: &Global) -> VerifyConfig {
    VerifyConfig { trials: g.trials.unwrap_or(500), n_max: g.nmax, seed: g.seed, ..VerifyConfig::default() }
}

#[derive(Serialize)]
struct MeanOutput {
    spec: String,
    value: MatrixJson,
    eigenvalues: Vec<f64>,
    trace: f64,
    domain_ok: bool,
    regularization_used: Option<Vec<f64>>,
    log_det_defect: Option<f64>,
}

#[derive(Serialize)]
struct DivergenceOutput {
    spec: String,
    mean_divergence: Option<f64>,
    petz: Option<f64>,
    sandwiched: Option<f64>,
    maximal: Option<f64>,
}

#[derive(Serialize)]
struct TaylorOutput {
    alpha: f64,
    check: matmean::equality::TaylorCheck,
    z4_gap: f64,
    z4_gap_closed_form: f64,
    commutator_norm: f64,
}

fn finite(v: matmean::divergence::DivergenceValue) -> Option<f64> {
    v.is_finite().then_some(v.value)
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Mean { spec, pair, eps_limit } => {
            let spec = spec.spec()?;
            let (a, b) = load_pair(g, &pair)?;
            let r = if eps_limit { epsilon_limit(&spec, &a, &b, &default_eps_sequence())?.result } else { compute_mean(&spec, &a, &b)? };
            emit_json(
                g,
                &MeanOutput {
                    spec: spec.label(),
                    value: MatrixJson::from_matrix(r.value.matrix()),
                    eigenvalues: r.value.eigenvalues().to_vec(),
                    trace: r.value.trace(),
                    domain_ok: r.domain_ok,
                    regularization_used: r.regularization_used,
                    log_det_defect: r.log_det_defect,
                },
            )?;
        }
        Command::Majorize { x, y, relation, tol } => {
            let (x, y) = (read_psd(&x)?, read_psd(&y)?);
            let v = match relation {
                RelationArg::Weak => weak_log_majorize(&x, &y, tol)?,
                RelationArg::Log => log_majorize(&x, &y, tol, DET_TOL)?,
                RelationArg::Eigen => eigen_order_le(&x, &y, tol)?,
            };
            emit_json(g, &v)?;
            return Ok(v.holds);
        }
        Command::Check { ids, list } => {
            let catalog = builtin_catalog();
            if list {
                let rows: Vec<_> = catalog.iter().map(|c| (c.id.to_string(), c.statement())).collect();
                emit_json(g, &rows)?;
                return Ok(true);
            }
            let claims = if ids.is_empty() {
                catalog
            } else {
                ids.iter().map(|id| find_claim(id).with_context(|| format!("unknown claim '{id}'"))).collect::<Result<_>>()?
            };
            let cfg = verify_config(g);
            let reports: Vec<ClaimReport> = claims.iter().map(|c| verify_claim(c, &cfg)).collect();
            emit_json(g, &reports)?;
            return Ok(reports.iter().all(|r| r.verdict != Verdict::Refuted));
        }
        Command::Scan { lhs, rhs, alphas, ratios } => {
            let rows = region_scan(parse_side(&lhs)?, parse_side(&rhs)?, &alphas, &ratios, g.trials.unwrap_or(100), g.seed)?;
            emit_rows(g, &rows)?;
        }
        Command::Table34 => {
            let ids: Vec<&str> = table34_layout().iter().flat_map(|r| r.below_one.claims.iter().chain(&r.above_one.claims).copied()).collect();
            let cfg = verify_config(g);
            let reports: Vec<ClaimReport> =
                ids.iter().map(|id| find_claim(id).with_context(|| format!("missing claim '{id}'")).map(|c| verify_claim(&c, &cfg))).collect::<Result<_>>()?;
            emit(g, &render_table34(&reports)?)?;
            return Ok(reports.iter().all(|r| r.verdict != Verdict::Refuted));
        }
        Command::Taylor { alpha, h, k } => {
            let (h, k) = match (h, k) {
                (Some(h), Some(k)) => (read_matrix(&h)?.to_hermitian()?, read_matrix(&k)?.to_hermitian()?),
                (None, None) => {
                    let mut rng = derive_rng(g.seed, label_stream("cli-taylor"), 0);
                    let h = random_hermitian(3, &mut rng);
                    let k = random_hermitian(3, &mut rng);
                    (h.scale(0.5 / h.max_abs()), k.scale(0.5 / k.max_abs()))
                }
                _ => bail!("give both --H and --K, or neither"),
            };
            emit_json(
                g,
                &TaylorOutput {
                    alpha,
                    check: taylor_check(&h, &k, alpha)?,
                    z4_gap: z4_gap(&h, &k, alpha)?,
                    z4_gap_closed_form: z4_gap_closed_form(&h, &k, alpha)?,
                    commutator_norm: commutation_defect(&h, &k)?,
                },
            )?;
        }
        Command::Eqprobe { lhs, rhs, schatten, pair } => {
            let (a, b) = load_pair(g, &pair)?;
            emit_json(g, &norm_equality_probe(&parse_spec(&lhs)?, &parse_spec(&rhs)?, &a, &b, schatten)?)?;
        }
        Command::Divergence { spec, pair } => {
            let spec = spec.spec()?;
            let (a, b) = load_pair(g, &pair)?;
            let alpha = spec.alpha;
            emit_json(
                g,
                &DivergenceOutput {
                    spec: spec.label(),
                    mean_divergence: finite(divergence_from_mean(&spec, &a, &b)?),
                    petz: finite(petz(&a, &b, alpha)?),
                    sandwiched: finite(sandwiched(&a, &b, alpha)?),
                    maximal: finite(maximal_divergence(&a, &b, alpha)?.value),
                },
            )?;
        }
        Command::Measured { alpha, strategy, regularized, pair } => {
            let (a, b) = load_pair(g, &pair)?;
            let mut rng = derive_rng(g.seed, label_stream("cli-measured"), 0);
            let lb = measured_divergence_lb(&a, &b, alpha, parse_strategy(&strategy)?, &mut rng)?;
            let estimates = match regularized {
                Some(m) => (1..=m).map(|k| regularized_measured_estimate(&a, &b, alpha, k)).collect::<Result<Vec<_>, _>>()?,
                None => Vec::new(),
            };
            emit_json(g, &serde_json::json!({ "lower_bound": lb, "regularized": estimates }))?;
        }
        Command::Convexity { spec, mode } => {
            let spec = spec.spec()?;
            let mode = mode.map_or(Mode::natural(spec.alpha), Mode::from);
            let cfg = ConvexityConfig { trials: g.trials.unwrap_or(2000), seed: g.seed, tol: CVX_TOL };
            emit_json(g, &midpoint_convexity_test(&spec, mode, &cfg)?)?;
        }
        Command::Monotone { spec, family, semiclassical } => {
            let spec = spec.spec()?;
            let trials = g.trials.unwrap_or(500);
            if semiclassical {
                let r = semiclassical_monotonicity_check(&spec, family, trials, g.seed, 1e-8)?;
                emit_json(g, &r)?;
                return Ok(r.consistent);
            }
            emit_json(g, &monotonicity_check(&spec, family, trials, g.seed, 1e-8)?)?;
        }
        Command::Regionprobe { kind, alphas, ps, mode } => {
            let cfg = ConvexityConfig { trials: g.trials.unwrap_or(2000), seed: g.seed, tol: CVX_TOL };
            let cells = region_probe(kind, mode.map(Mode::from), &alphas, &ps, &cfg)?;
            match g.format {
                Format::Json => emit_json(g, &cells)?,
                Format::Csv => emit(g, region_csv(&cells).trim_end())?,
            }
        }
        Command::Suite { claims, tolerances } => {
            let mut config = SuiteConfig {
                seed: g.seed,
                trials: g.trials.unwrap_or(500),
                n_max: g.nmax,
                claims,
                output: g.out.as_ref().map(|p| p.display().to_string()),
                format: match g.format {
                    Format::Json => ReportFormat::Json,
                    Format::Csv => ReportFormat::Csv,
                },
                ..SuiteConfig::default()
            };
            for t in tolerances {
                let (k, v) = t.split_once('=').with_context(|| format!("expected NAME=VALUE, got '{t}'"))?;
                config.tolerances.insert(k.to_string(), v.parse().with_context(|| format!("tolerance '{k}'"))?);
            }
            let started = std::time::Instant::now();
            let report = run_suite(&config)?;
            match g.format {
                Format::Json => emit(g, &report.to_json()?)?,
                Format::Csv => emit(g, report.to_csv().trim_end())?,
            }
            let s = &report.summary;
            eprintln!(
                "claims: {} confirmed, {} refuted, {} inconclusive; invariants: {} passed, {} failed, {} precision-limited; {:.1} s",
                s.claims_confirmed,
                s.claims_refuted,
                s.claims_inconclusive,
                s.invariants_passed,
                s.invariants_failed,
                s.invariants_precision_limited,
                started.elapsed().as_secs_f64()
            );
            return Ok(report.passed());
        }
    }
    Ok(true)
}
