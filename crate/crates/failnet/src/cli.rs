//! Command-line front end.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use failnet_core::failing::FailureProbabilities;
use failnet_core::fair_sampling::{is_fair_sampling, postselect_transform};
use failnet_core::finner::{finner_check_with_tol, g_oracle, rigidity_verify, SATURATION_TOL};
use failnet_core::rgb4::{failing_rgb4, scaled_randomness_bound};
use failnet_core::spdc::{linspace, Objective, OptimizationResult, OptimizeConfig, PumpMode, SPDCParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::emit::{self, num, RunConfig};
use crate::error::{exit, CliError, Result};
use crate::model_io::{self, Loaded, ModelFile};
use crate::parallel;

/// Overrides the default saturation tolerance.
pub const TOL_ENV: &str = "FAILNET_TOL";
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "failnet", version, about = "Networks with failing sources: simulation, certification and SPDC optimization")]
pub struct Cli {
    /// Seed for every randomized step; recorded in all outputs.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Per-source failure probabilities, overriding the file's.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub fail: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the network structure; exits 3 when it is invalid.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Joint output distribution, with failing sources when given.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Finner inequality report for the model's distribution.
    FinnerCheck {
        #[command(flatten)]
        model: ModelArgs,
        /// Saturation tolerance [default: $FAILNET_TOL or 1e-9].
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Structural verdict for a quantum model that saturates the Finner inequality.
    Rigidity {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        tol: Option<f64>,
        /// Also evaluate the local-variable identities and inequality chain.
        #[arg(long)]
        g_oracle: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Replace fair-sampling measurements by filtered sources and failure-free POVMs.
    Postselect {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Multi-start optimization of the photonic CHSH test.
    SpdcOptimize {
        /// standard_chsh, standard_randomness, ps_chsh or ps_randomness.
        #[arg(long, value_parser = parse_objective)]
        objective: Objective,
        /// equal, free or fixed:T.
        #[arg(long, value_parser = parse_pump, default_value = "equal")]
        pump: PumpMode,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        /// Restrict the rotations to real ones.
        #[arg(long)]
        real_rotations: bool,
        /// Include every restart's record in the output.
        #[arg(long)]
        records: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimal standard and post-selected CHSH over a grid of T1 = T2 (CSV).
    SpdcScan {
        #[arg(long, default_value_t = 0.05)]
        t_min: f64,
        #[arg(long, default_value_t = 0.95)]
        t_max: f64,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long)]
        real_rotations: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Randomness bound for RGB4 with failing sources; CSV over θ with --sweep.
    Rgb4Bound {
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        fail_alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        fail_beta: f64,
        #[arg(long, default_value_t = 0.0)]
        fail_gamma: f64,
        /// Number of θ points in [0, π/4].
        #[arg(long)]
        sweep: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Both optimization tables, the pump scan and a summary, written to a directory.
    ReproduceTables {
        #[arg(long, default_value = "tables")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long, default_value_t = 60)]
        scan_steps: usize,
        #[arg(long, default_value_t = 20)]
        scan_restarts: usize,
    },
}

fn parse_objective(s: &str) -> std::result::Result<Objective, String> {
    Objective::parse(s).ok_or_else(|| format!("unknown objective {s:?}"))
}

fn parse_pump(s: &str) -> std::result::Result<PumpMode, String> {
    match s {
        "equal" => Ok(PumpMode::Equal),
        "free" => Ok(PumpMode::Free),
        _ => {
            let t = s.strip_prefix("fixed:").ok_or_else(|| format!("unknown pump mode {s:?}"))?;
            let t: f64 = t.parse().map_err(|e| format!("{t:?}: {e}"))?;
            if !(0.0..1.0).contains(&t) {
                return Err(format!("fixed pump {t} outside [0, 1)"));
            }
            Ok(PumpMode::Fixed(t))
        }
    }
}

fn pump_name(p: PumpMode) -> String {
    match p {
        PumpMode::Equal => "equal".into(),
        PumpMode::Free => "free".into(),
        PumpMode::Fixed(t) => format!("fixed:{t}"),
    }
}

/// `--tol`, else `$FAILNET_TOL`, else the library default.
pub fn tolerance(arg: Option<f64>) -> Result<f64> {
    let tol = match arg {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{TOL_ENV}={v:?} is not a number")))?,
            Err(_) => SATURATION_TOL,
        },
    };
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!("tolerance {tol} must be finite and nonnegative")));
    }
    Ok(tol)
}

/// Parses the arguments and runs the command; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match run(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("failnet: {e}");
            e.exit_code()
        }
    }
}

struct Input {
    file: ModelFile,
    bytes: Vec<u8>,
}

impl Input {
    fn read(args: &ModelArgs) -> Result<Self> {
        let (mut file, bytes) = model_io::load(&args.model)?;
        if let Some(e) = &args.fail {
            file.failures = Some(e.clone());
        }
        Ok(Self { file, bytes })
    }

    fn config(&self, command: &str, seed: u64) -> RunConfig {
        RunConfig::new(command, seed).input("model", &self.bytes).option("failures", &self.file.failures)
    }

    /// Builds the model and rejects invalid networks.
    fn build(&self) -> Result<Loaded> {
        let loaded = self.file.build()?;
        require_valid(&loaded.graph.validate())?;
        if let Some(e) = &loaded.failures {
            if e.len() != loaded.graph.n_sources() {
                return Err(CliError::Usage(format!(
                    "{} failure probabilities for {} sources",
                    e.len(),
                    loaded.graph.n_sources()
                )));
            }
        }
        Ok(loaded)
    }
}

fn require_valid(report: &failnet_core::ValidationReport) -> Result<()> {
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{:?}", report.violations)))
    }
}

fn emit_json<T: Serialize>(cfg: &RunConfig, out: &OutArgs, result: &T) -> Result<()> {
    emit::write_out(out.out.as_deref(), &emit::json_bytes(&cfg.header(), result)?)
}

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Validate { model, out } => {
            let (file, bytes) = model_io::load(model)?;
            let cfg = RunConfig::new("validate", seed).input("model", &bytes);
            let graph = file.graph.build()?;
            let report = graph.validate();
            let result = json!({
                "valid": report.is_valid(),
                "violations": report.violations,
                "bipartite_sources": report.bipartite_sources,
            });
            emit_json(&cfg, out, &result)?;
            require_valid(&report)
        }
        Command::Simulate { model, out } => {
            let input = Input::read(model)?;
            let loaded = input.build()?;
            let dist = loaded.distribution()?;
            let cfg = input.config("simulate", seed);
            emit_json(&cfg, out, &ModelFile::from_distribution(&loaded.graph, &dist))
        }
        Command::FinnerCheck { model, tol, out } => {
            let input = Input::read(model)?;
            let tol = tolerance(*tol)?;
            let loaded = input.build()?;
            let report = finner_check_with_tol(&loaded.distribution()?, &loaded.graph, tol)?;
            emit_json(&input.config("finner-check", seed).option("tol", tol), out, &report)
        }
        Command::Rigidity { model, tol, g_oracle: with_g, out } => {
            let input = Input::read(model)?;
            let tol = tolerance(*tol)?;
            let quantum = input.build()?.quantum()?;
            let verdict = rigidity_verify(&quantum, tol)?;
            let g = if *with_g { Some(g_oracle(&quantum, None)?) } else { None };
            let cfg = input.config("rigidity", seed).option("tol", tol).option("g_oracle", with_g);
            emit_json(&cfg, out, &json!({ "verdict": verdict, "g_oracle": g }))
        }
        Command::Postselect { model, out } => postselect(&Input::read(model)?, seed, out),
        Command::SpdcOptimize { objective, pump, restarts, real_rotations, records, out } => {
            let mut opt = OptimizeConfig::new(*objective, *pump, seed, *restarts);
            if *real_rotations {
                opt = opt.real_rotations();
            }
            let result = parallel::optimize(&opt)?;
            let cfg = RunConfig::new("spdc-optimize", seed)
                .option("objective", objective.name())
                .option("pump", pump_name(*pump))
                .option("restarts", restarts)
                .option("real_rotations", real_rotations)
                .option("records", records);
            let mut value = serde_json::to_value(&result).map_err(|e| CliError::Usage(e.to_string()))?;
            if !records {
                if let Value::Object(m) = &mut value {
                    m.remove("restarts");
                }
            }
            emit_json(&cfg, out, &value)
        }
        Command::SpdcScan { t_min, t_max, steps, restarts, real_rotations, out } => {
            if !(0.0 <= *t_min && t_min <= t_max && *t_max < 1.0) {
                return Err(CliError::Usage(format!("need 0 ≤ t-min ≤ t-max < 1, got {t_min}, {t_max}")));
            }
            let cfg = RunConfig::new("spdc-scan", seed)
                .option("t_min", t_min)
                .option("t_max", t_max)
                .option("steps", steps)
                .option("restarts", restarts)
                .option("real_rotations", real_rotations);
            let bytes = scan_csv(&cfg, *t_min, *t_max, *steps, *restarts, !real_rotations)?;
            emit::write_out(out.out.as_deref(), &bytes)
        }
        Command::Rgb4Bound { theta, fail_alpha, fail_beta, fail_gamma, sweep, out } => {
            let cfg = RunConfig::new("rgb4-bound", seed)
                .option("theta", theta)
                .option("fail_alpha", fail_alpha)
                .option("fail_beta", fail_beta)
                .option("fail_gamma", fail_gamma)
                .option("sweep", sweep);
            let e = FailureProbabilities::new(vec![*fail_alpha, *fail_beta, *fail_gamma])?;
            match sweep {
                Some(n) => {
                    let mut rows = Vec::new();
                    for theta in linspace(0.0, FRAC_PI_4, *n) {
                        let r = scaled_randomness_bound(theta, *fail_beta, *fail_gamma)?;
                        let (_, finner) = failing_rgb4(theta, &e)?;
                        rows.push(vec![
                            num(theta),
                            num(r.r_lower),
                            num(r.l),
                            num(r.scaled),
                            num(r.naive(*fail_alpha)),
                            finner.saturated.to_string(),
                        ]);
                    }
                    let columns = ["theta", "r_lower", "l", "scaled", "naive", "saturated"];
                    emit::write_out(out.out.as_deref(), &emit::csv_bytes(&cfg.header(), &columns, &rows)?)
                }
                None => {
                    let report = scaled_randomness_bound(*theta, *fail_beta, *fail_gamma)?;
                    let (_, finner) = failing_rgb4(*theta, &e)?;
                    let naive = report.naive(*fail_alpha);
                    emit_json(&cfg, out, &json!({ "bound": report, "naive": naive, "finner": finner }))
                }
            }
        }
        Command::ReproduceTables { out_dir, restarts, scan_steps, scan_restarts } => {
            let cfg = RunConfig::new("reproduce-tables", seed)
                .option("restarts", restarts)
                .option("scan_steps", scan_steps)
                .option("scan_restarts", scan_restarts);
            reproduce_tables(&cfg, out_dir, *restarts, *scan_steps, *scan_restarts)
        }
    }
}

fn postselect(input: &Input, seed: u64, out: &OutArgs) -> Result<()> {
    let cfg = input.config("postselect", seed);
    let quantum = input.build()?.quantum()?;
    let n = quantum.graph().n_parties();
    let flags = (0..n).map(|j| is_fair_sampling(&quantum, j)).collect::<failnet_core::Result<Vec<_>>>()?;
    match postselect_transform(&quantum) {
        Ok(ps) => {
            let (cond, _) = quantum.joint_distribution()?.conditional_on_conclusive()?;
            let filtered = ps.model.joint_distribution()?;
            let result = json!({
                "fair_sampling": flags,
                "success": ps.success,
                "success_probability": ps.success_probability(),
                "equivalence_error": filtered.max_abs_diff(&cond),
                "model": ModelFile::from_quantum(&ps.model),
            });
            emit_json(&cfg, out, &result)
        }
        Err(e) => {
            let result = json!({ "fair_sampling": flags, "error": e.to_string(), "model": Value::Null });
            emit_json(&cfg, out, &result)?;
            Err(e.into())
        }
    }
}

fn scan_csv(cfg: &RunConfig, t_min: f64, t_max: f64, steps: usize, restarts: usize, phases: bool) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = parallel::scan(&linspace(t_min, t_max, steps), cfg.seed, restarts, phases)?
        .iter()
        .map(|r| vec![num(r.t), num(r.standard_chsh), num(r.ps_chsh), num(r.standard_rate), num(r.ps_rate)])
        .collect();
    emit::csv_bytes(&cfg.header(), &["t", "standard_chsh", "ps_chsh", "standard_rate", "ps_rate"], &rows)
}

const TABLE_COLUMNS: [&str; 16] = [
    "objective",
    "t1",
    "t2",
    "alpha0_theta",
    "alpha0_varphi",
    "alpha1_theta",
    "alpha1_varphi",
    "beta0_theta",
    "beta0_varphi",
    "beta1_theta",
    "beta1_varphi",
    "chsh",
    "p_succ",
    "randomness",
    "alice_binning",
    "bob_binning",
];

fn table_row(r: &OptimizationResult) -> Vec<String> {
    let SPDCParams { t1, t2, alice, bob } = r.params;
    let mut row = vec![r.objective.name().to_string(), num(t1), num(t2)];
    for s in alice.iter().chain(&bob) {
        row.push(num(s.theta));
        row.push(num(s.varphi));
    }
    let bits = |b: &[u8]| b.iter().map(|v| v.to_string()).collect::<String>();
    row.extend([
        num(r.chsh),
        num(r.params.success_probability()),
        num(r.randomness),
        bits(&r.binning.alice),
        bits(&r.binning.bob),
    ]);
    row
}

#[derive(Serialize)]
struct SummaryEntry {
    pump: String,
    objective: &'static str,
    value: f64,
    chsh: f64,
    randomness: f64,
    success_probability: f64,
    best_restart: usize,
    /// Optimum of the same search restricted to real rotations.
    real_rotation_value: f64,
    phase_gain: f64,
}

fn reproduce_tables(cfg: &RunConfig, dir: &Path, restarts: usize, scan_steps: usize, scan_restarts: usize) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let header = cfg.header();
    let mut summary = Vec::new();
    for (pump, file) in [(PumpMode::Equal, "table_equal.csv"), (PumpMode::Free, "table_free.csv")] {
        let mut rows = Vec::new();
        for objective in [Objective::StandardRandomness, Objective::PsRandomness] {
            let opt = OptimizeConfig::new(objective, pump, cfg.seed, restarts);
            let r = parallel::optimize(&opt)?;
            let (real_value, gain) = parallel::phase_gain(&r, &opt)?;
            rows.push(table_row(&r));
            summary.push(SummaryEntry {
                pump: pump_name(pump),
                objective: objective.name(),
                value: r.value,
                chsh: r.chsh,
                randomness: r.randomness,
                success_probability: r.params.success_probability(),
                best_restart: r.best_restart,
                real_rotation_value: real_value,
                phase_gain: gain,
            });
        }
        let path = dir.join(file);
        fs::write(&path, emit::csv_bytes(&header, &TABLE_COLUMNS, &rows)?).map_err(|e| CliError::io(&path, e))?;
    }
    let path = dir.join("scan.csv");
    fs::write(&path, scan_csv(cfg, 0.05, 0.95, scan_steps, scan_restarts, true)?).map_err(|e| CliError::io(&path, e))?;
    let path = dir.join("summary.json");
    let result = json!({
        "tables": summary,
        "files": ["table_equal.csv", "table_free.csv", "scan.csv"],
    });
    fs::write(&path, emit::json_bytes(&header, &result)?).map_err(|e| CliError::io(&path, e))
}
