use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mecrep::converse::{brute_force_p1, brute_force_p3, solve_p1_relaxed, solve_p3};
use mecrep::dof::{extension, rank_trials, Direction};
use mecrep::latency::tradeoff_curve;
use mecrep::network::{adjust_dimensions, FileConfig, Mode, NetworkConfig};
use mecrep::phy::{run_monte_carlo, Reduction, SimReport, SimSpec};
use mecrep::random::FadeLaw;
use mecrep::rational;

const VERSION: &str = env!("CARGO_PKG_VERSION");
const OUT_DIR_ENV: &str = "MECREP_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "mecrep",
    version,
    about = "Computation-communication tradeoffs for multi-node edge computing"
)]
struct Cli {
    /// TOML file with default parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Latency tradeoff curve as CSV, with a JSON sidecar of corners and sections.
    Tradeoff(TradeoffArgs),
    /// Closed-form lower-bound program against the enumeration oracle.
    Converse(ConverseArgs),
    /// Rank check of the interference-alignment beamformers.
    VerifyIa(VerifyArgs),
    /// Monte Carlo latency experiment.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct TradeoffArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Load steps per unit of r (partial mode only).
    #[arg(long, default_value_t = 1)]
    grid: usize,
    /// CSV path; the sidecar is written next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConverseArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Computation load, e.g. `2` or `3/2`.
    #[arg(long)]
    r: String,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    direction: DirectionArg,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = LawArg::Gaussian)]
    law: LawArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Transmit power in dB for both directions; repeatable.
    #[arg(long = "power-db", allow_negative_numbers = true)]
    power_db: Vec<f64>,
    /// Computation load; repeatable.
    #[arg(long = "r")]
    loads: Vec<usize>,
    /// Output size as a multiple of the input size; repeatable.
    #[arg(long = "ltilde-ratio")]
    ltilde_ratio: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the grid as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Tree reduction across threads (faster, not bit-reproducible).
    #[arg(long)]
    parallel: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Binary,
    Partial,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Binary => Mode::Binary,
            ModeArg::Partial => Mode::Partial,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    #[value(alias = "up")]
    Uplink,
    #[value(alias = "down")]
    Downlink,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Uplink => Direction::Uplink,
            DirectionArg::Downlink => Direction::Downlink,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Gaussian,
    Uniform,
    Ones,
}

impl From<LawArg> for FadeLaw {
    fn from(l: LawArg) -> FadeLaw {
        match l {
            LawArg::Gaussian => FadeLaw::ComplexGaussian,
            LawArg::Uniform => FadeLaw::RealUniform,
            LawArg::Ones => FadeLaw::Ones,
        }
    }
}

/// Raised for bad input; maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<mecrep::Error>() {
        Some(mecrep::Error::Degenerate(_)) | None => 1,
        Some(_) => 2,
    }
}

#[derive(Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    params: Value,
    seed: Option<u64>,
}

impl Provenance {
    fn new(command: &'static str, params: Value, seed: Option<u64>) -> Self {
        Provenance {
            tool: "mecrep",
            version: VERSION,
            command,
            params,
            seed,
        }
    }

    fn csv_lines(&self) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!(
            "# tool={} version={} command={}\n# params={}\n# seed={}\n",
            self.tool, self.version, self.command, self.params, seed
        )
    }
}

fn load_file_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    FileConfig::from_toml_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> anyhow::Result<T> {
    flag.or(file).ok_or_else(|| {
        usage(format!(
            "{name} must be given as a flag or in the config file"
        ))
    })
}

fn default_path(name: &str) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
        .join(name)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `out` if given, else to stdout.
fn emit(out: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            write_file(p, contents)?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn cmd_tradeoff(args: &TradeoffArgs, file: &FileConfig) -> anyhow::Result<()> {
    let m = require(args.m, file.m, "M")?;
    let n = require(args.n, file.n, "N")?;
    let mode: Mode = args
        .mode
        .map(Mode::from)
        .or(file.mode)
        .unwrap_or(Mode::Binary);
    if m < 1 || n < 1 {
        return Err(usage("M and N must be ≥ 1"));
    }
    if args.grid < 1 {
        return Err(usage("grid must be ≥ 1"));
    }

    let mut adjustment = Value::Null;
    let (mm, nn) = if mode == Mode::Binary && n % m != 0 {
        let adj = adjust_dimensions(m, n)?;
        eprintln!(
            "N/M = {n}/{m} is not an integer: using M = {}, N = {} (δ1 = {}, δ2 = {})",
            adj.edge_nodes, adj.users, adj.delta1, adj.delta2
        );
        adjustment = serde_json::to_value(adj)?;
        (adj.edge_nodes, adj.users)
    } else {
        (m, n)
    };
    let curve = tradeoff_curve(mm, nn, mode, args.grid)?;

    let params = json!({"M": m, "N": n, "mode": mode.as_str(), "grid": args.grid});
    let prov = Provenance::new("tradeoff", params, None);
    let csv_path = args
        .out
        .clone()
        .unwrap_or_else(|| default_path(&format!("tradeoff-M{m}-N{n}-{}.csv", mode.as_str())));
    let mut csv = prov.csv_lines();
    if !adjustment.is_null() {
        csv.push_str(&format!("# adjustment={adjustment}\n"));
    }
    csv.push_str(&curve.to_csv());
    write_file(&csv_path, &csv)?;

    let sidecar = json!({
        "provenance": prov,
        "mode": mode.as_str(),
        "M": curve.edge_nodes,
        "N": curve.users,
        "adjustment": adjustment,
        "corners": curve.corners,
        "sections": curve.sections,
    });
    let json_path = csv_path.with_extension("json");
    write_file(&json_path, &to_json(&sidecar)?)?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_converse(args: &ConverseArgs, file: &FileConfig) -> anyhow::Result<()> {
    let m = require(args.m, file.m, "M")?;
    let n = require(args.n, file.n, "N")?;
    let mode: Mode = args
        .mode
        .map(Mode::from)
        .or(file.mode)
        .unwrap_or(Mode::Binary);
    let r = rational::parse(&args.r)?;

    let (closed, oracle, closed_json, oracle_json) = match mode {
        Mode::Binary => {
            let c = solve_p1_relaxed(m, n, r)?;
            let o = brute_force_p1(m, n, r)?;
            (
                c.value,
                o.value,
                serde_json::to_value(&c)?,
                serde_json::to_value(&o)?,
            )
        }
        Mode::Partial => {
            let c = solve_p3(m, n, r)?;
            let o = brute_force_p3(m, n, r)?;
            (
                c.value,
                o.value,
                serde_json::to_value(&c)?,
                serde_json::to_value(&o)?,
            )
        }
    };
    let params = json!({"M": m, "N": n, "r": rational::format(&r), "mode": mode.as_str()});
    let doc = json!({
        "provenance": Provenance::new("converse", params.clone(), None),
        "instance": params,
        "closed_form": rational::format(&closed),
        "oracle": rational::format(&oracle),
        "match": closed == oracle,
        "closed_form_le_oracle": closed <= oracle,
        "closed_form_solution": closed_json,
        "oracle_solution": oracle_json,
    });
    emit(args.out.as_deref(), &to_json(&doc)?)
}

fn cmd_verify_ia(args: &VerifyArgs, file: &FileConfig) -> anyhow::Result<()> {
    let m = require(args.m, file.m, "M")?;
    let n = require(args.n, file.n, "N")?;
    let trials = args.trials.or(file.trials).unwrap_or(100);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let dir = Direction::from(args.direction);
    let law = FadeLaw::from(args.law);

    let ext = extension(dir, m, n, args.r, args.s)?;
    let summary = rank_trials(dir, m, n, args.r, args.s, trials, seed, law)?;
    let params = json!({
        "direction": dir.as_str(), "M": m, "N": n, "r": args.r, "s": args.s,
        "trials": trials, "law": law,
    });
    let doc = json!({
        "provenance": Provenance::new("verify-ia", params, Some(seed)),
        "summary": summary,
        "dof_ratio": rational::format(&ext.ratio()?),
        "dof_limit": rational::format(&ext.limit()),
    });
    emit(args.out.as_deref(), &to_json(&doc)?)?;
    if summary.full_rank_count != trials || !summary.containment_ok {
        eprintln!(
            "{} of {trials} draws were full rank; containment {}",
            summary.full_rank_count,
            if summary.containment_ok {
                "exact"
            } else {
                "violated"
            }
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    provenance: Provenance,
    #[serde(flatten)]
    report: &'a SimReport,
}

fn cmd_simulate(args: &SimulateArgs, file: &FileConfig) -> anyhow::Result<()> {
    let mut cfg = file.apply(NetworkConfig::four_node_experiment())?;
    if let Some(m) = args.m {
        cfg.edge_nodes = m;
    }
    if let Some(n) = args.n {
        cfg.users = n;
    }
    let trials = args.trials.or(file.trials).unwrap_or(5000);
    let seed = args.seed.or(file.seed).unwrap_or(2024);
    if trials == 0 {
        bail!(usage("trials must be ≥ 1"));
    }

    // The file's power and size settings replace the default sweep.
    let power_db = if !args.power_db.is_empty() {
        args.power_db.clone()
    } else if file.pu_db.is_some() || file.pd_db.is_some() {
        Vec::new()
    } else {
        vec![10.0, 20.0, 30.0]
    };
    let ltilde_ratios = if !args.ltilde_ratio.is_empty() {
        args.ltilde_ratio.clone()
    } else if file.ltilde_ratio.is_some() {
        Vec::new()
    } else {
        vec![3.0, 4.0]
    };
    if ltilde_ratios.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(usage("ltilde-ratio must be positive"));
    }
    let loads = if args.loads.is_empty() {
        vec![1, 3, 4]
    } else {
        args.loads.clone()
    };
    let spec = SimSpec {
        config: cfg,
        loads,
        power_db,
        ltilde_ratios,
        trials,
        seed,
        reduction: if args.parallel {
            Reduction::Parallel
        } else {
            Reduction::Sequential
        },
    };
    let report = run_monte_carlo(&spec)?;

    let params = json!({
        "M": spec.config.edge_nodes,
        "N": spec.config.users,
        "loads": spec.loads,
        "power_db": spec.power_db,
        "ltilde_ratios": spec.ltilde_ratios,
        "trials": trials,
        "reduction": spec.reduction,
        "config": spec.config,
    });
    let prov = Provenance::new("simulate", params, Some(seed));
    if let Some(csv) = &args.csv {
        write_file(csv, &(prov.csv_lines() + &report.to_csv()))?;
        eprintln!("wrote {}", csv.display());
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_path("report.json"));
    let doc = ReportDoc {
        provenance: prov,
        report: &report,
    };
    write_file(&out, &to_json(&doc)?)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let file = load_file_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Tradeoff(a) => cmd_tradeoff(a, &file),
        Command::Converse(a) => cmd_converse(a, &file),
        Command::VerifyIa(a) => cmd_verify_ia(a, &file),
        Command::Simulate(a) => cmd_simulate(a, &file),
    }
}

enum Outcome {
    Done,
    /// Parse failure, or `--help` / `--version` output.
    Clap(clap::Error),
    Failed(anyhow::Error),
}

fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match run(&cli) {
            Ok(()) => Outcome::Done,
            Err(e) => Outcome::Failed(e),
        },
        Err(e) => Outcome::Clap(e),
    }
}

fn main() -> ExitCode {
    match execute(std::env::args_os()) {
        Outcome::Done => ExitCode::SUCCESS,
        Outcome::Clap(e) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Outcome::Failed(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests;
