use anyhow::{anyhow, Context, Result};
use cachebc::all_equal::{allocate_memory, erasure_region_check, AllEqualError, MemoryAllocation};
use cachebc::bounds::{bounds_json, bounds_table, format_sig6, GridSpec};
use cachebc::cache_codec::{place, read_cache_dump, write_cache_dump, SubmessageTable};
use cachebc::erasure_net::{piggyback_sweep, SweepSettings};
use cachebc::figures::{verify_figure, CurveStatus, FIGURES};
use cachebc::joint_scheme::{simulate, simulate_refined, simulate_separate, SimulationSettings, SlotPlanner, DEFAULT_MARGIN};
use cachebc::model::{DemandMode, Library, NetworkConfig};
use cachebc::report::write_jsonl;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

/// Capacity-memory bounds and coding simulators for erasure broadcast
/// channels with receiver caches. Set RAYON_NUM_THREADS to bound the
/// worker pool used by the trial loops.
#[derive(Parser, Debug)]
#[command(name = "cachebc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate lower and upper bounds on the capacity-memory tradeoff.
    Bounds {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of evenly spaced memories, or `breakpoints`.
        #[arg(long, default_value = "breakpoints")]
        grid: String,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
    /// Recompute the shipped figure tables and compare them with the golden data.
    VerifyFigures {
        /// 5, 6, 7, 8 or all.
        which: String,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
    /// Run a coding scheme end to end over the simulated channel.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = Scheme::Joint)]
        scheme: Scheme,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long)]
        rate_fraction: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, value_enum, default_value_t = PlannerArg::EqualReliability)]
        planner: PlannerArg,
        #[arg(long, value_enum, default_value_t = DemandArg::Sampled)]
        demands: DemandArg,
        /// Write one JSON line per trial here.
        #[arg(long)]
        jsonl: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
    /// Empirical success rates of piggyback coding over a grid of rate pairs.
    PiggybackSweep {
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        delta2: f64,
        #[arg(long, default_value_t = 1)]
        packet_bits: usize,
        /// Points per axis, spanning 0 to 1.2 times each single-user capacity.
        #[arg(long, default_value_t = 5)]
        grid: usize,
        /// Explicit rate pairs `r1:r2,...` instead of the grid.
        #[arg(long)]
        points: Option<String>,
        /// Blocklength; small blocks lose a noticeable share to the per-message checksum at F = 1.
        #[arg(long, default_value_t = 20000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Rate-memory region when all receivers demand the same file.
    AllEqual {
        #[command(subcommand)]
        command: AllEqualCommand,
    },
    /// Write or inspect binary coded-caching cache dumps.
    Cache {
        #[command(subcommand)]
        command: CacheCommand,
    },
}

#[derive(Subcommand, Debug)]
enum AllEqualCommand {
    /// Find the smallest cache allocation supporting the rates on erasure channels.
    Check {
        /// Comma-separated file rates, bits per channel use.
        #[arg(long)]
        rates: String,
        /// Comma-separated erasure probabilities, one per receiver.
        #[arg(long)]
        deltas: String,
        /// Comma-separated cache budgets, bits per channel use.
        #[arg(long)]
        budgets: String,
        #[arg(long, default_value_t = 1)]
        packet_bits: u32,
    },
}

#[derive(Subcommand, Debug)]
enum CacheCommand {
    /// Place a random library and dump one receiver's cache.
    Dump {
        #[arg(long)]
        k_tilde: usize,
        #[arg(long)]
        t_tilde: usize,
        #[arg(long)]
        num_files: usize,
        #[arg(long)]
        file_bits: usize,
        #[arg(long, default_value_t = 0)]
        receiver: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the header and entries of a dump.
    Inspect {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// fig5, fig6, fig7 or fig8.
    #[arg(long)]
    preset: Option<String>,
    /// Scenario JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k_weak: Option<usize>,
    #[arg(long)]
    k_strong: Option<usize>,
    #[arg(long)]
    delta_weak: Option<f64>,
    #[arg(long)]
    delta_strong: Option<f64>,
    #[arg(long)]
    packet_bits: Option<u32>,
    #[arg(long)]
    num_files: Option<usize>,
    /// Cache size in bits per channel use; overrides the scenario's.
    #[arg(long, conflicts_with = "memory_bits")]
    memory: Option<f64>,
    /// Cache size in total bits, divided by `--blocklength`.
    #[arg(long, requires = "blocklength")]
    memory_bits: Option<f64>,
    #[arg(long)]
    blocklength: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
    Pretty,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Scheme {
    Joint,
    Separate,
    Refined,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PlannerArg {
    EqualReliability,
    Proportional,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DemandArg {
    Sampled,
    All,
}

/// Bad arguments or scenario; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Exit status of a command that ran to completion.
enum Outcome {
    Ok,
    Failed,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<NetworkConfig> {
        let inline = [
            self.k_weak.is_some(),
            self.k_strong.is_some(),
            self.delta_weak.is_some(),
            self.delta_strong.is_some(),
            self.packet_bits.is_some(),
            self.num_files.is_some(),
        ];
        let sources = usize::from(self.preset.is_some()) + usize::from(self.config.is_some()) + usize::from(inline.iter().any(|&b| b));
        if sources != 1 {
            return Err(usage("give exactly one scenario source: --preset, --config, or the inline flags"));
        }
        let mut c = if let Some(p) = &self.preset {
            NetworkConfig::preset(p).map_err(|e| usage(e.to_string()))?
        } else if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            NetworkConfig::from_json(&text).map_err(|e| usage(e.to_string()))?
        } else {
            if !inline.iter().all(|&b| b) {
                return Err(usage(
                    "inline scenarios need --k-weak, --k-strong, --delta-weak, --delta-strong, --packet-bits and --num-files",
                ));
            }
            NetworkConfig {
                k_weak: self.k_weak.unwrap(),
                k_strong: self.k_strong.unwrap(),
                delta_weak: self.delta_weak.unwrap(),
                delta_strong: self.delta_strong.unwrap(),
                packet_bits: self.packet_bits.unwrap(),
                num_files: self.num_files.unwrap(),
                memory: 0.0,
            }
        };
        if let Some(m) = self.memory {
            c.memory = m;
        }
        if let (Some(bits), Some(n)) = (self.memory_bits, self.blocklength) {
            if n == 0 {
                return Err(usage("--blocklength must be positive"));
            }
            c.memory = bits / n as f64;
        }
        let v = c.validate().map_err(|e| usage(e.to_string()))?;
        Ok(v.config)
    }
}

fn parse_list(name: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| usage(format!("--{name}: {s:?}: {e}"))))
        .collect()
}

/// Invocation line and resolved parameters.
fn header(resolved: serde_json::Value) -> String {
    let args: Vec<String> = std::env::args().collect();
    format!("# {}\n# resolved: {}\n", args.join(" "), resolved)
}

/// Header goes to stdout for pretty output and to stderr otherwise, so
/// machine-readable output stays parseable.
fn emit(format: Format, head: &str, body: &str) {
    if format == Format::Pretty {
        print!("{head}");
    } else {
        eprint!("{head}");
    }
    print!("{body}");
}

fn cmd_bounds(scenario: &ScenarioArgs, grid: &str, format: Format) -> Result<Outcome> {
    let c = scenario.resolve()?;
    let spec = match grid {
        "breakpoints" => GridSpec::Breakpoints,
        n => match n.parse::<usize>() {
            Ok(0) => return Err(usage("--grid must be at least 1")),
            Ok(k) => GridSpec::Points(k),
            Err(_) => return Err(usage(format!("--grid {n:?}: expected a count or `breakpoints`"))),
        },
    };
    let table = bounds_table(&c, spec).map_err(|e| usage(e.to_string()))?;
    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Pretty => table.to_pretty(),
        Format::Json => {
            let mut v = bounds_json(&c)?;
            v["table"] = json!({ "columns": table.columns, "rows": table.rows });
            format!("{}\n", serde_json::to_string_pretty(&v)?)
        }
    };
    emit(format, &header(json!({ "scenario": c, "grid": grid })), &body);
    Ok(Outcome::Ok)
}

fn cmd_verify(which: &str, format: Format) -> Result<Outcome> {
    let figures: Vec<u32> = match which {
        "all" => FIGURES.to_vec(),
        s => match s.parse::<u32>() {
            Ok(f) if FIGURES.contains(&f) => vec![f],
            _ => return Err(usage(format!("unknown figure {s:?}; expected 5, 6, 7, 8 or all"))),
        },
    };
    let reports = figures.iter().map(|&f| verify_figure(f)).collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed());
    let body = if format == Format::Pretty {
        let mut out = String::new();
        for r in &reports {
            for c in &r.curves {
                let tag = match c.status {
                    CurveStatus::Pass => "PASS",
                    CurveStatus::Fail => "FAIL",
                    CurveStatus::Informational => "INFO",
                };
                out.push_str(&format!(
                    "fig{} {:<14} {tag}  points={} max_abs_error={} at M={}{}\n",
                    r.figure,
                    c.curve,
                    c.points_checked,
                    format_sig6(c.max_abs_error),
                    format_sig6(c.worst_memory),
                    if c.status == CurveStatus::Informational { "  (mismatch expected, not asserted)" } else { "" },
                ));
            }
        }
        out
    } else {
        format!("{}\n", serde_json::to_string_pretty(&reports)?)
    };
    emit(format, &header(json!({ "figures": figures })), &body);
    Ok(if passed { Outcome::Ok } else { Outcome::Failed })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    scenario: &ScenarioArgs,
    scheme: Scheme,
    t: usize,
    rate_fraction: f64,
    n: usize,
    trials: usize,
    seed: u64,
    margin: f64,
    planner: PlannerArg,
    demands: DemandArg,
    jsonl: Option<&PathBuf>,
    format: Format,
) -> Result<Outcome> {
    let c = scenario.resolve()?;
    if !(rate_fraction.is_finite() && rate_fraction >= 0.0) || !(margin.is_finite() && margin >= 0.0) {
        return Err(usage("--rate-fraction and --margin must be finite and nonnegative"));
    }
    if n == 0 {
        return Err(usage("--n must be positive"));
    }
    let mut s = SimulationSettings::new(t, rate_fraction, n, trials, seed);
    s.margin = margin;
    s.planner = match planner {
        PlannerArg::EqualReliability => SlotPlanner::EqualReliability,
        PlannerArg::Proportional => SlotPlanner::Proportional,
    };
    if let DemandArg::All = demands {
        s.demand_mode = DemandMode::all();
    }
    log::info!("running {trials} trials of the {scheme:?} scheme at n = {n}");
    let sim = match scheme {
        Scheme::Joint => simulate(&c, &s),
        Scheme::Separate => simulate_separate(&c, &s),
        Scheme::Refined => simulate_refined(&c, &s),
    }
    .map_err(|e| usage(e.to_string()))?;
    if let Some(path) = jsonl {
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_jsonl(std::io::BufWriter::new(f), &sim.reports)?;
    }
    let m = &sim.summary;
    let body = match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(m)?),
        Format::Csv => format!(
            "M,rate,scheme,t,n,trials,error,worst_case_error_estimate,feasible\n{},{},{},{},{},{},{},{},{}\n",
            format_sig6(m.memory),
            format_sig6(m.rate),
            m.scheme,
            m.t,
            m.n,
            m.trials,
            format_sig6(m.error),
            format_sig6(m.worst_case_error_estimate),
            m.feasible
        ),
        Format::Pretty => {
            let mut out = format!(
                "scheme {} t={} rate={} ({} of nominal) n={} trials={}\nmemory {} bits/use\nerror {}  worst-demand error {}  over {} demand vectors\n",
                m.scheme,
                m.t,
                format_sig6(m.rate),
                format_sig6(m.rate_fraction),
                m.n,
                m.trials,
                format_sig6(m.memory),
                format_sig6(m.error),
                format_sig6(m.worst_case_error_estimate),
                m.demand_vectors
            );
            for p in &m.phase_failures {
                out.push_str(&format!("  {} failed in {} trials\n", p.phase, p.trials));
            }
            out.push_str(&format!("digest {}\n", m.digest));
            out
        }
    };
    let resolved = json!({
        "scenario": c, "scheme": format!("{scheme:?}").to_lowercase(), "t": t, "rate_fraction": rate_fraction,
        "n": n, "trials": trials, "seed": seed, "margin": margin, "planner": s.planner,
        "demands": format!("{demands:?}").to_lowercase(),
    });
    emit(format, &header(resolved), &body);
    if let Some(why) = &m.infeasibility {
        eprintln!("{why}");
        return Ok(Outcome::Failed);
    }
    Ok(Outcome::Ok)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    delta1: f64,
    delta2: f64,
    packet_bits: usize,
    grid: usize,
    points: Option<&str>,
    n: usize,
    trials: usize,
    seed: u64,
    format: Format,
) -> Result<Outcome> {
    if !(0.0..=1.0).contains(&delta1) || !(0.0..=1.0).contains(&delta2) || packet_bits == 0 || n == 0 || trials == 0 {
        return Err(usage("need erasure probabilities in [0, 1] and positive --packet-bits, --n and --trials"));
    }
    let f = packet_bits as f64;
    let pts: Vec<(f64, f64)> = match points {
        Some(text) => text
            .split(',')
            .map(|p| {
                let (a, b) = p.split_once(':').ok_or_else(|| usage(format!("point {p:?}: expected r1:r2")))?;
                let a: f64 = a.trim().parse().map_err(|_| usage(format!("point {p:?}")))?;
                let b: f64 = b.trim().parse().map_err(|_| usage(format!("point {p:?}")))?;
                Ok((a, b))
            })
            .collect::<Result<_>>()?,
        None => {
            if grid < 2 {
                return Err(usage("--grid must be at least 2"));
            }
            let axis = |cap: f64| (0..grid).map(move |i| 1.2 * cap * i as f64 / (grid - 1) as f64);
            axis((1.0 - delta1) * f).flat_map(|a| axis((1.0 - delta2) * f).map(move |b| (a, b))).collect()
        }
    };
    if pts.iter().any(|&(a, b)| !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite())) {
        return Err(usage("rates must be finite and nonnegative"));
    }
    let s = SweepSettings { delta1, delta2, packet_bits, n, trials, seed };
    let rows = piggyback_sweep(&s, &pts);
    let inside = |r1: f64, r2: f64| r1 <= (1.0 - delta1) * f + 1e-12 && r1 + r2 <= (1.0 - delta2) * f + 1e-12;
    let body = match format {
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|p| json!({ "point": p, "side_info_rate": p.side_info_rate(), "full_rate": p.full_rate(), "inside_region": inside(p.r1, p.r2) }))
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&v)?)
        }
        _ => {
            let mut out = String::from("r1,r2,trials,side_info_success,full_success,inside_region\n");
            for p in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    format_sig6(p.r1),
                    format_sig6(p.r2),
                    p.trials,
                    format_sig6(p.side_info_rate()),
                    format_sig6(p.full_rate()),
                    inside(p.r1, p.r2)
                ));
            }
            out
        }
    };
    emit(format, &header(json!({ "settings": s, "points": pts.len() })), &body);
    Ok(Outcome::Ok)
}

fn cmd_all_equal(rates: &str, deltas: &str, budgets: &str, packet_bits: u32) -> Result<Outcome> {
    let (rates, deltas, budgets) = (parse_list("rates", rates)?, parse_list("deltas", deltas)?, parse_list("budgets", budgets)?);
    if deltas.len() != budgets.len() {
        return Err(usage(format!("{} deltas but {} budgets", deltas.len(), budgets.len())));
    }
    if deltas.iter().any(|d| !(0.0..=1.0).contains(d)) || rates.iter().chain(&budgets).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(usage("erasure probabilities must lie in [0, 1]; rates and budgets must be nonnegative"));
    }
    let (value, ok) = match allocate_memory(&deltas, packet_bits, &rates, &budgets) {
        Ok(a) => {
            let check = erasure_region_check(&deltas, packet_bits, &rates, &a)?;
            (json!({ "feasible": check.feasible, "allocation": a.entries, "budgets": a.budgets, "violations": check.violations }), check.feasible)
        }
        Err(AllEqualError::Infeasible { receiver, deficit }) => {
            let shortfall = allocation_ignoring_budgets(&deltas, packet_bits, &rates);
            (json!({ "feasible": false, "certificate": { "receiver": receiver, "deficit": deficit }, "shortfalls": shortfall.entries }), false)
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    let resolved = json!({ "rates": rates, "deltas": deltas, "budgets": budgets, "packet_bits": packet_bits });
    emit(Format::Json, &header(resolved), &format!("{}\n", serde_json::to_string_pretty(&value)?));
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}

fn allocation_ignoring_budgets(deltas: &[f64], packet_bits: u32, rates: &[f64]) -> MemoryAllocation {
    let unlimited = vec![f64::MAX; deltas.len()];
    allocate_memory(deltas, packet_bits, rates, &unlimited).expect("unlimited budgets")
}

#[allow(clippy::too_many_arguments)]
fn cmd_cache_dump(k_tilde: usize, t_tilde: usize, num_files: usize, file_bits: usize, receiver: usize, seed: u64, out: &PathBuf) -> Result<Outcome> {
    if receiver >= k_tilde {
        return Err(usage(format!("receiver {receiver} out of range for {k_tilde} receivers")));
    }
    // One channel use at rate `file_bits` yields files of exactly that many bits.
    let files = Library::random_symmetric(num_files, file_bits as f64, 1, seed).files;
    let table = SubmessageTable::split(k_tilde, t_tilde, &files).map_err(|e| usage(e.to_string()))?;
    let caches = place(&table);
    let bytes = write_cache_dump(&caches[receiver]);
    std::fs::write(out, &bytes).with_context(|| format!("writing {}", out.display()))?;
    let resolved = json!({ "k_tilde": k_tilde, "t_tilde": t_tilde, "num_files": num_files, "file_bits": file_bits, "receiver": receiver, "seed": seed });
    emit(
        Format::Pretty,
        &header(resolved),
        &format!("wrote {} bytes, {} cached bits, to {}\n", bytes.len(), caches[receiver].bits(), out.display()),
    );
    Ok(Outcome::Ok)
}

fn cmd_cache_inspect(path: &PathBuf, format: Format) -> Result<Outcome> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let cache = read_cache_dump(&bytes).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let entries: Vec<_> = cache.entries.iter().map(|(&(d, rank), b)| json!({ "file": d, "rank": rank, "bits": b.len() })).collect();
    let v = json!({
        "receiver": cache.receiver, "k_tilde": cache.k_tilde, "t_tilde": cache.t_tilde, "num_files": cache.num_files,
        "sub_len": cache.sub_len, "file_bits": cache.file_bits, "cached_bits": cache.bits(), "entries": entries,
    });
    let body = if format == Format::Pretty {
        let mut out = format!(
            "receiver {} of {}, t = {}, {} files of {} bits, sub_len {}\n{} entries, {} bits\n",
            cache.receiver,
            cache.k_tilde,
            cache.t_tilde,
            cache.num_files,
            cache.file_bits,
            cache.sub_len,
            cache.entries.len(),
            cache.bits()
        );
        for (&(d, rank), b) in &cache.entries {
            out.push_str(&format!("  file {d} subset {rank}: {} bits\n", b.len()));
        }
        out
    } else {
        format!("{}\n", serde_json::to_string_pretty(&v)?)
    };
    emit(format, &header(json!({ "path": path })), &body);
    Ok(Outcome::Ok)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Bounds { scenario, grid, format } => cmd_bounds(&scenario, &grid, format),
        Command::VerifyFigures { which, format } => cmd_verify(&which, format),
        Command::Simulate { scenario, scheme, t, rate_fraction, n, trials, seed, margin, planner, demands, jsonl, format } => {
            cmd_simulate(&scenario, scheme, t, rate_fraction, n, trials, seed, margin, planner, demands, jsonl.as_ref(), format)
        }
        Command::PiggybackSweep { delta1, delta2, packet_bits, grid, points, n, trials, seed, format } => {
            cmd_sweep(delta1, delta2, packet_bits, grid, points.as_deref(), n, trials, seed, format)
        }
        Command::AllEqual { command: AllEqualCommand::Check { rates, deltas, budgets, packet_bits } } => {
            cmd_all_equal(&rates, &deltas, &budgets, packet_bits)
        }
        Command::Cache { command } => match command {
            CacheCommand::Dump { k_tilde, t_tilde, num_files, file_bits, receiver, seed, out } => {
                cmd_cache_dump(k_tilde, t_tilde, num_files, file_bits, receiver, seed, &out)
            }
            CacheCommand::Inspect { path, format } => cmd_cache_inspect(&path, format),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
