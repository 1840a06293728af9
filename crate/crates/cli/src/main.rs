//! `feedback-lab`: run feedback-coding experiments from the command line.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feedback_lab::analysis::{bounds_table, typeset_count_bound, BoundRow};
use feedback_lab::arrivals::{ArrivalKind, ArrivalModel};
use feedback_lab::channel::{channel_info, check_bound_assumptions, ChannelInfo, Dmc, DEFAULT_TOLERANCE};
use feedback_lab::harness::{
    run_trials, CensusAggregate, CodecKind, ExperimentConfig, Summary, TraceRow,
};
use feedback_lab::validate::{equivalence_cases, equivalence_suite, invariant_suite};
use log::info;

use config::{parse_int_list, parse_real_list, usage, Settings, UsageError};

const THREADS_ENV: &str = "FEEDBACK_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "feedback-lab", version, about = "Posterior-matching feedback codes with streaming arrivals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity, capacity-achieving input, C1 and the bound assumptions of a channel.
    Info(InfoArgs),
    /// Run one experiment and print its summary row.
    Simulate(SimulateArgs),
    /// Run one experiment per message length.
    Sweep(SweepArgs),
    /// Reliability lower bounds over a grid of rates.
    Bounds(BoundsArgs),
    /// Mean type-set counts per step against the heuristic bound.
    Census(CensusArgs),
    /// Cross-check the type-set codec against its reference and run the invariant suite.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Settings file with `key = value` lines; flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug, Default)]
struct ChannelArg {
    /// `bsc:<p>` or `matrix:<r0c0>,<r0c1>;<r1c0>,<r1c1>`.
    #[arg(long)]
    channel: Option<String>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// exact, typeset, exact-block, exact-buffered or reference.
    #[arg(long)]
    codec: Option<String>,
    /// periodic, bernoulli:<q>, bernoulli:<t0>@<q0>/<t1>@<q1>..., block or buffered:<inner>.
    #[arg(long)]
    arrivals: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Channel uses before a trial is cut off (default ceil(50 n / C)).
    #[arg(long)]
    time_cap: Option<String>,
    /// Worker threads (else the config file, else $FEEDBACK_LAB_THREADS, else all cores).
    #[arg(long)]
    threads: Option<String>,
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    channel: ChannelArg,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    channel: ChannelArg,
    #[command(flatten)]
    run: RunArgs,
    /// Message length in bits.
    #[arg(long)]
    n: Option<String>,
    /// Write the per-step trace of trial 0 to this file.
    #[arg(long)]
    dump_trace: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    channel: ChannelArg,
    #[command(flatten)]
    run: RunArgs,
    /// Lengths as `a:b:step` or `n1,n2,...`.
    #[arg(long)]
    n: Option<String>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    channel: ChannelArg,
    /// Arrival model used for E[tau_n] / n and the slack check.
    #[arg(long)]
    arrivals: Option<String>,
    /// Length at which E[tau_n] / n is evaluated.
    #[arg(long)]
    n: Option<String>,
    /// Per-bit posterior entropy limit.
    #[arg(long)]
    h_limit: Option<String>,
    /// Rates as `a:b:step` or `r1,r2,...`.
    #[arg(long)]
    rates: Option<String>,
}

#[derive(Args, Debug)]
struct CensusArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    channel: ChannelArg,
    #[arg(long)]
    arrivals: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Last step reported.
    #[arg(long)]
    t_max: Option<String>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of type-set/reference comparisons.
    #[arg(long)]
    cases: Option<String>,
    /// Steps per comparison.
    #[arg(long)]
    steps: Option<String>,
    /// Number of random configurations in the invariant suite.
    #[arg(long)]
    configs: Option<String>,
    /// Trials per invariant configuration.
    #[arg(long)]
    trials: Option<String>,
}

type Keys = Vec<(&'static str, Option<String>)>;

impl Common {
    fn keys(&self) -> Keys {
        vec![("output", self.output.clone()), ("seed", self.seed.clone())]
    }
}

impl ChannelArg {
    fn keys(&self) -> Keys {
        vec![("channel", self.channel.clone())]
    }
}

impl RunArgs {
    fn keys(&self) -> Keys {
        vec![
            ("codec", self.codec.clone()),
            ("arrivals", self.arrivals.clone()),
            ("epsilon", self.epsilon.clone()),
            ("trials", self.trials.clone()),
            ("time_cap", self.time_cap.clone()),
            ("threads", self.threads.clone()),
        ]
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(feedback_lab::Error),
    Io(io::Error),
    /// A check ran and found problems.
    Check(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<feedback_lab::Error> for Failure {
    fn from(e: feedback_lab::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Run(e) if e.is_invariant_failure() => 2,
            Failure::Check(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Check(m) => f.write_str(m),
            Failure::Run(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Info(a) => cmd_info(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Census(a) => cmd_census(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn resolve(common: &Common, groups: Vec<Keys>) -> Result<Settings, Failure> {
    let mut keys = common.keys();
    for g in groups {
        keys.extend(g);
    }
    Ok(Settings::resolve(&keys, common.config.as_deref())?)
}

fn parse_with<T>(s: &Settings, key: &str, default: &str) -> Result<T, Failure>
where
    T: std::str::FromStr<Err = feedback_lab::Error>,
{
    let raw = s.raw(key).unwrap_or(default);
    raw.parse::<T>()
        .map_err(|e| Failure::Usage(format!("bad value `{raw}` for `{key}`: {e}")))
}

fn channel_of(s: &Settings) -> Result<Dmc, Failure> {
    parse_with(s, "channel", "bsc:0.11")
}

fn threads_of(s: &Settings) -> Result<Option<usize>, Failure> {
    if let Some(t) = s.get::<usize>("threads")? {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("bad value `{v}` for {THREADS_ENV}"))),
        _ => Ok(None),
    }
}

fn experiment_of(s: &Settings, n: u32) -> Result<ExperimentConfig, Failure> {
    let codec: CodecKind = parse_with(s, "codec", "typeset")?;
    let arrivals: ArrivalKind = parse_with(s, "arrivals", "periodic")?;
    let mut cfg = ExperimentConfig::new(codec, channel_of(s)?, arrivals, n);
    cfg.epsilon = s.get_or("epsilon", cfg.epsilon)?;
    cfg.trials = s.get_or("trials", cfg.trials)?;
    cfg.master_seed = s.get_or("seed", cfg.master_seed)?;
    cfg.time_cap = s.get("time_cap")?;
    cfg.threads = threads_of(s)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Opens `--output` or stdout and writes the provenance line.
fn open_output(s: &Settings, verb: &str, provenance: &str) -> Result<Box<dyn Write>, Failure> {
    let mut out = writer_for(s.raw("output"))?;
    writeln!(out, "# feedback-lab {verb} {provenance}")?;
    Ok(out)
}

fn writer_for(path: Option<&str>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) if p != "-" => Box::new(BufWriter::new(File::create(Path::new(p)).map_err(|e| {
            Failure::Usage(format!("cannot create {p}: {e}"))
        })?)),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_info(a: InfoArgs) -> Result<(), Failure> {
    let s = resolve(&a.common, vec![a.channel.keys()])?;
    let ch = channel_of(&s)?;
    let info: ChannelInfo = channel_info(&ch, DEFAULT_TOLERANCE)?;
    let mut out = open_output(&s, "info", &format!("channel={ch}"))?;
    writeln!(out, "{}", ChannelInfo::CSV_HEADER)?;
    writeln!(out, "{}", info.csv_row())?;
    if ch.input_size() == 2 {
        let r = check_bound_assumptions(&ch, 1e-6)?;
        writeln!(out, "# uniform_caid={} c1_at_zero_one={} strictly_positive={} all_hold={}",
            r.uniform_caid, r.c1_at_zero_one, r.strictly_positive, r.all_hold())?;
    }
    out.flush()?;
    eprintln!("{info}");
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let mut groups = vec![a.channel.keys(), a.run.keys()];
    groups.push(vec![("n", a.n.clone()), ("dump_trace", a.dump_trace.clone())]);
    let s = resolve(&a.common, groups)?;
    let n: u32 = s.get_or("n", 8)?;
    let mut cfg = experiment_of(&s, n)?;
    let trace_path = s.raw("dump_trace").map(str::to_string);
    cfg.dump_trace = trace_path.is_some();
    info!("simulate {}", cfg.describe());
    let (_, records) = run_trials(&cfg)?;
    let summary = Summary::from_records(&cfg, &records)?;
    let mut out = open_output(&s, "simulate", &cfg.describe())?;
    writeln!(out, "{}", Summary::CSV_HEADER)?;
    writeln!(out, "{}", summary.csv_row())?;
    out.flush()?;
    if let Some(path) = trace_path {
        let with_sets = matches!(cfg.codec, CodecKind::Typeset);
        let mut w = writer_for(Some(&path))?;
        writeln!(w, "# feedback-lab simulate trace of trial 0: {}", cfg.describe())?;
        let header = if with_sets { TraceRow::CSV_HEADER_SETS } else { TraceRow::CSV_HEADER };
        writeln!(w, "{header}")?;
        if let Some(trace) = records.first().and_then(|r| r.trace.as_ref()) {
            for row in trace {
                writeln!(w, "{}", row.csv_row(with_sets))?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let groups = vec![a.channel.keys(), a.run.keys(), vec![("n", a.n.clone())]];
    let s = resolve(&a.common, groups)?;
    let lengths = parse_int_list(s.raw("n").unwrap_or("2:16:2"))?;
    let mut configs = Vec::with_capacity(lengths.len());
    for &n in &lengths {
        configs.push(experiment_of(&s, n)?);
    }
    let provenance = format!("{} lengths={}", configs[0].describe(), s.raw("n").unwrap_or("2:16:2"));
    let mut out = open_output(&s, "sweep", &provenance)?;
    writeln!(out, "{}", Summary::CSV_HEADER)?;
    for cfg in &configs {
        info!("sweep point {}", cfg.describe());
        let (_, records) = run_trials(cfg)?;
        writeln!(out, "{}", Summary::from_records(cfg, &records)?.csv_row())?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_bounds(a: BoundsArgs) -> Result<(), Failure> {
    let groups = vec![
        a.channel.keys(),
        vec![
            ("arrivals", a.arrivals.clone()),
            ("n", a.n.clone()),
            ("h_limit", a.h_limit.clone()),
            ("rates", a.rates.clone()),
        ],
    ];
    let s = resolve(&a.common, groups)?;
    let ch = channel_of(&s)?;
    let arrivals: ArrivalKind = parse_with(&s, "arrivals", "periodic")?;
    let n: u32 = s.get_or("n", 64)?;
    let h_limit: f64 = s.get_or("h_limit", 0.145)?;
    let rates = parse_real_list(s.raw("rates").unwrap_or("0:1:0.05"))?;
    let info = channel_info(&ch, DEFAULT_TOLERANCE)?;
    let stats = ArrivalModel::new(arrivals.clone(), n)?.arrival_stats();
    let tau_bar_over_n = stats.tau_bar / n as f64;
    let rows = bounds_table(info.capacity, info.c1, h_limit, tau_bar_over_n, stats.slack.is_some(), &rates)?;
    let provenance = format!(
        "channel={ch} arrivals={arrivals} n={n} h_limit={h_limit} rates={}",
        s.raw("rates").unwrap_or("0:1:0.05")
    );
    let mut out = open_output(&s, "bounds", &provenance)?;
    writeln!(out, "{}", BoundRow::CSV_HEADER)?;
    for row in rows {
        writeln!(out, "{}", row.csv_row())?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_census(a: CensusArgs) -> Result<(), Failure> {
    let groups = vec![
        a.channel.keys(),
        vec![
            ("arrivals", a.arrivals.clone()),
            ("n", a.n.clone()),
            ("epsilon", a.epsilon.clone()),
            ("trials", a.trials.clone()),
            ("threads", a.threads.clone()),
            ("t_max", a.t_max.clone()),
        ],
    ];
    let s = resolve(&a.common, groups)?;
    let arrivals: ArrivalKind = parse_with(&s, "arrivals", "bernoulli:0.5")?;
    let q = arrivals
        .constant_q()
        .ok_or_else(|| usage("census needs periodic or constant-q bernoulli arrivals"))?;
    let t_max: u64 = s.get_or("t_max", 40)?;
    if t_max == 0 {
        return Err(usage("t_max must be at least 1").into());
    }
    let n: u32 = s.get_or("n", 64)?;
    let mut cfg = ExperimentConfig::new(CodecKind::Typeset, channel_of(&s)?, arrivals, n);
    cfg.epsilon = s.get_or("epsilon", 1e-3)?;
    cfg.trials = s.get_or("trials", 200)?;
    cfg.master_seed = s.get_or("seed", 1)?;
    cfg.threads = threads_of(&s)?;
    cfg.record_census = true;
    cfg.run_until = Some(t_max + 1);
    cfg.time_cap = Some(t_max + 1);
    cfg.validate()?;
    let (_, records) = run_trials(&cfg)?;
    let agg = CensusAggregate::from_records(q, &records);
    let mut out = open_output(&s, "census", &format!("{} t_max={t_max}", cfg.describe()))?;
    writeln!(out, "t,mean_NB,mean_NA,bound_NB,bound_NA,freq_Et_complement")?;
    for t in 1..=t_max {
        // counts recorded while preparing step t + 1
        let Some(row) = agg.at(t + 1) else { break };
        let (bound_nb, bound_na) = typeset_count_bound(q, t as f64)?;
        writeln!(
            out,
            "{t},{},{},{bound_nb},{bound_na},{}",
            row.mean_before, row.mean_after, row.event_failure
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let groups = vec![vec![
        ("cases", a.cases.clone()),
        ("steps", a.steps.clone()),
        ("configs", a.configs.clone()),
        ("trials", a.trials.clone()),
    ]];
    let s = resolve(&a.common, groups)?;
    let seed: u64 = s.get_or("seed", 1)?;
    let cases: usize = s.get_or("cases", 60)?;
    let steps: u64 = s.get_or("steps", 40)?;
    let configs: usize = s.get_or("configs", 200)?;
    let trials: u64 = s.get_or("trials", 2)?;
    let eq = equivalence_suite(&equivalence_cases(cases, &[4, 6, 8], &[0.3, 0.7, 1.0], &[0.05, 0.11], steps, seed));
    let inv = invariant_suite(configs, trials, seed);
    let mut out = open_output(&s, "validate", &format!("seed={seed} cases={cases} steps={steps} configs={configs} trials={trials}"))?;
    writeln!(out, "suite,cases,failures")?;
    writeln!(out, "equivalence,{},{}", eq.cases, eq.failures.len())?;
    writeln!(out, "invariants,{},{}", inv.cases, inv.failures.len())?;
    out.flush()?;
    let failures: Vec<&String> = eq.failures.iter().chain(&inv.failures).collect();
    for f in failures.iter().take(20) {
        eprintln!("failure: {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} validation failures", failures.len())))
    }
}
