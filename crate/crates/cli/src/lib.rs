//! Command-line front end: argument parsing, config-file merging, and
//! record emission for every engine of the core crate.

pub mod config;
pub mod records;

use std::io::Write;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use cachemodes_core::dist::{NetworkConfig, Policy};
use cachemodes_core::experiments::{
    evaluate, float_grid, optimize_gamma_c, preset, run_sweep, validate, EngineChoice,
    EvalOptions, EvaluatedPoint, SweepParam, SweepSpec, PRESET_NAMES,
};
use cachemodes_core::metrics::mode_pmf;
use cachemodes_core::modes::{Aggregate, Mode, ModeStat};
use cachemodes_core::stochastic::DEFAULT_PERMUTATION_CAP;

use config::{load_config, seed_from_env, FileConfig, DEFAULT_SEED};
use records::{write_records, Cell, OutputFormat, ResultRecord, MODES_SCHEMA, PMF_SCHEMA};

const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "cachemodes",
    version,
    about = "Operating-mode probabilities of cache-enabled full-duplex D2D networks",
    subcommand_negates_reqs = true
)]
struct Cli {
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Write records to this path instead of standard output.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Random seed for Monte Carlo runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<CliCommand>,
}

#[derive(Debug, Clone, Args, Default)]
struct NetArgs {
    /// Caching policy: deterministic or stochastic.
    #[arg(long)]
    policy: Option<String>,
    /// Number of users N.
    #[arg(long)]
    n: Option<u64>,
    /// Library size m.
    #[arg(long)]
    m: Option<u64>,
    /// Popularity skew exponent.
    #[arg(long = "gamma-r")]
    gamma_r: Option<f64>,
    /// Caching skew exponent (stochastic policy).
    #[arg(long = "gamma-c")]
    gamma_c: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Analytical mode probabilities of one configuration.
    Analyze {
        #[command(flatten)]
        net: NetArgs,
        /// Engine: auto, closed-form, exact, fast, or monte-carlo.
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        /// Permutation budget of the exact engine.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Monte Carlo estimation of one configuration.
    Simulate {
        #[command(flatten)]
        net: NetArgs,
        /// Number of trials (required).
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Parameter sweeps, ad hoc or from a named preset.
    Sweep {
        #[command(flatten)]
        net: NetArgs,
        /// Built-in preset (fig2..fig6); overrides param/values.
        #[arg(long)]
        preset: Option<String>,
        /// Swept parameter: n, m, gamma-r, or gamma-c.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated, strictly increasing values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Binomial PMF of a mode's node count.
    Pmf {
        #[command(flatten)]
        net: NetArgs,
        /// Mode or aggregate: SR, SR-HDTX, FDTR, BFD, TNFD, HDTX, HDRX,
        /// HO, HD, FD, TX, RX.
        #[arg(long)]
        mode: Option<String>,
        /// Mode probability; bypasses the engines.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Grid search for the caching skew that maximizes a metric.
    Optimize {
        #[command(flatten)]
        net: NetArgs,
        /// Metric to maximize: HD, FD, TX, or RX.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long = "gamma-c-min")]
        gamma_c_min: Option<f64>,
        #[arg(long = "gamma-c-max")]
        gamma_c_max: Option<f64>,
        #[arg(long = "gamma-c-step")]
        gamma_c_step: Option<f64>,
        /// fast (default) or monte-carlo.
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Cross-engine validation against Monte Carlo.
    Validate {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        trials: Option<u64>,
    },
}

/// Failure modes mapped onto exit codes: usage problems exit 2, domain
/// errors exit 1.
enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Domain(m) => m,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn domain(err: impl std::fmt::Display) -> Failure {
    Failure::Domain(err.to_string())
}

/// Everything a command needs after flags, config file, environment, and
/// defaults are merged.
struct Effective {
    file: FileConfig,
    seed: u64,
    out: Option<String>,
    format: OutputFormat,
}

/// Parses `argv`, runs the requested command, and returns the process
/// exit code. Records go to `--out` or standard output; diagnostics go
/// to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(matches) => matches,
        Err(err) => {
            // clap renders help/version on stdout (exit 0) and usage
            // errors on stderr (exit 2).
            let code = err.exit_code();
            let _ = err.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };

    match execute(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    let file = match &cli.config {
        Some(path) => load_config(path).map_err(|e| usage(format!("config: {e}")))?,
        None => FileConfig::default(),
    };

    let seed = match cli.seed.or(file.seed) {
        Some(seed) => seed,
        None => seed_from_env().map_err(usage)?.unwrap_or(DEFAULT_SEED),
    };
    let out = cli.out.clone().or_else(|| file.out.clone());
    let format = cli
        .format
        .clone()
        .or_else(|| file.format.clone())
        .map(|f| f.parse::<OutputFormat>().map_err(usage2))
        .transpose()?
        .unwrap_or(OutputFormat::Csv);

    let eff = Effective {
        file,
        seed,
        out,
        format,
    };

    let command = match cli.command {
        Some(command) => command,
        None => command_from_file(&eff)?,
    };

    let (recs, code) = dispatch(&command, &eff)?;
    emit(&recs, &eff)?;
    Ok(code)
}

fn usage2(err: cachemodes_core::Error) -> Failure {
    usage(err.to_string())
}

/// Builds the subcommand from a config file when none was given on the
/// command line.
fn command_from_file(eff: &Effective) -> Result<CliCommand, Failure> {
    let name = eff
        .file
        .command
        .as_deref()
        .ok_or_else(|| usage("no command given (pass a subcommand or a config file with `command`)"))?;
    let command = match name {
        "analyze" => CliCommand::Analyze {
            net: NetArgs::default(),
            engine: None,
            trials: None,
            cap: None,
        },
        "simulate" => CliCommand::Simulate {
            net: NetArgs::default(),
            trials: None,
        },
        "sweep" => CliCommand::Sweep {
            net: NetArgs::default(),
            preset: None,
            param: None,
            values: None,
            engine: None,
            trials: None,
            cap: None,
        },
        "pmf" => CliCommand::Pmf {
            net: NetArgs::default(),
            mode: None,
            p: None,
            engine: None,
            trials: None,
            cap: None,
        },
        "optimize" => CliCommand::Optimize {
            net: NetArgs::default(),
            metric: None,
            gamma_c_min: None,
            gamma_c_max: None,
            gamma_c_step: None,
            engine: None,
            trials: None,
        },
        "validate" => CliCommand::Validate {
            net: NetArgs::default(),
            trials: None,
        },
        other => return Err(usage(format!("unknown command `{other}` in config file"))),
    };
    Ok(command)
}

/// Flag value, else config-file value, else the field default.
macro_rules! merged {
    ($flag:expr, $file:expr) => {
        $flag.clone().or_else(|| $file.clone())
    };
}

fn network_config(net: &NetArgs, eff: &Effective, command: &str) -> Result<NetworkConfig, Failure> {
    let policy: Policy = merged!(net.policy, eff.file.policy)
        .ok_or_else(|| usage(format!("{command} requires --policy")))?
        .parse()
        .map_err(usage2)?;
    let n = merged!(net.n, eff.file.n).ok_or_else(|| usage(format!("{command} requires --n")))?;
    let m = merged!(net.m, eff.file.m).ok_or_else(|| usage(format!("{command} requires --m")))?;
    let gamma_r = merged!(net.gamma_r, eff.file.gamma_r)
        .ok_or_else(|| usage(format!("{command} requires --gamma-r")))?;
    let gamma_c = merged!(net.gamma_c, eff.file.gamma_c).unwrap_or(0.0);
    if policy == Policy::Stochastic
        && net.gamma_c.is_none()
        && eff.file.gamma_c.is_none()
        && command != "optimize"
    {
        return Err(usage(format!(
            "{command} with the stochastic policy requires --gamma-c"
        )));
    }
    NetworkConfig::new(policy, n as usize, m as usize, gamma_r, gamma_c).map_err(domain)
}

fn engine_choice(flag: &Option<String>, eff: &Effective) -> Result<EngineChoice, Failure> {
    match merged!(flag, eff.file.engine) {
        Some(text) => text.parse().map_err(usage2),
        None => Ok(EngineChoice::Auto),
    }
}

fn eval_options(trials: &Option<u64>, cap: &Option<u64>, eff: &Effective) -> EvalOptions {
    EvalOptions {
        trials: merged!(trials, eff.file.trials).unwrap_or(DEFAULT_TRIALS),
        seed: eff.seed,
        cap: merged!(cap, eff.file.cap).unwrap_or(DEFAULT_PERMUTATION_CAP),
    }
}

fn dispatch(command: &CliCommand, eff: &Effective) -> Result<(Vec<ResultRecord>, i32), Failure> {
    match command {
        CliCommand::Analyze {
            net,
            engine,
            trials,
            cap,
        } => {
            let config = network_config(net, eff, "analyze")?;
            let engine = engine_choice(engine, eff)?;
            let options = eval_options(trials, cap, eff);
            if engine == EngineChoice::MonteCarlo {
                report_seed(eff.seed);
            }
            let point = evaluate(&config, engine, &options).map_err(domain)?;
            let mut record = modes_record(&config, &point);
            if point.std_errors.is_some() {
                record.set("trials", Cell::Int(options.trials));
                record.set("seed", Cell::Int(eff.seed));
            }
            Ok((vec![record], 0))
        }
        CliCommand::Simulate { net, trials } => {
            let config = network_config(net, eff, "simulate")?;
            let trials = merged!(trials, eff.file.trials)
                .ok_or_else(|| usage("simulate requires --trials"))?;
            let options = EvalOptions {
                trials,
                seed: eff.seed,
                cap: DEFAULT_PERMUTATION_CAP,
            };
            report_seed(eff.seed);
            let point = evaluate(&config, EngineChoice::MonteCarlo, &options).map_err(domain)?;
            let mut record = modes_record(&config, &point);
            record.set("trials", Cell::Int(trials));
            record.set("seed", Cell::Int(eff.seed));
            Ok((vec![record], 0))
        }
        CliCommand::Sweep {
            net,
            preset: preset_flag,
            param,
            values,
            engine,
            trials,
            cap,
        } => {
            let options = eval_options(trials, cap, eff);
            let specs = match merged!(preset_flag, eff.file.preset) {
                Some(name) => {
                    let mut specs = preset(&name).ok_or_else(|| {
                        usage(format!(
                            "unknown preset `{name}` (available: {})",
                            PRESET_NAMES.join(", ")
                        ))
                    })?;
                    for spec in &mut specs {
                        spec.options = options;
                    }
                    specs
                }
                None => {
                    let config = network_config(net, eff, "sweep")?;
                    let param: SweepParam = merged!(param, eff.file.param)
                        .ok_or_else(|| usage("sweep requires --param or --preset"))?
                        .parse()
                        .map_err(usage2)?;
                    let values = merged!(values, eff.file.values)
                        .ok_or_else(|| usage("sweep requires --values"))?;
                    let engines = vec![engine_choice(engine, eff)?];
                    vec![SweepSpec {
                        label: format!("{param}-sweep"),
                        param,
                        values,
                        base: config,
                        engines,
                        options,
                    }]
                }
            };
            if specs.iter().any(|s| {
                s.engines.contains(&EngineChoice::MonteCarlo)
                    || s.engines.contains(&EngineChoice::Auto)
            }) {
                report_seed(eff.seed);
            }
            let mut recs = Vec::new();
            for spec in &specs {
                let result = run_sweep(spec).map_err(domain)?;
                for row in &result.rows {
                    let mut record = match (&row.outcome, &row.config) {
                        (Ok(point), Some(config)) => {
                            let mut record = modes_record(config, point);
                            if point.std_errors.is_some() {
                                record.set("trials", Cell::Int(spec.options.trials));
                                record.set("seed", Cell::Int(eff.seed));
                            }
                            record
                        }
                        (Err(message), _) => {
                            let mut record = ResultRecord::new(MODES_SCHEMA);
                            record.set("error", Cell::Text(message.clone()));
                            record
                        }
                        (Ok(_), None) => unreachable!("evaluated rows carry their config"),
                    };
                    record.set("sweep", Cell::Text(result.label.clone()));
                    record.set("swept_param", Cell::Text(result.param.to_string()));
                    record.set("swept_value", Cell::Float(row.value));
                    recs.push(record);
                }
            }
            Ok((recs, 0))
        }
        CliCommand::Pmf {
            net,
            mode,
            p,
            engine,
            trials,
            cap,
        } => {
            let stat: ModeStat = merged!(mode, eff.file.mode)
                .ok_or_else(|| usage("pmf requires --mode"))?
                .parse()
                .map_err(usage2)?;
            let n = merged!(net.n, eff.file.n).ok_or_else(|| usage("pmf requires --n"))?;
            let mut record = ResultRecord::new(PMF_SCHEMA);
            record.set("mode", Cell::Text(stat.to_string()));
            record.set("n_users", Cell::Int(n));
            let prob = match merged!(p, eff.file.p) {
                Some(p) => p,
                None => {
                    let config = network_config(net, eff, "pmf")?;
                    let engine = engine_choice(engine, eff)?;
                    let options = eval_options(trials, cap, eff);
                    if engine == EngineChoice::MonteCarlo {
                        report_seed(eff.seed);
                        record.set("trials", Cell::Int(options.trials));
                        record.set("seed", Cell::Int(eff.seed));
                    }
                    let point = evaluate(&config, engine, &options).map_err(domain)?;
                    record.set("policy", Cell::Text(config.policy().to_string()));
                    record.set("engine", Cell::Text(point.modes.provenance.to_string()));
                    record.set("library_size", Cell::Int(config.library_size() as u64));
                    record.set("gamma_r", Cell::Float(config.gamma_r()));
                    record.set("gamma_c", Cell::Float(config.gamma_c()));
                    stat_probability(stat, &point).map_err(domain)?
                }
            };
            let pmf = mode_pmf(n, prob).map_err(domain)?;
            record.set("p", Cell::Float(prob));
            let mut recs = Vec::with_capacity(n as usize + 1);
            for (k, &mass) in pmf.masses().iter().enumerate() {
                let mut row = record.clone();
                row.set("k", Cell::Int(k as u64));
                row.set("mass", Cell::Float(mass));
                recs.push(row);
            }
            Ok((recs, 0))
        }
        CliCommand::Optimize {
            net,
            metric,
            gamma_c_min,
            gamma_c_max,
            gamma_c_step,
            engine,
            trials,
        } => {
            let metric: Aggregate = merged!(metric, eff.file.metric)
                .ok_or_else(|| usage("optimize requires --metric"))?
                .parse()
                .map_err(usage2)?;
            let config = network_config(net, eff, "optimize")?;
            let lo = merged!(gamma_c_min, eff.file.gamma_c_min).unwrap_or(0.0);
            let hi = merged!(gamma_c_max, eff.file.gamma_c_max).unwrap_or(4.0);
            let step = merged!(gamma_c_step, eff.file.gamma_c_step).unwrap_or(0.1);
            if !matches!(step.partial_cmp(&0.0), Some(std::cmp::Ordering::Greater)) || hi < lo {
                return Err(usage("optimize needs gamma_c_max >= gamma_c_min and a positive step"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            let grid = float_grid(lo, step, count);
            let engine = engine_choice(engine, eff)?;
            let options = eval_options(trials, &None, eff);
            if engine == EngineChoice::MonteCarlo {
                report_seed(eff.seed);
            }
            let result =
                optimize_gamma_c(metric, &grid, &config, engine, &options).map_err(domain)?;
            let mut recs = Vec::with_capacity(result.curve.len());
            for point in &result.curve {
                let config = config.with_gamma_c(point.gamma_c).map_err(domain)?;
                let mut record = modes_record(&config, &point.point);
                record.set("metric", Cell::Text(metric.to_string()));
                record.set("metric_value", Cell::Float(point.value));
                if point.point.std_errors.is_some() {
                    record.set("trials", Cell::Int(options.trials));
                    record.set("seed", Cell::Int(eff.seed));
                }
                if point.gamma_c == result.gamma_c_star {
                    record.set("is_optimum", Cell::Bool(true));
                    record.set("at_boundary", Cell::Bool(result.at_boundary));
                }
                recs.push(record);
            }
            eprintln!(
                "optimum: {} is maximized at gamma_c = {} (value {:.6}{})",
                metric,
                result.gamma_c_star,
                result.value,
                if result.at_boundary {
                    ", on the grid boundary"
                } else {
                    ""
                }
            );
            Ok((recs, 0))
        }
        CliCommand::Validate { net, trials } => {
            let config = network_config(net, eff, "validate")?;
            let trials = merged!(trials, eff.file.trials).unwrap_or(DEFAULT_TRIALS);
            report_seed(eff.seed);
            let report = validate(&config, trials, eff.seed).map_err(domain)?;
            eprintln!("{report}");
            let mut recs = Vec::new();
            for (_, point) in &report.points {
                let mut record = modes_record(&config, point);
                if point.std_errors.is_some() {
                    record.set("trials", Cell::Int(trials));
                    record.set("seed", Cell::Int(eff.seed));
                }
                recs.push(record);
            }
            Ok((recs, if report.passed { 0 } else { 1 }))
        }
    }
}

fn report_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

fn stat_probability(stat: ModeStat, point: &EvaluatedPoint) -> cachemodes_core::Result<f64> {
    Ok(match stat {
        ModeStat::Mode(mode) => point.modes.get(mode),
        ModeStat::Aggregate(Aggregate::Hd) => point.aggregates.p_hd,
        ModeStat::Aggregate(Aggregate::Fd) => point.aggregates.p_fd,
        ModeStat::Aggregate(Aggregate::Tx) => point.aggregates.p_tx,
        ModeStat::Aggregate(Aggregate::Rx) => point.aggregates.p_rx,
        ModeStat::Bfd | ModeStat::Tnfd => {
            let split = point.modes.split.as_ref().ok_or_else(|| {
                cachemodes_core::Error::InvalidArgument(format!(
                    "the {} engine does not provide the BFD/TNFD split",
                    point.modes.provenance
                ))
            })?;
            match stat {
                ModeStat::Bfd => split.p_bfd,
                _ => split.p_tnfd,
            }
        }
    })
}

/// Fills a modes-schema record from one evaluated point.
fn modes_record(config: &NetworkConfig, point: &EvaluatedPoint) -> ResultRecord {
    let mut record = ResultRecord::new(MODES_SCHEMA);
    record.set("policy", Cell::Text(config.policy().to_string()));
    record.set("engine", Cell::Text(point.modes.provenance.to_string()));
    record.set("n_users", Cell::Int(config.num_users() as u64));
    record.set("library_size", Cell::Int(config.library_size() as u64));
    record.set("gamma_r", Cell::Float(config.gamma_r()));
    record.set("gamma_c", Cell::Float(config.gamma_c()));
    for (mode, key) in Mode::ALL.into_iter().zip([
        "p_sr",
        "p_sr_hdtx",
        "p_fdtr",
        "p_hdtx",
        "p_hdrx",
        "p_ho",
    ]) {
        record.set(key, Cell::Float(point.modes.get(mode)));
    }
    if let Some(split) = &point.modes.split {
        record.set("p_bfd", Cell::Float(split.p_bfd));
        record.set("p_tnfd", Cell::Float(split.p_tnfd));
    }
    record.set("p_hd", Cell::Float(point.aggregates.p_hd));
    record.set("p_fd", Cell::Float(point.aggregates.p_fd));
    record.set("p_tx", Cell::Float(point.aggregates.p_tx));
    record.set("p_rx", Cell::Float(point.aggregates.p_rx));
    if let Some(se) = &point.std_errors {
        for (value, key) in se.iter().zip([
            "se_sr",
            "se_sr_hdtx",
            "se_fdtr",
            "se_hdtx",
            "se_hdrx",
            "se_ho",
        ]) {
            record.set(key, Cell::Float(*value));
        }
    }
    if let Some((se_bfd, se_tnfd)) = point.split_std_errors {
        record.set("se_bfd", Cell::Float(se_bfd));
        record.set("se_tnfd", Cell::Float(se_tnfd));
    }
    record
}

fn emit(recs: &[ResultRecord], eff: &Effective) -> Result<(), Failure> {
    match &eff.out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| Failure::Domain(format!("{path}: {e}")))?;
            let mut writer = std::io::BufWriter::new(file);
            write_records(recs, eff.format, &mut writer)
                .map_err(|e| Failure::Domain(format!("{path}: {e}")))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_records(recs, eff.format, &mut lock)
                .and_then(|()| lock.flush())
                .map_err(|e| Failure::Domain(e.to_string()))
        }
    }
}
