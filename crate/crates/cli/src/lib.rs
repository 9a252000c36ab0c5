//! Command-line runner: argument and config-file parsing, validation,
//! execution on a sized thread pool, and atomic output.

use std::ffi::OsString;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};

use shufflecut::exact::{Model, DEFAULT_STATE_CAP};
use shufflecut::lab::cutoff::default_horizon;
use shufflecut::lab::{
    analytic_suite, area_audit, cutoff_profile, list_experiments, separation_profile,
    three_phase_schedule, tv_upper_curve, wilson_sandwich, AnalyticParams, AreaAuditParams,
    Coupling, CutoffParams, ExperimentReport, KRule, Mode, ModelKind, SeparationParams,
    ThreePhaseParams, TvUpperParams, WilsonSandwichParams,
};
use shufflecut::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAP: i32 = 3;

/// Environment variable overriding the enumeration cap.
pub const STATE_CAP_VAR: &str = "SHUFFLECUT_STATE_CAP";

#[derive(Debug, Parser)]
#[command(
    name = "shufflecut",
    version,
    about = "Run shuffle and exclusion-process experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the experiments with a one-line description each
    List,
    /// Two-card and two-site closed forms against every exact routine
    Analytic(Opts),
    /// Corner-flip coupling: per-event area steps, mean area, merge times
    AreaAudit(Opts),
    /// Mixing times T(eps) from exact or simulated distance profiles
    Cutoff(Opts),
    /// Separation from the top state with the extremal and half-time identities
    Separation(Opts),
    /// Censored three-phase schedule from the identity with structural checks
    ThreePhase(Opts),
    /// Coupling upper curve for the distance from the worst start
    TvUpper(Opts),
    /// Exact distance between the first-mode lower bound and 10k exp(-lambda t)
    WilsonSandwich(Opts),
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// TOML file with experiment settings; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub settings: Settings,

    #[arg(long, hide = true)]
    pub inject_failure: bool,
}

/// Experiment settings, shared by the flags and the config file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Model for the cutoff experiment: at or sep
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Number of cards or sites; a comma-separated list for the cutoff
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Option<Vec<usize>>,
    /// Particle count, or "half" for floor(N/2)
    #[arg(long)]
    pub k: Option<KRule>,
    /// Distance levels (cutoff) or the area threshold step (area-audit)
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub eps: Option<Vec<f64>>,
    /// exact or mc
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Explicit time grid, comma separated
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// End of the default time grid, or of the cutoff search
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of points of the default time grid
    #[arg(long)]
    pub points: Option<usize>,
    /// grand or corner-flip
    #[arg(long, value_parser = parse_coupling)]
    pub coupling: Option<Coupling>,
    /// Simulation horizon for the area audit
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Block parameter: K = ceil(1/delta) blocks
    #[arg(long)]
    pub delta: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_coupling(s: &str) -> Result<Coupling, String> {
    match s {
        "grand" => Ok(Coupling::Grand),
        "corner-flip" => Ok(Coupling::CornerFlip),
        other => Err(format!(
            "unknown coupling {other:?}; expected grand or corner-flip"
        )),
    }
}

fn one_or_many<'de, D, T>(d: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(Some(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    }))
}

macro_rules! each_setting {
    ($m:ident) => {
        $m!(
            model, n, k, eps, mode, seed, replicas, times, t_max, points, coupling, horizon, delta,
            out, threads
        )
    };
}

impl Settings {
    /// Names of the settings that are present.
    pub fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! collect {
            ($($f:ident),*) => { $( if self.$f.is_some() { out.push(stringify!($f)); } )* };
        }
        each_setting!(collect);
        out
    }

    /// `self` over `file`; returns the overridden names.
    pub fn merge_over(self, file: Settings) -> (Settings, Vec<&'static str>) {
        let mut overridden = Vec::new();
        macro_rules! merge {
            ($($f:ident),*) => {
                Settings { $( $f: match (self.$f, file.$f) {
                    (Some(flag), Some(f)) => {
                        if flag != f {
                            overridden.push(stringify!($f));
                        }
                        Some(flag)
                    }
                    (flag, f) => flag.or(f),
                } ),* }
            };
        }
        let merged = each_setting!(merge);
        (merged, overridden)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Configuration rejected before any work.
    Invalid(String),
    /// An exact computation would exceed the state cap.
    Cap(String),
    /// The run itself failed.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Cap(_) => EXIT_CAP,
            CliError::Run(_) => EXIT_VERDICT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid configuration: {m}"),
            CliError::Cap(m) => write!(f, "refused: {m}"),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CapExceeded { .. } => CliError::Cap(e.to_string()),
            Error::InvalidParameter(_)
            | Error::OutOfRange { .. }
            | Error::Parse(_)
            | Error::ModelMismatch(_)
            | Error::Precondition(_) => CliError::Invalid(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

/// Parameters of one experiment, validated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", content = "params", rename_all = "kebab-case")]
pub enum Params {
    Analytic(AnalyticParams),
    AreaAudit(AreaAuditParams),
    Cutoff(CutoffParams),
    Separation(SeparationParams),
    ThreePhase(ThreePhaseParams),
    TvUpper(TvUpperParams),
    WilsonSandwich(WilsonSandwichParams),
}

impl Params {
    pub fn name(&self) -> &'static str {
        match self {
            Params::Analytic(_) => "analytic",
            Params::AreaAudit(_) => "area-audit",
            Params::Cutoff(_) => "cutoff",
            Params::Separation(_) => "separation",
            Params::ThreePhase(_) => "three-phase",
            Params::TvUpper(_) => "tv-upper",
            Params::WilsonSandwich(_) => "wilson-sandwich",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub inject_failure: bool,
}

impl RunConfig {
    /// The configuration recorded in output headers.
    pub fn to_json(&self) -> Value {
        json!({
            "experiment": self.params.name(),
            "params": serde_json::to_value(&self.params).expect("serializable")["params"],
            "seed": self.seed,
            "threads": self.threads,
        })
    }
}

fn allowed_keys(experiment: &str) -> &'static [&'static str] {
    match experiment {
        "analytic" => &["out", "threads", "seed", "mode", "times", "t_max", "points"],
        "area-audit" => &[
            "out", "threads", "seed", "mode", "n", "k", "eps", "delta", "replicas", "horizon",
            "points",
        ],
        "cutoff" => &[
            "out", "threads", "seed", "mode", "model", "n", "k", "eps", "replicas", "t_max",
        ],
        "separation" | "wilson-sandwich" => &[
            "out", "threads", "seed", "mode", "n", "k", "times", "t_max", "points",
        ],
        "three-phase" => &["out", "threads", "seed", "mode", "n", "delta", "replicas"],
        "tv-upper" => &[
            "out", "threads", "seed", "mode", "n", "k", "times", "t_max", "points", "replicas",
            "coupling",
        ],
        _ => &[],
    }
}

/// State cap from the environment, or the library default.
pub fn state_cap() -> Result<u128, CliError> {
    match std::env::var(STATE_CAP_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Invalid(format!(
                "{STATE_CAP_VAR} must be a positive integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn single_n(s: &Settings) -> Result<usize, CliError> {
    match s.n.as_deref() {
        None => Err(invalid("missing required setting n")),
        Some([n]) => Ok(*n),
        Some(_) => Err(invalid("this experiment takes a single n")),
    }
}

fn particle_count(s: &Settings, n: usize) -> usize {
    s.k.unwrap_or(KRule::Half).resolve(n)
}

fn check_mode(s: &Settings, supported: &[Mode], name: &str) -> Result<(), CliError> {
    match s.mode {
        Some(m) if !supported.contains(&m) => {
            Err(invalid(format!("{name} does not support mode {m:?}")))
        }
        _ => Ok(()),
    }
}

/// Explicit times, or `points` equally spaced times on `[0, t_max]`.
fn time_grid(
    s: &Settings,
    default_max: impl FnOnce() -> Result<f64, CliError>,
    default_points: usize,
) -> Result<Vec<f64>, CliError> {
    if let Some(t) = &s.times {
        if s.t_max.is_some() || s.points.is_some() {
            return Err(invalid("give either times or t_max/points, not both"));
        }
        return Ok(t.clone());
    }
    let t_max = match s.t_max {
        Some(t) => t,
        None => default_max()?,
    };
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid(format!("t_max must be positive, got {t_max}")));
    }
    let points = s.points.unwrap_or(default_points);
    if points < 2 {
        return Err(invalid("points must be at least 2"));
    }
    Ok((0..points)
        .map(|i| t_max * i as f64 / (points - 1) as f64)
        .collect())
}

fn sep_horizon(n: usize, k: usize) -> Result<f64, CliError> {
    Ok(2.0 * default_horizon(ModelKind::Sep, n, k)?)
}

/// Validates merged settings against the experiment's schema.
pub fn build_config(
    experiment: &str,
    s: Settings,
    inject_failure: bool,
) -> Result<RunConfig, CliError> {
    let allowed = allowed_keys(experiment);
    if allowed.is_empty() {
        return Err(invalid(format!("unknown experiment {experiment:?}")));
    }
    let stray: Vec<_> = s
        .present()
        .into_iter()
        .filter(|k| !allowed.contains(k))
        .collect();
    if !stray.is_empty() {
        return Err(invalid(format!(
            "{experiment} does not accept: {}",
            stray.join(", ")
        )));
    }
    if s.threads == Some(0) {
        return Err(invalid("threads must be positive"));
    }
    let seed = s.seed.unwrap_or(0);
    let replicas = s.replicas.unwrap_or(1000);
    let params = match experiment {
        "analytic" => {
            check_mode(&s, &[Mode::Exact], experiment)?;
            let times = if s.times.is_none() && s.t_max.is_none() && s.points.is_none() {
                AnalyticParams::default().times
            } else {
                time_grid(&s, || Ok(3.0), 20)?
            };
            Params::Analytic(AnalyticParams { times })
        }
        "area-audit" => {
            check_mode(&s, &[Mode::Mc], experiment)?;
            let n = single_n(&s)?;
            let k = particle_count(&s, n);
            let eps = match s.eps.as_deref() {
                None => s.delta.unwrap_or(1.0) / 100.0,
                Some([e]) => *e,
                Some(_) => return Err(invalid("area-audit takes a single eps")),
            };
            let horizon = match s.horizon {
                Some(h) => h,
                None => sep_horizon(n, k)?,
            };
            Params::AreaAudit(AreaAuditParams {
                n,
                k,
                horizon,
                replicas,
                seed,
                eps,
                grid_points: s.points.unwrap_or(32),
            })
        }
        "cutoff" => {
            let ns =
                s.n.clone()
                    .ok_or_else(|| invalid("missing required setting n"))?;
            Params::Cutoff(CutoffParams {
                model: s.model.unwrap_or(ModelKind::Sep),
                ns,
                k: s.k.unwrap_or(KRule::Half),
                eps: s.eps.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75]),
                mode: s.mode.unwrap_or(Mode::Exact),
                replicas,
                seed,
                state_cap: state_cap()?,
                t_max: s.t_max,
            })
        }
        "separation" | "wilson-sandwich" => {
            check_mode(&s, &[Mode::Exact], experiment)?;
            let n = single_n(&s)?;
            let k = particle_count(&s, n);
            let times = time_grid(&s, || sep_horizon(n, k), 32)?;
            let state_cap = state_cap()?;
            if experiment == "separation" {
                Params::Separation(SeparationParams {
                    n,
                    k,
                    times,
                    state_cap,
                })
            } else {
                Params::WilsonSandwich(WilsonSandwichParams {
                    n,
                    k,
                    times,
                    state_cap,
                })
            }
        }
        "three-phase" => {
            check_mode(&s, &[Mode::Mc], experiment)?;
            Params::ThreePhase(ThreePhaseParams {
                n: single_n(&s)?,
                delta: s.delta.unwrap_or(0.5),
                replicas,
                seed,
            })
        }
        "tv-upper" => {
            check_mode(&s, &[Mode::Mc], experiment)?;
            let n = single_n(&s)?;
            let k = particle_count(&s, n);
            let times = time_grid(&s, || sep_horizon(n, k), 32)?;
            Params::TvUpper(TvUpperParams {
                n,
                k,
                times,
                replicas,
                seed,
                coupling: s.coupling.unwrap_or_default(),
            })
        }
        _ => unreachable!("checked by allowed_keys"),
    };
    precheck_cap(&params)?;
    Ok(RunConfig {
        params,
        seed,
        out: s.out.unwrap_or_else(|| PathBuf::from(".")),
        threads: s.threads,
        inject_failure,
    })
}

/// Refuses exact requests above the cap before any work starts.
fn precheck_cap(params: &Params) -> Result<(), CliError> {
    let (model, cap) = match params {
        Params::Separation(p) => (Model::exclusion(p.n, p.k)?, p.state_cap),
        Params::WilsonSandwich(p) => (Model::exclusion(p.n, p.k)?, p.state_cap),
        Params::Cutoff(p) if p.mode == Mode::Exact => {
            for &n in &p.ns {
                let model = match p.model {
                    ModelKind::At => Model::shuffle(n)?,
                    ModelKind::Sep => Model::exclusion(n, p.k.resolve(n))?,
                };
                if model.size() > p.state_cap {
                    return Err(Error::CapExceeded {
                        size: model.size(),
                        cap: p.state_cap,
                    }
                    .into());
                }
            }
            return Ok(());
        }
        _ => return Ok(()),
    };
    if model.size() > cap {
        return Err(Error::CapExceeded {
            size: model.size(),
            cap,
        }
        .into());
    }
    Ok(())
}

/// Reads a TOML config file; unknown keys are rejected.
pub fn read_config_file(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Merges the config file under the flags and validates the result.
/// Overridden file values are reported on stderr.
pub fn parse_config(experiment: &str, opts: Opts) -> Result<RunConfig, CliError> {
    let settings = match &opts.config {
        Some(path) => {
            let file = read_config_file(path)?;
            let (merged, overridden) = opts.settings.merge_over(file);
            for key in overridden {
                eprintln!(
                    "shufflecut: flag --{} overrides the value in {}",
                    key.replace('_', "-"),
                    path.display()
                );
            }
            merged
        }
        None => opts.settings,
    };
    build_config(experiment, settings, opts.inject_failure)
}

/// Runs the experiment on the configured pool.
pub fn execute(config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Run(e.to_string()))?;
    let mut report = pool.install(|| match &config.params {
        Params::Analytic(p) => analytic_suite(p),
        Params::AreaAudit(p) => area_audit(p),
        Params::Cutoff(p) => cutoff_profile(p),
        Params::Separation(p) => separation_profile(p),
        Params::ThreePhase(p) => three_phase_schedule(p),
        Params::TvUpper(p) => tv_upper_curve(p),
        Params::WilsonSandwich(p) => wilson_sandwich(p),
    })?;
    if config.inject_failure {
        report.verdict("injected failure", false, Some("test hook".into()));
    }
    Ok(report)
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

/// Writes `<experiment>.csv` and `<experiment>.json` into the output directory.
pub fn write_outputs(
    config: &RunConfig,
    report: &ExperimentReport,
) -> Result<(PathBuf, PathBuf), CliError> {
    let io = |e: std::io::Error| CliError::Run(format!("writing to {}: {e}", config.out.display()));
    std::fs::create_dir_all(&config.out).map_err(io)?;
    let header = config.to_json();
    let name = config.params.name();
    let csv = write_atomic(
        &config.out,
        &format!("{name}.csv"),
        &report.to_csv(Some(&header)),
    )
    .map_err(io)?;
    let verdicts =
        serde_json::to_string_pretty(&report.verdict_json(Some(&header))).expect("serializable");
    let json =
        write_atomic(&config.out, &format!("{name}.json"), &(verdicts + "\n")).map_err(io)?;
    Ok((csv, json))
}

/// Runs a validated configuration and returns the exit code.
pub fn run(config: &RunConfig) -> i32 {
    let outcome = execute(config).and_then(|report| {
        let paths = write_outputs(config, &report)?;
        Ok((report, paths))
    });
    match outcome {
        Ok((report, (csv, json))) => {
            for v in &report.verdicts {
                let status = if v.pass { "pass" } else { "FAIL" };
                match &v.witness {
                    Some(w) if !v.pass => println!("{status}  {}  ({w})", v.check),
                    _ => println!("{status}  {}", v.check),
                }
            }
            println!("wrote {} and {}", csv.display(), json.display());
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_VERDICT
            }
        }
        Err(e) => {
            eprintln!("shufflecut: {e}");
            e.exit_code()
        }
    }
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let (name, opts) = match cli.command {
        Command::List => {
            for e in list_experiments() {
                println!("{:<16} {}", e.name, e.doc);
            }
            return EXIT_OK;
        }
        Command::Analytic(o) => ("analytic", o),
        Command::AreaAudit(o) => ("area-audit", o),
        Command::Cutoff(o) => ("cutoff", o),
        Command::Separation(o) => ("separation", o),
        Command::ThreePhase(o) => ("three-phase", o),
        Command::TvUpper(o) => ("tv-upper", o),
        Command::WilsonSandwich(o) => ("wilson-sandwich", o),
    };
    match parse_config(name, opts) {
        Ok(config) => run(&config),
        Err(e) => {
            eprintln!("shufflecut: {e}");
            e.exit_code()
        }
    }
}
