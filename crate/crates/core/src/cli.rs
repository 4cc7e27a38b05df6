//! Command-line surface.
//!
//! Every CSV output starts with `#` comment lines recording the tool version,
//! the subcommand, its effective configuration and the seed. JSON outputs
//! carry the same information under a `_meta` key.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bell::{chsh, chsh_scan, ChshSettings};
use crate::circle::{Angle, CircleError, Colouring, Mixture, ModelFile};
use crate::correlation::{grid, mixture_correlation, quantum_correlation, triangle_wave, PiecewiseLinearCorrelation};
use crate::lattice::{lattice_csv, LatticeColouring};
use crate::montecarlo::{
    empirical_correlation, run_experiment, run_log, run_log_csv, stream_rng, MonteCarloError, SettingSampler, Source,
};
use crate::optimize::{monotone_search, optimise_fixed_k, optimise_mixture, Metric, OptimizeError, SearchConfig};
use crate::spectral::{first_harmonic_bound_check, gull_diagnostic, Spectrum};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Optimize(#[from] OptimizeError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<CircleError> for CliError {
    fn from(e: CircleError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "ParseError",
            CliError::Validation(_) => "ValidationError",
            CliError::Usage(_) => "UsageError",
            CliError::Optimize(_) => "OptimizeError",
            CliError::Io(_) => "IoError",
        }
    }

    /// Single machine-parseable line.
    pub fn line(&self) -> String {
        format!("error kind={} message={}", self.kind(), json!(self.to_string()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "spindisk", version, about = "Spinning coloured disk model of classical EPR-B correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact correlation curve of a model, with quantum and triangle overlays.
    Corr(CorrArgs),
    /// Random k-switch colourings, one curve file per panel.
    DemoFigure(DemoArgs),
    /// Monte Carlo experiment under a model or quantum mechanics.
    Sim(SimArgs),
    /// Fourier spectrum and impossibility report.
    Spectrum(SpectrumArgs),
    /// Search for the model closest to -cos.
    Optimize(OptimizeArgs),
    /// CHSH value scan.
    Chsh(ChshArgs),
    /// Lattice correlation by integer counting.
    Lattice(LatticeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CorrArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 721)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 4)]
    pub nswitch: usize,
    #[arg(long, default_value_t = 12)]
    pub panels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 721)]
    pub grid: usize,
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimArgs {
    /// Model file; omit with --quantum.
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub quantum: bool,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Explicit setting pairs `alpha:beta,alpha:beta,...`, chosen uniformly per run.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Both parties choose uniformly from `n` equally spaced angles.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Both parties choose uniformly on [0, 2pi).
    #[arg(long)]
    pub continuous: bool,
    #[arg(long, default_value_t = 100_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Count table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Empirical correlation CSV.
    #[arg(long)]
    pub corr_out: Option<PathBuf>,
    /// Per-run log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = crate::spectral::DEFAULT_N_MAX)]
    pub nmax: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gull report JSON; printed to stderr when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum MetricArg {
    L2,
    Sup,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long, value_enum, default_value_t = MetricArg::L2)]
    pub metric: MetricArg,
    #[arg(long, conflicts_with = "pool")]
    pub k: Option<usize>,
    /// Comma-separated switch counts for a Frank-Wolfe mixture search.
    #[arg(long)]
    pub pool: Option<String>,
    #[arg(long)]
    pub monotone: bool,
    #[arg(long, default_value_t = 32)]
    pub starts: usize,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChshArgs {
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub quantum: bool,
    #[arg(long, default_value_t = PI / 90.0)]
    pub scan_step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LatticeArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn header(command: &str, config: &impl Serialize, seed: Option<u64>) -> String {
    let mut h = format!("# {TOOL} {VERSION}\n# command: {command}\n");
    h.push_str(&format!("# config: {}\n", serde_json::to_string(config).unwrap_or_default()));
    if let Some(s) = seed {
        h.push_str(&format!("# seed: {s}\n"));
    }
    h
}

fn with_meta(mut value: serde_json::Value, command: &str, config: &impl Serialize, seed: Option<u64>) -> String {
    if let Some(obj) = value.as_object_mut() {
        obj.insert(
            "_meta".into(),
            json!({ "tool": TOOL, "version": VERSION, "command": command, "config": config, "seed": seed }),
        );
    }
    serde_json::to_string_pretty(&value).expect("json values serialise") + "\n"
}

/// Write to `path` atomically (temp file then rename), or to stdout.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(contents.as_bytes())?;
            tmp.persist(p).map_err(|e| CliError::Io(e.error))?;
            Ok(())
        }
    }
}

pub fn load_model(path: &Path) -> Result<Mixture, CliError> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

/// Parse a `{"theta": …}` colouring or `{"components": …}` mixture.
pub fn parse_model(text: &str) -> Result<Mixture, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let shaped = value.get("theta").is_some() || value.get("components").is_some();
    if !shaped {
        return Err(CliError::Parse("model needs a \"theta\" or \"components\" field".into()));
    }
    serde_json::from_value::<ModelFile>(value.clone())
        .map(ModelFile::into_mixture)
        .map_err(|_| {
            // re-run the typed parse to recover the validation message
            let err = if value.get("components").is_some() {
                serde_json::from_value::<Mixture>(value).err()
            } else {
                serde_json::from_value::<Colouring>(value).err()
            };
            CliError::Validation(err.map(|e| e.to_string()).unwrap_or_else(|| "invalid model".into()))
        })
}

/// `gamma,rho,cos_ref,tri_ref` rows on `n` points covering `[0, 2π]`.
pub fn curve_rows(pl: &PiecewiseLinearCorrelation, n: usize) -> String {
    let mut out = String::from("gamma,rho,cos_ref,tri_ref\n");
    for g in grid(n) {
        out.push_str(&format!(
            "{g:.16e},{:.16e},{:.16e},{:.16e}\n",
            pl.evaluate(g),
            quantum_correlation(g),
            triangle_wave(g)
        ));
    }
    out
}

pub fn cmd_corr(args: &CorrArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let pl = mixture_correlation(&model);
    let body = header("corr", args, None) + &curve_rows(&pl, args.grid);
    write_output(args.out.as_deref(), &body)
}

/// Random colouring with `k` i.i.d. uniform switches on `(0, π)`, sorted.
pub fn random_colouring(k: usize, seed: u64, index: u64) -> Colouring {
    use rand::Rng;
    let mut rng = stream_rng(seed, index);
    loop {
        let theta: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * PI).collect();
        if let Ok(c) = Colouring::new(theta) {
            return c;
        }
    }
}

pub fn demo_curves(nswitch: usize, panels: usize, seed: u64) -> Result<Vec<(Colouring, PiecewiseLinearCorrelation)>, CliError> {
    if !nswitch.is_multiple_of(2) {
        return Err(CliError::Usage(format!("nswitch must be even, got {nswitch}")));
    }
    if panels == 0 {
        return Err(CliError::Usage("panels must be at least 1".into()));
    }
    Ok((0..panels as u64)
        .map(|i| {
            let c = random_colouring(nswitch, seed, i);
            let pl = crate::correlation::exact_correlation(&c);
            (c, pl)
        })
        .collect())
}

pub fn cmd_demo_figure(args: &DemoArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.outdir)?;
    for (i, (c, pl)) in demo_curves(args.nswitch, args.panels, args.seed)?.into_iter().enumerate() {
        let mut body = header("demo-figure", args, Some(args.seed));
        body.push_str(&format!("# panel: {}\n# model: {}\n", i + 1, serde_json::to_string(&c).unwrap_or_default()));
        body.push_str(&curve_rows(&pl, args.grid));
        let path = args.outdir.join(format!("panel_{:02}.csv", i + 1));
        write_output(Some(&path), &body)?;
    }
    Ok(())
}

fn parse_pairs(s: &str) -> Result<Vec<(Angle, Angle)>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| CliError::Parse(format!("setting pair {p:?} is not alpha:beta")))?;
            let a: f64 = a.trim().parse().map_err(|_| CliError::Parse(format!("bad angle {a:?}")))?;
            let b: f64 = b.trim().parse().map_err(|_| CliError::Parse(format!("bad angle {b:?}")))?;
            Ok((Angle::new(a), Angle::new(b)))
        })
        .collect()
}

fn sim_sampler(args: &SimArgs) -> Result<SettingSampler, CliError> {
    let chosen = [
        args.alpha.is_some() || args.beta.is_some(),
        args.pairs.is_some(),
        args.grid.is_some(),
        args.continuous,
    ]
    .iter()
    .filter(|&&x| x)
    .count();
    if chosen != 1 {
        return Err(CliError::Usage(
            "choose exactly one of --alpha/--beta, --pairs, --grid, --continuous".into(),
        ));
    }
    if let Some(p) = &args.pairs {
        return Ok(SettingSampler::Pairs(parse_pairs(p)?));
    }
    if let Some(n) = args.grid {
        let angles: Vec<Angle> = (0..n).map(|j| Angle::new(std::f64::consts::TAU * j as f64 / n as f64)).collect();
        return Ok(SettingSampler::Grid {
            alphas: angles.clone(),
            betas: angles,
        });
    }
    if args.continuous {
        return Ok(SettingSampler::Continuous);
    }
    Ok(SettingSampler::Fixed(
        Angle::new(args.alpha.unwrap_or(0.0)),
        Angle::new(args.beta.unwrap_or(0.0)),
    ))
}

pub fn cmd_sim(args: &SimArgs) -> Result<(), CliError> {
    let model = match (&args.model, args.quantum) {
        (Some(_), true) => return Err(CliError::Usage("give a model file or --quantum, not both".into())),
        (None, false) => return Err(CliError::Usage("a model file or --quantum is required".into())),
        (Some(p), false) => Some(load_model(p)?),
        (None, true) => None,
    };
    let source = match &model {
        Some(m) => Source::Classical(m),
        None => Source::Quantum,
    };
    let sampler = sim_sampler(args)?;
    let table = run_experiment(source, &sampler, args.runs, args.seed)?;
    let head = header("sim", args, Some(args.seed));
    write_output(args.out.as_deref(), &(head.clone() + &table.to_csv()))?;

    if let Some(path) = &args.corr_out {
        let exact = model.as_ref().map(mixture_correlation);
        let mut body = head.clone() + "alpha,beta,n,estimate,std_error,exact\n";
        for e in empirical_correlation(&table) {
            let gamma = e.beta.radians() - e.alpha.radians();
            let reference = match &exact {
                Some(pl) => pl.evaluate(gamma),
                None => quantum_correlation(gamma),
            };
            body.push_str(&format!(
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}\n",
                e.alpha.radians(),
                e.beta.radians(),
                e.n,
                e.estimate,
                e.std_error,
                reference
            ));
        }
        write_output(Some(path), &body)?;
    }
    if let Some(path) = &args.log {
        let runs = run_log(source, &sampler, args.runs, args.seed)?;
        write_output(Some(path), &(head + &run_log_csv(&runs)))?;
    }
    Ok(())
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    if args.nmax == 0 {
        return Err(CliError::Usage("nmax must be at least 1".into()));
    }
    let model = load_model(&args.model)?;
    let spectrum = Spectrum::of_mixture(&model, args.nmax);
    let gull = gull_diagnostic(&spectrum, args.tol);
    let bound = first_harmonic_bound_check(&spectrum);
    let report = json!({
        "nonzero_count": gull.nonzero_count,
        "tail_mass": gull.tail_mass,
        "parseval_residual": gull.parseval_residual,
        "first_harmonic": bound,
        "convention": "cosine series; the quantum target -cos has one nonzero coefficient"
    });
    let mut body = header("spectrum", args, None);
    body.push_str(&format!("# gull: {}\n", serde_json::to_string(&report).unwrap_or_default()));
    body.push_str(&spectrum.to_csv());
    write_output(args.out.as_deref(), &body)?;
    let report = with_meta(report, "spectrum", args, None);
    match &args.report {
        Some(p) => write_output(Some(p), &report),
        None => {
            eprint!("{report}");
            Ok(())
        }
    }
}

fn parse_pool(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| CliError::Parse(format!("bad switch count {p:?}"))))
        .collect()
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    let metric = match args.metric {
        MetricArg::L2 => Metric::L2,
        MetricArg::Sup => Metric::Sup,
    };
    let cfg = SearchConfig {
        n_starts: args.starts,
        seed: args.seed,
        tol: args.tol,
        max_iter: args.max_iter,
        ..SearchConfig::default()
    };
    let result = match (&args.pool, args.k) {
        (Some(_), _) if args.monotone => {
            return Err(CliError::Usage("--monotone applies to a single --k search".into()))
        }
        (Some(pool), _) => optimise_mixture(&parse_pool(pool)?, metric, args.iterations, &cfg)?,
        (None, k) if args.monotone => monotone_search(k.unwrap_or(0), metric, &cfg)?,
        (None, k) => optimise_fixed_k(k.unwrap_or(0), metric, &cfg)?,
    };
    let value = serde_json::to_value(&result).expect("result serialises");
    write_output(args.out.as_deref(), &with_meta(value, "optimize", args, Some(args.seed)))
}

pub fn cmd_chsh(args: &ChshArgs) -> Result<(), CliError> {
    if !(args.scan_step > 0.0 && args.scan_step.is_finite()) {
        return Err(CliError::Usage("scan step must be positive".into()));
    }
    let reference = ChshSettings::new(0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0);
    let (scan, at_reference) = match (&args.model, args.quantum) {
        (Some(_), true) => return Err(CliError::Usage("give a model file or --quantum, not both".into())),
        (None, false) => return Err(CliError::Usage("a model file or --quantum is required".into())),
        (Some(p), false) => {
            let pl = mixture_correlation(&load_model(p)?);
            (chsh_scan(&pl, args.scan_step), chsh(&pl, &reference))
        }
        (None, true) => (
            chsh_scan(&quantum_correlation, args.scan_step),
            chsh(&quantum_correlation, &reference),
        ),
    };
    let value = json!({
        "max_abs_S": scan.max_abs_s,
        "settings": scan.argmax.as_array(),
        "grid_step": scan.grid_step,
        "S_at_reference": { "settings": reference.as_array(), "S": at_reference },
    });
    write_output(args.out.as_deref(), &with_meta(value, "chsh", args, None))
}

pub fn cmd_lattice(args: &LatticeArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.model)?;
    let lc: LatticeColouring = serde_json::from_str(&text).map_err(|e| {
        if e.is_data() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Parse(e.to_string())
        }
    })?;
    write_output(args.out.as_deref(), &(header("lattice", args, None) + &lattice_csv(&lc)))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Corr(a) => cmd_corr(a),
        Command::DemoFigure(a) => cmd_demo_figure(a),
        Command::Sim(a) => cmd_sim(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Chsh(a) => cmd_chsh(a),
        Command::Lattice(a) => cmd_lattice(a),
    }
}
