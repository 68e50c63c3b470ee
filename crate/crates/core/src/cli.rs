//! The `hmtsim` command line.
//!
//! Subcommands: `solve` (closed-form noiseless recovery), `estimate` (one
//! noisy two-stage run), `bound` (deviation-bound evaluation), `sweep-error`
//! and `sweep-rate` (Monte Carlo sweeps emitting CSV and optional SVG), and
//! `surface` (gain-magnitude grid).
//!
//! Settings resolve in order: built-in system-table defaults, then the
//! `HMTSIM_SEED` environment variable, then the TOML config file passed with
//! `--config`, then command-line flags. Exit codes: 0 success, 1 config or
//! usage error, 2 runtime error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bounds::{
    error_probability_bound, error_probability_bound_raw, log_error_probability_bound,
    squared_error, BoundParams,
};
use crate::channel::{achievable_rate, channel_gain, HmtGeometry, LinkGeometry, PhasePair};
use crate::error::Error;
use crate::estimator::{
    exact_means, solve_noiseless, two_stage_estimate, CenterRule, ProbeSet,
};
use crate::experiments::{
    fmt_sig, line_chart, render_gain_surface, run_error_probability_sweep, run_rate_sweep,
    ErrorSweepTable, ExperimentConfig, Method, RateSweepTable, Series, SurfaceTable, SweepCenter,
    UserPlacement,
};
use crate::signal::{dbm_to_watts, NoiseModel, PilotConfig, RngStream, SimulatedLink};

const SEED_ENV: &str = "HMTSIM_SEED";
const DEFAULT_SEED: u64 = 7;

/// Far-field metasurface beam steering: closed-form phase-shift estimation,
/// deviation bounds, and Monte Carlo sweeps.
#[derive(Debug, Parser)]
#[command(name = "hmtsim", version, about)]
struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover the direction cosines from exact probe means (noiseless).
    Solve(SolveArgs),
    /// Run one noisy two-stage estimation and report diagnostics.
    Estimate(EstimateArgs),
    /// Evaluate the deviation-probability bound for given non-centralities.
    Bound(BoundArgs),
    /// Sweep error probability over pilot powers and pilot counts.
    SweepError(SweepErrorArgs),
    /// Sweep mean achievable rate over pilot powers at a fixed budget.
    SweepRate(SweepRateArgs),
    /// Sample |H| on a grid over the phase domain.
    Surface(SurfaceArgs),
}

/// "a,b" pair of floats.
#[derive(Debug, Clone, Copy)]
struct Pair(f64, f64);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 2 {
            return Err(format!("expected two comma-separated numbers, got `{s}`"));
        }
        let a = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
        let b = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
        Ok(Pair(a, b))
    }
}

#[derive(Debug, Clone)]
struct FloatList(Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(FloatList)
    }
}

#[derive(Debug, Clone)]
struct CountList(Vec<u64>);

impl FromStr for CountList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(CountList)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// True direction cosines "a1,a2".
    #[arg(long)]
    alpha: Pair,
    /// Probe center "b1,b2".
    #[arg(long)]
    center: Pair,
    /// Probe step on axis 1 (K_x·v must be a positive integer).
    #[arg(long)]
    v: f64,
    /// Probe step on axis 2 (K_y·w must be a positive integer).
    #[arg(long)]
    w: f64,
    /// User distance in meters.
    #[arg(long)]
    d0: Option<f64>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CenterChoice {
    /// Fixed probe center "b1,b2".
    #[arg(long, group = "center_choice")]
    center: Option<Pair>,
    /// Pick the center by probing three spread candidates (3 pilots).
    #[arg(long, group = "center_choice")]
    select_center: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// True direction cosines "a1,a2".
    #[arg(long)]
    alpha: Pair,
    #[command(flatten)]
    center: CenterChoice,
    /// Total pilot budget N.
    #[arg(long)]
    pilots: u64,
    /// Pilot power in dBm.
    #[arg(long)]
    pilot_dbm: f64,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scatter path count (0 disables the perturbation).
    #[arg(long)]
    nlos_paths: Option<u32>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Pilots per probe epoch.
    #[arg(long)]
    n: u64,
    /// Deviation radius ε in [0, 1].
    #[arg(long)]
    eps: f64,
    /// Non-centralities "l2,l3,l4,l5" at the four offset probes.
    #[arg(long)]
    lambda: FloatList,
}

#[derive(Debug, Args)]
struct SweepErrorArgs {
    /// Pilot powers in dBm, comma separated.
    #[arg(long)]
    powers: Option<FloatList>,
    /// Total pilot counts, comma separated.
    #[arg(long)]
    counts: Option<CountList>,
    /// Deviation radii ε, comma separated.
    #[arg(long)]
    eps: Option<FloatList>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    d0: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG line chart here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepRateArgs {
    /// Pilot powers in dBm, comma separated.
    #[arg(long)]
    powers: Option<FloatList>,
    /// Pilot budget per trial (center selection included).
    #[arg(long)]
    count: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    d0: Option<f64>,
    /// Redraw the user direction uniformly each trial.
    #[arg(long)]
    random_user: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    /// True direction cosines "a1,a2".
    #[arg(long)]
    alpha: Option<Pair>,
    #[arg(long)]
    d0: Option<f64>,
    /// Grid points per axis (at least 16).
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG slice of |H| along axis 1 through the argmax.
    #[arg(long)]
    svg: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// config file

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    seed: Option<u64>,
    trials: Option<u64>,
    threads: Option<usize>,
    geometry: GeometrySection,
    link: LinkSection,
    noise: NoiseSection,
    pilots: PilotsSection,
    sweep: SweepSection,
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GeometrySection {
    wavelength: Option<f64>,
    surface_width: Option<f64>,
    surface_length: Option<f64>,
    element_spacing: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LinkSection {
    distance: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    radiation_factor: Option<f64>,
    random_user: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NoiseSection {
    sigma2_dbm: Option<f64>,
    nlos_paths: Option<u32>,
    nlos_offset_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PilotsSection {
    data_power_dbm: Option<f64>,
    rate_count: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SweepSection {
    error_powers_dbm: Option<Vec<f64>>,
    error_counts: Option<Vec<u64>>,
    epsilons: Option<Vec<f64>>,
    rate_powers_dbm: Option<Vec<f64>>,
    step_v: Option<f64>,
    step_w: Option<f64>,
    center: Option<[f64; 2]>,
    center_offset_lobes: Option<[f64; 2]>,
    stage0_offset_lobes: Option<f64>,
    grid_size: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutputSection {
    dir: Option<PathBuf>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    fn geometry(&self) -> Result<HmtGeometry, Error> {
        let g = &self.geometry;
        let wavelength = g.wavelength.unwrap_or(0.01);
        HmtGeometry::new(
            g.surface_width.unwrap_or(1.0),
            g.surface_length.unwrap_or(1.0),
            g.element_spacing.unwrap_or(wavelength / 4.0),
            wavelength,
        )
    }

    fn link(&self, d0_override: Option<f64>, alpha_override: Option<Pair>) -> Result<LinkGeometry, Error> {
        let l = &self.link;
        let alpha = alpha_override
            .map(|p| (p.0, p.1))
            .unwrap_or((l.alpha1.unwrap_or(0.68), l.alpha2.unwrap_or(-0.45)));
        LinkGeometry::new(
            d0_override.or(l.distance).unwrap_or(200.0),
            alpha.0,
            alpha.1,
            l.radiation_factor.unwrap_or(1.0),
        )
    }

    fn noise(&self, nlos_override: Option<u32>) -> Result<NoiseModel, Error> {
        let n = &self.noise;
        NoiseModel::new(
            dbm_to_watts(n.sigma2_dbm.unwrap_or(-115.0)),
            nlos_override.or(n.nlos_paths).unwrap_or(4),
            n.nlos_offset_db.unwrap_or(-20.0),
        )
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64, Error> {
        if let Some(s) = flag {
            return Ok(s);
        }
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(text) => text
                .parse::<u64>()
                .map_err(|e| Error::Config(format!("{SEED_ENV}=`{text}`: {e}"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    fn out_path(&self, flag: Option<PathBuf>, default_name: &str) -> PathBuf {
        flag.unwrap_or_else(|| {
            self.output
                .dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("."))
                .join(default_name)
        })
    }
}

// ---------------------------------------------------------------------------
// dispatch

enum CliError {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for CliError {
    // errors raised while interpreting inputs are config errors; run()
    // re-wraps execution failures explicitly
    fn from(e: Error) -> Self {
        CliError::Config(e)
    }
}

fn runtime(e: Error) -> CliError {
    CliError::Runtime(e)
}

/// Entry point used by the `hmtsim` binary; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { 0 } else { 1 };
        }
    };
    let file = match FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("hmtsim: config error: {e}");
            return 1;
        }
    };
    match dispatch(cli.command, &file) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Config(e)) => {
            eprintln!("hmtsim: config error: {e}");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("hmtsim: error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command, file: &FileConfig) -> Result<String, CliError> {
    match cmd {
        Command::Solve(a) => run_solve(a, file),
        Command::Estimate(a) => run_estimate(a, file),
        Command::Bound(a) => run_bound(a),
        Command::SweepError(a) => run_sweep_error(a, file),
        Command::SweepRate(a) => run_sweep_rate(a, file),
        Command::Surface(a) => run_surface(a, file),
    }
}

fn run_solve(a: SolveArgs, file: &FileConfig) -> Result<String, CliError> {
    let geom = file.geometry()?;
    let link = file.link(a.d0, Some(a.alpha))?;
    let center = PhasePair::new(a.center.0, a.center.1)?;
    let probe_set = ProbeSet::build(center, a.v, a.w, &geom)?;
    // exact means with a zero noise floor: the pure closed form
    let means = exact_means(&geom, &link, &probe_set, 1.0, 0.0);
    let solution = solve_noiseless(&means, &probe_set, 0.0).map_err(runtime)?;
    Ok(format!(
        "beta_hat = ({:.6}, {:.6})",
        solution.beta1(),
        solution.beta2()
    ))
}

fn run_estimate(a: EstimateArgs, file: &FileConfig) -> Result<String, CliError> {
    let geom = file.geometry()?;
    let link = file.link(a.d0, Some(a.alpha))?;
    let noise = file.noise(a.nlos_paths)?;
    let pilot_power = dbm_to_watts(a.pilot_dbm);
    let pilots = PilotConfig::new(pilot_power, a.pilots)?;
    let v = a.v.or(file.sweep.step_v).unwrap_or_else(|| geom.lobe_width_x());
    let w = a.w.or(file.sweep.step_w).unwrap_or_else(|| geom.lobe_width_y());
    let center_rule = match a.center.center {
        Some(c) => CenterRule::Fixed(PhasePair::new(c.0, c.1)?),
        None => CenterRule::max_power_default(),
    };
    let seed = file.seed(a.seed)?;

    let trial_rng = RngStream::new(seed, 0);
    let mut nlos_rng = trial_rng.substream(8);
    let sim = SimulatedLink::with_nlos(&geom, &link, pilot_power, &noise, &mut nlos_rng);
    let est_rng = trial_rng.substream(9);
    let result = two_stage_estimate(
        &geom,
        &sim,
        &pilots,
        noise.sigma2(),
        v,
        w,
        &center_rule,
        &est_rng,
    )
    .map_err(runtime)?;
    let sq = squared_error(result.phase(), link.optimal_phase());
    let data_power = dbm_to_watts(file.pilots.data_power_dbm.unwrap_or(20.0));
    let rate = achievable_rate(
        data_power,
        channel_gain(&geom, &link, &result.phase()),
        noise.sigma2(),
    );
    Ok(format!(
        "beta_hat = ({:.6}, {:.6})  squared_error = {}  rate = {:.4} bits  pilots_used = {}  degenerate = {}",
        result.beta1_hat(),
        result.beta2_hat(),
        fmt_sig(sq),
        rate,
        result.pilots_used(),
        result.degenerate()
    ))
}

fn run_bound(a: BoundArgs) -> Result<String, CliError> {
    if a.lambda.0.len() != 4 {
        return Err(CliError::Config(Error::Config(format!(
            "--lambda expects four values l2,l3,l4,l5, got {}",
            a.lambda.0.len()
        ))));
    }
    let lambdas = [0.0, a.lambda.0[0], a.lambda.0[1], a.lambda.0[2], a.lambda.0[3]];
    let params = BoundParams::new(lambdas, a.n, a.eps)?;
    Ok(format!(
        "bound = {}  (raw = {}, ln = {:.6})  n = {}  eps = {}",
        fmt_sig(error_probability_bound(&params)),
        fmt_sig(error_probability_bound_raw(&params)),
        log_error_probability_bound(&params),
        a.n,
        a.eps
    ))
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| runtime(Error::Io(e.to_string())))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| runtime(Error::Io(e.to_string())))
}

fn base_experiment_config(
    file: &FileConfig,
    seed: Option<u64>,
    trials: Option<u64>,
    threads: Option<usize>,
    d0: Option<f64>,
    random_user: bool,
) -> Result<ExperimentConfig, CliError> {
    let geometry = file.geometry()?;
    let link = file.link(d0, None)?;
    let user = if random_user || file.link.random_user.unwrap_or(false) {
        UserPlacement::RandomAlpha {
            distance: link.distance(),
            radiation_factor: link.radiation_factor(),
        }
    } else {
        UserPlacement::Fixed(link)
    };
    let sweep_center = match file.sweep.center {
        Some([b1, b2]) => SweepCenter::Fixed(PhasePair::new(b1, b2)?),
        None => {
            let [l1, l2] = file.sweep.center_offset_lobes.unwrap_or([-0.5, -0.5]);
            SweepCenter::AlphaOffsetLobes {
                lobes1: l1,
                lobes2: l2,
            }
        }
    };
    let defaults = ExperimentConfig::default();
    Ok(ExperimentConfig {
        geometry,
        user,
        noise: file.noise(None)?,
        data_power: dbm_to_watts(file.pilots.data_power_dbm.unwrap_or(20.0)),
        pilot_powers_dbm: file
            .sweep
            .error_powers_dbm
            .clone()
            .unwrap_or(defaults.pilot_powers_dbm),
        pilot_counts: file
            .sweep
            .error_counts
            .clone()
            .unwrap_or(defaults.pilot_counts),
        epsilons: file.sweep.epsilons.clone().unwrap_or(defaults.epsilons),
        rate_pilot_count: file.pilots.rate_count.unwrap_or(23),
        trials: trials.or(file.trials).unwrap_or(1000),
        seed: file.seed(seed)?,
        baselines: defaults.baselines,
        step_v: file.sweep.step_v,
        step_w: file.sweep.step_w,
        sweep_center,
        stage0_offset_lobes: file.sweep.stage0_offset_lobes.unwrap_or(0.5),
        grid_size: file.sweep.grid_size.unwrap_or(4),
        threads: threads.or(file.threads),
    })
}

fn run_sweep_error(a: SweepErrorArgs, file: &FileConfig) -> Result<String, CliError> {
    let mut cfg = base_experiment_config(file, a.seed, a.trials, a.threads, a.d0, false)?;
    if let Some(p) = a.powers {
        cfg.pilot_powers_dbm = p.0;
    }
    if let Some(c) = a.counts {
        cfg.pilot_counts = c.0;
    }
    if let Some(e) = a.eps {
        cfg.epsilons = e.0;
    }
    let table = run_error_probability_sweep(&cfg).map_err(runtime)?;
    let out = file.out_path(a.out, "sweep_error.csv");
    write_out(&out, &table.to_csv())?;
    if let Some(svg_path) = a.svg {
        write_out(&svg_path, &error_sweep_svg(&table))?;
    }
    Ok(format!(
        "wrote {} rows to {} (center = ({:.4}, {:.4}), v = {}, w = {})",
        table.rows.len(),
        out.display(),
        table.center.beta1(),
        table.center.beta2(),
        table.step_v,
        table.step_w
    ))
}

fn error_sweep_svg(table: &ErrorSweepTable) -> String {
    let mut series: Vec<Series> = Vec::new();
    let mut keys: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| (r.pilot_power_dbm, r.epsilon))
        .collect();
    keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keys.dedup();
    for (p, eps) in keys {
        let pick = |f: fn(&crate::experiments::ErrorSweepRow) -> f64| -> Vec<(f64, f64)> {
            table
                .rows
                .iter()
                .filter(|r| r.pilot_power_dbm == p && r.epsilon == eps)
                .map(|r| ((r.total_pilots as f64).log10(), f(r)))
                .collect()
        };
        series.push(Series {
            name: format!("emp P={p}dBm eps={eps}"),
            points: pick(|r| r.empirical),
        });
        series.push(Series {
            name: format!("bound P={p}dBm eps={eps}"),
            points: pick(|r| r.bound),
        });
    }
    line_chart(
        "error probability vs pilots",
        "log10(total pilots)",
        "P{deviation >= eps}",
        &series,
    )
}

fn run_sweep_rate(a: SweepRateArgs, file: &FileConfig) -> Result<String, CliError> {
    let mut cfg = base_experiment_config(file, a.seed, a.trials, a.threads, a.d0, a.random_user)?;
    cfg.pilot_powers_dbm = a
        .powers
        .map(|p| p.0)
        .or_else(|| file.sweep.rate_powers_dbm.clone())
        .unwrap_or_else(|| vec![0.0, 10.0, 20.0, 30.0]);
    if let Some(c) = a.count {
        cfg.rate_pilot_count = c;
    }
    let table = run_rate_sweep(&cfg).map_err(runtime)?;
    let out = file.out_path(a.out, "sweep_rate.csv");
    write_out(&out, &table.to_csv())?;
    if let Some(svg_path) = a.svg {
        write_out(&svg_path, &rate_sweep_svg(&table))?;
    }
    Ok(format!(
        "wrote {} rows ({} trial records) to {}",
        table.rows.len(),
        table.records.len(),
        out.display()
    ))
}

fn rate_sweep_svg(table: &RateSweepTable) -> String {
    let mut series = Vec::new();
    for method in [Method::Oracle, Method::TwoStage, Method::GridSearch] {
        let points: Vec<(f64, f64)> = table
            .rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.pilot_power_dbm, r.mean_rate))
            .collect();
        if !points.is_empty() {
            series.push(Series {
                name: method.as_str().to_string(),
                points,
            });
        }
    }
    line_chart(
        "achievable rate vs pilot power",
        "pilot power (dBm)",
        "mean rate (bits/use)",
        &series,
    )
}

fn run_surface(a: SurfaceArgs, file: &FileConfig) -> Result<String, CliError> {
    let geom = file.geometry()?;
    let link = file.link(a.d0, a.alpha)?;
    let resolution = a.resolution.unwrap_or(201);
    let table = render_gain_surface(&geom, &link, resolution).map_err(CliError::Config)?;
    let out = file.out_path(a.out, "surface.csv");
    write_out(&out, &table.to_csv())?;
    if let Some(svg_path) = a.svg {
        write_out(&svg_path, &surface_svg(&table))?;
    }
    let mut summary = String::new();
    write!(
        summary,
        "argmax |H| = {} at ({:.4}, {:.4}); wrote {}x{} grid to {}",
        fmt_sig(table.argmax_gain),
        table.argmax.0,
        table.argmax.1,
        resolution,
        resolution,
        out.display()
    )
    .unwrap();
    Ok(summary)
}

/// Slice of |H| along axis 1 through the argmax row.
fn surface_svg(table: &SurfaceTable) -> String {
    let res = table.resolution as usize;
    let j = table
        .beta2
        .iter()
        .position(|&b| b == table.argmax.1)
        .unwrap_or(res / 2);
    let points: Vec<(f64, f64)> = table
        .beta1
        .iter()
        .enumerate()
        .map(|(i, &b1)| (b1, table.gain[i * res + j]))
        .collect();
    line_chart(
        "|H| slice through the beam peak",
        "beta1",
        "|H|",
        &[Series {
            name: format!("beta2 = {:.4}", table.argmax.1),
            points,
        }],
    )
}
