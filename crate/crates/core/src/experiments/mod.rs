//! Monte Carlo experiment runners and baselines.
//!
//! Three executable experiments back the CLI:
//!
//! - an error-probability sweep: deviation probability of the two-stage
//!   estimator vs. pilot count and pilot power, against the analytic bound;
//! - a rate sweep: achievable rate of each estimation method at a fixed
//!   23-pilot budget vs. pilot power;
//! - a gain-surface render of |H| over the phase domain.
//!
//! Trials are independent work items on seeded per-trial RNG streams, so the
//! runners may execute them on any number of rayon workers and still produce
//! byte-identical tables.

mod output;

pub use output::{fmt_sig, line_chart, Series};

use rayon::prelude::*;

use crate::bounds::{
    error_probability_bound, error_probability_bound_raw, noncentrality, squared_error,
    BoundParams,
};
use crate::channel::{
    achievable_rate, channel_gain, peak_gain, Complex64, HmtGeometry, LinkGeometry, PhasePair,
};
use crate::error::{Error, Result};
use crate::estimator::{two_stage_estimate, CenterRule, ProbeSet};
use crate::signal::{
    dbm_to_watts, NoiseModel, PilotConfig, PilotSource, RngStream, SimulatedLink,
};

/// z for a two-sided 99% Wilson interval.
pub const Z_99: f64 = 2.5758293035489004;

/// Substream keys reserved by the trial runner (the estimator itself uses
/// keys 0..=5 of the stream it is handed).
const KEY_NLOS: u64 = 8;
const KEY_ESTIMATOR: u64 = 9;
const KEY_ALPHA: u64 = 10;
const KEY_GRID: u64 = 11;

/// Estimation methods the runners compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Oracle,
    GridSearch,
    TwoStage,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::GridSearch => "grid_search",
            Method::TwoStage => "two_stage",
        }
    }
}

/// Where the user sits: pinned, or redrawn uniformly per trial.
#[derive(Debug, Clone, PartialEq)]
pub enum UserPlacement {
    Fixed(LinkGeometry),
    /// α₁, α₂ ~ U[-1, 1] each trial at the given distance.
    RandomAlpha { distance: f64, radiation_factor: f64 },
}

impl UserPlacement {
    fn distance(&self) -> f64 {
        match self {
            UserPlacement::Fixed(l) => l.distance(),
            UserPlacement::RandomAlpha { distance, .. } => *distance,
        }
    }

    fn resolve(&self, rng: &RngStream) -> LinkGeometry {
        match self {
            UserPlacement::Fixed(l) => *l,
            UserPlacement::RandomAlpha {
                distance,
                radiation_factor,
            } => {
                use rand::Rng;
                let mut r = rng.substream(KEY_ALPHA);
                let a1 = r.random_range(-1.0..=1.0);
                let a2 = r.random_range(-1.0..=1.0);
                LinkGeometry::new(*distance, a1, a2, *radiation_factor)
                    .expect("sampled direction cosines are in range")
            }
        }
    }
}

/// Probe-center policy for the error-probability sweep.
///
/// The analytic bound needs the non-centralities of a known probe set, so
/// this sweep runs with a fixed center; the default sits half a lobe below
/// the true α on each axis, a generic position off the beam-pattern zeros.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepCenter {
    AlphaOffsetLobes { lobes1: f64, lobes2: f64 },
    Fixed(PhasePair),
}

impl SweepCenter {
    fn resolve(&self, geom: &HmtGeometry, alpha: &PhasePair) -> PhasePair {
        match self {
            SweepCenter::Fixed(c) => *c,
            SweepCenter::AlphaOffsetLobes { lobes1, lobes2 } => PhasePair::clamped(
                alpha.beta1() + lobes1 * geom.lobe_width_x(),
                alpha.beta2() + lobes2 * geom.lobe_width_y(),
            ),
        }
    }
}

/// Everything a sweep needs; [`ExperimentConfig::default`] reproduces the
/// baseline system table (30 GHz, 1 m² surface, -115 dBm noise, user at
/// 200 m toward (0.68, -0.45)).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub geometry: HmtGeometry,
    pub user: UserPlacement,
    pub noise: NoiseModel,
    /// Transmit power for the rate metric, watts.
    pub data_power: f64,
    /// Pilot powers swept, dBm.
    pub pilot_powers_dbm: Vec<f64>,
    /// Pilot budgets swept by the error-probability sweep.
    pub pilot_counts: Vec<u64>,
    /// Deviation radii ε evaluated per sweep point.
    pub epsilons: Vec<f64>,
    /// Pilot budget for the rate sweep (center selection included).
    pub rate_pilot_count: u64,
    pub trials: u64,
    pub seed: u64,
    /// Methods included in the rate sweep.
    pub baselines: Vec<Method>,
    /// Probe steps; `None` picks the smallest commensurate step 1/K.
    pub step_v: Option<f64>,
    pub step_w: Option<f64>,
    pub sweep_center: SweepCenter,
    /// Half-spread of the stage-0 candidate triple, in lobes.
    pub stage0_offset_lobes: f64,
    pub grid_size: u32,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: HmtGeometry::default(),
            user: UserPlacement::Fixed(
                LinkGeometry::new(200.0, 0.68, -0.45, 1.0).expect("default link is valid"),
            ),
            noise: NoiseModel::default(),
            data_power: dbm_to_watts(20.0),
            pilot_powers_dbm: vec![5.0, 10.0, 20.0],
            pilot_counts: vec![100, 1000, 10_000],
            epsilons: vec![0.01, 0.05, 0.1],
            rate_pilot_count: 23,
            trials: 1000,
            seed: 7,
            baselines: vec![Method::Oracle, Method::GridSearch, Method::TwoStage],
            step_v: None,
            step_w: None,
            sweep_center: SweepCenter::AlphaOffsetLobes {
                lobes1: -0.5,
                lobes2: -0.5,
            },
            stage0_offset_lobes: 0.5,
            grid_size: 4,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn step_v(&self) -> f64 {
        self.step_v.unwrap_or_else(|| self.geometry.lobe_width_x())
    }

    pub fn step_w(&self) -> f64 {
        self.step_w.unwrap_or_else(|| self.geometry.lobe_width_y())
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        for &eps in &self.epsilons {
            if !(eps.is_finite() && (0.0..=1.0).contains(&eps)) {
                return Err(Error::OutOfRange {
                    name: "epsilon",
                    value: eps,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        for &n in &self.pilot_counts {
            if n < 5 {
                return Err(Error::PilotBudget {
                    needed: 5,
                    available: n,
                });
            }
        }
        Ok(())
    }
}

/// Per-method result inside one trial.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub beta_hat: PhasePair,
    pub squared_error: f64,
    pub rate: f64,
    pub pilots_used: u64,
}

/// One Monte Carlo trial: the drawn user, the frozen scatter offset, the RNG
/// stream it ran on, and every method's outcome.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: u64,
    pub pilot_power_dbm: f64,
    pub alpha: PhasePair,
    pub nlos_offset: Complex64,
    pub rng_stream: u64,
    pub outcomes: Vec<MethodOutcome>,
}

/// Perfect knowledge of the direction cosines; zero pilots.
pub fn oracle_baseline(link: &LinkGeometry) -> PhasePair {
    link.optimal_phase()
}

/// Exhaustive power probe on a uniform grid over [-1, 1]², one pilot per
/// point. Ties break to the lexicographically smallest point.
pub fn grid_search_baseline<S: PilotSource + ?Sized>(
    source: &S,
    pilots: &PilotConfig,
    grid_size: u32,
    rng: &mut RngStream,
) -> Result<PhasePair> {
    if grid_size < 2 {
        return Err(Error::Config("grid_size must be at least 2".into()));
    }
    let points = grid_size as u64 * grid_size as u64;
    if points > pilots.total_pilots() {
        return Err(Error::PilotBudget {
            needed: points,
            available: pilots.total_pilots(),
        });
    }
    let step = 2.0 / (grid_size - 1) as f64;
    let mut best = PhasePair::new(-1.0, -1.0).unwrap();
    let mut best_power = f64::NEG_INFINITY;
    for i in 0..grid_size {
        let b1 = -1.0 + step * i as f64;
        for j in 0..grid_size {
            let b2 = -1.0 + step * j as f64;
            let p = PhasePair::clamped(b1, b2);
            let r = source.received_power(&p, rng);
            if r > best_power {
                best_power = r;
                best = p;
            }
        }
    }
    Ok(best)
}

/// Wilson score interval for a binomial proportion, clipped to [0, 1].
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// One row of the error-probability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSweepRow {
    pub pilot_power_dbm: f64,
    pub total_pilots: u64,
    pub per_epoch_n: u64,
    pub epsilon: f64,
    pub trials: u64,
    pub failures: u64,
    pub empirical: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub bound: f64,
    pub bound_raw: f64,
    /// λ₂..λ₅ at the four offset probes.
    pub lambdas: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct ErrorSweepTable {
    pub center: PhasePair,
    pub step_v: f64,
    pub step_w: f64,
    pub rows: Vec<ErrorSweepRow>,
}

impl ErrorSweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "pilot_dbm,total_pilots,per_epoch_n,epsilon,trials,failures,empirical,\
             wilson_low,wilson_high,bound,bound_raw,lambda2,lambda3,lambda4,lambda5\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt_sig(r.pilot_power_dbm),
                r.total_pilots,
                r.per_epoch_n,
                fmt_sig(r.epsilon),
                r.trials,
                r.failures,
                fmt_sig(r.empirical),
                fmt_sig(r.wilson_low),
                fmt_sig(r.wilson_high),
                fmt_sig(r.bound),
                fmt_sig(r.bound_raw),
                fmt_sig(r.lambdas[0]),
                fmt_sig(r.lambdas[1]),
                fmt_sig(r.lambdas[2]),
                fmt_sig(r.lambdas[3]),
            ));
        }
        out
    }
}

/// Runs the two-stage estimator `cfg.trials` times per (power, count) pair
/// and tabulates the empirical deviation probability for every ε next to the
/// analytic bound evaluated at the true probe non-centralities.
///
/// Requires a fixed user: the bound is a function of one probe set.
pub fn run_error_probability_sweep(cfg: &ExperimentConfig) -> Result<ErrorSweepTable> {
    cfg.validate()?;
    let link = match &cfg.user {
        UserPlacement::Fixed(l) => *l,
        UserPlacement::RandomAlpha { .. } => {
            return Err(Error::Config(
                "sweep-error requires a fixed user (the bound needs one probe set)".into(),
            ))
        }
    };
    let geom = &cfg.geometry;
    let alpha = link.optimal_phase();
    let center = cfg.sweep_center.resolve(geom, &alpha);
    let (v, w) = (cfg.step_v(), cfg.step_w());
    let probe_set = ProbeSet::build(center, v, w, geom)?;
    let sigma2 = cfg.noise.sigma2();

    let mut rows = Vec::new();
    with_pool(cfg.threads, || -> Result<()> {
        for &p_dbm in &cfg.pilot_powers_dbm {
            let pilot_power = dbm_to_watts(p_dbm);
            // probe non-centralities under the line-of-sight model
            let mut lambdas5 = [0.0; 5];
            for (k, probe) in probe_set.probes().iter().enumerate() {
                lambdas5[k] =
                    noncentrality(pilot_power, channel_gain(geom, &link, probe), sigma2);
            }
            for &total in &cfg.pilot_counts {
                let pilots = PilotConfig::new(pilot_power, total)?;
                let sq_errs: Vec<f64> = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| -> Result<f64> {
                        let trial_rng = RngStream::new(cfg.seed, t);
                        let mut nlos_rng = trial_rng.substream(KEY_NLOS);
                        let sim = SimulatedLink::with_nlos(
                            geom,
                            &link,
                            pilot_power,
                            &cfg.noise,
                            &mut nlos_rng,
                        );
                        let est_rng = trial_rng.substream(KEY_ESTIMATOR);
                        let result = two_stage_estimate(
                            geom,
                            &sim,
                            &pilots,
                            sigma2,
                            v,
                            w,
                            &CenterRule::Fixed(center),
                            &est_rng,
                        )?;
                        Ok(squared_error(result.phase(), alpha))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                debug_assert_eq!(sq_errs.len() as u64, cfg.trials);
                for &eps in &cfg.epsilons {
                    let failures = sq_errs.iter().filter(|&&e| e >= eps).count() as u64;
                    let empirical = failures as f64 / cfg.trials as f64;
                    let (wl, wh) = wilson_interval(failures, cfg.trials, Z_99);
                    let params = BoundParams::new(lambdas5, pilots.per_epoch(), eps)?;
                    rows.push(ErrorSweepRow {
                        pilot_power_dbm: p_dbm,
                        total_pilots: total,
                        per_epoch_n: pilots.per_epoch(),
                        epsilon: eps,
                        trials: cfg.trials,
                        failures,
                        empirical,
                        wilson_low: wl,
                        wilson_high: wh,
                        bound: error_probability_bound(&params),
                        bound_raw: error_probability_bound_raw(&params),
                        lambdas: [lambdas5[1], lambdas5[2], lambdas5[3], lambdas5[4]],
                    });
                }
            }
        }
        Ok(())
    })??;
    Ok(ErrorSweepTable {
        center,
        step_v: v,
        step_w: w,
        rows,
    })
}

/// One row of the rate sweep: one method at one pilot power.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSweepRow {
    pub method: Method,
    pub pilot_power_dbm: f64,
    pub distance: f64,
    pub trials: u64,
    pub pilots_used: u64,
    pub mean_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_squared_error: f64,
}

#[derive(Debug, Clone)]
pub struct RateSweepTable {
    pub rows: Vec<RateSweepRow>,
    pub records: Vec<TrialRecord>,
}

impl RateSweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,pilot_dbm,distance_m,trials,pilots_used,mean_rate,ci_low,ci_high,mean_squared_error\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.method.as_str(),
                fmt_sig(r.pilot_power_dbm),
                fmt_sig(r.distance),
                r.trials,
                r.pilots_used,
                fmt_sig(r.mean_rate),
                fmt_sig(r.ci_low),
                fmt_sig(r.ci_high),
                fmt_sig(r.mean_squared_error),
            ));
        }
        out
    }
}

/// Stage-0 candidate triple for the two-stage method: the true α flanked by
/// ±`stage0_offset_lobes` lobes on each axis. Stands in for a good external
/// initializer while keeping the 3-pilot budget.
fn stage0_candidates(cfg: &ExperimentConfig, alpha: &PhasePair) -> Vec<PhasePair> {
    let d1 = cfg.stage0_offset_lobes * cfg.geometry.lobe_width_x();
    let d2 = cfg.stage0_offset_lobes * cfg.geometry.lobe_width_y();
    vec![
        PhasePair::clamped(alpha.beta1() - d1, alpha.beta2() - d2),
        *alpha,
        PhasePair::clamped(alpha.beta1() + d1, alpha.beta2() + d2),
    ]
}

/// Sweeps pilot power at a fixed pilot budget and reports the mean
/// achievable rate (line-of-sight model, data power `cfg.data_power`) of
/// every configured method.
pub fn run_rate_sweep(cfg: &ExperimentConfig) -> Result<RateSweepTable> {
    cfg.validate()?;
    let geom = &cfg.geometry;
    let sigma2 = cfg.noise.sigma2();
    let (v, w) = (cfg.step_v(), cfg.step_w());
    let mut rows = Vec::new();
    let mut records = Vec::new();

    with_pool(cfg.threads, || -> Result<()> {
        for &p_dbm in &cfg.pilot_powers_dbm {
            let pilot_power = dbm_to_watts(p_dbm);
            let pilots = PilotConfig::new(pilot_power, cfg.rate_pilot_count)?;
            let point_records: Vec<TrialRecord> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| -> Result<TrialRecord> {
                    let trial_rng = RngStream::new(cfg.seed, t);
                    let link = cfg.user.resolve(&trial_rng);
                    let alpha = link.optimal_phase();
                    let mut nlos_rng = trial_rng.substream(KEY_NLOS);
                    let sim = SimulatedLink::with_nlos(
                        geom,
                        &link,
                        pilot_power,
                        &cfg.noise,
                        &mut nlos_rng,
                    );
                    let rate_of = |beta: &PhasePair| {
                        achievable_rate(cfg.data_power, channel_gain(geom, &link, beta), sigma2)
                    };
                    let mut outcomes = Vec::new();
                    for &method in &cfg.baselines {
                        let (beta, pilots_used) = match method {
                            Method::Oracle => (oracle_baseline(&link), 0),
                            Method::GridSearch => {
                                let mut grid_rng = trial_rng.substream(KEY_GRID);
                                let beta = grid_search_baseline(
                                    &sim,
                                    &pilots,
                                    cfg.grid_size,
                                    &mut grid_rng,
                                )?;
                                (beta, cfg.grid_size as u64 * cfg.grid_size as u64)
                            }
                            Method::TwoStage => {
                                let est_rng = trial_rng.substream(KEY_ESTIMATOR);
                                let result = two_stage_estimate(
                                    geom,
                                    &sim,
                                    &pilots,
                                    sigma2,
                                    v,
                                    w,
                                    &CenterRule::MaxPower(stage0_candidates(cfg, &alpha)),
                                    &est_rng,
                                )?;
                                (result.phase(), result.pilots_used())
                            }
                        };
                        outcomes.push(MethodOutcome {
                            method,
                            beta_hat: beta,
                            squared_error: squared_error(beta, alpha),
                            rate: rate_of(&beta),
                            pilots_used,
                        });
                    }
                    Ok(TrialRecord {
                        trial: t,
                        pilot_power_dbm: p_dbm,
                        alpha,
                        nlos_offset: sim.nlos_offset(),
                        rng_stream: trial_rng.stream_id(),
                        outcomes,
                    })
                })
                .collect::<Result<Vec<_>>>()?;

            for &method in &cfg.baselines {
                let rates: Vec<f64> = point_records
                    .iter()
                    .map(|r| {
                        r.outcomes
                            .iter()
                            .find(|o| o.method == method)
                            .expect("every record carries every method")
                            .rate
                    })
                    .collect();
                let mean_sq: f64 = point_records
                    .iter()
                    .map(|r| {
                        r.outcomes
                            .iter()
                            .find(|o| o.method == method)
                            .unwrap()
                            .squared_error
                    })
                    .sum::<f64>()
                    / cfg.trials as f64;
                let n = rates.len() as f64;
                let mean = rates.iter().sum::<f64>() / n;
                let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                    / (n - 1.0).max(1.0);
                let half = Z_99 * (var / n).sqrt();
                let pilots_used = point_records[0]
                    .outcomes
                    .iter()
                    .find(|o| o.method == method)
                    .unwrap()
                    .pilots_used;
                rows.push(RateSweepRow {
                    method,
                    pilot_power_dbm: p_dbm,
                    distance: cfg.user.distance(),
                    trials: cfg.trials,
                    pilots_used,
                    mean_rate: mean,
                    ci_low: mean - half,
                    ci_high: mean + half,
                    mean_squared_error: mean_sq,
                });
            }
            records.extend(point_records);
        }
        Ok(())
    })??;
    Ok(RateSweepTable { rows, records })
}

/// |H| sampled on a uniform grid over the phase domain.
#[derive(Debug, Clone)]
pub struct SurfaceTable {
    pub resolution: u32,
    /// Grid point with the largest |H| (lexicographically first on ties).
    pub argmax: (f64, f64),
    pub argmax_gain: f64,
    /// Closed-form peak √F λ L_x L_y/(4π d₀) for reference.
    pub peak: f64,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    /// Row-major |H|: `gain[i * resolution + j]` for (beta1[i], beta2[j]).
    pub gain: Vec<f64>,
}

impl SurfaceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta1,beta2,abs_gain\n");
        for (i, b1) in self.beta1.iter().enumerate() {
            for (j, b2) in self.beta2.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    fmt_sig(*b1),
                    fmt_sig(*b2),
                    fmt_sig(self.gain[i * self.resolution as usize + j]),
                ));
            }
        }
        out
    }
}

/// Samples |H(β₁, β₂)| on a `resolution`² grid over [-1, 1]².
pub fn render_gain_surface(
    geom: &HmtGeometry,
    link: &LinkGeometry,
    resolution: u32,
) -> Result<SurfaceTable> {
    if resolution < 16 {
        return Err(Error::OutOfRange {
            name: "resolution",
            value: resolution as f64,
            lo: 16.0,
            hi: f64::INFINITY,
        });
    }
    let step = 2.0 / (resolution - 1) as f64;
    let axis: Vec<f64> = (0..resolution).map(|i| -1.0 + step * i as f64).collect();
    let mut gain = Vec::with_capacity(resolution as usize * resolution as usize);
    let mut argmax = (axis[0], axis[0]);
    let mut best = f64::NEG_INFINITY;
    for &b1 in &axis {
        for &b2 in &axis {
            let h = channel_gain(geom, link, &PhasePair::clamped(b1, b2)).norm();
            if h > best {
                best = h;
                argmax = (b1, b2);
            }
            gain.push(h);
        }
    }
    Ok(SurfaceTable {
        resolution,
        argmax,
        argmax_gain: best,
        peak: peak_gain(geom, link),
        beta1: axis.clone(),
        beta2: axis,
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct NoiselessPower<'a> {
        geom: &'a HmtGeometry,
        link: &'a LinkGeometry,
        pilot_power: f64,
    }

    impl PilotSource for NoiselessPower<'_> {
        fn received_power(&self, phase: &PhasePair, _rng: &mut RngStream) -> f64 {
            self.pilot_power * channel_gain(self.geom, self.link, phase).norm_sqr()
        }
    }

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            trials: 40,
            pilot_powers_dbm: vec![10.0],
            pilot_counts: vec![100],
            epsilons: vec![0.1],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn oracle_returns_alpha() {
        let l = LinkGeometry::new(200.0, 0.68, -0.45, 1.0).unwrap();
        let p = oracle_baseline(&l);
        assert_eq!(p.beta1(), 0.68);
        assert_eq!(p.beta2(), -0.45);
        let l0 = LinkGeometry::new(10.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(oracle_baseline(&l0), PhasePair::new(0.0, 0.0).unwrap());
    }

    #[test]
    fn grid_search_hits_grid_point() {
        let geom = HmtGeometry::default();
        // α = (0.5, -0.5) is a 5×5 grid point
        let link = LinkGeometry::new(200.0, 0.5, -0.5, 1.0).unwrap();
        let src = NoiselessPower {
            geom: &geom,
            link: &link,
            pilot_power: 0.1,
        };
        let pilots = PilotConfig::new(0.1, 25).unwrap();
        let mut rng = RngStream::new(0, 0);
        let best = grid_search_baseline(&src, &pilots, 5, &mut rng).unwrap();
        assert_eq!(best, PhasePair::new(0.5, -0.5).unwrap());
    }

    #[test]
    fn grid_search_off_grid_picks_largest_gain() {
        let geom = HmtGeometry::default();
        let link = LinkGeometry::new(200.0, 0.68, -0.45, 1.0).unwrap();
        let src = NoiselessPower {
            geom: &geom,
            link: &link,
            pilot_power: 0.1,
        };
        let pilots = PilotConfig::new(0.1, 25).unwrap();
        let mut rng = RngStream::new(0, 0);
        let best = grid_search_baseline(&src, &pilots, 5, &mut rng).unwrap();
        // exhaustive check over the 25 points
        let mut want = PhasePair::new(-1.0, -1.0).unwrap();
        let mut want_gain = -1.0;
        for i in 0..5 {
            for j in 0..5 {
                let p = PhasePair::clamped(-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64);
                let g = channel_gain(&geom, &link, &p).norm();
                if g > want_gain {
                    want_gain = g;
                    want = p;
                }
            }
        }
        assert_eq!(best, want);
    }

    #[test]
    fn grid_search_rejects_budget_overrun() {
        let geom = HmtGeometry::default();
        let link = LinkGeometry::new(200.0, 0.0, 0.0, 1.0).unwrap();
        let src = NoiselessPower {
            geom: &geom,
            link: &link,
            pilot_power: 0.1,
        };
        let pilots = PilotConfig::new(0.1, 23).unwrap();
        let mut rng = RngStream::new(0, 0);
        let err = grid_search_baseline(&src, &pilots, 5, &mut rng).unwrap_err();
        assert!(matches!(
            err,
            Error::PilotBudget {
                needed: 25,
                available: 23
            }
        ));
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_interval(0, 1000, Z_99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.02);
        let (lo, hi) = wilson_interval(500, 1000, Z_99);
        assert!(lo < 0.5 && hi > 0.5);
        let (lo, hi) = wilson_interval(1000, 1000, Z_99);
        assert!(lo < 1.0);
        assert!(hi > 1.0 - 1e-12);
    }

    #[test]
    fn error_sweep_row_bookkeeping() {
        let cfg = small_cfg();
        let table = run_error_probability_sweep(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert_eq!(row.trials, 40);
        assert_eq!(row.per_epoch_n, 20);
        assert!(row.empirical >= 0.0 && row.empirical <= 1.0);
        assert!(row.wilson_low <= row.empirical && row.empirical <= row.wilson_high);
        // bound column equals a hand evaluation of the four-term sum
        let n = row.per_epoch_n as f64;
        let hand: f64 = 4.0
            * row
                .lambdas
                .iter()
                .map(|&l| (-(n / 32.0) * (row.epsilon * l / (1.0 + l)).powi(2)).exp())
                .sum::<f64>();
        assert!((row.bound_raw - hand).abs() <= 1e-12 * hand);
        assert_eq!(row.bound, hand.min(1.0));
    }

    #[test]
    fn error_sweep_rejects_random_user() {
        let cfg = ExperimentConfig {
            user: UserPlacement::RandomAlpha {
                distance: 200.0,
                radiation_factor: 1.0,
            },
            ..small_cfg()
        };
        assert!(matches!(
            run_error_probability_sweep(&cfg).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn error_sweep_deterministic_across_thread_counts() {
        let mut cfg = small_cfg();
        cfg.threads = Some(1);
        let a = run_error_probability_sweep(&cfg).unwrap().to_csv();
        cfg.threads = Some(4);
        let b = run_error_probability_sweep(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn rate_sweep_bookkeeping_and_oracle_dominance() {
        let cfg = ExperimentConfig {
            trials: 30,
            pilot_powers_dbm: vec![10.0, 20.0],
            ..ExperimentConfig::default()
        };
        let table = run_rate_sweep(&cfg).unwrap();
        // three methods × two powers
        assert_eq!(table.rows.len(), 6);
        assert_eq!(table.records.len(), 60);
        for rec in &table.records {
            let oracle = rec
                .outcomes
                .iter()
                .find(|o| o.method == Method::Oracle)
                .unwrap();
            assert_eq!(oracle.pilots_used, 0);
            assert_eq!(oracle.squared_error, 0.0);
            for o in &rec.outcomes {
                // per-trial, not just on average
                assert!(o.rate <= oracle.rate + 1e-12);
                match o.method {
                    Method::GridSearch => assert_eq!(o.pilots_used, 16),
                    Method::TwoStage => assert_eq!(o.pilots_used, 23),
                    Method::Oracle => {}
                }
            }
        }
        // oracle row constant across pilot power
        let oracle_rates: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.method == Method::Oracle)
            .map(|r| r.mean_rate)
            .collect();
        assert!((oracle_rates[0] - oracle_rates[1]).abs() < 1e-12);
    }

    #[test]
    fn rate_sweep_random_user_runs() {
        let cfg = ExperimentConfig {
            trials: 10,
            pilot_powers_dbm: vec![20.0],
            user: UserPlacement::RandomAlpha {
                distance: 200.0,
                radiation_factor: 1.0,
            },
            ..ExperimentConfig::default()
        };
        let table = run_rate_sweep(&cfg).unwrap();
        // users really are redrawn per trial
        let alphas: Vec<f64> = table.records.iter().map(|r| r.alpha.beta1()).collect();
        assert!(alphas.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn surface_argmax_and_zero_lines() {
        let geom = HmtGeometry::default();
        let link = LinkGeometry::new(200.0, 0.68, -0.45, 1.0).unwrap();
        let t = render_gain_surface(&geom, &link, 201).unwrap();
        let cell = 2.0 / 200.0;
        assert!((t.argmax.0 - 0.68).abs() <= cell + 1e-12);
        assert!((t.argmax.1 + 0.45).abs() <= cell + 1e-12);
        assert!((t.argmax_gain - t.peak).abs() / t.peak < 1e-9);
        // points on the zero lattice read (numerically) zero
        for k in [1i32, -2, 5] {
            let b1 = 0.68 + k as f64 / geom.kx();
            let h = channel_gain(&geom, &link, &PhasePair::clamped(b1, 0.13)).norm();
            assert!(h / t.peak < 1e-12);
        }
        assert!(render_gain_surface(&geom, &link, 15).is_err());
    }
}
