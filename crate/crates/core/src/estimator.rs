//! Five-probe closed-form estimation of the optimal phase shifts.
//!
//! The expected received power at a probe β differs from the noise floor by
//! a factor proportional to sinc²(Kπ(α-β)). For a probe step v with
//! K·v ∈ ℕ the sine factors at β⁰ and β⁰±v share the same magnitude, so the
//! power ratio between the center probe and an offset probe collapses to
//! ((α-β⁰∓v)/(α-β⁰))², a quadratic whose two roots bracket α. Combining the
//! +v and -v probes yields four candidates per axis of which exactly one
//! pair coincides at α; the estimator returns the midpoint of the closest
//! pair, which stays well-behaved when the ratios are only estimated.
//!
//! The noisy variant runs in two stages: uniform exploration spends
//! ⌊N/5⌋ pilots per probe to form empirical mean powers, then the same
//! closed form is applied to the estimates. An optional stage-0 spends a few
//! extra pilots picking the strongest of a small candidate set as the probe
//! center.
//!
//! Caveat inherited from the closed form: a center whose offset from α is an
//! exact multiple of the lobe width sits on a zero of the sinc pattern and
//! carries no usable ratio information; this is a measure-zero set and the
//! Monte Carlo runners never place centers there deliberately.

use crate::channel::{channel_gain, HmtGeometry, LinkGeometry, PhasePair};
use crate::error::{Error, Result};
use crate::signal::{PilotConfig, PilotSource, RngStream};

/// Probes per exploration round: center, ±v on axis 1, ±w on axis 2.
pub const PROBE_COUNT: usize = 5;

/// Substream key reserved for stage-0 center selection; keys 0..4 belong to
/// the probe epochs.
const CENTER_SELECT_KEY: u64 = 5;

/// The five probe pairs explored by the estimator.
///
/// Order is fixed: [(β₁⁰,β₂⁰), (β₁⁰+v,β₂⁰), (β₁⁰-v,β₂⁰), (β₁⁰,β₂⁰+w),
/// (β₁⁰,β₂⁰-w)], with any coordinate that would leave [-1,1] clamped to the
/// boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    center: PhasePair,
    step_v: f64,
    step_w: f64,
    probes: [PhasePair; PROBE_COUNT],
}

impl ProbeSet {
    /// Commensurability tolerance on K·step.
    const STEP_TOL: f64 = 1e-9;

    pub fn build(center: PhasePair, v: f64, w: f64, geom: &HmtGeometry) -> Result<Self> {
        Self::check_step('x', v, geom.kx())?;
        Self::check_step('y', w, geom.ky())?;
        let c1 = center.beta1();
        let c2 = center.beta2();
        let probes = [
            center,
            PhasePair::clamped(c1 + v, c2),
            PhasePair::clamped(c1 - v, c2),
            PhasePair::clamped(c1, c2 + w),
            PhasePair::clamped(c1, c2 - w),
        ];
        Ok(Self {
            center,
            step_v: v,
            step_w: w,
            probes,
        })
    }

    fn check_step(axis: char, step: f64, k: f64) -> Result<()> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::NonPositive {
                name: "probe step",
                value: step,
            });
        }
        if step >= 2.0 {
            return Err(Error::StepTooLarge { step });
        }
        let product = k * step;
        if (product - product.round()).abs() > Self::STEP_TOL || product.round() < 1.0 {
            return Err(Error::StepNotCommensurate { axis, product });
        }
        Ok(())
    }

    pub fn center(&self) -> PhasePair {
        self.center
    }

    pub fn step_v(&self) -> f64 {
        self.step_v
    }

    pub fn step_w(&self) -> f64 {
        self.step_w
    }

    pub fn probes(&self) -> &[PhasePair; PROBE_COUNT] {
        &self.probes
    }
}

/// Empirical mean received powers, one per probe, from n pilots each.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimates {
    mu_hat: [f64; PROBE_COUNT],
    per_epoch_n: u64,
}

impl MeanEstimates {
    pub fn new(mu_hat: [f64; PROBE_COUNT], per_epoch_n: u64) -> Result<Self> {
        for (index, &value) in mu_hat.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::NegativeMean { index, value });
            }
        }
        if per_epoch_n < 1 {
            return Err(Error::PilotBudget {
                needed: 1,
                available: per_epoch_n,
            });
        }
        Ok(Self {
            mu_hat,
            per_epoch_n,
        })
    }

    pub fn mu_hat(&self) -> &[f64; PROBE_COUNT] {
        &self.mu_hat
    }

    pub fn per_epoch_n(&self) -> u64 {
        self.per_epoch_n
    }
}

/// Outcome of the one-axis four-candidate inversion.
///
/// `candidates[i]` holds α̂⁽ⁱ⁺¹⁾; `chosen` is the 1-based (i, j) pair with
/// i ∈ {1,2}, j ∈ {3,4} minimizing |α̂⁽ⁱ⁾ - α̂⁽ʲ⁾|, and `estimate` is their
/// midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisInversion {
    pub candidates: [f64; 4],
    pub chosen: (u8, u8),
    pub estimate: f64,
    /// True when any |μ̂ - σ²| fell below the denominator floor; the
    /// estimate is still returned but rests on a floored ratio.
    pub degenerate: bool,
}

/// Fraction of σ² used as the floor for |μ̂ - σ²| before division.
const MEAN_GAP_FLOOR_FRAC: f64 = 1e-3;
const MEAN_GAP_FLOOR_MIN: f64 = 1e-300;

/// Solves one axis from the three probe means.
///
/// Candidates are β₀ + step/(1 ± √(g₀/g₊)) and β₀ - step/(1 ± √(g₀/g₋))
/// with g = |μ - σ²|; the denominators g₊, g₋ are floored so noise driving
/// an estimate below σ² cannot produce an infinite ratio. Non-finite
/// candidates (a vanishing 1 - √ratio) are excluded from pair selection.
pub fn invert_axis(
    mu_center: f64,
    mu_plus: f64,
    mu_minus: f64,
    beta0: f64,
    step: f64,
    sigma2: f64,
) -> Result<AxisInversion> {
    for (index, value) in [mu_center, mu_plus, mu_minus].into_iter().enumerate() {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::NegativeMean { index, value });
        }
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::NonPositive {
            name: "step",
            value: step,
        });
    }

    let floor = (MEAN_GAP_FLOOR_FRAC * sigma2).max(MEAN_GAP_FLOOR_MIN);
    let gap_center = (mu_center - sigma2).abs();
    let gap_plus = (mu_plus - sigma2).abs();
    let gap_minus = (mu_minus - sigma2).abs();
    let degenerate = gap_center < floor || gap_plus < floor || gap_minus < floor;

    let ratio_plus = (gap_center / gap_plus.max(floor)).sqrt();
    let ratio_minus = (gap_center / gap_minus.max(floor)).sqrt();
    let candidates = [
        beta0 + step / (1.0 + ratio_plus),
        beta0 + step / (1.0 - ratio_plus),
        beta0 - step / (1.0 + ratio_minus),
        beta0 - step / (1.0 - ratio_minus),
    ];

    let mut best: Option<((u8, u8), f64)> = None;
    for i in 0..2usize {
        for j in 2..4usize {
            let (a, b) = (candidates[i], candidates[j]);
            if !a.is_finite() || !b.is_finite() {
                continue;
            }
            let d = (a - b).abs();
            // strict < keeps the lexicographically smallest pair on ties
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some(((i as u8 + 1, j as u8 + 1), d));
            }
        }
    }
    let (chosen, _) = best.ok_or(Error::NoFiniteCandidatePair)?;
    let estimate = (candidates[(chosen.0 - 1) as usize] + candidates[(chosen.1 - 1) as usize]) / 2.0;
    Ok(AxisInversion {
        candidates,
        chosen,
        estimate,
        degenerate,
    })
}

fn invert_both(
    means: &MeanEstimates,
    probe_set: &ProbeSet,
    sigma2: f64,
) -> Result<(AxisInversion, AxisInversion)> {
    let mu = means.mu_hat();
    let axis1 = invert_axis(
        mu[0],
        mu[1],
        mu[2],
        probe_set.center().beta1(),
        probe_set.step_v(),
        sigma2,
    )?;
    let axis2 = invert_axis(
        mu[0],
        mu[3],
        mu[4],
        probe_set.center().beta2(),
        probe_set.step_w(),
        sigma2,
    )?;
    Ok((axis1, axis2))
}

/// Recovers (α₁, α₂) from exact expected powers at the five probes.
pub fn solve_noiseless(
    means: &MeanEstimates,
    probe_set: &ProbeSet,
    sigma2: f64,
) -> Result<PhasePair> {
    let (axis1, axis2) = invert_both(means, probe_set, sigma2)?;
    Ok(PhasePair::clamped(axis1.estimate, axis2.estimate))
}

/// Exact expected powers P|H|² + σ² at the five probes; the noiseless
/// counterpart of [`estimate_means`].
pub fn exact_means(
    geom: &HmtGeometry,
    link: &LinkGeometry,
    probe_set: &ProbeSet,
    pilot_power: f64,
    sigma2: f64,
) -> MeanEstimates {
    let mut mu = [0.0; PROBE_COUNT];
    for (k, probe) in probe_set.probes().iter().enumerate() {
        mu[k] = pilot_power * channel_gain(geom, link, probe).norm_sqr() + sigma2;
    }
    MeanEstimates::new(mu, 1).expect("exact means are nonnegative")
}

/// Uniform exploration: ⌊N/5⌋ received-power samples per probe, averaged.
///
/// Epoch k draws from the child stream keyed by the probe index, so the
/// estimates do not depend on the order the epochs are executed in and the
/// leftover N mod 5 pilots are simply never drawn.
pub fn estimate_means<S: PilotSource + ?Sized>(
    probe_set: &ProbeSet,
    pilots: &PilotConfig,
    source: &S,
    rng: &RngStream,
) -> MeanEstimates {
    let n = pilots.per_epoch();
    let mut mu = [0.0; PROBE_COUNT];
    for (k, probe) in probe_set.probes().iter().enumerate() {
        let mut epoch_rng = rng.substream(k as u64);
        let sum: f64 = (0..n)
            .map(|_| source.received_power(probe, &mut epoch_rng))
            .sum();
        mu[k] = sum / n as f64;
    }
    MeanEstimates::new(mu, n).expect("received powers are nonnegative")
}

/// How the probe center is obtained before uniform exploration.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterRule {
    /// Use this center as-is; consumes no pilots.
    Fixed(PhasePair),
    /// Spend one pilot per candidate and center on the strongest received
    /// power; ties go to the lowest candidate index.
    MaxPower(Vec<PhasePair>),
}

impl CenterRule {
    /// Three candidates spread over the diagonal of the domain.
    pub fn default_candidates() -> Vec<PhasePair> {
        vec![
            PhasePair::new(-2.0 / 3.0, -2.0 / 3.0).unwrap(),
            PhasePair::new(0.0, 0.0).unwrap(),
            PhasePair::new(2.0 / 3.0, 2.0 / 3.0).unwrap(),
        ]
    }

    pub fn max_power_default() -> Self {
        CenterRule::MaxPower(Self::default_candidates())
    }

    /// Pilots consumed before uniform exploration starts.
    pub fn pilot_cost(&self) -> u64 {
        match self {
            CenterRule::Fixed(_) => 0,
            CenterRule::MaxPower(c) => c.len() as u64,
        }
    }
}

/// Probes each candidate once and returns the one with the largest received
/// power; on exact ties the lowest index wins.
pub fn select_initial_center<S: PilotSource + ?Sized>(
    candidates: &[PhasePair],
    source: &S,
    rng: &mut RngStream,
) -> PhasePair {
    assert!(!candidates.is_empty(), "candidate list must not be empty");
    let mut best = candidates[0];
    let mut best_power = f64::NEG_INFINITY;
    for candidate in candidates {
        let r = source.received_power(candidate, rng);
        if r > best_power {
            best_power = r;
            best = *candidate;
        }
    }
    best
}

/// Full two-stage estimate.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    beta1_hat: f64,
    beta2_hat: f64,
    axis1: AxisInversion,
    axis2: AxisInversion,
    probe_set: ProbeSet,
    mean_estimates: MeanEstimates,
    pilots_used: u64,
}

impl EstimationResult {
    pub fn beta1_hat(&self) -> f64 {
        self.beta1_hat
    }

    pub fn beta2_hat(&self) -> f64 {
        self.beta2_hat
    }

    /// The estimated pair, already clamped to the phase domain.
    pub fn phase(&self) -> PhasePair {
        PhasePair::clamped(self.beta1_hat, self.beta2_hat)
    }

    pub fn axis1(&self) -> &AxisInversion {
        &self.axis1
    }

    pub fn axis2(&self) -> &AxisInversion {
        &self.axis2
    }

    pub fn probe_set(&self) -> &ProbeSet {
        &self.probe_set
    }

    pub fn mean_estimates(&self) -> &MeanEstimates {
        &self.mean_estimates
    }

    pub fn pilots_used(&self) -> u64 {
        self.pilots_used
    }

    /// True when either axis hit the mean-gap floor.
    pub fn degenerate(&self) -> bool {
        self.axis1.degenerate || self.axis2.degenerate
    }
}

/// Runs the two-stage estimator against a pilot source.
///
/// Stage 0 (optional, per `center`): pick the probe center, one pilot per
/// candidate. Stage 1: uniform exploration of the five probes with
/// ⌊N'/5⌋ pilots each, N' being the budget left after stage 0. Stage 2: the
/// closed-form inversion applied to the empirical means, output clamped to
/// [-1, 1]². The noise model only supplies the σ² the estimator assumes.
pub fn two_stage_estimate<S: PilotSource + ?Sized>(
    geom: &HmtGeometry,
    source: &S,
    pilots: &PilotConfig,
    noise_sigma2: f64,
    step_v: f64,
    step_w: f64,
    center_rule: &CenterRule,
    rng: &RngStream,
) -> Result<EstimationResult> {
    let (center, stage0_cost) = match center_rule {
        CenterRule::Fixed(c) => (*c, 0),
        CenterRule::MaxPower(candidates) => {
            let needed = candidates.len() as u64 + 5;
            if pilots.total_pilots() < needed {
                return Err(Error::PilotBudget {
                    needed,
                    available: pilots.total_pilots(),
                });
            }
            let mut rng0 = rng.substream(CENTER_SELECT_KEY);
            (
                select_initial_center(candidates, source, &mut rng0),
                candidates.len() as u64,
            )
        }
    };
    let stage1 = if stage0_cost > 0 {
        PilotConfig::new(pilots.pilot_power(), pilots.total_pilots() - stage0_cost)?
    } else {
        pilots.clone()
    };
    let probe_set = ProbeSet::build(center, step_v, step_w, geom)?;
    let means = estimate_means(&probe_set, &stage1, source, rng);
    let (axis1, axis2) = invert_both(&means, &probe_set, noise_sigma2)?;
    Ok(EstimationResult {
        beta1_hat: axis1.estimate.clamp(-1.0, 1.0),
        beta2_hat: axis2.estimate.clamp(-1.0, 1.0),
        axis1,
        axis2,
        probe_set,
        mean_estimates: means,
        pilots_used: stage0_cost + 5 * stage1.per_epoch(),
    })
}
