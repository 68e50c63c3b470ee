//! Error-probability bound for the two-stage estimator and the probability
//! toolkit behind it.
//!
//! The scaled received power (2/σ²)·r at a probe is a non-central
//! chi-squared draw with 2 degrees of freedom and non-centrality
//! λ = 2P|H|²/σ². A chi-squared variable is sub-exponential, so the
//! empirical probe means concentrate at an exponential rate, which yields
//! the deviation bound
//!
//! ```text
//! P{(β̂₁-α₁)² + (β̂₂-α₂)² ≥ ε}
//!     ≤ 4 Σ_{i=2..5} exp(-(n/32)(ελᵢ/(1+λᵢ))²)
//! ```
//!
//! for n pilots per probe epoch, λ₂..λ₅ the non-centralities at the four
//! offset probes, and 0 ≤ ε ≤ 1. The right-hand side can exceed one; callers
//! get both the raw value and a clipped probability, computed in log space
//! so large n cannot underflow intermediate terms.

use crate::channel::{Complex64, PhasePair};
use crate::error::{Error, Result};
use crate::signal::RngStream;

/// Non-centrality λ = 2P|H|²/σ² of the scaled received power.
pub fn noncentrality(pilot_power: f64, gain: Complex64, sigma2: f64) -> f64 {
    2.0 * pilot_power * gain.norm_sqr() / sigma2
}

/// (β̂₁-α₁)² + (β̂₂-α₂)².
pub fn squared_error(beta_hat: PhasePair, alpha: PhasePair) -> f64 {
    let d1 = beta_hat.beta1() - alpha.beta1();
    let d2 = beta_hat.beta2() - alpha.beta2();
    d1 * d1 + d2 * d2
}

/// Inputs of the deviation bound: probe non-centralities λ₁..λ₅ (λ₁ is the
/// center probe and does not enter the bound), pilots per epoch, and the
/// deviation radius ε.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    lambdas: [f64; 5],
    per_epoch_n: u64,
    epsilon: f64,
}

impl BoundParams {
    pub fn new(lambdas: [f64; 5], per_epoch_n: u64, epsilon: f64) -> Result<Self> {
        for (i, &l) in lambdas.iter().enumerate() {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::OutOfRange {
                    name: match i {
                        0 => "lambda1",
                        1 => "lambda2",
                        2 => "lambda3",
                        3 => "lambda4",
                        _ => "lambda5",
                    },
                    value: l,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
        }
        if per_epoch_n < 1 {
            return Err(Error::PilotBudget {
                needed: 1,
                available: per_epoch_n,
            });
        }
        // the bound's derivation assumes ε ≤ 1; larger radii are rejected
        if !(epsilon.is_finite() && (0.0..=1.0).contains(&epsilon)) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                value: epsilon,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self {
            lambdas,
            per_epoch_n,
            epsilon,
        })
    }

    pub fn lambdas(&self) -> &[f64; 5] {
        &self.lambdas
    }

    pub fn per_epoch_n(&self) -> u64 {
        self.per_epoch_n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Natural log of the raw (unclipped) deviation bound.
pub fn log_error_probability_bound(params: &BoundParams) -> f64 {
    let n = params.per_epoch_n as f64;
    let eps = params.epsilon;
    let exponents: Vec<f64> = params.lambdas[1..]
        .iter()
        .map(|&l| {
            let x = eps * l / (1.0 + l);
            -(n / 32.0) * x * x
        })
        .collect();
    // ln(4 Σ e^{tᵢ}) via log-sum-exp
    let m = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|t| (t - m).exp()).sum();
    4.0f64.ln() + m + sum.ln()
}

/// The raw right-hand side of the deviation bound; may exceed one.
pub fn error_probability_bound_raw(params: &BoundParams) -> f64 {
    log_error_probability_bound(params).exp()
}

/// The deviation bound clipped at one.
pub fn error_probability_bound(params: &BoundParams) -> f64 {
    error_probability_bound_raw(params).min(1.0)
}

/// One draw of χ²_p(λ): the sum of p squared unit-variance Gaussians whose
/// means m satisfy Σm² = λ (all of it carried by the first component).
pub fn sample_noncentral_chi2(rng: &mut RngStream, dof: u32, lambda: f64) -> f64 {
    assert!(dof >= 1, "chi-squared needs at least one degree of freedom");
    assert!(lambda >= 0.0, "non-centrality must be nonnegative");
    let shift = lambda.sqrt();
    let mut sum = 0.0;
    for i in 0..dof {
        let g = rng.standard_normal() + if i == 0 { shift } else { 0.0 };
        sum += g * g;
    }
    sum
}

/// Sub-exponential parameters (ν, b) with the distribution mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubExpParams {
    pub nu: f64,
    pub b: f64,
    pub mean: f64,
}

impl SubExpParams {
    pub fn new(nu: f64, b: f64, mean: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::OutOfRange {
                name: "nu",
                value: nu,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::NonPositive { name: "b", value: b });
        }
        Ok(Self { nu, b, mean })
    }

    /// χ²_p(a) is sub-exponential with (ν, b) = (2(p+2a), 4) and mean p+a.
    pub fn noncentral_chi2(dof: u32, a: f64) -> Self {
        let p = dof as f64;
        Self {
            nu: 2.0 * (p + 2.0 * a),
            b: 4.0,
            mean: p + a,
        }
    }

    /// Parameters of the centered sum of n i.i.d. copies:
    /// ν* = ν√n, b* = b.
    pub fn iid_sum(&self, n: u64) -> Self {
        Self {
            nu: self.nu * (n as f64).sqrt(),
            b: self.b,
            mean: self.mean,
        }
    }
}

/// Two-regime tail bound on |(1/n)Σ(X_k - μ_k)| for a centered sum that is
/// sub-exponential with aggregate parameters (ν*, b*); clipped at one.
pub fn sub_exponential_tail(aggregate: &SubExpParams, n: u64, t: f64) -> f64 {
    assert!(t >= 0.0, "tail threshold must be nonnegative");
    let nf = n as f64;
    let nu2 = aggregate.nu * aggregate.nu;
    let crossover = nu2 / (nf * aggregate.b);
    let log_tail = if t <= crossover {
        2.0f64.ln() - nf * t * t / (2.0 * nu2 / nf)
    } else {
        2.0f64.ln() - nf * t / (2.0 * aggregate.b)
    };
    log_tail.exp().min(1.0)
}

/// Single-regime tail bound for the mean of n i.i.d. χ²₂(a) draws:
/// min(1, 2·exp(-n t²/(8(2+2a)²))).
pub fn corollary_tail(a: f64, n: u64, t: f64) -> f64 {
    assert!(t > 0.0, "tail threshold must be positive");
    assert!(a >= 0.0, "non-centrality must be nonnegative");
    let s = 2.0 + 2.0 * a;
    let log_tail = 2.0f64.ln() - (n as f64) * t * t / (8.0 * s * s);
    log_tail.exp().min(1.0)
}

/// Closed-form centered MGF of χ²_p(a):
/// E[exp(t(X-(p+a)))] = exp(2at²/(1-2t)) · e^{-pt}/(1-2t)^{p/2}, t < 1/2.
pub fn noncentral_chi2_centered_mgf(dof: u32, a: f64, t: f64) -> f64 {
    assert!(t < 0.5, "MGF diverges at t = 1/2");
    let p = dof as f64;
    let one_minus = 1.0 - 2.0 * t;
    (2.0 * a * t * t / one_minus).exp() * (-p * t).exp() / one_minus.powf(p / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_gain, peak_gain, HmtGeometry, LinkGeometry};
    use crate::signal::{dbm_to_watts, received_pilot, received_power};
    use std::f64::consts::PI;

    fn approx_rel(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn noncentrality_examples() {
        assert_eq!(noncentrality(1.0, Complex64::new(0.0, 0.0), 1.0), 0.0);
        // P|H|² = σ² gives λ = 2
        assert_eq!(noncentrality(2.0, Complex64::new(1.0, 0.0), 2.0), 2.0);
        // peak gain at 200 m with 10 dBm pilots under the default table
        let g = HmtGeometry::default();
        let l = LinkGeometry::new(200.0, 0.68, -0.45, 1.0).unwrap();
        let h = Complex64::new(peak_gain(&g, &l), 0.0);
        let lam = noncentrality(dbm_to_watts(10.0), h, dbm_to_watts(-115.0));
        let expect = 2.0 * 0.01 * (0.01 / (4.0 * PI * 200.0)).powi(2) / 10f64.powf(-14.5);
        assert!(approx_rel(lam, expect, 1e-12));
        assert!(approx_rel(lam, 1.0014e2, 1e-3));
    }

    #[test]
    fn squared_error_examples() {
        let a = PhasePair::new(0.3, -0.2).unwrap();
        assert_eq!(squared_error(a, a), 0.0);
        let b = PhasePair::new(0.4, -0.2).unwrap();
        assert!(approx_rel(squared_error(b, a), 0.01, 1e-12));
        let c = PhasePair::new(1.0, 1.0).unwrap();
        let d = PhasePair::new(-1.0, -1.0).unwrap();
        assert_eq!(squared_error(c, d), 8.0);
    }

    #[test]
    fn bound_params_validation() {
        assert!(BoundParams::new([0.0; 5], 10, 1.2).is_err());
        assert!(BoundParams::new([0.0; 5], 0, 0.5).is_err());
        assert!(BoundParams::new([1.0, -1.0, 1.0, 1.0, 1.0], 10, 0.5).is_err());
        assert!(BoundParams::new([0.0; 5], 1, 0.0).is_ok());
    }

    #[test]
    fn bound_vacuous_at_zero_epsilon() {
        let p = BoundParams::new([7.0, 1.0, 2.0, 3.0, 4.0], 100, 0.0).unwrap();
        assert!(approx_rel(error_probability_bound_raw(&p), 16.0, 1e-12));
        assert_eq!(error_probability_bound(&p), 1.0);
    }

    #[test]
    fn bound_decays_with_n() {
        let lam = [100.0; 5];
        let p = BoundParams::new(lam, 1_000_000_000, 0.5).unwrap();
        assert!(error_probability_bound(&p) < 1e-300);
        assert!(log_error_probability_bound(&p) < -1e6);
    }

    #[test]
    fn bound_matches_direct_evaluation() {
        let p = BoundParams::new([0.0, 100.0, 100.0, 100.0, 100.0], 10_000, 0.05).unwrap();
        let direct = 16.0 * (-(10_000.0 / 32.0) * (0.05 * 100.0 / 101.0_f64).powi(2)).exp();
        assert!(approx_rel(error_probability_bound_raw(&p), direct, 1e-12));
    }

    #[test]
    fn bound_monotone_in_n_and_epsilon() {
        let lam = [0.0, 16.4, 1.8, 16.4, 1.8];
        let mut prev = f64::INFINITY;
        for n in [10u64, 100, 1000, 10_000, 100_000] {
            let b = error_probability_bound_raw(&BoundParams::new(lam, n, 0.1).unwrap());
            assert!(b <= prev);
            prev = b;
        }
        let mut prev = f64::INFINITY;
        for eps in [0.0, 0.01, 0.05, 0.1, 0.5, 1.0] {
            let b = error_probability_bound_raw(&BoundParams::new(lam, 1000, eps).unwrap());
            assert!(b <= prev);
            prev = b;
        }
        // monotonicity in λ runs through λ ↦ λ/(1+λ) being increasing
        let mut prev = -1.0;
        for l in [0.0, 0.1, 1.0, 10.0, 1e6] {
            let x = l / (1.0 + l);
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn chi2_sampler_moments() {
        let mut rng = RngStream::new(41, 0);
        let n = 1_000_000usize;

        let mean0: f64 = (0..n)
            .map(|_| sample_noncentral_chi2(&mut rng, 2, 0.0))
            .sum::<f64>()
            / n as f64;
        assert!(approx_rel(mean0, 2.0, 0.01));

        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = sample_noncentral_chi2(&mut rng, 2, 5.0);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(approx_rel(mean, 7.0, 0.01));
        assert!(approx_rel(var, 24.0, 0.03));
    }

    #[test]
    fn chi2_sampler_matches_scaled_power_law() {
        // the pilot pipeline and the direct sampler must agree in moments
        let sigma2 = 1.0;
        let p = 2.0;
        let h = Complex64::new(0.6, 0.8);
        let lambda = noncentrality(p, h, sigma2);
        let mut rng = RngStream::new(43, 0);
        let n = 1_000_000usize;
        let (mut s1, mut q1, mut s2, mut q2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = 2.0 / sigma2 * received_power(received_pilot(h, p, &mut rng, sigma2));
            let y = sample_noncentral_chi2(&mut rng, 2, lambda);
            s1 += x;
            q1 += x * x;
            s2 += y;
            q2 += y * y;
        }
        let (m1, m2) = (s1 / n as f64, s2 / n as f64);
        let v1 = q1 / n as f64 - m1 * m1;
        let v2 = q2 / n as f64 - m2 * m2;
        assert!(approx_rel(m1, m2, 0.02));
        assert!(approx_rel(v1, v2, 0.02));
    }

    #[test]
    fn tail_clips_at_zero_threshold() {
        let agg = SubExpParams::noncentral_chi2(2, 0.0).iid_sum(100);
        assert_eq!(sub_exponential_tail(&agg, 100, 0.0), 1.0);
    }

    #[test]
    fn tail_branches_agree_at_crossover() {
        let agg = SubExpParams::noncentral_chi2(2, 1.5).iid_sum(50);
        let n = 50u64;
        let nf = n as f64;
        let t_star = agg.nu * agg.nu / (nf * agg.b);
        let gauss = 2.0 * (-nf * t_star * t_star / (2.0 * agg.nu * agg.nu / nf)).exp();
        let exp_branch = 2.0 * (-nf * t_star / (2.0 * agg.b)).exp();
        assert!(approx_rel(gauss, exp_branch, 1e-12));
        let at = sub_exponential_tail(&agg, n, t_star);
        assert!(approx_rel(at, gauss.min(1.0), 1e-12));
    }

    #[test]
    fn tail_gaussian_regime_matches_corollary_form() {
        // ν* = 2√n(2+2a) with a = 0, n = 100, t = 1: 8(2+2a)² = 32, so the
        // bound is 2·exp(-100/32) on both routes
        let a = 0.0;
        let n = 100u64;
        let agg = SubExpParams::noncentral_chi2(2, a).iid_sum(n);
        assert!(approx_rel(agg.nu, 2.0 * (n as f64).sqrt() * (2.0 + 2.0 * a), 1e-12));
        let via_theorem = sub_exponential_tail(&agg, n, 1.0);
        let via_corollary = corollary_tail(a, n, 1.0);
        let direct = 2.0 * (-100.0f64 / 32.0).exp();
        assert!(approx_rel(via_theorem, direct, 1e-12));
        assert!(approx_rel(via_corollary, direct, 1e-12));
    }

    #[test]
    fn corollary_examples() {
        // t → 0⁺ clips at one
        assert_eq!(corollary_tail(0.0, 10, 1e-12), 1.0);
        // n = 8(2+0)² = 32, t = 1 → 2/e
        let v = corollary_tail(0.0, 32, 1.0);
        assert!(approx_rel(v, 2.0 * (-1.0f64).exp(), 1e-12));
    }

    #[test]
    fn corollary_dominates_empirical_tails() {
        let n = 100u64;
        let reps = 20_000usize;
        for a in [0.0, 5.0] {
            let mut rng = RngStream::new(47, a as u64);
            let mut exceed = [0usize; 3];
            let ts = [0.5, 1.0, 2.0];
            for _ in 0..reps {
                let mean: f64 = (0..n)
                    .map(|_| sample_noncentral_chi2(&mut rng, 2, a))
                    .sum::<f64>()
                    / n as f64;
                let dev = (mean - (2.0 + a)).abs();
                for (i, &t) in ts.iter().enumerate() {
                    if dev >= t {
                        exceed[i] += 1;
                    }
                }
            }
            for (i, &t) in ts.iter().enumerate() {
                let emp = exceed[i] as f64 / reps as f64;
                assert!(
                    emp <= corollary_tail(a, n, t),
                    "a={a} t={t}: {emp} > {}",
                    corollary_tail(a, n, t)
                );
            }
        }
    }

    #[test]
    fn mgf_inequality_on_grid() {
        // E[exp(t(X-(p+a)))] ≤ exp(2(p+2a)t²) on |t| ≤ 1/4
        for (p, a) in [(2u32, 0.0), (2, 5.0), (4, 1.0)] {
            for i in 0..100 {
                let t = -0.25 + 0.5 * i as f64 / 99.0;
                let mgf = noncentral_chi2_centered_mgf(p, a, t);
                let rhs = (2.0 * (p as f64 + 2.0 * a) * t * t).exp();
                assert!(
                    mgf <= rhs * (1.0 + 1e-12),
                    "p={p} a={a} t={t}: {mgf} > {rhs}"
                );
            }
        }
    }

    #[test]
    fn lambda_inputs_come_from_channel() {
        // the bound evaluator is channel-agnostic; probe λ's plug in directly
        let g = HmtGeometry::default();
        let l = LinkGeometry::new(200.0, 0.68, -0.45, 1.0).unwrap();
        let sigma2 = dbm_to_watts(-115.0);
        let p = dbm_to_watts(10.0);
        let center = PhasePair::new(0.675, -0.455).unwrap();
        let ps =
            crate::estimator::ProbeSet::build(center, 0.01, 0.01, &g).unwrap();
        let mut lam = [0.0; 5];
        for (k, probe) in ps.probes().iter().enumerate() {
            lam[k] = noncentrality(p, channel_gain(&g, &l, probe), sigma2);
        }
        assert!(lam[0] > 1.0);
        let params = BoundParams::new(lam, 2000, 0.05).unwrap();
        let b = error_probability_bound(&params);
        assert!(b > 0.0 && b <= 1.0);
    }
}
