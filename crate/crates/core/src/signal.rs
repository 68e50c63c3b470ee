//! Stochastic pilot reception.
//!
//! A pilot symbol of power P is sent through the (possibly perturbed) channel
//! and received under complex AWGN; the observable used by the estimator is
//! the received power |y|². All randomness flows through [`RngStream`], a
//! seeded ChaCha stream: identical (seed, stream id) reproduce identical
//! draws, distinct stream ids are independent, so parallel trials stay
//! reproducible regardless of scheduling.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{channel_gain, HmtGeometry, LinkGeometry, PhasePair};
use crate::error::{Error, Result};

/// Converts a dBm figure to watts: 10^((p - 30)/10).
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10.0f64.powf((p_dbm - 30.0) / 10.0)
}

/// AWGN power plus the scatter (non-line-of-sight) perturbation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
    nlos_path_count: u32,
    nlos_power_offset_db: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64, nlos_path_count: u32, nlos_power_offset_db: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::NonPositive {
                name: "sigma2",
                value: sigma2,
            });
        }
        if !(nlos_power_offset_db <= 0.0) {
            return Err(Error::OutOfRange {
                name: "nlos_power_offset_db",
                value: nlos_power_offset_db,
                lo: f64::NEG_INFINITY,
                hi: 0.0,
            });
        }
        Ok(Self {
            sigma2,
            nlos_path_count,
            nlos_power_offset_db,
        })
    }

    /// AWGN only, no scatter paths.
    pub fn awgn(sigma2: f64) -> Result<Self> {
        Self::new(sigma2, 0, 0.0)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn nlos_path_count(&self) -> u32 {
        self.nlos_path_count
    }

    pub fn nlos_power_offset_db(&self) -> f64 {
        self.nlos_power_offset_db
    }
}

/// -115 dBm AWGN with four scatter paths 20 dB below the line-of-sight power.
impl Default for NoiseModel {
    fn default() -> Self {
        Self::new(dbm_to_watts(-115.0), 4, -20.0).expect("default noise model is valid")
    }
}

/// Pilot power and total pilot budget N; uniform exploration spends
/// ⌊N/5⌋ pilots per probe epoch and discards the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotConfig {
    pilot_power: f64,
    total_pilots: u64,
}

impl PilotConfig {
    pub fn new(pilot_power: f64, total_pilots: u64) -> Result<Self> {
        if !(pilot_power > 0.0 && pilot_power.is_finite()) {
            return Err(Error::NonPositive {
                name: "pilot_power",
                value: pilot_power,
            });
        }
        if total_pilots < 5 {
            return Err(Error::PilotBudget {
                needed: 5,
                available: total_pilots,
            });
        }
        Ok(Self {
            pilot_power,
            total_pilots,
        })
    }

    pub fn pilot_power(&self) -> f64 {
        self.pilot_power
    }

    pub fn total_pilots(&self) -> u64 {
        self.total_pilots
    }

    /// Pilots per probe epoch, n = ⌊N/5⌋.
    pub fn per_epoch(&self) -> u64 {
        self.total_pilots / 5
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream: ChaCha8 keyed by `seed` on stream `stream_id`.
///
/// Streams are single-owner mutable state. Parallel work items must take
/// distinct stream ids (or [`RngStream::substream`] children) so results do
/// not depend on scheduling order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives an independent child stream keyed by `key`.
    ///
    /// The child's stream id mixes the parent id with the key, so distinct
    /// (parent, key) pairs land on distinct ChaCha streams and a child never
    /// shares state with its parent.
    pub fn substream(&self, key: u64) -> RngStream {
        let sid = mix64(self.stream_id ^ mix64(key ^ 0xa076_1d64_78bd_642f));
        RngStream::new(self.seed, sid)
    }

    /// One standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Circularly symmetric complex Gaussian noise with total variance σ²
/// (σ²/2 per component).
pub fn sample_awgn(rng: &mut RngStream, sigma2: f64) -> Complex64 {
    let s = (sigma2 / 2.0).sqrt();
    Complex64::new(s * rng.standard_normal(), s * rng.standard_normal())
}

/// Sum of the scatter-path coefficients for one fading block.
///
/// Each of the `nlos_path_count` paths is an independent CN(0, σ_s²) draw
/// with σ_s² = los_power · 10^(offset_db/10). The returned value is added to
/// the line-of-sight gain before pilot scaling.
pub fn sample_nlos_perturbation(
    rng: &mut RngStream,
    model: &NoiseModel,
    los_power: f64,
) -> Complex64 {
    let sigma_s2 = los_power * 10.0f64.powf(model.nlos_power_offset_db() / 10.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..model.nlos_path_count() {
        sum += sample_awgn(rng, sigma_s2);
    }
    sum
}

/// y = √P · H_eff + ζ, one received pilot symbol.
pub fn received_pilot(
    h_eff: Complex64,
    pilot_power: f64,
    rng: &mut RngStream,
    sigma2: f64,
) -> Complex64 {
    pilot_power.sqrt() * h_eff + sample_awgn(rng, sigma2)
}

/// r = |y|².
pub fn received_power(y: Complex64) -> f64 {
    y.norm_sqr()
}

/// μ = E[r] = P|H|² + σ².
pub fn expected_power(h: Complex64, pilot_power: f64, sigma2: f64) -> f64 {
    pilot_power * h.norm_sqr() + sigma2
}

/// Anything that yields received-power samples for a commanded phase pair.
///
/// The estimator is written against this trait so it can run on simulated
/// links, replayed traces, or exact-mean test doubles.
pub trait PilotSource {
    fn received_power(&self, phase: &PhasePair, rng: &mut RngStream) -> f64;
}

/// Simulated pilot source for one estimation window.
///
/// The scatter perturbation is drawn once per window (block fading) and added
/// to the line-of-sight gain for every pilot; the reference power for the
/// scatter paths is the line-of-sight power at the beam peak, which does not
/// depend on the commanded phase.
#[derive(Debug, Clone)]
pub struct SimulatedLink<'a> {
    geom: &'a HmtGeometry,
    link: &'a LinkGeometry,
    pilot_power: f64,
    sigma2: f64,
    nlos_offset: Complex64,
}

impl<'a> SimulatedLink<'a> {
    /// Line-of-sight only.
    pub fn los(geom: &'a HmtGeometry, link: &'a LinkGeometry, pilot_power: f64, sigma2: f64) -> Self {
        Self {
            geom,
            link,
            pilot_power,
            sigma2,
            nlos_offset: Complex64::new(0.0, 0.0),
        }
    }

    /// Draws the block-fading scatter offset from `rng` and freezes it for
    /// the lifetime of this source.
    pub fn with_nlos(
        geom: &'a HmtGeometry,
        link: &'a LinkGeometry,
        pilot_power: f64,
        noise: &NoiseModel,
        rng: &mut RngStream,
    ) -> Self {
        let peak = crate::channel::peak_gain(geom, link);
        let nlos_offset = sample_nlos_perturbation(rng, noise, peak * peak);
        Self {
            geom,
            link,
            pilot_power,
            sigma2: noise.sigma2(),
            nlos_offset,
        }
    }

    /// H_eff(β) = H(β) + scatter offset.
    pub fn effective_gain(&self, phase: &PhasePair) -> Complex64 {
        channel_gain(self.geom, self.link, phase) + self.nlos_offset
    }

    pub fn nlos_offset(&self) -> Complex64 {
        self.nlos_offset
    }

    pub fn pilot_power(&self) -> f64 {
        self.pilot_power
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

impl PilotSource for SimulatedLink<'_> {
    fn received_power(&self, phase: &PhasePair, rng: &mut RngStream) -> f64 {
        let y = received_pilot(self.effective_gain(phase), self.pilot_power, rng, self.sigma2);
        received_power(y)
    }
}
