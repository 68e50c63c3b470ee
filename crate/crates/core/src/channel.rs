//! Deterministic far-field channel model.
//!
//! The transceiver is a rectangular surface of phase-shifting elements.
//! Every element's phase is driven by two scalars (β₁, β₂) through a
//! linear-mod rule, and in the far field the resulting user-to-surface gain
//! factorizes into a complex scale times a product of two sinc patterns:
//!
//! ```text
//! H(β₁,β₂) = (√F λ e^{-j k₀ d₀} / (4π d₀)) · L_x L_y
//!            · sinc(K_x π (α₁ - β₁)) · sinc(K_y π (α₂ - β₂))
//! ```
//!
//! with K_x = L_x/λ, K_y = L_y/λ. |H| is maximal at β = α, so beam steering
//! reduces to estimating the user's direction cosines (α₁, α₂).

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub use num_complex::Complex64;

/// sin(x)/x with the removable singularity filled in.
///
/// Below |x| = 1e-8 the two-term series 1 - x²/6 is exact to f64 precision
/// and avoids the 0/0 branch.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Surface geometry and the carrier wavelength.
///
/// Derived quantities (K_x, K_y, element counts, wave number) are computed
/// once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HmtGeometry {
    surface_width: f64,
    surface_length: f64,
    element_spacing: f64,
    wavelength: f64,
    kx: f64,
    ky: f64,
    elements_x: u64,
    elements_y: u64,
    wave_number: f64,
}

impl HmtGeometry {
    /// Relative tolerance for the L/d_r element-count integrality check.
    const COUNT_TOL: f64 = 1e-9;

    pub fn new(
        surface_width: f64,
        surface_length: f64,
        element_spacing: f64,
        wavelength: f64,
    ) -> Result<Self> {
        for (name, value) in [
            ("surface_width", surface_width),
            ("surface_length", surface_length),
            ("element_spacing", element_spacing),
            ("wavelength", wavelength),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositive { name, value });
            }
        }
        let elements_x = Self::element_count('x', surface_width / element_spacing)?;
        let elements_y = Self::element_count('y', surface_length / element_spacing)?;
        Ok(Self {
            surface_width,
            surface_length,
            element_spacing,
            wavelength,
            kx: surface_width / wavelength,
            ky: surface_length / wavelength,
            elements_x,
            elements_y,
            wave_number: TAU / wavelength,
        })
    }

    fn element_count(axis: char, ratio: f64) -> Result<u64> {
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > Self::COUNT_TOL * rounded {
            return Err(Error::ElementCountNotIntegral { axis, ratio });
        }
        Ok(rounded as u64)
    }

    pub fn surface_width(&self) -> f64 {
        self.surface_width
    }

    pub fn surface_length(&self) -> f64 {
        self.surface_length
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// K_x = L_x/λ, the surface width in wavelengths.
    pub fn kx(&self) -> f64 {
        self.kx
    }

    /// K_y = L_y/λ.
    pub fn ky(&self) -> f64 {
        self.ky
    }

    /// M_x, the element count along x.
    pub fn elements_x(&self) -> u64 {
        self.elements_x
    }

    /// M_y, the element count along y.
    pub fn elements_y(&self) -> u64 {
        self.elements_y
    }

    /// k₀ = 2π/λ in rad/m.
    pub fn wave_number(&self) -> f64 {
        self.wave_number
    }

    /// Width of one sinc lobe in β₁ units, 1/K_x.
    pub fn lobe_width_x(&self) -> f64 {
        1.0 / self.kx
    }

    pub fn lobe_width_y(&self) -> f64 {
        1.0 / self.ky
    }
}

/// 30 GHz-class defaults: 1 m × 1 m surface, λ = 1 cm, quarter-wave spacing.
impl Default for HmtGeometry {
    fn default() -> Self {
        Self::new(1.0, 1.0, 0.0025, 0.01).expect("default geometry is valid")
    }
}

/// User placement relative to the surface center.
///
/// (α₁, α₂) are the direction cosines of the impinging wave; the optimal
/// phase-shift pair equals them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    distance: f64,
    alpha1: f64,
    alpha2: f64,
    radiation_factor: f64,
}

impl LinkGeometry {
    pub fn new(distance: f64, alpha1: f64, alpha2: f64, radiation_factor: f64) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::NonPositive {
                name: "distance",
                value: distance,
            });
        }
        if !(radiation_factor > 0.0 && radiation_factor.is_finite()) {
            return Err(Error::NonPositive {
                name: "radiation_factor",
                value: radiation_factor,
            });
        }
        for (name, value) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if !(value.is_finite() && (-1.0..=1.0).contains(&value)) {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    lo: -1.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self {
            distance,
            alpha1,
            alpha2,
            radiation_factor,
        })
    }

    /// From elevation θ and azimuth φ: α₁ = sin θ cos φ, α₂ = sin θ sin φ.
    pub fn from_angles(distance: f64, theta: f64, phi: f64, radiation_factor: f64) -> Result<Self> {
        Self::new(
            distance,
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            radiation_factor,
        )
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn radiation_factor(&self) -> f64 {
        self.radiation_factor
    }

    /// The beam that maximizes |H|: β = α.
    pub fn optimal_phase(&self) -> PhasePair {
        PhasePair::clamped(self.alpha1, self.alpha2)
    }
}

/// A phase-shift parameter pair, each coordinate in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    beta1: f64,
    beta2: f64,
}

impl PhasePair {
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        for (name, value) in [("beta1", beta1), ("beta2", beta2)] {
            if !(value.is_finite() && (-1.0..=1.0).contains(&value)) {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    lo: -1.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self { beta1, beta2 })
    }

    /// Clamp both coordinates to [-1, 1]. NaN is mapped to 0.
    pub fn clamped(beta1: f64, beta2: f64) -> Self {
        let c = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
        Self {
            beta1: c(beta1),
            beta2: c(beta2),
        }
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }
}

/// Far-field complex gain H(β₁, β₂) between the user and the surface.
pub fn channel_gain(geom: &HmtGeometry, link: &LinkGeometry, phase: &PhasePair) -> Complex64 {
    let scale = link.radiation_factor().sqrt() * geom.wavelength()
        / (4.0 * PI * link.distance())
        * geom.surface_width()
        * geom.surface_length();
    let carrier = Complex64::from_polar(1.0, -geom.wave_number() * link.distance());
    let sx = sinc(geom.kx() * PI * (link.alpha1() - phase.beta1()));
    let sy = sinc(geom.ky() * PI * (link.alpha2() - phase.beta2()));
    scale * sx * sy * carrier
}

/// |H| at the beam peak (β = α): √F λ L_x L_y / (4π d₀).
pub fn peak_gain(geom: &HmtGeometry, link: &LinkGeometry) -> f64 {
    link.radiation_factor().sqrt() * geom.wavelength() / (4.0 * PI * link.distance())
        * geom.surface_width()
        * geom.surface_length()
}

/// Phase shift applied by element (m_x, m_y):
/// -mod(k₀ d_r (m_x β₁ + m_y β₂), 2π), always in (-2π, 0].
///
/// Index conventions: odd M uses {-(M-1)/2, …, (M-1)/2}; even M uses
/// {-M/2, …, M/2 - 1}.
pub fn element_phase_shift(
    geom: &HmtGeometry,
    phase: &PhasePair,
    m_x: i64,
    m_y: i64,
) -> Result<f64> {
    check_element_index('x', m_x, geom.elements_x())?;
    check_element_index('y', m_y, geom.elements_y())?;
    let raw = geom.wave_number()
        * geom.element_spacing()
        * (m_x as f64 * phase.beta1() + m_y as f64 * phase.beta2());
    Ok(-raw.rem_euclid(TAU))
}

fn check_element_index(axis: char, index: i64, count: u64) -> Result<()> {
    let m = count as i64;
    let (lo, hi) = if m % 2 == 1 {
        (-(m - 1) / 2, (m - 1) / 2)
    } else {
        (-m / 2, m / 2 - 1)
    };
    if index < lo || index > hi {
        return Err(Error::ElementIndexOutOfRange { axis, index, count });
    }
    Ok(())
}

/// Data rate log₂(1 + P|H|²/σ²) in bits per channel use.
pub fn achievable_rate(p_tx: f64, gain: Complex64, sigma2: f64) -> f64 {
    (1.0 + p_tx * gain.norm_sqr() / sigma2).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn table_link(d0: f64, alpha1: f64, alpha2: f64) -> LinkGeometry {
        LinkGeometry::new(d0, alpha1, alpha2, 1.0).unwrap()
    }

    #[test]
    fn sinc_at_zero_is_one() {
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn sinc_at_pi_is_zero() {
        assert!(sinc(PI).abs() < 1e-15);
    }

    #[test]
    fn sinc_at_half_pi() {
        // sin(π/2)/(π/2) = 2/π
        assert!(approx_eq(sinc(PI / 2.0), 2.0 / PI, 1e-15));
        assert!(approx_eq(sinc(PI / 2.0), 0.636619772, 1e-9));
    }

    #[test]
    fn sinc_series_branch_is_continuous() {
        for &x in &[1e-9, 9.9e-9, 1.01e-8, 1e-7] {
            assert!(approx_eq(sinc(x), 1.0 - x * x / 6.0, 1e-16));
            assert!(approx_eq(sinc(-x), sinc(x), 1e-16));
        }
    }

    #[test]
    fn geometry_defaults_match_system_table() {
        let g = HmtGeometry::default();
        assert_eq!(g.kx(), 100.0);
        assert_eq!(g.ky(), 100.0);
        assert_eq!(g.elements_x(), 400);
        assert_eq!(g.elements_y(), 400);
        assert!(approx_eq(g.wave_number(), TAU / 0.01, 1e-9));
    }

    #[test]
    fn geometry_rejects_non_integral_element_count() {
        let err = HmtGeometry::new(1.0, 1.0, 0.0026, 0.01).unwrap_err();
        assert!(matches!(err, Error::ElementCountNotIntegral { axis: 'x', .. }));
        assert!(HmtGeometry::new(0.0, 1.0, 0.0025, 0.01).is_err());
    }

    #[test]
    fn link_rejects_out_of_range_cosines() {
        assert!(LinkGeometry::new(200.0, 1.2, 0.0, 1.0).is_err());
        assert!(LinkGeometry::new(-1.0, 0.5, 0.0, 1.0).is_err());
        assert!(LinkGeometry::new(200.0, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn link_from_angles_matches_direction_cosines() {
        let l = LinkGeometry::from_angles(100.0, 0.4, 1.1, 1.0).unwrap();
        assert!(approx_eq(l.alpha1(), 0.4f64.sin() * 1.1f64.cos(), 1e-15));
        assert!(approx_eq(l.alpha2(), 0.4f64.sin() * 1.1f64.sin(), 1e-15));
    }

    #[test]
    fn gain_at_peak_matches_closed_form() {
        let g = HmtGeometry::default();
        let l = table_link(200.0, 0.68, -0.45);
        let h = channel_gain(&g, &l, &PhasePair::new(0.68, -0.45).unwrap());
        // √F λ L_x L_y / (4π d₀) with the defaults and d₀ = 200 m
        let expected = 0.01 / (4.0 * PI * 200.0);
        assert!(approx_eq(h.norm(), expected, 1e-18));
        assert!(approx_eq(h.norm(), 3.9789e-6, 1e-9));
        assert!(approx_eq(peak_gain(&g, &l), expected, 1e-20));
    }

    #[test]
    fn gain_vanishes_one_lobe_off_peak() {
        let g = HmtGeometry::default();
        let l = table_link(200.0, 0.3, 0.1);
        let h = channel_gain(
            &g,
            &l,
            &PhasePair::new(0.3 + 1.0 / g.kx(), 0.1).unwrap(),
        );
        assert!(h.norm() / peak_gain(&g, &l) < 1e-12);
    }

    #[test]
    fn gain_peak_location_on_grid() {
        // coarse sweep over [-1,1]²: the argmax cell must contain α
        let g = HmtGeometry::default();
        let l = table_link(200.0, 0.68, -0.45);
        for res in [160usize, 201] {
            let cell = 2.0 / (res - 1) as f64;
            let mut best = (0.0f64, 0.0f64, -1.0f64);
            for i in 0..res {
                let b1 = -1.0 + cell * i as f64;
                for j in 0..res {
                    let b2 = -1.0 + cell * j as f64;
                    let h = channel_gain(&g, &l, &PhasePair::clamped(b1, b2)).norm();
                    if h > best.2 {
                        best = (b1, b2, h);
                    }
                }
            }
            assert!((best.0 - 0.68).abs() <= cell + 1e-12);
            assert!((best.1 + 0.45).abs() <= cell + 1e-12);
        }
    }

    #[test]
    fn gain_zero_lattice() {
        let g = HmtGeometry::default();
        let l = table_link(200.0, 0.68, -0.45);
        let peak = peak_gain(&g, &l);
        for k in [-30i32, -3, -1, 1, 2, 17] {
            let b1 = 0.68 + k as f64 / g.kx();
            if !(-1.0..=1.0).contains(&b1) {
                continue;
            }
            for b2 in [-0.45, 0.0, 0.9] {
                let h = channel_gain(&g, &l, &PhasePair::new(b1, b2).unwrap());
                assert!(h.norm() / peak < 1e-12, "k={k} b2={b2}");
            }
            // symmetric lattice on the other axis
            let b2 = -0.45 + k as f64 / g.ky();
            if (-1.0..=1.0).contains(&b2) {
                let h = channel_gain(&g, &l, &PhasePair::new(0.3, b2).unwrap());
                assert!(h.norm() / peak < 1e-12);
            }
        }
    }

    #[test]
    fn sine_shift_symmetry_for_commensurate_steps() {
        // |sin(Kπ(x ± v))| = |sin(Kπx)| whenever Kv is an integer; this is
        // the identity the probe-ratio inversion relies on.
        let kx = 100.0;
        let mut x = 0.017f64;
        for _ in 0..200 {
            x = (x * 1.7 + 0.093).rem_euclid(2.0) - 1.0;
            for v in [0.01, 0.05, 0.2] {
                let a = (kx * PI * (x + v)).sin().abs();
                let b = (kx * PI * (x - v)).sin().abs();
                let c = (kx * PI * x).sin().abs();
                assert!(approx_eq(a, c, 1e-9));
                assert!(approx_eq(b, c, 1e-9));
            }
        }
    }

    #[test]
    fn element_phase_center_is_zero() {
        let g = HmtGeometry::default();
        let p = PhasePair::new(0.37, -0.81).unwrap();
        assert_eq!(element_phase_shift(&g, &p, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn element_phase_full_period_wraps_to_zero() {
        let g = HmtGeometry::default();
        // k₀ d_r = π/2, so m_x β₁ + m_y β₂ = 4 gives exactly 2π
        let p = PhasePair::new(1.0, 1.0).unwrap();
        let v = element_phase_shift(&g, &p, 2, 2).unwrap();
        assert!(approx_eq(v, 0.0, 1e-12));
    }

    #[test]
    fn element_phase_quarter_wave_spacing() {
        // d_r = λ/4 gives k₀ d_r = π/2; m = (1, 0) with β = (1, 0) lands at -π/2
        let g = HmtGeometry::default();
        let p = PhasePair::new(1.0, 0.0).unwrap();
        let v = element_phase_shift(&g, &p, 1, 0).unwrap();
        assert!(approx_eq(v, -PI / 2.0, 1e-12));
    }

    #[test]
    fn element_phase_rejects_out_of_range_index() {
        let g = HmtGeometry::default();
        let p = PhasePair::new(0.0, 0.0).unwrap();
        // even M = 400: valid range is {-200, …, 199}
        assert!(element_phase_shift(&g, &p, 199, 0).is_ok());
        assert!(element_phase_shift(&g, &p, -200, 0).is_ok());
        assert!(element_phase_shift(&g, &p, 200, 0).is_err());
        assert!(element_phase_shift(&g, &p, 0, -201).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(achievable_rate(0.1, Complex64::new(0.0, 0.0), 1e-9), 0.0);
        // P|H|²/σ² = 1 → one bit
        assert!(approx_eq(
            achievable_rate(2.0, Complex64::new(1.0, 0.0), 2.0),
            1.0,
            1e-15
        ));
        // system-table numbers: P = 0.1 W, |H| = 3.9789e-6, σ² = 3.1623e-15 W
        let h = Complex64::new(3.9789e-6, 0.0);
        let rate = achievable_rate(0.1, h, 3.1623e-15);
        let snr = 0.1 * 3.9789e-6f64.powi(2) / 3.1623e-15;
        let expected = (1.0 + snr).ln() / std::f64::consts::LN_2;
        assert!(approx_eq(rate, expected, 1e-12));
        assert!(approx_eq(rate, 8.9705, 1e-4));
    }

    #[test]
    fn rate_monotone_in_gain() {
        let mut prev = -1.0;
        for i in 0..50 {
            let h = Complex64::new(1e-7 * i as f64, 2e-8 * i as f64);
            let r = achievable_rate(0.1, h, 3.1623e-15);
            assert!(r >= prev);
            prev = r;
        }
    }

    proptest! {
        #[test]
        fn element_phase_range(
            b1 in -1.0f64..=1.0,
            b2 in -1.0f64..=1.0,
            mx in -200i64..200,
            my in -200i64..200,
        ) {
            let g = HmtGeometry::default();
            let p = PhasePair::new(b1, b2).unwrap();
            let v = element_phase_shift(&g, &p, mx, my).unwrap();
            prop_assert!(v <= 0.0 && v > -TAU);
        }

        #[test]
        fn sinc_bounded(x in -1e4f64..1e4) {
            let s = sinc(x);
            prop_assert!(s.is_finite());
            prop_assert!(s.abs() <= 1.0 + 1e-15);
        }
    }
}
