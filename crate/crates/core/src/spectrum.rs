//! Box constants, the energy eigenbasis and initial states expanded in it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::quadrature::composite_adaptive_simpson;
use crate::trig::sin_pi;
use crate::{Error, Result};

/// Default discarded-probability budget when truncating a Gaussian expansion.
pub const DEFAULT_TRUNC_EPS: f64 = 1e-12;

/// Absolute tolerance for each overlap integral in [`GaussianMode::Quadrature`].
pub const OVERLAP_TOL: f64 = 1e-12;

/// Physical constants of the box: width `L`, mass `m` and `hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxConfig {
    length: f64,
    mass: f64,
    hbar: f64,
}

impl Default for BoxConfig {
    fn default() -> Self {
        Self::natural()
    }
}

impl BoxConfig {
    pub fn new(length: f64, mass: f64, hbar: f64) -> Result<Self> {
        for (name, v) in [("length", length), ("mass", mass), ("hbar", hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { length, mass, hbar })
    }

    /// `hbar = m = L = 1`.
    pub fn natural() -> Self {
        Self { length: 1.0, mass: 1.0, hbar: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `E_1 = hbar^2 pi^2 / (2 m L^2)`.
    pub fn ground_energy(&self) -> f64 {
        self.hbar * self.hbar * PI * PI / (2.0 * self.mass * self.length * self.length)
    }

    /// Ground-state period `T_g = 2 pi hbar / E_1 = 4 m L^2 / (hbar pi)`.
    ///
    /// Every relative phase `(E_n - E_j) t / hbar` is a multiple of `2 pi` at
    /// `t = T_g`, so all dynamics in the box is exactly `T_g`-periodic.
    pub fn recurrence_period(&self) -> f64 {
        4.0 * self.mass * self.length * self.length / (self.hbar * PI)
    }

    /// `nu = E_1 / hbar`.
    pub fn frequency(&self) -> f64 {
        self.ground_energy() / self.hbar
    }

    /// `E_n = n^2 E_1`.
    pub fn energy_level(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("energy levels start at n = 1"));
        }
        let n = n as f64;
        Ok(n * n * self.ground_energy())
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.length
    }

    /// Maps `x` in `[-L/2, L/2]` to the wall coordinate `u = x/L + 1/2` in `[0, 1]`,
    /// rejecting positions outside the box.
    pub fn wall_coordinate(&self, x: f64) -> Result<f64> {
        let h = self.half_width();
        let slack = 1e-12 * self.length;
        if !x.is_finite() || x < -h - slack || x > h + slack {
            return Err(Error::OutsideBox { x, lo: -h, hi: h });
        }
        Ok((x / self.length + 0.5).clamp(0.0, 1.0))
    }

    /// `<x|n> = sqrt(2/L) sin(n pi (x/L + 1/2))`, vanishing at both walls.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("eigenfunctions start at n = 1"));
        }
        let u = self.wall_coordinate(x)?;
        Ok(self.eigenfunction_at_wall_coordinate(n, u))
    }

    pub(crate) fn eigenfunction_at_wall_coordinate(&self, n: usize, u: f64) -> f64 {
        (2.0 / self.length).sqrt() * sin_pi(n as f64 * u)
    }
}

/// How the energy-basis overlaps of the Gaussian packet are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianMode {
    /// Closed-form overlap of the untruncated Gaussian, renormalized after truncation.
    Analytic,
    /// Numerical overlaps of the exact packet, including the constant that
    /// makes it vanish at the walls.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateKind {
    Gaussian { sigma: f64, mode: GaussianMode },
    Uniform { n: usize },
    /// Built from explicit amplitudes.
    Custom,
}

/// A normalized pure state as complex amplitudes over levels `1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyState {
    coeffs: Vec<Complex64>,
    config: BoxConfig,
    kind: StateKind,
}

impl EnergyState {
    /// Normalizes `coeffs` (entry `i` is level `i + 1`) into a state.
    pub fn from_amplitudes(coeffs: Vec<Complex64>, config: BoxConfig) -> Result<Self> {
        Self::normalized(coeffs, config, StateKind::Custom)
    }

    /// The single eigenstate `|n>`.
    pub fn eigenstate(n: usize, config: BoxConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("eigenstates start at n = 1"));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        coeffs[n - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { coeffs, config, kind: StateKind::Custom })
    }

    fn normalized(mut coeffs: Vec<Complex64>, config: BoxConfig, kind: StateKind) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("a state needs at least one level"));
        }
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("amplitudes must have a finite, nonzero norm"));
        }
        for c in &mut coeffs {
            *c /= norm;
        }
        Ok(Self { coeffs, config, kind })
    }

    /// Amplitudes; index `i` holds level `i + 1`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Amplitude of level `n`; zero beyond the truncation.
    pub fn amplitude(&self, n: usize) -> Complex64 {
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(n - 1).copied().unwrap_or_default()
    }

    pub fn config(&self) -> &BoxConfig {
        &self.config
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    /// Highest retained level.
    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    /// Occupation probabilities `|c_n|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Mean energy and its standard deviation, summed over the occupied levels.
    pub fn energy_spread(&self) -> (f64, f64) {
        let e1 = self.config.ground_energy();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = e1 * ((i + 1) as f64).powi(2);
            let p = c.norm_sqr();
            m1 += p * e;
            m2 += p * e * e;
        }
        (m1, (m2 - m1 * m1).max(0.0).sqrt())
    }

    /// Inverse participation ratio `1 / sum |c_n|^4`.
    pub fn effective_dimension(&self) -> f64 {
        effective_dimension(self)
    }
}

pub fn energy_level(n: usize, cfg: &BoxConfig) -> Result<f64> {
    cfg.energy_level(n)
}

pub fn eigenfunction(n: usize, x: f64, cfg: &BoxConfig) -> Result<f64> {
    cfg.eigenfunction(n, x)
}

pub fn effective_dimension(state: &EnergyState) -> f64 {
    1.0 / state.coeffs.iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>()
}

/// `L / (4 sqrt(pi) sigma)`, the leading behaviour of the Gaussian packet's
/// effective dimension for `sigma << L`.
pub fn deff_gaussian_closed_form(sigma: f64, cfg: &BoxConfig) -> f64 {
    cfg.length() / (4.0 * PI.sqrt() * sigma)
}

/// Inverse of [`deff_gaussian_closed_form`].
pub fn sigma_for_deff(deff: f64, cfg: &BoxConfig) -> f64 {
    cfg.length() / (4.0 * PI.sqrt() * deff)
}

fn check_sigma(sigma: f64, cfg: &BoxConfig) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if sigma >= 0.25 * cfg.length() {
        return Err(Error::invalid(format!(
            "sigma = {sigma} must be below L/4 = {} for the packet to sit inside the box",
            0.25 * cfg.length()
        )));
    }
    Ok(())
}

/// Unnormalized closed-form overlap `<Psi_G|n>`.
pub fn gaussian_overlap_analytic(n: usize, sigma: f64, cfg: &BoxConfig) -> f64 {
    let r = sigma / cfg.length();
    let a = n as f64 * PI * r;
    (2.0 * PI * r * r).powf(0.25) * (-a * a).exp() * 2.0 * sin_pi(0.5 * n as f64)
}

/// Smallest even `N` whose analytic tail probability `sum_{n > N} |c_n|^2`
/// falls below `trunc_eps`.
pub fn gaussian_truncation(sigma: f64, trunc_eps: f64, cfg: &BoxConfig) -> Result<usize> {
    check_sigma(sigma, cfg)?;
    if !(trunc_eps > 0.0 && trunc_eps < 1.0) {
        return Err(Error::invalid(format!("trunc_eps must lie in (0, 1), got {trunc_eps}")));
    }
    let r = sigma / cfg.length();
    // e^{-2 (n pi r)^2} < 1e-320 beyond this level
    let n_hi = ((368.0f64).sqrt() / (PI * r)).ceil() as usize + 2;
    let weights: Vec<f64> = (1..=n_hi)
        .map(|n| {
            if n % 2 == 0 {
                0.0
            } else {
                let a = n as f64 * PI * r;
                (-2.0 * a * a).exp()
            }
        })
        .collect();
    let total: f64 = weights.iter().rev().sum();
    // tail[N] = sum over levels > N, accumulated from the small end
    let mut tail = 0.0;
    let mut best = n_hi;
    for big_n in (0..n_hi).rev() {
        tail += weights[big_n]; // level big_n + 1
        if big_n % 2 == 0 {
            if tail / total < trunc_eps {
                best = big_n;
            } else {
                break;
            }
        }
    }
    Ok(best.max(2))
}

/// Gaussian packet of width `sigma` centred in the box, expanded in the
/// eigenbasis and truncated at [`gaussian_truncation`].
pub fn gaussian_state(sigma: f64, mode: GaussianMode, trunc_eps: f64, cfg: &BoxConfig) -> Result<EnergyState> {
    let n_max = gaussian_truncation(sigma, trunc_eps, cfg)?;
    let amps: Vec<f64> = match mode {
        GaussianMode::Analytic => (1..=n_max).map(|n| gaussian_overlap_analytic(n, sigma, cfg)).collect(),
        GaussianMode::Quadrature => gaussian_overlaps_quadrature(sigma, n_max, cfg)?,
    };
    let coeffs = amps.into_iter().map(|a| Complex64::new(a, 0.0)).collect();
    EnergyState::normalized(coeffs, *cfg, StateKind::Gaussian { sigma, mode })
}

/// Overlaps of the exact packet `N (e^{-(x/2 sigma)^2} - e^{-(L/4 sigma)^2})`
/// with levels `1..=n_max`, by adaptive quadrature.
pub fn gaussian_overlaps_quadrature(sigma: f64, n_max: usize, cfg: &BoxConfig) -> Result<Vec<f64>> {
    check_sigma(sigma, cfg)?;
    let l = cfg.length();
    let h = cfg.half_width();
    let floor = (-(l / (4.0 * sigma)).powi(2)).exp();
    let packet = move |x: f64| (-(x / (2.0 * sigma)).powi(2)).exp() - floor;

    // The packet is even, so integrate on [0, L/2] and fold.
    let base_panels = (h / sigma).ceil() as usize + 8;
    let norm_sqr = 2.0 * composite_adaptive_simpson(&|x: f64| packet(x).powi(2), 0.0, h, base_panels, OVERLAP_TOL)?;
    let scale = 1.0 / norm_sqr.sqrt();

    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            if n % 2 == 0 {
                // <x|n> is odd about the centre for even n
                return Ok(0.0);
            }
            let folded = |x: f64| {
                let u = x / l + 0.5;
                let phi = cfg.eigenfunction_at_wall_coordinate(n, u)
                    + cfg.eigenfunction_at_wall_coordinate(n, 1.0 - u);
                scale * packet(x) * phi
            };
            composite_adaptive_simpson(&folded, 0.0, h, base_panels + n, OVERLAP_TOL)
        })
        .collect()
}

/// Equal superposition of the lowest `n` levels.
pub fn uniform_state(n: usize, cfg: &BoxConfig) -> Result<EnergyState> {
    if n == 0 {
        return Err(Error::invalid("uniform state needs N >= 1"));
    }
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    EnergyState::normalized(vec![amp; n], *cfg, StateKind::Uniform { n })
}
