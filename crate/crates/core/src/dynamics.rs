//! Exact energy-basis dynamics: the dephased state, the distinguishability
//! `D(t) = |tr A (rho(t) - omega)|`, its time average over one recurrence
//! period, and spatial densities.
//!
//! With `c_n(t) = c_n exp(-i E_n t / hbar)` and `E_n = n^2 E_1`, every
//! off-diagonal pair `n > j` contributes a harmonic of integer frequency
//! `k = n^2 - j^2` in units of `nu = 2 pi / T_g`:
//!
//! ```text
//! tr A (rho(t) - omega) = 2 Re sum_{n > j} c_n c_j* <n|A|j> exp(-2 pi i k t / T_g)
//! ```
//!
//! [`DephasingSum`] stores those `(k, weight)` pairs once. Single instants are
//! evaluated term by term; a uniform grid over a full period is evaluated
//! exactly with one FFT after folding `k` modulo the grid size.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::spectrum::{BoxConfig, EnergyState};
use crate::window::WindowMatrix;
use crate::{Error, Result};

/// Off-diagonal terms with `|c_n c_j a_nj|` below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-16;

/// Upper limit on grid points for period averages.
pub const MAX_SAMPLES: usize = 1 << 22;

/// Relative change under grid doubling accepted as converged.
pub const AVERAGE_REL_TOL: f64 = 1e-4;

/// Default number of samples per period: `64 N_max^2`, capped.
pub fn default_samples(n_max: usize) -> usize {
    64usize.saturating_mul(n_max.saturating_mul(n_max)).clamp(2, MAX_SAMPLES)
}

/// `exp(-2 pi i k s)` with the argument reduced modulo one cycle first.
#[inline]
fn harmonic(k: f64, s_frac: f64) -> Complex64 {
    let cycles = k * s_frac;
    let angle = 2.0 * PI * (cycles - cycles.floor());
    Complex64::new(angle.cos(), -angle.sin())
}

fn fraction_of_period(t: f64, cfg: &BoxConfig) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::invalid(format!("time must be finite, got {t}")));
    }
    let s = t / cfg.recurrence_period();
    Ok(s - s.floor())
}

/// The dephased state `omega`: diagonal occupation probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    probs: Vec<f64>,
    config: BoxConfig,
}

impl EquilibriumState {
    /// `p_n` for `n = 1..=len`, stored at index `n - 1`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn config(&self) -> &BoxConfig {
        &self.config
    }

    /// `tr A omega = sum_n p_n <n|A|n>`.
    pub fn window_probability(&self, matrix: &WindowMatrix) -> Result<f64> {
        check_dim(self.probs.len(), matrix)?;
        Ok(self.probs.iter().enumerate().map(|(i, p)| p * matrix.get(i + 1, i + 1)).sum())
    }
}

pub fn equilibrium(state: &EnergyState) -> EquilibriumState {
    EquilibriumState { probs: state.probabilities(), config: *state.config() }
}

fn check_dim(needed: usize, matrix: &WindowMatrix) -> Result<()> {
    if matrix.dim() < needed {
        return Err(Error::DimensionMismatch { needed, available: matrix.dim() });
    }
    Ok(())
}

/// Sampled distinguishability; `times` are in units of `T_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Result of a converged period average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverage {
    pub mean: f64,
    /// Grid size of the returned mean.
    pub samples: usize,
    /// Relative change against the grid of half (or double) the size.
    pub rel_change: f64,
}

#[derive(Debug, Clone, Copy)]
struct Harmonic {
    k: u64,
    weight: Complex64,
}

/// Precomputed off-diagonal harmonics of `tr A rho(t)` for one state and window.
#[derive(Debug, Clone)]
pub struct DephasingSum {
    config: BoxConfig,
    static_part: f64,
    terms: Vec<Harmonic>,
}

impl DephasingSum {
    pub fn new(state: &EnergyState, matrix: &WindowMatrix) -> Result<Self> {
        let n_max = state.n_max();
        check_dim(n_max, matrix)?;
        let c = state.coeffs();
        let static_part = c.iter().enumerate().map(|(i, ci)| ci.norm_sqr() * matrix.get(i + 1, i + 1)).sum();

        let mut terms: Vec<Harmonic> = (1..=n_max)
            .into_par_iter()
            .flat_map_iter(|j| {
                let cj = c[j - 1].conj();
                let row = matrix.upper_row(j);
                ((j + 1)..=n_max).filter_map(move |n| {
                    let weight = c[n - 1] * cj * row[n - j];
                    if weight.norm() < PRUNE_THRESHOLD {
                        return None;
                    }
                    let k = (n as u64) * (n as u64) - (j as u64) * (j as u64);
                    Some(Harmonic { k, weight })
                })
            })
            .collect();
        // low frequencies first, for cache-friendly FFT folding
        terms.sort_by_key(|h| h.k);
        Ok(Self { config: *state.config(), static_part, terms })
    }

    pub fn config(&self) -> &BoxConfig {
        &self.config
    }

    /// Number of retained off-diagonal terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest retained frequency in units of `nu`.
    pub fn max_harmonic(&self) -> u64 {
        self.terms.last().map_or(0, |h| h.k)
    }

    /// `tr A omega`.
    pub fn equilibrium_probability(&self) -> f64 {
        self.static_part
    }

    fn deviation_at_fraction(&self, s_frac: f64) -> f64 {
        let z: Complex64 = self.terms.iter().map(|h| h.weight * harmonic(h.k as f64, s_frac)).sum();
        2.0 * z.re
    }

    /// Signed deviation `tr A (rho(t) - omega)`.
    pub fn deviation(&self, t: f64) -> Result<f64> {
        Ok(self.deviation_at_fraction(fraction_of_period(t, &self.config)?))
    }

    /// `D(t) = |tr A (rho(t) - omega)|`.
    pub fn distinguishability(&self, t: f64) -> Result<f64> {
        Ok(self.deviation(t)?.abs())
    }

    /// `tr A rho(t)`.
    pub fn outcome_probability(&self, t: f64) -> Result<f64> {
        Ok(self.static_part + self.deviation(t)?)
    }

    /// `D` at the given instants (units of `T_g`), evaluated in parallel.
    pub fn series(&self, times_over_tg: &[f64]) -> Result<TimeSeries> {
        let tg = self.config.recurrence_period();
        let values = times_over_tg
            .par_iter()
            .map(|&s| self.distinguishability(s * tg))
            .collect::<Result<Vec<_>>>()?;
        Ok(TimeSeries { times: times_over_tg.to_vec(), values })
    }

    /// Signed deviation at `t_m = m T_g / samples` for `m = 0..samples`.
    ///
    /// Exact up to rounding for any grid size: harmonics above the Nyquist
    /// limit alias onto the grid exactly as they would if evaluated directly.
    pub fn deviation_on_period_grid(&self, samples: usize) -> Vec<f64> {
        if samples == 0 {
            return Vec::new();
        }
        let mut bins = vec![Complex64::new(0.0, 0.0); samples];
        let m = samples as u64;
        for h in &self.terms {
            bins[(h.k % m) as usize] += h.weight;
        }
        let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(samples);
        fft.process(&mut bins);
        bins.into_iter().map(|z| 2.0 * z.re).collect()
    }

    /// `D` on the uniform period grid.
    pub fn period_grid(&self, samples: usize) -> TimeSeries {
        let values = self.deviation_on_period_grid(samples).into_iter().map(f64::abs).collect();
        let times = (0..samples).map(|i| i as f64 / samples as f64).collect();
        TimeSeries { times, values }
    }

    fn grid_mean(&self, samples: usize) -> f64 {
        let v = self.deviation_on_period_grid(samples);
        v.iter().map(|x| x.abs()).sum::<f64>() / samples as f64
    }

    /// Uniform-grid average of `D` over one exact period `[0, T_g)`.
    ///
    /// Starts at `n_samples` (capped at [`MAX_SAMPLES`]) and doubles the grid
    /// until two consecutive means differ by less than [`AVERAGE_REL_TOL`].
    /// At the cap the last grid is compared against half its size.
    pub fn time_average(&self, n_samples: usize) -> Result<TimeAverage> {
        if n_samples < 2 {
            return Err(Error::invalid("time average needs at least 2 samples"));
        }
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
        };
        let mut m = n_samples.min(MAX_SAMPLES);
        let mut current = self.grid_mean(m);
        loop {
            if m * 2 > MAX_SAMPLES {
                let half = self.grid_mean(m / 2);
                let change = rel(current, half);
                if change < AVERAGE_REL_TOL {
                    return Ok(TimeAverage { mean: current, samples: m, rel_change: change });
                }
                return Err(Error::NonConvergence { what: "period average of D(t)".into(), residual: change });
            }
            let next = self.grid_mean(2 * m);
            let change = rel(current, next);
            m *= 2;
            current = next;
            if change < AVERAGE_REL_TOL {
                return Ok(TimeAverage { mean: current, samples: m, rel_change: change });
            }
        }
    }

    /// First time in `(0, t_max]` where `D` drops below `level`, located on a
    /// grid of `steps` intervals and refined by bisection.
    pub fn first_drop_below(&self, level: f64, t_max: f64, steps: usize) -> Result<Option<f64>> {
        let f = |t: f64| self.distinguishability(t).map(|d| d - level);
        first_sign_change(f, t_max, steps, |v| v < 0.0)
    }

    /// First zero of the signed deviation in `(0, t_max]`.
    pub fn first_zero(&self, t_max: f64, steps: usize) -> Result<Option<f64>> {
        let d0 = self.deviation(0.0)?;
        let f = |t: f64| self.deviation(t);
        first_sign_change(f, t_max, steps, move |v| v == 0.0 || v.signum() != d0.signum())
    }
}

fn first_sign_change<F, P>(f: F, t_max: f64, steps: usize, crossed: P) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
    P: Fn(f64) -> bool,
{
    let steps = steps.max(1);
    let dt = t_max / steps as f64;
    let mut lo = 0.0;
    for i in 1..=steps {
        let t = dt * i as f64;
        if crossed(f(t)?) {
            let mut hi = t;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if crossed(f(mid)?) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        lo = t;
    }
    Ok(None)
}

/// `D_M(omega, rho(t))` for the two-outcome measurement `{A, 1 - A}`.
pub fn distinguishability(state: &EnergyState, matrix: &WindowMatrix, t: f64) -> Result<f64> {
    DephasingSum::new(state, matrix)?.distinguishability(t)
}

/// `sum_{n,j} c_n(t) c_j(t)* <j|A|n>` as a complex number; its imaginary part
/// is rounding residue.
pub(crate) fn outcome_sum(state: &EnergyState, matrix: &WindowMatrix, t: f64) -> Result<Complex64> {
    check_dim(state.n_max(), matrix)?;
    let s = fraction_of_period(t, state.config())?;
    let psi: Vec<Complex64> = state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let n = (i + 1) as f64;
            c * harmonic(n * n, s)
        })
        .collect();
    let dim = psi.len();
    let total = (1..=dim)
        .into_par_iter()
        .map(|n| {
            let row: Complex64 = (1..=dim).map(|j| matrix.get(n, j) * psi[j - 1].conj()).sum();
            psi[n - 1] * row
        })
        .sum();
    Ok(total)
}

/// `tr A rho(t)` from the full amplitude double sum.
pub fn outcome_probability(state: &EnergyState, matrix: &WindowMatrix, t: f64) -> Result<f64> {
    Ok(outcome_sum(state, matrix, t)?.re)
}

/// Period average of `D` with the default grid.
pub fn time_average_distinguishability(state: &EnergyState, matrix: &WindowMatrix, n_samples: usize) -> Result<TimeAverage> {
    DephasingSum::new(state, matrix)?.time_average(n_samples)
}

/// Position-space probability density.
pub trait SpatialDensity {
    fn density(&self, x: f64, t: f64) -> Result<f64>;
}

impl SpatialDensity for EnergyState {
    /// `|sum_n c_n exp(-i E_n t / hbar) <x|n>|^2`.
    fn density(&self, x: f64, t: f64) -> Result<f64> {
        let cfg = self.config();
        let u = cfg.wall_coordinate(x)?;
        let s = fraction_of_period(t, cfg)?;
        let psi: Complex64 = self
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = i + 1;
                let nf = n as f64;
                c * harmonic(nf * nf, s) * cfg.eigenfunction_at_wall_coordinate(n, u)
            })
            .sum();
        Ok(psi.norm_sqr())
    }
}

impl SpatialDensity for EquilibriumState {
    /// `sum_n p_n |<x|n>|^2`; independent of `t`.
    fn density(&self, x: f64, _t: f64) -> Result<f64> {
        let u = self.config.wall_coordinate(x)?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * self.config.eigenfunction_at_wall_coordinate(i + 1, u).powi(2))
            .sum())
    }
}

pub fn density<S: SpatialDensity + ?Sized>(state: &S, x: f64, t: f64) -> Result<f64> {
    state.density(x, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson_samples;
    use crate::spectrum::{gaussian_state, sigma_for_deff, uniform_state, GaussianMode};
    use crate::window::{build_matrix, Window};

    fn nat() -> BoxConfig {
        BoxConfig::natural()
    }

    fn gaussian(deff: f64) -> EnergyState {
        gaussian_state(sigma_for_deff(deff, &nat()), GaussianMode::Analytic, 1e-12, &nat()).unwrap()
    }

    #[test]
    fn equilibrium_examples() {
        let cfg = nat();
        let e = EnergyState::eigenstate(3, cfg).unwrap();
        assert_eq!(equilibrium(&e).probs(), &[0.0, 0.0, 1.0]);
        let u = equilibrium(&uniform_state(7, &cfg).unwrap());
        for p in u.probs() {
            assert!((p - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_equilibrium_matches_dephased_formula() {
        // p_n = sqrt(pi/2) (8 sigma/L) e^{-2 (n pi sigma/L)^2} sin^2(n pi/2)
        let cfg = nat();
        let r = 0.01;
        let s = gaussian_state(r, GaussianMode::Analytic, 1e-12, &cfg).unwrap();
        let eq = equilibrium(&s);
        let sum: f64 = eq.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for (i, p) in eq.probs().iter().enumerate() {
            let n = (i + 1) as f64;
            let expect = (PI / 2.0).sqrt() * 8.0 * r * (-2.0 * (n * PI * r).powi(2)).exp() * (n * PI / 2.0).sin().powi(2);
            if (i + 1) % 2 == 0 {
                assert_eq!(*p, 0.0);
            } else if expect > 1e-200 {
                assert!((p / expect - 1.0).abs() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn full_window_gives_zero() {
        let cfg = nat();
        let s = gaussian(20.0);
        let m = build_matrix(&Window::full(&cfg), s.n_max(), &cfg).unwrap();
        let sum = DephasingSum::new(&s, &m).unwrap();
        assert!(sum.is_empty());
        for t in [0.0, 0.1, 0.77] {
            assert_eq!(sum.distinguishability(t).unwrap(), 0.0);
        }
        let u = uniform_state(9, &cfg).unwrap();
        let m = build_matrix(&Window::full(&cfg), 9, &cfg).unwrap();
        assert!((outcome_probability(&u, &m, 0.3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = nat();
        let s = uniform_state(10, &cfg).unwrap();
        let m = build_matrix(&Window::left_half(&cfg), 5, &cfg).unwrap();
        assert!(matches!(distinguishability(&s, &m, 0.0), Err(Error::DimensionMismatch { needed: 10, available: 5 })));
    }

    #[test]
    fn gaussian_initial_value_near_half() {
        let cfg = nat();
        let s = gaussian(53.0);
        let m = build_matrix(&Window::centered(0.5, &cfg).unwrap(), s.n_max(), &cfg).unwrap();
        let d0 = distinguishability(&s, &m, 0.0).unwrap();
        assert!((d0 - 0.5).abs() < 0.01, "{d0}");
        let p0 = outcome_probability(&s, &m, 0.0).unwrap();
        assert!((p0 - 1.0).abs() < 1e-6, "{p0}");
    }

    #[test]
    fn ground_state_left_half() {
        let cfg = nat();
        let g = EnergyState::eigenstate(1, cfg).unwrap();
        let m = build_matrix(&Window::left_half(&cfg), 1, &cfg).unwrap();
        assert!((outcome_probability(&g, &m, 0.4).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn outcome_sum_is_real() {
        let cfg = nat();
        let s = gaussian(30.0);
        let m = build_matrix(&Window::new(0.1, 0.3, &cfg).unwrap(), s.n_max(), &cfg).unwrap();
        for t in [0.0, 0.013, 0.4, 2.9] {
            let z = outcome_sum(&s, &m, t).unwrap();
            assert!(z.im.abs() < 1e-12);
            assert!((0.0..=1.0).contains(&z.re));
            let k = DephasingSum::new(&s, &m).unwrap();
            assert!((k.outcome_probability(t).unwrap() - z.re).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_grid_matches_direct_evaluation() {
        let cfg = nat();
        let tg = cfg.recurrence_period();
        let s = uniform_state(40, &cfg).unwrap();
        let m = build_matrix(&Window::left_half(&cfg), 40, &cfg).unwrap();
        let k = DephasingSum::new(&s, &m).unwrap();
        // 1000 < N^2 = 1600, so aliasing is exercised
        for samples in [1000usize, 4096] {
            let grid = k.deviation_on_period_grid(samples);
            for (i, v) in grid.iter().enumerate().step_by(37) {
                let direct = k.deviation(i as f64 / samples as f64 * tg).unwrap();
                assert!((v - direct).abs() < 1e-12, "samples={samples} i={i}");
            }
        }
    }

    #[test]
    fn average_is_period_exact() {
        let cfg = nat();
        let tg = cfg.recurrence_period();
        let s = gaussian(12.0);
        let m = build_matrix(&Window::centered(0.5, &cfg).unwrap(), s.n_max(), &cfg).unwrap();
        let k = DephasingSum::new(&s, &m).unwrap();
        let n = 2000;
        let one: f64 = (0..n).map(|i| k.distinguishability(i as f64 / n as f64 * tg).unwrap()).sum::<f64>() / n as f64;
        let two: f64 =
            (0..2 * n).map(|i| k.distinguishability(2.0 * i as f64 / (2 * n) as f64 * tg).unwrap()).sum::<f64>() / (2 * n) as f64;
        assert!((one - two).abs() < 1e-10);
    }

    #[test]
    fn average_converges_and_rejects_tiny_grids() {
        let cfg = nat();
        let s = uniform_state(20, &cfg).unwrap();
        let m = build_matrix(&Window::left_half(&cfg), 20, &cfg).unwrap();
        let k = DephasingSum::new(&s, &m).unwrap();
        assert!(k.time_average(1).is_err());
        let avg = k.time_average(default_samples(20)).unwrap();
        assert!(avg.rel_change < AVERAGE_REL_TOL);
        assert!(avg.mean > 0.0 && avg.mean < 1.0);
    }

    #[test]
    fn densities() {
        let s = gaussian(25.0);
        let eq = equilibrium(&s);
        assert!((density(&eq, 0.0, 0.0).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(density(&eq, 0.5, 0.0).unwrap(), 0.0);
        assert_eq!(density(&eq, -0.5, 0.0).unwrap(), 0.0);
        assert!(density(&eq, 0.6, 0.0).is_err());

        let n = 10_001;
        let h = 1.0 / (n - 1) as f64;
        for t in [0.0, 0.0371] {
            let vals: Vec<f64> = (0..n).map(|i| density(&s, -0.5 + i as f64 * h, t).unwrap()).collect();
            assert!((simpson_samples(&vals, h) - 1.0).abs() < 1e-8);
        }
        let vals: Vec<f64> = (0..n).map(|i| density(&eq, -0.5 + i as f64 * h, 0.0).unwrap()).collect();
        assert!((simpson_samples(&vals, h) - 1.0).abs() < 1e-8);
    }
}
