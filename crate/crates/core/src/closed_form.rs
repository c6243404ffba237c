//! Analytic approximations for the Gaussian and uniform initial states:
//! equilibration time scales, the short-time expansions of `D(t)`, energy
//! moments, the uniform-state envelope `g(t)`, and log-log power-law fits.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::spectrum::BoxConfig;
use crate::trig::{cos_pi, sin_pi};
use crate::{Error, Result};

/// Default number of `R_p` terms in [`SeriesApprox::d_series`].
pub const DEFAULT_TERMS_P: usize = 16;

/// Gaussian weights `e^{-(k^2+l^2) phi^2/2}` below this are dropped from the double sum.
pub const DOUBLE_SUM_CUTOFF: f64 = 1e-20;

/// `tau_G = m L sigma / (hbar pi)`.
pub fn tau_gaussian(sigma: f64, cfg: &BoxConfig) -> f64 {
    cfg.mass() * cfg.length() * sigma / (cfg.hbar() * PI)
}

/// `tau_G / T_g = 1 / (16 sqrt(pi) d_eff)`.
pub fn tau_over_tg(deff: f64) -> f64 {
    1.0 / (16.0 * PI.sqrt() * deff)
}

/// Time for the packet to reach a wall, `(L/2) / (Delta p / m) = m L sigma / hbar`.
pub fn tau_box(sigma: f64, cfg: &BoxConfig) -> f64 {
    cfg.mass() * cfg.length() * sigma / cfg.hbar()
}

/// `tau_typical / T_g = 1 / (16 d_eff^2)`.
pub fn tau_typical(deff: f64) -> f64 {
    1.0 / (16.0 * deff * deff)
}

/// `(hbar / v_E) / T_g` with `v_E` from [`energy_std`].
pub fn tau_spread_over_tg(sigma: f64, cfg: &BoxConfig) -> f64 {
    cfg.hbar() / energy_std(sigma, cfg) / cfg.recurrence_period()
}

/// `R_p = (-1)^p / (2p + 1) exp(-(2p + 1)^2 phi^2 / 2)`.
pub fn r_coefficient(p: usize, phi: f64) -> f64 {
    let q = (2 * p + 1) as f64;
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    sign / q * (-q * q * phi * phi / 2.0).exp()
}

/// `B_kl = [cos(l pi) - cos(k pi)] [sin(k pi/2)/k - sin(l pi/2)/l]`.
pub fn b_coefficient(k: usize, l: usize) -> f64 {
    let (kf, lf) = (k as f64, l as f64);
    (cos_pi(lf) - cos_pi(kf)) * (sin_pi(0.5 * kf) / kf - sin_pi(0.5 * lf) / lf)
}

/// Parameters of the Gaussian short-time expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesApprox {
    /// `phi = 2 pi sigma / L`
    pub phi: f64,
    /// `tau_G` in the units of the box configuration.
    pub tau_g: f64,
    pub terms_p: usize,
    pub terms_kl: usize,
}

impl SeriesApprox {
    pub fn new(sigma: f64, cfg: &BoxConfig, terms_p: usize, terms_kl: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if terms_p == 0 || terms_kl == 0 {
            return Err(Error::invalid("term counts must be at least 1"));
        }
        Ok(Self {
            phi: 2.0 * PI * sigma / cfg.length(),
            tau_g: tau_gaussian(sigma, cfg),
            terms_p,
            terms_kl,
        })
    }

    /// Defaults: 16 `R_p` terms and `4 n_max` for the double sum.
    pub fn with_defaults(sigma: f64, cfg: &BoxConfig, n_max: usize) -> Result<Self> {
        Self::new(sigma, cfg, DEFAULT_TERMS_P, (4 * n_max).max(2))
    }

    /// `(2/pi) exp(-t^2 / (2 tau_G^2))`.
    pub fn d_leading(&self, t: f64) -> f64 {
        let x = t / self.tau_g;
        2.0 / PI * (-0.5 * x * x).exp()
    }

    /// `(2/pi) |sum_{p < terms_p} R_p exp(-t^2 (2p+1)^2 / (2 tau_G^2))|`.
    pub fn d_series(&self, t: f64) -> f64 {
        let x = t / self.tau_g;
        let sum: f64 = (0..self.terms_p)
            .map(|p| {
                let q = (2 * p + 1) as f64;
                r_coefficient(p, self.phi) * (-0.5 * x * x * q * q).exp()
            })
            .sum();
        2.0 / PI * sum.abs()
    }

    /// `(2/pi)(phi/sqrt(2 pi)) |sum_{k,l=1}^{K} cos(4 k l nu t) e^{-(k^2+l^2) phi^2/2} B_kl|`
    /// with `K = terms_kl`.
    ///
    /// `B_kl` vanishes unless exactly one index is odd, and the summand is
    /// symmetric, so only (even, odd) pairs are visited and doubled. Pairs whose
    /// Gaussian weight is below [`DOUBLE_SUM_CUTOFF`] are skipped.
    pub fn d_double_sum(&self, t: f64) -> f64 {
        let big_k = self.terms_kl;
        let phi = self.phi;
        // 4 nu t = phi t / tau_G
        let rate = phi * t / self.tau_g;
        let damp: Vec<f64> = (0..=big_k).map(|k| (-0.5 * (k as f64).powi(2) * phi * phi).exp()).collect();
        let sum: f64 = (1..=big_k / 2)
            .into_par_iter()
            .map(|half| {
                let k = 2 * half;
                let mut acc = 0.0;
                for l in (1..=big_k).step_by(2) {
                    let w = damp[k] * damp[l];
                    if w < DOUBLE_SUM_CUTOFF {
                        break;
                    }
                    acc += (rate * (k * l) as f64).cos() * w * b_coefficient(k, l);
                }
                acc
            })
            .sum();
        2.0 / PI * phi / (2.0 * PI).sqrt() * (2.0 * sum).abs()
    }
}

/// `S_p(gamma) = (1/sqrt(pi)) sum_j gamma^{2p+1} (j + 1/2)^{2p} exp(-(j + 1/2)^2 gamma^2)`
/// by direct summation over all integers `j`.
pub fn moment_sum(p: u32, gamma: f64) -> f64 {
    let reach = (750.0f64.sqrt() / gamma).ceil() as i64 + 1;
    let g2p1 = gamma.powi(2 * p as i32 + 1);
    let s: f64 = (-reach..=reach)
        .map(|j| {
            let y = j as f64 + 0.5;
            y.powi(2 * p as i32) * (-(y * gamma).powi(2)).exp()
        })
        .sum();
    g2p1 * s / PI.sqrt()
}

/// Large-width limit of `S_p`: `Gamma(p + 1/2) / sqrt(pi)`, i.e. 1/2 and 3/4.
fn moment_limit(p: u32) -> Result<f64> {
    match p {
        1 => Ok(0.5),
        2 => Ok(0.75),
        _ => Err(Error::invalid(format!("energy moments implemented for p = 1, 2, got {p}"))),
    }
}

/// `tr(H^p rho_G) ~ (2 E_1 / phi^2)^p S_p` with the small-`phi` limits of `S_p`.
pub fn energy_moment(p: u32, sigma: f64, cfg: &BoxConfig) -> Result<f64> {
    let phi = 2.0 * PI * sigma / cfg.length();
    Ok((2.0 * cfg.ground_energy() / (phi * phi)).powi(p as i32) * moment_limit(p)?)
}

/// `v_E = hbar^2 / (4 sqrt(2) m sigma^2)`.
pub fn energy_std(sigma: f64, cfg: &BoxConfig) -> f64 {
    cfg.hbar() * cfg.hbar() / (4.0 * 2f64.sqrt() * cfg.mass() * sigma * sigma)
}

fn uniform_ratio(n: usize, theta: f64) -> f64 {
    let q = (theta / PI).round();
    let delta = theta - q * PI;
    let nf = n as f64;
    let sign = if (q as i64) % 2 == 0 { 1.0 } else { -1.0 };
    if delta.abs() < 1e-6 {
        sign * 2.0 * nf * (1.0 - (4.0 * nf * nf - 1.0) * delta * delta / 6.0)
    } else {
        (2.0 * nf * theta).sin() / theta.sin()
    }
}

/// Signed envelope `sin(2 N nu t) / sin(nu t) - cos(nu t)`, scaled by `1/(N pi)`.
pub fn uniform_g_signed(t: f64, n: usize, cfg: &BoxConfig) -> f64 {
    let theta = cfg.frequency() * t;
    (uniform_ratio(n, theta) - theta.cos()) / (n as f64 * PI)
}

/// `g(t) = (1/(N pi)) |sin(2 N nu t)/sin(nu t) - cos(nu t)|`.
pub fn uniform_g(t: f64, n: usize, cfg: &BoxConfig) -> f64 {
    uniform_g_signed(t, n, cfg).abs()
}

/// Large-`N` estimate of the first zero of `g`: `T_g / (4N)`.
pub fn uniform_first_zero(n: usize, cfg: &BoxConfig) -> f64 {
    cfg.recurrence_period() / (4.0 * n as f64)
}

/// First zero of `g` located numerically by a sign scan and bisection.
pub fn uniform_g_first_zero_numeric(n: usize, cfg: &BoxConfig) -> Option<f64> {
    let t_max = cfg.recurrence_period() / (n as f64);
    let steps = 4000;
    let dt = t_max / steps as f64;
    let f = |t: f64| uniform_g_signed(t, n, cfg);
    let mut lo = 0.0;
    for i in 1..=steps {
        let t = dt * i as f64;
        if f(t) <= 0.0 {
            let mut hi = t;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        lo = t;
    }
    None
}

/// `avg_D ~ prefactor * d_eff^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
}

/// Least-squares line through `(ln d, ln y)`.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("power-law fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::invalid("power-law fit needs positive, finite points"));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-300 * n {
        return Err(Error::invalid("power-law fit needs at least two distinct d_eff values"));
    }
    let slope = sxy / sxx;
    Ok(PowerLawFit { prefactor: (my - slope * mx).exp(), exponent: -slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{deff_gaussian_closed_form, sigma_for_deff};
    use approx::assert_relative_eq;

    fn nat() -> BoxConfig {
        BoxConfig::natural()
    }

    #[test]
    fn time_scales() {
        let cfg = nat();
        // 1 / (16 sqrt(pi) 53) = 6.6532e-4
        assert_relative_eq!(tau_over_tg(53.0), 6.653_179_051_270_711e-4, max_relative = 1e-12);
        for sigma in [0.001, 0.01, 0.07] {
            let a = tau_gaussian(sigma, &cfg) / cfg.recurrence_period();
            let b = tau_over_tg(deff_gaussian_closed_form(sigma, &cfg));
            assert!((a / b - 1.0).abs() < 1e-12);
            assert_relative_eq!(tau_box(sigma, &cfg), PI * tau_gaussian(sigma, &cfg), max_relative = 1e-15);
        }
        let cfg2 = BoxConfig::new(3.0, 0.5, 2.0).unwrap();
        let a = tau_gaussian(0.02, &cfg2) / cfg2.recurrence_period();
        assert!((a / tau_over_tg(deff_gaussian_closed_form(0.02, &cfg2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn typical_time_scale() {
        // 1 / (16 * 53^2) = 2.2249911...e-5
        assert_relative_eq!(tau_typical(53.0), 2.224_991_100_035_6e-5, max_relative = 1e-12);
        for d in [5.0, 53.0, 400.0] {
            assert_relative_eq!(tau_over_tg(d) / tau_typical(d), d / PI.sqrt(), max_relative = 1e-13);
        }
    }

    #[test]
    fn spread_time_scale_is_sqrt2_off_the_typical_formula() {
        // hbar / v_E over T_g evaluates to sqrt(2) pi sigma^2 / L^2, while
        // 1 / (16 d_eff^2) with d_eff = L / (4 sqrt(pi) sigma) is pi sigma^2 / L^2.
        let cfg = nat();
        for sigma in [0.001, 0.01] {
            let spread = tau_spread_over_tg(sigma, &cfg);
            let typical = tau_typical(deff_gaussian_closed_form(sigma, &cfg));
            assert_relative_eq!(spread / typical, 2f64.sqrt(), max_relative = 1e-13);
        }
    }

    #[test]
    fn leading_order_values() {
        let a = SeriesApprox::new(0.01, &nat(), 16, 10).unwrap();
        assert_relative_eq!(a.d_leading(0.0), 2.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(a.d_leading(a.tau_g), 2.0 / PI * (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(a.d_leading(a.tau_g), 0.386_129_410_520_215_65, max_relative = 1e-14);
        assert_relative_eq!(a.d_leading(3.0 * a.tau_g), 7.072_206_847_408_067e-3, max_relative = 1e-13);
    }

    #[test]
    fn r_identity() {
        for phi in [0.01, 0.05, 0.1] {
            let r0 = r_coefficient(0, phi).abs();
            let r1 = r_coefficient(1, phi).abs();
            assert!((r1 - r0.powi(9) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_term_series_is_damped_leading_order() {
        let a = SeriesApprox::new(0.02, &nat(), 1, 10).unwrap();
        for x in [0.0, 0.3, 1.0, 2.5] {
            let t = x * a.tau_g;
            let rel = (a.d_series(t) - a.d_leading(t)).abs() / a.d_leading(t);
            assert!(rel < a.phi * a.phi / 2.0 + 1e-12);
        }
    }

    #[test]
    fn series_at_zero_approaches_half() {
        // 2/pi * sum_{p<200} (-1)^p/(2p+1) -> 2/pi * pi/4
        let a = SeriesApprox::new(1e-9, &nat(), 200, 10).unwrap();
        assert!((a.d_series(0.0) - 0.5).abs() < 0.01);
        let leibniz: f64 = (0..200).map(|p| if p % 2 == 0 { 1.0 } else { -1.0 } / (2 * p + 1) as f64).sum();
        assert!((a.d_series(0.0) - 2.0 / PI * leibniz).abs() < 1e-9);
    }

    #[test]
    fn b_coefficient_selection() {
        for k in 1..40 {
            assert_eq!(b_coefficient(k, k), 0.0);
            for l in 1..40 {
                let one_odd = (k % 2 == 1) != (l % 2 == 1);
                if !one_odd {
                    assert_eq!(b_coefficient(k, l), 0.0, "({k},{l})");
                } else {
                    assert!(b_coefficient(k, l) != 0.0);
                }
                assert_eq!(b_coefficient(k, l), b_coefficient(l, k));
            }
        }
    }

    #[test]
    fn double_sum_visits_all_pairs() {
        // brute force over every (k, l) against the parity-reduced loop
        let a = SeriesApprox::new(0.05, &nat(), 16, 60).unwrap();
        for t in [0.0, 0.4 * a.tau_g, 2.0 * a.tau_g] {
            let nu = nat().frequency();
            let mut s = 0.0;
            for k in 1..=60usize {
                for l in 1..=60usize {
                    let (kf, lf) = (k as f64, l as f64);
                    s += (4.0 * kf * lf * nu * t).cos() * (-(kf * kf + lf * lf) * a.phi * a.phi / 2.0).exp() * b_coefficient(k, l);
                }
            }
            let brute = 2.0 / PI * a.phi / (2.0 * PI).sqrt() * s.abs();
            assert!((a.d_double_sum(t) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_sums_near_limits() {
        let g = 0.05;
        assert!((moment_sum(1, g) - 0.5).abs() < g * g);
        assert!((moment_sum(2, g) - 0.75).abs() < g * g);
        assert!(energy_moment(3, 0.01, &nat()).is_err());
    }

    #[test]
    fn closed_form_moments() {
        let cfg = nat();
        let sigma = 0.01;
        let phi = 2.0 * PI * sigma;
        assert_relative_eq!(energy_moment(1, sigma, &cfg).unwrap(), cfg.ground_energy() / (phi * phi), max_relative = 1e-14);
        let var = energy_moment(2, sigma, &cfg).unwrap() - energy_moment(1, sigma, &cfg).unwrap().powi(2);
        assert_relative_eq!(var.sqrt(), energy_std(sigma, &cfg), max_relative = 1e-12);
    }

    #[test]
    fn uniform_envelope() {
        let cfg = nat();
        for n in [2usize, 10, 500] {
            let g0 = (2.0 * n as f64 - 1.0) / (n as f64 * PI);
            assert_relative_eq!(uniform_g(0.0, n, &cfg), g0, max_relative = 1e-15);
            // series branch agrees with the direct ratio just inside its range
            let nf = n as f64;
            let th = 0.9e-6;
            let direct = ((2.0 * nf * th).sin() / th.sin() - th.cos()) / (nf * PI);
            assert!((uniform_g(th / cfg.frequency(), n, &cfg) / direct - 1.0).abs() < 1e-8);
            // removable point at nu t = pi
            let t_pi = PI / cfg.frequency();
            assert!((uniform_g(t_pi, n, &cfg) - uniform_g(t_pi * (1.0 + 1e-5), n, &cfg)).abs() < 1e-3);
        }
        let z = uniform_g_first_zero_numeric(500, &cfg).unwrap();
        assert!((z / uniform_first_zero(500, &cfg) - 1.0).abs() < 0.05);
        // the zero satisfies 2 sin(2 N nu t) = sin(2 nu t)
        let th = cfg.frequency() * z;
        assert!((2.0 * (1000.0 * th).sin() - (2.0 * th).sin()).abs() < 1e-9);
    }

    #[test]
    fn power_law_recovers_exact_data() {
        let pts: Vec<(f64, f64)> = [25.0, 50.0, 100.0, 200.0, 400.0].iter().map(|&d: &f64| (d, 0.5 * d.powf(-0.8))).collect();
        let fit = power_law_fit(&pts).unwrap();
        assert!((fit.prefactor - 0.5).abs() < 1e-10);
        assert!((fit.exponent - 0.8).abs() < 1e-10);
    }

    #[test]
    fn power_law_rejects_bad_input() {
        assert!(power_law_fit(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(power_law_fit(&[(3.0, 1.0), (3.0, 0.5), (3.0, 0.2)]).is_err());
        assert!(power_law_fit(&[(1.0, 1.0), (2.0, -0.5), (3.0, 0.2)]).is_err());
    }

    #[test]
    fn sigma_helpers_round_trip() {
        let cfg = nat();
        let s = sigma_for_deff(53.0, &cfg);
        assert_relative_eq!(tau_gaussian(s, &cfg) / cfg.recurrence_period(), tau_over_tg(53.0), max_relative = 1e-13);
    }
}
