//! Position-space path: synthesize `Psi(x, t)` on a uniform grid by summing
//! eigenfunctions directly, then integrate `|Psi|^2` over windows with
//! Simpson's rule. Nothing here touches the projector matrix elements, so it
//! serves as an independent check on the energy-basis results.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::quadrature::simpson_samples;
use crate::spectrum::{BoxConfig, EnergyState};
use crate::window::Window;
use crate::{Error, Result};

/// `max(4096, 8 N_max)` points.
pub fn default_points(n_max: usize) -> usize {
    (8 * n_max).max(4096)
}

/// `Psi` sampled at `n_points` uniformly spaced positions covering `[-L/2, L/2]`,
/// endpoints included.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    config: BoxConfig,
    positions: Vec<f64>,
    values: Vec<Complex64>,
}

impl SpatialGrid {
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        self.config.length() / (self.values.len() - 1) as f64
    }

    pub fn densities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Riemann sum `sum |Psi|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spacing()
    }
}

/// `Psi(x_k, t) = sum_n c_n exp(-i E_n t / hbar) <x_k|n>`.
pub fn synthesize(state: &EnergyState, t: f64, n_points: usize) -> Result<SpatialGrid> {
    let n_max = state.n_max();
    if n_points < 2 * n_max || n_points < 3 {
        return Err(Error::invalid(format!(
            "grid of {n_points} points undersamples level {n_max}; need at least {}",
            (2 * n_max).max(3)
        )));
    }
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    let cfg = *state.config();
    let hbar = cfg.hbar();
    let evolved: Vec<Complex64> = state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let e = cfg.ground_energy() * ((i + 1) as f64).powi(2);
            let angle = (e * t / hbar).rem_euclid(TAU);
            c * Complex64::from_polar(1.0, -angle)
        })
        .collect();
    let last = (n_points - 1) as f64;
    let values: Vec<Complex64> = (0..n_points)
        .into_par_iter()
        .map(|k| {
            let u = k as f64 / last;
            evolved
                .iter()
                .enumerate()
                .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
                .map(|(i, c)| c * cfg.eigenfunction_at_wall_coordinate(i + 1, u))
                .sum()
        })
        .collect();
    let positions = (0..n_points).map(|k| cfg.length() * (k as f64 / last - 0.5)).collect();
    Ok(SpatialGrid { config: cfg, positions, values })
}

/// Cubic through the four nodes starting at `first`, integrated over `[a, b]`
/// with two-point Gauss-Legendre (exact for cubics).
fn cubic_piece(dens: &[f64], x0: f64, h: f64, first: usize, a: f64, b: f64) -> f64 {
    let nodes: [f64; 4] = std::array::from_fn(|i| x0 + h * (first + i) as f64);
    let interp = |x: f64| {
        (0..4)
            .map(|i| {
                let mut l = 1.0;
                for j in 0..4 {
                    if j != i {
                        l *= (x - nodes[j]) / (nodes[i] - nodes[j]);
                    }
                }
                l * dens[first + i]
            })
            .sum::<f64>()
    };
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let g = half / 3f64.sqrt();
    half * (interp(mid - g) + interp(mid + g))
}

fn stencil_start(cell: usize, n: usize) -> usize {
    cell.saturating_sub(1).min(n - 4)
}

/// Integral of `|Psi|^2` over `win`: composite Simpson over the grid nodes inside
/// the window, plus cubic-interpolated pieces for the partial cells at its edges.
pub fn window_probability_grid(grid: &SpatialGrid, win: &Window) -> f64 {
    let dens = grid.densities();
    let n = dens.len();
    let h = grid.spacing();
    let x0 = grid.positions[0];
    let (a, b) = win.bounds();
    let (a, b) = (a.max(x0), b.min(grid.positions[n - 1]));
    if b <= a {
        return 0.0;
    }
    if n < 4 {
        return simpson_samples(&dens, h) * (b - a) / (h * (n - 1) as f64);
    }
    let snap = 1e-9;
    let pos_a = (a - x0) / h;
    let pos_b = (b - x0) / h;
    let first = if (pos_a - pos_a.round()).abs() < snap { pos_a.round() } else { pos_a.ceil() } as usize;
    let last = if (pos_b - pos_b.round()).abs() < snap { pos_b.round() } else { pos_b.floor() } as usize;
    let last = last.min(n - 1);

    if first > last {
        // window inside a single cell
        let cell = last;
        return cubic_piece(&dens, x0, h, stencil_start(cell, n), a, b);
    }
    let mut total = simpson_samples(&dens[first..=last], h);
    let xf = x0 + h * first as f64;
    if xf > a {
        total += cubic_piece(&dens, x0, h, stencil_start(first - 1, n), a, xf);
    }
    let xl = x0 + h * last as f64;
    if xl < b {
        total += cubic_piece(&dens, x0, h, stencil_start(last, n), xl, b);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{gaussian_state, uniform_state, GaussianMode};
    use std::f64::consts::PI;

    fn nat() -> BoxConfig {
        BoxConfig::natural()
    }

    #[test]
    fn rejects_undersampled_grid() {
        let s = uniform_state(100, &nat()).unwrap();
        assert!(synthesize(&s, 0.0, 199).is_err());
        assert!(synthesize(&s, 0.0, 200).is_ok());
    }

    #[test]
    fn ground_state_shape() {
        let g = EnergyState::eigenstate(1, nat()).unwrap();
        for t in [0.0, 0.31] {
            let grid = synthesize(&g, t, 4097).unwrap();
            let d = grid.densities();
            let (imax, _) = d.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
            assert_eq!(grid.positions()[imax], 0.0);
            for (x, v) in grid.positions().iter().zip(&d).step_by(101) {
                assert!((v - 2.0 * (PI * x).cos().powi(2)).abs() < 1e-12);
            }
            assert!(d[0] < 1e-20 && d[4096] < 1e-20);
            assert!((window_probability_grid(&grid, &Window::left_half(&nat())) - 0.5).abs() < 1e-8);
            assert!((window_probability_grid(&grid, &Window::full(&nat())) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_peak_density() {
        let r = 0.01;
        let s = gaussian_state(r, GaussianMode::Analytic, 1e-12, &nat()).unwrap();
        let grid = synthesize(&s, 0.0, default_points(s.n_max()) + 1).unwrap();
        let mid = grid.n_points() / 2;
        assert_eq!(grid.positions()[mid], 0.0);
        let expect = 1.0 / (r * (2.0 * PI).sqrt());
        assert!((grid.densities()[mid] / expect - 1.0).abs() < 1e-4);
        assert!((grid.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_state_sits_left() {
        let s = uniform_state(500, &nat()).unwrap();
        let grid = synthesize(&s, 0.0, default_points(500)).unwrap();
        assert!(window_probability_grid(&grid, &Window::left_half(&nat())) > 0.6);
        assert!(grid.values()[0].norm() < 1e-10 && grid.values()[grid.n_points() - 1].norm() < 1e-10);
    }

    #[test]
    fn partial_cells_integrate_smooth_density() {
        let g = EnergyState::eigenstate(3, nat()).unwrap();
        let grid = synthesize(&g, 0.0, 4096).unwrap();
        // int_a^b 2 sin^2(3 pi u) du in wall coordinates
        let exact = |ua: f64, ub: f64| (ub - ua) - ((6.0 * PI * ub).sin() - (6.0 * PI * ua).sin()) / (6.0 * PI);
        for (c, w) in [(0.0123, 0.3311), (-0.2, 0.00005), (0.31, 0.17)] {
            let win = Window::new(c, w, &nat()).unwrap();
            let (ua, ub) = win.wall_bounds(&nat());
            assert!((window_probability_grid(&grid, &win) - exact(ua, ub)).abs() < 1e-9, "({c},{w})");
        }
    }
}
