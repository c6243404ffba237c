//! Interval windows and the matrix elements `<n|A|j>` of their projectors.
//!
//! A window `[c - w/2, c + w/2]` maps to the wall-coordinate interval
//! `[u_a, u_b]` with `u = x/L + 1/2`. In those coordinates
//!
//! ```text
//! <n|A|j> = int_{u_a}^{u_b} cos((n-j) pi u) - cos((n+j) pi u) du
//! ```
//!
//! which has the elementary antiderivative used by [`element_closed_form`].
//! Off the diagonal `n - j` is a nonzero integer, so no small-denominator guard
//! is needed; the diagonal has its own branch.

use rayon::prelude::*;

use crate::quadrature::composite_adaptive_simpson;
use crate::spectrum::BoxConfig;
use crate::trig::{cos_pi, sin_pi};
use crate::{Error, Result};

/// Absolute tolerance of [`element_quadrature`].
pub const ELEMENT_QUAD_TOL: f64 = 1e-10;

/// Spatial window `[center - width/2, center + width/2]` inside the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    center: f64,
    width: f64,
}

impl Window {
    pub fn new(center: f64, width: f64, cfg: &BoxConfig) -> Result<Self> {
        let l = cfg.length();
        if !(center.is_finite() && width.is_finite()) {
            return Err(Error::invalid("window center and width must be finite"));
        }
        if width < 0.0 || width > l {
            return Err(Error::invalid(format!("window width {width} must lie in [0, L = {l}]")));
        }
        let slack = 1e-12 * l;
        let h = cfg.half_width();
        if center - 0.5 * width < -h - slack || center + 0.5 * width > h + slack {
            return Err(Error::invalid(format!(
                "window [{}, {}] does not fit in the box [{}, {}]",
                center - 0.5 * width,
                center + 0.5 * width,
                -h,
                h
            )));
        }
        Ok(Self { center, width })
    }

    /// `A_w`: width `w` centred at the origin.
    pub fn centered(width: f64, cfg: &BoxConfig) -> Result<Self> {
        Self::new(0.0, width, cfg)
    }

    /// `Pi_L`: the left half of the box.
    pub fn left_half(cfg: &BoxConfig) -> Self {
        Self { center: -0.25 * cfg.length(), width: 0.5 * cfg.length() }
    }

    pub fn full(cfg: &BoxConfig) -> Self {
        Self { center: 0.0, width: cfg.length() }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Left and right edges in position.
    pub fn bounds(&self) -> (f64, f64) {
        (self.center - 0.5 * self.width, self.center + 0.5 * self.width)
    }

    /// Edges in wall coordinates `u = x/L + 1/2`, clamped to `[0, 1]`.
    pub fn wall_bounds(&self, cfg: &BoxConfig) -> (f64, f64) {
        let (a, b) = self.bounds();
        let l = cfg.length();
        ((a / l + 0.5).clamp(0.0, 1.0), (b / l + 0.5).clamp(0.0, 1.0))
    }

    /// Windows covering the rest of the box, left piece first. Empty pieces are
    /// dropped.
    pub fn complement(&self, cfg: &BoxConfig) -> Vec<Window> {
        let h = cfg.half_width();
        let (a, b) = self.bounds();
        let mut out = Vec::with_capacity(2);
        if a > -h {
            out.push(Window { center: 0.5 * (a - h), width: a + h });
        }
        if b < h {
            out.push(Window { center: 0.5 * (b + h), width: h - b });
        }
        out
    }

    /// Whether the window is symmetric about the centre of the box.
    pub fn is_centered(&self) -> bool {
        self.center == 0.0
    }
}

/// `2 sin(k pi h) cos(k pi m) / (k pi)` = `[sin(k pi u)/(k pi)]` from `m - h` to `m + h`.
fn sine_increment(k: f64, mid: f64, half: f64) -> f64 {
    2.0 * cos_pi(k * mid) * sin_pi(k * half) / (k * std::f64::consts::PI)
}

/// Exact `<n|A|j>` for the projector onto `win`.
pub fn element_closed_form(n: usize, j: usize, win: &Window, cfg: &BoxConfig) -> f64 {
    debug_assert!(n >= 1 && j >= 1);
    let (ua, ub) = win.wall_bounds(cfg);
    let mid = 0.5 * (ua + ub);
    let half = 0.5 * (ub - ua);
    let sum = (n + j) as f64;
    if n == j {
        2.0 * half - sine_increment(sum, mid, half)
    } else {
        let diff = n.abs_diff(j) as f64;
        sine_increment(diff, mid, half) - sine_increment(sum, mid, half)
    }
}

/// `<n|A|j>` by adaptive quadrature of `(2/L) sin(n pi u) sin(j pi u)` over the window.
pub fn element_quadrature(n: usize, j: usize, win: &Window, cfg: &BoxConfig) -> Result<f64> {
    if n == 0 || j == 0 {
        return Err(Error::invalid("levels start at 1"));
    }
    let (a, b) = win.bounds();
    if b <= a {
        return Ok(0.0);
    }
    let l = cfg.length();
    let integrand = |x: f64| {
        let u = x / l + 0.5;
        cfg.eigenfunction_at_wall_coordinate(n, u) * cfg.eigenfunction_at_wall_coordinate(j, u)
    };
    // a few panels per half-period of the fastest factor
    let panels = (2.0 * (n + j) as f64 * (b - a) / l).ceil() as usize + 4;
    composite_adaptive_simpson(&integrand, a, b, panels, ELEMENT_QUAD_TOL)
}

/// Real symmetric matrix `<n|A|j>` for `1 <= n, j <= dim`.
///
/// Only the upper triangle is stored, so `get(n, j) == get(j, n)` holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix {
    dim: usize,
    packed: Vec<f64>,
}

impl WindowMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, lo: usize, hi: usize) -> usize {
        // rows 1..lo-1 hold dim, dim-1, ... entries
        let r = lo - 1;
        r * self.dim - r * (r.saturating_sub(1)) / 2 + (hi - lo)
    }

    /// Entry `<n|A|j>`, 1-based. Panics outside `1..=dim`.
    #[inline]
    pub fn get(&self, n: usize, j: usize) -> f64 {
        assert!(n >= 1 && j >= 1 && n <= self.dim && j <= self.dim, "index ({n}, {j}) out of range");
        let (lo, hi) = if n <= j { (n, j) } else { (j, n) };
        self.packed[self.offset(lo, hi)]
    }

    /// The complementary projector `1 - A` on the same truncation.
    pub fn complement(&self) -> WindowMatrix {
        let mut out = self.clone();
        for n in 1..=self.dim {
            let start = self.offset(n, n);
            for (k, v) in out.packed[start..start + (self.dim - n + 1)].iter_mut().enumerate() {
                *v = if k == 0 { 1.0 - *v } else { -*v };
            }
        }
        out
    }

    /// Upper-triangle row `n`: entries `<n|A|j>` for `j = n..=dim`.
    pub fn upper_row(&self, n: usize) -> &[f64] {
        let start = self.offset(n, n);
        &self.packed[start..start + (self.dim - n + 1)]
    }
}

pub fn build_matrix(win: &Window, n_max: usize, cfg: &BoxConfig) -> Result<WindowMatrix> {
    if n_max == 0 {
        return Err(Error::invalid("matrix dimension must be at least 1"));
    }
    let rows: Vec<Vec<f64>> = (1..=n_max)
        .into_par_iter()
        .map(|n| (n..=n_max).map(|j| element_closed_form(n, j, win, cfg)).collect())
        .collect();
    let packed = rows.into_iter().flatten().collect();
    Ok(WindowMatrix { dim: n_max, packed })
}
