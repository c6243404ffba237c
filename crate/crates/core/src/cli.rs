//! Command-line front end: configuration parsing, validation and the four
//! data-producing commands (`evolve`, `density`, `sweep`, `report`).
//!
//! Settings come from flags and, optionally, a flat `key = value` file passed
//! with `--config`; keys are the long flag names without the leading dashes.
//! Flags win over file entries. Lengths are in units of `L`, times in units
//! of `T_g`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::closed_form::{
    energy_std, power_law_fit, tau_box, tau_gaussian, tau_over_tg, tau_spread_over_tg, tau_typical,
    uniform_first_zero, uniform_g, SeriesApprox,
};
use crate::dynamics::{default_samples, equilibrium, DephasingSum, SpatialDensity};
use crate::spectrum::{
    deff_gaussian_closed_form, gaussian_state, sigma_for_deff, uniform_state, BoxConfig, EnergyState, GaussianMode,
    DEFAULT_TRUNC_EPS,
};
use crate::window::{build_matrix, Window};
use crate::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Default log-log fit range for d_eff sweeps.
pub const FIT_RANGE: (f64, f64) = (25.0, 400.0);

#[derive(Debug, Parser)]
#[command(name = "boxeq", version, about = "Equilibration of a particle in a box under coarse-grained position measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distinguishability time series with analytic comparison columns.
    Evolve(Options),
    /// Spatial probability density of the state or its equilibrium.
    Density(Options),
    /// Period-averaged distinguishability over a list of d_eff, N or widths.
    Sweep(Options),
    /// Time scales, effective dimensions and energy spread.
    Report(Options),
}

impl Command {
    pub fn options(&self) -> &Options {
        match self {
            Command::Evolve(o) | Command::Density(o) | Command::Sweep(o) | Command::Report(o) => o,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gaussian packet width sigma/L.
    #[arg(long)]
    pub sigma_over_l: Option<f64>,
    /// Gaussian packet chosen by its closed-form effective dimension.
    #[arg(long)]
    pub deff: Option<f64>,
    /// Equal superposition of the lowest N levels.
    #[arg(long)]
    pub uniform_n: Option<usize>,
    /// Window centre, units of L (default 0 for Gaussian, -1/4 for uniform).
    #[arg(long, allow_negative_numbers = true)]
    pub window_center: Option<f64>,
    /// Window width, units of L (default 1/2).
    #[arg(long)]
    pub window_width: Option<f64>,
    /// Start time, units of T_g.
    #[arg(long, allow_negative_numbers = true)]
    pub tmin: Option<f64>,
    /// End time, units of T_g.
    #[arg(long, allow_negative_numbers = true)]
    pub tmax: Option<f64>,
    /// Number of time samples (evolve) or starting grid size for averages (sweep).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Discarded-probability budget for the Gaussian expansion.
    #[arg(long)]
    pub trunc_eps: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
    /// Build the Gaussian from numerical overlaps of the exact packet.
    #[arg(long)]
    pub quadrature: Option<bool>,
    /// density: plot the equilibrium (dephased) state.
    #[arg(long)]
    pub equilibrium: Option<bool>,
    /// density: instant of the snapshot, units of T_g.
    #[arg(long)]
    pub time: Option<f64>,
    /// density: number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// sweep: Gaussian effective dimensions.
    #[arg(long, value_delimiter = ',')]
    pub sweep_deff: Option<Vec<f64>>,
    /// sweep: Gaussian widths sigma/L.
    #[arg(long, value_delimiter = ',')]
    pub sweep_sigma: Option<Vec<f64>>,
    /// sweep: uniform-state sizes N.
    #[arg(long, value_delimiter = ',')]
    pub sweep_uniform: Option<Vec<usize>>,
    /// sweep: window widths, units of L.
    #[arg(long, value_delimiter = ',')]
    pub sweep_width: Option<Vec<f64>>,
    /// sweep: lower d_eff bound of the power-law fit.
    #[arg(long)]
    pub fit_min: Option<f64>,
    /// sweep: upper d_eff bound of the power-law fit.
    #[arg(long)]
    pub fit_max: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are ignored.
pub fn parse_config_text(text: &str) -> CliResult<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().replace('_', "-");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(config_err(format!("line {}: duplicate key {key}", lineno + 1)));
        }
    }
    Ok(map)
}

fn take<T: FromStr>(map: &mut HashMap<String, String>, key: &str) -> CliResult<Option<T>> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| config_err(format!("cannot parse {key} = {v}"))),
    }
}

fn take_list<T: FromStr>(map: &mut HashMap<String, String>, key: &str) -> CliResult<Option<Vec<T>>> {
    match map.remove(key) {
        None => Ok(None),
        Some(v) => v
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| config_err(format!("cannot parse {key} entry {s}"))))
            .collect::<CliResult<Vec<T>>>()
            .map(Some),
    }
}

impl Options {
    /// Fills fields not given on the command line from a parsed config file.
    pub fn merge_file(mut self, mut file: HashMap<String, String>) -> CliResult<Options> {
        macro_rules! fill {
            ($field:ident, $key:literal) => {
                let v = take(&mut file, $key)?;
                if self.$field.is_none() {
                    self.$field = v;
                }
            };
        }
        macro_rules! fill_list {
            ($field:ident, $key:literal) => {
                let v = take_list(&mut file, $key)?;
                if self.$field.is_none() {
                    self.$field = v;
                }
            };
        }
        fill!(sigma_over_l, "sigma-over-l");
        fill!(deff, "deff");
        fill!(uniform_n, "uniform-n");
        fill!(window_center, "window-center");
        fill!(window_width, "window-width");
        fill!(tmin, "tmin");
        fill!(tmax, "tmax");
        fill!(samples, "samples");
        fill!(trunc_eps, "trunc-eps");
        fill!(out, "out");
        fill!(hbar, "hbar");
        fill!(mass, "mass");
        fill!(length, "length");
        fill!(quadrature, "quadrature");
        fill!(equilibrium, "equilibrium");
        fill!(time, "time");
        fill!(points, "points");
        fill_list!(sweep_deff, "sweep-deff");
        fill_list!(sweep_sigma, "sweep-sigma");
        fill_list!(sweep_uniform, "sweep-uniform");
        fill_list!(sweep_width, "sweep-width");
        fill!(fit_min, "fit-min");
        fill!(fit_max, "fit-max");
        if let Some(key) = file.keys().min() {
            return Err(config_err(format!("unknown config key {key}")));
        }
        Ok(self)
    }

    /// Applies `--config` if present.
    pub fn resolve(self) -> CliResult<Options> {
        match self.config.clone() {
            None => Ok(self),
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
                self.merge_file(parse_config_text(&text)?)
            }
        }
    }
}

/// Initial-state choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    /// `sigma` in units of `L`.
    Gaussian { sigma_over_l: f64, mode: GaussianMode },
    Uniform { n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    Deff(Vec<f64>),
    /// `sigma` in units of `L`.
    Sigma(Vec<f64>),
    Uniform(Vec<usize>),
    Width(Vec<f64>),
}

/// Validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub units: BoxConfig,
    pub state: Option<StateSpec>,
    /// `(center, width)` in units of `L`; `None` picks the per-state default.
    pub window: (Option<f64>, Option<f64>),
    pub tmin: f64,
    pub tmax: f64,
    pub samples: Option<usize>,
    pub trunc_eps: f64,
    pub quadrature: bool,
    pub out: Option<PathBuf>,
    pub equilibrium: bool,
    pub time: f64,
    pub points: usize,
    pub sweep: Option<SweepSpec>,
    pub fit_range: (f64, f64),
}

impl RunConfig {
    /// Checks every precondition up front so that no command starts computing
    /// on an invalid configuration.
    pub fn from_options(o: &Options, needs_state: bool) -> CliResult<RunConfig> {
        let units = BoxConfig::new(o.length.unwrap_or(1.0), o.mass.unwrap_or(1.0), o.hbar.unwrap_or(1.0))?;
        let mode = if o.quadrature.unwrap_or(false) { GaussianMode::Quadrature } else { GaussianMode::Analytic };
        let given = [o.sigma_over_l.is_some(), o.deff.is_some(), o.uniform_n.is_some()].iter().filter(|b| **b).count();
        if given > 1 {
            return Err(config_err("give only one of --sigma-over-l, --deff, --uniform-n"));
        }
        let state = if let Some(s) = o.sigma_over_l {
            Some(StateSpec::Gaussian { sigma_over_l: s, mode })
        } else if let Some(d) = o.deff {
            if !(d.is_finite() && d > 0.0) {
                return Err(config_err(format!("--deff must be positive, got {d}")));
            }
            Some(StateSpec::Gaussian { sigma_over_l: sigma_for_deff(d, &BoxConfig::natural()), mode })
        } else {
            o.uniform_n.map(|n| StateSpec::Uniform { n })
        };
        match state {
            Some(StateSpec::Gaussian { sigma_over_l, .. }) => {
                if !(sigma_over_l > 0.0 && sigma_over_l < 0.25) {
                    return Err(config_err(format!("sigma/L must lie in (0, 1/4), got {sigma_over_l}")));
                }
            }
            Some(StateSpec::Uniform { n: 0 }) => return Err(config_err("--uniform-n must be at least 1")),
            None if needs_state => return Err(config_err("no initial state: give --sigma-over-l, --deff or --uniform-n")),
            _ => {}
        }

        let trunc_eps = o.trunc_eps.unwrap_or(DEFAULT_TRUNC_EPS);
        if !(trunc_eps > 0.0 && trunc_eps < 1.0) {
            return Err(config_err(format!("--trunc-eps must lie in (0, 1), got {trunc_eps}")));
        }
        let tmin = o.tmin.unwrap_or(0.0);
        let tmax = o.tmax.unwrap_or(1.0);
        if !(tmin.is_finite() && tmax.is_finite() && tmin <= tmax) {
            return Err(config_err(format!("need finite --tmin <= --tmax, got {tmin} and {tmax}")));
        }
        if let Some(s) = o.samples {
            if s < 2 {
                return Err(config_err("--samples must be at least 2"));
            }
        }
        let points = o.points.unwrap_or(1001);
        if points < 2 {
            return Err(config_err("--points must be at least 2"));
        }
        let time = o.time.unwrap_or(0.0);
        if !time.is_finite() {
            return Err(config_err("--time must be finite"));
        }

        let sweeps = [o.sweep_deff.is_some(), o.sweep_sigma.is_some(), o.sweep_uniform.is_some(), o.sweep_width.is_some()];
        if sweeps.iter().filter(|b| **b).count() > 1 {
            return Err(config_err("give only one of --sweep-deff, --sweep-sigma, --sweep-uniform, --sweep-width"));
        }
        let sweep = if let Some(v) = &o.sweep_deff {
            let d_min = 1.0 / std::f64::consts::PI.sqrt();
            if v.iter().any(|d| !(d.is_finite() && *d > d_min)) {
                return Err(config_err("--sweep-deff entries must exceed 1/sqrt(pi) (sigma < L/4)"));
            }
            Some(SweepSpec::Deff(v.clone()))
        } else if let Some(v) = &o.sweep_sigma {
            if v.iter().any(|s| !(*s > 0.0 && *s < 0.25)) {
                return Err(config_err("--sweep-sigma entries must lie in (0, 1/4)"));
            }
            Some(SweepSpec::Sigma(v.clone()))
        } else if let Some(v) = &o.sweep_uniform {
            if v.contains(&0) {
                return Err(config_err("--sweep-uniform entries must be at least 1"));
            }
            Some(SweepSpec::Uniform(v.clone()))
        } else {
            o.sweep_width.as_ref().map(|v| SweepSpec::Width(v.clone()))
        };
        if let Some(s) = &sweep {
            let empty = match s {
                SweepSpec::Deff(v) | SweepSpec::Sigma(v) | SweepSpec::Width(v) => v.is_empty(),
                SweepSpec::Uniform(v) => v.is_empty(),
            };
            if empty {
                return Err(config_err("sweep list is empty"));
            }
        }
        let fit_range = (o.fit_min.unwrap_or(FIT_RANGE.0), o.fit_max.unwrap_or(FIT_RANGE.1));
        if !(fit_range.0 > 0.0 && fit_range.0 < fit_range.1) {
            return Err(config_err("need 0 < --fit-min < --fit-max"));
        }

        let rc = RunConfig {
            units,
            state,
            window: (o.window_center, o.window_width),
            tmin,
            tmax,
            samples: o.samples,
            trunc_eps,
            quadrature: mode == GaussianMode::Quadrature,
            out: o.out.clone(),
            equilibrium: o.equilibrium.unwrap_or(false),
            time,
            points,
            sweep,
            fit_range,
        };
        if let Some(state) = rc.state {
            rc.window_for(state)?;
        }
        if let Some(SweepSpec::Width(ws)) = &rc.sweep {
            let state = rc.state.ok_or_else(|| config_err("a width sweep needs an initial state"))?;
            for w in ws {
                rc.window_with_width(state, *w)?;
            }
        }
        Ok(rc)
    }

    fn default_center(state: StateSpec) -> f64 {
        match state {
            StateSpec::Gaussian { .. } => 0.0,
            StateSpec::Uniform { .. } => -0.25,
        }
    }

    fn window_with_width(&self, state: StateSpec, width: f64) -> CliResult<Window> {
        let l = self.units.length();
        let c = self.window.0.unwrap_or_else(|| Self::default_center(state));
        Ok(Window::new(c * l, width * l, &self.units)?)
    }

    /// The measurement window; defaults to `A_{L/2}` for Gaussian states and
    /// the left half of the box for uniform states.
    pub fn window_for(&self, state: StateSpec) -> CliResult<Window> {
        self.window_with_width(state, self.window.1.unwrap_or(0.5))
    }

    pub fn build_state(&self, state: StateSpec) -> CliResult<EnergyState> {
        Ok(match state {
            StateSpec::Gaussian { sigma_over_l, mode } => {
                gaussian_state(sigma_over_l * self.units.length(), mode, self.trunc_eps, &self.units)?
            }
            StateSpec::Uniform { n } => uniform_state(n, &self.units)?,
        })
    }

    fn require_state(&self) -> CliResult<StateSpec> {
        self.state.ok_or_else(|| config_err("no initial state given"))
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_row(out: &mut String, values: &[f64]) {
    let row: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
}

/// Distinguishability time series.
pub fn cmd_evolve(rc: &RunConfig) -> CliResult<String> {
    let spec = rc.require_state()?;
    let state = rc.build_state(spec)?;
    let win = rc.window_for(spec)?;
    let matrix = build_matrix(&win, state.n_max(), &rc.units)?;
    let sum = DephasingSum::new(&state, &matrix)?;
    let times = linspace(rc.tmin, rc.tmax, rc.samples.unwrap_or(1001));
    let numeric = sum.series(&times)?;
    let tg = rc.units.recurrence_period();

    let mut out = String::new();
    match spec {
        StateSpec::Gaussian { sigma_over_l, .. } => {
            let approx = SeriesApprox::with_defaults(sigma_over_l * rc.units.length(), &rc.units, state.n_max())?;
            out.push_str("t_over_Tg,D_numeric,D_leading,D_series,D_double_sum\n");
            let rows: Vec<[f64; 5]> = times
                .par_iter()
                .zip(numeric.values.par_iter())
                .map(|(&s, &d)| {
                    let t = s * tg;
                    [s, d, approx.d_leading(t), approx.d_series(t), approx.d_double_sum(t)]
                })
                .collect();
            for r in rows {
                csv_row(&mut out, &r);
            }
        }
        StateSpec::Uniform { n } => {
            out.push_str("t_over_Tg,D_numeric,g_t\n");
            for (&s, &d) in times.iter().zip(&numeric.values) {
                csv_row(&mut out, &[s, d, uniform_g(s * tg, n, &rc.units)]);
            }
        }
    }
    Ok(out)
}

/// Probability density on a uniform grid over the box.
pub fn cmd_density(rc: &RunConfig) -> CliResult<String> {
    let spec = rc.require_state()?;
    let state = rc.build_state(spec)?;
    let l = rc.units.length();
    let xs = linspace(-0.5, 0.5, rc.points);
    let t = rc.time * rc.units.recurrence_period();
    let values: Vec<f64> = if rc.equilibrium {
        let eq = equilibrium(&state);
        xs.par_iter().map(|x| eq.density(x * l, 0.0)).collect::<crate::Result<_>>()?
    } else {
        xs.par_iter().map(|x| state.density(x * l, t)).collect::<crate::Result<_>>()?
    };
    let mut out = String::from("x_over_L,density\n");
    for (x, v) in xs.iter().zip(values) {
        csv_row(&mut out, &[*x, v]);
    }
    Ok(out)
}

fn average_for(state: &EnergyState, win: &Window, samples: Option<usize>) -> CliResult<f64> {
    let matrix = build_matrix(win, state.n_max(), state.config())?;
    let sum = DephasingSum::new(state, &matrix)?;
    let n = samples.unwrap_or_else(|| default_samples(state.n_max()));
    Ok(sum.time_average(n)?.mean)
}

/// Period-averaged distinguishability over a sweep, with a power-law fit for
/// effective-dimension sweeps.
pub fn cmd_sweep(rc: &RunConfig) -> CliResult<String> {
    let sweep = rc.sweep.clone().ok_or_else(|| config_err("no sweep list: give --sweep-deff, --sweep-sigma, --sweep-uniform or --sweep-width"))?;
    let mut out = String::new();
    match sweep {
        SweepSpec::Width(ws) => {
            let spec = rc.require_state()?;
            let state = rc.build_state(spec)?;
            let rows = ws
                .par_iter()
                .map(|w| average_for(&state, &rc.window_with_width(spec, *w)?, rc.samples).map(|a| (*w, a)))
                .collect::<CliResult<Vec<_>>>()?;
            out.push_str("w_over_L,avg_D\n");
            for (w, a) in rows {
                csv_row(&mut out, &[w, a]);
            }
        }
        SweepSpec::Deff(_) | SweepSpec::Sigma(_) | SweepSpec::Uniform(_) => {
            let mode = if rc.quadrature { GaussianMode::Quadrature } else { GaussianMode::Analytic };
            let gaussian = |sigma_over_l: f64| StateSpec::Gaussian { sigma_over_l, mode };
            let specs: Vec<StateSpec> = match &sweep {
                SweepSpec::Deff(ds) => ds.iter().map(|d| gaussian(sigma_for_deff(*d, &BoxConfig::natural()))).collect(),
                SweepSpec::Sigma(ss) => ss.iter().map(|s| gaussian(*s)).collect(),
                SweepSpec::Uniform(ns) => ns.iter().map(|n| StateSpec::Uniform { n: *n }).collect(),
                SweepSpec::Width(_) => unreachable!(),
            };
            let rows = specs
                .par_iter()
                .map(|spec| {
                    let state = rc.build_state(*spec)?;
                    let win = rc.window_for(*spec)?;
                    Ok((state.effective_dimension(), average_for(&state, &win, rc.samples)?))
                })
                .collect::<CliResult<Vec<(f64, f64)>>>()?;
            out.push_str("deff,avg_D\n");
            for (d, a) in &rows {
                csv_row(&mut out, &[*d, *a]);
            }
            let (lo, hi) = rc.fit_range;
            // small slack so nominal endpoints survive d_eff rounding
            let in_range: Vec<(f64, f64)> =
                rows.iter().copied().filter(|(d, _)| *d >= lo * (1.0 - 1e-6) && *d <= hi * (1.0 + 1e-6)).collect();
            match power_law_fit(&in_range) {
                Ok(fit) => {
                    let _ = writeln!(
                        out,
                        "# fit prefactor={} exponent={} deff_min={} deff_max={} points={}",
                        fmt_f64(fit.prefactor),
                        fmt_f64(fit.exponent),
                        fmt_f64(lo),
                        fmt_f64(hi),
                        in_range.len()
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "# fit skipped: {e} (range {lo} to {hi})");
                }
            }
        }
    }
    Ok(out)
}

/// Plain-text summary of scales for the configured state.
pub fn cmd_report(rc: &RunConfig) -> CliResult<String> {
    let spec = rc.require_state()?;
    let state = rc.build_state(spec)?;
    let cfg = rc.units;
    let tg = cfg.recurrence_period();
    let deff = state.effective_dimension();
    let mut out = String::new();
    let _ = writeln!(out, "units: hbar = {}, m = {}, L = {}", cfg.hbar(), cfg.mass(), cfg.length());
    let _ = writeln!(out, "T_g = {} [time]", fmt_f64(tg));
    let _ = writeln!(out, "E_1 = {} [energy]", fmt_f64(cfg.ground_energy()));
    let _ = writeln!(out, "N_max = {}", state.n_max());
    let _ = writeln!(out, "d_eff (sum) = {}", fmt_f64(deff));
    match spec {
        StateSpec::Gaussian { sigma_over_l, .. } => {
            let sigma = sigma_over_l * cfg.length();
            let d_cf = deff_gaussian_closed_form(sigma, &cfg);
            let tau = tau_gaussian(sigma, &cfg);
            let (_, spread) = state.energy_spread();
            let _ = writeln!(out, "state: gaussian, sigma/L = {}", fmt_f64(sigma_over_l));
            let _ = writeln!(out, "d_eff (closed form) = {}", fmt_f64(d_cf));
            let _ = writeln!(out, "tau_G = {} [time]", fmt_f64(tau));
            let _ = writeln!(out, "tau_G/T_g = {}", fmt_f64(tau / tg));
            let _ = writeln!(out, "tau_G/T_g (from d_eff closed form) = {}", fmt_f64(tau_over_tg(d_cf)));
            let _ = writeln!(out, "tau_typical/T_g = {}", fmt_f64(tau_typical(d_cf)));
            let _ = writeln!(out, "(hbar/v_E)/T_g = {}", fmt_f64(tau_spread_over_tg(sigma, &cfg)));
            let _ = writeln!(out, "tau_box = {} [time]", fmt_f64(tau_box(sigma, &cfg)));
            let _ = writeln!(out, "tau_box/tau_G = {}", fmt_f64(tau_box(sigma, &cfg) / tau));
            let _ = writeln!(out, "v_E (closed form) = {} [energy]", fmt_f64(energy_std(sigma, &cfg)));
            let _ = writeln!(out, "v_E (sum) = {} [energy]", fmt_f64(spread));
        }
        StateSpec::Uniform { n } => {
            let (_, spread) = state.energy_spread();
            let _ = writeln!(out, "state: uniform, N = {n}");
            let _ = writeln!(out, "tau_U/T_g = {}", fmt_f64(uniform_first_zero(n, &cfg) / tg));
            let _ = writeln!(out, "tau_typical/T_g = {}", fmt_f64(tau_typical(deff)));
            let _ = writeln!(out, "v_E (sum) = {} [energy]", fmt_f64(spread));
        }
    }
    Ok(out)
}

/// Writes `contents` to `path` through a temporary sibling file, so a failed
/// run never leaves a partial output behind.
pub fn write_atomically(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

/// Resolves configuration, runs the command and returns its output text
/// together with the destination path.
pub fn execute(cli: &Cli) -> CliResult<(String, Option<PathBuf>)> {
    let opts = cli.command.options().clone().resolve()?;
    let needs_state = !matches!(cli.command, Command::Sweep(_));
    let rc = RunConfig::from_options(&opts, needs_state)?;
    let text = match &cli.command {
        Command::Evolve(_) => cmd_evolve(&rc)?,
        Command::Density(_) => cmd_density(&rc)?,
        Command::Sweep(_) => cmd_sweep(&rc)?,
        Command::Report(_) => cmd_report(&rc)?,
    };
    Ok((text, rc.out.clone()))
}
