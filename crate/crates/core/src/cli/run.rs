//! Execution of a validated configuration.

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{AxisName, Mode, RunConfig};
use super::plot::{self, Series};
use crate::enhanced_2d::{self, Barrier2D, Parameter};
use crate::error::{Error, Result};
use crate::exact_zener::{self, ZenerSystem};
use crate::fields::{Drive, Shape};
use crate::semiclassical_1d::{self, ValidityFlags};

/// One row of the tunneling table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunnelingRow {
    pub mode: &'static str,
    pub g: f64,
    pub r: f64,
    pub theta: f64,
    pub tau0: f64,
    pub x_exit: f64,
    pub action: f64,
    pub exact_exponent: Option<f64>,
    pub flag_eq16a: bool,
    pub flag_eq18a: bool,
    pub flag_eq28: bool,
}

/// One row of the two-dimensional table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnhancedRow {
    pub mode: &'static str,
    pub lambda: f64,
    pub epsilon: f64,
    pub a0: f64,
    pub a0_fb: f64,
    pub sigma: f64,
    pub a1: f64,
    pub w: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub error: &'static str,
    pub message: String,
    /// Index of the failing row, when the failure belongs to one.
    pub row: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Rows {
    Tunneling(Vec<TunnelingRow>),
    Enhanced(Vec<EnhancedRow>),
}

impl Rows {
    fn len(&self) -> usize {
        match self {
            Rows::Tunneling(r) => r.len(),
            Rows::Enhanced(r) => r.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mode: &'static str,
    pub status: &'static str,
    pub rows: usize,
    pub results: Rows,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonance: Option<enhanced_2d::Resonance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub config: RunConfig,
}

/// Result of a run: what was written and how it ended.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.failure.is_some() {
            2
        } else {
            0
        }
    }
}

fn theta_of(d: &Drive) -> f64 {
    match d.shape {
        Shape::None => 0.0,
        _ => d.width,
    }
}

fn tunneling_row(mode: Mode, g: f64, drive: &Drive, exact: Option<&exact_zener::ExactOptions>) -> Result<TunnelingRow> {
    let a = semiclassical_1d::action_integral(drive, g)?;
    let exact_exponent = match exact {
        Some(o) => Some(exact_zener::packet_probability_with(&ZenerSystem::new(g)?, drive, o)?.exponent),
        None => None,
    };
    let ValidityFlags { eq16a, eq18a, eq28 } = a.conditions;
    Ok(TunnelingRow {
        mode: mode.name(),
        g,
        r: drive.amplitude_ratio,
        theta: theta_of(drive),
        tau0: a.tau0,
        x_exit: a.x_exit,
        action: a.action,
        exact_exponent,
        flag_eq16a: eq16a,
        flag_eq18a: eq18a,
        flag_eq28: eq28,
    })
}

fn enhanced_row(mode: Mode, b: &Barrier2D) -> Result<EnhancedRow> {
    let r = enhanced_2d::enhanced_action(b)?;
    Ok(EnhancedRow {
        mode: mode.name(),
        lambda: b.lambda,
        epsilon: b.epsilon,
        a0: r.a0,
        a0_fb: r.a0_fb,
        sigma: r.sigma_mag,
        a1: r.a1,
        w: r.w,
        f_x: r.f_point.0,
        f_y: r.f_point.1,
        valid: r.valid,
    })
}

/// Evaluates all points, keeping the successful rows in order and the first failure.
fn collect<T: Send>(points: usize, f: impl Fn(usize) -> Result<T> + Sync) -> (Vec<T>, Option<Failure>) {
    let all: Vec<Result<T>> = (0..points).into_par_iter().map(|k| f(k)).collect();
    let mut rows = Vec::new();
    let mut failure = None;
    for (k, r) in all.into_iter().enumerate() {
        match r {
            Ok(v) => rows.push(v),
            Err(e) => {
                failure.get_or_insert(Failure { error: e.name(), message: e.to_string(), row: Some(k) });
            }
        }
    }
    (rows, failure)
}

fn drive_with(base: &Drive, point: &[(AxisName, f64)]) -> (f64, Drive) {
    let mut d = *base;
    let mut g = None;
    for &(name, v) in point {
        match name {
            AxisName::G => g = Some(v),
            AxisName::R => d.amplitude_ratio = v,
            AxisName::Theta => d.width = v,
            AxisName::Lambda | AxisName::Epsilon => {}
        }
    }
    (g.unwrap_or(f64::NAN), d)
}

/// Runs the configuration and writes results into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out).map_err(|e| Error::Invalid(format!("cannot create {}: {e}", out.display())))?;
    let mode = cfg.mode;
    info!("mode {}", mode.name());
    let mut resonance = None;
    let mut plot_series: Vec<Series> = Vec::new();
    let mut labels = ("", "");
    let (results, failure) = match mode {
        Mode::Static | Mode::Pulse => {
            let drive = if mode == Mode::Static { Drive::none() } else { cfg.drive };
            let (rows, f) = collect(1, |_| tunneling_row(mode, cfg.g, &drive, Some(&cfg.exact_options)));
            (Rows::Tunneling(rows), f)
        }
        Mode::Sweep | Mode::ExactVsSemiclassical => {
            let mut grid = cfg.grid()?;
            if mode == Mode::ExactVsSemiclassical && !cfg.sweep.iter().any(|a| a.name == AxisName::G) {
                grid = [15.0, 20.0, 30.0].iter().map(|&g| vec![(AxisName::G, g)]).collect();
            }
            let exact = (mode == Mode::ExactVsSemiclassical || cfg.exact).then_some(&cfg.exact_options);
            let (rows, f) = collect(grid.len(), |k| {
                let (g, d) = drive_with(&cfg.drive, &grid[k]);
                let g = if g.is_nan() { cfg.g } else { g };
                info!("point {k}: g = {g}, r = {}, theta = {}", d.amplitude_ratio, d.width);
                tunneling_row(mode, g, &d, exact)
            });
            if mode == Mode::ExactVsSemiclassical {
                labels = ("g", "-ln W");
                plot_series.push(Series::new("semiclassical", rows.iter().map(|r| (r.g, r.action)).collect()));
                plot_series.push(Series::new("exact", rows.iter().filter_map(|r| r.exact_exponent.map(|e| (r.g, e))).collect()));
            } else if let Some(axis) = cfg.sweep.first() {
                labels = (axis_label(axis.name), "A");
                let x = |r: &TunnelingRow| match axis.name {
                    AxisName::G => r.g,
                    AxisName::R => r.r,
                    _ => r.theta,
                };
                plot_series.push(Series::new("semiclassical", rows.iter().map(|r| (x(r), r.action)).collect()));
                if cfg.exact {
                    plot_series.push(Series::new("exact", rows.iter().filter_map(|r| r.exact_exponent.map(|e| (x(r), e))).collect()));
                }
            }
            (Rows::Tunneling(rows), f)
        }
        Mode::Enhanced2d => {
            let grid = cfg.grid()?;
            let (rows, f) = collect(grid.len(), |k| {
                let mut b = cfg.barrier;
                for &(name, v) in &grid[k] {
                    b = match name {
                        AxisName::Lambda => b.with(Parameter::Lambda, v),
                        AxisName::Epsilon => b.with(Parameter::Epsilon, v),
                        _ => b,
                    };
                }
                b.validate()?;
                enhanced_row(mode, &b)
            });
            if let Some(axis) = cfg.sweep.first() {
                labels = (axis_label(axis.name), "A");
                let x = |r: &EnhancedRow| if axis.name == AxisName::Lambda { r.lambda } else { r.epsilon };
                plot_series.push(Series::new("A0", rows.iter().map(|r| (x(r), r.a0)).collect()));
                plot_series.push(Series::new("A1", rows.iter().map(|r| (x(r), r.a1)).collect()));
            }
            (Rows::Enhanced(rows), f)
        }
        Mode::Resonance => {
            let range = cfg.resonance.expect("validated");
            let n = range.scan.max(2);
            let (rows, mut f) = collect(n, |k| {
                let v = range.lo + (range.hi - range.lo) * k as f64 / (n - 1) as f64;
                enhanced_row(mode, &cfg.barrier.with(range.parameter, v))
            });
            if f.is_none() {
                match enhanced_2d::resonance_search(&cfg.barrier, range.parameter, range.lo, range.hi) {
                    Ok(r) => resonance = Some(r),
                    Err(e) => f = Some(Failure { error: e.name(), message: e.to_string(), row: None }),
                }
            }
            let name = match range.parameter {
                Parameter::Lambda => AxisName::Lambda,
                Parameter::Epsilon => AxisName::Epsilon,
            };
            labels = (axis_label(name), "A1");
            let x = |r: &EnhancedRow| if name == AxisName::Lambda { r.lambda } else { r.epsilon };
            plot_series.push(Series::new("A1", rows.iter().map(|r| (x(r), r.a1)).collect()));
            (Rows::Enhanced(rows), f)
        }
    };

    let mut files = Vec::new();
    let csv_path = out.join("results.csv");
    write_csv(&csv_path, &results)?;
    files.push(csv_path);
    if cfg.output.plots && plot_series.iter().any(|s| s.points.len() >= 2) {
        let svg = out.join("plot.svg");
        plot::line_plot(&svg, mode.name(), labels, &plot_series)?;
        files.push(svg);
    }
    let summary = Summary {
        mode: mode.name(),
        status: if failure.is_some() { "error" } else { "ok" },
        rows: results.len(),
        results,
        resonance,
        failure,
        config: cfg.clone(),
    };
    let json_path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(&json_path, text + "\n").map_err(|e| Error::Invalid(format!("cannot write {}: {e}", json_path.display())))?;
    files.push(json_path);
    Ok(Outcome { summary, files })
}

fn axis_label(a: AxisName) -> &'static str {
    match a {
        AxisName::G => "g",
        AxisName::R => "r",
        AxisName::Theta => "theta",
        AxisName::Lambda => "lambda",
        AxisName::Epsilon => "epsilon",
    }
}

fn write_csv(path: &Path, rows: &Rows) -> Result<()> {
    let io = |e: csv::Error| Error::Invalid(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    match rows {
        Rows::Tunneling(r) => {
            if r.is_empty() {
                w.write_record(["mode", "g", "r", "theta", "tau0", "x_exit", "action", "exact_exponent", "flag_eq16a", "flag_eq18a", "flag_eq28"])
                    .map_err(io)?;
            }
            for row in r {
                w.serialize(row).map_err(io)?;
            }
        }
        Rows::Enhanced(r) => {
            if r.is_empty() {
                w.write_record(["mode", "lambda", "epsilon", "a0", "a0_fb", "sigma", "a1", "w", "f_x", "f_y", "valid"]).map_err(io)?;
            }
            for row in r {
                w.serialize(row).map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}
