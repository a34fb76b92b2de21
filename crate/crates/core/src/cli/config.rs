//! Run configuration read from JSON.

use serde::{Deserialize, Serialize};

use crate::enhanced_2d::{Barrier2D, Parameter, PathOptions};
use crate::error::{Error, Result};
use crate::exact_zener::ExactOptions;
use crate::fields::Drive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Static,
    Pulse,
    ExactVsSemiclassical,
    Sweep,
    #[serde(rename = "enhanced2d")]
    Enhanced2d,
    Resonance,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Pulse => "pulse",
            Mode::ExactVsSemiclassical => "exact-vs-semiclassical",
            Mode::Sweep => "sweep",
            Mode::Enhanced2d => "enhanced2d",
            Mode::Resonance => "resonance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    G,
    R,
    Theta,
    Lambda,
    Epsilon,
}

/// Either explicit `values` or `count` points from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub from: Option<f64>,
    #[serde(default)]
    pub to: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
}

impl Axis {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.values, self.from, self.to, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            },
            _ => return Err(Error::Invalid(format!("axis {:?}: give either values or from/to/count", self.name))),
        };
        if pts.is_empty() {
            return Err(Error::Invalid(format!("axis {:?} is empty", self.name)));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("axis {:?} has a non-finite value", self.name)));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceRange {
    pub parameter: Parameter,
    pub lo: f64,
    pub hi: f64,
    /// Points of the A1 scan written next to the root.
    #[serde(default = "default_scan")]
    pub scan: usize,
}

fn default_scan() -> usize {
    11
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub path_grad: f64,
    pub path_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let p = PathOptions::default();
        Tolerances { path_grad: p.grad_tol, path_max_iter: p.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: Option<String>,
    pub plots: bool,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: None, plots: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default)]
    pub drive: Drive,
    #[serde(default)]
    pub sweep: Vec<Axis>,
    /// Also evaluate the exact exponent in sweep mode.
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub exact_options: ExactOptions,
    #[serde(default = "Barrier2D::reference")]
    pub barrier: Barrier2D,
    #[serde(default)]
    pub resonance: Option<ResonanceRange>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
    /// Seed for random initial paths; straight initial paths when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_g() -> f64 {
    20.0
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("g", self.g)?;
        self.drive.validate()?;
        let o = &self.exact_options;
        positive("exact_options.cutoff", o.cutoff)?;
        positive("exact_options.depth", o.depth)?;
        positive("exact_options.max_step", o.max_step)?;
        positive("exact_options.step_tol", o.step_tol)?;
        if o.samples < 1 {
            return Err(Error::Invalid("exact_options.samples must be >= 1".into()));
        }
        positive("tolerances.path_grad", self.tolerances.path_grad)?;
        if self.tolerances.path_max_iter < 1 {
            return Err(Error::Invalid("tolerances.path_max_iter must be >= 1".into()));
        }
        self.barrier.validate()?;
        for a in &self.sweep {
            a.points()?;
            let ok = match self.mode {
                Mode::Sweep | Mode::ExactVsSemiclassical => matches!(a.name, AxisName::G | AxisName::R | AxisName::Theta),
                Mode::Enhanced2d => matches!(a.name, AxisName::Lambda | AxisName::Epsilon),
                _ => false,
            };
            if !ok {
                return Err(Error::Invalid(format!("axis {:?} does not apply to mode {}", a.name, self.mode.name())));
            }
        }
        if self.mode == Mode::Sweep && self.sweep.is_empty() {
            return Err(Error::Invalid("sweep mode needs at least one axis".into()));
        }
        if self.mode == Mode::Resonance {
            let r = self.resonance.ok_or_else(|| Error::Invalid("resonance mode needs a resonance range".into()))?;
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo != r.hi) {
                return Err(Error::Invalid("resonance range must have distinct finite ends".into()));
            }
        }
        Ok(())
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions { max_iter: self.tolerances.path_max_iter, grad_tol: self.tolerances.path_grad }
    }

    /// Cartesian product of the sweep axes as (axis, value) assignments.
    pub fn grid(&self) -> Result<Vec<Vec<(AxisName, f64)>>> {
        let mut out: Vec<Vec<(AxisName, f64)>> = vec![Vec::new()];
        for a in &self.sweep {
            let pts = a.points()?;
            out = out
                .into_iter()
                .flat_map(|base| {
                    pts.iter().map(move |&v| {
                        let mut p = base.clone();
                        p.push((a.name, v));
                        p
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"mode": "static", "gee": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"mode": "static", "drive": {"shape": "none", "colour": 1}}"#).is_err());
    }

    #[test]
    fn empty_axis_is_a_config_error() {
        let cfg = r#"{"mode": "sweep", "sweep": [{"name": "theta", "values": []}]}"#;
        assert!(RunConfig::from_json(cfg).is_err());
        let cfg = r#"{"mode": "sweep", "sweep": [{"name": "theta", "from": 0.1, "to": 1, "count": 0}]}"#;
        assert!(RunConfig::from_json(cfg).is_err());
    }

    #[test]
    fn grid_is_the_product_of_axes() {
        let cfg = RunConfig::from_json(
            r#"{"mode": "sweep", "drive": {"shape": "lorentzian_cubed", "amplitude_ratio": 0.01, "width": 1},
                "sweep": [{"name": "g", "values": [10, 20]}, {"name": "theta", "from": 0.5, "to": 1.5, "count": 3}]}"#,
        )
        .unwrap();
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[4], vec![(AxisName::G, 20.0), (AxisName::Theta, 1.0)]);
    }

    #[test]
    fn axis_must_match_mode() {
        assert!(RunConfig::from_json(r#"{"mode": "sweep", "sweep": [{"name": "lambda", "values": [0.1]}]}"#).is_err());
    }
}
