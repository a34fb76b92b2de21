//! Exact nonstationary Zener wave function as an oscillatory q-integral.
//!
//! psi(x, t) = (1/2pi) * integral dq exp{i (g/2) [q x - F_t(q)]}, evaluated by
//! tracing steepest-descent paths out of the relevant saddles of x = F_t'(q).

mod integrand;
mod sheets;
mod thimble;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use integrand::{lower_band_root, Integrand};
pub use sheets::{Jet, Kind, AROUND, DIRECT};

use crate::error::{Error, Result};
use crate::fields::{Drive, Shape};
use crate::quad;
use crate::semiclassical_1d;
use sheets::Branches;
use thimble::Phase;

pub const DEFAULT_CUTOFF: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenerSystem {
    /// eps_g * t0 / hbar.
    pub g: f64,
}

impl ZenerSystem {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Invalid(format!("g = {g} must be positive")));
        }
        Ok(ZenerSystem { g })
    }

    /// Builds the system from the gap, band velocity, static field and hbar.
    pub fn from_physical(gap: f64, velocity: f64, field: f64, hbar: f64) -> Result<Self> {
        let (_, t0) = Self::scales(gap, velocity, field);
        Self::new(gap * t0 / hbar)
    }

    /// Tunneling length a = eps_g / (2 E0) and time t0 = a / c.
    pub fn scales(gap: f64, velocity: f64, field: f64) -> (f64, f64) {
        let a = gap / (2.0 * field);
        (a, a / velocity)
    }

    pub fn is_semiclassical(&self) -> bool {
        self.g >= 10.0
    }
}

/// A u-plane contour from the cutoff through `waypoints` to its endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    pub waypoints: Vec<C64>,
    pub cutoff: f64,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { waypoints: Vec::new(), cutoff: DEFAULT_CUTOFF }
    }
}

impl ContourSpec {
    pub fn new(waypoints: Vec<C64>, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(Error::Invalid("cutoff must be positive".into()));
        }
        Ok(ContourSpec { waypoints, cutoff })
    }

    /// Polyline from the cutoff through the waypoints to `end`.
    pub fn polyline(&self, end: C64) -> Vec<C64> {
        let mut pts = self.waypoints.clone();
        pts.push(end);
        pts
    }

    /// Smallest distance from the polyline ending at `end` to +-i.
    pub fn clearance(&self, end: C64) -> f64 {
        let mut pts = vec![C64::new(-self.cutoff, 0.0)];
        pts.extend(self.polyline(end));
        let mut best = f64::INFINITY;
        for seg in pts.windows(2) {
            for b in [C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
                best = best.min(point_segment_distance(b, seg[0], seg[1]));
            }
        }
        best
    }
}

fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a) * d.conj()).re / l2;
    (p - (a + d * s.clamp(0.0, 1.0))).norm()
}

/// psi = value * exp(log_scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveSample {
    pub x: f64,
    pub t: f64,
    pub value: C64,
    pub log_scale: f64,
}

impl WaveSample {
    pub fn ln_abs2(&self) -> f64 {
        2.0 * (self.value.norm().ln() + self.log_scale)
    }

    fn sum(x: f64, t: f64, parts: &[(C64, f64)]) -> Self {
        let scale = parts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let value = parts.iter().map(|p| p.0 * (p.1 - scale).exp()).sum();
        WaveSample { x, t, value, log_scale: scale }
    }
}

/// Numerical settings of the exact evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactOptions {
    pub cutoff: f64,
    /// Samples of the outgoing trajectory before refinement.
    pub samples: usize,
    /// Depth below the saddle at which a steepest-descent path is cut.
    pub depth: f64,
    /// Largest step along a steepest-descent path.
    pub max_step: f64,
    /// Tolerated local error of the exponent per step.
    pub step_tol: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { cutoff: DEFAULT_CUTOFF, samples: 400, depth: 30.0, max_step: 0.1, step_tol: 1e-4 }
    }
}

/// Tracked value of f_t(u, q) at `u`, continued along the contour from the cutoff.
pub fn integrand_f(u: C64, q: C64, t: f64, drive: &Drive, contour: &ContourSpec) -> Result<C64> {
    let ig = Integrand::new(drive, q, t, contour.cutoff)?;
    ig.value_at_end(&contour.polyline(u))
}

/// F_t(q) along the contour, up to a q-independent constant set by the cutoff.
pub fn big_f(q: C64, t: f64, drive: &Drive, contour: &ContourSpec) -> Result<C64> {
    Ok(big_f_jet(q, t, drive, contour)?.0)
}

/// F_t(q) and dF/dq along the contour.
pub fn big_f_jet(q: C64, t: f64, drive: &Drive, contour: &ContourSpec) -> Result<Jet> {
    let ig = Integrand::new(drive, q, t, contour.cutoff)?;
    let s = ig.path(&contour.polyline(q), false)?;
    Ok((s.f, s.dq + s.end))
}

/// F_t(q) on the sheet reached by looping once around the branch point w = i.
pub fn big_f_around(q: C64, t: f64, drive: &Drive, cutoff: f64) -> Result<Jet> {
    let tau0 = semiclassical_1d::tunneling_time(drive)?;
    let mut b = Branches::new(drive, q, t, cutoff, branch_seed(drive, tau0, q, t))?;
    b.candidate(AROUND)
}

/// Newton seed for the point where w(u) = i.
pub(crate) fn branch_seed(drive: &Drive, tau0: f64, q: C64, t: f64) -> C64 {
    if drive.is_none() {
        return C64::new(0.0, 1.0);
    }
    C64::new(0.0, tau0) + drive.antiderivative(C64::new(t, 0.0)) - drive.antiderivative(t - q)
}

/// Saddles of x = F_t'(q) relevant at (x, t).
pub fn saddle_points(x: f64, t: f64, drive: &Drive) -> Result<Vec<C64>> {
    let ph = Phase::new(drive, 20.0, x, t, DEFAULT_CUTOFF, ExactOptions::default())?;
    let mut out: Vec<C64> = Vec::new();
    for s in incident_seeds(x) {
        let sp = ph.saddle(s, DIRECT, None)?;
        if out.iter().all(|q| (q - sp.q).norm() > 1e-6) {
            out.push(sp.q);
        }
    }
    Ok(out)
}

fn incident_seeds(x: f64) -> [C64; 2] {
    let a = (x * x - 1.0).max(0.0).sqrt();
    [C64::new(a, 0.0), C64::new(-a, 0.0)]
}

/// Wave function at (x, t).
///
/// Left of the gap (x < -1) the incident and reflected saddles are summed;
/// elsewhere the transmitted saddle is used, seeded from the outgoing
/// trajectory through x.
pub fn wavefunction(sys: &ZenerSystem, x: f64, t: f64, drive: &Drive) -> Result<WaveSample> {
    wavefunction_with(sys, x, t, drive, &ExactOptions::default())
}

pub fn wavefunction_with(sys: &ZenerSystem, x: f64, t: f64, drive: &Drive, opts: &ExactOptions) -> Result<WaveSample> {
    if !(x.abs() <= 20.0 && t.abs() <= 20.0) {
        return Err(Error::Invalid(format!("(x, t) = ({x}, {t}) outside |x|, |t| <= 20")));
    }
    if x < -1.0 {
        return incident_wave(sys, x, t, drive, opts, None).map(|(w, _)| w);
    }
    let x_exit = semiclassical_1d::exit_point(drive)?;
    let p = x - x_exit + 1.0;
    let seed = (p * p - 1.0).max(1e-6).sqrt();
    outgoing_wave(sys, x, t, drive, opts, C64::new(seed, 0.0), None)
}

fn incident_wave(
    sys: &ZenerSystem,
    x: f64,
    t: f64,
    drive: &Drive,
    opts: &ExactOptions,
    seeds: Option<[C64; 2]>,
) -> Result<(WaveSample, [C64; 2])> {
    let ph = Phase::new(drive, sys.g, x, t, opts.cutoff, *opts)?;
    let seeds = seeds.unwrap_or_else(|| incident_seeds(x));
    let mut parts = Vec::with_capacity(2);
    let mut found = [C64::new(0.0, 0.0); 2];
    for (k, s) in seeds.iter().enumerate() {
        let sp = ph.saddle(*s, DIRECT, None)?;
        found[k] = sp.q;
        parts.push(ph.steepest_descent(&sp)?);
    }
    let parts: Vec<(C64, f64)> = parts.iter().map(|(v, e)| (*v / (2.0 * std::f64::consts::PI), *e)).collect();
    Ok((WaveSample::sum(x, t, &parts), found))
}

fn outgoing_wave(
    sys: &ZenerSystem,
    x: f64,
    t: f64,
    drive: &Drive,
    opts: &ExactOptions,
    seed: C64,
    ub_seed: Option<C64>,
) -> Result<WaveSample> {
    let ph = Phase::new(drive, sys.g, x, t, opts.cutoff, *opts)?;
    let sp = ph.saddle(seed, AROUND, ub_seed)?;
    let (v, e) = ph.steepest_descent(&sp)?;
    Ok(WaveSample::sum(x, t, &[(v / (2.0 * std::f64::consts::PI), e)]))
}

/// Duration scale of the drive used for the time windows.
pub fn pulse_span(drive: &Drive) -> f64 {
    let theta = match drive.shape {
        Shape::None => 0.0,
        Shape::LorentzianCubed => drive.width,
        Shape::Gaussian | Shape::Cosine => 1.0 / drive.width,
    };
    3.0 * theta + 5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketProbability {
    pub w: f64,
    /// -ln W.
    pub exponent: f64,
    /// Time of the outgoing maximum on the classical trajectory.
    pub t_peak: f64,
    pub ln_incident: f64,
    pub ln_outgoing: f64,
}

/// Mean of |psi|^2 over one local period of the standing wave at x, and the
/// peak of |psi|^2 along the outgoing classical trajectory.
pub fn packet_probability(sys: &ZenerSystem, drive: &Drive) -> Result<PacketProbability> {
    packet_probability_with(sys, drive, &ExactOptions::default())
}

pub fn packet_probability_with(sys: &ZenerSystem, drive: &Drive, opts: &ExactOptions) -> Result<PacketProbability> {
    let span = pulse_span(drive);
    let ln_in = incident_level(sys, drive, opts, -3.0, -span)?;
    let tau0 = semiclassical_1d::tunneling_time(drive)?;
    let x_exit = semiclassical_1d::exit_point(drive)?;
    let x_cl = |t: f64| x_exit + (1.0 + t * t).sqrt() - 1.0;
    let eval = |t: f64| -> Result<f64> {
        let ub = branch_seed(drive, tau0, C64::new(t, 0.0), t);
        Ok(outgoing_wave(sys, x_cl(t), t, drive, opts, C64::new(t, 0.0), Some(ub))?.ln_abs2())
    };
    let n = opts.samples.max(2);
    let ts: Vec<f64> = (0..n).map(|k| span * (k as f64 + 0.5) / n as f64).collect();
    let vals: Vec<f64> = ts.par_iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
    let (k, _) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let lo = if k == 0 { 0.5 * ts[0] } else { ts[k - 1] };
    let hi = if k + 1 == n { span } else { ts[k + 1] };
    let mut failure = None;
    let (t_peak, neg) = quad::golden_min(
        |t| match eval(t) {
            Ok(v) => -v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-5,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (t_peak, ln_out) = if -neg >= vals[k] { (t_peak, -neg) } else { (ts[k], vals[k]) };
    let ln_w = (ln_out - ln_in).min(0.0);
    Ok(PacketProbability { w: ln_w.exp(), exponent: -ln_w, t_peak, ln_incident: ln_in, ln_outgoing: ln_out })
}

/// ln of |psi|^2 averaged over one period of the standing wave around x0.
pub fn incident_level(sys: &ZenerSystem, drive: &Drive, opts: &ExactOptions, x0: f64, t: f64) -> Result<f64> {
    let period = 2.0 * std::f64::consts::PI / (sys.g * (x0 * x0 - 1.0).sqrt());
    let m = 16;
    let mut seeds = None;
    let mut samples = Vec::with_capacity(m);
    for j in 0..m {
        let x = x0 + period * (j as f64 / m as f64 - 0.5);
        let (w, s) = incident_wave(sys, x, t, drive, opts, seeds)?;
        seeds = Some(s);
        samples.push(w.ln_abs2());
    }
    let top = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = samples.iter().map(|v| (v - top).exp()).sum::<f64>() / m as f64;
    Ok(top + mean.ln())
}

/// Least-squares fit of the standing-wave phase to c x^2 - phi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseFit {
    pub coefficient: f64,
    /// Offset reduced to (-pi/2, pi/2].
    pub offset: f64,
}

/// Fits half the phase difference of the incident and reflected waves at the
/// given points (all left of the gap) to c x^2 - phi.
pub fn standing_wave_phase_fit(sys: &ZenerSystem, drive: &Drive, t: f64, xs: &[f64]) -> Result<PhaseFit> {
    if xs.len() < 3 || xs.iter().any(|&x| x >= -1.0) {
        return Err(Error::Invalid("phase fit needs at least three points with x < -1".into()));
    }
    let opts = ExactOptions::default();
    let mut half = Vec::with_capacity(xs.len());
    let mut seeds = None;
    for &x in xs {
        let ph = Phase::new(drive, sys.g, x, t, opts.cutoff, opts)?;
        let s = seeds.unwrap_or_else(|| incident_seeds(x));
        let mut arg = [0.0; 2];
        let mut found = [C64::new(0.0, 0.0); 2];
        for k in 0..2 {
            let sp = ph.saddle(s[k], DIRECT, None)?;
            found[k] = sp.q;
            let (v, e) = ph.steepest_descent(&sp)?;
            let _ = e;
            arg[k] = v.arg();
        }
        seeds = Some(found);
        half.push(0.5 * (arg[0] - arg[1]));
    }
    // Unwrap in steps of pi, the period of cos^2.
    let pi = std::f64::consts::PI;
    for k in 1..half.len() {
        while half[k] - half[k - 1] > 0.5 * pi {
            half[k] -= pi;
        }
        while half[k] - half[k - 1] < -0.5 * pi {
            half[k] += pi;
        }
    }
    let n = xs.len() as f64;
    let u: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let mu = u.iter().sum::<f64>() / n;
    let mp = half.iter().sum::<f64>() / n;
    let cov: f64 = u.iter().zip(&half).map(|(a, b)| (a - mu) * (b - mp)).sum();
    let var: f64 = u.iter().map(|a| (a - mu) * (a - mu)).sum();
    let mut c = cov / var;
    let mut d = mp - c * mu;
    if c < 0.0 {
        c = -c;
        d = -d;
    }
    let mut offset = d;
    while offset > 0.5 * pi {
        offset -= pi;
    }
    while offset <= -0.5 * pi {
        offset += pi;
    }
    Ok(PhaseFit { coefficient: c, offset })
}
