//! Classical-trajectory description of tunneling: imaginary-time exit
//! quantities for the Zener problem and a generic 1D barrier toolkit.

mod potential;

pub use potential::{instanton_bvp, photon_assist_extremum, wkb_action, Barrier1D, Instanton, PhotonAssist, Potential1D, Trajectory1D};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_zener::ZenerSystem;
use crate::fields::{Drive, Shape};
use crate::ode::Rk4;
use crate::quad;

const SCAN_STEP: f64 = 1e-3;

/// Semiclassical validity, each inequality with a factor-10 margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValidityFlags {
    /// g >> 1.
    pub eq16a: bool,
    /// Weak drive compared with the static field.
    pub eq18a: bool,
    /// Pulse long enough for the classical description.
    pub eq28: bool,
}

impl ValidityFlags {
    pub fn all(&self) -> bool {
        self.eq16a && self.eq18a && self.eq28
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionBreakdown {
    pub tau0: f64,
    pub x_exit: f64,
    pub action: f64,
    /// 1 - x_exit, in units of half the gap.
    pub exit_energy: f64,
    /// Factor multiplying the reduced integral; action = prefactor * reduced.
    pub prefactor: f64,
    pub reduced: f64,
    pub conditions: ValidityFlags,
}

/// Smallest tau0 > 0 with tau0 + I(tau0) = 1.
pub fn tunneling_time(drive: &Drive) -> Result<f64> {
    if drive.is_none() {
        return Ok(1.0);
    }
    let edge = drive.imag_domain_edge();
    let top = if edge.is_finite() { edge * (1.0 - 1e-9) } else { f64::INFINITY };
    let h = |s: f64| drive.h_imag(s).unwrap_or(f64::INFINITY);
    let mut tau = 0.0;
    let mut acc = 0.0;
    loop {
        let next = (tau + SCAN_STEP).min(top);
        let piece = quad::integrate(h, tau, next, 1e-13, 1e-300);
        let phi = next + acc + piece - 1.0;
        if phi == 0.0 {
            return Ok(next);
        }
        if phi > 0.0 {
            let (lo, base) = (tau, acc);
            let root = quad::bisect(|s| s + base + quad::integrate(h, lo, s, 1e-13, 1e-300) - 1.0, lo, next, 1e-15);
            return Ok(root);
        }
        acc += piece;
        tau = next;
        if tau >= top || tau > 1.0 {
            return Err(Error::NoRoot { edge: tau });
        }
    }
}

/// 1 - tau - I(tau) written as s^2 (1 + mean of h over [tau, tau0]) with tau = tau0 - s^2.
fn gap_factor(drive: &Drive, tau0: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0 + drive.h_imag(tau0).unwrap_or(f64::INFINITY);
    }
    let lo = tau0 - s * s;
    let mean = quad::integrate(|v| drive.h_imag(v).unwrap_or(f64::INFINITY), lo, tau0, 1e-13, 1e-300) / (s * s);
    1.0 + mean
}

/// x_exit = 1 - 2 * integral of P h(i tau) / sqrt(1 - P^2), P = tau + I(tau).
pub fn exit_point(drive: &Drive) -> Result<f64> {
    if drive.is_none() {
        return Ok(1.0);
    }
    let tau0 = tunneling_time(drive)?;
    let top = tau0.sqrt();
    let integrand = |s: f64| {
        let tau = tau0 - s * s;
        let c = gap_factor(drive, tau0, s);
        let d = s * s * c;
        let p = 1.0 - d;
        let h = drive.h_imag(tau).unwrap_or(f64::INFINITY);
        2.0 * p * h / (c * (2.0 - d)).sqrt()
    };
    Ok(1.0 - 2.0 * quad::integrate(integrand, 0.0, top, 1e-12, 1e-300))
}

/// Integral of sqrt(1 - P^2) over [0, tau0].
fn reduced_action(drive: &Drive, tau0: f64) -> f64 {
    if drive.is_none() {
        return std::f64::consts::FRAC_PI_4;
    }
    let integrand = |s: f64| {
        let c = gap_factor(drive, tau0, s);
        let d = s * s * c;
        2.0 * s * s * (c * (2.0 - d)).sqrt()
    };
    quad::integrate(integrand, 0.0, tau0.sqrt(), 1e-12, 1e-300)
}

/// Tunneling exponent A = 2g * integral of sqrt(1 - P^2), with the exit data.
pub fn action_integral(drive: &Drive, g: f64) -> Result<ActionBreakdown> {
    let sys = ZenerSystem::new(g)?;
    let tau0 = tunneling_time(drive)?;
    let x_exit = exit_point(drive)?;
    let reduced = reduced_action(drive, tau0);
    let prefactor = 2.0 * g;
    Ok(ActionBreakdown {
        tau0,
        x_exit,
        action: prefactor * reduced,
        exit_energy: 1.0 - x_exit,
        prefactor,
        reduced,
        conditions: check_semiclassical(&sys, drive),
    })
}

/// Short-pulse limit of the action.
pub fn closed_form_action(theta: f64, g: f64) -> f64 {
    if theta >= 1.0 {
        0.5 * std::f64::consts::PI * g
    } else {
        g * (theta.asin() + theta * (1.0 - theta * theta).sqrt())
    }
}

pub fn check_semiclassical(sys: &ZenerSystem, drive: &Drive) -> ValidityFlags {
    let eq16a = sys.g >= 10.0;
    if drive.is_none() {
        return ValidityFlags { eq16a, eq18a: true, eq28: true };
    }
    let r = drive.amplitude_ratio;
    let theta = match drive.shape {
        Shape::LorentzianCubed => drive.width,
        _ => 1.0 / drive.width,
    };
    ValidityFlags { eq16a, eq18a: r <= 0.1, eq28: 1.0 / sys.g <= 0.1 * theta.powi(3) * r }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

/// Classical electron trajectory in real time: on the lower band from x = -1
/// for t < 0, on the upper band from the exit point for t > 0.
pub fn real_time_trajectory(drive: &Drive, t_span: (f64, f64), samples: usize) -> Result<Vec<TrajectoryPoint>> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t0 <= t1) || samples < 2 {
        return Err(Error::Invalid("trajectory needs a finite span and at least two samples".into()));
    }
    let x_exit = if t1 >= 0.0 { exit_point(drive)? } else { 1.0 };
    let momentum = |t: f64| t + drive.antiderivative(C64::new(t, 0.0)).re;
    let velocity = |t: f64, band: f64| {
        let p = momentum(t);
        band * p / (1.0 + p * p).sqrt()
    };
    let ts: Vec<f64> = (0..samples).map(|k| t0 + (t1 - t0) * k as f64 / (samples - 1) as f64).collect();
    let mut out: Vec<TrajectoryPoint> = ts.iter().map(|&t| TrajectoryPoint { t, x: 0.0, v: 0.0 }).collect();
    for (band, start) in [(-1.0, -1.0), (1.0, x_exit)] {
        let rhs = move |t: f64, _y: &[f64; 1]| [velocity(t, band)];
        let mut solver = Rk4::new(rhs, 0.0, [start], 0.05, 1e-9);
        let idx: Vec<usize> = if band < 0.0 {
            (0..samples).rev().filter(|&k| ts[k] < 0.0).collect()
        } else {
            (0..samples).filter(|&k| ts[k] >= 0.0).collect()
        };
        for k in idx {
            if !solver.advance_to(ts[k]) {
                return Err(Error::Invalid(format!("trajectory step underflow at t = {}", solver.t)));
            }
            out[k].x = solver.y[0];
            out[k].v = velocity(ts[k], band);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lc(r: f64, th: f64) -> Drive {
        Drive::lorentzian_cubed(r, th).unwrap()
    }

    #[test]
    fn static_limits_are_exact() {
        let d = Drive::none();
        assert_eq!(tunneling_time(&d).unwrap(), 1.0);
        assert_eq!(exit_point(&d).unwrap(), 1.0);
        let a = action_integral(&d, 20.0).unwrap();
        assert!((a.action - 10.0 * std::f64::consts::PI).abs() < 1e-8);
        assert_eq!(a.exit_energy, 0.0);
    }

    #[test]
    fn tunneling_time_regimes() {
        let short = tunneling_time(&lc(0.01, 0.5)).unwrap();
        assert!(short < 0.5 && short > 0.45, "{short}");
        let long = tunneling_time(&lc(0.01, 2.0)).unwrap();
        assert!((long - 1.0).abs() < 0.02 && long < 1.0, "{long}");
        let d = lc(0.01, 0.5);
        let i = d.drive_integral(short).unwrap();
        assert!((short + i - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exit_point_matches_midpoint_rule() {
        let d = lc(0.01, 0.5);
        let tau0 = tunneling_time(&d).unwrap();
        // Same integral in the s = sqrt(tau0 - tau) variable with a plain midpoint rule.
        let n = 1_000_000;
        let top = tau0.sqrt();
        let ds = top / n as f64;
        let i0 = d.drive_integral(tau0).unwrap();
        let mut acc = 0.0;
        let mut running = 0.0;
        let mut prev_tau = tau0;
        for k in 0..n {
            let s = (k as f64 + 0.5) * ds;
            let tau = tau0 - s * s;
            // I(tau0) - I(tau), accumulated with the trapezoid rule in tau.
            running += 0.5 * (d.h_imag(tau).unwrap() + d.h_imag(prev_tau).unwrap()) * (prev_tau - tau);
            prev_tau = tau;
            let p = tau + i0 - running;
            let h = d.h_imag(tau).unwrap();
            acc += 2.0 * s * p * h / (1.0 - p * p).sqrt() * ds;
        }
        let brute = 1.0 - 2.0 * acc;
        let x = exit_point(&d).unwrap();
        assert!(x < 1.0);
        assert!((x - brute).abs() < 1e-6, "{x} vs {brute}");
    }

    #[test]
    fn closed_form_values() {
        assert!((closed_form_action(0.5, 20.0) - 19.1322).abs() < 1e-4);
        assert!((closed_form_action(0.25, 20.0) - 9.894834).abs() < 1e-6);
        let below = closed_form_action(1.0 - 1e-15, 7.0);
        assert!((below - closed_form_action(1.0, 7.0)).abs() < 1e-6);
    }

    #[test]
    fn weak_pulse_approaches_closed_form() {
        let a = action_integral(&lc(1e-4, 0.5), 20.0).unwrap();
        assert!((a.action - 19.1322).abs() / 19.1322 < 0.02, "{}", a.action);
        assert!(a.action <= 10.0 * std::f64::consts::PI);
    }

    #[test]
    fn validity_flags() {
        let s20 = ZenerSystem::new(20.0).unwrap();
        let f = check_semiclassical(&s20, &lc(0.01, 1.0));
        assert_eq!((f.eq16a, f.eq18a, f.eq28), (true, true, false));
        let f = check_semiclassical(&ZenerSystem::new(1e4).unwrap(), &lc(0.01, 1.0));
        assert!(f.all());
        let f = check_semiclassical(&ZenerSystem::new(5.0).unwrap(), &Drive::none());
        assert_eq!((f.eq16a, f.eq18a, f.eq28), (false, true, true));
    }

    #[test]
    fn static_trajectory_is_hyperbola() {
        let pts = real_time_trajectory(&Drive::none(), (-3.0, 3.0), 61).unwrap();
        assert!((pts[0].x + 10f64.sqrt()).abs() < 1e-8);
        let zero = pts.iter().find(|p| p.t.abs() < 1e-12).unwrap();
        assert!((zero.x - 1.0).abs() < 1e-12);
        for p in &pts {
            let exact = if p.t < 0.0 { -(1.0 + p.t * p.t).sqrt() } else { (1.0 + p.t * p.t).sqrt() };
            assert!((p.x - exact).abs() < 1e-8, "{p:?}");
        }
        let left = real_time_trajectory(&Drive::none(), (-1.0, -1e-12), 11).unwrap();
        let last = left.last().unwrap();
        assert!((last.x + 1.0).abs() < 1e-9 && last.v.abs() < 1e-9);
    }

    #[test]
    fn weak_drive_perturbs_trajectory_slightly() {
        let r = 0.01;
        let pts = real_time_trajectory(&lc(r, 3.0), (-5.0, 5.0), 101).unwrap();
        let dev = pts
            .iter()
            .map(|p| (p.x - p.t.signum() * (1.0 + p.t * p.t).sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(dev > 0.0 && dev < 10.0 * r, "{dev}");
    }
}
