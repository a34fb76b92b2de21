//! A narrow well at x = 0 followed by a barrier, with WKB and imaginary-time
//! trajectory exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Drive;
use crate::ode::Rk4;
use crate::quad;

/// Barrier on x >= 0, decaying to zero at large x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Barrier1D {
    /// Plateau of `height` on [0, width]; a positive `edge` smooths the fall
    /// with a logistic of that length.
    Square { height: f64, width: f64, edge: f64 },
    /// height - m omega^2 (x - center)^2 / 2, clipped at zero.
    Parabolic { height: f64, omega: f64, center: f64 },
    GaussianBump { height: f64, center: f64, sigma: f64 },
    /// height (1 - x / width) on [0, width]: a barrier tilted by a uniform field.
    Triangular { height: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential1D {
    pub barrier: Barrier1D,
    pub well_depth: f64,
    pub well_width: f64,
    pub mass: f64,
    pub hbar: f64,
    /// Force per unit of the drive's amplitude ratio.
    #[serde(default = "one")]
    pub force_unit: f64,
}

fn one() -> f64 {
    1.0
}

impl Potential1D {
    pub fn new(barrier: Barrier1D, mass: f64, hbar: f64) -> Result<Self> {
        let p = Potential1D { barrier, well_depth: 1.0, well_width: 0.1, mass, hbar, force_unit: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        let shape_ok = match self.barrier {
            Barrier1D::Square { height, width, edge } => ok(height) && ok(width) && edge >= 0.0 && edge.is_finite(),
            Barrier1D::Parabolic { height, omega, center } => ok(height) && ok(omega) && center.is_finite(),
            Barrier1D::GaussianBump { height, center, sigma } => ok(height) && ok(sigma) && center.is_finite(),
            Barrier1D::Triangular { height, width } => ok(height) && ok(width),
        };
        if !(shape_ok && ok(self.mass) && ok(self.hbar) && self.well_width > 0.0 && self.well_depth >= 0.0) {
            return Err(Error::Invalid(format!("bad potential parameters: {self:?}")));
        }
        Ok(())
    }

    fn barrier_value(&self, x: f64) -> f64 {
        match self.barrier {
            Barrier1D::Square { height, width, edge } => {
                if edge == 0.0 {
                    if x <= width {
                        height
                    } else {
                        0.0
                    }
                } else {
                    height / (1.0 + ((x - width) / edge).exp())
                }
            }
            Barrier1D::Parabolic { height, omega, center } => {
                (height - 0.5 * self.mass * omega * omega * (x - center).powi(2)).max(0.0)
            }
            Barrier1D::GaussianBump { height, center, sigma } => height * (-0.5 * ((x - center) / sigma).powi(2)).exp(),
            Barrier1D::Triangular { height, width } => height * (1.0 - x / width).max(0.0),
        }
    }

    /// V(x): the well is flat at -well_depth on [-well_width, 0).
    pub fn value(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.barrier_value(x)
        } else if x >= -self.well_width {
            -self.well_depth
        } else {
            self.barrier_value(0.0)
        }
    }

    /// dV/dx on x >= 0.
    pub fn slope(&self, x: f64) -> f64 {
        match self.barrier {
            Barrier1D::Square { height, width, edge } => {
                if edge == 0.0 {
                    0.0
                } else {
                    let e = ((x - width) / edge).exp();
                    if !e.is_finite() {
                        return 0.0;
                    }
                    -height * e / (edge * (1.0 + e) * (1.0 + e))
                }
            }
            Barrier1D::Parabolic { height, omega, center } => {
                let k = self.mass * omega * omega;
                if height - 0.5 * k * (x - center).powi(2) > 0.0 {
                    -k * (x - center)
                } else {
                    0.0
                }
            }
            Barrier1D::GaussianBump { height, center, sigma } => {
                let s = (x - center) / sigma;
                -height * s / sigma * (-0.5 * s * s).exp()
            }
            Barrier1D::Triangular { height, width } => {
                if x < width {
                    -height / width
                } else {
                    0.0
                }
            }
        }
    }

    /// Level spacing of the lowest states of the well, divided by hbar.
    pub fn well_frequency(&self) -> f64 {
        1.5 * std::f64::consts::PI.powi(2) * self.hbar / (self.mass * self.well_width.powi(2))
    }

    /// Right end of the probe grid, beyond which the barrier is negligible.
    fn extent(&self) -> f64 {
        match self.barrier {
            Barrier1D::Square { width, edge, .. } => 2.0 * width + 60.0 * edge,
            Barrier1D::Parabolic { height, omega, center } => {
                center.max(0.0) + 1.5 * (2.0 * height / (self.mass * omega * omega)).sqrt()
            }
            Barrier1D::GaussianBump { center, sigma, .. } => center.max(0.0) + 12.0 * sigma,
            Barrier1D::Triangular { width, .. } => 1.5 * width,
        }
    }

    fn grid(&self) -> Vec<f64> {
        let n = 4000;
        let x_max = self.extent();
        (0..=n).map(|k| x_max * k as f64 / n as f64).collect()
    }

    /// Maximum of V over x >= 0.
    pub fn max_value(&self) -> f64 {
        let xs = self.grid();
        let (k, _) = xs.iter().map(|&x| self.value(x)).enumerate().fold((0, f64::NEG_INFINITY), |acc, (k, v)| {
            if v > acc.1 {
                (k, v)
            } else {
                acc
            }
        });
        let lo = if k == 0 { 0.0 } else { xs[k - 1] };
        let hi = xs[(k + 1).min(xs.len() - 1)];
        let (_, neg) = quad::golden_min(|x| -self.value(x), lo, hi, 1e-12 * (1.0 + hi));
        (-neg).max(self.value(xs[k]))
    }

    /// Turning points (x_in, x_T) bracketing the forbidden region next to the well.
    pub fn turning_points(&self, e: f64) -> Result<Option<(f64, f64)>> {
        if !(e > 0.0) {
            return Err(Error::Invalid(format!("energy {e} must be positive")));
        }
        let xs = self.grid();
        let tol = 1e-14 * xs[xs.len() - 1];
        let above = |x: f64| self.value(x) - e;
        let Some(k) = xs.iter().position(|&x| above(x) > 0.0) else {
            return Ok(None);
        };
        let x_in = if k == 0 { 0.0 } else { quad::bisect(above, xs[k - 1], xs[k], tol) };
        let j = xs[k..].iter().position(|&x| above(x) <= 0.0).map(|j| j + k).ok_or(Error::NoBarrier)?;
        let x_t = quad::bisect(above, xs[j - 1], xs[j], tol);
        Ok(Some((x_in, x_t)))
    }
}

/// (2/hbar) * integral of sqrt(2m(V - E)) between the turning points.
pub fn wkb_action(pot: &Potential1D, e: f64) -> Result<f64> {
    let Some((a, b)) = pot.turning_points(e)? else {
        let top = pot.max_value();
        if (e - top).abs() <= 1e-12 * top.abs().max(1.0) {
            return Ok(0.0);
        }
        return Err(Error::NoBarrier);
    };
    let half = 0.5 * (b - a);
    let integrand = |phi: f64| {
        let x = a + half * (1.0 - phi.cos());
        (2.0 * pot.mass * (pot.value(x) - e)).max(0.0).sqrt() * half * phi.sin()
    };
    Ok(2.0 / pot.hbar * quad::integrate(integrand, 0.0, std::f64::consts::PI, 1e-13, 0.0))
}

/// Imaginary-time path from the turning point to the well.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory1D {
    pub grid: Vec<f64>,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    /// Largest deviation of V(x) - (m/2) x'^2 from its starting value.
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instanton {
    pub trajectory: Trajectory1D,
    pub tau0: f64,
    pub x_start: f64,
    pub action: f64,
}

struct Shooter<'a> {
    pot: &'a Potential1D,
    drive: &'a Drive,
    e: f64,
    edge: f64,
}

impl Shooter<'_> {
    fn force(&self, tau: f64) -> f64 {
        self.pot.force_unit * self.drive.h_imag(tau).unwrap_or(f64::NAN)
    }

    fn solver(&self, x0: f64, h0: f64) -> Rk4<3, impl Fn(f64, &[f64; 3]) -> [f64; 3] + '_> {
        let m = self.pot.mass;
        let rhs = move |tau: f64, y: &[f64; 3]| {
            let f = self.force(tau);
            let (x, v) = (y[0], y[1]);
            [v, (self.pot.slope(x) - f) / m, 0.5 * m * v * v + self.pot.value(x) - x * f - self.e]
        };
        Rk4::new(rhs, 0.0, [x0, 0.0, 0.0], h0, 1e-12)
    }

    /// State at tau0 starting from rest at x0.
    fn shoot(&self, x0: f64, tau0: f64) -> Option<[f64; 3]> {
        if !(tau0 > 0.0 && tau0 < self.edge) {
            return None;
        }
        let mut s = self.solver(x0, tau0 / 100.0);
        // A path that dives into the well and comes back is not the instanton.
        let floor = -0.05 * x0.abs();
        while s.t != tau0 {
            if !s.step_toward(tau0) || s.y[0] < floor {
                return None;
            }
        }
        if s.y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(s.y)
    }

    fn residual(&self, x0: f64, tau0: f64, scale: (f64, f64)) -> Option<[f64; 2]> {
        let y = self.shoot(x0, tau0)?;
        let r1 = y[0] / scale.0;
        let r2 = (0.5 * self.pot.mass * y[1] * y[1] - self.pot.value(0.0) + self.e) / scale.1;
        Some([r1, r2])
    }
}

fn norm2(r: &[f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

/// Solves m x'' = V'(x) - force(i tau) with x'(0) = 0, x(tau0) = 0 and the
/// well energy condition at tau0, by two-parameter shooting over (x(0), tau0).
pub fn instanton_bvp(pot: &Potential1D, drive: &Drive, e: f64) -> Result<Instanton> {
    if let Barrier1D::Square { edge, .. } = pot.barrier {
        if edge == 0.0 {
            return Err(Error::Invalid("shooting needs a square barrier with a smooth edge".into()));
        }
    }
    let v0 = pot.value(0.0);
    if !(v0 > e) {
        return Err(Error::Invalid(format!("barrier at the well ({v0}) must exceed the energy {e}")));
    }
    let (_, x_t) = pot.turning_points(e)?.ok_or(Error::NoBarrier)?;
    let sh = Shooter { pot, drive, e, edge: drive.imag_domain_edge() };

    // Drive-free time to fall from x_T to 0, with x = x_T - s^2.
    let top = x_t.sqrt();
    let guess = quad::integrate(
        |s| {
            let x = x_t - s * s;
            let k = (2.0 * (pot.value(x) - e) / pot.mass).max(0.0).sqrt();
            let v = 2.0 * s / k;
            // Next to x_T, V - E is lost to rounding; use the linear limit.
            if v.is_finite() && s > 1e-6 * top {
                v
            } else {
                2.0 / (2.0 * -pot.slope(x_t) / pot.mass).sqrt()
            }
        },
        0.0,
        top,
        1e-12,
        0.0,
    );
    let tau_guess = if guess.is_finite() && guess > 0.0 { guess.min(0.999 * sh.edge) } else { 0.5 * sh.edge.min(1.0) };

    let scale = (x_t, v0 - e);
    let mut p = [x_t, tau_guess];
    let mut r = sh.residual(p[0], p[1], scale).ok_or(Error::ShootingDiverged { best_residual: f64::INFINITY })?;
    let mut best = norm2(&r);
    for _ in 0..200 {
        if best < 1e-11 {
            return finish(&sh, p[0], p[1]);
        }
        let dx = 1e-7 * x_t;
        let dt = 1e-7 * p[1];
        let rx = sh.residual(p[0] + dx, p[1], scale);
        let rt = sh.residual(p[0], p[1] + dt, scale);
        let (Some(rx), Some(rt)) = (rx, rt) else {
            return Err(Error::ShootingDiverged { best_residual: best });
        };
        let j = [[(rx[0] - r[0]) / dx, (rt[0] - r[0]) / dt], [(rx[1] - r[1]) / dx, (rt[1] - r[1]) / dt]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::ShootingDiverged { best_residual: best });
        }
        let step = [(j[1][1] * r[0] - j[0][1] * r[1]) / det, (-j[1][0] * r[0] + j[0][0] * r[1]) / det];
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [p[0] - lam * step[0], p[1] - lam * step[1]];
            if let Some(rt) = sh.residual(trial[0], trial[1], scale) {
                if norm2(&rt) < best {
                    p = trial;
                    r = rt;
                    best = norm2(&rt);
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if best < 1e-9 {
        return finish(&sh, p[0], p[1]);
    }
    Err(Error::ShootingDiverged { best_residual: best })
}

fn finish(sh: &Shooter, x0: f64, tau0: f64) -> Result<Instanton> {
    let n = 201;
    let pot = sh.pot;
    let mut s = sh.solver(x0, tau0 / 100.0);
    // The path ends on x = 0 up to rounding; the well starts just left of it.
    let invariant = |x: f64, v: f64| pot.value(x.max(0.0)) - 0.5 * pot.mass * v * v;
    let start = invariant(x0, 0.0);
    let mut traj = Trajectory1D { grid: Vec::with_capacity(n), positions: Vec::new(), velocities: Vec::new(), energy_residual: 0.0 };
    for k in 0..n {
        let tau = tau0 * k as f64 / (n - 1) as f64;
        if !s.advance_to(tau) {
            return Err(Error::ShootingDiverged { best_residual: f64::NAN });
        }
        traj.grid.push(tau);
        traj.positions.push(s.y[0]);
        traj.velocities.push(s.y[1]);
        traj.energy_residual = traj.energy_residual.max((invariant(s.y[0], s.y[1]) - start).abs());
    }
    Ok(Instanton { action: 2.0 / pot.hbar * s.y[2], trajectory: traj, tau0, x_start: x0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonAssist {
    /// Energy absorbed before tunneling.
    pub delta_e: f64,
    pub action: f64,
    pub static_action: f64,
}

/// Minimizes 2 theta dE / hbar + A0(E + dE) over the energy absorbed from a
/// pulse of duration theta.
pub fn photon_assist_extremum(pot: &Potential1D, e: f64, theta: f64) -> Result<PhotonAssist> {
    let a0 = wkb_action(pot, e)?;
    let top = pot.max_value();
    let room = top - e;
    let h = 1e-5 * room;
    let slope = (wkb_action(pot, e + h)? - wkb_action(pot, e - h)?) / (2.0 * h);
    if !(2.0 * theta < pot.hbar * slope.abs()) {
        return Err(Error::NoExtremum { action: a0 });
    }
    let mut failed = None;
    let objective = |d: f64| match wkb_action(pot, e + d) {
        Ok(a) => 2.0 * theta * d / pot.hbar + a,
        Err(err) => {
            failed.get_or_insert(err);
            f64::INFINITY
        }
    };
    let (d, a) = quad::golden_min(objective, 0.0, room * (1.0 - 1e-9), 1e-10 * room);
    if let Some(err) = failed {
        return Err(err);
    }
    Ok(PhotonAssist { delta_e: d, action: a, static_action: a0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola(center: f64) -> Potential1D {
        Potential1D::new(Barrier1D::Parabolic { height: 2.0, omega: 1.5, center }, 1.0, 1.0).unwrap()
    }

    #[test]
    fn square_barrier_closed_form() {
        let p = Potential1D::new(Barrier1D::Square { height: 3.0, width: 1.2, edge: 0.0 }, 2.0, 0.5).unwrap();
        let exact = 2.0 * 1.2 / 0.5 * (2.0f64 * 2.0 * (3.0 - 1.0)).sqrt();
        assert!((wkb_action(&p, 1.0).unwrap() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn parabolic_barrier_closed_form() {
        // Full symmetric barrier: 2 pi (V0 - E) / (hbar omega); from the peak: half of it.
        let e = 0.7;
        let full = 2.0 * std::f64::consts::PI * (2.0 - e) / 1.5;
        let a = wkb_action(&parabola(3.0), e).unwrap();
        assert!((a - full).abs() < 1e-9 * full, "{a} vs {full}");
        let a = wkb_action(&parabola(0.0), e).unwrap();
        assert!((a - 0.5 * full).abs() < 1e-9 * full);
    }

    #[test]
    fn top_of_barrier_and_no_barrier() {
        let p = parabola(3.0);
        assert_eq!(wkb_action(&p, 2.0).unwrap(), 0.0);
        assert_eq!(wkb_action(&p, 2.5), Err(Error::NoBarrier));
    }

    #[test]
    fn instanton_matches_wkb_without_drive() {
        let p = Potential1D::new(Barrier1D::GaussianBump { height: 2.0, center: 0.3, sigma: 0.8 }, 1.0, 1.0).unwrap();
        let e = 0.5;
        let inst = instanton_bvp(&p, &Drive::none(), e).unwrap();
        let w = wkb_action(&p, e).unwrap();
        assert!((inst.action - w).abs() < 1e-6 * w, "{} vs {w}", inst.action);
        assert!(inst.trajectory.energy_residual < 1e-6);
        assert!(inst.trajectory.positions.last().unwrap().abs() < 1e-9);
    }

    #[test]
    fn parabolic_instanton_is_hyperbolic_cosine() {
        // For V0 - k x^2 / 2 the solution from rest is x = x_T cos(omega tau).
        let p = parabola(0.0);
        let e = 0.7;
        let inst = instanton_bvp(&p, &Drive::none(), e).unwrap();
        let x_t = (2.0 * (2.0 - e)).sqrt() / 1.5;
        assert!((inst.x_start - x_t).abs() < 1e-9);
        for (tau, x) in inst.trajectory.grid.iter().zip(&inst.trajectory.positions) {
            assert!((x - x_t * (1.5 * tau).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn drive_lowers_the_exponent() {
        let p = Potential1D::new(Barrier1D::GaussianBump { height: 2.0, center: 0.3, sigma: 0.8 }, 1.0, 1.0).unwrap();
        let d = Drive::lorentzian_cubed(0.05, 5.0).unwrap();
        let driven = instanton_bvp(&p, &d, 0.5).unwrap();
        let free = instanton_bvp(&p, &Drive::none(), 0.5).unwrap();
        assert!(driven.action < free.action);
    }

    #[test]
    fn photon_assist_limits() {
        let p = Potential1D::new(Barrier1D::Triangular { height: 3.0, width: 1.2 }, 1.0, 1.0).unwrap();
        let long = photon_assist_extremum(&p, 1.0, 1e3);
        assert!(matches!(long, Err(Error::NoExtremum { .. })));
        let short = photon_assist_extremum(&p, 1.0, 1e-6).unwrap();
        assert!(short.delta_e > 1.99 && short.action < 0.01);
    }

    #[test]
    fn photon_assist_first_order_condition() {
        let p = Potential1D::new(Barrier1D::Triangular { height: 3.0, width: 1.2 }, 1.0, 1.0).unwrap();
        let theta = 0.5;
        let mid = photon_assist_extremum(&p, 1.0, theta).unwrap();
        assert!(mid.delta_e > 0.0 && mid.delta_e < 2.0 && mid.action < mid.static_action);
        let h = 1e-5;
        let e1 = 1.0 + mid.delta_e;
        let slope = (wkb_action(&p, e1 + h).unwrap() - wkb_action(&p, e1 - h).unwrap()) / (2.0 * h);
        assert!((2.0 * theta + slope).abs() < 1e-4, "{slope}");
    }

    #[test]
    fn square_barrier_assist_runs_to_the_top() {
        // A0 is concave in E here, so the stationary point is a maximum of A.
        let p = Potential1D::new(Barrier1D::Square { height: 3.0, width: 1.2, edge: 0.0 }, 1.0, 1.0).unwrap();
        let r = photon_assist_extremum(&p, 1.0, 0.5).unwrap();
        assert!((r.delta_e - 2.0).abs() < 1e-6);
        assert!((r.action - 2.0).abs() < 1e-3);
    }
}
