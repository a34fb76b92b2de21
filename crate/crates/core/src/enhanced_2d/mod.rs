//! Normal and enhanced tunneling exponents for a static two-dimensional
//! barrier V = Vx(x) + Vy(y) + lambda * Vint(x, y) on x >= x0.

mod path;
mod regions;

pub use path::{minimize, End, PathOptions, PathResult, NODES};
pub use regions::{equipotential_regions, equipotential_regions_with, Regions};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub type Point = (f64, f64);

/// Vx(x) = height - curvature * (x - center)^2 / 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticBarrier {
    pub height: f64,
    pub curvature: f64,
    pub center: f64,
}

/// Vy(y) = height - curvature * y^2 / 2 held above a floor by a softplus of
/// width `smoothing`; `floor_a` applies for y >= 0 (the side of region A) and
/// `floor_f` for y < 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBarrier {
    pub height: f64,
    pub curvature: f64,
    pub floor_a: f64,
    pub floor_f: f64,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

fn default_smoothing() -> f64 {
    0.005
}

impl AxisBarrier {
    fn floor(&self, y: f64) -> f64 {
        if y >= 0.0 {
            self.floor_a
        } else {
            self.floor_f
        }
    }

    fn value(&self, y: f64) -> f64 {
        let z = (self.height - 0.5 * self.curvature * y * y - self.floor(y)) / self.smoothing;
        let soft = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        self.floor(y) + self.smoothing * soft
    }

    fn slope(&self, y: f64) -> f64 {
        let z = (self.height - 0.5 * self.curvature * y * y - self.floor(y)) / self.smoothing;
        -self.curvature * y / (1.0 + (-z).exp())
    }
}

/// Gaussian bump centred at (x0 + offset_x, center_y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    pub offset_x: f64,
    pub center_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

/// Rectangle [x0, x_max] x [y_min, y_max] used for region extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn default_cells() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Barrier2D {
    /// Hard wall.
    pub x0: f64,
    pub vx: QuadraticBarrier,
    pub vy: AxisBarrier,
    pub vint: Interaction,
    pub lambda: f64,
    pub mass: f64,
    pub hbar: f64,
    /// Level E of the quantized motion across the wire.
    pub level: f64,
    /// Energy of the motion along the wire; E0 = level + epsilon.
    pub epsilon: f64,
    pub window: Window,
}

impl Barrier2D {
    /// The barrier used by the regression tests and the default configs.
    pub fn reference() -> Self {
        Barrier2D {
            x0: 0.0,
            vx: QuadraticBarrier { height: 2.2, curvature: 2.0, center: 1.0 },
            vy: AxisBarrier { height: 1.0, curvature: 1.0, floor_a: 0.0, floor_f: 0.4, smoothing: 0.005 },
            vint: Interaction { offset_x: 0.0, center_y: 0.0, sigma_x: 0.3, sigma_y: 0.5 },
            lambda: 0.2,
            mass: 1.0,
            hbar: 1.0,
            level: 1.0,
            epsilon: 0.5,
            window: Window { x_max: 3.0, y_min: -3.0, y_max: 3.0, cells: 200 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let ok = pos(self.vx.curvature)
            && pos(self.vy.curvature)
            && pos(self.vy.smoothing)
            && pos(self.vint.sigma_x)
            && pos(self.vint.sigma_y)
            && pos(self.mass)
            && pos(self.hbar)
            && pos(self.epsilon)
            && self.lambda.is_finite()
            && self.window.x_max > self.x0
            && self.window.y_max > self.window.y_min
            && self.window.cells >= 8;
        if !ok {
            return Err(Error::Invalid(format!("bad 2D barrier parameters: {self:?}")));
        }
        Ok(())
    }

    pub fn total_energy(&self) -> f64 {
        self.level + self.epsilon
    }

    pub fn vx(&self, x: f64) -> f64 {
        self.vx.height - 0.5 * self.vx.curvature * (x - self.vx.center).powi(2)
    }

    pub fn vy(&self, y: f64) -> f64 {
        self.vy.value(y)
    }

    pub fn vint(&self, x: f64, y: f64) -> f64 {
        let i = &self.vint;
        let sx = (x - self.x0 - i.offset_x) / i.sigma_x;
        let sy = (y - i.center_y) / i.sigma_y;
        (-0.5 * (sx * sx + sy * sy)).exp()
    }

    pub fn potential(&self, x: f64, y: f64) -> f64 {
        self.vx(x) + self.vy(y) + self.lambda * self.vint(x, y)
    }

    pub fn gradient(&self, p: Point) -> Point {
        let (x, y) = p;
        let dvy = self.vy.slope(y);
        let i = &self.vint;
        let e = self.lambda * self.vint(x, y);
        (
            -self.vx.curvature * (x - self.vx.center) - e * (x - self.x0 - i.offset_x) / (i.sigma_x * i.sigma_x),
            dvy - e * (y - i.center_y) / (i.sigma_y * i.sigma_y),
        )
    }

    /// Newton steps along the gradient onto V = E0.
    pub fn project_to_level(&self, p: Point) -> Option<Point> {
        let mut p = p;
        let e0 = self.total_energy();
        for _ in 0..50 {
            let r = self.potential(p.0, p.1) - e0;
            let g = self.gradient(p);
            let g2 = g.0 * g.0 + g.1 * g.1;
            if g2 == 0.0 || !g2.is_finite() {
                return None;
            }
            let step = (r * g.0 / g2, r * g.1 / g2);
            p = (p.0 - step.0, p.1 - step.1);
            if step.0.hypot(step.1) < 1e-14 * (1.0 + p.0.hypot(p.1)) {
                return Some(p);
            }
        }
        ((self.potential(p.0, p.1) - e0).abs() < 1e-10).then_some(p)
    }

    /// Potential along the wall minus epsilon, whose zeros bound the y-interval.
    fn wall_profile(&self, y: f64) -> f64 {
        self.vy(y) + self.lambda * self.vint(self.x0, y) - self.epsilon
    }
}

/// Roots y0 < y1 of the wall profile bounding the forbidden interval next to A,
/// and X = (1/hbar) * integral of sqrt(2m * profile) between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaPhase {
    pub y0: f64,
    pub y1: f64,
    pub x: f64,
    /// More than two roots were found in the window.
    pub ambiguous: bool,
}

pub fn sigma_phase(b: &Barrier2D) -> Result<SigmaPhase> {
    let n = 8000;
    let (lo, hi) = (b.window.y_min, b.window.y_max);
    let ys: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| b.wall_profile(y)).collect();
    let tol = 1e-14 * (hi - lo);
    let mut roots = Vec::new();
    for k in 0..n {
        if (vals[k] > 0.0) != (vals[k + 1] > 0.0) {
            roots.push((quad::bisect(|y| b.wall_profile(y), ys[k], ys[k + 1], tol), vals[k + 1] <= 0.0));
        }
    }
    if roots.is_empty() {
        // Coincident roots: epsilon sits exactly at the top of the profile.
        let (k, top) = vals.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, v)| if v > a.1 { (k, v) } else { a });
        let a = ys[k.saturating_sub(1)];
        let c = ys[(k + 1).min(n)];
        let (ym, neg) = quad::golden_min(|y| -b.wall_profile(y), a, c, 1e-12);
        if top.max(-neg).abs() <= 1e-9 * b.epsilon.max(1.0) {
            return Ok(SigmaPhase { y0: ym, y1: ym, x: 0.0, ambiguous: false });
        }
        return Err(Error::NoRoots);
    }
    let ambiguous = roots.len() > 2;
    // y1: the uppermost root, where the profile falls below epsilon going up.
    let (y1, falls) = *roots.last().unwrap();
    if !falls {
        return Err(Error::RootOrder { y0: y1, y1: hi });
    }
    if roots.len() < 2 {
        return Err(Error::NoRoots);
    }
    let (y0, _) = roots[roots.len() - 2];
    if y0 >= y1 {
        return Err(Error::RootOrder { y0, y1 });
    }
    let half = 0.5 * (y1 - y0);
    let integrand = |phi: f64| {
        let y = y0 + half * (1.0 - phi.cos());
        (2.0 * b.mass * b.wall_profile(y)).max(0.0).sqrt() * half * phi.sin()
    };
    let x = quad::integrate(integrand, 0.0, std::f64::consts::PI, 1e-13, 0.0) / b.hbar;
    Ok(SigmaPhase { y0, y1, x, ambiguous })
}

fn closest_pair(a: &[Vec<Point>], b: &[Vec<Point>]) -> Option<(Point, Point)> {
    let mut best: Option<(f64, Point, Point)> = None;
    for p in a.iter().flatten() {
        for q in b.iter().flatten() {
            let d = (p.0 - q.0).hypot(p.1 - q.1);
            if best.map_or(true, |(bd, _, _)| d < bd) {
                best = Some((d, *p, *q));
            }
        }
    }
    best.map(|(_, p, q)| (p, q))
}

fn closest_to(p: Point, b: &[Vec<Point>]) -> Option<Point> {
    b.iter()
        .flatten()
        .copied()
        .min_by(|u, v| (u.0 - p.0).hypot(u.1 - p.1).total_cmp(&(v.0 - p.0).hypot(v.1 - p.1)))
}

fn straight(p: Point, q: Point) -> Vec<Point> {
    (0..NODES)
        .map(|k| {
            let s = k as f64 / (NODES - 1) as f64;
            (p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1))
        })
        .collect()
}

/// Straight path with a random transverse bulge, for initialization studies.
pub fn perturbed(p: Point, q: Point, seed: u64, amplitude: f64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = (q.0 - p.0, q.1 - p.1);
    let len = d.0.hypot(d.1);
    let nrm = (-d.1 / len, d.0 / len);
    let c1: f64 = rng.gen_range(-1.0..1.0);
    let c2: f64 = rng.gen_range(-1.0..1.0);
    straight(p, q)
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let s = k as f64 / (NODES - 1) as f64;
            let bump = amplitude * len * (c1 * (std::f64::consts::PI * s).sin() + 0.5 * c2 * (2.0 * std::f64::consts::PI * s).sin());
            (r.0 + bump * nrm.0, r.1 + bump * nrm.1)
        })
        .collect()
}

/// Minimal Jacobi action from the boundary of A to the boundary of B.
pub fn normal_action(b: &Barrier2D) -> Result<PathResult> {
    normal_action_from(b, None, &PathOptions::default())
}

/// As [`normal_action`], optionally starting from a perturbed path drawn with `seed`.
pub fn normal_action_from(b: &Barrier2D, seed: Option<u64>, opts: &PathOptions) -> Result<PathResult> {
    b.validate()?;
    let reg = equipotential_regions(b)?;
    let (p, q) = closest_pair(&reg.a, &reg.b).ok_or(Error::Topology { found: reg.components })?;
    let init = match seed {
        Some(s) => perturbed(p, q, s, 0.1),
        None => straight(p, q),
    };
    minimize(b, &init, End::Slide, End::Slide, opts)
}

/// Minimal Jacobi action from the fixed point f to the boundary of B.
pub fn action_from_point(b: &Barrier2D, f: Point, opts: &PathOptions) -> Result<PathResult> {
    let reg = equipotential_regions(b)?;
    let q = closest_to(f, &reg.b).ok_or(Error::Topology { found: reg.components })?;
    minimize(b, &straight(f, q), End::Pinned(f), End::Slide, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnhancedResult {
    /// Normal exponent A0(A -> B).
    pub a0: f64,
    /// A0(f -> B).
    pub a0_fb: f64,
    /// X, with sigma = -iX.
    pub sigma_mag: f64,
    pub a1: f64,
    pub w: f64,
    pub f_point: Point,
    pub y1: f64,
    /// exp(-A1) small enough for the semiclassical estimate.
    pub valid: bool,
    pub normal_path: Vec<Point>,
    pub enhanced_path: Vec<Point>,
}

/// A1 = A0(f -> B) - 2X / hbar together with the normal exponent.
pub fn enhanced_action(b: &Barrier2D) -> Result<EnhancedResult> {
    b.validate()?;
    let opts = PathOptions::default();
    let normal = normal_action_from(b, None, &opts)?;
    let (sig, fb) = enhanced_part(b, &opts)?;
    let a1 = fb.action - 2.0 * sig.x / b.hbar;
    Ok(EnhancedResult {
        a0: normal.action,
        a0_fb: fb.action,
        sigma_mag: sig.x,
        a1,
        w: probability(normal.action, a1),
        f_point: (b.x0, sig.y0),
        y1: sig.y1,
        valid: (-a1).exp() <= 0.1,
        normal_path: normal.nodes,
        enhanced_path: fb.nodes,
    })
}

fn enhanced_part(b: &Barrier2D, opts: &PathOptions) -> Result<(SigmaPhase, PathResult)> {
    let sig = sigma_phase(b)?;
    let fb = action_from_point(b, (b.x0, sig.y0), opts)?;
    Ok((sig, fb))
}

/// A1 alone, skipping the normal path.
pub fn enhanced_exponent(b: &Barrier2D) -> Result<f64> {
    b.validate()?;
    let (sig, fb) = enhanced_part(b, &PathOptions::default())?;
    Ok(fb.action - 2.0 * sig.x / b.hbar)
}

/// W = max(exp(-A0), exp(-A1)), at most 1.
pub fn probability(a0: f64, a1: f64) -> f64 {
    (-a0).exp().max((-a1).exp()).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Lambda,
    Epsilon,
}

impl Barrier2D {
    pub fn with(&self, param: Parameter, value: f64) -> Barrier2D {
        let mut b = *self;
        match param {
            Parameter::Lambda => b.lambda = value,
            Parameter::Epsilon => b.epsilon = value,
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub value: f64,
    pub a1: f64,
    pub w: f64,
    /// Always false: the estimate is only indicative once exp(-A1) ~ 1.
    pub valid: bool,
}

/// Bisection on A1(param) over [lo, hi] down to |A1| < 1e-6.
pub fn resonance_search(b: &Barrier2D, param: Parameter, lo: f64, hi: f64) -> Result<Resonance> {
    let f = |v: f64| enhanced_exponent(&b.with(param, v));
    let (mut a, mut c) = (lo.min(hi), lo.max(hi));
    let (mut fa, fc) = (f(a)?, f(c)?);
    if fa == 0.0 || fc == 0.0 {
        let v = if fa == 0.0 { a } else { c };
        return Ok(Resonance { value: v, a1: 0.0, w: 1.0, valid: false });
    }
    if (fa > 0.0) == (fc > 0.0) {
        return Err(Error::NoSignChange { lo: a, hi: c });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + c);
        let fm = f(m)?;
        if fm.abs() < 1e-6 || m == a || m == c {
            return Ok(Resonance { value: m, a1: fm, w: probability(f64::INFINITY, fm), valid: false });
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            c = m;
        }
    }
    let m = 0.5 * (a + c);
    let fm = f(m)?;
    Ok(Resonance { value: m, a1: fm, w: probability(f64::INFINITY, fm), valid: false })
}

/// Draws `count` parameter values uniformly on [lo, hi] with `seed`.
pub fn sample_parameters(lo: f64, hi: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(lo..=hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical_1d::{wkb_action, Barrier1D, Potential1D};

    fn separable() -> Barrier2D {
        Barrier2D { lambda: 0.0, ..Barrier2D::reference() }
    }

    #[test]
    fn sigma_matches_inverted_oscillator_integral() {
        let b = separable();
        let s = sigma_phase(&b).unwrap();
        // c = height - epsilon; X = pi c sqrt(m / k) / hbar.
        let c = b.vy.height - b.epsilon;
        let exact = std::f64::consts::PI * c * (b.mass / b.vy.curvature).sqrt() / b.hbar;
        assert!((s.x - exact).abs() < 1e-8 * exact, "{} vs {exact}", s.x);
        assert!((s.y0 + 1.0).abs() < 1e-8 && (s.y1 - 1.0).abs() < 1e-8);
        assert!(!s.ambiguous);
    }

    #[test]
    fn sigma_vanishes_at_coincident_roots() {
        let b = Barrier2D { epsilon: 1.0, ..separable() };
        let s = sigma_phase(&b).unwrap();
        assert_eq!(s.x, 0.0);
        assert!(s.y0.abs() < 1e-6);
    }

    #[test]
    fn sigma_doubles_when_potential_scaled_by_four() {
        let b = Barrier2D::reference();
        let mut q = b;
        q.vy.height *= 4.0;
        q.vy.curvature *= 4.0;
        q.vy.floor_a *= 4.0;
        q.vy.floor_f *= 4.0;
        q.vy.smoothing *= 4.0;
        q.lambda *= 4.0;
        q.epsilon *= 4.0;
        let (s, t) = (sigma_phase(&b).unwrap(), sigma_phase(&q).unwrap());
        assert!((t.y0 - s.y0).abs() < 1e-12 && (t.y1 - s.y1).abs() < 1e-12);
        assert!((t.x - 2.0 * s.x).abs() < 1e-10 * s.x);
    }

    #[test]
    fn sigma_without_roots_fails() {
        let b = Barrier2D { epsilon: 1.5, ..separable() };
        assert_eq!(sigma_phase(&b), Err(Error::NoRoots));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = Barrier2D::reference();
        for p in [(0.3, -0.7), (1.1, 0.4), (2.0, -1.3), (0.05, 1.9)] {
            let g = b.gradient(p);
            let h = 1e-6;
            let gx = (b.potential(p.0 + h, p.1) - b.potential(p.0 - h, p.1)) / (2.0 * h);
            let gy = (b.potential(p.0, p.1 + h) - b.potential(p.0, p.1 - h)) / (2.0 * h);
            assert!((g.0 - gx).abs() < 1e-7 && (g.1 - gy).abs() < 1e-7, "{p:?}");
        }
    }

    #[test]
    fn separable_normal_action_is_the_1d_exponent() {
        let b = separable();
        let r = normal_action(&b).unwrap();
        let pot = Potential1D::new(
            Barrier1D::Parabolic { height: b.vx.height, omega: (b.vx.curvature / b.mass).sqrt(), center: b.vx.center },
            b.mass,
            b.hbar,
        )
        .unwrap();
        let oracle = wkb_action(&pot, b.total_energy()).unwrap();
        assert!((r.action - oracle).abs() < 1e-4 * oracle, "{} vs {oracle}", r.action);
        assert!(r.end_angle(&b, false) < 1.0 && r.end_angle(&b, true) < 1.0);
    }

    #[test]
    fn enhanced_channel_without_coupling_does_not_win_at_the_well_bottom() {
        let b = Barrier2D { epsilon: 1.0, ..separable() };
        let r = enhanced_action(&b).unwrap();
        assert_eq!(r.sigma_mag, 0.0);
        assert_eq!(r.a1, r.a0_fb);
        assert!(r.a1 >= r.a0);
    }

    #[test]
    fn enhanced_result_invariants() {
        let r = enhanced_action(&Barrier2D::reference()).unwrap();
        assert!(r.sigma_mag > 0.0 && r.a1 < r.a0_fb);
        assert!(r.w > 0.0 && r.w <= 1.0);
        assert_eq!(r.valid, (-r.a1).exp() <= 0.1);
        assert_eq!(r.f_point.0, 0.0);
    }

    #[test]
    fn probability_clamps_at_one() {
        assert_eq!(probability(5.0, 0.0), 1.0);
        assert_eq!(probability(5.0, -1.0), 1.0);
        assert!((probability(2.0, 3.0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn resonance_without_sign_change_fails() {
        let b = Barrier2D::reference();
        assert!(matches!(resonance_search(&b, Parameter::Lambda, 0.0, 0.3), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn sampled_parameters_are_reproducible() {
        assert_eq!(sample_parameters(0.0, 1.0, 5, 7), sample_parameters(0.0, 1.0, 5, 7));
        assert!(sample_parameters(0.2, 0.4, 50, 1).iter().all(|v| (0.2..=0.4).contains(v)));
    }
}
