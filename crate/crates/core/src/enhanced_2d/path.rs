//! Minimization of the Jacobi length (2/hbar) * integral of sqrt(2m(V - E0)) dl
//! over polylines between two end conditions.

use serde::Serialize;

use super::{Barrier2D, Point};
use crate::error::{Error, Result};
use crate::quad;

pub const NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum End {
    /// Slides on the level set V = E0.
    Slide,
    Pinned(Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PathOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { max_iter: 10_000, grad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathResult {
    pub nodes: Vec<Point>,
    pub action: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl PathResult {
    /// Angle in degrees between the end segment and the level-set normal at `end` (0 or last).
    pub fn end_angle(&self, b: &Barrier2D, last: bool) -> f64 {
        let n = self.nodes.len();
        let (p, q) = if last { (self.nodes[n - 1], self.nodes[n - 2]) } else { (self.nodes[0], self.nodes[1]) };
        let gv = b.gradient(p);
        let d = (q.0 - p.0, q.1 - p.1);
        let c = (gv.0 * d.0 + gv.1 * d.1).abs() / (gv.0.hypot(gv.1) * d.0.hypot(d.1));
        c.clamp(-1.0, 1.0).acos().to_degrees()
    }
}

struct Problem<'a> {
    b: &'a Barrier2D,
    start: End,
    end: End,
}

fn sub(p: Point, q: Point) -> Point {
    (p.0 - q.0, p.1 - q.1)
}

fn dot(p: Point, q: Point) -> f64 {
    p.0 * q.0 + p.1 * q.1
}

impl Problem<'_> {
    fn weight(&self, p: Point) -> f64 {
        (2.0 * self.b.mass * (self.b.potential(p.0, p.1) - self.b.total_energy())).max(0.0).sqrt()
    }

    fn excess(&self, p: Point) -> f64 {
        self.b.potential(p.0, p.1) - self.b.total_energy()
    }

    /// Integral of the weight along [p, q]; `zero_p` / `zero_q` mark ends on the level set.
    /// Parts of the segment inside an allowed region cost nothing.
    fn segment(&self, p: Point, q: Point, zero_p: bool, zero_q: bool) -> f64 {
        if !zero_p && !zero_q && (self.excess(p) < 0.0 || self.excess(q) < 0.0) {
            return self.split_segment(p, q);
        }
        let (x, w) = quad::gl16();
        let d = sub(q, p);
        let len = d.0.hypot(d.1);
        let at = |lam: f64| (p.0 + lam * d.0, p.1 + lam * d.1);
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            let s = 0.5 * (1.0 + xi);
            acc += 0.5 * wi
                * match (zero_p, zero_q) {
                    (true, false) => 2.0 * s * self.weight(at(s * s)),
                    (false, true) => 2.0 * s * self.weight(at(1.0 - s * s)),
                    (true, true) => {
                        let lam = 0.5 * (1.0 - (std::f64::consts::PI * s).cos());
                        0.5 * std::f64::consts::PI * (std::f64::consts::PI * s).sin() * self.weight(at(lam))
                    }
                    (false, false) => self.weight(at(s)),
                };
        }
        acc * len
    }

    /// Sums the forbidden pieces of a segment that enters an allowed region.
    fn split_segment(&self, p: Point, q: Point) -> f64 {
        const SAMPLES: usize = 32;
        let at = |lam: f64| (p.0 + lam * (q.0 - p.0), p.1 + lam * (q.1 - p.1));
        let mut cuts = vec![0.0];
        let mut prev = self.excess(p);
        for k in 1..=SAMPLES {
            let lam = k as f64 / SAMPLES as f64;
            let v = self.excess(at(lam));
            if (v < 0.0) != (prev < 0.0) {
                let lo = (k - 1) as f64 / SAMPLES as f64;
                cuts.push(quad::bisect(|l| self.excess(at(l)), lo, lam, 1e-15));
            }
            prev = v;
        }
        cuts.push(1.0);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] <= w[0] || self.excess(at(0.5 * (w[0] + w[1]))) < 0.0 {
                continue;
            }
            total += self.segment(at(w[0]), at(w[1]), w[0] > 0.0, w[1] < 1.0);
        }
        total
    }

    fn seg(&self, nodes: &[Point], k: usize) -> f64 {
        let n = nodes.len();
        let zp = k == 0 && self.start == End::Slide;
        let zq = k + 2 == n && self.end == End::Slide;
        self.segment(nodes[k], nodes[k + 1], zp, zq)
    }

    fn action(&self, nodes: &[Point]) -> f64 {
        2.0 / self.b.hbar * (0..nodes.len() - 1).map(|k| self.seg(nodes, k)).sum::<f64>()
    }

    /// Keeps nodes inside the window; x0 is the hard wall.
    fn clamp(&self, p: Point) -> Point {
        let w = &self.b.window;
        (p.0.clamp(self.b.x0, w.x_max), p.1.clamp(w.y_min, w.y_max))
    }

    /// Drops gradient components that would push a node out through the window.
    fn confine(&self, p: Point, g: Point) -> Point {
        let w = &self.b.window;
        let gx = if (p.0 <= self.b.x0 && g.0 > 0.0) || (p.0 >= w.x_max && g.0 < 0.0) { 0.0 } else { g.0 };
        let gy = if (p.1 <= w.y_min && g.1 > 0.0) || (p.1 >= w.y_max && g.1 < 0.0) { 0.0 } else { g.1 };
        (gx, gy)
    }

    /// Tangent of the level set at p.
    fn level_tangent(&self, p: Point) -> Point {
        let g = self.b.gradient(p);
        let n = g.0.hypot(g.1);
        (-g.1 / n, g.0 / n)
    }

    fn slide(&self, p: Point, t: f64) -> Point {
        let d = self.level_tangent(p);
        let q = (p.0 + t * d.0, p.1 + t * d.1);
        self.b.project_to_level(q).unwrap_or(q)
    }

    /// Gradient of the action: normal components at interior nodes, the
    /// level-set tangential component at sliding ends.
    fn gradient(&self, nodes: &[Point], scale: f64) -> Vec<Point> {
        let n = nodes.len();
        let h = 1e-6 * scale;
        let c = 2.0 / self.b.hbar;
        let mut g = vec![(0.0, 0.0); n];
        let mut work = nodes.to_vec();
        for k in 0..n {
            let local = |w: &[Point]| {
                let mut s = 0.0;
                if k > 0 {
                    s += self.seg(w, k - 1);
                }
                if k + 1 < n {
                    s += self.seg(w, k);
                }
                c * s
            };
            let fixed = (k == 0 && self.start != End::Slide) || (k + 1 == n && self.end != End::Slide);
            if fixed {
                continue;
            }
            if k == 0 || k + 1 == n {
                let t = self.level_tangent(nodes[k]);
                work[k] = self.slide(nodes[k], h);
                let fp = local(&work);
                work[k] = self.slide(nodes[k], -h);
                let fm = local(&work);
                work[k] = nodes[k];
                let dv = (fp - fm) / (2.0 * h);
                g[k] = (dv * t.0, dv * t.1);
                if self.confine(nodes[k], g[k]) != g[k] {
                    g[k] = (0.0, 0.0);
                }
                continue;
            }
            let mut comp = [0.0; 2];
            for (a, slot) in comp.iter_mut().enumerate() {
                let mut p = nodes[k];
                if a == 0 {
                    p.0 += h;
                } else {
                    p.1 += h;
                }
                work[k] = p;
                let fp = local(&work);
                let mut p = nodes[k];
                if a == 0 {
                    p.0 -= h;
                } else {
                    p.1 -= h;
                }
                work[k] = p;
                let fm = local(&work);
                *slot = (fp - fm) / (2.0 * h);
            }
            work[k] = nodes[k];
            let t = sub(nodes[k + 1], nodes[k - 1]);
            let tn = t.0.hypot(t.1);
            // Coincident neighbours (a path parked in an allowed region) have no tangent.
            let t = if tn > 0.0 { (t.0 / tn, t.1 / tn) } else { (0.0, 0.0) };
            let along = comp[0] * t.0 + comp[1] * t.1;
            let raw = (comp[0], comp[1]);
            g[k] = if self.confine(nodes[k], raw) != raw {
                // On the wall or window edge only the admissible part of the full gradient is kept.
                self.confine(nodes[k], raw)
            } else {
                (comp[0] - along * t.0, comp[1] - along * t.1)
            };
        }
        g
    }

    fn step(&self, nodes: &[Point], g: &[Point], alpha: f64) -> Vec<Point> {
        let n = nodes.len();
        (0..n)
            .map(|k| {
                if (k == 0 || k + 1 == n) && g[k] != (0.0, 0.0) {
                    let t = self.level_tangent(nodes[k]);
                    let q = self.slide(nodes[k], -alpha * dot(g[k], t));
                    if self.clamp(q) == q {
                        q
                    } else {
                        nodes[k]
                    }
                } else {
                    self.clamp((nodes[k].0 - alpha * g[k].0, nodes[k].1 - alpha * g[k].1))
                }
            })
            .collect()
    }
}

/// Equal arc-length spacing along the polyline.
pub(crate) fn redistribute(nodes: &[Point], n: usize) -> Vec<Point> {
    let mut cum = vec![0.0];
    for w in nodes.windows(2) {
        let d = sub(w[1], w[0]);
        cum.push(cum.last().unwrap() + d.0.hypot(d.1));
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let lam = if span > 0.0 { ((s - cum[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        let (p, q) = (nodes[seg], nodes[seg + 1]);
        out.push((p.0 + lam * (q.0 - p.0), p.1 + lam * (q.1 - p.1)));
    }
    out[0] = nodes[0];
    out[n - 1] = *nodes.last().unwrap();
    out
}

fn norm(g: &[Point]) -> f64 {
    g.iter().map(|p| p.0 * p.0 + p.1 * p.1).sum::<f64>().sqrt()
}

/// Projected gradient descent with Barzilai-Borwein steps and backtracking.
pub fn minimize(b: &Barrier2D, init: &[Point], start: End, end: End, opts: &PathOptions) -> Result<PathResult> {
    let pb = Problem { b, start, end };
    let mut nodes = redistribute(init, NODES);
    if let End::Pinned(p) = start {
        nodes[0] = p;
    }
    if let End::Pinned(p) = end {
        nodes[NODES - 1] = p;
    }
    for k in [0, NODES - 1] {
        let slide = if k == 0 { start == End::Slide } else { end == End::Slide };
        if slide {
            nodes[k] = b.project_to_level(nodes[k]).ok_or(Error::MinimizationStalled { grad_norm: f64::NAN })?;
        }
    }
    let d = sub(nodes[NODES - 1], nodes[0]);
    let scale = d.0.hypot(d.1).max(1e-3);
    let mut j = pb.action(&nodes);
    let mut g = pb.gradient(&nodes, scale);
    let mut gn = norm(&g);
    let mut alpha = 1e-3 * scale / gn.max(1e-300);
    for it in 0..opts.max_iter {
        if gn < opts.grad_tol {
            return Ok(PathResult { nodes, action: j, iterations: it, grad_norm: gn });
        }
        let mut accepted = None;
        let mut a = alpha;
        for _ in 0..60 {
            let trial = pb.step(&nodes, &g, a);
            let jt = pb.action(&trial);
            if jt < j {
                accepted = Some((trial, jt));
                break;
            }
            a *= 0.5;
        }
        let Some((mut trial, mut jt)) = accepted else {
            // No descent at any step size: the gradient is at its noise floor.
            if gn < 1e3 * opts.grad_tol {
                return Ok(PathResult { nodes, action: j, iterations: it, grad_norm: gn });
            }
            return Err(Error::MinimizationStalled { grad_norm: gn });
        };
        if it % 50 == 49 {
            let even = redistribute(&trial, NODES);
            let je = pb.action(&even);
            if je <= jt + 1e-12 * jt.abs() {
                trial = even;
                jt = je;
            }
        }
        let gt = pb.gradient(&trial, scale);
        let mut sy = 0.0;
        let mut ss = 0.0;
        for k in 0..NODES {
            let s = sub(trial[k], nodes[k]);
            let y = sub(gt[k], g[k]);
            sy += dot(s, y);
            ss += dot(s, s);
        }
        alpha = if sy > 0.0 { ss / sy } else { 2.0 * a };
        nodes = trial;
        j = jt;
        g = gt;
        gn = norm(&g);
    }
    Err(Error::MinimizationStalled { grad_norm: gn })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn redistribution_keeps_ends_and_equalizes_spacing() {
        let pts = vec![(0.0, 0.0), (0.1, 0.0), (1.0, 0.0), (1.0, 2.0)];
        let out = redistribute(&pts, 7);
        assert_eq!(out[0], pts[0]);
        assert_eq!(out[6], pts[3]);
        for w in out.windows(2) {
            let d = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            assert!((d - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn straight_segment_quadrature_matches_closed_form() {
        // Along y = 3 the weight is sqrt(2 (a^2 - (x - 1)^2)), whose integral between the
        // turning points is pi a^2 / sqrt(2).
        let b = Barrier2D { lambda: 0.0, ..Barrier2D::reference() };
        let pb = Problem { b: &b, start: End::Slide, end: End::Slide };
        let a2: f64 = b.vx.height - b.total_energy();
        let (l, r) = (1.0 - a2.sqrt(), 1.0 + a2.sqrt());
        let nodes: Vec<Point> = (0..NODES).map(|k| (l + (r - l) * k as f64 / (NODES - 1) as f64, 3.0)).collect();
        let exact = 2.0 * std::f64::consts::PI * a2 / 2f64.sqrt();
        assert!((pb.action(&nodes) - exact).abs() < 1e-10);
    }

    #[test]
    fn pinned_start_is_kept() {
        let b = Barrier2D::reference();
        let f = (0.0, -1.02);
        let init: Vec<Point> = (0..10).map(|k| (0.21 * k as f64, -1.02 - 0.01 * k as f64)).collect();
        let r = minimize(&b, &init, End::Pinned(f), End::Slide, &PathOptions::default()).unwrap();
        assert_eq!(r.nodes[0], f);
        assert!((b.potential(r.nodes[NODES - 1].0, r.nodes[NODES - 1].1) - b.total_energy()).abs() < 1e-10);
        assert!(r.end_angle(&b, true) < 1.0);
    }
}
