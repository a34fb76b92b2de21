//! Saddles of the q-integrand and steepest-descent integration through them.

use num_complex::Complex64 as C64;

use super::sheets::{Branches, Jet, Kind, CANDIDATES};
use super::{branch_seed, ExactOptions};
use crate::error::{Error, Result};
use crate::fields::Drive;
use crate::quad;
use crate::semiclassical_1d;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// The exponent E(q) = i (g/2) [q x - F_t(q)] at fixed (x, t).
pub(crate) struct Phase<'a> {
    drive: &'a Drive,
    g: f64,
    x: f64,
    t: f64,
    cutoff: f64,
    tau0: f64,
    opts: ExactOptions,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub q: C64,
    pub jet: Jet,
    pub kind: Kind,
    pub ub: Option<C64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Saddle {
    pub q: C64,
    pub node: Node,
    /// F''(q) at the saddle.
    pub curvature: C64,
}

impl<'a> Phase<'a> {
    pub fn new(drive: &'a Drive, g: f64, x: f64, t: f64, cutoff: f64, opts: ExactOptions) -> Result<Self> {
        let tau0 = semiclassical_1d::tunneling_time(drive)?;
        Ok(Phase { drive, g, x, t, cutoff, tau0, opts })
    }

    fn branches(&self, q: C64, ub: Option<C64>) -> Result<Branches<'a>> {
        let seed = ub.unwrap_or_else(|| branch_seed(self.drive, self.tau0, q, self.t));
        Branches::new(self.drive, q, self.t, self.cutoff, seed)
    }

    fn node(&self, q: C64, kind: Kind, ub: Option<C64>) -> Result<Node> {
        let mut b = self.branches(q, ub)?;
        let jet = b.candidate(kind)?;
        Ok(Node { q, jet, kind, ub: b.ub.or(ub) })
    }

    fn exponent(&self, n: &Node) -> (C64, C64) {
        let k = I * (0.5 * self.g);
        (k * (n.q * self.x - n.jet.0), k * (self.x - n.jet.1))
    }

    /// Newton iteration on x = F'(q) on sheet `kind`.
    pub fn saddle(&self, seed: C64, kind: Kind, ub: Option<C64>) -> Result<Saddle> {
        let fail = Error::SaddleNotFound { x: self.x, t: self.t };
        let mut q = seed;
        let mut ub = ub;
        for _ in 0..50 {
            let n = self.node(q, kind, ub).map_err(|_| fail.clone())?;
            ub = n.ub;
            let h = 1e-5 * (1.0 + q.norm());
            let p = self.node(q + h, kind, ub).map_err(|_| fail.clone())?;
            let m = self.node(q - h, kind, ub).map_err(|_| fail.clone())?;
            let curv = (p.jet.1 - m.jet.1) / (2.0 * h);
            let r = self.x - n.jet.1;
            if r.norm() < 1e-12 * (1.0 + self.x.abs()) {
                return Ok(Saddle { q, node: n, curvature: curv });
            }
            if curv.norm() == 0.0 || !curv.norm().is_finite() {
                return Err(fail);
            }
            let mut dq = r / curv;
            if dq.norm() > 0.5 {
                dq *= 0.5 / dq.norm();
            }
            q += dq;
            if dq.norm() < 1e-13 * (1.0 + q.norm()) {
                let n = self.node(q, kind, ub).map_err(|_| fail.clone())?;
                return Ok(Saddle { q, node: n, curvature: curv });
            }
        }
        Err(fail)
    }

    /// Next node along the path, choosing the sheet continuous with `prev`.
    fn advance(&self, prev: &Node, q: C64) -> Result<Option<Node>> {
        let tol = self.opts.step_tol / (0.5 * self.g);
        let dq = q - prev.q;
        let mismatch = |jet: &Jet| (jet.0 - (prev.jet.0 + 0.5 * (prev.jet.1 + jet.1) * dq)).norm();
        let mut b = self.branches(q, prev.ub)?;
        if let Ok(jet) = b.candidate(prev.kind) {
            if mismatch(&jet) <= tol {
                return Ok(Some(Node { q, jet, kind: prev.kind, ub: b.ub.or(prev.ub) }));
            }
        }
        let mut scored: Vec<(f64, Kind, Jet)> = (0..CANDIDATES)
            .filter_map(|k| b.candidate(k).ok().map(|jet| (mismatch(&jet), k, jet)))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        match scored.as_slice() {
            [best, rest @ ..] if best.0 <= tol && rest.iter().all(|r| r.0 > 10.0 * best.0 || (r.2 .0 - best.2 .0).norm() < 1e-12) => {
                Ok(Some(Node { q, jet: best.2, kind: best.1, ub: b.ub.or(prev.ub) }))
            }
            _ => Ok(None),
        }
    }

    /// Integral of exp(E - E(saddle)) along the two descent paths, and E(saddle).
    pub fn steepest_descent(&self, s: &Saddle) -> Result<(C64, f64)> {
        let (e0, _) = self.exponent(&s.node);
        let e2 = -I * (0.5 * self.g) * s.curvature;
        let mut dir0 = C64::from_polar(1.0, 0.5 * (std::f64::consts::PI - e2.arg()));
        if dir0.re < 0.0 || (dir0.re == 0.0 && dir0.im < 0.0) {
            dir0 = -dir0;
        }
        let h0 = (0.3 / e2.norm().sqrt()).min(self.opts.max_step);
        let mut total = C64::new(0.0, 0.0);
        for sgn in [1.0, -1.0] {
            let mut node = s.node;
            let (mut e, mut de) = (e0, C64::new(0.0, 0.0));
            let mut dir = dir0 * sgn;
            let mut h = h0;
            let mut acc = C64::new(0.0, 0.0);
            let mut steps = 0usize;
            loop {
                let next = self.advance(&node, node.q + dir * h)?;
                let Some(next) = next else {
                    h *= 0.5;
                    if h < 1e-9 {
                        // The rest of the path lies below exp(-2 depth / 3).
                        if e0.re - e.re > 2.0 * self.opts.depth / 3.0 {
                            break;
                        }
                        return Err(Error::BranchTracking { re: node.q.re, im: node.q.im });
                    }
                    continue;
                };
                let (e1, de1) = self.exponent(&next);
                acc += segment(node.q, e, de, next.q, e1, de1, e0.re);
                node = next;
                e = e1;
                de = de1;
                steps += 1;
                if e.re < e0.re - self.opts.depth || node.q.norm() > 60.0 {
                    break;
                }
                if steps > 50_000 {
                    return Err(Error::BranchTracking { re: node.q.re, im: node.q.im });
                }
                if de.norm() > 0.0 {
                    dir = -de.conj() / de.norm();
                }
                h = (h * 1.5).min(self.opts.max_step);
            }
            total += sgn * acc;
        }
        Ok((total, e0.re))
    }
}

/// Integral of exp(E - shift) over a segment with Hermite-cubic E.
fn segment(qa: C64, ea: C64, da: C64, qb: C64, eb: C64, db: C64, shift: f64) -> C64 {
    let (x, w) = quad::gl8();
    let dq = qb - qa;
    let mut acc = C64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(w) {
        let s = 0.5 * (1.0 + xi);
        let s2 = s * s;
        let s3 = s2 * s;
        let e = (2.0 * s3 - 3.0 * s2 + 1.0) * ea
            + (s3 - 2.0 * s2 + s) * dq * da
            + (-2.0 * s3 + 3.0 * s2) * eb
            + (s3 - s2) * dq * db;
        acc += 0.5 * wi * (e - shift).exp();
    }
    acc * dq
}
