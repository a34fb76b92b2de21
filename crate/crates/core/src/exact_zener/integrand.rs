//! The u-integrand f_t(u, q) and its contour integrals.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fields::{Drive, Shape};
use crate::quad;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const FAR: f64 = -6.0;
/// Panels allowed per path; a pole of the drive on the contour never converges.
const MAX_PANELS: usize = 200_000;

/// sqrt(1 + w^2) on the sheet that equals -sqrt(1 + w^2) on the real axis,
/// with cuts running from +-i to the right.
pub fn lower_band_root(w: C64) -> C64 {
    -((I - w).sqrt() * (-I - w).sqrt())
}

/// One leg of a u-contour, parametrised by lambda in [0, 1].
#[derive(Debug, Clone, Copy)]
pub(crate) enum Leg {
    Line(C64, C64),
    /// Straight leg whose far end is a square-root zero of f.
    ToBranch(C64, C64),
}

impl Leg {
    fn at(&self, lam: f64) -> (C64, C64) {
        match *self {
            Leg::Line(a, b) => (a + (b - a) * lam, b - a),
            Leg::ToBranch(a, b) => {
                let s = 1.0 - lam;
                (b + (a - b) * s * s, -2.0 * (a - b) * s)
            }
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Leg::Line(a, b) | Leg::ToBranch(a, b) => (b - a).norm(),
        }
    }

    fn far_left(&self) -> bool {
        match *self {
            Leg::Line(a, b) | Leg::ToBranch(a, b) => a.re.max(b.re) <= FAR,
        }
    }
}

/// Integral of f and of df/dq along a contour, plus f at its end.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PathSums {
    pub f: C64,
    pub dq: C64,
    pub end: C64,
    panels: usize,
}

#[derive(Debug)]
struct Refine(C64);

#[derive(Debug, Clone, Copy)]
struct Panel {
    f: C64,
    dq: C64,
    end: C64,
}

/// f_t(u, q) for fixed (q, t) and drive.
#[derive(Debug, Clone, Copy)]
pub struct Integrand<'a> {
    pub drive: &'a Drive,
    pub q: C64,
    pub t: f64,
    pub cutoff: f64,
    h_t: C64,
    tail_shift: f64,
}

impl<'a> Integrand<'a> {
    pub fn new(drive: &'a Drive, q: C64, t: f64, cutoff: f64) -> Result<Self> {
        let m = drive
            .half_line_integral()
            .ok_or_else(|| Error::Invalid("exact solution needs a decaying drive".into()))?;
        let h_t = drive.antiderivative(C64::new(t, 0.0));
        Ok(Integrand { drive, q, t, cutoff, h_t, tail_shift: m + h_t.re })
    }

    /// w = u + H(u - q + t) - H(t).
    pub fn w(&self, u: C64) -> C64 {
        u + self.drive.antiderivative(u - self.q + self.t) - self.h_t
    }

    pub fn dw_du(&self, u: C64) -> C64 {
        1.0 + self.drive.h_complex(u - self.q + self.t)
    }

    /// Point where w = +i (s = 1) or w = -i (s = -1), by Newton from `seed`.
    pub fn branch_point(&self, seed: C64, s: f64) -> Option<C64> {
        let target = C64::new(0.0, s);
        let mut u = seed;
        for _ in 0..60 {
            let r = self.w(u) - target;
            let d = self.dw_du(u);
            if !d.norm().is_finite() || d.norm() < 1e-14 {
                return None;
            }
            let mut step = r / d;
            if step.norm() > 0.5 {
                step *= 0.5 / step.norm();
            }
            u -= step;
            if step.norm() < 1e-14 * (1.0 + u.norm()) {
                return Some(u);
            }
        }
        if (self.w(u) - target).norm() < 1e-11 {
            Some(u)
        } else {
            None
        }
    }

    fn crosses_primitive_cut(&self, z0: C64, z1: C64) -> bool {
        if self.drive.shape != Shape::LorentzianCubed || self.drive.amplitude_ratio == 0.0 {
            return false;
        }
        let th = self.drive.width;
        (z0.re <= 0.0) != (z1.re <= 0.0) && 0.5 * (z0.im + z1.im).abs() > th
    }

    fn panel(&self, leg: &Leg, l0: f64, l1: f64, start: C64) -> std::result::Result<Panel, Refine> {
        let (x, wt) = quad::gl16();
        let half = 0.5 * (l1 - l0);
        let mut prev = start;
        let mut z_prev = leg.at(l0).0 - self.q + self.t;
        let mut acc_f = C64::new(0.0, 0.0);
        let mut acc_q = C64::new(0.0, 0.0);
        let singular_end = matches!(leg, Leg::ToBranch(..)) && l1 >= 1.0;
        let n = x.len();
        for j in 0..=n {
            let lam = if j < n { l0 + half * (1.0 + x[j]) } else { l1 };
            if j == n && singular_end {
                break;
            }
            let (u, du) = leg.at(lam);
            let z = u - self.q + self.t;
            if self.crosses_primitive_cut(z_prev, z) {
                return Err(Refine(u));
            }
            z_prev = z;
            let w = self.w(u);
            let mut f = (1.0 + w * w).sqrt();
            if (f - prev).norm() > (f + prev).norm() {
                f = -f;
            }
            let ratio = f / prev;
            if prev.norm() > 0.0 && !(ratio.re > 0.0 && ratio.im.abs() <= ratio.re) {
                return Err(Refine(u));
            }
            prev = f;
            if j < n {
                let dfq = -(w / f) * self.drive.h_complex(z);
                acc_f += wt[j] * half * f * du;
                acc_q += wt[j] * half * dfq * du;
            }
        }
        Ok(Panel { f: acc_f, dq: acc_q, end: prev })
    }

    fn adaptive(&self, leg: &Leg, l0: f64, l1: f64, start: C64, depth: u32, out: &mut PathSums) -> Result<C64> {
        out.panels += 3;
        if out.panels > MAX_PANELS {
            let u = leg.at(l0).0;
            return Err(Error::BranchTracking { re: u.re, im: u.im });
        }
        let whole = self.panel(leg, l0, l1, start);
        let lm = 0.5 * (l0 + l1);
        let left = self.panel(leg, l0, lm, start);
        let right = match &left {
            Ok(p) => self.panel(leg, lm, l1, p.end),
            Err(e) => Err(Refine(e.0)),
        };
        if let (Ok(w), Ok(a), Ok(b)) = (&whole, &left, &right) {
            let sf = a.f + b.f;
            let sq = a.dq + b.dq;
            let tol = 1e-10 * (1.0 + sf.norm()) + 1e-10 * (l1 - l0) * leg.length();
            let tolq = 1e-10 * (1.0 + sq.norm()) + 1e-10 * (l1 - l0) * leg.length();
            let ends_agree = (w.end - b.end).norm() <= 1e-8 * (1.0 + b.end.norm()) || matches!(leg, Leg::ToBranch(..)) && l1 >= 1.0;
            if ((w.f - sf).norm() <= tol && (w.dq - sq).norm() <= tolq && ends_agree) || depth > 48 {
                if depth > 48 && (w.f - sf).norm() > 1e3 * tol {
                    let u = leg.at(lm).0;
                    return Err(Error::BranchTracking { re: u.re, im: u.im });
                }
                out.f += sf;
                out.dq += sq;
                return Ok(b.end);
            }
        }
        if depth > 48 {
            let u = match (whole, left) {
                (Err(e), _) | (_, Err(e)) => e.0,
                _ => leg.at(lm).0,
            };
            return Err(Error::BranchTracking { re: u.re, im: u.im });
        }
        let mid = self.adaptive(leg, l0, lm, start, depth + 1, out)?;
        self.adaptive(leg, lm, l1, mid, depth + 1, out)
    }

    /// Contribution of (-inf, -cutoff] after removing the q-independent divergence.
    fn tail(&self) -> (C64, C64) {
        let (x, wt) = quad::gl16();
        let mut tf = C64::new(0.0, 0.0);
        let mut tq = C64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(wt) {
            let s = 0.5 * (1.0 + xi);
            let u = C64::new(-self.cutoff / s, 0.0);
            let jac = 0.5 * wi * self.cutoff / (s * s);
            let w = self.w(u);
            let f = lower_band_root(w);
            let f0 = lower_band_root(u - self.tail_shift);
            tf += jac * (f - f0);
            tq += jac * (-(w / f) * self.drive.h_complex(u - self.q + self.t));
        }
        (tf, tq)
    }

    /// Integrates along the polyline -cutoff -> pts[0] -> ... -> pts[n-1].
    /// With `to_branch`, the last point must be a square-root zero of f.
    pub(crate) fn path(&self, pts: &[C64], to_branch: bool) -> Result<PathSums> {
        let start = C64::new(-self.cutoff, 0.0);
        let mut sums = PathSums::default();
        let (tf, tq) = self.tail();
        sums.f = tf;
        sums.dq = tq;
        let mut f = lower_band_root(self.w(start));
        let mut a = start;
        for (k, &b) in pts.iter().enumerate() {
            if (b - a).norm() == 0.0 {
                continue;
            }
            let last = to_branch && k + 1 == pts.len();
            // Far to the left f is nearly linear in u, so the leg is split there.
            let mut pieces = vec![(a, b)];
            if !last && (a.re - FAR) * (b.re - FAR) < 0.0 {
                let c = a + (b - a) * ((FAR - a.re) / (b.re - a.re));
                pieces = vec![(a, c), (c, b)];
            }
            for (pa, pb) in pieces {
                let leg = if last { Leg::ToBranch(pa, pb) } else { Leg::Line(pa, pb) };
                let hmax = if leg.far_left() { 8.0 } else { 0.5 };
                let n = (leg.length() / hmax).ceil().max(1.0) as usize;
                for p in 0..n {
                    f = self.adaptive(&leg, p as f64 / n as f64, (p + 1) as f64 / n as f64, f, 0, &mut sums)?;
                }
            }
            a = b;
        }
        sums.end = if to_branch { C64::new(0.0, 0.0) } else { f };
        Ok(sums)
    }

    /// Tracked value of f at the end of the polyline.
    pub fn value_at_end(&self, pts: &[C64]) -> Result<C64> {
        Ok(self.path(pts, false)?.end)
    }
}
