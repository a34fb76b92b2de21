//! Values of F_t(q) on the sheets reachable from the real axis.
//!
//! F is the integral of f along a contour ending at q. Two contour shapes are
//! used so that at least one of them is clear of the branch points at any q:
//! `Corner` runs along the real axis and then vertically, `Lifted` goes up at
//! the cutoff and then horizontally. G is the same integral stopped at the
//! point u_b where w = i, and 2G - F is the value after looping around u_b.

use num_complex::Complex64 as C64;

use super::integrand::Integrand;
use crate::error::{Error, Result};
use crate::fields::Drive;

/// Value and q-derivative.
pub type Jet = (C64, C64);

/// Index into the candidate list of [`Branches::candidate`].
pub type Kind = usize;

pub const CANDIDATES: Kind = 6;
/// Contour along the real axis: the sheet of the incident and reflected waves.
pub const DIRECT: Kind = 0;
/// Contour looping around u_b: the sheet of the transmitted wave.
pub const AROUND: Kind = 2;

pub struct Branches<'a> {
    ig: Integrand<'a>,
    seed: C64,
    pub ub: Option<C64>,
    fa: Option<Result<Jet>>,
    fb: Option<Result<Jet>>,
    ga: Option<Result<C64>>,
    gb: Option<Result<C64>>,
    gqa: Option<C64>,
    gqb: Option<C64>,
}

impl<'a> Branches<'a> {
    pub fn new(drive: &'a Drive, q: C64, t: f64, cutoff: f64, ub_seed: C64) -> Result<Self> {
        Ok(Branches {
            ig: Integrand::new(drive, q, t, cutoff)?,
            seed: ub_seed,
            ub: None,
            fa: None,
            fb: None,
            ga: None,
            gb: None,
            gqa: None,
            gqb: None,
        })
    }

    fn q(&self) -> C64 {
        self.ig.q
    }

    fn branch(&mut self) -> Result<C64> {
        if let Some(u) = self.ub {
            return Ok(u);
        }
        let u = self.ig.branch_point(self.seed, 1.0).ok_or(Error::BranchTracking { re: self.seed.re, im: self.seed.im })?;
        self.ub = Some(u);
        Ok(u)
    }

    fn f_corner(&mut self) -> Result<Jet> {
        if self.fa.is_none() {
            let q = self.q();
            let pts = [C64::new(q.re, 0.0), q];
            self.fa = Some(self.ig.path(&pts, false).map(|s| (s.f, s.dq + s.end)));
        }
        self.fa.clone().unwrap()
    }

    fn f_lifted(&mut self) -> Result<Jet> {
        if self.fb.is_none() {
            let q = self.q();
            let pts = [C64::new(-self.ig.cutoff, q.im), q];
            self.fb = Some(self.ig.path(&pts, false).map(|s| (s.f, s.dq + s.end)));
        }
        self.fb.clone().unwrap()
    }

    fn g_corner(&mut self) -> Result<Jet> {
        if self.ga.is_none() {
            let r = self.branch().and_then(|u| {
                let s = self.ig.path(&[C64::new(u.re, 0.0), u], true)?;
                self.gqa = Some(s.dq);
                Ok(s.f)
            });
            self.ga = Some(r);
        }
        let v = self.ga.clone().unwrap()?;
        Ok((v, self.gqa.unwrap()))
    }

    fn g_lifted(&mut self) -> Result<Jet> {
        if self.gb.is_none() {
            let r = self.branch().and_then(|u| {
                let s = self.ig.path(&[C64::new(-self.ig.cutoff, u.im), u], true)?;
                self.gqb = Some(s.dq);
                Ok(s.f)
            });
            self.gb = Some(r);
        }
        let v = self.gb.clone().unwrap()?;
        Ok((v, self.gqb.unwrap()))
    }

    /// Candidate `k`: 0 and 1 are the direct contours, 2..6 loop around u_b.
    pub fn candidate(&mut self, k: Kind) -> Result<Jet> {
        let reflect = |g: Jet, f: Jet| (2.0 * g.0 - f.0, 2.0 * g.1 - f.1);
        match k {
            0 => self.f_corner(),
            1 => self.f_lifted(),
            2 => Ok(reflect(self.g_corner()?, self.f_corner()?)),
            3 => Ok(reflect(self.g_lifted()?, self.f_lifted()?)),
            4 => Ok(reflect(self.g_corner()?, self.f_lifted()?)),
            5 => Ok(reflect(self.g_lifted()?, self.f_corner()?)),
            _ => Err(Error::Invalid(format!("no candidate {k}"))),
        }
    }
}
