//! Classically allowed regions {V < E0} and their boundaries.

use std::collections::HashMap;

use serde::Serialize;

use super::{Barrier2D, Point};
use crate::error::{Error, Result};

/// Boundary polylines of the two allowed regions joined by tunneling.
#[derive(Debug, Clone, Serialize)]
pub struct Regions {
    /// Region next to the wall on the side the particle comes from.
    pub a: Vec<Vec<Point>>,
    /// Region reaching the far edge of the window.
    pub b: Vec<Vec<Point>>,
    /// Number of allowed components found in the window.
    pub components: usize,
}

struct Grid {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    v: Vec<f64>,
}

impl Grid {
    fn new(b: &Barrier2D, cells: usize) -> Self {
        let w = &b.window;
        let (nx, ny) = (cells + 1, cells + 1);
        let dx = (w.x_max - b.x0) / cells as f64;
        let dy = (w.y_max - w.y_min) / cells as f64;
        let mut v = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                v.push(b.potential(b.x0 + i as f64 * dx, w.y_min + j as f64 * dy) - b.total_energy());
            }
        }
        Grid { nx, ny, x0: b.x0, y0: w.y_min, dx, dy, v }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.nx + i]
    }

    fn point(&self, i: usize, j: usize) -> Point {
        (self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy)
    }

    /// Allowed components by 4-connected flood fill; `usize::MAX` marks forbidden nodes.
    fn label(&self) -> (Vec<usize>, usize) {
        let mut lab = vec![usize::MAX; self.v.len()];
        let mut count = 0;
        for start in 0..self.v.len() {
            if self.v[start] >= 0.0 || lab[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            lab[start] = count;
            while let Some(k) = stack.pop() {
                let (i, j) = (k % self.nx, k / self.nx);
                let mut push = |n: usize| {
                    if self.v[n] < 0.0 && lab[n] == usize::MAX {
                        lab[n] = count;
                        stack.push(n);
                    }
                };
                if i > 0 {
                    push(k - 1);
                }
                if i + 1 < self.nx {
                    push(k + 1);
                }
                if j > 0 {
                    push(k - self.nx);
                }
                if j + 1 < self.ny {
                    push(k + self.nx);
                }
            }
            count += 1;
        }
        (lab, count)
    }
}

/// Key of a grid edge: (i, j, horizontal).
type EdgeKey = (usize, usize, bool);

/// Marching squares on the sign of V - E0, with each crossing polished onto the
/// level set by Newton steps along the gradient.
pub fn equipotential_regions(b: &Barrier2D) -> Result<Regions> {
    equipotential_regions_with(b, b.window.cells)
}

pub fn equipotential_regions_with(b: &Barrier2D, cells: usize) -> Result<Regions> {
    let g = Grid::new(b, cells.max(8));
    let (lab, count) = g.label();
    let touching = |edge: &dyn Fn(usize) -> bool| -> Vec<usize> {
        let mut seen = vec![0usize; count];
        for (k, &l) in lab.iter().enumerate() {
            if l != usize::MAX && edge(k) {
                seen[l] += 1;
            }
        }
        (0..count).filter(|&l| seen[l] > 0).collect()
    };
    let nx = g.nx;
    let left = touching(&|k| k % nx == 0);
    let right = touching(&|k| k % nx == nx - 1);
    // A: the left-edge component reaching highest; B: the right-edge component with most nodes.
    let top_of = |l: usize| lab.iter().enumerate().filter(|(_, &v)| v == l).map(|(k, _)| k / nx).max().unwrap_or(0);
    let size_of = |l: usize| lab.iter().filter(|&&v| v == l).count();
    let a = left.iter().copied().max_by_key(|&l| (top_of(l), size_of(l)));
    let bl = right.iter().copied().filter(|&l| Some(l) != a).max_by_key(|&l| size_of(l));
    let (Some(a), Some(bl)) = (a, bl) else {
        return Err(Error::Topology { found: count });
    };
    Ok(Regions { a: boundary(b, &g, &lab, a), b: boundary(b, &g, &lab, bl), components: count })
}

fn crossing(b: &Barrier2D, g: &Grid, key: EdgeKey) -> Point {
    let (i, j, horizontal) = key;
    let (i2, j2) = if horizontal { (i + 1, j) } else { (i, j + 1) };
    let (v1, v2) = (g.at(i, j), g.at(i2, j2));
    let s = v1 / (v1 - v2);
    let (p1, p2) = (g.point(i, j), g.point(i2, j2));
    let guess = (p1.0 + s * (p2.0 - p1.0), p1.1 + s * (p2.1 - p1.1));
    b.project_to_level(guess).unwrap_or(guess)
}

/// Boundary of component `l`: level-set segments of cells where `l` meets forbidden nodes.
fn boundary(b: &Barrier2D, g: &Grid, lab: &[usize], l: usize) -> Vec<Vec<Point>> {
    let inside = |i: usize, j: usize| lab[j * g.nx + i] == l;
    let forbidden = |i: usize, j: usize| g.at(i, j) >= 0.0;
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if !corners.iter().any(|&(a, c)| inside(a, c)) {
                continue;
            }
            let code: usize = corners.iter().enumerate().map(|(n, &(a, c))| (inside(a, c) as usize) << n).sum();
            if corners.iter().any(|&(a, c)| !inside(a, c) && !forbidden(a, c)) {
                // A different allowed component shares the cell; too coarse to separate.
                continue;
            }
            // Edges: 0 bottom, 1 right, 2 top, 3 left.
            let e = [(i, j, true), (i + 1, j, false), (i, j + 1, true), (i, j, false)];
            let centre = 0.25 * corners.iter().map(|&(a, c)| g.at(a, c)).sum::<f64>();
            let pairs: &[(usize, usize)] = match code {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 => {
                    if centre < 0.0 {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if centre < 0.0 {
                        &[(3, 0), (1, 2)]
                    } else {
                        &[(3, 2), (0, 1)]
                    }
                }
                _ => &[],
            };
            for &(p, q) in pairs {
                segments.push((e[p], e[q]));
            }
        }
    }
    chain(b, g, &segments)
}

fn chain(b: &Barrier2D, g: &Grid, segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<Point>> {
    let mut by_edge: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (n, (p, q)) in segments.iter().enumerate() {
        by_edge.entry(*p).or_default().push(n);
        by_edge.entry(*q).or_default().push(n);
    }
    let mut used = vec![false; segments.len()];
    let mut cache: HashMap<EdgeKey, Point> = HashMap::new();
    let mut point = |k: EdgeKey| *cache.entry(k).or_insert_with(|| crossing(b, g, k));
    let mut lines = Vec::new();
    // Start open chains at edges used once so that they are not split.
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by_key(|&n| {
        let (p, q) = segments[n];
        (by_edge[&p].len().min(by_edge[&q].len()) != 1) as u8
    });
    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (p, q) = segments[start];
        let (mut keys, mut tail) = if by_edge[&q].len() == 1 { (vec![q, p], p) } else { (vec![p, q], q) };
        loop {
            let next = by_edge[&tail].iter().copied().find(|&n| !used[n]);
            let Some(n) = next else { break };
            used[n] = true;
            let (a, c) = segments[n];
            tail = if a == tail { c } else { a };
            keys.push(tail);
        }
        let coarse: Vec<Point> = keys.into_iter().map(&mut point).collect();
        lines.push(refine(b, &coarse));
    }
    lines
}

/// Inserts level-set points between neighbours until each chord midpoint is
/// within `CHORD_TOL` of the curve.
fn refine(b: &Barrier2D, line: &[Point]) -> Vec<Point> {
    const CHORD_TOL: f64 = 1e-5;
    fn split(b: &Barrier2D, p: Point, q: Point, depth: u32, out: &mut Vec<Point>) {
        let mid = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
        let len = (q.0 - p.0).hypot(q.1 - p.1);
        if let Some(m) = b.project_to_level(mid) {
            let off = (m.0 - mid.0).hypot(m.1 - mid.1);
            let inside = m.0 >= b.x0 && m.0 <= b.window.x_max && m.1 >= b.window.y_min && m.1 <= b.window.y_max;
            if off > CHORD_TOL && off < len && inside && depth < 12 {
                split(b, p, m, depth + 1, out);
                out.push(m);
                split(b, m, q, depth + 1, out);
            }
        }
    }
    let mut out = Vec::with_capacity(line.len());
    for w in line.windows(2) {
        out.push(w[0]);
        split(b, w[0], w[1], 0, &mut out);
    }
    out.extend(line.last());
    out
}
