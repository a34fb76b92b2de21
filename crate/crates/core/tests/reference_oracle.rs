//! Brute-force values for the reference barrier, independent of the library's
//! path minimizer and quadrature. Run with `--ignored --nocapture` to
//! regenerate the constants frozen in the acceptance suite.

use tunnel_lab::enhanced_2d::Barrier2D;

fn wall(b: &Barrier2D, y: f64) -> f64 {
    b.potential(b.x0, y) - b.vx(b.x0) - b.epsilon
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut c: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + c);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            c = m;
        }
    }
    0.5 * (a + c)
}

/// Upper two roots of the wall profile by a fine scan.
fn roots(b: &Barrier2D) -> (f64, f64) {
    let n = 200_000;
    let (lo, hi) = (b.window.y_min, b.window.y_max);
    let mut found = Vec::new();
    let mut prev = wall(b, lo);
    for k in 1..=n {
        let y = lo + (hi - lo) * k as f64 / n as f64;
        let v = wall(b, y);
        if (v > 0.0) != (prev > 0.0) {
            found.push(bisect(|y| wall(b, y), y - (hi - lo) / n as f64, y));
        }
        prev = v;
    }
    (found[found.len() - 2], found[found.len() - 1])
}

/// X by a midpoint rule with 10^6 panels.
fn sigma(b: &Barrier2D, y0: f64, y1: f64) -> f64 {
    let n = 1_000_000;
    let h = (y1 - y0) / n as f64;
    (0..n).map(|k| (2.0 * b.mass * wall(b, y0 + (k as f64 + 0.5) * h).max(0.0)).sqrt() * h).sum::<f64>() / b.hbar
}

/// Imaginary-time trajectory from `f` launched at angle `phi`; returns the
/// smallest V - E0 reached past the barrier top before V starts rising again,
/// and the action so far.
fn shoot(b: &Barrier2D, f: (f64, f64), phi: f64, dt: f64) -> (f64, f64) {
    let e0 = b.total_energy();
    let speed = (2.0 * (b.potential(f.0, f.1) - e0) / b.mass).sqrt();
    let rhs = |s: [f64; 5]| {
        let g = b.gradient((s[0], s[1]));
        let kin = b.mass * (s[2] * s[2] + s[3] * s[3]);
        [s[2], s[3], g.0 / b.mass, g.1 / b.mass, 2.0 * kin / b.hbar]
    };
    let mut s = [f.0, f.1, speed * phi.cos(), speed * phi.sin(), 0.0];
    let mut best = (f64::INFINITY, 0.0);
    let mut descending = false;
    for _ in 0..5_000_000 {
        let k1 = rhs(s);
        let add = |a: [f64; 5], k: [f64; 5], c: f64| std::array::from_fn::<f64, 5, _>(|i| a[i] + c * k[i]);
        let k2 = rhs(add(s, k1, 0.5 * dt));
        let k3 = rhs(add(s, k2, 0.5 * dt));
        let k4 = rhs(add(s, k3, dt));
        s = std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        let v = b.potential(s[0], s[1]) - e0;
        if s[0] < b.x0 {
            return (f64::INFINITY, s[4]);
        }
        if s[0] < b.vx.center {
            continue;
        }
        if v < best.0 {
            best = (v, s[4]);
            descending = true;
        } else if descending && v > best.0 + 1e-12 {
            return best;
        }
    }
    best
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut c: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = c - r * (c - a);
    let mut x2 = a + r * (c - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while c - a > 1e-10 {
        if f1 < f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - r * (c - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (c - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + c)
}

#[test]
#[ignore]
fn print_reference_values() {
    let b = Barrier2D::reference();
    let (y0, y1) = roots(&b);
    let x = sigma(&b, y0, y1);
    let f = (b.x0, y0);
    let dt = 1e-5;
    let phi = golden(|p| shoot(&b, f, p, dt).0, -1.2, 1.2);
    let (gap, a0_fb) = shoot(&b, f, phi, dt);
    let (_, coarse) = shoot(&b, f, phi, 2.0 * dt);
    println!("y0 {y0:.12} y1 {y1:.12} X {x:.12}");
    println!("phi {phi:.10} residual {gap:e} A0(f->B) {a0_fb:.10} (dt x2: {coarse:.10})");
    println!("A1 {:.10}", a0_fb - 2.0 * x / b.hbar);
}
