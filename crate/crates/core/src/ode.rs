//! Classical RK4 with step-doubling error control.

/// Fixed-size state.
pub type State<const N: usize> = [f64; N];

fn axpy<const N: usize>(y: &State<N>, h: f64, k: &State<N>) -> State<N> {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &State<N>, h: f64) -> State<N>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Adaptive integrator; `tol` bounds the local error of each accepted step.
pub struct Rk4<const N: usize, F> {
    f: F,
    pub t: f64,
    pub y: State<N>,
    pub h: f64,
    tol: f64,
}

impl<const N: usize, F> Rk4<N, F>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    pub fn new(f: F, t: f64, y: State<N>, h: f64, tol: f64) -> Self {
        Rk4 { f, t, y, h, tol }
    }

    /// Advances by one accepted step, never past `t_end`. Returns false when
    /// the step size underflows.
    pub fn step_toward(&mut self, t_end: f64) -> bool {
        let dir = (t_end - self.t).signum();
        loop {
            let mut h = self.h.abs().min((t_end - self.t).abs()) * dir;
            if h == 0.0 {
                return true;
            }
            let full = rk4_step(&self.f, self.t, &self.y, h);
            let mid = rk4_step(&self.f, self.t, &self.y, 0.5 * h);
            let two = rk4_step(&self.f, self.t + 0.5 * h, &mid, 0.5 * h);
            let mut err = 0.0f64;
            for i in 0..N {
                err = err.max((two[i] - full[i]).abs() / 15.0);
            }
            if !err.is_finite() {
                err = f64::INFINITY;
            }
            if err <= self.tol {
                let mut y = two;
                for i in 0..N {
                    y[i] += (two[i] - full[i]) / 15.0;
                }
                self.t += h;
                self.y = y;
                let grow = if err == 0.0 { 4.0 } else { (0.9 * (self.tol / err).powf(0.2)).clamp(0.2, 4.0) };
                self.h = h.abs() * grow;
                return true;
            }
            h *= (0.9 * (self.tol / err).powf(0.2)).clamp(0.1, 0.5);
            self.h = h.abs();
            if self.h < 1e-14 * (1.0 + self.t.abs()) {
                return false;
            }
        }
    }

    /// Integrates up to `t_end`. Returns false on step-size underflow.
    pub fn advance_to(&mut self, t_end: f64) -> bool {
        while self.t != t_end {
            if !self.step_toward(t_end) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut s = Rk4::new(f, 0.0, [1.0, 0.0], 0.1, 1e-12);
        assert!(s.advance_to(2.0 * std::f64::consts::PI));
        assert!((s.y[0] - 1.0).abs() < 1e-9);
        assert!(s.y[1].abs() < 1e-9);
    }

    #[test]
    fn integrates_backwards() {
        let f = |t: f64, _y: &[f64; 1]| [t];
        let mut s = Rk4::new(f, 0.0, [0.0], 0.1, 1e-12);
        assert!(s.advance_to(-2.0));
        assert!((s.y[0] - 2.0).abs() < 1e-12);
    }
}
