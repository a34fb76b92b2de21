//! Nonstationary field profiles h(t) = E(t)/E0 on the real and imaginary time axes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    None,
    LorentzianCubed,
    Cosine,
    Gaussian,
}

/// A symmetric field profile in units of the static field.
///
/// `width` is the pulse duration in units of t0 for `LorentzianCubed`
/// and the angular frequency times t0 for `Cosine` and `Gaussian`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub shape: Shape,
    #[serde(default)]
    pub amplitude_ratio: f64,
    #[serde(default = "one")]
    pub width: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Drive {
    fn default() -> Self {
        Drive::none()
    }
}

impl Drive {
    pub fn none() -> Self {
        Drive { shape: Shape::None, amplitude_ratio: 0.0, width: 1.0 }
    }

    pub fn new(shape: Shape, amplitude_ratio: f64, width: f64) -> Result<Self> {
        let d = Drive { shape, amplitude_ratio, width };
        d.validate()?;
        Ok(d)
    }

    pub fn lorentzian_cubed(amplitude_ratio: f64, width: f64) -> Result<Self> {
        Self::new(Shape::LorentzianCubed, amplitude_ratio, width)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_ratio >= 0.0 && self.amplitude_ratio.is_finite()) {
            return Err(Error::Invalid(format!("amplitude_ratio {} must be >= 0", self.amplitude_ratio)));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::Invalid(format!("width {} must be > 0", self.width)));
        }
        Ok(())
    }

    pub fn is_none(&self) -> bool {
        self.shape == Shape::None || self.amplitude_ratio == 0.0
    }

    /// Upper edge of the imaginary-time domain (the pole for the Lorentzian).
    pub fn imag_domain_edge(&self) -> f64 {
        match self.shape {
            Shape::LorentzianCubed => self.width,
            _ => f64::INFINITY,
        }
    }

    pub fn h_real(&self, t: f64) -> f64 {
        let r = self.amplitude_ratio;
        let w = self.width;
        match self.shape {
            Shape::None => 0.0,
            Shape::LorentzianCubed => {
                let s = t / w;
                r / (1.0 + s * s).powi(3)
            }
            Shape::Cosine => r * (w * t).cos(),
            Shape::Gaussian => r * (-(w * t) * (w * t)).exp(),
        }
    }

    /// h(i tau), real because every shape is even in t.
    pub fn h_imag(&self, tau: f64) -> Result<f64> {
        let r = self.amplitude_ratio;
        let w = self.width;
        Ok(match self.shape {
            Shape::None => 0.0,
            Shape::LorentzianCubed => {
                if tau.abs() >= w {
                    return Err(Error::Singularity { tau, pole: w });
                }
                let s = tau / w;
                r / (1.0 - s * s).powi(3)
            }
            Shape::Cosine => r * (w * tau).cosh(),
            Shape::Gaussian => r * ((w * tau) * (w * tau)).exp(),
        })
    }

    /// I(tau) = integral of h(i s) over [0, tau].
    pub fn drive_integral(&self, tau: f64) -> Result<f64> {
        if self.shape == Shape::None || tau == 0.0 {
            return Ok(0.0);
        }
        self.h_imag(tau)?;
        let v = quad::integrate(|s| self.h_imag(s).unwrap_or(f64::INFINITY), 0.0, tau, 1e-12, 1e-300);
        Ok(v)
    }

    /// h at a complex time.
    pub fn h_complex(&self, z: Complex64) -> Complex64 {
        let r = self.amplitude_ratio;
        let w = self.width;
        match self.shape {
            Shape::None => Complex64::new(0.0, 0.0),
            Shape::LorentzianCubed => {
                let s = z / w;
                let d = Complex64::new(1.0, 0.0) + s * s;
                r / (d * d * d)
            }
            Shape::Cosine => r * (w * z).cos(),
            Shape::Gaussian => r * (-(w * z) * (w * z)).exp(),
        }
    }

    /// Running integral of h from 0 to a complex time along the straight ray.
    pub fn antiderivative(&self, z: Complex64) -> Complex64 {
        let r = self.amplitude_ratio;
        let w = self.width;
        match self.shape {
            Shape::None => Complex64::new(0.0, 0.0),
            Shape::LorentzianCubed => r * w * lorentzian_cubed_primitive(z / w),
            Shape::Cosine => r * (w * z).sin() / w,
            Shape::Gaussian => {
                let (x, wt) = quad::gl16();
                // Along the ray the integrand is exp(-(w z s)^2); past s_max it is below e^-40.
                let wz2 = (w * z) * (w * z);
                let s_max = if wz2.re > 0.0 { (40.0 / wz2.re).sqrt().min(1.0) } else { 1.0 };
                let panels = (2.0 * (w * z).norm() * s_max + 0.5 * wz2.im.abs() * s_max * s_max).ceil().max(1.0) as usize;
                let mut acc = Complex64::new(0.0, 0.0);
                for p in 0..panels {
                    let lo = s_max * p as f64 / panels as f64;
                    let hi = s_max * (p + 1) as f64 / panels as f64;
                    for (xi, wi) in x.iter().zip(wt) {
                        let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi;
                        acc += 0.5 * (hi - lo) * wi * self.h_complex(z * s);
                    }
                }
                acc * z
            }
        }
    }

    /// Integral of h over (-inf, 0]; `None` for drives that do not decay.
    pub fn half_line_integral(&self) -> Option<f64> {
        let r = self.amplitude_ratio;
        let w = self.width;
        match self.shape {
            Shape::None => Some(0.0),
            Shape::LorentzianCubed => Some(r * w * 3.0 * std::f64::consts::PI / 16.0),
            Shape::Gaussian => Some(r * std::f64::consts::PI.sqrt() / (2.0 * w)),
            Shape::Cosine => None,
        }
    }

    /// Cosine transform of h over the whole real line.
    ///
    /// The monochromatic drive has a line spectrum: the value is infinite at
    /// the drive frequency and zero elsewhere.
    pub fn fourier_component(&self, omega: f64) -> f64 {
        let r = self.amplitude_ratio;
        let w = self.width;
        let om = omega.abs();
        let (span, panel) = match self.shape {
            Shape::None => return 0.0,
            Shape::Cosine => {
                return if om == w && r > 0.0 { f64::INFINITY } else { 0.0 };
            }
            Shape::LorentzianCubed => (400.0 * w, (0.5 * w).min(if om > 0.0 { 1.0 / om } else { f64::INFINITY })),
            Shape::Gaussian => (9.0 / w, (0.25 / w).min(if om > 0.0 { 1.0 / om } else { f64::INFINITY })),
        };
        let panels = (span / panel).ceil() as usize;
        let (x, wt) = quad::gl16();
        let hw = 0.5 * span / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let c = (2 * p + 1) as f64 * hw;
            for (xi, wi) in x.iter().zip(wt) {
                let t = c + hw * xi;
                acc += wi * hw * self.h_real(t) * (omega * t).cos();
            }
        }
        2.0 * acc
    }
}

/// Primitive of (1+s^2)^-3 vanishing at s = 0.
pub fn lorentzian_cubed_primitive(s: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let d = one + s * s;
    s / (4.0 * d * d) + 3.0 * s / (8.0 * d) + 0.375 * s.atan()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lc(r: f64, th: f64) -> Drive {
        Drive::lorentzian_cubed(r, th).unwrap()
    }

    #[test]
    fn pulse_values() {
        let d = lc(0.01, 0.5);
        assert_eq!(d.h_real(0.0), 0.01);
        assert!((d.h_real(0.5) - 0.00125).abs() < 1e-18);
        assert_eq!(Drive::none().h_real(3.7), 0.0);
        assert_eq!(Drive::none().h_imag(0.7).unwrap(), 0.0);
        assert_eq!(d.h_imag(0.0).unwrap(), 0.01);
    }

    #[test]
    fn pole_is_reported() {
        let d = lc(0.01, 0.5);
        assert!(matches!(d.h_imag(0.5), Err(Error::Singularity { .. })));
        assert!(matches!(d.drive_integral(0.6), Err(Error::Singularity { .. })));
    }

    #[test]
    fn cosine_continues_to_cosh() {
        let d = Drive::new(Shape::Cosine, 0.01, 1.3).unwrap();
        let tau = 0.8;
        assert!((d.h_imag(tau).unwrap() - 0.01 * (1.3f64 * tau).cosh()).abs() < 1e-16);
        let z = Complex64::new(0.0, tau);
        assert!((d.h_complex(z).re - d.h_imag(tau).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Drive::new(Shape::Gaussian, -1.0, 1.0).is_err());
        assert!(Drive::new(Shape::Gaussian, 1.0, 0.0).is_err());
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        for d in [lc(0.1, 2.0), Drive::new(Shape::Gaussian, 0.2, 0.7).unwrap(), Drive::new(Shape::Cosine, 0.1, 1.5).unwrap()] {
            let z = Complex64::new(0.7, 0.4);
            let (x, w) = quad::gauss_legendre(40);
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, wi) in x.iter().zip(&w) {
                acc += 0.5 * wi * d.h_complex(z * (0.5 + 0.5 * xi));
            }
            acc *= z;
            assert!((acc - d.antiderivative(z)).norm() < 1e-13, "{d:?}");
        }
    }

    #[test]
    fn half_line_integral_matches_primitive() {
        let d = lc(0.1, 2.0);
        let m = d.half_line_integral().unwrap();
        let far = -d.antiderivative(Complex64::new(-1e7, 0.0)).re;
        assert!((m - far).abs() < 1e-12);
    }

    #[test]
    fn fourier_zero_frequency() {
        let d = lc(0.01, 0.5);
        let exact = 3.0 * std::f64::consts::PI / 8.0 * 0.01 * 0.5;
        assert!((d.fourier_component(0.0) - exact).abs() < 1e-12);
        assert_eq!(Drive::none().fourier_component(1.0), 0.0);
    }
}
