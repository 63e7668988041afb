//! Circular densities: the wrapped Gaussian phase increment and the phase of
//! a pilot observation in Gaussian noise.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use super::quadrature::Quadrature;
use super::special::{erf, erfc, log_i0_unchecked, one_minus_sqrt_pi_y_erfcx};
use crate::error::{Error, Result};

/// Folds an angle into `[−π, π)`.
pub fn wrap_pi(x: f64) -> f64 {
    x - TAU * ((x + PI) / TAU).floor()
}

/// Folds an angle into `[0, 2π)`.
pub fn wrap_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Gaussian with standard deviation `sigma` folded onto the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedGaussian {
    sigma: f64,
    truncation_order: usize,
}

impl WrappedGaussian {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!(
                "wrapped Gaussian requires sigma > 0, got {sigma}"
            )));
        }
        let truncation_order = (8.0 * sigma / TAU).ceil() as usize + 2;
        Ok(Self {
            sigma,
            truncation_order,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Lattice terms `|l| ≤ L` kept in the wrapped sum.
    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    pub fn pdf(&self, delta: f64) -> f64 {
        let d = wrap_pi(delta);
        let s2 = 2.0 * self.sigma * self.sigma;
        let l_max = self.truncation_order as i64;
        let sum: f64 = (-l_max..=l_max)
            .map(|l| {
                let x = d - TAU * l as f64;
                (-(x * x) / s2).exp()
            })
            .sum();
        sum / (PI * s2).sqrt()
    }

    /// Probability that the increment falls in `[a, b]`, `0 ≤ b − a ≤ 2π`.
    pub fn interval_probability(&self, a: f64, b: f64) -> f64 {
        let shift = TAU * ((a + PI) / TAU).floor();
        let (a, b) = (a - shift, b - shift);
        let scale = FRAC_1_SQRT_2 / self.sigma;
        let l_max = self.truncation_order as i64 + 1;
        (-l_max..=l_max)
            .map(|l| {
                let off = TAU * l as f64;
                gaussian_mass((a - off) * scale, (b - off) * scale)
            })
            .sum()
    }

    /// Fourier coefficient `E[cos(nΔ)] = exp(−n²σ²/2)`.
    pub fn fourier_coefficient(&self, n: usize) -> f64 {
        let n = n as f64;
        (-0.5 * n * n * self.sigma * self.sigma).exp()
    }

    /// Harmonics needed before the coefficients drop below 1e-16.
    pub fn fourier_cutoff(&self) -> usize {
        ((2.0 * 37.0f64).sqrt() / self.sigma).ceil() as usize
    }

    /// Differential entropy in nats.
    pub fn entropy(&self, quad: &Quadrature) -> Result<f64> {
        let integrand = |x: f64| {
            let p = self.pdf(x);
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        };
        quad.integrate_peaked(integrand, -PI, PI, 0.0, self.sigma)
    }
}

// ∫_{a}^{b} of the standard Gaussian, arguments already divided by √2σ.
fn gaussian_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (erfc(a) - erfc(b))
    } else if b <= 0.0 {
        0.5 * (erfc(-b) - erfc(-a))
    } else {
        0.5 * (erf(b) - erf(a))
    }
}

pub fn wrapped_gaussian_pdf(delta: f64, sigma: f64) -> Result<f64> {
    Ok(WrappedGaussian::new(sigma)?.pdf(delta))
}

pub fn wrapped_gaussian_entropy(sigma: f64) -> Result<f64> {
    WrappedGaussian::new(sigma)?.entropy(&Quadrature::default())
}

/// Density of `arg(1 + z/√a)` with `z` circular standard complex Gaussian.
pub fn rician_phase_pdf(phi: f64, a: f64) -> Result<f64> {
    Ok(rician_phase_log_pdf(phi, a)?.exp())
}

pub fn rician_phase_log_pdf(phi: f64, a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "rician phase density requires a >= 0, got {a}"
        )));
    }
    Ok(rician_log_pdf_unchecked(phi, a))
}

pub(crate) fn rician_log_pdf_unchecked(phi: f64, a: f64) -> f64 {
    let log_norm = -TAU.ln();
    if a == 0.0 {
        return log_norm;
    }
    let (s, c) = phi.sin_cos();
    let y = a.sqrt() * c;
    if c > 0.0 {
        // (1/2π)[e^{−a} + √(πa)·c·e^{−a sin²φ}(1 + erf(√a cos φ))]
        let log_b = 0.5 * (PI * a).ln() + c.ln() - a * s * s + (2.0 - erfc(y)).ln();
        let log_a = -a;
        let (hi, lo) = if log_b > log_a {
            (log_b, log_a)
        } else {
            (log_a, log_b)
        };
        log_norm + hi + (lo - hi).exp().ln_1p()
    } else {
        log_norm - a + one_minus_sqrt_pi_y_erfcx(-y).ln()
    }
}

/// Von Mises log-density with concentration `kappa`, mean zero.
pub fn von_mises_log_pdf(phi: f64, kappa: f64) -> f64 {
    kappa * phi.cos() - TAU.ln() - log_i0_unchecked(kappa)
}
