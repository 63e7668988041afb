//! Entropy and expected-log terms of the duality bound.
//!
//! Closed-form densities are integrated by quadrature. The one remaining
//! expectation, over the received amplitude `r = |ξ + z₀|`, is taken by
//! Monte Carlo with a fixed seed so that repeated evaluations at different
//! `ξ` share their random numbers.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mathcore::special::{bessel_ratios_into, log_i0_unchecked};
use crate::mathcore::{log_bessel_i, log_gamma, Quadrature, WrappedGaussian};
use crate::rng;

pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const MIN_MC_SAMPLES: usize = 100;

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            n_samples: n,
            seed,
        }
    }

    /// An exact value carried through code paths that expect an estimate.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            n_samples: 0,
            seed: 0,
        }
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::domain(format!("amplitude xi must be >= 0, got {xi}")));
    }
    Ok(())
}

/// log-density of `|ξ + z₁|² + Σ_{j=2}^{M} |z_j|²` (noncentral χ², 2M
/// degrees of freedom, each of variance ½).
fn log_noncentral_pdf(t: f64, xi: f64, antennas: usize, log_gamma_m: f64) -> f64 {
    if t <= 0.0 {
        return if antennas == 1 {
            -xi * xi
        } else {
            f64::NEG_INFINITY
        };
    }
    let m1 = (antennas - 1) as f64;
    if xi == 0.0 {
        return m1 * t.ln() - t - log_gamma_m;
    }
    let x = 2.0 * xi * t.sqrt();
    let log_bessel = log_bessel_i(antennas - 1, x).unwrap_or(f64::NEG_INFINITY);
    -(t + xi * xi) + 0.5 * m1 * (t.ln() - 2.0 * xi.ln()) + log_bessel
}

/// `E[log(|ξ + z₁|² + Σ_{j=2}^{M} |z_j|²)]` in nats.
pub fn expect_log_noncentral(xi: f64, antennas: usize) -> Result<f64> {
    check_xi(xi)?;
    if antennas == 0 {
        return Err(Error::domain("antenna count must be >= 1"));
    }
    let lgm = log_gamma(antennas as f64)?;
    let tail = (45.0 + 10.0 * antennas as f64).sqrt();
    let lo = (xi - 45f64.sqrt()).max(0.0).powi(2);
    let hi = (xi + tail).powi(2);
    let quad = Quadrature::with_rel_tol(1e-11);
    quad.integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            t.ln() * log_noncentral_pdf(t, xi, antennas, lgm).exp()
        },
        lo,
        hi,
        &[xi * xi, (antennas as f64).min(hi), 1e-6],
    )
}

/// Differential entropy (nats) of `|ξ + z₀|²`, whose density is
/// `e^{−(t+ξ²)} I₀(2ξ√t)`.
pub fn entropy_abs_sq(xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let lo = (xi - 7.0).max(0.0).powi(2);
    let hi = (xi + 7.0).powi(2);
    let quad = Quadrature::with_rel_tol(1e-11);
    quad.integrate_with_breaks(
        |t| {
            let lp = -(t + xi * xi) + log_i0_unchecked(2.0 * xi * t.max(0.0).sqrt());
            let p = lp.exp();
            if p > 0.0 {
                -p * lp
            } else {
                0.0
            }
        },
        lo,
        hi,
        &[xi * xi, 1.0],
    )
}

/// Fourier coefficients `c_n = E[cos n(Δ+φ)]` of the sum of a wrapped
/// Gaussian increment and an independent von Mises(κ) phase, `n = 0..`.
pub(crate) fn sum_coefficients(wg: &WrappedGaussian, kappa: f64, out: &mut Vec<f64>) {
    let vm_cutoff = if kappa == 0.0 {
        0
    } else {
        ((74.0 * kappa).sqrt() + 20.0).ceil() as usize
    };
    let n = wg.fourier_cutoff().min(vm_cutoff);
    out.clear();
    out.resize(n + 1, 0.0);
    bessel_ratios_into(kappa, out);
    for (k, c) in out.iter_mut().enumerate() {
        *c *= wg.fourier_coefficient(k);
    }
}

/// Evaluates `(1/2π)[1 + 2 Σ c_n cos(nx)]`.
pub(crate) fn fourier_density(coeffs: &[f64], x: f64) -> f64 {
    // Clenshaw recurrence for Σ_{n≥1} c_n cos(nx).
    let two_cos = 2.0 * x.cos();
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + two_cos * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    let series = b1 * x.cos() - b2;
    (1.0 + 2.0 * series) / TAU
}

/// Entropy (nats) of the circular sum of a wrapped Gaussian increment and a
/// von Mises phase with concentration `kappa`.
pub fn sum_phase_entropy(wg: &WrappedGaussian, kappa: f64) -> Result<f64> {
    let mut coeffs = Vec::new();
    sum_coefficients(wg, kappa, &mut coeffs);
    if coeffs.len() <= 1 {
        return Ok(TAU.ln());
    }
    let quad = Quadrature::with_rel_tol(1e-12);
    quad.integrate_periodic(|x| {
        let g = fourier_density(&coeffs, x);
        if g > 0.0 {
            -g * g.ln()
        } else {
            0.0
        }
    })
}

const TABLE_STEP: f64 = 0.02;

/// `h(Δ + φ | κ)` tabulated against `u = ln(1+κ)` with cubic interpolation.
#[derive(Debug, Clone)]
pub struct SumPhaseEntropyTable {
    wg: WrappedGaussian,
    values: Vec<f64>,
}

impl SumPhaseEntropyTable {
    pub fn new(sigma: f64, kappa_max: f64) -> Result<Self> {
        let wg = WrappedGaussian::new(sigma)?;
        let u_max = kappa_max.max(0.0).ln_1p();
        let n = (u_max / TABLE_STEP).ceil() as usize + 4;
        let values = (0..n)
            .into_par_iter()
            .map(|i| sum_phase_entropy(&wg, (i as f64 * TABLE_STEP).exp_m1()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { wg, values })
    }

    pub fn sigma(&self) -> f64 {
        self.wg.sigma()
    }

    pub fn kappa_max(&self) -> f64 {
        ((self.values.len() - 1) as f64 * TABLE_STEP).exp_m1()
    }

    pub fn entropy(&self, kappa: f64) -> f64 {
        let u = kappa.ln_1p() / TABLE_STEP;
        let n = self.values.len();
        let j0 = ((u.floor() as isize) - 1).clamp(0, n as isize - 4) as usize;
        let t = u - j0 as f64;
        // Lagrange cubic through nodes j0..j0+3 at offsets 0,1,2,3.
        let y = &self.values[j0..j0 + 4];
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]
    }
}

/// Common random numbers for the amplitude `r = |ξ + z₀|`.
#[derive(Debug, Clone)]
pub struct AmplitudeSampler {
    noise: Vec<(f64, f64)>,
    seed: u64,
}

impl AmplitudeSampler {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples < MIN_MC_SAMPLES {
            return Err(Error::config(format!(
                "n_samples must be >= {MIN_MC_SAMPLES}, got {n_samples}"
            )));
        }
        let mut rng = rng::stream(seed, &[0xA3]);
        let noise = (0..n_samples)
            .map(|_| {
                let z = rng::complex_gaussian(&mut rng);
                (z.re, z.im)
            })
            .collect();
        Ok(Self { noise, seed })
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }

    pub fn amplitudes(&self, xi: f64) -> impl Iterator<Item = f64> + '_ {
        self.noise.iter().map(move |&(re, im)| (xi + re).hypot(im))
    }

    /// `κ = 2rξ` for the largest amplitude any sample can produce at `xi_max`.
    pub fn max_kappa(&self, xi_max: f64) -> f64 {
        self.amplitudes(xi_max).fold(0.0, f64::max) * 2.0 * xi_max
    }
}

/// Estimator of `h(Δ + φ₀(ξ²) | |ξ+z₀|)` reusing one amplitude sample set
/// and one entropy table across many `ξ`.
#[derive(Debug, Clone)]
pub struct DeltaPlusPhaseEntropy {
    table: SumPhaseEntropyTable,
    sampler: AmplitudeSampler,
    xi_max: f64,
}

impl DeltaPlusPhaseEntropy {
    pub fn new(sigma: f64, xi_max: f64, n_samples: usize, seed: u64) -> Result<Self> {
        check_xi(xi_max)?;
        let sampler = AmplitudeSampler::new(n_samples, seed)?;
        let table = SumPhaseEntropyTable::new(sigma, sampler.max_kappa(xi_max) * 1.01 + 1.0)?;
        Ok(Self {
            table,
            sampler,
            xi_max,
        })
    }

    pub fn estimate(&self, xi: f64) -> Result<McEstimate> {
        check_xi(xi)?;
        if xi > self.xi_max * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "xi = {xi} exceeds the tabulated range {}",
                self.xi_max
            )));
        }
        let samples: Vec<f64> = self
            .sampler
            .amplitudes(xi)
            .map(|r| self.table.entropy(2.0 * r * xi))
            .collect();
        Ok(McEstimate::from_samples(&samples, self.sampler.seed))
    }
}

/// `h(Δ + φ₀(ξ²) | |ξ+z₀|)` in nats, Δ wrapped Gaussian with std `sigma`.
pub fn entropy_delta_plus_phase(
    xi: f64,
    sigma: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    DeltaPlusPhaseEntropy::new(sigma, xi, n_samples, seed)?.estimate(xi)
}

/// Plug-in Monte-Carlo estimate `−(1/n) Σ log p(tᵢ)` of `h(|ξ+z|²)`.
pub fn entropy_abs_sq_mc<R: Rng>(xi: f64, n: usize, rng: &mut R, seed: u64) -> McEstimate {
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let z = rng::complex_gaussian(rng);
            let t = (z.re + xi).powi(2) + z.im * z.im;
            t + xi * xi - log_i0_unchecked(2.0 * xi * t.sqrt())
        })
        .collect();
    McEstimate::from_samples(&samples, seed)
}
