//! Information rates of the phase-noise channel via forward recursions over
//! a quantized phase state.
//!
//! The true phase is simulated on the continuum; only the receiver-side
//! filter lives on the grid. The QAM rate is therefore the rate of a
//! mismatched (grid) decoder, which is itself achievable.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{ChannelMatrix, ChannelParams, CMatrix, Constellation, Normalization};
use crate::entropy::McEstimate;
use crate::error::{Error, Result};
use crate::mathcore::circular::rician_log_pdf_unchecked;
use crate::mathcore::special::bessel_ratios_into;
use crate::mathcore::{wrap_2pi, WrappedGaussian};
use crate::rng;

pub const DEFAULT_Q_LEVELS: usize = 200;
pub const DEFAULT_BLOCK_LENGTH: usize = 2000;
pub const DEFAULT_N_BLOCKS: usize = 4;
pub const DEFAULT_BURN_IN: usize = 100;
pub const DEFAULT_PAST_WINDOW: usize = 200;
pub const MIN_BLOCK_LENGTH: usize = 100;
/// Steps per batch for the batch-means standard error.
pub const BATCH_SIZE: usize = 100;
/// Input vectors kept in the mixture pass when the alphabet is too large.
pub const MIXTURE_SUBSET: usize = 4096;

const TAG_RATE: u64 = 0x4A7E;
const TAG_PILOT: u64 = 0x9107;

/// Uniform grid on `[0, 2π)` with a circulant wrapped-Gaussian transition.
#[derive(Debug, Clone)]
pub struct PhaseQuantizer {
    sigma: f64,
    grid: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    offsets: Vec<isize>,
    weights: Vec<f64>,
}

impl PhaseQuantizer {
    pub fn new(q_levels: usize, sigma: f64) -> Result<Self> {
        if q_levels < 2 {
            return Err(Error::config(format!("q_levels must be >= 2, got {q_levels}")));
        }
        let wg = WrappedGaussian::new(sigma)?;
        let cell = TAU / q_levels as f64;
        let reach = ((10.0 * sigma / cell).ceil() as usize + 1).min(q_levels / 2);
        let (lo, hi) = if 2 * reach + 1 >= q_levels {
            let lo = -((q_levels / 2) as isize);
            (lo, lo + q_levels as isize - 1)
        } else {
            (-(reach as isize), reach as isize)
        };
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for d in lo..=hi {
            let w = wg.interval_probability((d as f64 - 0.5) * cell, (d as f64 + 0.5) * cell);
            if w > 1e-300 {
                offsets.push(d);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let grid: Vec<f64> = (0..q_levels).map(|q| q as f64 * cell).collect();
        Ok(Self {
            sigma,
            cos: grid.iter().map(|t| t.cos()).collect(),
            sin: grid.iter().map(|t| t.sin()).collect(),
            grid,
            offsets,
            weights,
        })
    }

    pub fn q_levels(&self) -> usize {
        self.grid.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Probability of moving from cell `from` to cell `to` in one step.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        let q = self.q_levels() as isize;
        let shift = (to as isize - from as isize).rem_euclid(q);
        self.offsets
            .iter()
            .zip(&self.weights)
            .filter(|(&d, _)| d.rem_euclid(q) == shift)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn nearest(&self, theta: f64) -> usize {
        let q = self.q_levels();
        ((wrap_2pi(theta) / TAU * q as f64).round() as usize) % q
    }

    /// `out[j] = Σ_i p[i]·T(i, j)`.
    pub fn predict(&self, p: &[f64], out: &mut [f64]) {
        let q = self.q_levels() as isize;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&d, &w) in self.offsets.iter().zip(&self.weights) {
            let d = d.rem_euclid(q) as usize;
            let (head, tail) = p.split_at(p.len() - d);
            // out[j] += w·p[j − d]
            for (o, &v) in out[d..].iter_mut().zip(head) {
                *o += w * v;
            }
            for (o, &v) in out[..d].iter_mut().zip(tail) {
                *o += w * v;
            }
        }
    }
}

/// Normalized forward recursion over the grid of a [`PhaseQuantizer`].
#[derive(Debug, Clone)]
pub struct ForwardFilter<'a> {
    quantizer: &'a PhaseQuantizer,
    posterior: Vec<f64>,
    prior: Vec<f64>,
    started: bool,
}

impl<'a> ForwardFilter<'a> {
    pub fn uniform(quantizer: &'a PhaseQuantizer) -> Self {
        let q = quantizer.q_levels();
        Self {
            quantizer,
            posterior: vec![1.0 / q as f64; q],
            prior: vec![1.0 / q as f64; q],
            started: false,
        }
    }

    pub fn point_mass(quantizer: &'a PhaseQuantizer, theta: f64) -> Self {
        let mut f = Self::uniform(quantizer);
        f.prior.iter_mut().for_each(|v| *v = 0.0);
        f.prior[quantizer.nearest(theta)] = 1.0;
        f
    }

    /// Current posterior over the grid; sums to one after every step.
    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    /// Advances one symbol and returns `log Σ_q p_pred(q)·e^{ll[q]}`.
    pub fn step(&mut self, loglik: &[f64], step: usize) -> Result<f64> {
        if self.started {
            self.quantizer.predict(&self.posterior, &mut self.prior);
        }
        self.started = true;
        let m = loglik
            .iter()
            .zip(&self.prior)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&l, _)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::NumericUnderflow { step });
        }
        let mut total = 0.0;
        for ((post, &pr), &l) in self.posterior.iter_mut().zip(&self.prior).zip(loglik) {
            *post = pr * (l - m).exp();
            total += *post;
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NumericUnderflow { step });
        }
        self.posterior.iter_mut().for_each(|v| *v /= total);
        Ok(m + total.ln())
    }
}

/// Mean over all samples with a standard error from non-overlapping batch
/// means; consecutive recursion outputs are correlated.
pub(crate) fn batch_mean_estimate(blocks: &[Vec<f64>], batch: usize, seed: u64) -> McEstimate {
    let n: usize = blocks.iter().map(Vec::len).sum();
    let mean = blocks.iter().flatten().sum::<f64>() / n.max(1) as f64;
    let batches: Vec<f64> = blocks
        .iter()
        .flat_map(|b| b.chunks_exact(batch).map(|c| c.iter().sum::<f64>() / c.len() as f64))
        .collect();
    let std_error = if batches.len() >= 2 {
        let bm = batches.iter().sum::<f64>() / batches.len() as f64;
        let var = batches.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (batches.len() - 1) as f64;
        (var / batches.len() as f64).sqrt()
    } else {
        let all: Vec<f64> = blocks.iter().flatten().copied().collect();
        McEstimate::from_samples(&all, seed).std_error
    };
    McEstimate {
        value: mean,
        std_error,
        n_samples: n,
        seed,
    }
}

/// Simulation controls shared by the rate estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConfig {
    pub block_length: usize,
    pub n_blocks: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub normalization: Normalization,
    /// Pins `θ₀` and starts the receiver from the matching grid point.
    pub initial_phase: Option<f64>,
}

impl RateConfig {
    pub fn new(block_length: usize, n_blocks: usize, seed: u64) -> Self {
        Self {
            block_length,
            n_blocks,
            seed,
            burn_in: DEFAULT_BURN_IN,
            normalization: Normalization::Peak,
            initial_phase: None,
        }
    }

    fn check(&self) -> Result<()> {
        if self.block_length < MIN_BLOCK_LENGTH {
            return Err(Error::config(format!(
                "block_length must be >= {MIN_BLOCK_LENGTH}, got {}",
                self.block_length
            )));
        }
        if self.n_blocks == 0 {
            return Err(Error::config("n_blocks must be >= 1"));
        }
        Ok(())
    }
}

impl Default for RateConfig {
    fn default() -> Self {
        Self::new(DEFAULT_BLOCK_LENGTH, DEFAULT_N_BLOCKS, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Bits per channel use.
    pub rate: f64,
    pub std_error: f64,
    pub block_length: usize,
    pub n_blocks: usize,
    pub seed: u64,
    /// Set when the mixture pass used a random subset of input vectors.
    pub subset_mixture: bool,
}

enum Mixture {
    /// Unitary channel: per-antenna factorization after applying `Hᴴ`.
    PerAntenna { adjoint: Option<CMatrix> },
    /// All `Hx` for the full input alphabet.
    Enumerated { images: Vec<Vec<Complex64>>, energies: Vec<f64> },
    Subset,
}

fn check_quantizer(params: &ChannelParams, quantizer: &PhaseQuantizer) -> Result<()> {
    let tol = 1e-12 * params.sigma_delta.max(1e-300);
    if (quantizer.sigma() - params.sigma_delta).abs() > tol {
        return Err(Error::config(format!(
            "quantizer sigma {} does not match channel sigma {}",
            quantizer.sigma(),
            params.sigma_delta
        )));
    }
    Ok(())
}

/// `2·Re(e^{−jθ_q}·a)` for every grid point, added onto `out`.
fn add_phase_correlation(quantizer: &PhaseQuantizer, a: Complex64, scale: f64, out: &mut [f64]) {
    let (re, im) = (2.0 * scale * a.re, 2.0 * scale * a.im);
    for ((o, &c), &s) in out.iter_mut().zip(&quantizer.cos).zip(&quantizer.sin) {
        *o += c * re + s * im;
    }
}

/// Achievable rate of i.i.d. uniform signaling from `constellation` on every
/// antenna, in bits per channel use.
pub fn qam_rate(
    params: &ChannelParams,
    constellation: &Constellation,
    quantizer: &PhaseQuantizer,
    config: &RateConfig,
) -> Result<RateEstimate> {
    config.check()?;
    check_quantizer(params, quantizer)?;
    if constellation.is_empty() {
        return Err(Error::domain("constellation is empty"));
    }
    let estimate = |rate, std_error, subset_mixture| RateEstimate {
        rate,
        std_error,
        block_length: config.block_length,
        n_blocks: config.n_blocks,
        seed: config.seed,
        subset_mixture,
    };
    if constellation.len() == 1 {
        return Ok(estimate(0.0, 0.0, false));
    }
    let m = params.antennas;
    let alphabet = constellation.normalized(params.snr, m, config.normalization);
    let mixture = match &params.matrix {
        ChannelMatrix::Unitary => Mixture::PerAntenna { adjoint: None },
        ChannelMatrix::General(h) if h.is_unitary(1e-9) => Mixture::PerAntenna {
            adjoint: Some(h.clone()),
        },
        ChannelMatrix::General(h) => {
            let count = (alphabet.len() as f64).powi(m as i32);
            if count <= MIXTURE_SUBSET as f64 {
                let images: Vec<Vec<Complex64>> = (0..count as usize)
                    .map(|mut idx| {
                        let x: Vec<Complex64> = (0..m)
                            .map(|_| {
                                let s = alphabet.symbols[idx % alphabet.len()];
                                idx /= alphabet.len();
                                s
                            })
                            .collect();
                        h.mul_vec(&x)
                    })
                    .collect();
                let energies = images
                    .iter()
                    .map(|v| v.iter().map(|z| z.norm_sqr()).sum())
                    .collect();
                Mixture::Enumerated { images, energies }
            } else {
                Mixture::Subset
            }
        }
    };
    let blocks = (0..config.n_blocks)
        .into_par_iter()
        .map(|b| rate_block(params, &alphabet, quantizer, config, &mixture, b as u64))
        .collect::<Result<Vec<_>>>()?;
    let est = batch_mean_estimate(&blocks, BATCH_SIZE, config.seed);
    Ok(estimate(
        est.value / LN_2,
        est.std_error / LN_2,
        matches!(mixture, Mixture::Subset),
    ))
}

fn rate_block(
    params: &ChannelParams,
    alphabet: &Constellation,
    quantizer: &PhaseQuantizer,
    config: &RateConfig,
    mixture: &Mixture,
    block: u64,
) -> Result<Vec<f64>> {
    let m = params.antennas;
    let q = quantizer.q_levels();
    let mut rng = rng::stream(config.seed, &[TAG_RATE, block]);
    let (mut cond, mut mix) = match config.initial_phase {
        Some(t) => (ForwardFilter::point_mass(quantizer, t), ForwardFilter::point_mass(quantizer, t)),
        None => (ForwardFilter::uniform(quantizer), ForwardFilter::uniform(quantizer)),
    };
    let mut theta = config.initial_phase.map(wrap_2pi).unwrap_or_else(|| rng.gen::<f64>() * TAU);
    let energies: Vec<f64> = alphabet.symbols.iter().map(|s| s.norm_sqr()).collect();
    let mut ll_cond = vec![0.0; q];
    let mut ll_mix = vec![0.0; q];
    let mut terms = vec![0.0; alphabet.len().max(MIXTURE_SUBSET)];
    let total = config.burn_in + config.block_length;
    let mut out = Vec::with_capacity(config.block_length);
    for k in 0..total {
        let x: Vec<Complex64> = alphabet.random_vector(m, &mut rng);
        let rot = Complex64::from_polar(1.0, theta);
        let y: Vec<Complex64> = params
            .apply_matrix(&x)
            .into_iter()
            .map(|hx| rot * hx + rng::complex_gaussian(&mut rng))
            .collect();
        ll_cond.iter_mut().for_each(|v| *v = 0.0);
        ll_mix.iter_mut().for_each(|v| *v = 0.0);
        match mixture {
            Mixture::PerAntenna { adjoint } => {
                let yp = match adjoint {
                    Some(h) => h.adjoint_mul_vec(&y),
                    None => y.clone(),
                };
                let mut c = Complex64::new(0.0, 0.0);
                let mut energy = 0.0;
                for (xi, yi) in x.iter().zip(&yp) {
                    c += xi.conj() * yi;
                    energy += xi.norm_sqr();
                }
                add_phase_correlation(quantizer, c, 1.0, &mut ll_cond);
                ll_cond.iter_mut().for_each(|v| *v -= energy);
                for yi in &yp {
                    let corr: Vec<Complex64> = alphabet.symbols.iter().map(|s| s.conj() * yi).collect();
                    mixture_from_correlations(quantizer, &corr, &energies, &mut terms, &mut ll_mix);
                }
            }
            Mixture::Enumerated { images, energies } => {
                let hx = params.apply_matrix(&x);
                let c: Complex64 = hx.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
                let energy: f64 = hx.iter().map(|z| z.norm_sqr()).sum();
                add_phase_correlation(quantizer, c, 1.0, &mut ll_cond);
                ll_cond.iter_mut().for_each(|v| *v -= energy);
                let corr: Vec<Complex64> = images
                    .iter()
                    .map(|v| v.iter().zip(&y).map(|(a, b)| a.conj() * b).sum())
                    .collect();
                mixture_from_correlations(quantizer, &corr, energies, &mut terms, &mut ll_mix);
            }
            Mixture::Subset => {
                let hx = params.apply_matrix(&x);
                let c: Complex64 = hx.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
                let energy: f64 = hx.iter().map(|z| z.norm_sqr()).sum();
                add_phase_correlation(quantizer, c, 1.0, &mut ll_cond);
                ll_cond.iter_mut().for_each(|v| *v -= energy);
                let mut corr = Vec::with_capacity(MIXTURE_SUBSET);
                let mut en = Vec::with_capacity(MIXTURE_SUBSET);
                for _ in 0..MIXTURE_SUBSET {
                    let v = params.apply_matrix(&alphabet.random_vector(m, &mut rng));
                    corr.push(v.iter().zip(&y).map(|(a, b)| a.conj() * b).sum());
                    en.push(v.iter().map(|z| z.norm_sqr()).sum());
                }
                mixture_from_correlations(quantizer, &corr, &en, &mut terms, &mut ll_mix);
            }
        }
        let log_cond = cond.step(&ll_cond, k)?;
        let log_mix = mix.step(&ll_mix, k)?;
        if k >= config.burn_in {
            out.push(log_cond - log_mix);
        }
        let step: f64 = rng.sample(StandardNormal);
        theta = wrap_2pi(theta + params.sigma_delta * step);
    }
    Ok(out)
}

/// Mixture over input vectors given their correlations `(Hv)ᴴy` and
/// energies `‖Hv‖²`, minus the log of the number of vectors.
fn mixture_from_correlations(
    quantizer: &PhaseQuantizer,
    corr: &[Complex64],
    energies: &[f64],
    terms: &mut [f64],
    out: &mut [f64],
) {
    let n = corr.len();
    let pairs: Vec<(f64, f64)> = corr.iter().map(|a| (2.0 * a.re, 2.0 * a.im)).collect();
    let log_n = (n as f64).ln();
    for (q, o) in out.iter_mut().enumerate() {
        let (c, s) = (quantizer.cos[q], quantizer.sin[q]);
        let mut m = f64::NEG_INFINITY;
        for ((t, &(re, im)), &e) in terms[..n].iter_mut().zip(&pairs).zip(energies) {
            *t = c * re + s * im - e;
            m = m.max(*t);
        }
        let sum: f64 = terms[..n].iter().map(|t| (t - m).exp()).sum();
        *o += m + sum.ln() - log_n;
    }
}

/// Controls for the past-conditioned phase-entropy estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveConfig {
    pub block_length: usize,
    pub n_blocks: usize,
    pub seed: u64,
    /// Pilot symbols observed before the first sample of every block.
    pub past_window: usize,
    /// Double the window until the estimate settles.
    pub adaptive: bool,
}

impl PredictiveConfig {
    pub fn new(block_length: usize, n_blocks: usize, seed: u64) -> Self {
        Self {
            block_length,
            n_blocks,
            seed,
            past_window: DEFAULT_PAST_WINDOW,
            adaptive: true,
        }
    }
}

/// Largest number of window doublings tried by the adaptive search.
const MAX_DOUBLINGS: usize = 3;

/// Predictive phase densities `p(θ₀ | past pilots)` sampled along stationary
/// pilot sequences, ready to be combined with the current observation at any
/// amplitude `ξ`.
#[derive(Debug, Clone)]
pub struct ConditionalPhaseEntropy {
    sigma: f64,
    xi_max: f64,
    harmonics: usize,
    /// `e^{−n²σ²/2}` for `n = 0..=harmonics`.
    increment_coeffs: Vec<f64>,
    /// Per block: true phase, current-symbol noise and `W_n` rows.
    blocks: Vec<PredictiveBlock>,
    past_window: usize,
    seed: u64,
}

#[derive(Debug, Clone)]
struct PredictiveBlock {
    theta: Vec<f64>,
    noise: Vec<Complex64>,
    /// Row-major `samples × harmonics` moments `Σ_q w_q e^{inθ_q}`, `n ≥ 1`.
    moments: Vec<Complex64>,
}

impl ConditionalPhaseEntropy {
    pub fn build(
        params: &ChannelParams,
        quantizer: &PhaseQuantizer,
        config: &PredictiveConfig,
    ) -> Result<Self> {
        check_quantizer(params, quantizer)?;
        if config.block_length < MIN_BLOCK_LENGTH {
            return Err(Error::config(format!(
                "block_length must be >= {MIN_BLOCK_LENGTH}, got {}",
                config.block_length
            )));
        }
        if config.n_blocks == 0 {
            return Err(Error::config("n_blocks must be >= 1"));
        }
        let mut window = config.past_window.max(DEFAULT_BURN_IN);
        let mut current = Self::build_fixed(params, quantizer, config, window)?;
        if !config.adaptive {
            return Ok(current);
        }
        let mut previous = current.predictive_entropy();
        for _ in 0..MAX_DOUBLINGS {
            window *= 2;
            let next = Self::build_fixed(params, quantizer, config, window)?;
            let est = next.predictive_entropy();
            current = next;
            if (est.value - previous.value).abs() < 0.5 * est.std_error.max(previous.std_error) {
                break;
            }
            previous = est;
        }
        Ok(current)
    }

    fn build_fixed(
        params: &ChannelParams,
        quantizer: &PhaseQuantizer,
        config: &PredictiveConfig,
        window: usize,
    ) -> Result<Self> {
        let wg = WrappedGaussian::new(params.sigma_delta)?;
        let harmonics = wg.fourier_cutoff().min(4 * quantizer.q_levels()).max(1);
        let increment_coeffs = (0..=harmonics).map(|n| wg.fourier_coefficient(n)).collect();
        let blocks = (0..config.n_blocks)
            .into_par_iter()
            .map(|b| {
                predictive_block(params, quantizer, config, window, harmonics, b as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sigma: params.sigma_delta,
            xi_max: params.snr.sqrt(),
            harmonics,
            increment_coeffs,
            blocks,
            past_window: window,
            seed: config.seed,
        })
    }

    pub fn past_window(&self) -> usize {
        self.past_window
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_samples(&self) -> usize {
        self.blocks.iter().map(|b| b.theta.len()).sum()
    }

    /// `h(θ₀ | past)` with no current observation.
    pub fn predictive_entropy(&self) -> McEstimate {
        self.estimate_with(|_| (f64::INFINITY, 0.0))
    }

    /// `h(θ₀ + φ₀(ξ²) | past pilots, |ξ + z₀|)` in nats.
    pub fn estimate(&self, xi: f64) -> Result<McEstimate> {
        if !(xi >= 0.0) || xi > self.xi_max * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "xi must lie in [0, {}], got {xi}",
                self.xi_max
            )));
        }
        Ok(self.estimate_with(|z| {
            let w = z + xi;
            (2.0 * w.norm() * xi, w.arg())
        }))
    }

    /// `current(z₀)` returns the von Mises concentration and phase offset of
    /// the current observation; an infinite concentration means the phase
    /// itself is evaluated.
    fn estimate_with<F>(&self, current: F) -> McEstimate
    where
        F: Fn(Complex64) -> (f64, f64) + Sync,
    {
        let h = self.harmonics;
        let samples: Vec<Vec<f64>> = self
            .blocks
            .par_iter()
            .map(|block| {
                let mut ratios = vec![0.0; h + 1];
                block
                    .theta
                    .iter()
                    .zip(&block.noise)
                    .zip(block.moments.chunks_exact(h))
                    .map(|((&theta, &z), moments)| {
                        let (kappa, offset) = current(z);
                        if kappa.is_infinite() {
                            ratios.iter_mut().for_each(|r| *r = 1.0);
                        } else {
                            bessel_ratios_into(kappa, &mut ratios);
                        }
                        let u = theta + offset;
                        let step = Complex64::from_polar(1.0, u);
                        let mut rot = step;
                        let mut acc = 0.0;
                        for n in 1..=h {
                            let c = self.increment_coeffs[n] * ratios[n];
                            if c < 1e-17 {
                                break;
                            }
                            acc += c * (rot * moments[n - 1].conj()).re;
                            rot *= step;
                        }
                        let density = ((1.0 + 2.0 * acc) / TAU).max(f64::MIN_POSITIVE);
                        -density.ln()
                    })
                    .collect()
            })
            .collect();
        batch_mean_estimate(&samples, BATCH_SIZE, self.seed)
    }
}

fn predictive_block(
    params: &ChannelParams,
    quantizer: &PhaseQuantizer,
    config: &PredictiveConfig,
    window: usize,
    harmonics: usize,
    block: u64,
) -> Result<PredictiveBlock> {
    let len = config.block_length;
    let q = quantizer.q_levels();
    let sigma = params.sigma_delta;
    let pilot_scale = 1.0 / params.snr.sqrt();
    // Each time step owns its random numbers, so lengthening the window only
    // prepends steps and leaves every later draw unchanged.
    let draws = |t: i64| {
        let mut r = rng::stream(config.seed, &[TAG_PILOT, block, t as u64]);
        let delta: f64 = r.sample::<f64, _>(StandardNormal) * sigma;
        let pilot = rng::complex_gaussian(&mut r);
        let current = rng::complex_gaussian(&mut r);
        (delta, pilot, current)
    };
    let theta0 = rng::stream(config.seed, &[TAG_PILOT, block, u64::MAX]).gen::<f64>() * TAU;
    let start = -(window as i64);
    let steps: Vec<(f64, Complex64, Complex64)> = (start..len as i64).map(draws).collect();
    // θ_t for t in [start, len): forward from θ₀, backward below it.
    let mut theta = vec![0.0; steps.len()];
    let origin = window;
    theta[origin] = theta0;
    for i in origin + 1..steps.len() {
        theta[i] = wrap_2pi(theta[i - 1] + steps[i - 1].0);
    }
    for i in (0..origin).rev() {
        theta[i] = wrap_2pi(theta[i + 1] - steps[i].0);
    }
    let mut filter = ForwardFilter::uniform(quantizer);
    let mut loglik = vec![0.0; q];
    let mut out = PredictiveBlock {
        theta: Vec::with_capacity(len),
        noise: Vec::with_capacity(len),
        moments: Vec::with_capacity(len * harmonics),
    };
    for (i, &(_, pilot, current)) in steps.iter().enumerate() {
        if i >= origin {
            out.theta.push(theta[i]);
            out.noise.push(current);
            push_moments(quantizer, filter.posterior(), harmonics, &mut out.moments);
        }
        let u = theta[i] + (Complex64::new(1.0, 0.0) + pilot * pilot_scale).arg();
        for (l, &g) in loglik.iter_mut().zip(quantizer.grid()) {
            *l = rician_log_pdf_unchecked(u - g, params.snr);
        }
        filter.step(&loglik, i)?;
    }
    Ok(out)
}

fn push_moments(quantizer: &PhaseQuantizer, weights: &[f64], harmonics: usize, out: &mut Vec<Complex64>) {
    let base = out.len();
    out.resize(base + harmonics, Complex64::new(0.0, 0.0));
    let dst = &mut out[base..];
    for ((&w, &c), &s) in weights.iter().zip(&quantizer.cos).zip(&quantizer.sin) {
        if w < 1e-300 {
            continue;
        }
        let step = Complex64::new(c, s);
        let mut rot = step * w;
        for d in dst.iter_mut() {
            *d += rot;
            rot *= step;
        }
    }
}

/// One-shot `h(θ₀ + φ₀(ξ²) | {θ_l + φ_l(ρ)}_{l<0}, |ξ+z₀|)` in nats.
pub fn conditional_phase_entropy(
    xi: f64,
    params: &ChannelParams,
    quantizer: &PhaseQuantizer,
    block_length: usize,
    n_blocks: usize,
    seed: u64,
) -> Result<McEstimate> {
    let config = PredictiveConfig::new(block_length, n_blocks, seed);
    ConditionalPhaseEntropy::build(params, quantizer, &config)?.estimate(xi)
}
