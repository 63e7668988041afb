//! Capacity bounds: the duality upper bound and its simplifications, the
//! high-SNR expansion, the peak/average gap and the non-unitary shifts.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{ChannelParams, Constellation};
use crate::entropy::{
    entropy_abs_sq, expect_log_noncentral, DeltaPlusPhaseEntropy, McEstimate, DEFAULT_MC_SAMPLES,
};
use crate::error::{Error, Result};
use crate::inforate::{
    qam_rate, ConditionalPhaseEntropy, PhaseQuantizer, PredictiveConfig, RateConfig,
    DEFAULT_BLOCK_LENGTH, DEFAULT_N_BLOCKS, DEFAULT_PAST_WINDOW, DEFAULT_Q_LEVELS,
};
use crate::mathcore::{linear_to_db, log_gamma, wrapped_gaussian_entropy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    U,
    Us,
    Asymptotic,
    MemorylessPlusCorr,
    QamLower,
    NonunitaryUpper,
    NonunitaryLower,
}

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        BoundKind::U,
        BoundKind::Us,
        BoundKind::Asymptotic,
        BoundKind::MemorylessPlusCorr,
        BoundKind::QamLower,
        BoundKind::NonunitaryUpper,
        BoundKind::NonunitaryLower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::U => "U",
            BoundKind::Us => "U_s",
            BoundKind::Asymptotic => "asymptotic",
            BoundKind::MemorylessPlusCorr => "memoryless_plus_corr",
            BoundKind::QamLower => "qam_lower",
            BoundKind::NonunitaryUpper => "nonunitary_upper",
            BoundKind::NonunitaryLower => "nonunitary_lower",
        }
    }

    /// Whether records of this kind carry an `(α, ξ)` optimum.
    pub fn optimizes(self) -> bool {
        matches!(
            self,
            BoundKind::U | BoundKind::Us | BoundKind::MemorylessPlusCorr | BoundKind::NonunitaryUpper
        )
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown bound kind '{s}'")))
    }
}

/// One result row.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRecord {
    pub snr_db: f64,
    pub kind: BoundKind,
    pub value_bits: f64,
    pub std_error_bits: f64,
    pub opt_alpha: Option<f64>,
    pub opt_xi: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub meta: String,
}

impl BoundRecord {
    fn exact(kind: BoundKind, snr: f64, nats: f64, meta: impl Into<String>) -> Self {
        Self {
            snr_db: linear_to_db(snr),
            kind,
            value_bits: nats / LN_2,
            std_error_bits: 0.0,
            opt_alpha: None,
            opt_xi: None,
            n_samples: 0,
            seed: 0,
            meta: meta.into(),
        }
    }
}

/// Parameters of the Gamma output law used by the duality bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityParams {
    pub alpha: f64,
    pub beta: f64,
    pub d_alpha: f64,
}

impl DualityParams {
    pub fn new(alpha: f64, antennas: usize, snr: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self {
            alpha,
            beta: (snr + antennas as f64) / alpha,
            d_alpha: d_alpha(alpha, antennas)?,
        })
    }

    /// `α log((ρ+M)/α) + d_α`, the part of the bound that does not involve ξ.
    pub fn constant(&self) -> f64 {
        self.alpha * self.beta.ln() + self.d_alpha
    }
}

/// `log Γ(α) − log Γ(M) − M + 1`.
pub fn d_alpha(alpha: f64, antennas: usize) -> Result<f64> {
    let m = antennas as f64;
    Ok(log_gamma(alpha)? - log_gamma(m)? - m + 1.0)
}

/// Source of the phase-entropy term subtracted in `g_α`.
pub trait PhaseEntropyTerm: Sync {
    fn estimate(&self, xi: f64) -> Result<McEstimate>;
}

impl PhaseEntropyTerm for ConditionalPhaseEntropy {
    fn estimate(&self, xi: f64) -> Result<McEstimate> {
        ConditionalPhaseEntropy::estimate(self, xi)
    }
}

impl PhaseEntropyTerm for DeltaPlusPhaseEntropy {
    fn estimate(&self, xi: f64) -> Result<McEstimate> {
        DeltaPlusPhaseEntropy::estimate(self, xi)
    }
}

/// A term that does not depend on ξ.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTerm(pub McEstimate);

impl PhaseEntropyTerm for ConstantTerm {
    fn estimate(&self, _xi: f64) -> Result<McEstimate> {
        Ok(self.0)
    }
}

fn check_xi(xi: f64, snr: f64) -> Result<()> {
    if !(xi >= 0.0) || xi > snr.sqrt() * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "xi must lie in [0, sqrt(snr)] = [0, {}], got {xi}",
            snr.sqrt()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct XiTerms {
    log_noncentral: f64,
    abs_sq_entropy: f64,
    phase: McEstimate,
}

fn xi_terms(xi: f64, params: &ChannelParams, term: &dyn PhaseEntropyTerm) -> Result<XiTerms> {
    Ok(XiTerms {
        log_noncentral: expect_log_noncentral(xi, params.antennas)?,
        abs_sq_entropy: entropy_abs_sq(xi)?,
        phase: term.estimate(xi)?,
    })
}

fn g_from_terms(alpha: f64, xi: f64, params: &ChannelParams, t: &XiTerms) -> McEstimate {
    let m = params.antennas as f64;
    let value = (m - alpha) * t.log_noncentral + alpha * (xi * xi + m) / (params.snr + m)
        - t.abs_sq_entropy
        - t.phase.value;
    McEstimate { value, ..t.phase }
}

/// `g_α(ξ, ρ)` in nats, with the Monte-Carlo error of the phase term.
pub fn g_alpha(
    alpha: f64,
    xi: f64,
    params: &ChannelParams,
    term: &dyn PhaseEntropyTerm,
) -> Result<McEstimate> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
    }
    check_xi(xi, params.snr)?;
    Ok(g_from_terms(alpha, xi, params, &xi_terms(xi, params, term)?))
}

/// Line-search settings for the α/ξ optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchControls {
    pub alpha_min: f64,
    /// Upper end of the α bracket as a multiple of `M`.
    pub alpha_max_factor: f64,
    /// Final bracket width in `log α`.
    pub alpha_tol: f64,
    pub xi_grid: usize,
    /// Final bracket width in ξ relative to `√ρ`.
    pub xi_tol: f64,
    pub max_iterations: usize,
}

impl Default for SearchControls {
    fn default() -> Self {
        Self {
            alpha_min: 1e-3,
            alpha_max_factor: 10.0,
            alpha_tol: 1e-10,
            xi_grid: 64,
            xi_tol: 1e-8,
            max_iterations: 200,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section_min<F>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iterations: usize,
    what: &'static str,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while (b - a).abs() > tol {
        iterations += 1;
        if iterations > max_iterations {
            let (x, v) = if fc < fd { (c, fc) } else { (d, fd) };
            return Err(Error::OptimizationFailure {
                what,
                iterations,
                best_x: x,
                best_value: v,
            });
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Result of the `min_α max_ξ` problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityOptimum {
    /// Nats.
    pub value: f64,
    pub std_error: f64,
    pub alpha: f64,
    pub xi: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Evaluates `α log((ρ+M)/α) + d_α + log 2π + max_ξ g_α(ξ)` and minimizes it
/// over α, memoizing the ξ-only terms.
pub struct DualityObjective<'a> {
    params: &'a ChannelParams,
    term: &'a dyn PhaseEntropyTerm,
    controls: SearchControls,
    grid: Vec<(f64, XiTerms)>,
    cache: RefCell<HashMap<u64, XiTerms>>,
}

impl<'a> DualityObjective<'a> {
    pub fn new(
        params: &'a ChannelParams,
        term: &'a dyn PhaseEntropyTerm,
        controls: SearchControls,
    ) -> Result<Self> {
        if controls.xi_grid < 3 {
            return Err(Error::config("xi grid needs at least 3 points"));
        }
        let xi_max = params.snr.sqrt();
        let n = controls.xi_grid;
        let grid = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = if i + 1 == n { xi_max } else { xi_max * i as f64 / (n - 1) as f64 };
                xi_terms(xi, params, term).map(|t| (xi, t))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            term,
            controls,
            grid,
            cache: RefCell::new(HashMap::new()),
        })
    }

    fn terms(&self, xi: f64) -> Result<XiTerms> {
        if let Some(t) = self.cache.borrow().get(&xi.to_bits()) {
            return Ok(*t);
        }
        let t = xi_terms(xi, self.params, self.term)?;
        self.cache.borrow_mut().insert(xi.to_bits(), t);
        Ok(t)
    }

    /// `max_ξ g_α(ξ)` with its maximizer.
    pub fn inner_max(&self, alpha: f64) -> Result<(f64, McEstimate)> {
        let values: Vec<McEstimate> = self
            .grid
            .iter()
            .map(|(xi, t)| g_from_terms(alpha, *xi, self.params, t))
            .collect();
        let best = (0..values.len())
            .max_by(|&i, &j| values[i].value.total_cmp(&values[j].value))
            .unwrap_or(0);
        let lo = self.grid[best.saturating_sub(1)].0;
        let hi = self.grid[(best + 1).min(self.grid.len() - 1)].0;
        let tol = self.controls.xi_tol * self.params.snr.sqrt();
        let (xi, neg) = golden_section_min(
            |xi| Ok(-g_from_terms(alpha, xi, self.params, &self.terms(xi)?).value),
            lo,
            hi,
            tol,
            self.controls.max_iterations,
            "inner maximization over xi",
        )?;
        if -neg > values[best].value {
            let t = self.terms(xi)?;
            Ok((xi, g_from_terms(alpha, xi, self.params, &t)))
        } else {
            Ok((self.grid[best].0, values[best]))
        }
    }

    /// The bracketed objective at a given α.
    pub fn objective(&self, alpha: f64) -> Result<(f64, McEstimate)> {
        let dp = DualityParams::new(alpha, self.params.antennas, self.params.snr)?;
        let (xi, g) = self.inner_max(alpha)?;
        Ok((
            xi,
            McEstimate {
                value: dp.constant() + TAU.ln() + g.value,
                ..g
            },
        ))
    }

    pub fn minimize(&self) -> Result<DualityOptimum> {
        let m = self.params.antennas as f64;
        let lo = self.controls.alpha_min.ln();
        let hi = (self.controls.alpha_max_factor * m).ln();
        if !(lo < hi) {
            return Err(Error::config("alpha bracket is empty"));
        }
        let (log_alpha, _) = golden_section_min(
            |la| Ok(self.objective(la.exp())?.1.value),
            lo,
            hi,
            self.controls.alpha_tol,
            self.controls.max_iterations,
            "outer minimization over alpha",
        )?;
        let alpha = log_alpha.exp();
        let (xi, est) = self.objective(alpha)?;
        Ok(DualityOptimum {
            value: est.value,
            std_error: est.std_error,
            alpha,
            xi,
            n_samples: est.n_samples,
            seed: est.seed,
        })
    }
}

/// Monte-Carlo and quantizer settings for the bound estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSettings {
    pub search: SearchControls,
    /// Amplitude samples for the one-step phase entropy.
    pub n_samples: usize,
    pub q_levels: usize,
    pub block_length: usize,
    pub n_blocks: usize,
    pub past_window: usize,
    pub adaptive_window: bool,
    pub seed: u64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            search: SearchControls::default(),
            n_samples: DEFAULT_MC_SAMPLES,
            q_levels: DEFAULT_Q_LEVELS,
            block_length: DEFAULT_BLOCK_LENGTH,
            n_blocks: DEFAULT_N_BLOCKS,
            past_window: DEFAULT_PAST_WINDOW,
            adaptive_window: true,
            seed: 0,
        }
    }
}

fn require_bound_params(params: &ChannelParams) -> Result<()> {
    if !(params.sigma_delta > 0.0) {
        return Err(Error::domain("bounds require sigma_delta > 0"));
    }
    if !params.is_unitary() {
        return Err(Error::domain(
            "duality bounds assume a unitary channel; use nonunitary_bounds",
        ));
    }
    Ok(())
}

fn optimum_record(
    kind: BoundKind,
    params: &ChannelParams,
    opt: DualityOptimum,
    meta: String,
) -> BoundRecord {
    BoundRecord {
        snr_db: linear_to_db(params.snr),
        kind,
        value_bits: opt.value / LN_2,
        std_error_bits: opt.std_error / LN_2,
        opt_alpha: Some(opt.alpha),
        opt_xi: Some(opt.xi),
        n_samples: opt.n_samples,
        seed: opt.seed,
        meta,
    }
}

/// The bound with the full-memory phase term.
pub fn upper_bound_u(params: &ChannelParams, settings: &BoundSettings) -> Result<BoundRecord> {
    require_bound_params(params)?;
    let quantizer = PhaseQuantizer::new(settings.q_levels, params.sigma_delta)?;
    let config = PredictiveConfig {
        block_length: settings.block_length,
        n_blocks: settings.n_blocks,
        seed: settings.seed,
        past_window: settings.past_window,
        adaptive: settings.adaptive_window,
    };
    let term = ConditionalPhaseEntropy::build(params, &quantizer, &config)?;
    let opt = DualityObjective::new(params, &term, settings.search)?.minimize()?;
    Ok(optimum_record(
        BoundKind::U,
        params,
        opt,
        format!("q_levels={};past_window={}", settings.q_levels, term.past_window()),
    ))
}

/// The bound with the one-step phase term `h(Δ + φ₀ | r)`.
pub fn upper_bound_us(params: &ChannelParams, settings: &BoundSettings) -> Result<BoundRecord> {
    require_bound_params(params)?;
    let term = DeltaPlusPhaseEntropy::new(
        params.sigma_delta,
        params.snr.sqrt(),
        settings.n_samples,
        settings.seed,
    )?;
    let opt = DualityObjective::new(params, &term, settings.search)?.minimize()?;
    Ok(optimum_record(BoundKind::Us, params, opt, String::new()))
}

/// Memoryless duality bound plus the SNR-independent `log 2π − h(Δ)`.
pub fn memoryless_plus_correction(
    params: &ChannelParams,
    settings: &BoundSettings,
) -> Result<BoundRecord> {
    require_bound_params(params)?;
    let h_delta = wrapped_gaussian_entropy(params.sigma_delta)?;
    let term = ConstantTerm(McEstimate::exact(h_delta));
    let opt = DualityObjective::new(params, &term, settings.search)?.minimize()?;
    Ok(optimum_record(
        BoundKind::MemorylessPlusCorr,
        params,
        opt,
        format!("correction_nats={}", TAU.ln() - h_delta),
    ))
}

/// High-SNR capacity expansion in nats.
pub fn asymptotic_capacity_nats(antennas: usize, sigma_delta: f64, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::domain(format!("snr must be > 0, got {snr}")));
    }
    let m = antennas as f64 - 0.5;
    Ok(m * snr.ln() - m.ln() - log_gamma(antennas as f64)? + 0.5 * PI.ln() - m
        - wrapped_gaussian_entropy(sigma_delta)?)
}

pub fn asymptotic_capacity(params: &ChannelParams) -> Result<BoundRecord> {
    let nats = asymptotic_capacity_nats(params.antennas, params.sigma_delta, params.snr)?;
    Ok(BoundRecord::exact(BoundKind::Asymptotic, params.snr, nats, ""))
}

/// High-SNR capacity loss of the peak constraint against the average one, nats.
pub fn avg_peak_gap(antennas: usize) -> Result<f64> {
    if antennas == 0 {
        return Err(Error::domain("antenna count must be >= 1"));
    }
    let m = antennas as f64 - 0.5;
    Ok(log_gamma(m)? - (m - 1.0) * (1.0 / m).ln() + m)
}

/// Brackets the capacity of a non-unitary channel between the unitary
/// curve evaluated at `λ_min ρ` and at `λ_max ρ`.
pub fn nonunitary_bounds<F>(curve: F, lambda_min: f64, lambda_max: f64, snr: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lambda_min > 0.0) || !(lambda_max >= lambda_min) {
        return Err(Error::domain(format!(
            "need 0 < lambda_min <= lambda_max, got {lambda_min}, {lambda_max}"
        )));
    }
    Ok((curve(lambda_min * snr)?, curve(lambda_max * snr)?))
}

/// Achievable rate of uniform i.i.d. per-antenna QAM as a bound record.
pub fn qam_lower(
    params: &ChannelParams,
    constellation: &Constellation,
    q_levels: usize,
    config: &RateConfig,
) -> Result<BoundRecord> {
    let quantizer = PhaseQuantizer::new(q_levels, params.sigma_delta)?;
    let rate = qam_rate(params, constellation, &quantizer, config)?;
    Ok(BoundRecord {
        snr_db: linear_to_db(params.snr),
        kind: BoundKind::QamLower,
        value_bits: rate.rate,
        std_error_bits: rate.std_error,
        opt_alpha: None,
        opt_xi: None,
        n_samples: rate.block_length * rate.n_blocks,
        seed: rate.seed,
        meta: format!(
            "{};q_levels={q_levels}{}",
            constellation.name,
            if rate.subset_mixture { ";subset_mixture" } else { "" }
        ),
    })
}
