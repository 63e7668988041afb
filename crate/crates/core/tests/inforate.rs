use std::f64::consts::{LN_2, TAU};

use phasenoise_capacity::channel::{ChannelParams, Constellation, Normalization};
use phasenoise_capacity::entropy::{entropy_delta_plus_phase, McEstimate};
use phasenoise_capacity::inforate::{
    qam_rate, ConditionalPhaseEntropy, PhaseQuantizer, PredictiveConfig, RateConfig,
};
use phasenoise_capacity::mathcore::db_to_linear;
use phasenoise_capacity::rng;

fn sigma6() -> f64 {
    6f64.to_radians()
}

/// Mutual information of uniform `symbols` over `y = s + w`, by Monte Carlo.
fn awgn_mi_oracle(symbols: &[num_complex::Complex64], n: usize, seed: u64) -> McEstimate {
    let mut r = rng::stream(seed, &[1]);
    let log_m = (symbols.len() as f64).ln();
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let s = symbols[i % symbols.len()];
            let w = rng::complex_gaussian(&mut r);
            let terms: Vec<f64> = symbols.iter().map(|t| w.norm_sqr() - (s - t + w).norm_sqr()).collect();
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            (log_m - lse) / LN_2
        })
        .collect();
    McEstimate::from_samples(&samples, seed)
}

#[test]
fn coherent_limit_matches_awgn_oracle() {
    let sigma = 1e-6;
    let snr = db_to_linear(10.0);
    let params = ChannelParams::unitary(1, sigma, snr).unwrap();
    let quant = PhaseQuantizer::new(200, sigma).unwrap();
    let qam = Constellation::qam(64).unwrap();
    let mut cfg = RateConfig::new(2000, 4, 11);
    cfg.initial_phase = Some(0.0);
    let rate = qam_rate(&params, &qam, &quant, &cfg).unwrap();
    let scaled = qam.normalized(snr, 1, Normalization::Peak);
    let oracle = awgn_mi_oracle(&scaled.symbols, 64 * 3000, 3);
    let tol = 3.0 * (rate.std_error.powi(2) + oracle.std_error.powi(2)).sqrt();
    assert!(
        (rate.rate - oracle.value).abs() < tol,
        "rate {} ± {} vs oracle {} ± {}",
        rate.rate,
        rate.std_error,
        oracle.value,
        oracle.std_error
    );
}

#[test]
fn psk_under_uniform_phase_carries_nothing() {
    let params = ChannelParams::unitary(1, 10.0, db_to_linear(20.0)).unwrap();
    let quant = PhaseQuantizer::new(100, 10.0).unwrap();
    let psk = Constellation::psk(8).unwrap();
    let r = qam_rate(&params, &psk, &quant, &RateConfig::new(1000, 2, 4)).unwrap();
    assert!(r.rate.abs() < 3.0 * r.std_error + 1e-3, "{r:?}");
}

#[test]
fn quantizer_doubling_is_stable() {
    let qam = Constellation::qam(64).unwrap();
    for db in [10.0, 20.0] {
        let params = ChannelParams::unitary(1, sigma6(), db_to_linear(db)).unwrap();
        let cfg = RateConfig::new(1000, 2, 8);
        let coarse = qam_rate(&params, &qam, &PhaseQuantizer::new(200, sigma6()).unwrap(), &cfg).unwrap();
        let fine = qam_rate(&params, &qam, &PhaseQuantizer::new(400, sigma6()).unwrap(), &cfg).unwrap();
        assert!((coarse.rate - fine.rate).abs() < 0.02, "{db} dB: {} vs {}", coarse.rate, fine.rate);
    }
}

#[test]
fn rate_grows_with_snr() {
    let qam = Constellation::qam(16).unwrap();
    let quant = PhaseQuantizer::new(200, sigma6()).unwrap();
    let cfg = RateConfig::new(1000, 2, 2);
    let rates: Vec<_> = [0.0, 8.0, 16.0]
        .iter()
        .map(|&db| {
            let p = ChannelParams::unitary(2, sigma6(), db_to_linear(db)).unwrap();
            qam_rate(&p, &qam, &quant, &cfg).unwrap()
        })
        .collect();
    for w in rates.windows(2) {
        let slack = 3.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        assert!(w[1].rate + slack >= w[0].rate);
    }
    for r in &rates {
        assert!(r.rate > -3.0 * r.std_error && r.rate < 2.0 * 4.0 + 3.0 * r.std_error);
    }
}

#[test]
fn memory_conditioning_is_less_informative_than_knowing_the_last_phase() {
    let snr = db_to_linear(20.0);
    let params = ChannelParams::unitary(1, sigma6(), snr).unwrap();
    let quant = PhaseQuantizer::new(200, sigma6()).unwrap();
    let c = ConditionalPhaseEntropy::build(&params, &quant, &PredictiveConfig::new(1000, 2, 1)).unwrap();
    let mut last = f64::INFINITY;
    for xi in [0.0, 1.0, 3.0, snr.sqrt()] {
        let full = c.estimate(xi).unwrap();
        let one_step = entropy_delta_plus_phase(xi, sigma6(), 20_000, 2).unwrap();
        let slack = 3.0 * (full.std_error.powi(2) + one_step.std_error.powi(2)).sqrt();
        assert!(full.value + slack >= one_step.value, "xi {xi}: {full:?} vs {one_step:?}");
        assert!(full.value <= TAU.ln() + 3.0 * full.std_error + 1e-12);
        assert!(full.value <= last + 3.0 * full.std_error + 1e-12);
        last = full.value;
    }
}

#[test]
fn uniform_increments_erase_memory() {
    let params = ChannelParams::unitary(1, 10.0, db_to_linear(10.0)).unwrap();
    let quant = PhaseQuantizer::new(100, 10.0).unwrap();
    let mut cfg = PredictiveConfig::new(500, 2, 3);
    cfg.adaptive = false;
    let c = ConditionalPhaseEntropy::build(&params, &quant, &cfg).unwrap();
    let e = c.estimate(params.snr.sqrt()).unwrap();
    assert!((e.value - TAU.ln()).abs() <= 3.0 * e.std_error + 1e-9, "{e:?}");
}

#[test]
fn predictive_entropy_sits_between_increment_and_uniform() {
    let params = ChannelParams::unitary(1, sigma6(), db_to_linear(30.0)).unwrap();
    let quant = PhaseQuantizer::new(200, sigma6()).unwrap();
    let c = ConditionalPhaseEntropy::build(&params, &quant, &PredictiveConfig::new(500, 2, 9)).unwrap();
    let pred = c.predictive_entropy();
    let h_delta = phasenoise_capacity::mathcore::wrapped_gaussian_entropy(sigma6()).unwrap();
    assert!(pred.value > h_delta - 3.0 * pred.std_error);
    assert!(pred.value < h_delta + 0.2);
    assert!(c.past_window() >= 200);
}
