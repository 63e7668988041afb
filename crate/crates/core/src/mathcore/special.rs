//! Special functions: Gamma family, error function and modified Bessel
//! functions of the first kind (log domain).

use std::f64::consts::PI;

use statrs::function::gamma as sf_gamma;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// Below this argument the power series of I0 is used; above it the
// asymptotic expansion has a smallest term far below machine precision.
const I0_SERIES_LIMIT: f64 = 30.0;

pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(sf_gamma::ln_gamma(x))
}

pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(sf_gamma::digamma(x))
}

/// Non-regularized upper incomplete Gamma function Γ(a, x).
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(format!(
            "upper_incomplete_gamma requires a > 0 and x >= 0, got a = {a}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(sf_gamma::gamma(a));
    }
    let q = sf_gamma::checked_gamma_ur(a, x).map_err(|e| Error::domain(e.to_string()))?;
    Ok(q * sf_gamma::gamma(a))
}

// Below this magnitude erf uses its Maclaurin series, above it erfc uses
// the Laplace continued fraction.
const ERF_SERIES_LIMIT: f64 = 1.5;

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/√π Σ (−1)^n x^{2n+1} / (n!(2n+1))
    let x2 = x * x;
    let mut power = x;
    let mut sum = x;
    for n in 1..60 {
        power *= -x2 / n as f64;
        let term = power / (2 * n + 1) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / PI.sqrt()
}

fn erfcx_continued_fraction(y: f64) -> f64 {
    // erfc(y) = e^{-y²}/√π · 1/(y + (1/2)/(y + 1/(y + (3/2)/(y + ...))))
    let mut tail = y;
    for k in (1..=120).rev() {
        tail = y + 0.5 * k as f64 / tail;
    }
    1.0 / (PI.sqrt() * tail)
}

pub fn erf(x: f64) -> f64 {
    if x.abs() < ERF_SERIES_LIMIT {
        erf_series(x)
    } else {
        (1.0 - erfc(x.abs())).copysign(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < -ERF_SERIES_LIMIT {
        2.0 - erfc(-x)
    } else if x < ERF_SERIES_LIMIT {
        1.0 - erf_series(x)
    } else {
        (-x * x).exp() * erfcx_continued_fraction(x)
    }
}

/// Scaled complementary error function `exp(y²)·erfc(y)` for `y ≥ 0`.
pub fn erfcx(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    if y < ERF_SERIES_LIMIT {
        (y * y).exp() * (1.0 - erf_series(y))
    } else {
        erfcx_continued_fraction(y)
    }
}

/// `1 − √π·y·erfcx(y)` for `y ≥ 0`, without cancellation at large `y`.
pub(crate) fn one_minus_sqrt_pi_y_erfcx(y: f64) -> f64 {
    if y <= 10.0 {
        return 1.0 - PI.sqrt() * y * erfcx(y);
    }
    // Σ_{k≥1} (−1)^{k+1} (2k−1)!! / (2y²)^k
    let x = 1.0 / (2.0 * y * y);
    let mut term = x;
    let mut sum = term;
    for k in 2..40 {
        term *= -((2 * k - 1) as f64) * x;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// log I₀(κ).
pub fn log_bessel_i0(kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) {
        return Err(Error::domain(format!(
            "log_bessel_i0 requires kappa >= 0, got {kappa}"
        )));
    }
    Ok(log_i0_unchecked(kappa))
}

pub(crate) fn log_i0_unchecked(kappa: f64) -> f64 {
    if kappa <= I0_SERIES_LIMIT {
        let t = 0.25 * kappa * kappa;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut m = 1.0;
        loop {
            term *= t / (m * m);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            m += 1.0;
        }
        sum.ln()
    } else {
        // I0(κ) ≈ e^κ/√(2πκ) · Σ_k ((2k−1)!!)² / (k! 8^k κ^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * kappa);
            if next > term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        kappa - 0.5 * (2.0 * PI * kappa).ln() + sum.ln()
    }
}

/// Ratios `I_n(κ)/I_0(κ)` for `n = 0..=n_max`.
///
/// Computed by backward recurrence on `I_k/I_{k−1} = 1/(2k/κ + I_{k+1}/I_k)`,
/// started far enough above `n_max` that the starting error has decayed.
pub fn bessel_ratios(kappa: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    bessel_ratios_into(kappa, &mut out);
    out
}

pub(crate) fn bessel_ratios_into(kappa: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    let n_max = out.len() - 1;
    if n_max == 0 {
        return;
    }
    if kappa == 0.0 {
        out[1..].iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    // Starting-error damping is roughly exp(−extra²/κ).
    let extra = 30 + (40.0 * kappa).sqrt().ceil() as usize;
    let start = n_max + extra;
    let nu = start as f64 + 1.0;
    // Amos-type estimate of I_ν/I_{ν−1}.
    let mut ratio = kappa / (nu - 0.5 + ((nu + 0.5).powi(2) + kappa * kappa).sqrt());
    for k in (n_max + 1..=start).rev() {
        ratio = 1.0 / (2.0 * k as f64 / kappa + ratio);
    }
    // `ratio` now holds I_{n_max+1}/I_{n_max}; continue down storing ratios.
    let mut ratios = vec![0.0; n_max + 1];
    for k in (1..=n_max).rev() {
        ratio = 1.0 / (2.0 * k as f64 / kappa + ratio);
        ratios[k] = ratio;
    }
    let mut acc = 1.0;
    for k in 1..=n_max {
        acc *= ratios[k];
        out[k] = acc;
    }
}

/// log I_n(x) for integer order `n ≥ 0`.
pub fn log_bessel_i(order: usize, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("log_bessel_i requires x >= 0, got {x}")));
    }
    if order == 0 {
        return Ok(log_i0_unchecked(x));
    }
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ratios = bessel_ratios(x, order);
    Ok(log_i0_unchecked(x) + ratios[order].ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_i0(k: f64) -> f64 {
        let mut s = 0.0;
        let mut t = 1.0;
        for m in 0..400 {
            if m > 0 {
                t *= (k / 2.0).powi(2) / ((m * m) as f64);
            }
            s += t;
        }
        s
    }

    fn series_in(n: usize, x: f64) -> f64 {
        // Σ_m (x/2)^{2m+n} / (m! (m+n)!)
        let mut s = 0.0;
        for m in 0..300 {
            let lt = (2 * m + n) as f64 * (x / 2.0).ln()
                - sf_gamma::ln_gamma(m as f64 + 1.0)
                - sf_gamma::ln_gamma((m + n) as f64 + 1.0);
            s += lt.exp();
        }
        s
    }

    #[test]
    fn gamma_family_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!((log_gamma(4.0).unwrap() - 6f64.ln()).abs() < 1e-14);
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-13);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-13);
        assert!((upper_incomplete_gamma(2.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        // Γ(1, x) = e^{-x}
        assert!((upper_incomplete_gamma(1.0, 2.5).unwrap() - (-2.5f64).exp()).abs() < 1e-14);
        assert!(log_gamma(0.0).is_err());
        assert!(digamma(-1.0).is_err());
        assert!(upper_incomplete_gamma(0.0, 1.0).is_err());
        assert!(upper_incomplete_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn log_i0_against_series_and_asymptotics() {
        assert_eq!(log_bessel_i0(0.0).unwrap(), 0.0);
        assert!((log_bessel_i0(5.0).unwrap() - series_i0(5.0).ln()).abs() < 1e-9);
        // I0(5) = 27.239871823604...
        assert!((log_bessel_i0(5.0).unwrap() - 27.239_871_823_604_44f64.ln()).abs() < 1e-9);
        for &k in &[0.1, 1.0, 10.0, 29.9, 30.1, 45.0, 90.0] {
            let want = series_i0(k).ln();
            let got = log_bessel_i0(k).unwrap();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "k={k}");
        }
        let k = 1000.0;
        let approx = k - 0.5 * (2.0 * PI * k).ln();
        assert!(((log_bessel_i0(k).unwrap() - approx) / approx).abs() < 1e-4);
        assert!(log_bessel_i0(1e6).unwrap().is_finite());
        assert!(log_bessel_i0(-1.0).is_err());
    }

    #[test]
    fn bessel_ratio_matches_series() {
        for &x in &[0.3, 2.0, 17.0, 60.0] {
            let r = bessel_ratios(x, 6);
            let i0 = series_in(0, x);
            for (n, &got) in r.iter().enumerate() {
                let want = series_in(n, x) / i0;
                assert!((got - want).abs() < 1e-12, "x={x} n={n}: {got} vs {want}");
            }
        }
        assert_eq!(bessel_ratios(0.0, 3), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bessel_ratio_large_argument() {
        // I_n(κ)/I_0(κ) ≈ exp(−n²/(2κ)) (1 + O(1/κ)) for κ ≫ n²
        let k = 2.0e4;
        let r = bessel_ratios(k, 40);
        for n in [1usize, 10, 40] {
            let approx = (-((n * n) as f64) / (2.0 * k)).exp();
            assert!((r[n] - approx).abs() < 1e-3, "n={n}");
        }
        // integer-order log Bessel via recurrence vs series
        let x = 12.0;
        assert!((log_bessel_i(3, x).unwrap() - series_in(3, x).ln()).abs() < 1e-12);
    }

    #[test]
    fn erf_matches_high_order_series() {
        // Taylor series about 0 summed to 400 terms in the log domain.
        fn oracle(x: f64) -> f64 {
            let mut sum = 0.0;
            for n in 0..400 {
                let lt = (2 * n + 1) as f64 * x.abs().ln()
                    - sf_gamma::ln_gamma(n as f64 + 1.0)
                    - ((2 * n + 1) as f64).ln();
                let t = lt.exp();
                sum += if n % 2 == 0 { t } else { -t };
            }
            (sum * 2.0 / PI.sqrt()).copysign(x)
        }
        for &x in &[0.01, 0.3, -0.9, 1.2, 1.49, 1.51] {
            assert!((erf(x) - oracle(x)).abs() < 1e-14, "x={x}");
        }
        assert!((erf(2.0) - 0.995_322_265_018_952_7).abs() < 1e-15);
        assert!((erf(-2.5) + 0.999_593_047_982_555).abs() < 1e-15);
        assert!((erfc(3.0) - 2.209_049_699_858_544e-5).abs() < 1e-19);
        assert!((erfc(-1.0) - 1.842_700_792_949_715).abs() < 1e-15);
        assert_eq!(erf(0.0), 0.0);
    }

    #[test]
    fn erfcx_is_continuous_across_branches() {
        // exp(y²)erfc(y) from 30-digit arithmetic
        let reference = [
            (1.999_999f64, 0.255_395_783_107_009_4),
            (2.0, 0.255_395_676_310_505_74),
            (5.0, 0.110_704_637_733_068_63),
            (20.0, 0.028_174_348_741_051_32),
            (25.0, 0.022_549_572_432_641_36),
        ];
        for (y, want) in reference {
            assert!(((erfcx(y) - want) / want).abs() < 1e-14, "y={y}: {}", erfcx(y));
        }
        // leading asymptote 1/(√π y)
        let y = 1e4;
        assert!((erfcx(y) * PI.sqrt() * y - 1.0).abs() < 1e-8);
        for &y in &[9.99, 10.01, 50.0] {
            let d = one_minus_sqrt_pi_y_erfcx(y);
            assert!(d > 0.0 && (d * 2.0 * y * y - 1.0).abs() < 0.02);
        }
    }
}
