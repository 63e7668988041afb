//! Adaptive Gauss–Kronrod (7/15) integration plus a periodic trapezoid rule.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Number of nodes of the first periodic trapezoid pass.
pub const PERIODIC_NODES: usize = 2048;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_panels: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`, splitting first at each of `breaks`
    /// that falls strictly inside the interval.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<f64> {
        let mut edges = vec![a];
        edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        edges.push(b);
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let mut heap: BinaryHeap<Panel> = edges
            .windows(2)
            .map(|w| gauss_kronrod(&f, w[0], w[1]))
            .collect();
        loop {
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
            if !value.is_finite() {
                return Err(Error::Quadrature {
                    estimate: value,
                    error,
                });
            }
            if error <= self.abs_tol.max(self.rel_tol * value.abs()) {
                return Ok(value);
            }
            if heap.len() >= self.max_panels {
                return Err(Error::Quadrature {
                    estimate: value,
                    error,
                });
            }
            let worst = heap.pop().expect("at least one panel");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Panel cannot be split further in floating point.
                return Ok(value);
            }
            heap.push(gauss_kronrod(&f, worst.a, mid));
            heap.push(gauss_kronrod(&f, mid, worst.b));
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_with_breaks(f, a, b, &[])
    }

    /// Integrates a function concentrated around `center` with scale `width`,
    /// adding breakpoints at `center ± width·2^k` out to the interval ends.
    pub fn integrate_peaked<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        center: f64,
        width: f64,
    ) -> Result<f64> {
        let mut breaks = vec![center];
        let mut w = width;
        while w < (b - a) && breaks.len() < 200 {
            breaks.push(center - w);
            breaks.push(center + w);
            w *= 2.0;
        }
        self.integrate_with_breaks(f, a, b, &breaks)
    }

    /// Integrates over `[a, ∞)` through the map `x = a + scale·t/(1−t)`.
    pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        scale: f64,
    ) -> Result<f64> {
        let mapped = |t: f64| {
            let one_minus = 1.0 - t;
            let x = a + scale * t / one_minus;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (one_minus * one_minus)
            }
        };
        self.integrate(mapped, 0.0, 1.0)
    }

    /// Integrates a 2π-periodic function over one period.
    ///
    /// Runs the trapezoid rule at [`PERIODIC_NODES`] and twice that; if the
    /// two disagree beyond tolerance the adaptive rule takes over.
    pub fn integrate_periodic<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let n = PERIODIC_NODES;
        let h = 2.0 * PI / n as f64;
        let coarse: f64 = (0..n).map(|k| f(k as f64 * h)).sum::<f64>() * h;
        let odd: f64 = (0..n).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() * h;
        let fine = 0.5 * (coarse + odd);
        if (fine - coarse).abs() <= self.abs_tol.max(self.rel_tol * fine.abs()) {
            return Ok(fine);
        }
        self.integrate(f, 0.0, 2.0 * PI)
    }
}
