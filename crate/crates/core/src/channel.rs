//! MIMO Wiener phase-noise channel `y_k = e^{jθ_k} H x_k + w_k`.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mathcore::wrap_2pi;
use crate::rng;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::domain("channel matrix must be square and non-empty"));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn diag(values: &[Complex64]) -> Self {
        let n = values.len();
        let mut m = Self::identity(n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `Hᴴ y`.
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).conj() * y[i]).sum())
            .collect()
    }

    /// `HᴴH`.
    pub fn gram(&self) -> CMatrix {
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (0..n).map(|k| self.get(k, i).conj() * self.get(k, j)).sum();
            }
        }
        CMatrix { n, data }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let g = self.gram();
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                (g.get(i, j) - target).norm() <= tol
            })
        })
    }

    /// Reads whitespace-separated `re+imj` entries, one row per line.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let row = content
                .split_whitespace()
                .map(|tok| {
                    parse_complex(tok).ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        message: format!("cannot parse complex entry '{tok}'"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:e}{:+e}j", z.re, z.im)
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn parse_complex(tok: &str) -> Option<Complex64> {
    let tok = tok.trim();
    let Some(body) = tok.strip_suffix(['j', 'i']) else {
        return tok.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().ok()?;
            let im_str = &body[i..];
            let im = match im_str {
                "+" => 1.0,
                "-" => -1.0,
                s => s.parse::<f64>().ok()?,
            };
            Some(Complex64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                s => s.parse::<f64>().ok()?,
            };
            Some(Complex64::new(0.0, im))
        }
    }
}

/// Extreme eigenvalues `(λ_min, λ_max)` of `HᴴH`.
pub fn singular_value_bounds(h: &CMatrix) -> Result<(f64, f64)> {
    let eig = if h.dim() <= 2 {
        closed_form_gram_eigenvalues(&h.gram())
    } else {
        hermitian_eigenvalues(&h.gram())
    };
    let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = eig.iter().copied().fold(0.0, f64::max);
    // A singular-value ratio of 1e-12 is below what the Gram matrix can
    // resolve; rank deficiency is declared at 64 ulps of λ_max.
    if !(lmax > 0.0) || lmin <= 64.0 * f64::EPSILON * lmax {
        return Err(Error::RankDeficient {
            ratio: (lmin.max(0.0) / lmax).sqrt(),
        });
    }
    Ok((lmin, lmax))
}

fn closed_form_gram_eigenvalues(g: &CMatrix) -> Vec<f64> {
    match g.dim() {
        1 => vec![g.get(0, 0).re],
        _ => {
            let a = g.get(0, 0).re;
            let d = g.get(1, 1).re;
            let b = g.get(0, 1).norm();
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            vec![mean - rad, mean + rad]
        }
    }
}

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on its real
/// symmetric embedding `[[Re, −Im], [Im, Re]]` (every eigenvalue doubled).
pub fn hermitian_eigenvalues(g: &CMatrix) -> Vec<f64> {
    let n = g.dim();
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = g.get(i, j);
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    jacobi_symmetric(&mut a, m, 1e-12);
    let mut diag: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    diag.sort_by(f64::total_cmp);
    diag.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

fn jacobi_symmetric(a: &mut [f64], m: usize, tol: f64) {
    let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= tol * scale {
            return;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelMatrix {
    /// Any unitary `H`; equivalent to the identity for every quantity here.
    Unitary,
    General(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub antennas: usize,
    /// Standard deviation of the phase increments, radians.
    pub sigma_delta: f64,
    pub matrix: ChannelMatrix,
    /// Peak SNR ρ, linear.
    pub snr: f64,
}

impl ChannelParams {
    pub fn unitary(antennas: usize, sigma_delta: f64, snr: f64) -> Result<Self> {
        Self::new(antennas, sigma_delta, ChannelMatrix::Unitary, snr)
    }

    pub fn new(antennas: usize, sigma_delta: f64, matrix: ChannelMatrix, snr: f64) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::domain("antenna count must be >= 1"));
        }
        if !(sigma_delta >= 0.0) || !sigma_delta.is_finite() {
            return Err(Error::domain(format!("sigma_delta must be >= 0, got {sigma_delta}")));
        }
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(Error::domain(format!("snr must be > 0, got {snr}")));
        }
        if let ChannelMatrix::General(h) = &matrix {
            if h.dim() != antennas {
                return Err(Error::domain(format!(
                    "channel matrix is {0}x{0} but antennas = {antennas}",
                    h.dim()
                )));
            }
            singular_value_bounds(h)?;
        }
        Ok(Self {
            antennas,
            sigma_delta,
            matrix,
            snr,
        })
    }

    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        Self::new(self.antennas, self.sigma_delta, self.matrix.clone(), snr)
    }

    pub fn is_unitary(&self) -> bool {
        match &self.matrix {
            ChannelMatrix::Unitary => true,
            ChannelMatrix::General(h) => h.is_unitary(1e-9),
        }
    }

    pub fn apply_matrix(&self, x: &[Complex64]) -> Vec<Complex64> {
        match &self.matrix {
            ChannelMatrix::Unitary => x.to_vec(),
            ChannelMatrix::General(h) => h.mul_vec(x),
        }
    }
}

/// Sampled phase-noise path, each entry in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub theta: Vec<f64>,
}

impl PhaseTrajectory {
    /// Samples `n` phases of the Wiener process. `initial` pins `θ₀`;
    /// otherwise it is uniform, which makes the process stationary.
    pub fn sample<R: Rng + ?Sized>(
        n: usize,
        sigma_delta: f64,
        initial: Option<f64>,
        rng: &mut R,
    ) -> Self {
        let mut theta = Vec::with_capacity(n);
        let mut current = initial.map(wrap_2pi).unwrap_or_else(|| rng.gen::<f64>() * TAU);
        for _ in 0..n {
            theta.push(current);
            let step: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * sigma_delta;
            current = wrap_2pi(current + step);
        }
        Self { theta }
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.theta.windows(2).map(|w| wrap_2pi(w[1] - w[0]))
    }
}

/// Knobs for degenerate simulations used in tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimulationOptions {
    pub initial_phase: Option<f64>,
    pub noiseless: bool,
}

pub fn simulate(
    params: &ChannelParams,
    inputs: &[Vec<Complex64>],
    seed: u64,
    options: SimulationOptions,
) -> Result<(Vec<Vec<Complex64>>, PhaseTrajectory)> {
    for (index, x) in inputs.iter().enumerate() {
        if x.len() != params.antennas {
            return Err(Error::domain(format!(
                "input {index} has {} entries, expected {}",
                x.len(),
                params.antennas
            )));
        }
        let power: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        if power > params.snr * (1.0 + 1e-12) {
            return Err(Error::PeakConstraint {
                index,
                power,
                snr: params.snr,
            });
        }
    }
    let mut phase_rng = rng::stream(seed, &[0x5E]);
    let mut noise_rng = rng::stream(seed, &[0x0E]);
    let trajectory = PhaseTrajectory::sample(
        inputs.len(),
        params.sigma_delta,
        options.initial_phase,
        &mut phase_rng,
    );
    let outputs = inputs
        .iter()
        .zip(&trajectory.theta)
        .map(|(x, &theta)| {
            let rot = Complex64::from_polar(1.0, theta);
            params
                .apply_matrix(x)
                .into_iter()
                .map(|hx| {
                    let w = if options.noiseless {
                        Complex64::new(0.0, 0.0)
                    } else {
                        rng::complex_gaussian(&mut noise_rng)
                    };
                    rot * hx + w
                })
                .collect()
        })
        .collect();
    Ok((outputs, trajectory))
}

/// Antenna spacing `√(λR/M)` that makes a LoS MIMO channel unitary.
pub fn los_antenna_spacing(wavelength: f64, range: f64, antennas: usize) -> Result<f64> {
    if !(wavelength > 0.0) || !(range > 0.0) || antennas == 0 {
        return Err(Error::domain(
            "wavelength, range and antenna count must be positive",
        ));
    }
    Ok((wavelength * range / antennas as f64).sqrt())
}

pub fn wavelength_from_ghz(freq_ghz: f64) -> Result<f64> {
    if !(freq_ghz > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {freq_ghz}")));
    }
    Ok(SPEED_OF_LIGHT / (freq_ghz * 1e9))
}

/// Draws `x = √ρ·z` from the truncated input law whose radius has density
/// ∝ r^{2M−2} on `[√(ρ₀/ρ), 1]` and whose direction is isotropic.
pub fn sample_lb_input<R: Rng + ?Sized>(
    antennas: usize,
    snr: f64,
    snr0: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if antennas == 0 {
        return Err(Error::domain("antenna count must be >= 1"));
    }
    if !(snr0 > 0.0) || !(snr0 < snr) {
        return Err(Error::config(format!(
            "sample_lb_input requires 0 < snr0 < snr, got snr0 = {snr0}, snr = {snr}"
        )));
    }
    let k = (2 * antennas - 1) as f64;
    let lo = (snr0 / snr).sqrt().powf(k);
    let u: f64 = rng.gen();
    let radius = (lo + u * (1.0 - lo)).powf(1.0 / k);
    let dir: Vec<Complex64> = (0..antennas).map(|_| rng::complex_gaussian(rng)).collect();
    let norm = dir.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let scale = snr.sqrt() * radius / norm;
    Ok(dir.into_iter().map(|v| v * scale).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Corner symbol on every antenna meets `‖x‖² = ρ`.
    Peak,
    /// Mean symbol energy is `ρ/M` per antenna (may exceed the peak limit).
    Average,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "peak" => Ok(Self::Peak),
            "average" => Ok(Self::Average),
            other => Err(Error::config(format!("unknown normalization '{other}'"))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Peak => "peak",
            Self::Average => "average",
        })
    }
}

/// Per-antenna symbol alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub name: String,
    pub symbols: Vec<Complex64>,
    /// Factor applied to the unit-grid symbols.
    pub peak_norm: f64,
}

impl Constellation {
    /// Square QAM on the odd-integer grid.
    pub fn qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if side < 2 || side * side != order {
            return Err(Error::domain(format!("QAM order must be a square >= 4, got {order}")));
        }
        let levels: Vec<f64> = (0..side).map(|i| (2 * i) as f64 - (side - 1) as f64).collect();
        let symbols = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im)))
            .collect();
        Ok(Self {
            name: format!("QAM-{order}"),
            symbols,
            peak_norm: 1.0,
        })
    }

    pub fn psk(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::domain("PSK order must be >= 1"));
        }
        let symbols = (0..order)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / order as f64))
            .collect();
        Ok(Self {
            name: format!("PSK-{order}"),
            symbols,
            peak_norm: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn mean_energy(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.symbols.len() as f64
    }

    /// Scales the alphabet for `antennas` parallel streams at SNR `snr`.
    pub fn normalized(&self, snr: f64, antennas: usize, mode: Normalization) -> Self {
        let per_antenna = (snr / antennas as f64).sqrt();
        let reference = match mode {
            Normalization::Peak => self.max_magnitude(),
            Normalization::Average => self.mean_energy().sqrt(),
        };
        let factor = if reference > 0.0 { per_antenna / reference } else { 0.0 };
        Self {
            name: self.name.clone(),
            symbols: self.symbols.iter().map(|s| s * factor).collect(),
            peak_norm: self.peak_norm * factor,
        }
    }

    pub fn random_vector<R: Rng + ?Sized>(&self, antennas: usize, rng: &mut R) -> Vec<Complex64> {
        (0..antennas)
            .map(|_| self.symbols[rng.gen_range(0..self.symbols.len())])
            .collect()
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (family, order) = upper
            .split_once('-')
            .ok_or_else(|| Error::config(format!("constellation '{s}' must look like QAM-64 or PSK-8")))?;
        let order: usize = order
            .parse()
            .map_err(|_| Error::config(format!("bad constellation order in '{s}'")))?;
        match family {
            "QAM" => Self::qam(order),
            "PSK" => Self::psk(order),
            _ => Err(Error::config(format!("unknown constellation family '{family}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spacing_examples() {
        let l80 = wavelength_from_ghz(80.0).unwrap();
        assert!((l80 - 0.003_747).abs() < 1e-6);
        assert!((los_antenna_spacing(l80, 500.0, 2).unwrap() - 0.97).abs() < 0.005);
        let l20 = wavelength_from_ghz(20.0).unwrap();
        // sqrt(λR/2) is 4.74 m here; the commonly quoted 3.8 m matches three antennas.
        assert!((los_antenna_spacing(l20, 3000.0, 2).unwrap() - 4.742).abs() < 0.005);
        assert!((los_antenna_spacing(l20, 3000.0, 3).unwrap() - 3.872).abs() < 0.005);
        assert_eq!(los_antenna_spacing(1.0, 1.0, 1).unwrap(), 1.0);
        assert!(los_antenna_spacing(0.0, 1.0, 1).is_err());
        assert!(los_antenna_spacing(1.0, -1.0, 1).is_err());
        assert!(los_antenna_spacing(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(singular_value_bounds(&CMatrix::identity(2)).unwrap(), (1.0, 1.0));
        let d = CMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(singular_value_bounds(&d).unwrap(), (1.0, 4.0));
        let d3 = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 2.0), c(-0.5, 0.0)]);
        let (lo, hi) = singular_value_bounds(&d3).unwrap();
        assert!((lo - 0.25).abs() < 1e-12 && (hi - 4.0).abs() < 1e-12);
        let singular = CMatrix::from_rows(vec![vec![c(1.0, 1.0), c(2.0, 2.0)], vec![c(0.5, 0.5), c(1.0, 1.0)]]).unwrap();
        assert!(matches!(singular_value_bounds(&singular), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn jacobi_matches_quadratic_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let rows = (0..2)
                .map(|_| (0..2).map(|_| rng::complex_gaussian(&mut rng)).collect())
                .collect();
            let h = CMatrix::from_rows(rows).unwrap();
            let g = h.gram();
            // characteristic polynomial λ² − tr λ + det
            let tr = g.get(0, 0).re + g.get(1, 1).re;
            let det = (g.get(0, 0) * g.get(1, 1) - g.get(0, 1) * g.get(1, 0)).re;
            let disc = (tr * tr - 4.0 * det).sqrt();
            let want = [(tr - disc) / 2.0, (tr + disc) / 2.0];
            let got = hermitian_eigenvalues(&g);
            assert!((got[0] - want[0]).abs() < 1e-10 && (got[1] - want[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn parses_matrix_text() {
        let text = "# H\n1+0j  0.5-2.5e-1j\n-3 2j\n";
        let h = CMatrix::parse(text, Path::new("h.txt")).unwrap();
        assert_eq!(h.get(0, 1), c(0.5, -0.25));
        assert_eq!(h.get(1, 0), c(-3.0, 0.0));
        assert_eq!(h.get(1, 1), c(0.0, 2.0));
        let round = CMatrix::parse(&h.to_string(), Path::new("x")).unwrap();
        assert_eq!(round, h);
        let err = CMatrix::parse("1 2\n3 abc\n", Path::new("bad.txt")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(CMatrix::parse("1 2\n3\n", Path::new("bad.txt")).is_err());
        assert_eq!(parse_complex("1e-3+1e+2j"), Some(c(1e-3, 1e2)));
        assert_eq!(parse_complex("-j"), Some(c(0.0, -1.0)));
    }

    #[test]
    fn noiseless_degenerate_channel() {
        let h = CMatrix::from_rows(vec![vec![c(1.0, 0.0), c(0.2, 0.1)], vec![c(0.0, -0.3), c(0.9, 0.0)]]).unwrap();
        let params = ChannelParams::new(2, 0.0, ChannelMatrix::General(h.clone()), 10.0).unwrap();
        let inputs = vec![vec![c(1.0, 1.0), c(-1.0, 0.5)], vec![c(0.0, 2.0), c(1.0, 0.0)]];
        let (out, traj) = simulate(
            &params,
            &inputs,
            1,
            SimulationOptions {
                initial_phase: Some(0.0),
                noiseless: true,
            },
        )
        .unwrap();
        assert!(traj.theta.iter().all(|&t| t == 0.0));
        for (y, x) in out.iter().zip(&inputs) {
            assert_eq!(y, &h.mul_vec(x));
        }
    }

    #[test]
    fn peak_violation_names_index() {
        let params = ChannelParams::unitary(1, 0.1, 4.0).unwrap();
        let inputs = vec![vec![c(1.0, 0.0)], vec![c(2.0, 0.1)]];
        match simulate(&params, &inputs, 0, SimulationOptions::default()) {
            Err(Error::PeakConstraint { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn noise_has_unit_covariance() {
        let params = ChannelParams::unitary(2, 0.1, 1.0).unwrap();
        let n = 1_000_000;
        let inputs = vec![vec![c(0.0, 0.0); 2]; n];
        let (out, _) = simulate(&params, &inputs, 17, SimulationOptions::default()).unwrap();
        let e: Vec<f64> = out.iter().map(|y| y.iter().map(|v| v.norm_sqr()).sum()).collect();
        let mean = e.iter().sum::<f64>() / n as f64;
        let sd = (e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn constellation_peak_normalization() {
        let q = Constellation::qam(64).unwrap();
        assert_eq!(q.len(), 64);
        let snr = 123.0;
        for m in 1..=3 {
            let n = q.normalized(snr, m, Normalization::Peak);
            let peak = n.max_magnitude().powi(2) * m as f64;
            assert!((peak - snr).abs() < 1e-12 * snr);
        }
        let mut sorted: Vec<(i64, i64)> = q.symbols.iter().map(|s| (s.re as i64, s.im as i64)).collect();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 64);
        let avg = q.normalized(snr, 2, Normalization::Average);
        assert!((avg.mean_energy() * 2.0 - snr).abs() < 1e-9);
        assert_eq!("psk-8".parse::<Constellation>().unwrap().len(), 8);
        assert!("QAM-63".parse::<Constellation>().is_err());
        assert!("foo".parse::<Constellation>().is_err());
    }

    #[test]
    fn lb_input_support_and_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (snr, snr0) = (100.0, 5.0);
        for _ in 0..100_000 {
            let x = sample_lb_input(2, snr, snr0, &mut rng).unwrap();
            let p: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            assert!(p >= snr0 * (1.0 - 1e-12) && p <= snr * (1.0 + 1e-12));
        }
        // snr0 → 0, M = 1: E[log ‖z‖] = −1/(2M−1) = −1.
        let n = 200_000;
        let logs: Vec<f64> = (0..n)
            .map(|_| {
                let x = sample_lb_input(1, 1.0, 1e-12, &mut rng).unwrap();
                x[0].norm().ln()
            })
            .collect();
        let mean = logs.iter().sum::<f64>() / n as f64;
        let sd = (logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((mean + 1.0).abs() < 3.0 * sd / (n as f64).sqrt() + 1e-6);
        // isotropy
        let mut acc = [c(0.0, 0.0); 2];
        for _ in 0..n {
            let x = sample_lb_input(2, 1.0, 0.01, &mut rng).unwrap();
            let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for (a, v) in acc.iter_mut().zip(&x) {
                *a += v / norm;
            }
        }
        for a in acc {
            // each component of z/‖z‖ has variance ≤ 1/2 per real dimension
            assert!((a / n as f64).norm() < 3.0 * (0.5 / n as f64).sqrt() * 2f64.sqrt());
        }
        assert!(sample_lb_input(1, 1.0, 1.0, &mut rng).is_err());
    }
}
