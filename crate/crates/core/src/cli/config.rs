//! Experiment configuration: `key = value` lines grouped under `[section]`
//! headers. Blank lines and lines starting with `#` or `;` are ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bounds::{BoundKind, BoundSettings, SearchControls};
use crate::channel::{ChannelMatrix, ChannelParams, CMatrix, Constellation, Normalization};
use crate::error::{Error, Result};
use crate::inforate::RateConfig;
use crate::mathcore::db_to_linear;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Unitary,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub antennas: usize,
    pub sigma_delta_deg: f64,
    pub matrix: MatrixSource,
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
    pub kinds: Vec<BoundKind>,
    pub n_samples: usize,
    pub block_length: usize,
    pub n_blocks: usize,
    pub q_levels: usize,
    pub past_window: usize,
    pub adaptive_window: bool,
    pub master_seed: u64,
    pub constellation: String,
    pub normalization: Normalization,
    /// Worker threads; 0 means one per available processor.
    pub threads: usize,
    /// Write measured wall time; off keeps reruns byte-identical.
    pub record_runtime: bool,
    pub csv: PathBuf,
    pub cache: Option<PathBuf>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            antennas: 1,
            sigma_delta_deg: 6.0,
            matrix: MatrixSource::Unitary,
            start_db: 10.0,
            stop_db: 30.0,
            step_db: 2.0,
            kinds: vec![BoundKind::U, BoundKind::Us, BoundKind::Asymptotic, BoundKind::QamLower],
            n_samples: crate::entropy::DEFAULT_MC_SAMPLES,
            block_length: crate::inforate::DEFAULT_BLOCK_LENGTH,
            n_blocks: crate::inforate::DEFAULT_N_BLOCKS,
            q_levels: crate::inforate::DEFAULT_Q_LEVELS,
            past_window: crate::inforate::DEFAULT_PAST_WINDOW,
            adaptive_window: true,
            master_seed: 1,
            constellation: "QAM-64".to_string(),
            normalization: Normalization::Peak,
            threads: 0,
            record_runtime: false,
            csv: PathBuf::from("results.csv"),
            cache: None,
            base_dir: PathBuf::from("."),
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("channel", &["antennas", "sigma_delta_deg", "matrix"]),
    ("sweep", &["start_db", "stop_db", "step_db", "kinds"]),
    (
        "monte_carlo",
        &[
            "n_samples",
            "block_length",
            "n_blocks",
            "q_levels",
            "past_window",
            "adaptive_window",
            "master_seed",
        ],
    ),
    ("qam", &["constellation", "normalization"]),
    ("run", &["threads", "record_runtime"]),
    ("output", &["csv", "cache"]),
];

fn field_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text, path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Parses configuration text; `path` is only used in error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section: Option<&str> = None;
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split(" #").next().unwrap_or("").trim();
            if content.is_empty() || content.starts_with('#') || content.starts_with(';') {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .map(|(s, _)| *s)
                        .find(|s| *s == name)
                        .ok_or_else(|| field_error(path, line, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| field_error(path, line, format!("expected key = value, got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| field_error(path, line, format!("key '{key}' outside any section")))?;
            let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(field_error(path, line, format!("unknown key '{key}' in [{sec}]")));
            }
            if !seen.insert(key.to_string()) {
                return Err(field_error(path, line, format!("duplicate key '{key}'")));
            }
            cfg.set(key, value)
                .map_err(|msg| field_error(path, line, format!("{sec}.{key}: {msg}")))?;
        }
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => field_error(path, 0, msg),
            other => other,
        })?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse '{v}'"))
        }
        match key {
            "antennas" => self.antennas = num(value)?,
            "sigma_delta_deg" => self.sigma_delta_deg = num(value)?,
            "matrix" => {
                self.matrix = if value.eq_ignore_ascii_case("unitary") {
                    MatrixSource::Unitary
                } else {
                    MatrixSource::File(PathBuf::from(value))
                }
            }
            "start_db" => self.start_db = num(value)?,
            "stop_db" => self.stop_db = num(value)?,
            "step_db" => self.step_db = num(value)?,
            "kinds" => {
                self.kinds = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<BoundKind>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "n_samples" => self.n_samples = num(value)?,
            "block_length" => self.block_length = num(value)?,
            "n_blocks" => self.n_blocks = num(value)?,
            "q_levels" => self.q_levels = num(value)?,
            "past_window" => self.past_window = num(value)?,
            "adaptive_window" => {
                self.adaptive_window = parse_bool(value).ok_or_else(|| format!("expected a boolean, got '{value}'"))?
            }
            "master_seed" => self.master_seed = num(value)?,
            "constellation" => {
                let c: Constellation = value.parse().map_err(|e: Error| e.to_string())?;
                self.constellation = c.name;
            }
            "normalization" => self.normalization = value.parse().map_err(|e: Error| e.to_string())?,
            "threads" => self.threads = num(value)?,
            "record_runtime" => {
                self.record_runtime = parse_bool(value).ok_or_else(|| format!("expected a boolean, got '{value}'"))?
            }
            "csv" => self.csv = PathBuf::from(value),
            "cache" => {
                self.cache = if value.is_empty() || value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.antennas == 0 {
            return bad("channel.antennas must be >= 1".into());
        }
        if !(self.sigma_delta_deg > 0.0) || !self.sigma_delta_deg.is_finite() {
            return bad(format!("channel.sigma_delta_deg must be > 0, got {}", self.sigma_delta_deg));
        }
        if !(self.step_db > 0.0) || !self.start_db.is_finite() || !(self.stop_db >= self.start_db) {
            return bad("sweep needs finite start_db <= stop_db and step_db > 0".into());
        }
        if self.kinds.is_empty() {
            return bad("sweep.kinds is empty".into());
        }
        let unique: BTreeSet<_> = self.kinds.iter().collect();
        if unique.len() != self.kinds.len() {
            return bad("sweep.kinds lists a kind twice".into());
        }
        if self.n_samples < crate::entropy::MIN_MC_SAMPLES {
            return bad(format!("monte_carlo.n_samples must be >= {}", crate::entropy::MIN_MC_SAMPLES));
        }
        if self.block_length < crate::inforate::MIN_BLOCK_LENGTH {
            return bad(format!(
                "monte_carlo.block_length must be >= {}",
                crate::inforate::MIN_BLOCK_LENGTH
            ));
        }
        if self.n_blocks == 0 || self.q_levels < 2 {
            return bad("monte_carlo.n_blocks must be >= 1 and q_levels >= 2".into());
        }
        let needs_matrix = self
            .kinds
            .iter()
            .any(|k| matches!(k, BoundKind::NonunitaryUpper | BoundKind::NonunitaryLower));
        if needs_matrix && self.matrix == MatrixSource::Unitary {
            return bad("non-unitary kinds need channel.matrix to name a matrix file".into());
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let kinds: Vec<&str> = self.kinds.iter().map(|k| k.as_str()).collect();
        let matrix = match &self.matrix {
            MatrixSource::Unitary => "unitary".to_string(),
            MatrixSource::File(p) => p.display().to_string(),
        };
        let cache = self.cache.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "none".into());
        let values: Vec<(&str, String)> = vec![
            ("antennas", self.antennas.to_string()),
            ("sigma_delta_deg", self.sigma_delta_deg.to_string()),
            ("matrix", matrix),
            ("start_db", self.start_db.to_string()),
            ("stop_db", self.stop_db.to_string()),
            ("step_db", self.step_db.to_string()),
            ("kinds", kinds.join(", ")),
            ("n_samples", self.n_samples.to_string()),
            ("block_length", self.block_length.to_string()),
            ("n_blocks", self.n_blocks.to_string()),
            ("q_levels", self.q_levels.to_string()),
            ("past_window", self.past_window.to_string()),
            ("adaptive_window", self.adaptive_window.to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("constellation", self.constellation.clone()),
            ("normalization", self.normalization.to_string()),
            ("threads", self.threads.to_string()),
            ("record_runtime", self.record_runtime.to_string()),
            ("csv", self.csv.display().to_string()),
            ("cache", cache),
        ];
        for (i, (section, keys)) in SECTIONS.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            for key in keys.iter() {
                let v = &values.iter().find(|(k, _)| k == key).expect("every key has a value").1;
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.resolve(&self.csv)
    }

    pub fn cache_path(&self) -> Option<PathBuf> {
        self.cache.as_ref().map(|p| self.resolve(p))
    }

    pub fn sigma_delta(&self) -> f64 {
        self.sigma_delta_deg.to_radians()
    }

    /// SNR points in dB, rounded to 1e-9 dB so they print cleanly.
    pub fn snr_grid_db(&self) -> Vec<f64> {
        let n = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| ((self.start_db + i as f64 * self.step_db) * 1e9).round() / 1e9)
            .collect()
    }

    pub fn load_matrix(&self) -> Result<Option<CMatrix>> {
        match &self.matrix {
            MatrixSource::Unitary => Ok(None),
            MatrixSource::File(p) => CMatrix::load(&self.resolve(p)).map(Some),
        }
    }

    pub fn channel_params(&self, snr_db: f64, matrix: Option<&CMatrix>) -> Result<ChannelParams> {
        let m = match matrix {
            Some(h) => ChannelMatrix::General(h.clone()),
            None => ChannelMatrix::Unitary,
        };
        ChannelParams::new(self.antennas, self.sigma_delta(), m, db_to_linear(snr_db))
    }

    pub fn bound_settings(&self, seed: u64) -> BoundSettings {
        BoundSettings {
            search: SearchControls::default(),
            n_samples: self.n_samples,
            q_levels: self.q_levels,
            block_length: self.block_length,
            n_blocks: self.n_blocks,
            past_window: self.past_window,
            adaptive_window: self.adaptive_window,
            seed,
        }
    }

    pub fn rate_config(&self, seed: u64) -> RateConfig {
        let mut cfg = RateConfig::new(self.block_length, self.n_blocks, seed);
        cfg.normalization = self.normalization;
        cfg
    }

    pub fn constellation(&self) -> Result<Constellation> {
        self.constellation.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# Figure 1
[channel]
antennas = 1
sigma_delta_deg = 6

[sweep]
start_db = 0
stop_db = 30
step_db = 2
kinds = asymptotic, U_s

[monte_carlo]
master_seed = 7 # inline comment
";

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::parse(SAMPLE, Path::new("a.cfg")).unwrap();
        assert_eq!(cfg.kinds, vec![BoundKind::Asymptotic, BoundKind::Us]);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.snr_grid_db().len(), 16);
        let text = cfg.canonical();
        let again = ExperimentConfig::parse(&text, Path::new("b.cfg")).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.canonical(), text);
    }

    #[test]
    fn errors_name_line_and_field() {
        let bad = "[channel]\nantennas = two\n";
        match ExperimentConfig::parse(bad, Path::new("x.cfg")) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("antennas"));
            }
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("[nope]\n", Path::new("x")).is_err());
        assert!(ExperimentConfig::parse("[channel]\nfoo = 1\n", Path::new("x")).is_err());
        assert!(ExperimentConfig::parse("antennas = 1\n", Path::new("x")).is_err());
        assert!(ExperimentConfig::parse("[channel]\nantennas = 1\nantennas = 2\n", Path::new("x")).is_err());
        assert!(ExperimentConfig::parse("[sweep]\nkinds = nonunitary_upper\n", Path::new("x")).is_err());
        assert!(ExperimentConfig::parse("[sweep]\nstep_db = 0\n", Path::new("x")).is_err());
    }
}
