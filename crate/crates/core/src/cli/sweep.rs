//! SNR sweeps with per-row caching and deterministic CSV output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::bounds::{
    asymptotic_capacity, memoryless_plus_correction, qam_lower, upper_bound_u, upper_bound_us,
    BoundKind, BoundRecord,
};
use crate::channel::{singular_value_bounds, CMatrix};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub const CSV_HEADER: &str =
    "snr_db,kind,value_bits,std_error_bits,opt_alpha,opt_xi,n_samples,seed,runtime_s";

/// Bumped whenever an estimator changes in a way that alters results.
const CACHE_VERSION: &str = "phasecap-rows-v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub snr_db: f64,
    pub kind: String,
    pub value_bits: f64,
    pub std_error_bits: f64,
    pub opt_alpha: Option<f64>,
    pub opt_xi: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub runtime_s: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9}")).unwrap_or_default()
}

impl CsvRow {
    fn from_record(r: &BoundRecord, runtime_s: f64) -> Self {
        Self {
            snr_db: r.snr_db,
            kind: r.kind.as_str().to_string(),
            value_bits: r.value_bits,
            std_error_bits: r.std_error_bits,
            opt_alpha: r.opt_alpha,
            opt_xi: r.opt_xi,
            n_samples: r.n_samples,
            seed: r.seed,
            runtime_s,
        }
    }

    fn failed(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db,
            kind: "failed".into(),
            value_bits: f64::NAN,
            std_error_bits: f64::NAN,
            opt_alpha: None,
            opt_xi: None,
            n_samples: 0,
            seed,
            runtime_s: 0.0,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.9},{:.9},{},{},{},{},{:.3}",
            self.snr_db,
            self.kind,
            self.value_bits,
            self.std_error_bits,
            opt(self.opt_alpha),
            opt(self.opt_xi),
            self.n_samples,
            self.seed,
            self.runtime_s
        )
    }

    pub fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            return None;
        }
        let optf = |s: &str| if s.is_empty() { Some(None) } else { s.parse().ok().map(Some) };
        Some(Self {
            snr_db: f[0].parse().ok()?,
            kind: f[1].to_string(),
            value_bits: f[2].parse().ok()?,
            std_error_bits: f[3].parse().ok()?,
            opt_alpha: optf(f[4])?,
            opt_xi: optf(f[5])?,
            n_samples: f[6].parse().ok()?,
            seed: f[7].parse().ok()?,
            runtime_s: f[8].parse().ok()?,
        })
    }
}

/// Reads a results CSV, checking the header against the fixed schema.
pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema(format!("{} is empty", path.display())))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let missing: Vec<&str> = CSV_HEADER.split(',').filter(|c| !columns.contains(c)).collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "{} lacks column(s) {}",
            path.display(),
            missing.join(", ")
        )));
    }
    let order: Vec<usize> = CSV_HEADER
        .split(',')
        .map(|c| columns.iter().position(|x| x == &c).expect("checked above"))
        .collect();
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let reordered: Option<Vec<&str>> = order.iter().map(|&j| f.get(j).copied()).collect();
            reordered
                .and_then(|r| CsvRow::parse(&r.join(",")))
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: "malformed row".into(),
                })
        })
        .collect()
}

fn kind_tag(kind: &str) -> u64 {
    // FNV-1a, stable across builds and platforms.
    kind.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of the (kind, SNR) task; a pure function of its three inputs.
pub fn task_seed(master_seed: u64, kind: BoundKind, snr_db: f64) -> u64 {
    derive_seed(derive_seed(master_seed, kind_tag(kind.as_str())), snr_db.to_bits())
}

/// Digest of every input that can change the row.
fn row_hash(cfg: &ExperimentConfig, kind: BoundKind, snr_db: f64, matrix: Option<&CMatrix>) -> String {
    let mut key = String::new();
    let _ = write!(
        key,
        "{CACHE_VERSION}|{}|{}|M={}|sigma={}",
        kind.as_str(),
        snr_db,
        cfg.antennas,
        cfg.sigma_delta_deg
    );
    let seed = task_seed(cfg.master_seed, kind, snr_db);
    let forward = format!(
        "|q={}|block={}|nb={}",
        cfg.q_levels, cfg.block_length, cfg.n_blocks
    );
    let qam = format!("|{}|{}", cfg.constellation, cfg.normalization);
    let window = format!("|window={}|adaptive={}", cfg.past_window, cfg.adaptive_window);
    match kind {
        BoundKind::Asymptotic | BoundKind::MemorylessPlusCorr => {}
        BoundKind::U | BoundKind::NonunitaryUpper => {
            let _ = write!(key, "{forward}{window}|seed={seed}");
        }
        BoundKind::Us => {
            let _ = write!(key, "|n={}|seed={seed}", cfg.n_samples);
        }
        BoundKind::QamLower | BoundKind::NonunitaryLower => {
            let _ = write!(key, "{forward}{qam}|seed={seed}");
        }
    }
    if let Some(h) = matrix {
        let _ = write!(key, "|H={h}");
    }
    let digest = Sha256::digest(key.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn compute_row(
    cfg: &ExperimentConfig,
    kind: BoundKind,
    snr_db: f64,
    matrix: Option<&CMatrix>,
) -> Result<BoundRecord> {
    let seed = task_seed(cfg.master_seed, kind, snr_db);
    let params = cfg.channel_params(snr_db, matrix)?;
    let unitary = cfg.channel_params(snr_db, None)?;
    let unitary_only = |kind: BoundKind| -> Result<()> {
        if params.is_unitary() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "kind {kind} needs a unitary channel; use nonunitary_upper / nonunitary_lower"
            )))
        }
    };
    match kind {
        BoundKind::U => {
            unitary_only(kind)?;
            upper_bound_u(&unitary, &cfg.bound_settings(seed))
        }
        BoundKind::Us => {
            unitary_only(kind)?;
            upper_bound_us(&unitary, &cfg.bound_settings(seed))
        }
        BoundKind::MemorylessPlusCorr => {
            unitary_only(kind)?;
            memoryless_plus_correction(&unitary, &cfg.bound_settings(seed))
        }
        BoundKind::Asymptotic => {
            unitary_only(kind)?;
            asymptotic_capacity(&unitary)
        }
        BoundKind::QamLower => qam_lower(&params, &cfg.constellation()?, cfg.q_levels, &cfg.rate_config(seed)),
        BoundKind::NonunitaryUpper | BoundKind::NonunitaryLower => {
            let h = matrix.ok_or_else(|| Error::config("non-unitary kinds need a matrix file"))?;
            let (lmin, lmax) = singular_value_bounds(h)?;
            let mut record = if kind == BoundKind::NonunitaryUpper {
                upper_bound_u(&unitary.with_snr(lmax * unitary.snr)?, &cfg.bound_settings(seed))?
            } else {
                qam_lower(
                    &unitary.with_snr(lmin * unitary.snr)?,
                    &cfg.constellation()?,
                    cfg.q_levels,
                    &cfg.rate_config(seed),
                )?
            };
            record.kind = kind;
            record.snr_db = snr_db;
            record.meta = format!("lambda_min={lmin};lambda_max={lmax};{}", record.meta);
            Ok(record)
        }
    }
}

fn load_cache(path: &Path) -> Result<HashMap<String, CsvRow>> {
    if !path.exists() {
        return Ok(HashMap::new());
    }
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter_map(|l| {
            let (hash, row) = l.split_once(',')?;
            Some((hash.to_string(), CsvRow::parse(row)?))
        })
        .collect())
}

/// Writes `contents` next to `path` and renames it into place.
fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<CsvRow>,
    pub computed: usize,
    pub cached: usize,
    pub failures: Vec<(BoundKind, f64, Error)>,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        self.failures.iter().map(|(_, _, e)| e.exit_code()).max().unwrap_or(0)
    }
}

/// Computes every (kind, SNR) row, reusing cached rows, and writes the CSV.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let matrix = cfg.load_matrix()?;
    if let Some(h) = &matrix {
        if h.dim() != cfg.antennas {
            return Err(Error::config(format!(
                "matrix is {0}x{0} but channel.antennas = {1}",
                h.dim(),
                cfg.antennas
            )));
        }
    }
    let cache_path = cfg.cache_path();
    let mut cache = match &cache_path {
        Some(p) => load_cache(p)?,
        None => HashMap::new(),
    };
    let items: Vec<(BoundKind, f64, String)> = cfg
        .kinds
        .iter()
        .flat_map(|&k| cfg.snr_grid_db().into_iter().map(move |s| (k, s)))
        .map(|(k, s)| (k, s, row_hash(cfg, k, s, matrix.as_ref())))
        .collect();
    let pending: Vec<&(BoundKind, f64, String)> =
        items.iter().filter(|(_, _, h)| !cache.contains_key(h)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(BoundKind, f64, String, Result<CsvRow>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|(kind, snr_db, hash)| {
                let start = Instant::now();
                let res = compute_row(cfg, *kind, *snr_db, matrix.as_ref())
                    .map(|r| CsvRow::from_record(&r, start.elapsed().as_secs_f64()));
                match &res {
                    Ok(row) => eprintln!("{kind} @ {snr_db} dB: {:.4} bits ({:.1}s)", row.value_bits, row.runtime_s),
                    Err(e) => eprintln!("{kind} @ {snr_db} dB failed: {e}"),
                }
                (*kind, *snr_db, hash.clone(), res)
            })
            .collect()
    });
    let computed = results.len();
    let mut failures = Vec::new();
    let mut failed_rows = Vec::new();
    for (kind, snr_db, hash, res) in results {
        match res {
            Ok(row) => {
                cache.insert(hash, row);
            }
            Err(e) => {
                failed_rows.push(CsvRow::failed(snr_db, task_seed(cfg.master_seed, kind, snr_db)));
                failures.push((kind, snr_db, e));
            }
        }
    }
    if let Some(p) = &cache_path {
        let mut entries: Vec<(&String, &CsvRow)> = cache.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let text: String = entries.iter().map(|(h, r)| format!("{h},{}\n", r.to_csv())).collect();
        atomic_write(p, &text)?;
    }
    let mut rows: Vec<CsvRow> = items
        .iter()
        .filter_map(|(_, _, h)| cache.get(h).cloned())
        .chain(failed_rows)
        .map(|mut r| {
            if !cfg.record_runtime {
                r.runtime_s = 0.0;
            }
            r
        })
        .collect();
    rows.sort_by(|a, b| a.kind.cmp(&b.kind).then(a.snr_db.total_cmp(&b.snr_db)));
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    atomic_write(&cfg.csv_path(), &csv)?;
    Ok(SweepOutcome {
        rows,
        computed,
        cached: items.len() - computed,
        failures,
    })
}
