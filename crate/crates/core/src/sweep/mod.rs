//! Parameter sweeps over `(q, n̄_Ge)` with a resumable on-disk cache.
//!
//! Each concentration gets one ensemble-averaged density matrix; the q
//! points at that concentration are then solved in parallel. Finished
//! points are appended to `cache.jsonl` as they complete, keyed by a hash
//! of everything that determines the row, so an interrupted sweep resumes
//! where it stopped and yields the same table.

pub mod method;
pub mod peaks;
pub mod report;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use method::{FirstOrder, FullSolver, MethodRegistry, PointValues, SplittingMethod};
pub use peaks::{detect_peaks, fit_scaling, median3, Peak, PeakFit};

use crate::config::{EnsembleConfig, RunConfig};
use crate::device::DeviceConfig;
use crate::epm::{sample_density_matrix, Pseudopotential, SignModelRegistry};
use crate::error::{Error, Result};

/// Tag mixed into every cache key; bump it when results change meaning.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CACHE_FILE: &str = "cache.jsonl";

pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub q_grid: Vec<f64>,
    pub nge_grid: Vec<f64>,
    /// Template device; `q` and `n_ge` are overwritten per point.
    pub device: DeviceConfig,
    pub ensemble: EnsembleConfig,
    pub mode: String,
}

impl SweepSpec {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let spec = Self {
            q_grid: cfg.sweep.q_values()?,
            nge_grid: cfg.sweep.nge_grid.clone(),
            device: cfg.device.clone(),
            ensemble: cfg.ensemble.clone(),
            mode: cfg.mode.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("q_grid", &self.q_grid), ("nge_grid", &self.nge_grid)] {
            if grid.is_empty() {
                return Err(Error::Config(format!("{name} is empty")));
            }
            if grid.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config(format!("{name} must be strictly increasing")));
            }
        }
        if self.ensemble.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if MethodRegistry::default().get(&self.mode).is_none() {
            return Err(Error::Config(format!("unknown mode {:?}", self.mode)));
        }
        if SignModelRegistry::default().get(&self.ensemble.sign_model).is_none() {
            return Err(Error::Config(format!("unknown sign model {:?}", self.ensemble.sign_model)));
        }
        for &n in &self.nge_grid {
            for &q in &self.q_grid {
                self.device.clone().with_point(q, n).validate()?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.q_grid.len() * self.nge_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One `(q, n̄_Ge)` result. Energies are `None` when the point failed, in
/// which case `status` carries the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub n_ge: f64,
    pub delta_w: Option<f64>,
    pub delta_total: Option<f64>,
    pub e0: Option<f64>,
    pub e1: Option<f64>,
    pub status: String,
}

impl SweepRow {
    fn from_result(q: f64, n_ge: f64, r: Result<PointValues>) -> Self {
        match r {
            Ok(v) => Self {
                q,
                n_ge,
                delta_w: Some(v.delta_w),
                delta_total: Some(v.delta_total),
                e0: Some(v.e0),
                e1: Some(v.e1),
                status: STATUS_OK.into(),
            },
            Err(e) => Self {
                q,
                n_ge,
                delta_w: None,
                delta_total: None,
                e0: None,
                e1: None,
                status: e.to_string(),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

/// Rows in canonical order: q ascending, then n̄_Ge ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Points taken from the cache rather than computed.
    #[serde(skip)]
    pub cached: usize,
}

impl SweepTable {
    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| !r.is_ok())
    }

    pub fn concentrations(&self) -> Vec<f64> {
        let mut n: Vec<f64> = self.rows.iter().map(|r| r.n_ge).collect();
        n.sort_by(f64::total_cmp);
        n.dedup();
        n
    }

    /// `(q, Δ_w)` of the successful points at one concentration.
    pub fn curve(&self, n_ge: f64) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| r.n_ge == n_ge)
            .filter_map(|r| r.delta_w.map(|d| (r.q, d)))
            .unzip()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["q", "n_ge", "delta_w", "delta_total", "e0", "e1", "status"])?;
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                r.q.to_string(),
                r.n_ge.to_string(),
                f(r.delta_w),
                f(r.delta_total),
                f(r.e0),
                f(r.e1),
                r.status.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}

#[derive(Serialize)]
struct PointKey<'a> {
    device: &'a DeviceConfig,
    ensemble: &'a EnsembleConfig,
    mode: &'a str,
    cutoff_sq: i32,
    form_factors: String,
    version: &'a str,
}

/// Hex SHA-256 of a serializable value's JSON form.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}

/// Cache key of one point.
pub fn point_key(spec: &SweepSpec, pp: &Pseudopotential, q: f64, n_ge: f64) -> String {
    content_hash(&PointKey {
        device: &spec.device.clone().with_point(q, n_ge),
        ensemble: &spec.ensemble,
        mode: &spec.mode,
        cutoff_sq: pp.basis().cutoff_sq(),
        form_factors: pp.form_factors().to_toml_string(),
        version: CODE_VERSION,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    key: String,
    row: SweepRow,
}

/// Rows already in `path`. A torn last line from an interrupted write is
/// ignored.
pub fn load_cache(path: &Path) -> Result<HashMap<String, SweepRow>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        match serde_json::from_str::<CacheLine>(&line) {
            Ok(c) => {
                out.insert(c.key, c.row);
            }
            Err(e) => log::warn!("skipping unreadable cache line: {e}"),
        }
    }
    Ok(out)
}

/// Runs every point of `spec`. Failures are recorded in the row's status
/// and do not stop the sweep. With `cache_dir`, finished points are read
/// from and appended to `cache_dir/cache.jsonl`.
pub fn run_sweep(spec: &SweepSpec, pp: &Pseudopotential, cache_dir: Option<&Path>) -> Result<SweepTable> {
    spec.validate()?;
    let method = MethodRegistry::default().get(&spec.mode).expect("validated");
    let model = SignModelRegistry::default()
        .get(&spec.ensemble.sign_model)
        .expect("validated");

    let cache_path = cache_dir.map(|d| d.join(CACHE_FILE));
    let cache = match &cache_path {
        Some(p) => load_cache(p)?,
        None => HashMap::new(),
    };
    let sink = match &cache_path {
        Some(p) => {
            let mut f = OpenOptions::new().create(true).append(true).open(p)?;
            // finish a torn line so the next record starts cleanly
            if std::fs::metadata(p)?.len() > 0 && !std::fs::read(p)?.ends_with(b"\n") {
                f.write_all(b"\n")?;
            }
            Some(Mutex::new(f))
        }
        None => None,
    };
    let append = |key: &str, row: &SweepRow| -> Result<()> {
        if let Some(sink) = &sink {
            let mut line = serde_json::to_string(&CacheLine {
                key: key.to_string(),
                row: row.clone(),
            })?;
            line.push('\n');
            let mut f = sink.lock().expect("cache writer poisoned");
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    };

    let mut by_point: HashMap<(u64, u64), SweepRow> = HashMap::new();
    let mut cached = 0;
    for &n_ge in &spec.nge_grid {
        let keys: Vec<(f64, String)> = spec.q_grid.iter().map(|&q| (q, point_key(spec, pp, q, n_ge))).collect();
        let missing: Vec<&(f64, String)> = keys.iter().filter(|(_, k)| !cache.contains_key(k)).collect();
        for (q, k) in &keys {
            if let Some(row) = cache.get(k) {
                by_point.insert((q.to_bits(), n_ge.to_bits()), row.clone());
                cached += 1;
            }
        }
        if missing.is_empty() {
            continue;
        }
        log::info!("n_ge = {n_ge}: {} points to compute", missing.len());
        let rho = sample_density_matrix(pp, n_ge, spec.ensemble.n_samples, spec.ensemble.seed, model.as_ref());
        let rows: Vec<Result<SweepRow>> = missing
            .par_iter()
            .map(|(q, key)| {
                let result = match &rho {
                    Ok(rho) => method.evaluate(&spec.device.clone().with_point(*q, n_ge), rho, pp.basis()),
                    Err(e) => Err(Error::Eigensolver(format!("density matrix: {e}"))),
                };
                let row = SweepRow::from_result(*q, n_ge, result);
                append(key, &row)?;
                Ok(row)
            })
            .collect();
        for row in rows {
            let row = row?;
            by_point.insert((row.q.to_bits(), row.n_ge.to_bits()), row);
        }
    }

    let mut rows = Vec::with_capacity(spec.len());
    for &q in &spec.q_grid {
        for &n_ge in &spec.nge_grid {
            rows.push(by_point.remove(&(q.to_bits(), n_ge.to_bits())).expect("every point evaluated"));
        }
    }
    Ok(SweepTable { rows, cached })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epm::FormFactors;
    use crate::crystal_basis::Basis;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            q_grid: vec![3.7, 19.5],
            nge_grid: vec![0.0, 0.1],
            device: DeviceConfig::default(),
            ensemble: EnsembleConfig {
                n_samples: 4,
                ..EnsembleConfig::default()
            },
            mode: "full_solver".into(),
        }
    }

    fn pp() -> Pseudopotential {
        Pseudopotential::new(Basis::default(), FormFactors::default())
    }

    #[test]
    fn spec_validation() {
        assert!(small_spec().validate().is_ok());
        let mut s = small_spec();
        s.q_grid = vec![4.0, 3.0];
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.nge_grid.clear();
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.ensemble.n_samples = 0;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.mode = "exact".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn rows_in_canonical_order() {
        let t = run_sweep(&small_spec(), &pp(), None).unwrap();
        let order: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.q, r.n_ge)).collect();
        assert_eq!(order, [(3.7, 0.0), (3.7, 0.1), (19.5, 0.0), (19.5, 0.1)]);
        assert!(t.rows.iter().all(SweepRow::is_ok));
    }

    #[test]
    fn pure_silicon_rows_are_degenerate() {
        let t = run_sweep(&small_spec(), &pp(), None).unwrap();
        for r in t.rows.iter().filter(|r| r.n_ge == 0.0) {
            assert!(r.delta_w.unwrap() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn keys_separate_points_and_settings() {
        let s = small_spec();
        let pp = pp();
        let k = point_key(&s, &pp, 3.7, 0.1);
        assert_eq!(k, point_key(&s, &pp, 3.7, 0.1));
        assert_ne!(k, point_key(&s, &pp, 3.8, 0.1));
        assert_ne!(k, point_key(&s, &pp, 3.7, 0.2));
        let mut t = s.clone();
        t.ensemble.seed = 2;
        assert_ne!(k, point_key(&t, &pp, 3.7, 0.1));
        t = s.clone();
        t.mode = "first_order".into();
        assert_ne!(k, point_key(&t, &pp, 3.7, 0.1));
    }

    #[test]
    fn csv_round_trips_values() {
        let t = run_sweep(&small_spec(), &pp(), None).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(
            rd.headers().unwrap(),
            vec!["q", "n_ge", "delta_w", "delta_total", "e0", "e1", "status"]
        );
        for (rec, row) in rd.records().zip(&t.rows) {
            let rec = rec.unwrap();
            assert_eq!(rec[2].parse::<f64>().unwrap(), row.delta_w.unwrap());
            assert_eq!(rec[4].parse::<f64>().unwrap(), row.e0.unwrap());
        }
    }
}
