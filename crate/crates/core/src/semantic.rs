//! Semantic similarity lookup δ(γ, ν) and the semantic rate.
//!
//! A [`SemanticTable`] is a dense grid over SINR (dB) and symbol count ν,
//! queried by bilinear interpolation with edge clamping on the SINR axis.
//! The default table is synthetic:
//!
//! ```text
//! δ(γ_db, ν) = (1 − exp(−0.3·ν)) · sigmoid(0.5·(γ_db − 2))
//! ```
//!
//! Any measured table can be loaded from a `gamma_db,nu,delta` CSV file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemanticError {
    #[error("symbol count {nu} outside [{min}, {max}]")]
    NuOutOfRange { nu: u32, min: u32, max: u32 },
    #[error("table is not monotone: {0}")]
    NotMonotone(String),
    #[error("table malformed: {0}")]
    Malformed(String),
    #[error("failed to read table: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse table: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticParams {
    /// Semantic units per sentence (I_k).
    pub units_per_sentence: f64,
    /// Words per sentence (L_k).
    pub words_per_sentence: f64,
    /// Bits per sentence (H).
    pub bits_per_sentence: f64,
    /// Similarity threshold δ_th.
    pub threshold: f64,
}

impl Default for SemanticParams {
    fn default() -> Self {
        Self {
            units_per_sentence: 100.0,
            words_per_sentence: 20.0,
            bits_per_sentence: 1200.0,
            threshold: 0.9,
        }
    }
}

impl SemanticParams {
    /// Sentence count Q_k = D_k / H.
    pub fn sentences(&self, bits: f64) -> f64 {
        bits / self.bits_per_sentence
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticShape {
    pub nu_rate: f64,
    pub slope: f64,
    pub midpoint_db: f64,
}

impl Default for SyntheticShape {
    fn default() -> Self {
        Self {
            nu_rate: 0.3,
            slope: 0.5,
            midpoint_db: 2.0,
        }
    }
}

impl SyntheticShape {
    pub fn eval(&self, gamma_db: f64, nu: u32) -> f64 {
        let nu_part = 1.0 - (-self.nu_rate * nu as f64).exp();
        let snr_part = 1.0 / (1.0 + (-self.slope * (gamma_db - self.midpoint_db)).exp());
        nu_part * snr_part
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticTable {
    snr_grid_db: Vec<f64>,
    nu_grid: Vec<u32>,
    /// Row-major, `delta[i * nu_grid.len() + j]` for SNR `i` and ν `j`.
    delta: Vec<f64>,
}

impl SemanticTable {
    pub fn new(snr_grid_db: Vec<f64>, nu_grid: Vec<u32>, delta: Vec<f64>) -> Result<Self, SemanticError> {
        if snr_grid_db.is_empty() || nu_grid.is_empty() {
            return Err(SemanticError::Malformed("empty grid".into()));
        }
        if delta.len() != snr_grid_db.len() * nu_grid.len() {
            return Err(SemanticError::Malformed(format!(
                "expected {} entries, got {}",
                snr_grid_db.len() * nu_grid.len(),
                delta.len()
            )));
        }
        if snr_grid_db.windows(2).any(|w| !(w[0] < w[1])) || snr_grid_db.iter().any(|g| !g.is_finite()) {
            return Err(SemanticError::Malformed("SNR grid must be strictly ascending".into()));
        }
        if nu_grid[0] < 1 || nu_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SemanticError::Malformed(
                "symbol grid must be strictly ascending and start at 1 or above".into(),
            ));
        }
        if let Some(d) = delta.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(SemanticError::Malformed(format!("similarity {d} outside [0, 1]")));
        }
        let table = Self {
            snr_grid_db,
            nu_grid,
            delta,
        };
        table.check_monotone()?;
        Ok(table)
    }

    /// Synthetic default on a 0.5 dB grid over [−20, 40] dB and ν ∈ [1, ν_max].
    pub fn synthetic(nu_max: u32) -> Self {
        Self::synthetic_with(nu_max, SyntheticShape::default())
    }

    pub fn synthetic_with(nu_max: u32, shape: SyntheticShape) -> Self {
        let snr: Vec<f64> = (0..=120).map(|i| -20.0 + 0.5 * i as f64).collect();
        let nus: Vec<u32> = (1..=nu_max.max(1)).collect();
        let delta = snr
            .iter()
            .flat_map(|&g| nus.iter().map(move |&nu| shape.eval(g, nu)))
            .collect();
        Self::new(snr, nus, delta).expect("synthetic table is monotone")
    }

    /// Reads a `gamma_db,nu,delta` CSV into a dense grid. Every (γ, ν) pair of
    /// the grid must be present exactly once.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SemanticError> {
        let reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        Self::from_reader(reader)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, SemanticError> {
        let reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        Self::from_reader(reader)
    }

    fn from_reader<R: std::io::Read>(mut reader: csv::Reader<R>) -> Result<Self, SemanticError> {
        #[derive(Deserialize)]
        struct Row {
            gamma_db: f64,
            nu: u32,
            delta: f64,
        }
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["gamma_db", "nu", "delta"] {
            return Err(SemanticError::Malformed(format!(
                "header must be `gamma_db,nu,delta`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows: Vec<Row> = reader.deserialize().collect::<Result<_, _>>()?;
        let mut snr: Vec<f64> = rows.iter().map(|r| r.gamma_db).collect();
        snr.sort_by(f64::total_cmp);
        snr.dedup();
        let mut nus: Vec<u32> = rows.iter().map(|r| r.nu).collect();
        nus.sort_unstable();
        nus.dedup();
        let mut delta = vec![f64::NAN; snr.len() * nus.len()];
        for r in &rows {
            let i = snr.partition_point(|&g| g < r.gamma_db);
            let j = nus.partition_point(|&n| n < r.nu);
            let slot = &mut delta[i * nus.len() + j];
            if !slot.is_nan() {
                return Err(SemanticError::Malformed(format!(
                    "duplicate entry for gamma_db={}, nu={}",
                    r.gamma_db, r.nu
                )));
            }
            *slot = r.delta;
        }
        if delta.iter().any(|d| d.is_nan()) {
            return Err(SemanticError::Malformed("grid has missing (gamma_db, nu) pairs".into()));
        }
        Self::new(snr, nus, delta)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("gamma_db,nu,delta\n");
        for (i, g) in self.snr_grid_db.iter().enumerate() {
            for (j, nu) in self.nu_grid.iter().enumerate() {
                out.push_str(&format!("{g},{nu},{}\n", self.entry(i, j)));
            }
        }
        out
    }

    fn check_monotone(&self) -> Result<(), SemanticError> {
        let (rows, cols) = (self.snr_grid_db.len(), self.nu_grid.len());
        for i in 0..rows {
            for j in 0..cols {
                let d = self.entry(i, j);
                if i + 1 < rows && self.entry(i + 1, j) < d {
                    return Err(SemanticError::NotMonotone(format!(
                        "decreases along SNR at gamma_db={}, nu={}",
                        self.snr_grid_db[i + 1],
                        self.nu_grid[j]
                    )));
                }
                if j + 1 < cols && self.entry(i, j + 1) < d {
                    return Err(SemanticError::NotMonotone(format!(
                        "decreases along nu at gamma_db={}, nu={}",
                        self.snr_grid_db[i],
                        self.nu_grid[j + 1]
                    )));
                }
            }
        }
        Ok(())
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.delta[i * self.nu_grid.len() + j]
    }

    pub fn nu_min(&self) -> u32 {
        self.nu_grid[0]
    }

    pub fn nu_max(&self) -> u32 {
        *self.nu_grid.last().expect("non-empty grid")
    }

    pub fn max_entry(&self) -> f64 {
        self.delta.iter().copied().fold(0.0, f64::max)
    }

    /// Bilinear interpolation of δ at (`gamma_db`, `nu`).
    pub fn similarity(&self, gamma_db: f64, nu: u32) -> Result<f64, SemanticError> {
        if nu < self.nu_min() || nu > self.nu_max() {
            return Err(SemanticError::NuOutOfRange {
                nu,
                min: self.nu_min(),
                max: self.nu_max(),
            });
        }
        let (i0, i1, ti) = bracket(&self.snr_grid_db, if gamma_db.is_nan() { f64::NEG_INFINITY } else { gamma_db });
        let j = self.nu_grid.partition_point(|&n| n < nu);
        let (j0, j1, tj) = if self.nu_grid[j] == nu {
            (j, j, 0.0)
        } else {
            let (lo, hi) = (self.nu_grid[j - 1], self.nu_grid[j]);
            (j - 1, j, (nu - lo) as f64 / (hi - lo) as f64)
        };
        let lerp = |a: f64, b: f64, t: f64| if t == 0.0 { a } else { a + (b - a) * t };
        let low = lerp(self.entry(i0, j0), self.entry(i0, j1), tj);
        let high = lerp(self.entry(i1, j0), self.entry(i1, j1), tj);
        Ok(lerp(low, high, ti))
    }

    /// Smallest ν whose similarity reaches `threshold`, if any.
    ///
    /// δ is nondecreasing in ν, so this bisects over `[nu_min, nu_max]`.
    pub fn min_feasible_nu(&self, gamma_db: f64, threshold: f64) -> Option<u32> {
        let ok = |nu: u32| self.similarity(gamma_db, nu).is_ok_and(|d| d >= threshold);
        let (mut lo, mut hi) = (self.nu_min(), self.nu_max());
        if !ok(hi) {
            return None;
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }
}

/// Cell bracketing `x` on an ascending grid, clamping outside the range.
fn bracket(grid: &[f64], x: f64) -> (usize, usize, f64) {
    let last = grid.len() - 1;
    if x <= grid[0] {
        return (0, 0, 0.0);
    }
    if x >= grid[last] {
        return (last, last, 0.0);
    }
    let hi = grid.partition_point(|&g| g <= x);
    let lo = hi - 1;
    if grid[lo] == x {
        return (lo, lo, 0.0);
    }
    (lo, hi, (x - grid[lo]) / (grid[hi] - grid[lo]))
}

/// Semantic rate `W·I/(L·ν)·δ` in semantic units per second.
pub fn semantic_rate(params: &SemanticParams, bandwidth: f64, nu: u32, delta: f64) -> f64 {
    bandwidth * params.units_per_sentence / (params.words_per_sentence * nu as f64) * delta
}
