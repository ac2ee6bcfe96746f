//! Dataset schema, CSV ingestion, synthetic generation, and missingness
//! injection.
//!
//! The 9-column diabetes profile drives everything: column kinds pick the
//! imputation flavor (mean vs mode, average vs majority) and the public
//! per-column magnitude bounds equilibrate the regression design matrix.
//! Those bounds are domain knowledge baked into the schema, never derived
//! from the data.

use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    /// 0/1-valued; imputes by mode / majority.
    Binary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Public power-of-two bound on |value|; the regression design divides
    /// the column by this to keep the normal matrix well scaled.
    pub max_abs_hint: f64,
    /// Source strings that encode to 1 for categorical columns; anything
    /// else (that does not parse as a number) encodes to 0.
    #[serde(default)]
    pub one_values: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSpec>,
}

impl DatasetSchema {
    /// The Kaggle-style diabetes profile: gender, age, hypertension,
    /// heart_disease, smoking_history, bmi, HbA1c_level,
    /// blood_glucose_level, diabetes.
    pub fn diabetes() -> DatasetSchema {
        let col = |name: &str, kind, hint: f64, ones: &[&str]| ColumnSpec {
            name: name.to_string(),
            kind,
            max_abs_hint: hint,
            one_values: ones.iter().map(|s| s.to_string()).collect(),
        };
        DatasetSchema {
            columns: vec![
                col("gender", ColumnKind::Binary, 1.0, &["Male"]),
                col("age", ColumnKind::Numeric, 128.0, &[]),
                col("hypertension", ColumnKind::Binary, 1.0, &[]),
                col("heart_disease", ColumnKind::Binary, 1.0, &[]),
                // "current" and "former" encode as 1, everything else as 0.
                col(
                    "smoking_history",
                    ColumnKind::Binary,
                    1.0,
                    &["current", "former"],
                ),
                col("bmi", ColumnKind::Numeric, 128.0, &[]),
                col("HbA1c_level", ColumnKind::Numeric, 16.0, &[]),
                col("blood_glucose_level", ColumnKind::Numeric, 512.0, &[]),
                col("diabetes", ColumnKind::Binary, 1.0, &[]),
            ],
        }
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn kind(&self, col: usize) -> ColumnKind {
        self.columns[col].kind
    }
}

/// Plaintext dataset: row-major values plus a 0/1 presence mask. Missing
/// cells hold 0.0 and are ignored by every computation.
#[derive(Debug, Clone)]
pub struct PlainDataset {
    pub schema: DatasetSchema,
    pub rows: usize,
    pub data: Vec<f64>,
    pub mask: Vec<u8>,
}

impl PlainDataset {
    pub fn cols(&self) -> usize {
        self.schema.cols()
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    #[inline]
    pub fn present(&self, r: usize, c: usize) -> bool {
        self.mask[r * self.cols() + c] == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        let m = self.cols();
        self.data[r * m + c] = v;
    }

    /// SHA-256 over shape, values, and mask; pins a report to its input.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows as u64).to_le_bytes());
        h.update((self.cols() as u64).to_le_bytes());
        for v in &self.data {
            h.update(v.to_le_bytes());
        }
        h.update(&self.mask);
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Seeded subsample of `n` distinct rows (partial Fisher-Yates).
    pub fn subsample(&self, n: usize, seed: u64) -> Result<PlainDataset> {
        if n > self.rows {
            return Err(Error::Dataset(format!(
                "cannot subsample {n} rows from {}",
                self.rows
            )));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..self.rows).collect();
        for i in 0..n {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
        }
        let m = self.cols();
        let mut data = Vec::with_capacity(n * m);
        let mut mask = Vec::with_capacity(n * m);
        for &r in idx.iter().take(n) {
            data.extend_from_slice(&self.data[r * m..(r + 1) * m]);
            mask.extend_from_slice(&self.mask[r * m..(r + 1) * m]);
        }
        Ok(PlainDataset {
            schema: self.schema.clone(),
            rows: n,
            data,
            mask,
        })
    }
}

/// Load a CSV against a schema. Header must name exactly the schema columns
/// in order. Fields parse as numbers when possible; otherwise categorical
/// columns encode through `one_values` (match = 1, anything else = 0).
pub fn load_csv_with_schema(path: &Path, schema: DatasetSchema) -> Result<PlainDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Dataset(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Dataset(format!("bad header: {e}")))?
        .clone();
    if headers.len() != schema.cols() {
        return Err(Error::Dataset(format!(
            "expected {} columns, file has {}",
            schema.cols(),
            headers.len()
        )));
    }
    for (i, spec) in schema.columns.iter().enumerate() {
        if headers.get(i).map(str::trim) != Some(spec.name.as_str()) {
            return Err(Error::Dataset(format!(
                "unknown column: header {:?} does not match schema column {:?}",
                headers.get(i).unwrap_or(""),
                spec.name
            )));
        }
    }
    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Dataset(format!("csv parse: {e}")))?;
        for (c, field) in record.iter().enumerate() {
            let field = field.trim();
            let spec = &schema.columns[c];
            let value = match field.parse::<f64>() {
                Ok(v) => v,
                Err(_) => match spec.kind {
                    ColumnKind::Binary => {
                        if spec.one_values.iter().any(|s| s == field) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    ColumnKind::Numeric => {
                        return Err(Error::Dataset(format!(
                            "unparseable numeric value {field:?} in column {}",
                            spec.name
                        )))
                    }
                },
            };
            data.push(value);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Dataset("empty file: no data rows".into()));
    }
    let mask = vec![1u8; data.len()];
    Ok(PlainDataset {
        schema,
        rows,
        data,
        mask,
    })
}

/// Load a diabetes-profile CSV.
pub fn load_csv(path: &Path) -> Result<PlainDataset> {
    load_csv_with_schema(path, DatasetSchema::diabetes())
}

/// Deterministic synthetic dataset with the diabetes schema. Glucose carries
/// a planted linear relation on HbA1c and age so regression imputation has
/// signal to find.
pub fn synth_dataset(n: usize, seed: u64) -> Result<PlainDataset> {
    if n < 10 {
        return Err(Error::Dataset(format!("need at least 10 rows, got {n}")));
    }
    let schema = DatasetSchema::diabetes();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5f9d_317b);
    let noise = Normal::new(0.0, 5.0).unwrap();
    let mut data = Vec::with_capacity(n * schema.cols());
    for _ in 0..n {
        let gender = f64::from(rng.random_bool(0.48));
        let age = rng.random_range(18.0..90.0);
        let hypertension = f64::from(rng.random_bool(0.08));
        let heart = f64::from(rng.random_bool(0.05));
        let smoking = f64::from(rng.random_bool(0.35));
        let bmi = rng.random_range(15.0..50.0);
        let hba1c: f64 = rng.random_range(3.5..9.0);
        let glucose = (40.0 + 15.0 * hba1c + 0.5 * age + noise.sample(&mut rng))
            .clamp(70.0, 300.0);
        let diabetes = f64::from(hba1c > 6.5);
        data.extend_from_slice(&[
            gender,
            age,
            hypertension,
            heart,
            smoking,
            bmi,
            hba1c,
            glucose,
            diabetes,
        ]);
    }
    let mask = vec![1u8; data.len()];
    Ok(PlainDataset {
        schema,
        rows: n,
        data,
        mask,
    })
}

/// Planted coefficients of the synthetic glucose relation, for tests.
pub const SYNTH_GLUCOSE_COEFFS: (f64, f64, f64) = (15.0, 0.5, 40.0);

/// Systematically delete every 10th value of one column: 0-indexed rows with
/// i mod 10 == 9 lose their value (a 10% missing rate). Idempotent; other
/// columns' masks are untouched.
pub fn inject_missing(ds: &mut PlainDataset, col: usize) {
    let m = ds.cols();
    for r in 0..ds.rows {
        if r % 10 == 9 {
            ds.mask[r * m + col] = 0;
            ds.data[r * m + col] = 0.0;
        }
    }
}

/// Test-only style injector: random missingness pattern at roughly the same
/// rate, for transcript-invariance checks.
pub fn inject_missing_random(ds: &mut PlainDataset, col: usize, count: usize, rng: &mut impl RngCore) {
    let m = ds.cols();
    let mut idx: Vec<usize> = (0..ds.rows).collect();
    for i in 0..count.min(ds.rows) {
        let j = (rng.next_u64() as usize) % (idx.len() - i) + i;
        idx.swap(i, j);
        let r = idx[i];
        ds.mask[r * m + col] = 0;
        ds.data[r * m + col] = 0.0;
    }
}
