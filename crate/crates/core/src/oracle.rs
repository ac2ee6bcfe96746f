//! Plaintext reference implementations of the four imputation methods, plus
//! the error metrics the acceptance numbers are measured with.
//!
//! The oracle mirrors every convention the secure side commits to: the
//! median picks position ceil(count/2) of the descending sort, regression
//! equilibrates design columns by the public schema bounds and solves the
//! normal equations with unpivoted LU, and kNN excludes invalid candidates
//! (and self) through the same additive distance penalty. kNN candidate
//! SELECTION additionally replays the secure side's quantized distances
//! through the identical sorting network so that distance ties resolve the
//! same way on both sides; the aggregation itself stays in double precision,
//! which is exactly the gap the MAE is supposed to measure.
//!
//! Everything here is deterministic and side-effect free; performance is a
//! non-goal.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, PlainDataset};
use crate::error::{Error, Result};
use crate::sortnet::{pad_to_pow2, plain_sort_desc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mean,
    Median,
    Regression,
    Knn,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "mean" => Method::Mean,
            "median" => Method::Median,
            "regression" => Method::Regression,
            "knn" => Method::Knn,
            other => {
                return Err(Error::Experiment(format!(
                    "unknown method {other:?} (mean|median|regression|knn)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Median => "median",
            Method::Regression => "regression",
            Method::Knn => "knn",
        }
    }
}

/// Impute one column in plaintext under the secure side's conventions.
/// `k` only matters for kNN; `frac_bits` pins the kNN penalty magnitude and
/// the quantization grid used for tie-exact neighbor selection.
pub fn oracle_impute(
    ds: &PlainDataset,
    method: Method,
    col: usize,
    k: usize,
    frac_bits: u32,
) -> Result<PlainDataset> {
    if col >= ds.cols() {
        return Err(Error::Dataset(format!("column {col} out of range")));
    }
    let mut out = ds.clone();
    let fill_all = |out: &mut PlainDataset, values: &[f64]| {
        let m = out.cols();
        for r in 0..out.rows {
            if out.mask[r * m + col] == 0 {
                out.data[r * m + col] = values[r];
                out.mask[r * m + col] = 1;
            }
        }
    };

    match method {
        Method::Mean => {
            let (mut sum, mut count) = (0.0f64, 0usize);
            for r in 0..ds.rows {
                if ds.present(r, col) {
                    sum += ds.at(r, col);
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::Dataset("mean of an all-missing column".into()));
            }
            let mean = sum / count as f64;
            let fill = match ds.schema.kind(col) {
                ColumnKind::Numeric => mean,
                ColumnKind::Binary => f64::from(mean >= 0.5),
            };
            fill_all(&mut out, &vec![fill; ds.rows]);
        }
        Method::Median => {
            let mut present: Vec<f64> = (0..ds.rows)
                .filter(|&r| ds.present(r, col))
                .map(|r| ds.at(r, col))
                .collect();
            if present.is_empty() {
                return Err(Error::Dataset("median of an all-missing column".into()));
            }
            present.sort_by(|a, b| b.partial_cmp(a).unwrap());
            // 1-indexed position ceil(c/2) of the descending order: the true
            // median for odd counts, the upper middle value for even.
            let pos = present.len().div_ceil(2);
            fill_all(&mut out, &vec![present[pos - 1]; ds.rows]);
        }
        Method::Regression => {
            let preds = regression_predictions(ds, col)?;
            fill_all(&mut out, &preds);
        }
        Method::Knn => {
            let preds = knn_predictions(ds, col, k, frac_bits)?;
            fill_all(&mut out, &preds);
        }
    }
    Ok(out)
}

/// Masked-row normal equations solved by unpivoted LU on the equilibrated
/// design, predictions for every row from the unmasked design.
fn regression_predictions(ds: &PlainDataset, col: usize) -> Result<Vec<f64>> {
    let m = ds.cols();
    let n = ds.rows;
    let d = m; // intercept replaces the target column
    if n <= d {
        return Err(Error::Dataset(format!(
            "regression needs more rows ({n}) than design columns ({d})"
        )));
    }
    // Columns: intercept first, then every non-target column divided by its
    // public magnitude hint.
    let mut design = vec![0.0f64; n * d];
    for r in 0..n {
        design[r * d] = 1.0;
        let mut j = 1;
        for c in 0..m {
            if c == col {
                continue;
            }
            design[r * d + j] = ds.at(r, c) / ds.schema.columns[c].max_abs_hint;
            j += 1;
        }
    }
    // Rows with a missing target zero out entirely (intercept included),
    // which drops them from X^T X and X^T y identically to exclusion.
    let mut a = vec![0.0f64; d * d];
    let mut b = vec![0.0f64; d];
    for r in 0..n {
        let w = f64::from(ds.present(r, col));
        let y = ds.at(r, col);
        for p in 0..d {
            let xp = design[r * d + p] * w;
            b[p] += xp * y;
            for q in 0..d {
                a[p * d + q] += xp * design[r * d + q] * w;
            }
        }
    }
    let beta = lu_solve_plain(&mut a, &mut b, d)?;
    Ok((0..n)
        .map(|r| (0..d).map(|j| design[r * d + j] * beta[j]).sum())
        .collect())
}

/// Unpivoted Doolittle LU + forward/backward substitution, mirroring the
/// secure elimination order. Errors out on a vanishing pivot.
pub fn lu_solve_plain(a: &mut [f64], b: &mut [f64], d: usize) -> Result<Vec<f64>> {
    for kcol in 0..d {
        let pivot = a[kcol * d + kcol];
        if pivot.abs() < 1e-12 {
            return Err(Error::SingularMatrix {
                col: kcol,
                pivot,
            });
        }
        for i in kcol + 1..d {
            let l = a[i * d + kcol] / pivot;
            a[i * d + kcol] = l;
            for j in kcol + 1..d {
                a[i * d + j] -= l * a[kcol * d + j];
            }
        }
    }
    // Forward: L z = b with unit diagonal.
    for i in 0..d {
        for j in 0..i {
            b[i] = b[i] - a[i * d + j] * b[j];
        }
    }
    // Backward: U x = z.
    let mut x = vec![0.0f64; d];
    for i in (0..d).rev() {
        let mut s = b[i];
        for j in i + 1..d {
            s -= a[i * d + j] * x[j];
        }
        x[i] = s / a[i * d + i];
    }
    Ok(x)
}

fn round_half_up_shift(z: i128, s: u32) -> i128 {
    (z + (1i128 << (s - 1))) >> s
}

/// kNN estimates for every row. Selection replays the secure pipeline in
/// exact integer arithmetic: quantized features, Gram-matrix distances with
/// per-entry rounding, the additive invalid/self penalty, and the Batcher
/// network on negated keys. Aggregation (mean or majority of the selected
/// labels) runs in plain f64 on the original label values.
pub(crate) fn knn_predictions(
    ds: &PlainDataset,
    col: usize,
    k: usize,
    frac_bits: u32,
) -> Result<Vec<f64>> {
    let n = ds.rows;
    let m = ds.cols();
    let valid: Vec<bool> = (0..n).map(|r| ds.present(r, col)).collect();
    let valid_count = valid.iter().filter(|v| **v).count();
    if k == 0 || k + 1 > valid_count {
        return Err(Error::Dataset(format!(
            "k={k} needs at least k+1 valid rows, have {valid_count}"
        )));
    }

    let scale = 2f64.powi(frac_bits as i32);
    // Quantized feature matrix over all columns except the target; missing
    // cells are zero already.
    let feats: Vec<i128> = (0..n)
        .flat_map(|r| {
            (0..m)
                .filter(|c| *c != col)
                .map(move |c| (ds.at(r, c) * scale).round() as i128)
        })
        .collect();
    let fm = m - 1;

    // Gram entries rounded exactly like the secure matmul truncation.
    let gram = |i: usize, j: usize| -> i128 {
        let mut acc = 0i128;
        for t in 0..fm {
            acc += feats[i * fm + t] * feats[j * fm + t];
        }
        round_half_up_shift(acc, frac_bits)
    };
    let diag: Vec<i128> = (0..n).map(|i| gram(i, i)).collect();
    let penalty = 1i128 << (62 - frac_bits);

    let padded = pad_to_pow2(n);
    let mut preds = Vec::with_capacity(n);
    for i in 0..n {
        // Negated distances as sort keys; pads sink below everything.
        let mut keys = vec![i128::MIN / 2; padded];
        let mut labels = vec![0.0f64; padded];
        for j in 0..n {
            let mut dist = diag[i] + diag[j] - 2 * gram(i, j);
            if !valid[j] {
                dist += penalty;
            }
            if i == j {
                dist += penalty;
            }
            keys[j] = -dist;
            labels[j] = ds.at(j, col);
        }
        plain_sort_desc(&mut keys, &mut labels);
        let top = &labels[..k];
        let pred = match ds.schema.kind(col) {
            ColumnKind::Numeric => top.iter().sum::<f64>() / k as f64,
            ColumnKind::Binary => {
                let sum: f64 = top.iter().sum();
                f64::from(sum >= k as f64 / 2.0)
            }
        };
        preds.push(pred);
    }
    Ok(preds)
}

/// Mean absolute difference over all cells.
pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "mae over {} vs {} cells",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / a.len() as f64)
}

/// Largest absolute cell difference.
pub fn max_abs_err(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "max_abs_err over {} vs {} cells",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// The square-root-of-sample-size heuristic for k.
pub fn default_k(n: usize) -> usize {
    (n as f64).sqrt().floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_dataset, DatasetSchema};

    fn tiny2(rows: &[(f64, f64, bool)], kind: ColumnKind) -> PlainDataset {
        // Two-column dataset: (feature, target, target-present).
        let mut schema = DatasetSchema::diabetes();
        schema.columns.truncate(2);
        schema.columns[0].name = "feature".into();
        schema.columns[0].kind = ColumnKind::Numeric;
        schema.columns[1].name = "target".into();
        schema.columns[1].kind = kind;
        let mut d = Vec::new();
        let mut mask = Vec::new();
        for (f, v, present) in rows {
            d.push(*f);
            d.push(if *present { *v } else { 0.0 });
            mask.push(1);
            mask.push(u8::from(*present));
        }
        PlainDataset {
            schema,
            rows: rows.len(),
            data: d,
            mask,
        }
    }

    fn tiny(data: &[(f64, bool)], kind: ColumnKind) -> PlainDataset {
        let rows: Vec<(f64, f64, bool)> = data
            .iter()
            .enumerate()
            .map(|(i, (v, p))| (i as f64, *v, *p))
            .collect();
        tiny2(&rows, kind)
    }

    #[test]
    fn mean_fills_with_the_average_of_present() {
        let ds = tiny(&[(2.0, true), (4.0, true), (0.0, false)], ColumnKind::Numeric);
        let out = oracle_impute(&ds, Method::Mean, 1, 0, 15).unwrap();
        assert_eq!(out.at(2, 1), 3.0);
        assert!(out.present(2, 1));
        assert_eq!(out.at(0, 1), 2.0);
    }

    #[test]
    fn mean_mode_on_binary_uses_the_half_threshold() {
        let ds = tiny(
            &[(1.0, true), (1.0, true), (0.0, true), (0.0, false)],
            ColumnKind::Binary,
        );
        let out = oracle_impute(&ds, Method::Mean, 1, 0, 15).unwrap();
        assert_eq!(out.at(3, 1), 1.0); // mean 2/3 >= 0.5

        // Exact tie goes to 1.
        let tie = tiny(
            &[(1.0, true), (0.0, true), (0.0, false)],
            ColumnKind::Binary,
        );
        let out = oracle_impute(&tie, Method::Mean, 1, 0, 15).unwrap();
        assert_eq!(out.at(2, 1), 1.0);
    }

    #[test]
    fn median_follows_the_upper_middle_convention() {
        let odd = tiny(
            &[(5.0, true), (1.0, true), (3.0, true), (0.0, false)],
            ColumnKind::Numeric,
        );
        assert_eq!(
            oracle_impute(&odd, Method::Median, 1, 0, 15).unwrap().at(3, 1),
            3.0
        );
        let even = tiny(
            &[
                (4.0, true),
                (1.0, true),
                (3.0, true),
                (2.0, true),
                (0.0, false),
                (0.0, false),
            ],
            ColumnKind::Numeric,
        );
        // count 4, position 2 of [4,3,2,1]: no averaging, pick 3.
        assert_eq!(
            oracle_impute(&even, Method::Median, 1, 0, 15).unwrap().at(4, 1),
            3.0
        );
    }

    #[test]
    fn regression_recovers_exact_linear_data() {
        // target = 2*feature + 1 exactly; the missing row imputes exactly.
        let ds = tiny2(
            &[(1.0, 3.0, true), (2.0, 5.0, true), (3.0, 0.0, false)],
            ColumnKind::Numeric,
        );
        let out = oracle_impute(&ds, Method::Regression, 1, 0, 15).unwrap();
        assert!((out.at(2, 1) - 7.0).abs() < 1e-9, "got {}", out.at(2, 1));
        assert_eq!(out.at(1, 1), 5.0);
    }

    #[test]
    fn regression_reports_singular_systems() {
        // Constant feature column equal to the intercept makes X^T X singular.
        let mut ds = tiny(
            &[(3.0, true), (5.0, true), (7.0, true), (0.0, false)],
            ColumnKind::Numeric,
        );
        for r in 0..ds.rows {
            ds.set(r, 0, 1.0);
        }
        assert!(matches!(
            oracle_impute(&ds, Method::Regression, 1, 0, 15),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn knn_matches_the_hand_checked_fixture() {
        // Features 0,1,3,7,15 with labels 10..50, one query at 31: every
        // per-query distance set is tie-free, so the plain argsort semantics
        // (what the well-known plaintext imputers implement) are unambiguous.
        let ds = tiny2(
            &[
                (0.0, 10.0, true),
                (1.0, 20.0, true),
                (3.0, 30.0, true),
                (7.0, 40.0, true),
                (15.0, 50.0, true),
                (31.0, 0.0, false),
            ],
            ColumnKind::Numeric,
        );
        let out = oracle_impute(&ds, Method::Knn, 1, 3, 15).unwrap();
        assert!((out.at(5, 1) - 40.0).abs() < 1e-9); // mean of 50,40,30
        assert_eq!(out.at(2, 1), 30.0); // present rows untouched

        // Hand-checked predictions for every row, frozen, plus an
        // independent brute-force scan (full distance table, argsort,
        // top-3 average) as the second witness.
        let frozen = [30.0, 80.0 / 3.0, 70.0 / 3.0, 20.0, 30.0, 40.0];
        let brute = |i: usize| -> f64 {
            let mut cands: Vec<(f64, f64)> = (0..6)
                .filter(|j| *j != i && ds.present(*j, 1))
                .map(|j| ((ds.at(i, 0) - ds.at(j, 0)).powi(2), ds.at(j, 1)))
                .collect();
            cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            cands.iter().take(3).map(|c| c.1).sum::<f64>() / 3.0
        };
        let preds = knn_predictions(&ds, 1, 3, 15).unwrap();
        for (row, expect) in frozen.iter().enumerate() {
            assert!((brute(row) - expect).abs() < 1e-9, "brute row {row}");
            assert!((preds[row] - expect).abs() < 1e-9, "oracle row {row}");
        }
    }

    #[test]
    fn knn_binary_majority_with_forced_outcome() {
        // Query at feature 4: distances to rows 0..3 are 16, 9, 4, 36, so
        // the nearest three labels are [0, 1, 1]: sum 2 >= 3/2 gives 1.
        let ds = tiny2(
            &[
                (0.0, 1.0, true),
                (1.0, 1.0, true),
                (2.0, 0.0, true),
                (10.0, 0.0, true),
                (4.0, 0.0, false),
            ],
            ColumnKind::Binary,
        );
        let out = oracle_impute(&ds, Method::Knn, 1, 3, 15).unwrap();
        assert_eq!(out.at(4, 1), 1.0);
    }

    #[test]
    fn knn_rejects_oversized_k() {
        let ds = tiny(&[(1.0, true), (2.0, true), (0.0, false)], ColumnKind::Numeric);
        assert!(oracle_impute(&ds, Method::Knn, 1, 2, 15).is_err());
    }

    #[test]
    fn metrics_basics() {
        let x = [0.0, 0.0, 1.0, 3.0];
        assert_eq!(mae(&x, &x).unwrap(), 0.0);
        let mut y = x;
        y[3] += 0.01;
        assert!((mae(&x, &y).unwrap() - 0.0025).abs() < 1e-12);
        assert!((max_abs_err(&x, &y).unwrap() - 0.01).abs() < 1e-12);
        assert_eq!(mae(&x, &y).unwrap(), mae(&y, &x).unwrap());
        assert!(max_abs_err(&x, &y).unwrap() >= mae(&x, &y).unwrap());
        assert!(mae(&x, &[0.0]).is_err());
    }

    #[test]
    fn oracle_is_deterministic() {
        let mut ds = synth_dataset(120, 11).unwrap();
        crate::dataset::inject_missing(&mut ds, 5);
        let a = oracle_impute(&ds, Method::Knn, 5, 10, 15).unwrap();
        let b = oracle_impute(&ds, Method::Knn, 5, 10, 15).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn default_k_is_floor_sqrt() {
        assert_eq!(default_k(100), 10);
        assert_eq!(default_k(1000), 31);
        assert_eq!(default_k(120), 10);
    }
}
