//! Test-set bounds from the kl (variance-aware Hoeffding) concentration
//! inequality, and comparison against reported PAC-Bayes certificates.
//!
//! For losses in `[0, 1]` with mean `m`, the empirical mean of `n` i.i.d.
//! draws satisfies `P(mean_n <= m - t) <= exp(-n kl(m - t, m))`. Inverting in
//! `m` gives the upper confidence bound: the `m >= mean_n` solving
//! `n kl(mean_n, m) = ln(1 / delta)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{bisect_monotone, check_unit, kl_bernoulli_or_inf, BISECTION_TOL};
use crate::risk_prior::parse_field;
use crate::scalar::Real;

/// Half of the last printed digit of a four-decimal table.
pub const DEFAULT_TIE_TOL: f64 = 5e-5;

/// One row of a certificate-vs-test-bound comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord<T> {
    pub name: String,
    pub pac_bayes_bound: T,
    /// Empirical mean loss on the evaluation sample.
    pub test_score: T,
    pub n_valid: u64,
}

impl<T: Real> ExperimentRecord<T> {
    pub fn new(
        name: impl Into<String>,
        pac_bayes_bound: T,
        test_score: T,
        n_valid: u64,
    ) -> Result<Self> {
        check_unit("pac_bayes_bound", pac_bayes_bound)?;
        check_unit("test_score", test_score)?;
        if n_valid == 0 {
            return Err(Error::invalid("n_valid", "must be at least 1"));
        }
        Ok(Self {
            name: name.into(),
            pac_bayes_bound,
            test_score,
            n_valid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Test,
    PacBayes,
    Tie,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Winner::Test => "TEST",
            Winner::PacBayes => "PAC_BAYES",
            Winner::Tie => "TIE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundComparison<T> {
    pub record: ExperimentRecord<T>,
    pub test_bound: T,
    pub winner: Winner,
}

/// Chernoff tail `exp(-n kl(mean - t, mean))` for a deviation `t` below the
/// mean.
pub fn concentration_gamma<T: Real>(t: T, mean: T, n: u64) -> Result<T> {
    check_unit("mean", mean)?;
    if !(t >= T::zero() && t <= mean) {
        return Err(Error::invalid(
            "t",
            format!("{t} outside [0, mean = {mean}]"),
        ));
    }
    if t == T::zero() {
        return Ok(T::one());
    }
    let kl = kl_bernoulli_or_inf(mean - t, mean);
    Ok((-T::lit(n as f64) * kl).exp())
}

/// Upper confidence bound of level `1 - delta` on the mean loss, from an
/// empirical mean over `n` draws.
pub fn invert_test_bound<T: Real>(empirical_mean: T, n: u64, delta: T) -> Result<T> {
    check_unit("empirical_mean", empirical_mean)?;
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::invalid("delta", format!("{delta} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if empirical_mean == T::one() {
        return Ok(T::one());
    }
    let budget = -delta.ln() / T::lit(n as f64);
    // kl(mean, .) increases from 0 at the mean to +inf at 1.
    bisect_monotone(
        |m| kl_bernoulli_or_inf(empirical_mean, m),
        empirical_mean,
        T::one(),
        budget,
        T::lit(BISECTION_TOL),
    )
    .map(|m| m.max(empirical_mean))
}

/// Computes the test bound of every record at a shared `delta` and marks
/// which guarantee is tighter. Input order is preserved.
pub fn compare_records<T: Real>(
    records: &[ExperimentRecord<T>],
    delta: T,
    tie_tol: T,
) -> Result<Vec<BoundComparison<T>>> {
    records
        .iter()
        .map(|record| {
            let test_bound = invert_test_bound(record.test_score, record.n_valid, delta)?;
            let winner = if test_bound < record.pac_bayes_bound - tie_tol {
                Winner::Test
            } else if record.pac_bayes_bound < test_bound - tie_tol {
                Winner::PacBayes
            } else {
                Winner::Tie
            };
            Ok(BoundComparison {
                record: record.clone(),
                test_bound,
                winner,
            })
        })
        .collect()
}

const RECORD_HEADER: [&str; 4] = ["name", "pac_bayes_bound", "test_score", "n_valid"];

/// Parses CSV with header `name,pac_bayes_bound,test_score,n_valid`. Rows are
/// numbered from 1, excluding the header.
pub fn parse_records<T: Real>(csv_text: &str) -> Result<Vec<ExperimentRecord<T>>> {
    if csv_text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(0, "header", e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != RECORD_HEADER {
        return Err(Error::csv(
            0,
            "header",
            format!("expected `{}`", RECORD_HEADER.join(",")),
        ));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::csv(row_no, "record", e.to_string()))?;
        if row.len() != RECORD_HEADER.len() {
            let field = RECORD_HEADER.get(row.len()).copied().unwrap_or("n_valid");
            return Err(Error::csv(
                row_no,
                field,
                format!(
                    "expected {} fields, found {}",
                    RECORD_HEADER.len(),
                    row.len()
                ),
            ));
        }
        let name = row.get(0).unwrap_or_default().to_string();
        if name.is_empty() {
            return Err(Error::csv(row_no, "name", "missing"));
        }
        let pac_bayes_bound: T = parse_field(&row, 1, "pac_bayes_bound", row_no)?;
        let test_score: T = parse_field(&row, 2, "test_score", row_no)?;
        let n_valid: u64 = parse_field(&row, 3, "n_valid", row_no)?;
        for (field, v) in [
            ("pac_bayes_bound", pac_bayes_bound),
            ("test_score", test_score),
        ] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::csv(row_no, field, format!("{v} outside [0, 1]")));
            }
        }
        if n_valid == 0 {
            return Err(Error::csv(row_no, "n_valid", "must be at least 1"));
        }
        records.push(ExperimentRecord {
            name,
            pac_bayes_bound,
            test_score,
            n_valid,
        });
    }
    Ok(records)
}

/// CSV with header `name,pac_bayes_bound,test_bound,test_score,n_valid,winner`,
/// reals at four decimals.
pub fn comparisons_to_csv<T: Real>(rows: &[BoundComparison<T>]) -> String {
    let mut out = String::from("name,pac_bayes_bound,test_bound,test_score,n_valid,winner\n");
    for c in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{},{}\n",
            c.record.name,
            c.record.pac_bayes_bound,
            c.test_bound,
            c.record.test_score,
            c.record.n_valid,
            c.winner
        ));
    }
    out
}
