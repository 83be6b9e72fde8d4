//! Prior mass that class-permutation-invariant priors put on low-risk
//! predictors.
//!
//! Cluster model: `k` classes, each split into `p` equally sized clusters.
//! The prior labels every cluster with a uniformly random class, so the
//! number of mislabelled clusters is `Binomial(k p, (k - 1) / k)` and the
//! risk is that count divided by `k p`.

use crate::error::{Error, Result};
use crate::numerics::{log_binomial_tail, LogProb};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterModel<T> {
    k: u64,
    p: u64,
    r: T,
}

impl<T: Real> ClusterModel<T> {
    pub fn new(k: u64, p: u64, r: T) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("k", format!("{k} classes, need at least 2")));
        }
        if p < 1 {
            return Err(Error::invalid("p", "need at least one cluster per class"));
        }
        if !(r > T::zero() && r < T::lit(0.5)) {
            return Err(Error::invalid("r", format!("{r} outside (0, 0.5)")));
        }
        Ok(Self { k, p, r })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn clusters(&self) -> u64 {
        self.k * self.p
    }

    /// Largest number of mislabelled clusters with error rate `<= r`.
    pub fn max_errors(&self) -> u64 {
        let x = self.r.to_f64_lossy() * self.clusters() as f64;
        // Absorb representation error when r k p is an integer.
        (x + 1e-9 * x.max(1.0)).floor() as u64
    }
}

/// `log P(R <= r)` under the cluster model, exactly.
pub fn log_mass_low_risk_exact<T: Real>(model: &ClusterModel<T>) -> LogProb<T> {
    let k = model.k() as f64;
    let log_wrong = LogProb::new(T::lit(((k - 1.0) / k).ln())).expect("(k-1)/k < 1");
    log_binomial_tail(model.clusters(), log_wrong, model.max_errors())
        .expect("max_errors <= clusters for r < 1/2")
}

/// Closed-form upper bound on `log P(R <= r)`:
/// `ln(r k p) + r k p ln(k p) - (1 - r) k p ln(k)`.
///
/// Evaluated as written; it can exceed zero (a vacuous bound) and is
/// therefore returned as a plain log value.
pub fn log_mass_low_risk_bound<T: Real>(model: &ClusterModel<T>) -> T {
    let kp = T::lit(model.clusters() as f64);
    let k = T::lit(model.k() as f64);
    let r = model.r();
    let rkp = r * kp;
    rkp.ln() + rkp * kp.ln() - (T::one() - r) * kp * k.ln()
}

/// `-ln(k!)`: mass of the single correct labelling among `k!` class
/// permutations.
pub fn log_permutation_prior_mass<T: Real>(k: u64) -> Result<LogProb<T>> {
    if k < 2 {
        return Err(Error::invalid("k", format!("{k} classes, need at least 2")));
    }
    LogProb::new(T::lit(-libm::lgamma(k as f64 + 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMassRow<T> {
    pub k: u64,
    pub p: u64,
    pub log_exact: LogProb<T>,
    pub log_bound: T,
}

/// Both masses for every `(k, p)` pair, `k` outermost.
pub fn sweep_cluster_masses<T: Real>(
    k_grid: &[u64],
    p_grid: &[u64],
    r: T,
) -> Result<Vec<ClusterMassRow<T>>> {
    if k_grid.is_empty() || p_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rows = Vec::with_capacity(k_grid.len() * p_grid.len());
    for &k in k_grid {
        for &p in p_grid {
            let model = ClusterModel::new(k, p, r)?;
            rows.push(ClusterMassRow {
                k,
                p,
                log_exact: log_mass_low_risk_exact(&model),
                log_bound: log_mass_low_risk_bound(&model),
            });
        }
    }
    Ok(rows)
}

/// CSV with header `k,p,log10_exact,log10_bound`.
pub fn cluster_rows_to_csv<T: Real>(rows: &[ClusterMassRow<T>]) -> String {
    let mut out = String::from("k,p,log10_exact,log10_bound\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.k,
            row.p,
            row.log_exact.log10(),
            row.log_bound / T::LN_10()
        ));
    }
    out
}
