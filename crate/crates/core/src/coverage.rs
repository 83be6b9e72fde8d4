//! Monte Carlo check that Catoni's bound holds with probability at least
//! `1 - delta` over datasets.
//!
//! Each predictor has a population risk; an empirical risk is the mean of
//! `n` Bernoulli losses at that rate. Every trial draws fresh empirical
//! risks, forms the Gibbs posterior, and records a violation when the
//! posterior's population risk exceeds the bound. Randomness is keyed by
//! `(seed, trial, predictor)`, so reports do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catoni::{catoni_bound, check_lambda, gibbs_posterior, CatoniParams};
use crate::error::{Error, Result};
use crate::risk_prior::{parse_field, FinitePredictorSpace};
use crate::scalar::Real;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

pub const MIN_TRIALS: u64 = 100;

/// Population risks and prior masses of a finite predictor set.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld<T> {
    space: FinitePredictorSpace<T>,
}

impl<T: Real> SyntheticWorld<T> {
    pub fn new(population_risks: Vec<T>, prior_masses: Vec<T>) -> Result<Self> {
        Ok(Self {
            space: FinitePredictorSpace::new(population_risks, prior_masses)?,
        })
    }

    pub fn population_risks(&self) -> &[T] {
        self.space.risks()
    }

    pub fn prior_masses(&self) -> &[T] {
        self.space.prior_masses()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: u64,
    pub violations: u64,
    pub coverage: f64,
    /// Lower end of the 95% Wilson score interval for the coverage.
    pub wilson_low: f64,
}

/// Lower limit of the Wilson score interval at 95%.
pub fn wilson_lower(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let centre = p + z2 / (2.0 * n);
    let spread = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).clamp(0.0, 1.0)
}

fn stream(seed: u64, trial: u64, predictor: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&predictor.to_le_bytes());
    key[24..].copy_from_slice(b"pbcover1");
    ChaCha8Rng::from_seed(key)
}

fn empirical_risks_for_trial<T: Real>(
    world: &SyntheticWorld<T>,
    n: u64,
    seed: u64,
    trial: u64,
) -> Vec<T> {
    world
        .population_risks()
        .iter()
        .enumerate()
        .map(|(i, &risk)| {
            let mut rng = stream(seed, trial, i as u64);
            let p = risk.to_f64_lossy().clamp(0.0, 1.0);
            let losses = Binomial::new(n, p).expect("p in [0, 1]").sample(&mut rng);
            T::lit(losses as f64 / n as f64)
        })
        .collect()
}

/// Empirical risks (means of `n` Bernoulli losses) for every predictor.
pub fn simulate_empirical_risks<T: Real>(
    world: &SyntheticWorld<T>,
    n: u64,
    seed: u64,
) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    Ok(empirical_risks_for_trial(world, n, seed, 0))
}

pub fn run_coverage<T: Real>(
    world: &SyntheticWorld<T>,
    n: u64,
    lambda: T,
    delta: T,
    trials: u64,
    seed: u64,
) -> Result<CoverageReport> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid("trials", format!("{trials} < {MIN_TRIALS}")));
    }
    check_lambda(lambda)?;
    let params = CatoniParams::new(n, delta, lambda)?;
    let violations = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64> {
            let empirical = empirical_risks_for_trial(world, n, seed, trial);
            let space = FinitePredictorSpace::new(empirical, world.prior_masses().to_vec())?;
            let posterior = gibbs_posterior(&space, lambda)?;
            let bound = catoni_bound(&posterior, &space, &params)?;
            let true_risk = posterior.expectation(world.population_risks());
            Ok(u64::from(true_risk > bound))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let covered = trials - violations;
    Ok(CoverageReport {
        trials,
        violations,
        coverage: covered as f64 / trials as f64,
        wilson_low: wilson_lower(covered, trials),
    })
}

/// A coverage experiment read from a fixture file.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub world: SyntheticWorld<T>,
    pub n: u64,
    pub lambda: T,
    pub delta: T,
    pub trials: u64,
    pub seed: u64,
}

impl<T: Real> Scenario<T> {
    /// Parses a fixture: one parameter line
    /// `# n=<count>,lambda=<real>,delta=<real>,trials=<count>,seed=<integer>`
    /// followed by CSV with header `population_risk,prior_mass`.
    pub fn from_fixture(text: &str) -> Result<Self> {
        let (first, body) = text.split_once('\n').unwrap_or((text, ""));
        let params = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::csv(0, "parameters", "first line must start with `#`"))?;
        let mut n = None;
        let mut lambda = None;
        let mut delta = None;
        let mut trials = None;
        let mut seed = None;
        for item in params.split(',') {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::csv(0, "parameters", format!("expected key=value, got `{item}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |field: &str| Error::csv(0, field, format!("cannot parse `{value}`"));
            match key {
                "n" => n = Some(value.parse::<u64>().map_err(|_| bad("n"))?),
                "lambda" => lambda = Some(value.parse::<T>().map_err(|_| bad("lambda"))?),
                "delta" => delta = Some(value.parse::<T>().map_err(|_| bad("delta"))?),
                "trials" => trials = Some(value.parse::<u64>().map_err(|_| bad("trials"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                other => return Err(Error::csv(0, other, "unknown parameter")),
            }
        }
        let missing = |field: &str| Error::csv(0, field, "missing parameter");

        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::csv(0, "header", e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["population_risk", "prior_mass"] {
            return Err(Error::csv(
                0,
                "header",
                "expected `population_risk,prior_mass`",
            ));
        }
        let mut risks = Vec::new();
        let mut masses = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::csv(row, "record", e.to_string()))?;
            risks.push(parse_field::<T>(&record, 0, "population_risk", row)?);
            masses.push(parse_field::<T>(&record, 1, "prior_mass", row)?);
        }
        Ok(Self {
            world: SyntheticWorld::new(risks, masses)?,
            n: n.ok_or_else(|| missing("n"))?,
            lambda: lambda.ok_or_else(|| missing("lambda"))?,
            delta: delta.ok_or_else(|| missing("delta"))?,
            trials: trials.ok_or_else(|| missing("trials"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        })
    }

    pub fn run(&self) -> Result<CoverageReport> {
        run_coverage(
            &self.world,
            self.n,
            self.lambda,
            self.delta,
            self.trials,
            self.seed,
        )
    }
}
