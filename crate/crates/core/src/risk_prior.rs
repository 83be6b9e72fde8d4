//! Discrete risk priors: the distribution of the empirical risk of a
//! predictor drawn from the prior.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::{check_unit, LogProb};
use crate::scalar::Real;

/// Atoms closer than this are treated as the same risk value.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

fn check_masses<T: Real>(masses: &[T]) -> Result<()> {
    let mut sum = T::zero();
    for &m in masses {
        if !(m >= T::zero()) || !m.is_finite() {
            return Err(Error::invalid(
                "mass",
                format!("{m} is not a finite non-negative value"),
            ));
        }
        sum = sum + m;
    }
    if (sum - T::one()).abs() > T::mass_tolerance() {
        return Err(Error::NotNormalized {
            sum: sum.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_aligned<T>(left: &[T], right: &[T]) -> Result<()> {
    if left.is_empty() {
        return Err(Error::EmptyInput);
    }
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    Ok(())
}

/// A finite set of predictors, each with a prior mass and an empirical risk
/// in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePredictorSpace<T> {
    risks: Vec<T>,
    prior_masses: Vec<T>,
}

impl<T: Real> FinitePredictorSpace<T> {
    pub fn new(risks: Vec<T>, prior_masses: Vec<T>) -> Result<Self> {
        check_aligned(&risks, &prior_masses)?;
        for &r in &risks {
            check_unit("risk", r)?;
        }
        check_masses(&prior_masses)?;
        Ok(Self {
            risks,
            prior_masses,
        })
    }

    pub fn risks(&self) -> &[T] {
        &self.risks
    }

    pub fn prior_masses(&self) -> &[T] {
        &self.prior_masses
    }

    pub fn len(&self) -> usize {
        self.risks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.risks.is_empty()
    }

    /// Prior mean of the empirical risk.
    pub fn mean_risk(&self) -> T {
        self.risks
            .iter()
            .zip(&self.prior_masses)
            .fold(T::zero(), |acc, (&r, &m)| acc + r * m)
    }
}

/// A probability measure on finitely many risk values in `[0, 1]`.
///
/// Atoms are strictly increasing; masses are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRiskPrior<T> {
    atoms: Vec<T>,
    masses: Vec<T>,
}

impl<T: Real> DiscreteRiskPrior<T> {
    /// Builds a prior from atoms that are already strictly increasing.
    pub fn new(atoms: Vec<T>, masses: Vec<T>) -> Result<Self> {
        check_aligned(&atoms, &masses)?;
        for &a in &atoms {
            check_unit("atom", a)?;
        }
        if atoms.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("atoms", "not strictly increasing"));
        }
        check_masses(&masses)?;
        Ok(Self { atoms, masses })
    }

    /// Builds a prior from arbitrary `(atom, mass)` pairs: sorts them and
    /// merges atoms within [`ATOM_MERGE_TOL`] of each other.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let mut pairs: Vec<(T, T)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &(a, _) in &pairs {
            check_unit("atom", a)?;
        }
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
        let tol = T::lit(ATOM_MERGE_TOL);
        let mut atoms: Vec<T> = Vec::with_capacity(pairs.len());
        let mut masses: Vec<T> = Vec::with_capacity(pairs.len());
        for (a, m) in pairs {
            match atoms.last() {
                Some(&last) if a - last <= tol => {
                    let top = masses.last_mut().expect("aligned");
                    *top = *top + m;
                }
                _ => {
                    atoms.push(a);
                    masses.push(m);
                }
            }
        }
        check_masses(&masses)?;
        Ok(Self { atoms, masses })
    }

    pub fn dirac(atom: T) -> Result<Self> {
        Self::new(vec![atom], vec![T::one()])
    }

    /// Scaled Bernoulli `r * Ber(q)`: mass `q` at `r` and `1 - q` at 0.
    /// Zero-mass atoms are dropped.
    pub fn scaled_bernoulli(r: T, q: T) -> Result<Self> {
        check_unit("r", r)?;
        check_unit("q", q)?;
        Self::from_split(r, T::one() - q, q)
    }

    fn from_split(r: T, low: T, high: T) -> Result<Self> {
        if high <= T::zero() || r == T::zero() {
            Self::dirac(T::zero())
        } else if low <= T::zero() {
            Self::dirac(r)
        } else {
            Self::new(vec![T::zero(), r], vec![low, high])
        }
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn log_masses(&self) -> Vec<LogProb<T>> {
        self.masses
            .iter()
            .map(|&m| LogProb::from_prob(m.min(T::one())).unwrap_or_else(|_| LogProb::zero()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.atoms.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn mean(&self) -> T {
        self.iter().fold(T::zero(), |acc, (a, m)| acc + a * m)
    }

    /// `P(R <= x)`.
    pub fn cdf(&self, x: T) -> T {
        self.iter()
            .take_while(|&(a, _)| a <= x)
            .fold(T::zero(), |acc, (_, m)| acc + m)
    }

    /// `P(R >= r)`, closed lower endpoint.
    pub fn upper_tail(&self, r: T) -> T {
        self.iter()
            .filter(|&(a, _)| a >= r)
            .fold(T::zero(), |acc, (_, m)| acc + m)
    }

    /// `P(R < r)`, open upper endpoint.
    pub fn mass_below(&self, r: T) -> T {
        self.iter()
            .take_while(|&(a, _)| a < r)
            .fold(T::zero(), |acc, (_, m)| acc + m)
    }

    /// Serialises as CSV with header `atom,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("atom,mass\n");
        for (a, m) in self.iter() {
            out.push_str(&format!("{a},{m}\n"));
        }
        out
    }

    /// Parses CSV with header `atom,mass`. Rows may come in any order;
    /// duplicate atoms are merged.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::csv(0, "header", e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["atom", "mass"] {
            return Err(Error::csv(0, "header", "expected `atom,mass`"));
        }
        let mut pairs = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::csv(row, "record", e.to_string()))?;
            let atom: T = parse_field(&record, 0, "atom", row)?;
            let mass: T = parse_field(&record, 1, "mass", row)?;
            if !(atom >= T::zero() && atom <= T::one()) {
                return Err(Error::csv(row, "atom", format!("{atom} outside [0, 1]")));
            }
            if !(mass >= T::zero()) {
                return Err(Error::csv(row, "mass", format!("{mass} is negative")));
            }
            pairs.push((atom, mass));
        }
        Self::from_pairs(pairs)
    }
}

pub(crate) fn parse_field<F: std::str::FromStr>(
    record: &csv::StringRecord,
    index: usize,
    field: &str,
    row: usize,
) -> Result<F> {
    let raw = record
        .get(index)
        .ok_or_else(|| Error::csv(row, field, "missing"))?;
    raw.parse()
        .map_err(|_| Error::csv(row, field, format!("cannot parse `{raw}`")))
}

/// Distribution of the empirical risk under the prior: distinct risk values
/// with their summed prior masses.
pub fn pushforward<T: Real>(space: &FinitePredictorSpace<T>) -> DiscreteRiskPrior<T> {
    DiscreteRiskPrior::from_pairs(
        space
            .risks()
            .iter()
            .copied()
            .zip(space.prior_masses().iter().copied()),
    )
    .expect("a valid predictor space has a valid push-forward")
}

/// Outcome of comparing two risk priors in the first-order stochastic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StochasticOrder {
    /// `a <=_stoch b`: the CDF of `a` lies above that of `b` everywhere.
    LessOrEqual,
    GreaterOrEqual,
    Equal,
    Incomparable,
}

impl StochasticOrder {
    /// `true` for `LessOrEqual` and `Equal`.
    pub fn is_le(self) -> bool {
        matches!(self, StochasticOrder::LessOrEqual | StochasticOrder::Equal)
    }

    pub fn is_ge(self) -> bool {
        matches!(
            self,
            StochasticOrder::GreaterOrEqual | StochasticOrder::Equal
        )
    }
}

/// Compares the CDFs of `a` and `b` on the union of their atoms.
pub fn stochastic_compare<T: Real>(
    a: &DiscreteRiskPrior<T>,
    b: &DiscreteRiskPrior<T>,
    tol: T,
) -> StochasticOrder {
    let (mut i, mut j) = (0, 0);
    let (mut cdf_a, mut cdf_b) = (T::zero(), T::zero());
    let (mut min_diff, mut max_diff) = (T::zero(), T::zero());
    while i < a.len() || j < b.len() {
        let x = match (a.atoms.get(i), b.atoms.get(j)) {
            (Some(&xa), Some(&xb)) => xa.min(xb),
            (Some(&xa), None) => xa,
            (None, Some(&xb)) => xb,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a.atoms[i] <= x {
            cdf_a = cdf_a + a.masses[i];
            i += 1;
        }
        while j < b.len() && b.atoms[j] <= x {
            cdf_b = cdf_b + b.masses[j];
            j += 1;
        }
        let d = cdf_a - cdf_b;
        min_diff = min_diff.min(d);
        max_diff = max_diff.max(d);
    }
    let above = min_diff >= -tol;
    let below = max_diff <= tol;
    match (above, below) {
        (true, true) => StochasticOrder::Equal,
        (true, false) => StochasticOrder::LessOrEqual,
        (false, true) => StochasticOrder::GreaterOrEqual,
        (false, false) => StochasticOrder::Incomparable,
    }
}

/// The stochastically smallest prior with at least `rho([r, inf))` mass on
/// `[r, inf)`: the scaled Bernoulli `r * Ber(rho([r, inf)))`.
pub fn bernoulli_minorant<T: Real>(
    rho: &DiscreteRiskPrior<T>,
    r: T,
) -> Result<DiscreteRiskPrior<T>> {
    if !(r > T::zero() && r <= T::one()) {
        return Err(Error::invalid("r", format!("{r} outside (0, 1]")));
    }
    DiscreteRiskPrior::from_split(r, rho.mass_below(r), rho.upper_tail(r))
}
