//! Catoni's PAC-Bayes bound, its Gibbs minimiser, and the posterior-optimal
//! bound as a functional of the risk prior.
//!
//! For a posterior `pi` absolutely continuous w.r.t. the prior `pi_p`, and
//! temperature `lambda > 0`, with probability at least `1 - delta`:
//!
//! ```text
//! pi[R~] <= pi[R] + lambda * KL(pi, pi_p) - lambda * ln(delta) + 1 / (8 n lambda)
//! ```
//!
//! The right-hand side is minimised by the Gibbs posterior
//! `d pi / d pi_p ∝ exp(-R / lambda)`, where it equals
//! `-lambda * ln pi_p[exp(-R / lambda)] + 1 / (8 n lambda) - lambda * ln(delta)`.
//! That value only depends on the distribution of `R` under the prior.

use crate::error::{Error, Result};
use crate::numerics::{check_unit, log_expectation_exp, log_sum_exp, LogProb};
use crate::risk_prior::{DiscreteRiskPrior, FinitePredictorSpace};
use crate::scalar::Real;

/// Sample size, confidence level and temperature of one Catoni bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatoniParams<T> {
    n: u64,
    delta: T,
    lambda: T,
}

impl<T: Real> CatoniParams<T> {
    pub fn new(n: u64, delta: T, lambda: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::invalid("delta", format!("{delta} outside (0, 1)")));
        }
        check_lambda(lambda)?;
        Ok(Self { n, delta, lambda })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::new(self.n, self.delta, lambda)
    }

    /// Posterior-independent part: `1 / (8 n lambda) - lambda ln(delta)`.
    pub fn offset(&self) -> T {
        let n = T::lit(self.n as f64);
        T::one() / (T::lit(8.0) * n * self.lambda) - self.lambda * self.delta.ln()
    }
}

pub(crate) fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if lambda > T::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "lambda",
            format!("{lambda} must be positive and finite"),
        ))
    }
}

/// Posterior masses aligned with a [`FinitePredictorSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorWeights<T> {
    masses: Vec<T>,
}

impl<T: Real> PosteriorWeights<T> {
    pub fn new(masses: Vec<T>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sum = T::zero();
        for &m in &masses {
            if !(m >= T::zero()) {
                return Err(Error::invalid("posterior mass", format!("{m} is negative")));
            }
            sum = sum + m;
        }
        if (sum - T::one()).abs() > T::mass_tolerance() {
            return Err(Error::NotNormalized {
                sum: sum.to_f64_lossy(),
            });
        }
        Ok(Self { masses })
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// `sum_i masses_i * values_i`.
    pub fn expectation(&self, values: &[T]) -> T {
        self.masses
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&m, &v)| acc + m * v)
    }
}

/// `KL(posterior, prior)` in nats. Returns `+inf` when the posterior puts
/// mass where the prior has none.
pub fn kl_discrete<T: Real>(posterior: &PosteriorWeights<T>, prior_masses: &[T]) -> Result<T> {
    if posterior.len() != prior_masses.len() {
        return Err(Error::LengthMismatch {
            left: posterior.len(),
            right: prior_masses.len(),
        });
    }
    let mut kl = T::zero();
    for (&post, &prior) in posterior.masses().iter().zip(prior_masses) {
        if post == T::zero() {
            continue;
        }
        if prior == T::zero() {
            return Ok(T::infinity());
        }
        kl = kl + post * (post.ln() - prior.ln());
    }
    Ok(kl.max(T::zero()))
}

/// Catoni's bound for `posterior` on `space`. Infinite when the posterior is
/// not absolutely continuous w.r.t. the prior.
pub fn catoni_bound<T: Real>(
    posterior: &PosteriorWeights<T>,
    space: &FinitePredictorSpace<T>,
    params: &CatoniParams<T>,
) -> Result<T> {
    let kl = kl_discrete(posterior, space.prior_masses())?;
    if kl.is_infinite() {
        return Ok(T::infinity());
    }
    Ok(posterior.expectation(space.risks()) + params.lambda() * kl + params.offset())
}

/// Gibbs posterior `∝ prior * exp(-risk / lambda)`, normalised in log space.
pub fn gibbs_posterior<T: Real>(
    space: &FinitePredictorSpace<T>,
    lambda: T,
) -> Result<PosteriorWeights<T>> {
    check_lambda(lambda)?;
    let log_weights: Vec<T> = space
        .risks()
        .iter()
        .zip(space.prior_masses())
        .map(|(&r, &m)| {
            if m == T::zero() {
                T::neg_infinity()
            } else {
                m.ln() - r / lambda
            }
        })
        .collect();
    let log_norm = log_sum_exp(&log_weights);
    let masses = log_weights.iter().map(|&w| (w - log_norm).exp()).collect();
    PosteriorWeights::new(masses)
}

/// Minimum of Catoni's bound over all posteriors, as a function of the risk
/// prior alone.
pub fn catoni_min_bound<T: Real>(rho: &DiscreteRiskPrior<T>, params: &CatoniParams<T>) -> T {
    let lambda = params.lambda();
    let exponents: Vec<T> = rho.atoms().iter().map(|&r| -r / lambda).collect();
    let log_partition = log_expectation_exp(&rho.log_masses(), &exponents)
        .expect("a risk prior is non-empty with aligned atoms and masses");
    -lambda * log_partition + params.offset()
}

/// Closed-form minimal bound for the scaled Bernoulli prior `r * Ber(q)`.
pub fn bmin_bernoulli<T: Real>(r: T, q: T, params: &CatoniParams<T>) -> Result<T> {
    check_unit("r", r)?;
    check_unit("q", q)?;
    let lambda = params.lambda();
    let log_low = LogProb::from_prob(q)?.complement().ln();
    let log_high = if q == T::zero() {
        T::neg_infinity()
    } else {
        q.ln() - r / lambda
    };
    Ok(-lambda * log_sum_exp(&[log_low, log_high]) + params.offset())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk_prior::pushforward;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_predictor() -> FinitePredictorSpace<f64> {
        FinitePredictorSpace::new(vec![0.0, 0.5], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(CatoniParams::new(0, 0.05, 0.01).is_err());
        assert!(CatoniParams::new(10, 0.0, 0.01).is_err());
        assert!(CatoniParams::new(10, 1.0, 0.01).is_err());
        assert!(CatoniParams::new(10, 0.05, 0.0).is_err());
        assert!(CatoniParams::new(10, 0.05, f64::INFINITY).is_err());
    }

    #[test]
    fn kl_discrete_examples() {
        let prior = [0.5, 0.5];
        let same = PosteriorWeights::new(prior.to_vec()).unwrap();
        assert_eq!(kl_discrete(&same, &prior).unwrap(), 0.0);
        let dirac = PosteriorWeights::new(vec![1.0, 0.0]).unwrap();
        assert_relative_eq!(kl_discrete(&dirac, &prior).unwrap(), std::f64::consts::LN_2);
        let tilted = PosteriorWeights::new(vec![0.9, 0.1]).unwrap();
        assert_relative_eq!(
            kl_discrete(&tilted, &prior).unwrap(),
            0.368_064_207_168_497,
            max_relative = 1e-14
        );
    }

    #[test]
    fn kl_discrete_absolute_continuity() {
        let post = PosteriorWeights::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(kl_discrete(&post, &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(matches!(
            kl_discrete(&post, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        let space = FinitePredictorSpace::new(vec![0.1, 0.2], vec![1.0, 0.0]).unwrap();
        let params = CatoniParams::new(100, 0.05, 0.1).unwrap();
        assert_eq!(catoni_bound(&post, &space, &params).unwrap(), f64::INFINITY);
    }

    #[test]
    fn catoni_bound_examples() {
        let params = CatoniParams::new(500, 0.05, 0.01).unwrap();
        let space = two_predictor();
        let gibbs = gibbs_posterior(&space, 0.01).unwrap();
        let b = catoni_bound(&gibbs, &space, &params).unwrap();
        assert!((b - 0.062).abs() <= 1e-3, "{b}");

        let dirac = FinitePredictorSpace::new(vec![0.1], vec![1.0]).unwrap();
        let post = PosteriorWeights::new(vec![1.0]).unwrap();
        let b = catoni_bound(&post, &dirac, &params).unwrap();
        assert!((b - 0.155).abs() <= 1e-3, "{b}");

        let zeros = FinitePredictorSpace::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
        let post = PosteriorWeights::new(vec![0.5, 0.5]).unwrap();
        let params = CatoniParams::new(1, (-1.0f64).exp(), 1.0).unwrap();
        assert_relative_eq!(
            catoni_bound(&post, &zeros, &params).unwrap(),
            1.125,
            max_relative = 1e-15
        );
    }

    #[test]
    fn catoni_bound_misaligned() {
        let params = CatoniParams::new(500, 0.05, 0.01).unwrap();
        let post = PosteriorWeights::new(vec![1.0]).unwrap();
        assert!(catoni_bound(&post, &two_predictor(), &params).is_err());
    }

    #[test]
    fn gibbs_examples() {
        let space = FinitePredictorSpace::new(vec![0.3; 3], vec![0.2, 0.3, 0.5]).unwrap();
        let post = gibbs_posterior(&space, 0.01).unwrap();
        for (a, b) in post.masses().iter().zip(space.prior_masses()) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }

        let post = gibbs_posterior(&two_predictor(), 0.01).unwrap();
        let tail = (-50.0f64).exp() / (1.0 + (-50.0f64).exp());
        assert_relative_eq!(post.masses()[1], tail, max_relative = 1e-12);
        assert_relative_eq!(post.masses()[1], 1.9287e-22, max_relative = 1e-4);

        let space =
            FinitePredictorSpace::new(vec![0.0_f64, 0.9, 0.4], vec![0.2, 0.3, 0.5]).unwrap();
        let post = gibbs_posterior(&space, 1e9).unwrap();
        for (a, b) in post.masses().iter().zip(space.prior_masses()) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert!(gibbs_posterior(&space, -1.0).is_err());
    }

    #[test]
    fn gibbs_survives_tiny_temperature() {
        let post = gibbs_posterior(&two_predictor(), 1e-4).unwrap();
        assert_eq!(post.masses(), &[1.0, 0.0]);
    }

    #[test]
    fn min_bound_examples() {
        let params = CatoniParams::new(500, 0.05_f64, 0.01).unwrap();
        let rho = DiscreteRiskPrior::new(vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
        let b = catoni_min_bound(&rho, &params);
        assert!((b - 0.062).abs() <= 1e-3);
        assert_relative_eq!(b, 0.061_888_794_541_139_363, max_relative = 1e-13);

        let r = 0.37;
        let dirac = DiscreteRiskPrior::dirac(r).unwrap();
        assert_relative_eq!(
            catoni_min_bound(&dirac, &params),
            r + 1.0 / (8.0 * 500.0 * 0.01) - 0.01 * 0.05f64.ln(),
            max_relative = 1e-14
        );

        let params = CatoniParams::new(100, 0.1, 0.05).unwrap();
        let ber = DiscreteRiskPrior::scaled_bernoulli(0.2, 0.3).unwrap();
        let closed = bmin_bernoulli(0.2, 0.3, &params).unwrap();
        assert_relative_eq!(
            catoni_min_bound(&ber, &params),
            closed,
            max_relative = 1e-14
        );
        assert_relative_eq!(closed, 0.157_572_056_246_309_6, max_relative = 1e-13);
    }

    #[test]
    fn bmin_bernoulli_examples() {
        let params = CatoniParams::new(500, 0.05, 0.01).unwrap();
        let offset = 1.0 / (8.0 * 0.01 * 500.0) - 0.01 * 0.05f64.ln();
        assert_relative_eq!(
            bmin_bernoulli(0.5, 0.0, &params).unwrap(),
            offset,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            bmin_bernoulli(0.5, 1.0, &params).unwrap(),
            0.5 + offset,
            max_relative = 1e-14
        );
        let v = bmin_bernoulli(0.5, 0.5, &params).unwrap();
        assert!((v - 0.0619).abs() < 1e-4);
        assert!(bmin_bernoulli(1.5, 0.5, &params).is_err());
        assert!(bmin_bernoulli(0.5, -0.1, &params).is_err());
    }

    fn arb_space() -> impl Strategy<Value = FinitePredictorSpace<f64>> {
        proptest::collection::vec((0.0f64..=1.0, 0.01f64..1.0), 1..6).prop_map(|pairs| {
            let total: f64 = pairs.iter().map(|p| p.1).sum();
            FinitePredictorSpace::new(
                pairs.iter().map(|p| p.0).collect(),
                pairs.iter().map(|p| p.1 / total).collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn gibbs_bound_equals_min_bound(
            space in arb_space(),
            lambda in 1e-3f64..1.0,
            n in 1u64..100_000,
            delta in 0.001f64..0.5,
        ) {
            let params = CatoniParams::new(n, delta, lambda).unwrap();
            let gibbs = gibbs_posterior(&space, lambda).unwrap();
            let direct = catoni_bound(&gibbs, &space, &params).unwrap();
            let via_prior = catoni_min_bound(&pushforward(&space), &params);
            prop_assert!((direct - via_prior).abs() <= 1e-10 * direct.abs().max(1.0));
        }

        #[test]
        fn bound_is_permutation_invariant(space in arb_space(), seed in 0usize..100) {
            let params = CatoniParams::new(1000, 0.05, 0.05).unwrap();
            let post = gibbs_posterior(&space, 0.2).unwrap();
            let k = space.len();
            let perm: Vec<usize> = (0..k).map(|i| (i * 7 + seed) % k).collect();
            let mut seen = perm.clone();
            seen.sort_unstable();
            seen.dedup();
            prop_assume!(seen.len() == k);
            let permuted = FinitePredictorSpace::new(
                perm.iter().map(|&i| space.risks()[i]).collect(),
                perm.iter().map(|&i| space.prior_masses()[i]).collect(),
            ).unwrap();
            let post_p = PosteriorWeights::new(perm.iter().map(|&i| post.masses()[i]).collect()).unwrap();
            let a = catoni_bound(&post, &space, &params).unwrap();
            let b = catoni_bound(&post_p, &permuted, &params).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
