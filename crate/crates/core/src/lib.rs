//! Catoni PAC-Bayes certificates and the prior-mass requirements they imply.
//!
//! * [`numerics`]: log-space aggregation, binary relative entropy, bracketed
//!   root finding and minimisation, binomial tails.
//! * [`risk_prior`]: discrete risk priors, push-forwards of finite predictor
//!   spaces, first-order stochastic order, Bernoulli minorants.
//! * [`catoni`]: Catoni's bound, Gibbs posteriors, the posterior-optimal bound.
//! * [`quantile`]: required prior mass on low-risk predictors for a target
//!   guarantee, temperature windows, requirement sweeps.
//! * [`test_bounds`]: kl-inverse test-set bounds and certificate comparisons.
//! * [`uninformed`]: low-risk mass of class-permutation-invariant priors.
//! * [`coverage`]: Monte Carlo validity check of the bound.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`, which is what the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catoni;
pub mod coverage;
pub mod error;
pub mod numerics;
pub mod quantile;
pub mod risk_prior;
pub mod scalar;
pub mod test_bounds;
pub mod uninformed;

pub use error::{Error, Result};
pub use scalar::Real;

pub use catoni::{bmin_bernoulli, catoni_bound, catoni_min_bound, gibbs_posterior, kl_discrete};
pub use coverage::{run_coverage, simulate_empirical_risks, wilson_lower, CoverageReport};
pub use numerics::{
    bisect_monotone, kl_bernoulli, log_binomial_tail, log_expectation_exp, minimize_scalar,
};
pub use quantile::{
    qbar_cat_lambda, qbar_cat_temperature_free, qbar_max_asymptotic, saturation_factor,
    sweep_requirement_curve, temperature_window, theorem3_requirement,
};
pub use risk_prior::{bernoulli_minorant, pushforward, stochastic_compare, StochasticOrder};
pub use test_bounds::{
    compare_records, concentration_gamma, invert_test_bound, parse_records, Winner,
};
pub use uninformed::{
    log_mass_low_risk_bound, log_mass_low_risk_exact, log_permutation_prior_mass,
    sweep_cluster_masses,
};

pub type LogProb = numerics::LogProb<f64>;
pub type FinitePredictorSpace = risk_prior::FinitePredictorSpace<f64>;
pub type DiscreteRiskPrior = risk_prior::DiscreteRiskPrior<f64>;
pub type CatoniParams = catoni::CatoniParams<f64>;
pub type PosteriorWeights = catoni::PosteriorWeights<f64>;
pub type TargetSpec = quantile::TargetSpec<f64>;
pub type TemperatureWindow = quantile::TemperatureWindow<f64>;
pub type RequirementPoint = quantile::RequirementPoint<f64>;
pub type RequirementCurve = quantile::RequirementCurve<f64>;
pub type ExperimentRecord = test_bounds::ExperimentRecord<f64>;
pub type BoundComparison = test_bounds::BoundComparison<f64>;
pub type ClusterModel = uninformed::ClusterModel<f64>;
pub type ClusterMassRow = uninformed::ClusterMassRow<f64>;
pub type SyntheticWorld = coverage::SyntheticWorld<f64>;
pub type Scenario = coverage::Scenario<f64>;

pub type DiscreteRiskPriorF32 = risk_prior::DiscreteRiskPrior<f32>;
pub type CatoniParamsF32 = catoni::CatoniParams<f32>;
pub type TargetSpecF32 = quantile::TargetSpec<f32>;
