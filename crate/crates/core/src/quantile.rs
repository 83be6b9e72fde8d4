//! Prior-mass requirements for reaching a target guarantee with Catoni's
//! bound.
//!
//! For a target `G`, the posterior-optimal bound of the scaled Bernoulli
//! prior `r * Ber(q)` stays above `G` unless the prior puts at least
//! `qbar(r, G)` mass on risks below `r`. At temperature `lambda`, with
//! `E = exp(-G / lambda + 1 / (8 n lambda^2) - ln(delta))`:
//!
//! ```text
//! qbar_lambda(r, G) = 1 - clamp((1 - E) / (1 - exp(-r / lambda)), 0, 1)
//! ```
//!
//! `E` itself (clamped to 1) is the saturation level `qbar_lambda` tends to as
//! `r` grows; it is below 1 only inside a window of temperatures, which is
//! empty when `G < sqrt(-ln(delta) / (2n))`.

use rayon::prelude::*;

use crate::catoni::{check_lambda, CatoniParams};
use crate::error::{Error, Result};
use crate::numerics::{minimize_scalar, DEFAULT_GRID, GOLDEN_TOL};
use crate::scalar::Real;

/// Number of temperatures in the default sweep.
pub const DEFAULT_SWEEP_TEMPERATURES: usize = 40;

/// Target generalisation guarantee `G` at sample size `n` and level `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec<T> {
    guarantee: T,
    n: u64,
    delta: T,
}

impl<T: Real> TargetSpec<T> {
    /// `guarantee` must lie in `[0, 1)`; zero is accepted and is always
    /// unreachable.
    pub fn new(guarantee: T, n: u64, delta: T) -> Result<Self> {
        if !(guarantee >= T::zero() && guarantee < T::one()) {
            return Err(Error::invalid("G", format!("{guarantee} outside [0, 1)")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::invalid("delta", format!("{delta} outside (0, 1)")));
        }
        Ok(Self {
            guarantee,
            n,
            delta,
        })
    }

    pub fn guarantee(&self) -> T {
        self.guarantee
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    fn n_real(&self) -> T {
        T::lit(self.n as f64)
    }

    /// Smallest reachable guarantee, `sqrt(-ln(delta) / (2n))`.
    pub fn reachability_threshold(&self) -> T {
        (-self.delta.ln() / (T::lit(2.0) * self.n_real())).sqrt()
    }

    /// `G^2 + ln(delta) / (2n)`, snapped to zero within rounding so that a
    /// target sitting exactly on the threshold is reachable.
    fn discriminant(&self) -> T {
        let g2 = self.guarantee * self.guarantee;
        let d = g2 + self.delta.ln() / (T::lit(2.0) * self.n_real());
        if d < T::zero() && d >= -T::lit(16.0) * T::epsilon() * g2 {
            T::zero()
        } else {
            d
        }
    }

    pub fn is_reachable(&self) -> bool {
        self.discriminant() >= T::zero()
    }

    fn unreachable(&self) -> Error {
        Error::Unreachable {
            guarantee: self.guarantee.to_f64_lossy(),
            threshold: self.reachability_threshold().to_f64_lossy(),
        }
    }

    /// `ln E = -G / lambda + 1 / (8 n lambda^2) - ln(delta)`.
    pub fn log_saturation(&self, lambda: T) -> T {
        -self.guarantee / lambda + T::one() / (T::lit(8.0) * self.n_real() * lambda * lambda)
            - self.delta.ln()
    }

    pub fn params_at(&self, lambda: T) -> Result<CatoniParams<T>> {
        CatoniParams::new(self.n, self.delta, lambda)
    }
}

/// Temperatures where the requirement does not saturate to 1, together with
/// the asymptotically optimal temperature and the risk threshold of the
/// temperature-free requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureWindow<T> {
    pub lambda_min: T,
    pub lambda_max: T,
    pub lambda_opt: T,
    /// Temperature maximising `G - 1 / (8 n lambda) + lambda ln(delta)`.
    pub lambda_thresh: T,
    /// `G - 2 sqrt(-ln(delta) / (8n))`; may be negative.
    pub r_thresh: T,
}

/// A required prior mass `qbar` on risks strictly below `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequirementPoint<T> {
    pub r: T,
    pub qbar: T,
}

/// `min(1, E)` at temperature `lambda`.
pub fn saturation_factor<T: Real>(lambda: T, target: &TargetSpec<T>) -> Result<T> {
    check_lambda(lambda)?;
    let log_e = target.log_saturation(lambda);
    Ok(if log_e >= T::zero() {
        T::one()
    } else {
        log_e.exp()
    })
}

/// Minimum prior mass on risks below `r` compatible with a bound of `G` at
/// temperature `lambda`.
pub fn qbar_cat_lambda<T: Real>(r: T, target: &TargetSpec<T>, lambda: T) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::invalid("r", format!("{r} must be positive")));
    }
    check_lambda(lambda)?;
    let log_e = target.log_saturation(lambda);
    if log_e >= T::zero() {
        return Ok(T::one());
    }
    let a = r / lambda;
    // E <= exp(-a): the clamp at 1 is active, nothing is required.
    if log_e <= -a {
        return Ok(T::zero());
    }
    // (E - e^{-a}) / (1 - e^{-a}), both differences via expm1.
    let numerator = -log_e.exp() * (-a - log_e).exp_m1();
    let denominator = -(-a).exp_m1();
    Ok((numerator / denominator).min(T::one()).max(T::zero()))
}

pub fn temperature_window<T: Real>(target: &TargetSpec<T>) -> Result<TemperatureWindow<T>> {
    let disc = target.discriminant();
    if disc < T::zero() {
        return Err(target.unreachable());
    }
    let n = target.n_real();
    let g = target.guarantee();
    let ln_delta = target.delta().ln();
    let four_n = T::lit(4.0) * n;
    // Roots of beta^2 / (8n) - G beta - ln(delta) = 0, beta = 1 / lambda. The
    // smaller root comes from the product of roots to avoid cancellation.
    let beta_hi = four_n * (g + disc.sqrt());
    let beta_lo = -T::lit(8.0) * n * ln_delta / beta_hi;
    let lambda_opt = T::one() / (four_n * g);
    let (lambda_min, lambda_max) = if disc == T::zero() {
        (lambda_opt, lambda_opt)
    } else {
        (T::one() / beta_hi, T::one() / beta_lo)
    };
    Ok(TemperatureWindow {
        lambda_min,
        lambda_max,
        lambda_opt,
        lambda_thresh: T::one() / (-T::lit(8.0) * n * ln_delta).sqrt(),
        r_thresh: g - T::lit(2.0) * (-ln_delta / (T::lit(8.0) * n)).sqrt(),
    })
}

/// `min(1, exp(-2 G^2 n - ln(delta)))`, the requirement at `lambda_opt` as
/// `r` grows.
pub fn qbar_max_asymptotic<T: Real>(target: &TargetSpec<T>) -> T {
    let g = target.guarantee();
    let log_q = -T::lit(2.0) * g * g * target.n_real() - target.delta().ln();
    if log_q >= T::zero() {
        T::one()
    } else {
        log_q.exp()
    }
}

/// Temperature-free requirement together with the temperature attaining it.
///
/// Searches `[lambda_min / 10, lambda_max * 10]` with a log-spaced grid and
/// golden-section refinement, and also evaluates `lambda_thresh` and
/// `lambda_opt` directly. Below `r_thresh` the requirement is exactly zero.
pub fn optimal_requirement<T: Real>(r: T, target: &TargetSpec<T>) -> Result<(T, T)> {
    if !(r > T::zero()) {
        return Err(Error::invalid("r", format!("{r} must be positive")));
    }
    let window = temperature_window(target)?;
    let mut best = (
        window.lambda_thresh,
        qbar_cat_lambda(r, target, window.lambda_thresh)?,
    );
    if best.1 == T::zero() {
        return Ok(best);
    }
    let at_opt = qbar_cat_lambda(r, target, window.lambda_opt)?;
    if at_opt < best.1 {
        best = (window.lambda_opt, at_opt);
    }
    let ten = T::lit(10.0);
    let objective = |lambda: T| qbar_cat_lambda(r, target, lambda).unwrap_or(T::one());
    let (lo, hi) = (window.lambda_min / ten, window.lambda_max * ten);
    let searched = minimize_scalar(objective, lo, hi, DEFAULT_GRID, T::lit(GOLDEN_TOL))?;
    if searched.1 < best.1 {
        best = searched;
    }
    Ok(best)
}

/// `inf_lambda qbar_lambda(r, G)`.
pub fn qbar_cat_temperature_free<T: Real>(
    r: T,
    target: &TargetSpec<T>,
) -> Result<RequirementPoint<T>> {
    let (_, qbar) = optimal_requirement(r, target)?;
    Ok(RequirementPoint { r, qbar })
}

/// Closed-form necessary condition: at least `q_alpha = alpha exp(-2 G^2 n -
/// ln(delta))` mass on risks `<= r_alpha = G / (1 - alpha)`. Unreachable
/// targets give `(0, 1)`.
pub fn theorem3_requirement<T: Real>(
    target: &TargetSpec<T>,
    alpha: T,
) -> Result<RequirementPoint<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::invalid("alpha", format!("{alpha} outside (0, 1)")));
    }
    if !target.is_reachable() {
        return Ok(RequirementPoint {
            r: T::zero(),
            qbar: T::one(),
        });
    }
    let g = target.guarantee();
    let log_q = -T::lit(2.0) * g * g * target.n_real() - target.delta().ln();
    Ok(RequirementPoint {
        r: g / (T::one() - alpha),
        qbar: alpha * log_q.exp(),
    })
}

/// One risk value of a requirement sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow<T> {
    pub r: T,
    /// `qbar_lambda(r)` for each temperature of the sweep, in sweep order.
    pub per_lambda: Vec<T>,
    pub temperature_free: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequirementCurve<T> {
    pub lambdas: Vec<T>,
    pub rows: Vec<CurveRow<T>>,
}

impl<T: Real> RequirementCurve<T> {
    /// CSV with header `r,lambda,qbar`: one block per temperature, then the
    /// temperature-free curve with `lambda` set to `min`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,lambda,qbar\n");
        for (j, lambda) in self.lambdas.iter().enumerate() {
            for row in &self.rows {
                out.push_str(&format!(
                    "{},{},{}\n",
                    fmt_real(row.r),
                    fmt_real(*lambda),
                    fmt_real(row.per_lambda[j])
                ));
            }
        }
        for row in &self.rows {
            out.push_str(&format!(
                "{},min,{}\n",
                fmt_real(row.r),
                fmt_real(row.temperature_free)
            ));
        }
        out
    }
}

/// Shortest round-trip representation; scientific notation outside
/// `[1e-4, 1e6)`.
pub fn fmt_real<T: Real>(x: T) -> String {
    let a = x.abs();
    if x == T::zero() || (a >= T::lit(1e-4) && a < T::lit(1e6)) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `count` log-spaced values from `lo` to `hi`, both included.
pub fn log_spaced<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let last = count - 1;
            (0..count)
                .map(|i| match i {
                    0 => lo,
                    i if i == last => hi,
                    i => (a + (b - a) * T::lit(i as f64 / last as f64)).exp(),
                })
                .collect()
        }
    }
}

/// Tabulates `qbar_lambda` for each temperature (default: 40 log-spaced in
/// `[lambda_min, lambda_max]`) and the temperature-free requirement at each
/// `r`. Grid points are independent and evaluated in parallel.
pub fn sweep_requirement_curve<T: Real>(
    target: &TargetSpec<T>,
    r_grid: &[T],
    lambdas: Option<&[T]>,
) -> Result<RequirementCurve<T>> {
    if r_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if r_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("r_grid", "not strictly increasing"));
    }
    let window = temperature_window(target)?;
    let lambdas = match lambdas {
        Some(l) => l.to_vec(),
        None => log_spaced(
            window.lambda_min,
            window.lambda_max,
            DEFAULT_SWEEP_TEMPERATURES,
        ),
    };
    for &lambda in &lambdas {
        check_lambda(lambda)?;
    }
    let rows = r_grid
        .par_iter()
        .map(|&r| {
            let per_lambda = lambdas
                .iter()
                .map(|&l| qbar_cat_lambda(r, target, l))
                .collect::<Result<Vec<T>>>()?;
            let temperature_free = qbar_cat_temperature_free(r, target)?.qbar;
            Ok(CurveRow {
                r,
                per_lambda,
                temperature_free,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RequirementCurve { lambdas, rows })
}
