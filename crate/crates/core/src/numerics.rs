//! Numerically stable scalar primitives.
//!
//! Everything that can underflow double precision is carried on the natural
//! log scale ([`LogProb`]); linear-space probabilities are only produced when
//! a caller explicitly asks for them.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default absolute tolerance on the argument for [`bisect_monotone`].
pub const BISECTION_TOL: f64 = 1e-12;
/// Default absolute tolerance on the argument for golden-section refinement.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Default number of grid points for [`minimize_scalar`].
pub const DEFAULT_GRID: usize = 512;

const MAX_BISECTION_STEPS: usize = 400;
const MAX_GOLDEN_STEPS: usize = 400;

/// A probability stored as its natural logarithm, `value <= 0`.
///
/// `-inf` stands for probability zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb<T>(T);

impl<T: Real> LogProb<T> {
    /// Log of probability one.
    pub fn one() -> Self {
        LogProb(T::zero())
    }

    /// Log of probability zero.
    pub fn zero() -> Self {
        LogProb(T::neg_infinity())
    }

    /// Wraps a log value. Values above zero by no more than a few ulps are
    /// snapped to zero; anything larger (or NaN) is rejected.
    pub fn new(value: T) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::invalid("log probability", "NaN"));
        }
        if value > T::zero() {
            if value <= T::epsilon() * T::lit(64.0) {
                return Ok(LogProb(T::zero()));
            }
            return Err(Error::invalid(
                "log probability",
                format!("{value} is positive"),
            ));
        }
        Ok(LogProb(value))
    }

    pub fn from_prob(p: T) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::invalid("probability", format!("{p} outside [0, 1]")));
        }
        Ok(LogProb(p.ln()))
    }

    /// Natural-log value.
    pub fn ln(self) -> T {
        self.0
    }

    pub fn log10(self) -> T {
        self.0 / T::LN_10()
    }

    /// Linear-space probability; underflows to zero below the type's range.
    pub fn prob(self) -> T {
        self.0.exp()
    }

    /// `log(1 - p)`.
    pub fn complement(self) -> Self {
        LogProb(log1m_exp(self.0))
    }
}

/// `log(1 - exp(x))` for `x <= 0`, accurate across the whole range.
pub fn log1m_exp<T: Real>(x: T) -> T {
    if x >= T::zero() {
        return T::neg_infinity();
    }
    if x > -T::LN_2() {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `log(sum_i exp(values_i))` with the max-shift trick.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |acc, v| if v > acc { v } else { acc });
    if max == T::neg_infinity() || max == T::infinity() {
        return max;
    }
    let sum = values
        .iter()
        .fold(T::zero(), |acc, &v| acc + (v - max).exp());
    max + sum.ln()
}

/// `log E[exp(X)]` for a discrete distribution given by log masses, i.e.
/// `log sum_i exp(log_masses_i + exponents_i)`.
///
/// The masses are expected to sum to one; this is not re-checked here.
pub fn log_expectation_exp<T: Real>(log_masses: &[LogProb<T>], exponents: &[T]) -> Result<T> {
    if log_masses.is_empty() || exponents.is_empty() {
        return Err(Error::EmptyInput);
    }
    if log_masses.len() != exponents.len() {
        return Err(Error::LengthMismatch {
            left: log_masses.len(),
            right: exponents.len(),
        });
    }
    let terms: Vec<T> = log_masses
        .iter()
        .zip(exponents)
        .map(|(m, &e)| {
            // A zero-mass atom contributes nothing, whatever its exponent.
            if m.ln() == T::neg_infinity() {
                T::neg_infinity()
            } else {
                m.ln() + e
            }
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

/// Binary relative entropy `kl(p, q)` in nats, with `0 log 0 = 0`.
///
/// Returns [`Error::InfiniteDivergence`] when `q` is 0 or 1 and `p != q`;
/// see [`kl_bernoulli_or_inf`] for the saturating variant.
pub fn kl_bernoulli<T: Real>(p: T, q: T) -> Result<T> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    let kl = kl_bernoulli_or_inf(p, q);
    if kl.is_infinite() {
        return Err(Error::InfiniteDivergence {
            p: p.to_f64_lossy(),
            q: q.to_f64_lossy(),
        });
    }
    Ok(kl)
}

/// [`kl_bernoulli`] that maps the infinite-divergence case to `+inf`.
/// Inputs are assumed to lie in `[0, 1]`.
pub fn kl_bernoulli_or_inf<T: Real>(p: T, q: T) -> T {
    if p == q {
        return T::zero();
    }
    let one = T::one();
    let head = if p == T::zero() {
        T::zero()
    } else if q == T::zero() {
        return T::infinity();
    } else {
        p * (p / q).ln()
    };
    let tail = if p == one {
        T::zero()
    } else if q == one {
        return T::infinity();
    } else {
        (one - p) * ((one - p) / (one - q)).ln()
    };
    (head + tail).max(T::zero())
}

/// Finds `x` in `[lo, hi]` with `f(x) = target` for a monotone `f`, to an
/// absolute tolerance `tol` on `x`.
///
/// Works for both increasing and decreasing `f`; infinite values at the
/// endpoints are allowed as long as the target is bracketed.
pub fn bisect_monotone<T, F>(f: F, lo: T, hi: T, target: T, tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    if !(lo <= hi) || !(tol > T::zero()) {
        return Err(Error::InvalidBracket {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let (f_lo, f_hi) = (f(lo), f(hi));
    let increasing = f_lo <= f_hi;
    let (min, max) = if increasing {
        (f_lo, f_hi)
    } else {
        (f_hi, f_lo)
    };
    if !(target >= min && target <= max) {
        return Err(Error::NotBracketed {
            target: target.to_f64_lossy(),
            f_lo: f_lo.to_f64_lossy(),
            f_hi: f_hi.to_f64_lossy(),
        });
    }
    if f_lo == target {
        return Ok(lo);
    }
    if f_hi == target {
        return Ok(hi);
    }

    let two = T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..MAX_BISECTION_STEPS {
        if b - a <= tol {
            break;
        }
        let mid = a + (b - a) / two;
        if mid <= a || mid >= b {
            break;
        }
        let below = f(mid) < target;
        if below == increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a + (b - a) / two)
}

/// Bracketed scalar minimisation: a grid scan followed by golden-section
/// refinement on the best grid cell.
///
/// When `lo > 0` the grid and the refinement run on `ln x` (log-spaced
/// grid); otherwise the grid is linear. Refinement stops once the bracket is
/// narrower than `tol` in `x`. Returns the best `(argmin, min)` evaluated.
pub fn minimize_scalar<T, F>(f: F, lo: T, hi: T, grid: usize, tol: T) -> Result<(T, T)>
where
    T: Real,
    F: Fn(T) -> T,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || grid < 3 || !(tol > T::zero()) {
        return Err(Error::InvalidBracket {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let log_scale = lo > T::zero();
    let to_x = |u: T| if log_scale { u.exp() } else { u };
    let (u_lo, u_hi) = if log_scale {
        (lo.ln(), hi.ln())
    } else {
        (lo, hi)
    };
    let eval = |x: T| {
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };

    let last = grid - 1;
    let step = (u_hi - u_lo) / T::lit(last as f64);
    let grid_u = |i: usize| {
        if i == last {
            u_hi
        } else {
            u_lo + step * T::lit(i as f64)
        }
    };
    let grid_x = |i: usize| match i {
        0 => lo,
        i if i == last => hi,
        i => to_x(grid_u(i)),
    };

    let mut best_i = 0;
    let mut best = (lo, eval(lo));
    for i in 1..grid {
        let x = grid_x(i);
        let v = eval(x);
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }

    let mut a = grid_u(best_i.saturating_sub(1));
    let mut b = grid_u((best_i + 1).min(last));
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (eval(to_x(c)), eval(to_x(d)));
    for _ in 0..MAX_GOLDEN_STEPS {
        if to_x(b) - to_x(a) <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = eval(to_x(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = eval(to_x(d));
        }
    }
    let mid = to_x(a + (b - a) / T::lit(2.0));
    for (x, v) in [(to_x(c), fc), (to_x(d), fd), (mid, eval(mid))] {
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// `ln C(n, k)` through the log-gamma function.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    let n = n as f64;
    let k = k as f64;
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// `log P(X <= max_successes)` for `X ~ Binomial(trials, p)`, evaluated
/// entirely in log space.
pub fn log_binomial_tail<T: Real>(
    trials: u64,
    log_p_success: LogProb<T>,
    max_successes: u64,
) -> Result<LogProb<T>> {
    if max_successes > trials {
        return Err(Error::invalid(
            "max_successes",
            format!("{max_successes} exceeds trials {trials}"),
        ));
    }
    if max_successes == trials {
        return Ok(LogProb::one());
    }
    let log_p = log_p_success.ln();
    let log_q = log_p_success.complement().ln();
    let terms: Vec<T> = (0..=max_successes)
        .map(|i| {
            let failures = trials - i;
            let mut term = T::lit(ln_choose(trials, i));
            if i > 0 {
                term = term + T::lit(i as f64) * log_p;
            }
            if failures > 0 {
                term = term + T::lit(failures as f64) * log_q;
            }
            term
        })
        .collect();
    LogProb::new(log_sum_exp(&terms).min(T::zero()))
}

pub(crate) fn check_unit<T: Real>(name: &'static str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{x} outside [0, 1]")))
    }
}
