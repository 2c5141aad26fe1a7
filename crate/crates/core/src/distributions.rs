//! Count distributions on `{0, ..., M}`.

use serde::Serialize;

use crate::{Error, Result};

/// `ln s!` for `s = 0..=m`.
pub(crate) fn ln_factorials(m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for s in 1..=m {
        acc += (s as f64).ln();
        out.push(acc);
    }
    out
}

/// Writes the right-truncated Poisson pmf on `0..buf.len()` for a rate given
/// on the log scale. `ln_lambda = -inf` is the point mass at zero.
pub(crate) fn truncated_poisson_from_log_rate(ln_lambda: f64, ln_fact: &[f64], buf: &mut [f64]) {
    if ln_lambda == f64::NEG_INFINITY {
        buf.fill(0.0);
        buf[0] = 1.0;
        return;
    }
    // The e^{-lambda} factor cancels in the renormalization.
    let mut max = f64::NEG_INFINITY;
    for (s, slot) in buf.iter_mut().enumerate() {
        *slot = s as f64 * ln_lambda - ln_fact[s];
        max = max.max(*slot);
    }
    let mut total = 0.0;
    for slot in buf.iter_mut() {
        *slot = (*slot - max).exp();
        total += *slot;
    }
    for slot in buf.iter_mut() {
        *slot /= total;
    }
}

fn check_rate(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRate(lambda))
    }
}

/// Poisson(`lambda`) truncated to `{0, ..., m_max}` and renormalized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedPoisson {
    pub lambda: f64,
    pub m_max: usize,
    pub pmf: Vec<f64>,
}

impl TruncatedPoisson {
    pub fn new(lambda: f64, m_max: usize) -> Result<Self> {
        Ok(TruncatedPoisson {
            lambda,
            m_max,
            pmf: truncated_poisson_pmf(lambda, m_max)?,
        })
    }
}

/// Right-truncated Poisson pmf of length `m_max + 1`. `lambda = 0` gives the
/// point mass at zero.
pub fn truncated_poisson_pmf(lambda: f64, m_max: usize) -> Result<Vec<f64>> {
    check_rate(lambda)?;
    let mut buf = vec![0.0; m_max + 1];
    truncated_poisson_from_log_rate(lambda.ln(), &ln_factorials(m_max), &mut buf);
    Ok(buf)
}

/// Untruncated Poisson masses at `0..=m_max`; they sum to less than one.
pub fn poisson_pmf(lambda: f64, m_max: usize) -> Result<Vec<f64>> {
    check_rate(lambda)?;
    if lambda == 0.0 {
        let mut v = vec![0.0; m_max + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    let ln_lambda = lambda.ln();
    Ok(ln_factorials(m_max)
        .into_iter()
        .enumerate()
        .map(|(s, lf)| (s as f64 * ln_lambda - lambda - lf).exp())
        .collect())
}

/// Distribution of a sum of independent Bernoulli variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernoulliSumDist {
    pub probs: Vec<f64>,
    pub pmf: Vec<f64>,
}

impl BernoulliSumDist {
    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

/// Exact pmf of `sum(Y_m)` with `Y_m ~ Bernoulli(probs[m])`, by sequential
/// convolution.
pub fn bernoulli_sum_exact(probs: &[f64]) -> Result<BernoulliSumDist> {
    let mut pmf = Vec::with_capacity(probs.len() + 1);
    pmf.push(1.0);
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange {
                name: "item probability",
                value: p,
            });
        }
        pmf.push(0.0);
        for k in (0..pmf.len()).rev() {
            let stay = pmf[k] * (1.0 - p);
            let up = if k > 0 { pmf[k - 1] * p } else { 0.0 };
            pmf[k] = stay + up;
        }
    }
    Ok(BernoulliSumDist {
        probs: probs.to_vec(),
        pmf,
    })
}

/// Exact Bernoulli-sum distribution next to its Poisson approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxReport {
    /// `sum(probs)`.
    pub lambda: f64,
    pub exact: Vec<f64>,
    /// Untruncated Poisson masses at `0..=M`.
    pub poisson: Vec<f64>,
    /// `poisson - exact` per count.
    pub deviation: Vec<f64>,
    /// `|poisson - exact| / exact`, `None` where the exact mass is zero.
    pub relative_deviation: Vec<Option<f64>>,
    pub max_abs_deviation: f64,
    pub max_deviation_count: usize,
}

pub fn poisson_approx_report(probs: &[f64]) -> Result<ApproxReport> {
    let exact = bernoulli_sum_exact(probs)?;
    let lambda: f64 = probs.iter().sum();
    let poisson = poisson_pmf(lambda, probs.len())?;
    let deviation: Vec<f64> = poisson.iter().zip(&exact.pmf).map(|(a, b)| a - b).collect();
    let relative_deviation = deviation
        .iter()
        .zip(&exact.pmf)
        .map(|(d, e)| (*e > 0.0).then(|| d.abs() / e))
        .collect();
    let (max_deviation_count, max_abs_deviation) = deviation
        .iter()
        .map(|d| d.abs())
        .enumerate()
        .fold((0, 0.0), |best, (k, d)| if d > best.1 { (k, d) } else { best });
    Ok(ApproxReport {
        lambda,
        exact: exact.pmf,
        poisson,
        deviation,
        relative_deviation,
        max_abs_deviation,
        max_deviation_count,
    })
}
