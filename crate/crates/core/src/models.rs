//! The four nested sum-score likelihoods.
//!
//! Every model has the form
//!
//! ```text
//! P(S* = t) = (1 - theta) * sum_s q(t|s) * pi_s + [t == 0] * theta
//! ```
//!
//! where `pi` is either a free distribution on `0..=M` (multinomial) or a
//! right-truncated Poisson, and `theta` is the self-protective (SP) response
//! probability (zero for the multinomial and Poisson models). Parameters are
//! unconstrained: softmax logits, `ln lambda`, `logit theta`, or regression
//! coefficients on those scales.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{dot, QMatrix, RRDesign};
use crate::distributions::{ln_factorials, truncated_poisson_from_log_rate};
use crate::{Error, Result};

/// Cell probabilities below this are treated as underflow; the log-likelihood
/// then returns `-inf`.
pub const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Free true-score distribution; saturated for the sum-score table.
    #[serde(rename = "multinomial")]
    MultinomialRR,
    #[serde(rename = "poisson")]
    PoissonRR,
    /// Poisson RR with a constant SP probability.
    #[serde(rename = "zip-null")]
    ZipNull,
    /// Log-linear rate and logistic SP probability.
    #[serde(rename = "zip-reg")]
    ZipRegression,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::MultinomialRR,
        ModelKind::PoissonRR,
        ModelKind::ZipNull,
        ModelKind::ZipRegression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MultinomialRR => "multinomial",
            ModelKind::PoissonRR => "poisson",
            ModelKind::ZipNull => "zip-null",
            ModelKind::ZipRegression => "zip-reg",
        }
    }

    pub fn has_sp(self) -> bool {
        matches!(self, ModelKind::ZipNull | ModelKind::ZipRegression)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown model kind `{s}`")))
    }
}

/// Which model to fit, under which design, with which predictors.
///
/// Predictor lists name the non-intercept columns of `x` (rate) and `z` (SP);
/// the intercept is always present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub design: RRDesign,
    pub lambda_predictors: Vec<String>,
    pub sp_predictors: Vec<String>,
}

impl ModelSpec {
    pub fn new(
        kind: ModelKind,
        design: RRDesign,
        lambda_predictors: Vec<String>,
        sp_predictors: Vec<String>,
    ) -> Result<Self> {
        if kind != ModelKind::ZipRegression
            && !(lambda_predictors.is_empty() && sp_predictors.is_empty())
        {
            return Err(Error::InvalidSpec(format!(
                "model `{kind}` takes no predictors"
            )));
        }
        Ok(ModelSpec {
            kind,
            design,
            lambda_predictors,
            sp_predictors,
        })
    }

    /// A model without predictors.
    pub fn null(kind: ModelKind, design: RRDesign) -> Self {
        ModelSpec {
            kind,
            design,
            lambda_predictors: Vec::new(),
            sp_predictors: Vec::new(),
        }
    }

    pub fn m_items(&self) -> usize {
        self.design.m_items()
    }

    /// Length of the `x` vector, intercept included.
    pub fn x_dim(&self) -> usize {
        1 + self.lambda_predictors.len()
    }

    pub fn z_dim(&self) -> usize {
        1 + self.sp_predictors.len()
    }

    pub fn n_params(&self) -> usize {
        match self.kind {
            ModelKind::MultinomialRR => self.m_items(),
            ModelKind::PoissonRR => 1,
            ModelKind::ZipNull => 2,
            ModelKind::ZipRegression => self.x_dim() + self.z_dim(),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self.kind {
            ModelKind::MultinomialRR => (1..=self.m_items()).map(|s| format!("logit_pi{s}")).collect(),
            ModelKind::PoissonRR => vec!["ln_lambda".into()],
            ModelKind::ZipNull => vec!["ln_lambda".into(), "logit_theta".into()],
            ModelKind::ZipRegression => std::iter::once("beta.intercept".to_string())
                .chain(self.lambda_predictors.iter().map(|p| format!("beta.{p}")))
                .chain(std::iter::once("gamma.intercept".to_string()))
                .chain(self.sp_predictors.iter().map(|p| format!("gamma.{p}")))
                .collect(),
        }
    }

    /// True when every observation shares the same cell distribution.
    pub fn is_homogeneous(&self) -> bool {
        self.kind != ModelKind::ZipRegression
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ParamLength {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Checks one observation against the model's dimensions.
    pub fn check_observation(&self, obs: &Observation) -> Result<()> {
        if obs.s_star > self.m_items() {
            return Err(Error::SumScoreOutOfRange {
                s_star: obs.s_star,
                m: self.m_items(),
            });
        }
        if !(obs.weight.is_finite() && obs.weight > 0.0) {
            return Err(Error::InvalidWeight(obs.weight));
        }
        if self.kind == ModelKind::ZipRegression {
            if obs.x.len() != self.x_dim() {
                return Err(Error::PredictorLength {
                    expected: self.x_dim(),
                    got: obs.x.len(),
                });
            }
            if obs.z.len() != self.z_dim() {
                return Err(Error::PredictorLength {
                    expected: self.z_dim(),
                    got: obs.z.len(),
                });
            }
        }
        Ok(())
    }
}

/// Unconstrained parameters laid out per [`ModelSpec::param_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// One respondent (or one frequency-table cell when `weight > 1`).
///
/// `x` and `z` carry a leading 1 for the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub s_star: usize,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub weight: f64,
}

impl Observation {
    pub fn new(s_star: usize, x: Vec<f64>, z: Vec<f64>, weight: f64) -> Self {
        Observation {
            s_star,
            x,
            z,
            weight,
        }
    }

    /// Intercept-only observation.
    pub fn null(s_star: usize, weight: f64) -> Self {
        Observation::new(s_star, vec![1.0], vec![1.0], weight)
    }
}

/// Observations for a sum-score frequency table, one per non-empty cell.
pub fn frequency_observations(counts: &[f64]) -> Vec<Observation> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .map(|(s, &c)| Observation::null(s, c))
        .collect()
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteLinearPredictor)
    }
}

/// `ln lambda` for one respondent.
fn log_rate(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Result<f64> {
    match spec.kind {
        ModelKind::MultinomialRR => Err(Error::WrongModel("a Poisson rate", "a Poisson-family model")),
        ModelKind::PoissonRR | ModelKind::ZipNull => finite(params[0]),
        ModelKind::ZipRegression => {
            if x.len() != spec.x_dim() {
                return Err(Error::PredictorLength {
                    expected: spec.x_dim(),
                    got: x.len(),
                });
            }
            finite(dot(x, &params[..spec.x_dim()]))
        }
    }
}

fn sp_probability(spec: &ModelSpec, params: &[f64], z: &[f64]) -> Result<f64> {
    match spec.kind {
        ModelKind::MultinomialRR | ModelKind::PoissonRR => Ok(0.0),
        ModelKind::ZipNull => Ok(logistic(finite(params[1])?)),
        ModelKind::ZipRegression => {
            if z.len() != spec.z_dim() {
                return Err(Error::PredictorLength {
                    expected: spec.z_dim(),
                    got: z.len(),
                });
            }
            Ok(logistic(finite(dot(z, &params[spec.x_dim()..]))?))
        }
    }
}

/// Poisson rate `exp(x'beta)` for one respondent.
pub fn lambda_of(spec: &ModelSpec, params: &ParamVector, x: &[f64]) -> Result<f64> {
    spec.check_params(params)?;
    Ok(log_rate(spec, &params.0, x)?.exp())
}

/// SP probability `logistic(z'gamma)`; zero for models without SP.
pub fn theta_of(spec: &ModelSpec, params: &ParamVector, z: &[f64]) -> Result<f64> {
    spec.check_params(params)?;
    sp_probability(spec, &params.0, z)
}

/// True-score distribution of the multinomial model: softmax with `pi_0` as
/// the reference category.
pub fn multinomial_probs(params: &[f64]) -> Vec<f64> {
    let max = params.iter().copied().fold(0.0f64, f64::max);
    let mut out: Vec<f64> = std::iter::once(0.0)
        .chain(params.iter().copied())
        .map(|v| (v - max).exp())
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Reusable state for evaluating one model against many observations.
struct Kernel<'a> {
    spec: &'a ModelSpec,
    params: &'a [f64],
    q: &'a QMatrix,
    ln_fact: Vec<f64>,
    latent: Vec<f64>,
    fixed_latent: bool,
}

impl<'a> Kernel<'a> {
    fn new(spec: &'a ModelSpec, params: &'a ParamVector, q: &'a QMatrix) -> Result<Self> {
        spec.check_params(params)?;
        if q.m_items() != spec.m_items() {
            return Err(Error::InvalidSpec(format!(
                "Q matrix has M = {}, model has M = {}",
                q.m_items(),
                spec.m_items()
            )));
        }
        let ln_fact = ln_factorials(spec.m_items());
        let mut latent = vec![0.0; spec.m_items() + 1];
        let fixed_latent = match spec.kind {
            ModelKind::MultinomialRR => {
                if params.0.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteLinearPredictor);
                }
                latent = multinomial_probs(&params.0);
                true
            }
            ModelKind::PoissonRR | ModelKind::ZipNull => {
                truncated_poisson_from_log_rate(finite(params.0[0])?, &ln_fact, &mut latent);
                true
            }
            ModelKind::ZipRegression => false,
        };
        Ok(Kernel {
            spec,
            params: &params.0,
            q,
            ln_fact,
            latent,
            fixed_latent,
        })
    }

    /// Prepares the true-score distribution and returns theta.
    fn prepare(&mut self, obs: &Observation) -> Result<f64> {
        if !self.fixed_latent {
            let eta = log_rate(self.spec, self.params, &obs.x)?;
            truncated_poisson_from_log_rate(eta, &self.ln_fact, &mut self.latent);
        }
        sp_probability(self.spec, self.params, &obs.z)
    }

    fn cell(&mut self, obs: &Observation, s_star: usize) -> Result<f64> {
        let theta = self.prepare(obs)?;
        let rr = dot(self.q.row(s_star), &self.latent);
        let sp = if s_star == 0 { theta } else { 0.0 };
        Ok((1.0 - theta) * rr + sp)
    }

    fn cells(&mut self, obs: &Observation) -> Result<Vec<f64>> {
        let theta = self.prepare(obs)?;
        let mut out = self.q.apply(&self.latent);
        out.iter_mut().for_each(|p| *p *= 1.0 - theta);
        out[0] += theta;
        Ok(out)
    }
}

/// `P(S* = obs.s_star)` for one observation.
pub fn cell_probability(
    spec: &ModelSpec,
    params: &ParamVector,
    obs: &Observation,
    q: &QMatrix,
) -> Result<f64> {
    spec.check_observation(obs)?;
    Kernel::new(spec, params, q)?.cell(obs, obs.s_star)
}

/// Full distribution of `S*` over `0..=M` for one observation's predictors
/// (`obs.s_star` is ignored).
pub fn cell_probabilities(
    spec: &ModelSpec,
    params: &ParamVector,
    obs: &Observation,
    q: &QMatrix,
) -> Result<Vec<f64>> {
    Kernel::new(spec, params, q)?.cells(obs)
}

/// Observed-score distributions for every observation, in order.
pub fn all_cell_probabilities(
    spec: &ModelSpec,
    params: &ParamVector,
    data: &[Observation],
    q: &QMatrix,
) -> Result<Vec<Vec<f64>>> {
    let mut kernel = Kernel::new(spec, params, q)?;
    data.iter().map(|obs| kernel.cells(obs)).collect()
}

/// Weighted observed-data log-likelihood `sum_i w_i ln P(S*_i = s*_i)`.
///
/// Returns `-inf` when any cell probability falls below [`PROB_FLOOR`]. Terms
/// are summed in sorted order, so the result depends only on the multiset of
/// observations.
pub fn log_likelihood(
    spec: &ModelSpec,
    params: &ParamVector,
    data: &[Observation],
    q: &QMatrix,
) -> Result<f64> {
    let mut kernel = Kernel::new(spec, params, q)?;
    let mut terms = Vec::with_capacity(data.len());
    for obs in data {
        spec.check_observation(obs)?;
        let p = kernel.cell(obs, obs.s_star)?;
        if !(p >= PROB_FLOOR) {
            return Ok(f64::NEG_INFINITY);
        }
        terms.push(obs.weight * p.ln());
    }
    terms.sort_unstable_by(f64::total_cmp);
    Ok(terms.iter().sum())
}
