//! Synthetic data under the ZIP RR generating process, parameter-recovery
//! studies, and a brute-force likelihood used as an oracle.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataFormat, Dataset, Record};
use crate::design::{build_q_matrix, dot, DesignConfig, QMatrix, RRDesign};
use crate::distributions::truncated_poisson_pmf;
use crate::estimation::{fit, FitOptions};
use crate::models::{ModelKind, ModelSpec, Observation, ParamVector};
use crate::{Error, Result};

/// Largest item count accepted by [`brute_force_loglik`].
pub const BRUTE_FORCE_MAX_ITEMS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum PredictorDist {
    Constant { value: f64 },
    Dummy { prevalence: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorGen {
    pub name: String,
    #[serde(flatten)]
    pub dist: PredictorDist,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    /// Draw an item pattern with the true sum and misclassify each item.
    #[default]
    PerItem,
    /// Draw the observed score from the Q-matrix column of the true score.
    QMatrix,
}

/// A data-generating scenario, usually read from JSON.
///
/// `beta` and `gamma` start with the intercept, followed by one coefficient
/// per name in `x` and `z`. Without `gamma` nobody answers self-protectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub design: DesignConfig,
    pub n: usize,
    #[serde(default)]
    pub predictors: Vec<PredictorGen>,
    #[serde(default)]
    pub x: Vec<String>,
    #[serde(default)]
    pub z: Vec<String>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub generation_mode: GenerationMode,
}

/// Per-respondent ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub true_scores: Vec<usize>,
    pub sp: Vec<bool>,
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub dataset: Dataset,
    pub observations: Vec<Observation>,
    pub truth: Truth,
}

fn scenario_err(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

enum Sampler {
    Constant(f64),
    Dummy(f64),
    Discrete(Vec<f64>, WeightedIndex<f64>),
}

impl Sampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::Dummy(p) => f64::from(u8::from(rng.random::<f64>() < *p)),
            Sampler::Discrete(values, idx) => values[idx.sample(rng)],
        }
    }
}

impl SimScenario {
    pub fn resolve_design(&self) -> Result<RRDesign> {
        self.design.resolve(None)
    }

    fn predictor_index(&self, name: &str) -> Result<usize> {
        self.predictors
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| scenario_err(format!("unknown predictor `{name}`")))
    }

    /// Checks dimensions and distributions.
    pub fn validate(&self) -> Result<()> {
        self.resolve_design()?;
        if self.n == 0 {
            return Err(scenario_err("n must be at least 1"));
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if self.predictors[..i].iter().any(|q| q.name == p.name) {
                return Err(scenario_err(format!("predictor `{}` defined twice", p.name)));
            }
            self.sampler(p)?;
        }
        for name in self.x.iter().chain(&self.z) {
            self.predictor_index(name)?;
        }
        if self.beta.len() != self.x.len() + 1 {
            return Err(scenario_err(format!(
                "beta has {} entries, expected {} (intercept + x)",
                self.beta.len(),
                self.x.len() + 1
            )));
        }
        match &self.gamma {
            Some(g) if g.len() != self.z.len() + 1 => Err(scenario_err(format!(
                "gamma has {} entries, expected {} (intercept + z)",
                g.len(),
                self.z.len() + 1
            ))),
            None if !self.z.is_empty() => Err(scenario_err("z predictors given without gamma")),
            _ => Ok(()),
        }?;
        if self.beta.iter().chain(self.gamma.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(scenario_err("coefficients must be finite"));
        }
        Ok(())
    }

    fn sampler(&self, p: &PredictorGen) -> Result<Sampler> {
        match &p.dist {
            PredictorDist::Constant { value } if value.is_finite() => Ok(Sampler::Constant(*value)),
            PredictorDist::Dummy { prevalence } if (0.0..=1.0).contains(prevalence) => {
                Ok(Sampler::Dummy(*prevalence))
            }
            PredictorDist::Discrete { values, probs } if values.len() == probs.len() => {
                let idx = WeightedIndex::new(probs)
                    .map_err(|e| scenario_err(format!("predictor `{}`: {e}", p.name)))?;
                Ok(Sampler::Discrete(values.clone(), idx))
            }
            _ => Err(scenario_err(format!("invalid distribution for predictor `{}`", p.name))),
        }
    }

    /// The regression model matching this scenario.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        if self.gamma.is_none() {
            return Err(scenario_err("a regression fit needs gamma"));
        }
        ModelSpec::new(ModelKind::ZipRegression, self.resolve_design()?, self.x.clone(), self.z.clone())
    }

    /// True coefficients in fitting order: beta then gamma.
    pub fn true_params(&self) -> Vec<f64> {
        self.beta.iter().chain(self.gamma.iter().flatten()).copied().collect()
    }
}

/// Generates one dataset from `scenario.seed`.
pub fn generate(scenario: &SimScenario) -> Result<SimData> {
    generate_with_rng(scenario, &mut ChaCha8Rng::seed_from_u64(scenario.seed))
}

/// Per-replicate generator: seed from the scenario, stream from the
/// replicate index.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

pub fn generate_with_rng(scenario: &SimScenario, rng: &mut ChaCha8Rng) -> Result<SimData> {
    scenario.validate()?;
    let design = scenario.resolve_design()?;
    let m = design.m_items();
    let q = build_q_matrix(&design);
    let samplers: Vec<Sampler> = scenario
        .predictors
        .iter()
        .map(|p| scenario.sampler(p))
        .collect::<Result<_>>()?;
    let x_idx: Vec<usize> = scenario.x.iter().map(|n| scenario.predictor_index(n)).collect::<Result<_>>()?;
    let z_idx: Vec<usize> = scenario.z.iter().map(|n| scenario.predictor_index(n)).collect::<Result<_>>()?;
    let q_columns: Vec<WeightedIndex<f64>> = (0..=m)
        .map(|s| WeightedIndex::new(q.column(s)).expect("Q-matrix columns are distributions"))
        .collect();

    let n = scenario.n;
    let mut truth = Truth {
        true_scores: Vec::with_capacity(n),
        sp: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
    };
    let mut observations = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let values: Vec<f64> = samplers.iter().map(|s| s.sample(rng)).collect();
        let x: Vec<f64> = std::iter::once(1.0).chain(x_idx.iter().map(|&j| values[j])).collect();
        let z: Vec<f64> = std::iter::once(1.0).chain(z_idx.iter().map(|&j| values[j])).collect();
        let lambda = dot(&x, &scenario.beta).exp();
        if !lambda.is_finite() {
            return Err(Error::NonFiniteLinearPredictor);
        }
        let theta = scenario.gamma.as_ref().map_or(0.0, |g| logistic(dot(&z, g)));

        let sp = rng.random::<f64>() < theta;
        let pmf = truncated_poisson_pmf(lambda, m)?;
        let s = WeightedIndex::new(&pmf).expect("valid pmf").sample(rng);
        let s_star = if sp {
            0
        } else {
            match scenario.generation_mode {
                GenerationMode::QMatrix => q_columns[s].sample(rng),
                GenerationMode::PerItem => {
                    let mut present = vec![false; m];
                    for j in rand::seq::index::sample(rng, m, s) {
                        present[j] = true;
                    }
                    present
                        .iter()
                        .filter(|&&p| rng.random::<f64>() < design.p_yes(p))
                        .count()
                }
            }
        };

        truth.true_scores.push(s);
        truth.sp.push(sp);
        truth.lambda.push(lambda);
        truth.theta.push(theta);
        records.push(Record {
            line: i as u64 + 2,
            s_star,
            weight: 1.0,
            values: values.iter().map(f64::to_string).collect(),
        });
        observations.push(Observation::new(s_star, x, z, 1.0));
    }
    Ok(SimData {
        dataset: Dataset {
            format: DataFormat::Individual,
            item_count: None,
            columns: scenario.predictors.iter().map(|p| p.name.clone()).collect(),
            records,
        },
        observations,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub rmse: f64,
    pub mean_std_error: f64,
    /// Share of replicates whose `estimate ± 1.96 SE` covers the truth.
    pub coverage: f64,
    /// Share of replicates with the sign of a nonzero truth; `None` for zero.
    pub sign_recovery: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySummary {
    pub n_replicates: usize,
    pub n_converged: usize,
    pub coefficients: Vec<CoefficientSummary>,
    pub failures: Vec<ReplicateFailure>,
}

impl RecoverySummary {
    /// Fixed-width text table.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "replicates: {}  converged: {}\n{:<28} {:>8} {:>9} {:>8} {:>8} {:>8} {:>9} {:>6}\n",
            self.n_replicates, self.n_converged, "parameter", "truth", "mean", "bias", "rmse", "mean se", "coverage", "sign"
        );
        for c in &self.coefficients {
            out.push_str(&format!(
                "{:<28} {:>8.3} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>9.3} {:>6}\n",
                c.name,
                c.truth,
                c.mean_estimate,
                c.bias,
                c.rmse,
                c.mean_std_error,
                c.coverage,
                c.sign_recovery.map_or("-".to_string(), |s| format!("{s:.3}"))
            ));
        }
        for f in &self.failures {
            out.push_str(&format!("replicate {} failed: {}\n", f.replicate, f.message));
        }
        out
    }
}

type ReplicateOutcome = std::result::Result<(Vec<f64>, Vec<f64>), String>;

fn run_replicate(scenario: &SimScenario, spec: &ModelSpec, q: &QMatrix, r: usize, opts: &FitOptions) -> ReplicateOutcome {
    let mut rng = replicate_rng(scenario.seed, r as u64);
    let data = generate_with_rng(scenario, &mut rng).map_err(|e| e.to_string())?;
    match fit(spec, &data.observations, q, opts) {
        Ok(f) => Ok((f.params.0, f.std_errors)),
        Err(e) => Err(e.to_string()),
    }
}

/// Fits the regression model to `n_replicates` independent datasets.
///
/// Replicates run in parallel on per-replicate RNG streams and are reduced
/// in replicate order, so the summary does not depend on thread count.
/// Replicates that fail to converge are listed and excluded from the
/// averages.
pub fn recovery_study(scenario: &SimScenario, n_replicates: usize, opts: &FitOptions) -> Result<RecoverySummary> {
    scenario.validate()?;
    let spec = scenario.model_spec()?;
    let q = build_q_matrix(&spec.design);
    let truth = scenario.true_params();
    let names = spec.param_names();

    let outcomes: Vec<ReplicateOutcome> = (0..n_replicates)
        .into_par_iter()
        .map(|r| run_replicate(scenario, &spec, &q, r, opts))
        .collect();

    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => ok.push(v),
            Err(message) => failures.push(ReplicateFailure { replicate: r, message }),
        }
    }
    let k = ok.len() as f64;
    let coefficients = if ok.is_empty() {
        Vec::new()
    } else {
        names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let t = truth[j];
                let est: Vec<f64> = ok.iter().map(|(p, _)| p[j]).collect();
                let se: Vec<f64> = ok.iter().map(|(_, s)| s[j]).collect();
                let mean = est.iter().sum::<f64>() / k;
                let covered = est
                    .iter()
                    .zip(&se)
                    .filter(|(e, s)| (*e - t).abs() <= 1.96 * **s)
                    .count();
                CoefficientSummary {
                    name: name.clone(),
                    truth: t,
                    mean_estimate: mean,
                    bias: mean - t,
                    rmse: (est.iter().map(|e| (e - t).powi(2)).sum::<f64>() / k).sqrt(),
                    mean_std_error: se.iter().sum::<f64>() / k,
                    coverage: covered as f64 / k,
                    sign_recovery: (t != 0.0)
                        .then(|| est.iter().filter(|e| e.signum() == t.signum()).count() as f64 / k),
                }
            })
            .collect()
    };
    Ok(RecoverySummary {
        n_replicates,
        n_converged: ok.len(),
        coefficients,
        failures,
    })
}

fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `P(S* = t | S = s)` by enumerating every true item pattern with sum `s`
/// and every answer pattern with sum `t`.
fn enumerated_misclassification(design: &RRDesign) -> Vec<Vec<f64>> {
    let m = design.m_items();
    let mut table = vec![vec![0.0; m + 1]; m + 1];
    for truth in 0u32..(1 << m) {
        let s = truth.count_ones() as usize;
        for answer in 0u32..(1 << m) {
            let mut p = 1.0;
            for j in 0..m {
                let present = truth >> j & 1 == 1;
                let yes = answer >> j & 1 == 1;
                let py = design.p_yes(present);
                p *= if yes { py } else { 1.0 - py };
            }
            table[s][answer.count_ones() as usize] += p / choose(m, s);
        }
    }
    table
}

/// Latent true-score distribution for one respondent, computed directly.
fn latent_distribution(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Vec<f64> {
    let m = spec.m_items();
    if spec.kind == ModelKind::MultinomialRR {
        let mut w: Vec<f64> = std::iter::once(1.0).chain(params.iter().map(|v| v.exp())).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        return w;
    }
    let ln_lambda = if spec.kind == ModelKind::ZipRegression {
        x.iter().zip(params).map(|(a, b)| a * b).sum()
    } else {
        params[0]
    };
    let lambda = ln_lambda.exp();
    let mut w: Vec<f64> = Vec::with_capacity(m + 1);
    let mut fact = 1.0;
    for s in 0..=m {
        if s > 0 {
            fact *= s as f64;
        }
        w.push((-lambda).exp() * lambda.powi(s as i32) / fact);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

fn sp_of(spec: &ModelSpec, params: &[f64], z: &[f64]) -> f64 {
    match spec.kind {
        ModelKind::MultinomialRR | ModelKind::PoissonRR => 0.0,
        ModelKind::ZipNull => logistic(params[1]),
        ModelKind::ZipRegression => {
            logistic(z.iter().zip(&params[spec.x_dim()..]).map(|(a, b)| a * b).sum())
        }
    }
}

/// `P(S* = obs.s_star)` summed over SP status, true score and item patterns.
pub fn brute_force_cell_probability(spec: &ModelSpec, params: &ParamVector, obs: &Observation) -> Result<f64> {
    let m = spec.m_items();
    if m > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::TooManyItems(m));
    }
    spec.check_observation(obs)?;
    let table = enumerated_misclassification(&spec.design);
    Ok(cell_from_table(spec, &params.0, obs, &table))
}

fn cell_from_table(spec: &ModelSpec, params: &[f64], obs: &Observation, table: &[Vec<f64>]) -> f64 {
    let latent = latent_distribution(spec, params, &obs.x);
    let theta = sp_of(spec, params, &obs.z);
    let mut p = 0.0;
    for (sp, w_sp) in [(true, theta), (false, 1.0 - theta)] {
        for (s, w_s) in latent.iter().enumerate() {
            let emit = if sp {
                f64::from(u8::from(obs.s_star == 0))
            } else {
                table[s][obs.s_star]
            };
            p += w_sp * w_s * emit;
        }
    }
    p
}

/// Log-likelihood by exhaustive enumeration of latent configurations.
/// Independent of the Q-matrix and kernel code; requires `M <= 6`.
pub fn brute_force_loglik(spec: &ModelSpec, params: &ParamVector, data: &[Observation]) -> Result<f64> {
    let m = spec.m_items();
    if m > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::TooManyItems(m));
    }
    if params.len() != spec.n_params() {
        return Err(Error::ParamLength {
            expected: spec.n_params(),
            got: params.len(),
        });
    }
    let table = enumerated_misclassification(&spec.design);
    let mut total = 0.0;
    for obs in data {
        spec.check_observation(obs)?;
        total += obs.weight * cell_from_table(spec, &params.0, obs, &table).ln();
    }
    Ok(total)
}
