//! Post-fit diagnostics: information criteria, fitted frequencies, Pearson
//! statistics, SP aggregates, effect sizes and residual grids.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::design::build_q_matrix;
use crate::distributions::truncated_poisson_pmf;
use crate::estimation::FitResult;
use crate::models::{self, ModelKind, Observation};
use crate::{Error, Result};

/// Fitted cells below this make Pearson statistics undefined.
pub const MIN_FITTED: f64 = 1e-8;

/// Estimated true-score probabilities below this are reported as boundary
/// estimates (they print as 0.000).
pub const BOUNDARY_PI: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
}

/// `AIC = 2k - 2 ln L`, `BIC = k ln n - 2 ln L`.
pub fn information_criteria_from(k: usize, loglik: f64, n: f64) -> InformationCriteria {
    let k = k as f64;
    InformationCriteria {
        aic: 2.0 * k - 2.0 * loglik,
        bic: k * n.ln() - 2.0 * loglik,
    }
}

pub fn information_criteria(fit: &FitResult) -> InformationCriteria {
    information_criteria_from(fit.k_free, fit.loglik, fit.n)
}

/// Weighted sum-score frequencies of the data.
pub fn observed_frequencies(data: &[Observation], m_items: usize) -> Vec<f64> {
    let mut out = vec![0.0; m_items + 1];
    for obs in data {
        out[obs.s_star] += obs.weight;
    }
    out
}

/// `n_hat(t) = sum_i w_i P(S*_i = t)` under the fitted model.
pub fn fitted_frequencies(fit: &FitResult, data: &[Observation]) -> Result<Vec<f64>> {
    let q = build_q_matrix(&fit.spec.design);
    let mut out = vec![0.0; fit.spec.m_items() + 1];
    for (obs, cells) in data
        .iter()
        .zip(models::all_cell_probabilities(&fit.spec, &fit.params, data, &q)?)
    {
        for (o, p) in out.iter_mut().zip(cells) {
            *o += obs.weight * p;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PearsonX2 {
    pub x2: f64,
    /// `(cells - 1) - k`.
    pub df: i64,
    /// Per-cell `(n - n_hat)^2 / n_hat`.
    pub contributions: Vec<f64>,
}

/// Pearson statistic of observed against fitted cell counts.
pub fn pearson_statistic(observed: &[f64], fitted: &[f64], k: usize) -> Result<PearsonX2> {
    if observed.len() != fitted.len() {
        return Err(Error::LengthMismatch(format!(
            "{} observed cells vs {} fitted cells",
            observed.len(),
            fitted.len()
        )));
    }
    let mut contributions = Vec::with_capacity(observed.len());
    for (cell, (&n, &e)) in observed.iter().zip(fitted).enumerate() {
        if !(e >= MIN_FITTED) {
            return Err(Error::FittedCellTooSmall {
                cell: cell.to_string(),
                fitted: e,
            });
        }
        contributions.push((n - e).powi(2) / e);
    }
    Ok(PearsonX2 {
        x2: contributions.iter().sum(),
        df: observed.len() as i64 - 1 - k as i64,
        contributions,
    })
}

/// Pearson X² over the sum-score cells for a model without predictors.
pub fn pearson_x2(fit: &FitResult, observed_freqs: &[f64]) -> Result<PearsonX2> {
    if !fit.spec.is_homogeneous() {
        return Err(Error::WrongModel("pearson_x2", "a model without predictors"));
    }
    let q = build_q_matrix(&fit.spec.design);
    let cells = models::cell_probabilities(&fit.spec, &fit.params, &Observation::null(0, 1.0), &q)?;
    let n: f64 = observed_freqs.iter().sum();
    let fitted: Vec<f64> = cells.iter().map(|p| n * p).collect();
    pearson_statistic(observed_freqs, &fitted, fit.k_free)
}

/// Mean fitted SP probability over respondents with an observed zero.
pub fn theta_star_aggregate(fit: &FitResult, data: &[Observation]) -> Result<f64> {
    if !fit.spec.kind.has_sp() {
        return Err(Error::WrongModel("theta_star_aggregate", "a zero-inflated model"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for obs in data.iter().filter(|o| o.s_star == 0) {
        num += obs.weight * models::theta_of(&fit.spec, &fit.params, &obs.z)?;
        den += obs.weight;
    }
    if den == 0.0 {
        return Err(Error::NoObservedZeros);
    }
    Ok(num / den)
}

/// Fitted true-score distribution averaged over respondents.
pub fn marginal_true_score_distribution(fit: &FitResult, data: &[Observation]) -> Result<Vec<f64>> {
    if fit.spec.kind != ModelKind::ZipRegression {
        return fit
            .true_score_distribution()
            .ok_or(Error::WrongModel("true-score distribution", "a fitted model"));
    }
    let m = fit.spec.m_items();
    let mut out = vec![0.0; m + 1];
    let mut total = 0.0;
    for obs in data {
        let lambda = models::lambda_of(&fit.spec, &fit.params, &obs.x)?;
        for (o, p) in out.iter_mut().zip(truncated_poisson_pmf(lambda, m)?) {
            *o += obs.weight * p;
        }
        total += obs.weight;
    }
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// `exp(estimate)` and, when a predictor SD is given, `exp(estimate)^sd`.
pub fn effect_size(estimate: f64, sd: Option<f64>) -> (f64, Option<f64>) {
    let e = estimate.exp();
    (e, sd.map(|s| e.powf(s)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectSize {
    pub parameter: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    /// `None` for intercepts.
    pub effect: Option<f64>,
    pub standardized: Option<f64>,
}

/// Effect-size table for a regression fit. `predictor_sds` is keyed by
/// predictor name as it appears in the model spec.
pub fn effect_sizes(fit: &FitResult, predictor_sds: &BTreeMap<String, f64>) -> Result<Vec<EffectSize>> {
    if fit.spec.kind != ModelKind::ZipRegression {
        return Err(Error::WrongModel("effect_sizes", "a regression model"));
    }
    let predictors: Vec<Option<&String>> = std::iter::once(None)
        .chain(fit.spec.lambda_predictors.iter().map(Some))
        .chain(std::iter::once(None))
        .chain(fit.spec.sp_predictors.iter().map(Some))
        .collect();
    Ok(fit
        .params
        .0
        .iter()
        .enumerate()
        .map(|(i, &estimate)| {
            let se = fit.std_errors[i];
            let (effect, standardized) = match predictors[i] {
                None => (None, None),
                Some(name) => {
                    let (e, s) = effect_size(estimate, predictor_sds.get(name).copied());
                    (Some(e), s)
                }
            };
            EffectSize {
                parameter: fit.param_names[i].clone(),
                estimate,
                std_error: se,
                t_value: estimate / se,
                effect,
                standardized,
            }
        })
        .collect())
}

/// How predictor values are grouped into residual-grid rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Binning {
    /// One row per listed value; other values are an error.
    Levels(Vec<f64>),
    /// Right-closed bins `(-inf, c1], (c1, c2], ..., (ck, inf)`.
    Cuts(Vec<f64>),
    /// Equal-count bins from the empirical quantiles.
    Quantiles(usize),
}

/// Distinct values when there are at most ten, quintiles otherwise.
pub fn default_binning(values: &[f64]) -> Binning {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= 10 {
        Binning::Levels(distinct)
    } else {
        Binning::Quantiles(5)
    }
}

fn quantile_cuts(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = (1..bins)
        .map(|b| {
            let pos = (b as f64 / bins as f64) * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let hi = (lo + 1).min(sorted.len() - 1);
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        })
        .collect();
    cuts.dedup();
    cuts
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Row labels and a classifier for the given binning.
fn categorize(values: &[f64], binning: &Binning) -> Result<(Vec<String>, Vec<usize>)> {
    match binning {
        Binning::Levels(levels) => {
            let labels = levels.iter().map(|&l| fmt_num(l)).collect();
            let idx = values
                .iter()
                .map(|v| {
                    levels
                        .iter()
                        .position(|l| l == v)
                        .ok_or_else(|| Error::InvalidSpec(format!("predictor value {v} is not a listed level")))
                })
                .collect::<Result<_>>()?;
            Ok((labels, idx))
        }
        Binning::Cuts(_) | Binning::Quantiles(_) => {
            let cuts = match binning {
                Binning::Quantiles(b) => {
                    if values.is_empty() || *b == 0 {
                        return Err(Error::NoData);
                    }
                    quantile_cuts(values, *b)
                }
                Binning::Cuts(c) => c.clone(),
                Binning::Levels(_) => unreachable!(),
            };
            if cuts.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidSpec("bin cuts must be strictly increasing".into()));
            }
            let edges: Vec<f64> = std::iter::once(f64::NEG_INFINITY)
                .chain(cuts.iter().copied())
                .chain(std::iter::once(f64::INFINITY))
                .collect();
            let labels = edges
                .windows(2)
                .map(|w| format!("({}, {}]", fmt_num(w[0]), fmt_num(w[1])))
                .collect();
            let idx = values
                .iter()
                .map(|v| cuts.iter().filter(|&&c| *v > c).count())
                .collect();
            Ok((labels, idx))
        }
    }
}

/// Maps each sum score to a (possibly merged) column of the residual grid.
fn collapse_cells(m_items: usize, collapse: &[Vec<usize>]) -> Result<(Vec<String>, Vec<usize>)> {
    let mut group_of: Vec<Option<usize>> = vec![None; m_items + 1];
    for (g, members) in collapse.iter().enumerate() {
        for &s in members {
            if s > m_items {
                return Err(Error::InvalidSpec(format!("collapse cell {s} exceeds m_items = {m_items}")));
            }
            if group_of[s].replace(g).is_some() {
                return Err(Error::InvalidSpec(format!("sum score {s} collapsed twice")));
            }
        }
    }
    let mut labels = Vec::new();
    let mut column = vec![0; m_items + 1];
    let mut seen_group: BTreeMap<usize, usize> = BTreeMap::new();
    for s in 0..=m_items {
        match group_of[s] {
            None => {
                column[s] = labels.len();
                labels.push(s.to_string());
            }
            Some(g) => {
                if let Some(&c) = seen_group.get(&g) {
                    column[s] = c;
                } else {
                    let mut members = collapse[g].clone();
                    members.sort_unstable();
                    column[s] = labels.len();
                    seen_group.insert(g, labels.len());
                    labels.push(members.iter().map(usize::to_string).collect::<Vec<_>>().join("/"));
                }
            }
        }
    }
    Ok((labels, column))
}

/// Observed and fitted counts with Pearson residuals, by predictor category
/// (rows) and sum-score cell (columns).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualGrid {
    pub predictor: String,
    pub categories: Vec<String>,
    pub cells: Vec<String>,
    pub observed: Vec<Vec<f64>>,
    pub fitted: Vec<Vec<f64>>,
    /// `None` for rows of an empty category.
    pub residuals: Vec<Vec<Option<f64>>>,
}

impl ResidualGrid {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["predictor", "category", "cell", "observed", "fitted", "residual"])?;
        for (r, cat) in self.categories.iter().enumerate() {
            for (c, cell) in self.cells.iter().enumerate() {
                w.write_record([
                    self.predictor.clone(),
                    cat.clone(),
                    cell.clone(),
                    self.observed[r][c].to_string(),
                    self.fitted[r][c].to_string(),
                    self.residuals[r][c].map_or(String::new(), |v| v.to_string()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// All defined residuals, row-major.
    pub fn flat_residuals(&self) -> Vec<f64> {
        self.residuals.iter().flatten().filter_map(|r| *r).collect()
    }
}

/// Pearson residuals `(n - n_hat) / sqrt(n_hat)` within predictor
/// categories. `values` holds the predictor for each observation.
pub fn residuals_by_predictor(
    fit: &FitResult,
    data: &[Observation],
    predictor: &str,
    values: &[f64],
    binning: &Binning,
    collapse: &[Vec<usize>],
    allow_empty_cells: bool,
) -> Result<ResidualGrid> {
    if values.len() != data.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictor values for {} observations",
            values.len(),
            data.len()
        )));
    }
    let (categories, row_of) = categorize(values, binning)?;
    let (cells, col_of) = collapse_cells(fit.spec.m_items(), collapse)?;
    let q = build_q_matrix(&fit.spec.design);
    let probs = models::all_cell_probabilities(&fit.spec, &fit.params, data, &q)?;

    let mut observed = vec![vec![0.0; cells.len()]; categories.len()];
    let mut fitted = vec![vec![0.0; cells.len()]; categories.len()];
    let mut row_weight = vec![0.0; categories.len()];
    for ((obs, p), &r) in data.iter().zip(&probs).zip(&row_of) {
        observed[r][col_of[obs.s_star]] += obs.weight;
        row_weight[r] += obs.weight;
        for (s, ps) in p.iter().enumerate() {
            fitted[r][col_of[s]] += obs.weight * ps;
        }
    }

    let mut residuals = Vec::with_capacity(categories.len());
    for r in 0..categories.len() {
        if row_weight[r] == 0.0 {
            if !allow_empty_cells {
                return Err(Error::EmptyCategory(format!("{predictor} = {}", categories[r])));
            }
            residuals.push(vec![None; cells.len()]);
            continue;
        }
        let mut row = Vec::with_capacity(cells.len());
        for c in 0..cells.len() {
            let e = fitted[r][c];
            if !(e >= MIN_FITTED) {
                return Err(Error::FittedCellTooSmall {
                    cell: format!("{predictor} = {}, sum score {}", categories[r], cells[c]),
                    fitted: e,
                });
            }
            row.push(Some((observed[r][c] - e) / e.sqrt()));
        }
        residuals.push(row);
    }
    Ok(ResidualGrid {
        predictor: predictor.to_string(),
        categories,
        cells,
        observed,
        fitted,
        residuals,
    })
}

/// Everything computable from a fit and its data without extra settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub aic: f64,
    pub bic: f64,
    pub k: usize,
    pub n: f64,
    pub observed_freqs: Vec<f64>,
    pub fitted_freqs: Vec<f64>,
    /// Models without predictors only.
    pub pearson: Option<PearsonX2>,
    /// Zero-inflated models only.
    pub theta_star_hat: Option<f64>,
    /// Fitted true-score distribution (averaged over respondents for
    /// regression fits).
    pub true_score_distribution: Vec<f64>,
    /// True sum scores whose estimated probability is below [`BOUNDARY_PI`]
    /// (multinomial model only).
    pub boundary_cells: Vec<usize>,
    pub effect_sizes: Option<Vec<EffectSize>>,
    pub residuals: Vec<ResidualGrid>,
}

impl DiagnosticsReport {
    pub fn build(
        fit: &FitResult,
        data: &[Observation],
        predictor_sds: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let ic = information_criteria(fit);
        let observed_freqs = observed_frequencies(data, fit.spec.m_items());
        let fitted_freqs = fitted_frequencies(fit, data)?;
        let pearson = if fit.spec.is_homogeneous() {
            Some(pearson_x2(fit, &observed_freqs)?)
        } else {
            None
        };
        let theta_star_hat = if fit.spec.kind.has_sp() {
            theta_star_aggregate(fit, data).ok()
        } else {
            None
        };
        let true_score_distribution = marginal_true_score_distribution(fit, data)?;
        let boundary_cells = if fit.spec.kind == ModelKind::MultinomialRR {
            true_score_distribution
                .iter()
                .enumerate()
                .filter(|(_, &p)| p < BOUNDARY_PI)
                .map(|(s, _)| s)
                .collect()
        } else {
            Vec::new()
        };
        let effect_sizes = if fit.spec.kind == ModelKind::ZipRegression {
            Some(effect_sizes(fit, predictor_sds)?)
        } else {
            None
        };
        Ok(DiagnosticsReport {
            aic: ic.aic,
            bic: ic.bic,
            k: fit.k_free,
            n: fit.n,
            observed_freqs,
            fitted_freqs,
            pearson,
            theta_star_hat,
            true_score_distribution,
            boundary_cells,
            effect_sizes,
            residuals: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::forced_response_design;
    use crate::estimation::{fit, FitOptions};
    use crate::models::{frequency_observations, ModelSpec};
    use proptest::prelude::*;

    fn table() -> Vec<Observation> {
        frequency_observations(&[288.0, 295.0, 207.0, 68.0, 7.0, 5.0])
    }

    fn fit_null(kind: ModelKind) -> FitResult {
        let d = forced_response_design(0.9329, 0.18678, 5).unwrap();
        let spec = ModelSpec::null(kind, d);
        fit(&spec, &table(), &build_q_matrix(&d), &FitOptions::default()).unwrap()
    }

    #[test]
    fn information_criteria_values() {
        let p = information_criteria_from(1, -1183.3, 870.0);
        assert!((p.aic - 2368.6).abs() < 1e-9);
        assert!((p.bic - 2373.4).abs() < 0.05);
        let z = information_criteria_from(2, -1173.2, 870.0);
        assert!((z.bic - 2360.0).abs() < 0.1);
        assert_eq!(information_criteria_from(0, 0.0, 870.0), InformationCriteria { aic: 0.0, bic: 0.0 });
    }

    #[test]
    fn pearson_basics() {
        let r = pearson_statistic(&[10.0, 20.0, 30.0], &[10.0, 20.0, 30.0], 1).unwrap();
        assert_eq!(r.x2, 0.0);
        assert_eq!(r.df, 1);
        assert!(matches!(
            pearson_statistic(&[1.0, 2.0], &[3.0, 0.0], 0),
            Err(Error::FittedCellTooSmall { .. })
        ));
        assert!(pearson_statistic(&[1.0], &[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn multinomial_fit_diagnostics() {
        let f = fit_null(ModelKind::MultinomialRR);
        assert!((f.loglik + 1170.8).abs() < 0.05, "{}", f.loglik);
        let rep = DiagnosticsReport::build(&f, &table(), &BTreeMap::new()).unwrap();
        let expected = [272.0, 319.1, 195.3, 66.7, 12.6, 4.3];
        for (a, b) in rep.fitted_freqs.iter().zip(expected) {
            assert!((a - b).abs() < 0.5, "{:?}", rep.fitted_freqs);
        }
        let x2 = rep.pearson.as_ref().unwrap();
        assert!((x2.x2 - 6.1).abs() < 0.3);
        assert_eq!(x2.df, 0);
        assert_eq!(rep.boundary_cells, vec![1, 3, 4]);
        assert!((rep.fitted_freqs.iter().sum::<f64>() - 870.0).abs() < 1e-6);
    }

    #[test]
    fn poisson_fit_pearson() {
        let f = fit_null(ModelKind::PoissonRR);
        let x2 = pearson_x2(&f, &[288.0, 295.0, 207.0, 68.0, 7.0, 5.0]).unwrap();
        assert!((x2.x2 - 56.0).abs() < 0.5, "{}", x2.x2);
        assert_eq!(x2.df, 4);
    }

    #[test]
    fn constant_theta_aggregate_is_theta() {
        let f = fit_null(ModelKind::ZipNull);
        let agg = theta_star_aggregate(&f, &table()).unwrap();
        assert_eq!(agg, f.theta_hat().unwrap());
        assert!((agg - 0.126).abs() < 0.002);
        let no_zeros = frequency_observations(&[0.0, 3.0, 2.0]);
        assert!(matches!(theta_star_aggregate(&f, &no_zeros), Err(Error::NoObservedZeros)));
        let p = fit_null(ModelKind::PoissonRR);
        assert!(theta_star_aggregate(&p, &table()).is_err());
    }

    #[test]
    fn effect_size_transforms() {
        assert!((effect_size(0.58, None).0 - 1.78).abs() < 0.01);
        assert!((effect_size(-0.27, Some(0.90)).1.unwrap() - 0.78).abs() < 0.01);
        assert!((effect_size(-0.46, Some(0.85)).1.unwrap() - 0.67).abs() < 0.01);
    }

    #[test]
    fn collapse_and_binning() {
        let (labels, col) = collapse_cells(5, &[vec![5, 4]]).unwrap();
        assert_eq!(labels, vec!["0", "1", "2", "3", "4/5"]);
        assert_eq!(col, vec![0, 1, 2, 3, 4, 4]);
        assert!(collapse_cells(5, &[vec![4, 5], vec![5]]).is_err());
        assert!(collapse_cells(5, &[vec![6]]).is_err());
        let (labels, idx) = categorize(&[0.5, 1.0, 1.5, 3.0], &Binning::Cuts(vec![1.0, 2.0])).unwrap();
        assert_eq!(labels, vec!["(-inf, 1]", "(1, 2]", "(2, inf]"]);
        assert_eq!(idx, vec![0, 0, 1, 2]);
        let values: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(default_binning(&values), Binning::Quantiles(5));
        let (_, idx) = categorize(&values, &Binning::Quantiles(5)).unwrap();
        for b in 0..5 {
            assert_eq!(idx.iter().filter(|&&i| i == b).count(), 20);
        }
        assert_eq!(default_binning(&[1.0, 0.0, 1.0]), Binning::Levels(vec![0.0, 1.0]));
    }

    #[test]
    fn residuals_vanish_when_observed_equals_fitted() {
        // identity design, saturated multinomial: fitted equals observed
        let d = forced_response_design(1.0, 0.0, 2).unwrap();
        let q = build_q_matrix(&d);
        let spec = ModelSpec::null(ModelKind::MultinomialRR, d);
        let data = frequency_observations(&[50.0, 30.0, 20.0]);
        let f = fit(&spec, &data, &q, &FitOptions::default()).unwrap();
        let grid = residuals_by_predictor(&f, &data, "const", &[1.0; 3], &Binning::Levels(vec![1.0]), &[], false)
            .unwrap();
        assert!(grid.flat_residuals().iter().all(|r| r.abs() < 1e-4), "{grid:?}");
        let fitted = fitted_frequencies(&f, &data).unwrap();
        for (a, b) in fitted.iter().zip([50.0, 30.0, 20.0]) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn empty_dummy_category() {
        let f = fit_null(ModelKind::ZipNull);
        let data = table();
        let values = vec![0.0; data.len()];
        let levels = Binning::Levels(vec![0.0, 1.0]);
        assert!(matches!(
            residuals_by_predictor(&f, &data, "dummy", &values, &levels, &[vec![4, 5]], false),
            Err(Error::EmptyCategory(_))
        ));
        let grid = residuals_by_predictor(&f, &data, "dummy", &values, &levels, &[vec![4, 5]], true).unwrap();
        assert!(grid.residuals[1].iter().all(Option::is_none));
        assert_eq!(grid.cells.len(), 5);
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 5);
        assert!(text.contains("dummy,0,4/5,12,"));
    }

    proptest! {
        #[test]
        fn pearson_invariant_to_cell_order(
            cells in prop::collection::vec((0.0f64..100.0, 0.1f64..100.0), 2..8),
            seed in any::<u64>(),
        ) {
            let (obs, fit): (Vec<f64>, Vec<f64>) = cells.iter().copied().unzip();
            let a = pearson_statistic(&obs, &fit, 1).unwrap();
            let mut idx: Vec<usize> = (0..obs.len()).collect();
            let len = idx.len();
            idx.rotate_left((seed as usize) % len);
            let obs2: Vec<f64> = idx.iter().map(|&i| obs[i]).collect();
            let fit2: Vec<f64> = idx.iter().map(|&i| fit[i]).collect();
            let b = pearson_statistic(&obs2, &fit2, 1).unwrap();
            prop_assert!((a.x2 - b.x2).abs() <= 1e-9 * a.x2.max(1.0));
            prop_assert_eq!(a.df, b.df);
        }

        #[test]
        fn criteria_identities(k in 0usize..20, ll in -1e5f64..0.0, n in 1.0f64..1e6) {
            let ic = information_criteria_from(k, ll, n);
            prop_assert_eq!(ic.aic, 2.0 * k as f64 - 2.0 * ll);
            prop_assert_eq!(ic.bic, k as f64 * n.ln() - 2.0 * ll);
        }
    }
}
