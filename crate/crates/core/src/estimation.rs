//! Maximum likelihood by BFGS with central-difference derivatives.
//!
//! The optimizer works on the unconstrained parameterization of each model.
//! Standard errors come from the pseudo-inverse of the negated numerical
//! Hessian at the optimum; directions whose curvature is below
//! `lambda_max / cond_cutoff` are dropped and the affected parameters flagged.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::QMatrix;
use crate::models::{self, log_likelihood, ModelKind, ModelSpec, Observation, ParamVector};
use crate::{Error, Result};

/// Largest coordinate change tried by one line search.
const MAX_STEP: f64 = 5.0;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const DEFAULT_SP_START: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Relative step for gradient probes.
    pub rel_step: f64,
    /// Relative step for Hessian probes.
    pub hessian_rel_step: f64,
    /// Stop when `max|grad| < tol_grad * max(1, |loglik|)`.
    pub tol_grad: f64,
    /// Stop when an accepted step moves no coordinate by more than this.
    pub tol_step: f64,
    pub max_iter: usize,
    pub max_starts: usize,
    /// Half-width of the uniform perturbation applied to restarts.
    pub perturbation: f64,
    pub seed: u64,
    /// Eigenvalues of the information matrix below `max / cond_cutoff` are
    /// treated as zero.
    pub cond_cutoff: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            rel_step: 1e-6,
            hessian_rel_step: 1e-4,
            tol_grad: 1e-8,
            tol_step: 1e-10,
            max_iter: 500,
            max_starts: 10,
            perturbation: 0.5,
            seed: 0,
            cond_cutoff: 1e12,
        }
    }
}

#[inline]
fn probe_step(x: f64, rel_step: f64) -> f64 {
    let h = rel_step * x.abs().max(1.0);
    // make x + h exactly representable so the divisor matches the probe
    (x + h) - x
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteProbe)
    }
}

/// Central-difference gradient with step `rel_step * max(|x_j|, 1)`.
pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let h = probe_step(x[j], rel_step);
        probe[j] = x[j] + h;
        let up = eval(f, &probe)?;
        probe[j] = x[j] - h;
        let down = eval(f, &probe)?;
        probe[j] = x[j];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Central-difference Hessian. Off-diagonal entries use the four-point
/// formula and are mirrored, so the result is exactly symmetric.
pub fn numeric_hessian<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    rel_step: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let f0 = eval(f, x)?;
    let h: Vec<f64> = x.iter().map(|&v| probe_step(v, rel_step)).collect();
    let mut probe = x.to_vec();
    let mut out = vec![vec![0.0; n]; n];
    for j in 0..n {
        probe[j] = x[j] + h[j];
        let up = eval(f, &probe)?;
        probe[j] = x[j] - h[j];
        let down = eval(f, &probe)?;
        probe[j] = x[j];
        out[j][j] = (up - 2.0 * f0 + down) / (h[j] * h[j]);
        for k in 0..j {
            let mut corner = |sj: f64, sk: f64| {
                probe[j] = x[j] + sj * h[j];
                probe[k] = x[k] + sk * h[k];
                let v = eval(f, &probe);
                probe[j] = x[j];
                probe[k] = x[k];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * h[j] * h[k]);
            out[j][k] = v;
            out[k][j] = v;
        }
    }
    Ok(out)
}

/// Result of [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `f` by BFGS with a backtracking Armijo line search.
///
/// `f` may return `-inf` (or any non-finite value) to reject a point; such
/// points are never accepted. Errors only when `f` is not finite at `x0`.
pub fn maximize<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &FitOptions) -> Result<Maximum> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = eval(f, &x)?;
    // work with the gradient of -f throughout
    let neg_grad = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(numeric_gradient(f, p, opts.rel_step)?
            .into_iter()
            .map(|g| -g)
            .collect())
    };
    let mut g = neg_grad(&x)?;
    let identity = || DMatrix::<f64>::identity(n, n);
    let mut h_inv = identity();
    let mut h_is_identity = true;
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if max_abs(&g) < opts.tol_grad * fx.abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;

        let gv = nalgebra::DVector::from_column_slice(&g);
        let mut d: Vec<f64> = (-(&h_inv * &gv)).iter().copied().collect();
        if dot(&d, &g) >= 0.0 {
            h_inv = identity();
            h_is_identity = true;
            d = g.iter().map(|v| -v).collect();
        }
        let slope = dot(&d, &g);
        let mut alpha = (MAX_STEP / max_abs(&d)).min(1.0);

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let ft = f(&trial);
            if ft.is_finite() && -ft <= -fx + ARMIJO_C1 * alpha * slope && ft >= fx {
                if let Ok(gt) = neg_grad(&trial) {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if h_is_identity {
                break;
            }
            h_inv = identity();
            h_is_identity = true;
            continue;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(fx);

        if max_abs(&s) < opts.tol_step {
            converged = max_abs(&g) < opts.tol_grad.sqrt() * fx.abs().max(1.0);
            break;
        }

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if h_is_identity {
                h_inv *= sy / dot(&y, &y);
                h_is_identity = false;
            }
            let sv = nalgebra::DVector::from_vec(s);
            let yv = nalgebra::DVector::from_vec(y);
            let rho = 1.0 / sy;
            let hy = &h_inv * &yv;
            let yhy = yv.dot(&hy);
            // H+ = H - rho (s y'H + H y s') + (rho^2 y'Hy + rho) s s'
            h_inv -= (&sv * hy.transpose() + &hy * sv.transpose()) * rho;
            h_inv += (&sv * sv.transpose()) * (rho * rho * yhy + rho);
        }
    }

    if !converged && max_abs(&g) < opts.tol_grad * fx.abs().max(1.0) {
        converged = true;
    }
    Ok(Maximum {
        x,
        value: fx,
        gradient: g.into_iter().map(|v| -v).collect(),
        iterations,
        converged,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianStatus {
    /// Negated Hessian positive definite within the condition cutoff.
    Ok,
    /// Some curvature directions dropped from the pseudo-inverse.
    NearSingular,
    /// No usable curvature (non-finite or no positive eigenvalue).
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    pub matrix: Vec<Vec<f64>>,
    pub status: HessianStatus,
    /// Parameters loading on a dropped curvature direction.
    pub flagged: Vec<bool>,
    pub dropped_directions: usize,
}

/// Pseudo-inverse of the information matrix `-hessian`.
pub fn covariance_from_hessian(hessian: &[Vec<f64>], cond_cutoff: f64) -> Covariance {
    let n = hessian.len();
    let info = DMatrix::from_fn(n, n, |i, j| -hessian[i][j]);
    if n == 0 {
        return Covariance {
            matrix: Vec::new(),
            status: HessianStatus::Ok,
            flagged: Vec::new(),
            dropped_directions: 0,
        };
    }
    if info.iter().any(|v| !v.is_finite()) {
        return Covariance {
            matrix: vec![vec![f64::NAN; n]; n],
            status: HessianStatus::Failed,
            flagged: vec![true; n],
            dropped_directions: n,
        };
    }
    let eig = SymmetricEigen::new(info);
    let top = eig.eigenvalues.max();
    let threshold = top / cond_cutoff;
    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut flag_weight = vec![0.0; n];
    let mut dropped = 0;
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        if top > 0.0 && ev > threshold {
            cov += (v * v.transpose()) / ev;
        } else {
            dropped += 1;
            for (w, c) in flag_weight.iter_mut().zip(v.iter()) {
                *w += c * c;
            }
        }
    }
    let status = match dropped {
        0 => HessianStatus::Ok,
        d if d == n => HessianStatus::Failed,
        _ => HessianStatus::NearSingular,
    };
    Covariance {
        matrix: (0..n).map(|i| (0..n).map(|j| cov[(i, j)]).collect()).collect(),
        status,
        flagged: flag_weight.iter().map(|&w| w > 1e-6).collect(),
        dropped_directions: dropped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: ParamVector,
    pub param_names: Vec<String>,
    pub loglik: f64,
    pub covariance: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    /// Standard errors affected by a dropped Hessian direction.
    pub se_flagged: Vec<bool>,
    pub hessian_status: HessianStatus,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    pub n_starts_used: usize,
    /// Log-likelihood at each starting point tried.
    pub start_logliks: Vec<f64>,
    pub k_free: usize,
    /// Total observation weight.
    pub n: f64,
}

impl FitResult {
    /// Poisson rate of an intercept-only Poisson-family fit.
    pub fn lambda_hat(&self) -> Option<f64> {
        match self.spec.kind {
            ModelKind::PoissonRR | ModelKind::ZipNull => Some(self.params.0[0].exp()),
            _ => None,
        }
    }

    /// SP probability of the null ZIP fit.
    pub fn theta_hat(&self) -> Option<f64> {
        match self.spec.kind {
            ModelKind::ZipNull => models::theta_of(&self.spec, &self.params, &[1.0]).ok(),
            _ => None,
        }
    }

    /// Estimated true-score distribution for models without predictors.
    pub fn true_score_distribution(&self) -> Option<Vec<f64>> {
        match self.spec.kind {
            ModelKind::MultinomialRR => Some(models::multinomial_probs(&self.params.0)),
            ModelKind::PoissonRR | ModelKind::ZipNull => {
                crate::distributions::truncated_poisson_pmf(self.lambda_hat()?, self.spec.m_items()).ok()
            }
            ModelKind::ZipRegression => None,
        }
    }
}

/// Deterministic starting values.
///
/// The Poisson rate starts at the moment estimate of the mean true score,
/// `(mean(S*) - M p(yes|0)) / (p(yes|1) - p(yes|0))`, floored at 0.05; the SP
/// probability starts at 0.1; slopes start at zero.
pub fn default_start(spec: &ModelSpec, data: &[Observation]) -> ParamVector {
    let d = &spec.design;
    let m = spec.m_items() as f64;
    let total: f64 = data.iter().map(|o| o.weight).sum();
    let mean_obs = data.iter().map(|o| o.weight * o.s_star as f64).sum::<f64>() / total;
    let mean_true = ((mean_obs - m * d.p_yes_given_0()) / (d.p_yes_given_1() - d.p_yes_given_0()))
        .clamp(0.05, m);
    let ln_lambda = mean_true.ln();
    let logit_theta = (DEFAULT_SP_START / (1.0 - DEFAULT_SP_START)).ln();
    let v = match spec.kind {
        ModelKind::MultinomialRR => vec![0.0; spec.m_items()],
        ModelKind::PoissonRR => vec![ln_lambda],
        ModelKind::ZipNull => vec![ln_lambda, logit_theta],
        ModelKind::ZipRegression => {
            let mut v = vec![0.0; spec.n_params()];
            v[0] = ln_lambda;
            v[spec.x_dim()] = logit_theta;
            v
        }
    };
    ParamVector(v)
}

struct Candidate {
    max: Maximum,
    cov: Covariance,
}

/// Fits `spec` to `data` by maximum likelihood.
///
/// Starts from [`default_start`]; if the run fails to converge or its Hessian
/// cannot be inverted cleanly, restarts from perturbed copies of the default
/// start (up to `opts.max_starts` runs in total) and keeps the best optimum.
/// Returns [`Error::NonConvergence`] carrying the best partial result when no
/// run converged.
pub fn fit(spec: &ModelSpec, data: &[Observation], q: &QMatrix, opts: &FitOptions) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::NoData);
    }
    for obs in data {
        spec.check_observation(obs)?;
    }
    let objective = |p: &[f64]| {
        log_likelihood(spec, &ParamVector(p.to_vec()), data, q).unwrap_or(f64::NEG_INFINITY)
    };
    let base = default_start(spec, data);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<Candidate> = None;
    let mut start_logliks = Vec::new();
    let mut starts = 0;

    for attempt in 0..opts.max_starts.max(1) {
        let x0: Vec<f64> = if attempt == 0 {
            base.0.clone()
        } else {
            base.0
                .iter()
                .map(|v| v + rng.random_range(-opts.perturbation..=opts.perturbation))
                .collect()
        };
        starts += 1;
        start_logliks.push(objective(&x0));
        let Ok(max) = maximize(&objective, &x0, opts) else {
            continue;
        };
        let cov = match numeric_hessian(&objective, &max.x, opts.hessian_rel_step) {
            Ok(h) => covariance_from_hessian(&h, opts.cond_cutoff),
            Err(_) => covariance_from_hessian(&vec![vec![f64::NAN; max.x.len()]; max.x.len()], 1.0),
        };
        let clean = max.converged && cov.status == HessianStatus::Ok;
        let better = best.as_ref().is_none_or(|b| {
            max.value > b.max.value || (!b.max.converged && max.converged && max.value >= b.max.value)
        });
        if better {
            best = Some(Candidate { max, cov });
        }
        if clean {
            break;
        }
    }

    let Some(Candidate { max, cov }) = best else {
        return Err(Error::NonFiniteProbe);
    };
    let std_errors = (0..cov.matrix.len()).map(|i| cov.matrix[i][i].max(0.0).sqrt()).collect();
    let result = FitResult {
        spec: spec.clone(),
        param_names: spec.param_names(),
        params: ParamVector(max.x),
        loglik: max.value,
        covariance: cov.matrix,
        std_errors,
        se_flagged: cov.flagged,
        hessian_status: cov.status,
        converged: max.converged,
        iterations: max.iterations,
        gradient_max_norm: max_abs(&max.gradient),
        n_starts_used: starts,
        start_logliks,
        k_free: spec.n_params(),
        n: data.iter().map(|o| o.weight).sum(),
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NonConvergence {
            starts,
            loglik: result.loglik,
            partial: Box::new(result),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_q_matrix, forced_response_design};
    use crate::models::frequency_observations;

    fn table() -> Vec<Observation> {
        frequency_observations(&[288.0, 295.0, 207.0, 68.0, 7.0, 5.0])
    }

    #[test]
    fn quadratic_derivatives() {
        let f = |x: &[f64]| x[0] * x[0];
        let g = numeric_gradient(&f, &[3.0], 1e-6).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let h = numeric_hessian(&f, &[3.0], 1e-4).unwrap();
        assert!((h[0][0] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let f = |_: &[f64]| 7.5;
        let g = numeric_gradient(&f, &[1.0, -2.0, 1e3], 1e-6).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn probes_reject_sentinel() {
        let f = |x: &[f64]| if x[0] > 1.0 { f64::NEG_INFINITY } else { -x[0] * x[0] };
        assert!(matches!(
            numeric_gradient(&f, &[1.0], 1e-6),
            Err(Error::NonFiniteProbe)
        ));
        assert!(numeric_hessian(&f, &[1.0], 1e-4).is_err());
    }

    #[test]
    fn hessian_is_symmetric() {
        let f = |x: &[f64]| (x[0] * x[1]).sin() + x[2].powi(3) * x[0];
        let h = numeric_hessian(&f, &[0.3, -1.2, 0.7], 1e-4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[i][j], h[j][i]);
            }
        }
        // d2/dx0dx2 = 3 x2^2
        assert!((h[0][2] - 3.0 * 0.49).abs() < 1e-6);
    }

    #[test]
    fn maximizes_concave_quadratic() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 10.0 * (x[1] + 2.0).powi(2) - x[0] * x[1];
        let m = maximize(&f, &[5.0, 5.0], &FitOptions::default()).unwrap();
        assert!(m.converged);
        // stationary point: x1 = -2 - x0 / 20, x0 = 4 / 1.95
        let x0 = 4.0 / 1.95;
        let x1 = -2.0 - x0 / 20.0;
        assert!((m.x[0] - x0).abs() < 1e-5, "{:?}", m.x);
        assert!((m.x[1] - x1).abs() < 1e-5);
        assert!(m.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn maximizes_rosenbrock() {
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let opts = FitOptions {
            max_iter: 2000,
            ..FitOptions::default()
        };
        let m = maximize(&f, &[-1.2, 1.0], &opts).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{:?}", m.x);
        assert!(m.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn covariance_of_diagonal_hessian() {
        let cov = covariance_from_hessian(&[vec![-4.0, 0.0], vec![0.0, -0.25]], 1e12);
        assert_eq!(cov.status, HessianStatus::Ok);
        assert!((cov.matrix[0][0] - 0.25).abs() < 1e-14);
        assert!((cov.matrix[1][1] - 4.0).abs() < 1e-12);
        let sing = covariance_from_hessian(&[vec![-4.0, 0.0], vec![0.0, 0.0]], 1e12);
        assert_eq!(sing.status, HessianStatus::NearSingular);
        assert_eq!(sing.flagged, vec![false, true]);
        let bad = covariance_from_hessian(&[vec![f64::NAN]], 1e12);
        assert_eq!(bad.status, HessianStatus::Failed);
    }

    #[test]
    fn poisson_fit_on_survey_table() {
        let d = forced_response_design(0.9329, 0.18678, 5).unwrap();
        let q = build_q_matrix(&d);
        let spec = ModelSpec::null(ModelKind::PoissonRR, d);
        let r = fit(&spec, &table(), &q, &FitOptions::default()).unwrap();
        assert!((r.loglik + 1183.3).abs() < 0.05, "{}", r.loglik);
        assert_eq!(r.k_free, 1);
        assert_eq!(r.n, 870.0);
        assert_eq!(r.hessian_status, HessianStatus::Ok);
        assert!(r.std_errors[0] > 0.0);
        assert!(r.start_logliks.iter().all(|&s| s <= r.loglik));
    }

    #[test]
    fn zip_fit_on_survey_table() {
        let d = forced_response_design(0.9329, 0.18678, 5).unwrap();
        let q = build_q_matrix(&d);
        let spec = ModelSpec::null(ModelKind::ZipNull, d);
        let r = fit(&spec, &table(), &q, &FitOptions::default()).unwrap();
        assert!((r.loglik + 1173.2).abs() < 0.05, "{}", r.loglik);
        assert!((r.theta_hat().unwrap() - 0.126).abs() < 0.002);
        // covariance symmetric and positive definite
        let c = &r.covariance;
        assert_eq!(c[0][1], c[1][0]);
        assert!(c[0][0] > 0.0 && c[0][0] * c[1][1] - c[0][1] * c[1][0] > 0.0);
    }

    #[test]
    fn multinomial_identity_design_recovers_proportions() {
        let d = forced_response_design(1.0, 0.0, 3).unwrap();
        let q = build_q_matrix(&d);
        let counts = [400.0, 300.0, 200.0, 100.0];
        let spec = ModelSpec::null(ModelKind::MultinomialRR, d);
        let r = fit(&spec, &frequency_observations(&counts), &q, &FitOptions::default()).unwrap();
        let pi = r.true_score_distribution().unwrap();
        for (p, c) in pi.iter().zip(counts) {
            assert!((p - c / 1000.0).abs() < 1e-6, "{pi:?}");
        }
    }

    #[test]
    fn empty_data_is_rejected() {
        let d = forced_response_design(0.9, 0.1, 2).unwrap();
        let q = build_q_matrix(&d);
        let spec = ModelSpec::null(ModelKind::PoissonRR, d);
        assert!(matches!(fit(&spec, &[], &q, &FitOptions::default()), Err(Error::NoData)));
    }

    #[test]
    fn exhausted_budget_reports_partial_fit() {
        let d = forced_response_design(0.9329, 0.18678, 5).unwrap();
        let q = build_q_matrix(&d);
        let spec = ModelSpec::null(ModelKind::ZipNull, d);
        let opts = FitOptions {
            max_iter: 1,
            max_starts: 2,
            ..FitOptions::default()
        };
        match fit(&spec, &table(), &q, &opts) {
            Err(Error::NonConvergence { partial, starts, .. }) => {
                assert_eq!(starts, 2);
                assert!(!partial.converged);
                assert!(partial.loglik.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
