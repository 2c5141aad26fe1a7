//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `RRZIP_SUPPLEMENT_CSV` to an individual-level CSV (columns `sum_score`
//! or `y1..y5`, plus gender, age, education, year_unemployment,
//! knowledge_rules, trust, understanding) to run criterion 4b; without it that
//! criterion is reported as SKIP.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rrzip::design::{build_q_matrix, forced_response_design, mom_prevalence};
use rrzip::diagnostics::{self, effect_size, information_criteria, information_criteria_from, pearson_x2};
use rrzip::distributions::{bernoulli_sum_exact, poisson_pmf};
use rrzip::estimation::numeric_gradient;
use rrzip::models::{self, frequency_observations};
use rrzip::simulation::{self, brute_force_loglik, SimScenario};
use rrzip::{fit, DataFormat, Dataset, FitOptions, FitResult, ModelKind, ModelSpec, Observation, ParamVector, RRDesign};

const TABLE: [f64; 6] = [288.0, 295.0, 207.0, 68.0, 7.0, 5.0];

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(pass: bool, detail: String) -> Outcome {
    if pass {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn programmed() -> RRDesign {
    forced_response_design(0.9329, 0.18678, 5).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn fmt(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("({})", parts.join(", "))
}

fn fit_null(kind: ModelKind) -> FitResult {
    let d = programmed();
    fit(&ModelSpec::null(kind, d), &frequency_observations(&TABLE), &build_q_matrix(&d), &FitOptions::default())
        .unwrap()
}

fn criterion_1a_exact_row() -> Outcome {
    let t = Instant::now();
    let exact = bernoulli_sum_exact(&[0.001, 0.050, 0.009, 0.069, 0.172]).unwrap().pmf;
    let dev = max_abs_diff(&exact, &[0.7250, 0.2498, 0.0244, 0.0008, 0.0000, 0.0000]);
    let secs = t.elapsed().as_secs_f64();
    check(dev <= 5e-5 && secs < 1.0, format!("exact row {} max |dev| {dev:.1e}, {secs:.3}s", fmt(&exact, 5)))
}

fn criterion_1b_poisson_row() -> Outcome {
    let t = Instant::now();
    let pois = poisson_pmf(0.301, 5).unwrap();
    let dev = max_abs_diff(&pois, &[0.7401, 0.2228, 0.0335, 0.0033, 0.0002, 0.0000]);
    let secs = t.elapsed().as_secs_f64();
    check(dev <= 5e-5 && secs < 1.0, format!("Poisson(0.301) row {} max |dev| {dev:.1e}, {secs:.3}s", fmt(&pois, 6)))
}

fn criterion_2_moment_prevalences() -> Outcome {
    let d = programmed();
    let est: Vec<_> = [122, 195, 168, 207, 274].iter().map(|&y| mom_prevalence(y, 870, &d).unwrap()).collect();
    let values: Vec<f64> = est.iter().map(|e| e.estimate).collect();
    let dev = max_abs_diff(&values[1..], &[0.050, 0.009, 0.069, 0.172]);
    check(
        est[0].clamped && dev <= 1e-3,
        format!("estimates {} (item 1 clamped: {}), max |dev| {dev:.1e}", fmt(&values, 4), est[0].clamped),
    )
}

fn ic_ok(f: &FitResult, aic: f64, bic: f64) -> (bool, String) {
    let ic = information_criteria(f);
    (
        (ic.aic - aic).abs() <= 0.3 && (ic.bic - bic).abs() <= 0.3,
        format!("AIC {:.1} BIC {:.1}", ic.aic, ic.bic),
    )
}

fn criterion_3a_multinomial() -> Outcome {
    let f = fit_null(ModelKind::MultinomialRR);
    let data = frequency_observations(&TABLE);
    let fitted = diagnostics::fitted_frequencies(&f, &data).unwrap();
    let x2 = pearson_x2(&f, &TABLE).unwrap().x2;
    let pi = f.true_score_distribution().unwrap();
    let (ic, ic_text) = ic_ok(&f, 2351.6, 2375.4);
    check(
        (f.loglik + 1170.8).abs() <= 0.1
            && (x2 - 6.1).abs() <= 0.3
            && max_abs_diff(&fitted, &[272.0, 319.1, 195.3, 66.7, 12.6, 4.3]) <= 0.5
            && max_abs_diff(&pi, &[0.878, 0.0, 0.116, 0.0, 0.0, 0.006]) <= 0.005
            && ic,
        format!("loglik {:.2}, X2 {x2:.2}, fitted {}, pi {}, {ic_text}", f.loglik, fmt(&fitted, 1), fmt(&pi, 3)),
    )
}

fn criterion_3b_poisson() -> Outcome {
    let f = fit_null(ModelKind::PoissonRR);
    let x2 = pearson_x2(&f, &TABLE).unwrap().x2;
    let (ic, ic_text) = ic_ok(&f, 2368.6, 2373.4);
    check(
        (f.loglik + 1183.3).abs() <= 0.1 && (x2 - 56.0).abs() <= 0.5 && ic,
        format!("loglik {:.2}, X2 {x2:.2}, {ic_text}", f.loglik),
    )
}

fn criterion_3c_zip_null_likelihood() -> Outcome {
    let f = fit_null(ModelKind::ZipNull);
    let theta = f.theta_hat().unwrap();
    let (ic, ic_text) = ic_ok(&f, 2350.5, 2360.0);
    check(
        (f.loglik + 1173.2).abs() <= 0.1 && (theta - 0.126).abs() <= 0.002 && ic,
        format!("loglik {:.2}, theta {theta:.4}, {ic_text}", f.loglik),
    )
}

fn criterion_3d_zip_null_fit_statistics() -> Outcome {
    let f = fit_null(ModelKind::ZipNull);
    let data = frequency_observations(&TABLE);
    let fitted = diagnostics::fitted_frequencies(&f, &data).unwrap();
    let x2 = pearson_x2(&f, &TABLE).unwrap();
    let cell5 = x2.contributions[5];
    check(
        (x2.x2 - 19.6).abs() <= 0.3
            && (cell5 - 14.6).abs() <= 0.5
            && max_abs_diff(&fitted, &[287.2, 298.9, 199.5, 70.1, 13.3, 1.1]) <= 0.5,
        format!(
            "X2 {:.2} (target 19.6), cell-5 {cell5:.2} (target 14.6), fitted {} (target (287.2, 298.9, 199.5, 70.1, 13.3, 1.1))",
            x2.x2,
            fmt(&fitted, 1)
        ),
    )
}

fn criterion_3e_runtime() -> Outcome {
    let t = Instant::now();
    for kind in [ModelKind::MultinomialRR, ModelKind::PoissonRR, ModelKind::ZipNull] {
        let f = fit_null(kind);
        pearson_x2(&f, &TABLE).unwrap();
    }
    let secs = t.elapsed().as_secs_f64();
    check(secs < 10.0, format!("three null fits in {secs:.2}s"))
}

fn criterion_4a_recovery() -> Outcome {
    let text = std::fs::read_to_string(fixtures().join("scenario_regression.json")).unwrap();
    let scenario: SimScenario = serde_json::from_str(&text).unwrap();
    let t = Instant::now();
    let summary = simulation::recovery_study(&scenario, 200, &FitOptions::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let mut ok = secs < 600.0 && summary.n_converged > 0;
    let mut parts = Vec::new();
    for c in &summary.coefficients {
        let cov_ok = (0.90..=0.99).contains(&c.coverage);
        let sign_needed = ["beta.year_unemployment", "beta.knowledge_rules", "gamma.understanding"].contains(&c.name.as_str());
        let sign_ok = !sign_needed || c.sign_recovery.unwrap_or(0.0) >= 0.95;
        ok &= cov_ok && sign_ok;
        let sign = if sign_needed { format!(" sign {:.3}", c.sign_recovery.unwrap_or(0.0)) } else { String::new() };
        parts.push(format!("{} cov {:.3}{sign}", c.name, c.coverage));
    }
    check(
        ok,
        format!(
            "{}/{} converged in {secs:.0}s; {}",
            summary.n_converged,
            summary.n_replicates,
            parts.join("; ")
        ),
    )
}

fn criterion_4b_supplement() -> Outcome {
    let Some(path) = std::env::var_os("RRZIP_SUPPLEMENT_CSV") else {
        return Outcome::Skip("RRZIP_SUPPLEMENT_CSV not set; supplement data is optional".into());
    };
    let format = std::fs::read_to_string(&path)
        .ok()
        .and_then(|t| t.lines().next().map(|h| h.split(',').any(|c| c.trim() == "y1")))
        .map_or(DataFormat::Individual, |items| if items { DataFormat::Items } else { DataFormat::Individual });
    let dataset = match Dataset::read(&path, format) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(format!("cannot read supplement: {e}")),
    };
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let x = names(&["gender", "age", "education", "year_unemployment", "knowledge_rules"]);
    let z = names(&["trust", "understanding"]);
    let spec = ModelSpec::new(ModelKind::ZipRegression, programmed(), x, z).unwrap();
    let obs = match dataset.observations(&spec) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(format!("supplement columns: {e}")),
    };
    let f = match fit(&spec, &obs, &build_q_matrix(&spec.design), &FitOptions::default()) {
        Ok(f) => f,
        Err(e) => return Outcome::Fail(format!("fit failed: {e}")),
    };
    let target = [-0.13, 0.21, 0.50, 0.19, 0.58, -0.27, -0.64, 0.14, -0.46];
    let se = [0.38, 0.22, 0.36, 0.18, 0.29, 0.12, 1.04, 0.33, 0.23];
    let within = f.params.0.iter().zip(target.iter().zip(se)).all(|(e, (t, s))| (e - t).abs() <= 2.0 * s);
    let theta_star = diagnostics::theta_star_aggregate(&f, &obs).unwrap_or(f64::NAN);
    check(
        within && (theta_star - 0.121).abs() <= 0.005,
        format!("estimates {}, theta* {theta_star:.4}", fmt(&f.params.0, 3)),
    )
}

fn random_params(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> ParamVector {
    let v = match spec.kind {
        ModelKind::MultinomialRR => (0..spec.n_params()).map(|_| rng.random_range(-4.0..3.0)).collect(),
        ModelKind::PoissonRR => vec![rng.random_range(-3.0..1.0)],
        ModelKind::ZipNull => vec![rng.random_range(-3.0..1.0), rng.random_range(-4.0..2.0)],
        ModelKind::ZipRegression => {
            let mut v: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(-0.5..0.5)).collect();
            v[0] = rng.random_range(-2.0..0.5);
            v[spec.x_dim()] = rng.random_range(-3.0..1.0);
            v
        }
    };
    ParamVector(v)
}

fn criterion_5_brute_force() -> Outcome {
    let d = programmed();
    let q = build_q_matrix(&d);
    let data = frequency_observations(&TABLE);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for kind in ModelKind::ALL {
        let spec = ModelSpec::null(kind, d);
        for _ in 0..100 {
            let p = random_params(&spec, &mut rng);
            let a = brute_force_loglik(&spec, &p, &data).unwrap();
            let b = models::log_likelihood(&spec, &p, &data, &q).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-10, format!("max |brute - kernel| = {worst:.2e} over 4 models x 100 points"))
}

/// Richardson-extrapolated central difference, independent of the library.
fn richardson_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let central = |h: f64| {
                let mut up = x.to_vec();
                let mut dn = x.to_vec();
                up[i] += h;
                dn[i] -= h;
                (f(&up) - f(&dn)) / (2.0 * h)
            };
            let h = 1e-3 * x[i].abs().max(1.0);
            let d1 = central(h);
            let d2 = central(h / 2.0);
            let d3 = central(h / 4.0);
            let r1 = (4.0 * d2 - d1) / 3.0;
            let r2 = (4.0 * d3 - d2) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect()
}

fn regression_data() -> (ModelSpec, Vec<Observation>) {
    let text = std::fs::read_to_string(fixtures().join("scenario_regression.json")).unwrap();
    let mut scenario: SimScenario = serde_json::from_str(&text).unwrap();
    scenario.n = 870;
    let sim = simulation::generate(&scenario).unwrap();
    (scenario.model_spec().unwrap(), sim.observations)
}

fn criterion_6_gradient() -> Outcome {
    let d = programmed();
    let table = frequency_observations(&TABLE);
    let mut cases: Vec<(ModelSpec, Vec<Observation>)> = [ModelKind::MultinomialRR, ModelKind::PoissonRR, ModelKind::ZipNull]
        .into_iter()
        .map(|k| (ModelSpec::null(k, d), table.clone()))
        .collect();
    cases.push(regression_data());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for (spec, data) in &cases {
        let q = build_q_matrix(&spec.design);
        let f = |p: &[f64]| models::log_likelihood(spec, &ParamVector(p.to_vec()), data, &q).unwrap();
        for _ in 0..20 {
            let mut p = random_params(spec, &mut rng);
            if spec.kind == ModelKind::MultinomialRR {
                p.0.iter_mut().for_each(|v| *v = v.clamp(-2.5, 2.5));
            }
            let g = numeric_gradient(&f, &p.0, FitOptions::default().rel_step).unwrap();
            let r = richardson_gradient(&f, &p.0);
            let scale = r.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            worst = worst.max(max_abs_diff(&g, &r) / scale);
        }
    }
    check(worst <= 1e-5, format!("max relative gradient error {worst:.2e} over 4 models x 20 points"))
}

fn criterion_7_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut q_worst = 0.0f64;
    for _ in 0..200 {
        let a: f64 = rng.random_range(0.0..1.0);
        let b: f64 = rng.random_range(0.0..1.0);
        let (p1, p0) = (a.max(b), a.min(b));
        if p1 - p0 < 1e-3 {
            continue;
        }
        let m = rng.random_range(1..=12);
        let q = build_q_matrix(&forced_response_design(p1, p0, m).unwrap());
        for s in 0..=m {
            q_worst = q_worst.max((q.column(s).iter().sum::<f64>() - 1.0).abs());
        }
    }

    let (reg_spec, reg_data) = regression_data();
    let d = programmed();
    let q = build_q_matrix(&d);
    let mut cell_worst = 0.0f64;
    for kind in ModelKind::ALL {
        let spec = if kind == ModelKind::ZipRegression { reg_spec.clone() } else { ModelSpec::null(kind, d) };
        for i in 0..50 {
            let p = random_params(&spec, &mut rng);
            let obs = if kind == ModelKind::ZipRegression { reg_data[i].clone() } else { Observation::null(0, 1.0) };
            let cells = models::cell_probabilities(&spec, &p, &obs, &q).unwrap();
            cell_worst = cell_worst.max((cells.iter().sum::<f64>() - 1.0).abs());
        }
    }

    let mut ic_exact = true;
    for _ in 0..200 {
        let k = rng.random_range(0..20usize);
        let ll = rng.random_range(-5000.0..0.0);
        let n: f64 = rng.random_range(1.0..1e5);
        let ic = information_criteria_from(k, ll, n);
        ic_exact &= ic.aic == 2.0 * k as f64 - 2.0 * ll && ic.bic == k as f64 * n.ln() - 2.0 * ll;
    }

    let e1 = effect_size(0.58, None).0;
    let e2 = effect_size(-0.27, Some(0.90)).1.unwrap();
    let e3 = effect_size(-0.46, Some(0.85)).1.unwrap();
    let effects_ok = (e1 - 1.78).abs() <= 0.01 && (e2 - 0.78).abs() <= 0.01 && (e3 - 0.67).abs() <= 0.01;

    check(
        q_worst <= 1e-12 && cell_worst <= 1e-10 && ic_exact && effects_ok,
        format!(
            "Q column sums {q_worst:.1e}, cell sums {cell_worst:.1e}, AIC/BIC exact {ic_exact}, effects ({e1:.3}, {e2:.3}, {e3:.3})"
        ),
    )
}

fn criterion_8_likelihood_surface() -> Outcome {
    let d = programmed();
    let q = build_q_matrix(&d);
    let spec = ModelSpec::null(ModelKind::ZipNull, d);
    let data = frequency_observations(&TABLE);
    let steps = 120;
    let thetas: Vec<f64> = (1..steps).map(|i| 0.25 * i as f64 / steps as f64).collect();
    let lambdas: Vec<f64> = (1..steps).map(|i| 0.25 + 0.5 * i as f64 / steps as f64).collect();
    let grid: Vec<Vec<f64>> = thetas
        .iter()
        .map(|&t| {
            lambdas
                .iter()
                .map(|&l| {
                    let p = ParamVector(vec![l.ln(), (t / (1.0 - t)).ln()]);
                    models::log_likelihood(&spec, &p, &data, &q).unwrap()
                })
                .collect()
        })
        .collect();
    let mut maxima = Vec::new();
    for i in 1..grid.len() - 1 {
        for j in 1..grid[i].len() - 1 {
            let v = grid[i][j];
            let is_max = (-1i32..=1).all(|di| {
                (-1i32..=1).all(|dj| {
                    (di == 0 && dj == 0) || grid[(i as i32 + di) as usize][(j as i32 + dj) as usize] < v
                })
            });
            if is_max {
                maxima.push((thetas[i], lambdas[j]));
            }
        }
    }
    let detail = format!(
        "{} interior local maxima on a {}x{} grid {:?}",
        maxima.len(),
        thetas.len(),
        lambdas.len(),
        maxima.iter().map(|(t, l)| format!("theta {t:.3} lambda {l:.3}")).collect::<Vec<_>>()
    );
    check(maxima.len() == 1, detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("1a exact Bernoulli-sum row", criterion_1a_exact_row),
        ("1b Poisson approximation row", criterion_1b_poisson_row),
        ("2 moment prevalences", criterion_2_moment_prevalences),
        ("3a multinomial null fit", criterion_3a_multinomial),
        ("3b Poisson null fit", criterion_3b_poisson),
        ("3c ZIP null loglik/theta/AIC/BIC", criterion_3c_zip_null_likelihood),
        ("3d ZIP null fitted/X2/cell-5", criterion_3d_zip_null_fit_statistics),
        ("3e null-fit runtime", criterion_3e_runtime),
        ("4a parameter recovery", criterion_4a_recovery),
        ("4b supplement regression", criterion_4b_supplement),
        ("5 brute-force oracle", criterion_5_brute_force),
        ("6 gradient oracle", criterion_6_gradient),
        ("7 structural invariants", criterion_7_invariants),
        ("8 likelihood surface", criterion_8_likelihood_surface),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Outcome::Pass(d) => println!("PASS criterion {name}: {d}"),
            Outcome::Skip(d) => println!("SKIP criterion {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d}");
            }
        }
    }
    println!("acceptance: {failed} criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
