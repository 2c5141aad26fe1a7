//! Plain-text reports. Log-likelihoods print to one decimal, probabilities to
//! three.

use std::fmt::Write;

use rrzip::design::MomEstimate;
use rrzip::diagnostics::{DiagnosticsReport, BOUNDARY_PI};
use rrzip::distributions::ApproxReport;
use rrzip::FitResult;

pub fn fit_text(fit: &FitResult, diag: Option<&DiagnosticsReport>, converged: bool) -> String {
    let mut s = String::new();
    let d = &fit.spec.design;
    let _ = writeln!(
        s,
        "model {}  design p(yes|1) = {}, p(yes|0) = {}, M = {}",
        fit.spec.kind,
        d.p_yes_given_1(),
        d.p_yes_given_0(),
        d.m_items()
    );
    let _ = writeln!(
        s,
        "n = {}  k = {}  {} after {} iterations ({} start(s))",
        fit.n,
        fit.k_free,
        if converged { "converged" } else { "NOT CONVERGED" },
        fit.iterations,
        fit.n_starts_used
    );
    let _ = write!(s, "loglik {:.1}", fit.loglik);
    if let Some(r) = diag {
        let _ = write!(s, "  AIC {:.1}  BIC {:.1}", r.aic, r.bic);
    }
    let _ = writeln!(s, "\nhessian: {:?}", fit.hessian_status);

    let _ = writeln!(s, "\n{:<28} {:>10} {:>10}", "parameter", "estimate", "std.err");
    for (i, name) in fit.param_names.iter().enumerate() {
        let flag = if fit.se_flagged[i] { "  (unreliable)" } else { "" };
        let _ = writeln!(s, "{:<28} {:>10.4} {:>10.4}{flag}", name, fit.params.0[i], fit.std_errors[i]);
    }
    if let Some(l) = fit.lambda_hat() {
        let _ = writeln!(s, "lambda = {l:.3}");
    }
    if let Some(t) = fit.theta_hat() {
        let _ = writeln!(s, "theta = {t:.3}");
    }

    let Some(r) = diag else {
        return s;
    };
    let _ = writeln!(s, "\n{:<10} {:>10} {:>10}", "sum score", "observed", "fitted");
    for (i, (o, f)) in r.observed_freqs.iter().zip(&r.fitted_freqs).enumerate() {
        let _ = writeln!(s, "{i:<10} {o:>10} {f:>10.1}");
    }
    if let Some(p) = &r.pearson {
        let _ = writeln!(s, "Pearson X2 = {:.2} (df {})", p.x2, p.df);
        let contrib: Vec<String> = p.contributions.iter().map(|c| format!("{c:.2}")).collect();
        let _ = writeln!(s, "cell contributions: {}", contrib.join(" "));
    }
    let dist: Vec<String> = r.true_score_distribution.iter().map(|p| format!("{p:.3}")).collect();
    let _ = writeln!(s, "true-score distribution: {}", dist.join(" "));
    if !r.boundary_cells.is_empty() {
        let cells: Vec<String> = r.boundary_cells.iter().map(|c| format!("pi_{c}")).collect();
        let _ = writeln!(
            s,
            "boundary estimates (below {BOUNDARY_PI}): {}; standard errors for these are not meaningful",
            cells.join(", ")
        );
    }
    if let Some(t) = r.theta_star_hat {
        let _ = writeln!(s, "theta* (mean SP probability among observed zeros) = {t:.3}");
    }
    if let Some(effects) = &r.effect_sizes {
        let _ = writeln!(s, "\n{:<28} {:>8} {:>8} {:>8} {:>8}", "parameter", "t", "exp", "exp^sd", "");
        for e in effects {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
            let _ = writeln!(
                s,
                "{:<28} {:>8.2} {:>8} {:>8}",
                e.parameter,
                e.t_value,
                fmt(e.effect),
                fmt(e.standardized)
            );
        }
    }
    for g in &r.residuals {
        let _ = writeln!(s, "\nPearson residuals by {}", g.predictor);
        let _ = write!(s, "{:<16}", "");
        for c in &g.cells {
            let _ = write!(s, " {c:>8}");
        }
        s.push('\n');
        for (cat, row) in g.categories.iter().zip(&g.residuals) {
            let _ = write!(s, "{cat:<16}");
            for v in row {
                let _ = write!(s, " {:>8}", v.map_or("-".to_string(), |v| format!("{v:.2}")));
            }
            s.push('\n');
        }
    }
    s
}

pub fn approx_text(prev: &[f64], mom: Option<&[MomEstimate]>, rep: &ApproxReport) -> String {
    let mut s = String::new();
    if let Some(m) = mom {
        let _ = writeln!(s, "{:<6} {:>10} {:>10}", "item", "raw", "estimate");
        for (i, e) in m.iter().enumerate() {
            let clamp = if e.clamped { "  (clamped)" } else { "" };
            let _ = writeln!(s, "{:<6} {:>10.4} {:>10.4}{clamp}", i + 1, e.raw, e.estimate);
        }
        s.push('\n');
    }
    let p: Vec<String> = prev.iter().map(|v| format!("{v:.3}")).collect();
    let _ = writeln!(s, "prevalences: {}  lambda = {:.3}", p.join(" "), rep.lambda);
    let _ = writeln!(s, "{:<10} {:>10} {:>10} {:>10}", "sum", "exact", "poisson", "diff");
    for (i, (e, q)) in rep.exact.iter().zip(&rep.poisson).enumerate() {
        let _ = writeln!(s, "{i:<10} {e:>10.4} {q:>10.4} {:>10.4}", q - e);
    }
    let _ = writeln!(s, "max |diff| = {:.4}", rep.max_abs_deviation);
    s
}
