//! The five subcommands. Each is a pure function of its configuration.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use retspec::asymptotics::{
    verify_rates, AsymptoticModel, RateReport, RateSettings, RightScaling, SlopeFit,
};
use retspec::problem::{check_refined_conditions, validate, DEFAULT_GRID, INTERFACE};
use retspec::spectral::{
    default_certificate_step, Eigenpair, SpectralError, SpectralSolver, SAMPLES_PER_UNIT,
};
use retspec::ProblemSpec;
use serde_json::{json, Value};

use crate::config::{Format, Range, RunConfig};
use crate::table::{Cell, Table};
use crate::CliError;

/// Eigenfunction samples per subinterval in `eigfn` output.
pub const EIGFN_POINTS_PER_SIDE: usize = 256;

/// Minimum number of indices a rate fit accepts.
pub const MIN_RATE_INDICES: usize = 8;

/// What a command produced. `failure` is reported after the body is written.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub summary: Option<String>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn table(table: &Table, format: Format) -> Self {
        Outcome {
            body: match format {
                Format::Csv => table.to_csv(),
                Format::Json => json_text(&table.to_json_value()),
            },
            summary: None,
            failure: None,
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

fn solver_err(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

fn spectral_err(e: SpectralError) -> CliError {
    match e {
        SpectralError::Case1Required => CliError::Config(
            "localization by index needs sin α ≠ 0 and sin β ≠ 0; use an s-range scan instead"
                .into(),
        ),
        other => solver_err(other),
    }
}

/// Parse the problem and reject it unless every structural check passes.
fn checked_spec(cfg: &RunConfig) -> Result<ProblemSpec, CliError> {
    let spec = cfg.spec()?;
    let report = validate(&spec, DEFAULT_GRID).map_err(|e| CliError::Config(e.to_string()))?;
    if !report.accepted() {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        return Err(CliError::Validation(names.join(", ")));
    }
    Ok(spec)
}

fn solver(cfg: &RunConfig, spec: &ProblemSpec, scale: usize) -> Result<SpectralSolver, CliError> {
    SpectralSolver::new(
        spec,
        cfg.solver.steps_per_segment * scale,
        cfg.solver.refine_tol,
    )
    .map_err(solver_err)
}

fn localize_all(
    solver: &SpectralSolver,
    n_min: usize,
    n_max: usize,
) -> Result<Vec<Eigenpair>, CliError> {
    solver
        .localize_range(n_min..=n_max)
        .into_iter()
        .map(|(_, r)| r.map_err(spectral_err))
        .collect()
}

pub fn solve(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let spec = checked_spec(cfg)?;
    let solver = solver(cfg, &spec, 1)?;
    let pairs = match cfg.range()? {
        Range::Indices { n_min, n_max } => localize_all(&solver, n_min, n_max)?,
        Range::Grid {
            s_min,
            s_max,
            samples,
        } => {
            if samples < 2 {
                return Err(CliError::Config(
                    "range.samples: a scan needs at least 2".into(),
                ));
            }
            solver
                .scan_roots(s_min, s_max, samples)
                .map_err(spectral_err)?
        }
    };
    let mut table = Table::new(&["n", "s_n", "lambda_n", "F_residual", "simplicity_ok"]);
    for p in &pairs {
        let cert = solver
            .simplicity_certificate(p, default_certificate_step(p.lambda))
            .map_err(solver_err)?;
        table.push(vec![
            p.index.into(),
            p.s.into(),
            p.lambda.into(),
            p.f_residual.into(),
            cert.ok().into(),
        ]);
    }
    Ok(Outcome::table(&table, format))
}

/// The `s` grid for `charfn`: the configured grid, or windows around the index range.
fn charfn_grid(range: Range) -> (f64, f64, usize) {
    match range {
        Range::Grid {
            s_min,
            s_max,
            samples,
        } => (s_min, s_max, samples),
        Range::Indices { n_min, n_max } => {
            let (a, b) = (n_min as f64 - 0.5, n_max as f64 + 0.5);
            (a, b, ((b - a) * SAMPLES_PER_UNIT).round() as usize + 1)
        }
    }
}

pub fn charfn(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let spec = checked_spec(cfg)?;
    let (a, b, samples) = charfn_grid(cfg.range()?);
    let samples = solver(cfg, &spec, 1)?
        .sample_grid(a, b, samples)
        .map_err(solver_err)?;
    let mut table = Table::new(&["s", "lambda", "F"]);
    for (s, f) in samples {
        table.push(vec![s.into(), (s * s).into(), f.into()]);
    }
    Ok(Outcome::table(&table, format))
}

/// Uniform grid on `[0, π]` with spacing `π/(2m)`, skipping the interface.
pub fn eigfn_grid(points_per_side: usize) -> Vec<f64> {
    let m = points_per_side;
    let h = FRAC_PI_2 / m as f64;
    (0..=2 * m)
        .filter(|&k| k != m)
        .map(|k| if k == 2 * m { PI } else { k as f64 * h })
        .collect()
}

pub fn eigfn(cfg: &RunConfig, n: Option<usize>, format: Format) -> Result<Outcome, CliError> {
    let spec = checked_spec(cfg)?;
    let n = match n {
        Some(n) => n,
        None => cfg
            .range
            .as_ref()
            .and_then(|r| r.resolve().ok())
            .and_then(Range::indices)
            .map(|(n_min, _)| n_min)
            .ok_or_else(|| CliError::Config("eigfn needs --n or range.n_min".into()))?,
    };
    if n == 0 {
        return Err(CliError::Config("--n: must be at least 1".into()));
    }
    let pair = solver(cfg, &spec, 1)?
        .localize_near_n(n)
        .map_err(spectral_err)?;
    let model = AsymptoticModel::new(&spec, cfg.solver.quadrature_points).map_err(solver_err)?;
    let profile = model.profile(n as f64);
    let refined = model.refined_available();
    let mut table = Table::new(&[
        "x",
        "u_n",
        "u_leading",
        "u_refined",
        "abs_err_leading",
        "abs_err_refined",
    ]);
    for x in eigfn_grid(EIGFN_POINTS_PER_SIDE) {
        debug_assert!(x != INTERFACE);
        let u = pair.eval(x);
        let lead = model.leading(n, x).map_err(solver_err)?;
        let fine = if refined {
            Some(
                model
                    .refined_with(&profile, n, x, RightScaling::AsPrinted)
                    .map_err(solver_err)?,
            )
        } else {
            None
        };
        table.push(vec![
            x.into(),
            u.into(),
            lead.into(),
            fine.into(),
            (u - lead).abs().into(),
            fine.map(|f| (u - f).abs()).into(),
        ]);
    }
    Ok(Outcome::table(&table, format))
}

fn fit_line(name: &str, f: &SlopeFit) -> String {
    let verdict = if !f.gating {
        "info"
    } else if f.passed {
        "PASS"
    } else {
        "FAIL"
    };
    match f.slope {
        Some(s) => format!(
            "{name}: {verdict} slope {s:.3} over {} points (threshold {})",
            f.points_used, f.threshold
        ),
        None if f.floor_limited => {
            format!("{name}: {verdict} floor-limited (resolved to precision)")
        }
        None => format!("{name}: not applicable"),
    }
}

pub fn rate_summary(r: &RateReport) -> String {
    let mut out = String::new();
    let b = &r.boundedness;
    let _ = writeln!(
        out,
        "boundedness n^(1/3)|s_n - n|: {} (first half max {:.3e}, second half max {:.3e}{})",
        if b.passed { "PASS" } else { "FAIL" },
        b.first_half_max,
        b.second_half_max,
        if b.floor_limited {
            ", floor-limited"
        } else {
            ""
        }
    );
    for (name, f) in [
        ("eigenvalue rate |s_n - s_refined|", &r.eigenvalue_rate),
        (
            "eigenfunction rate vs leading (left)",
            &r.leading_eigenfunction_rate,
        ),
        (
            "eigenfunction rate vs refined (left)",
            &r.refined_eigenfunction_rate,
        ),
        (
            "eigenfunction rate vs refined (right, as printed)",
            &r.right_printed_rate,
        ),
        (
            "eigenfunction rate vs refined (right, rescaled)",
            &r.right_rescaled_rate,
        ),
        ("oscillatory integral decay (cos)", &r.oscillatory.cos_fit),
        ("oscillatory integral decay (sin)", &r.oscillatory.sin_fit),
    ] {
        let _ = writeln!(out, "{}", fit_line(name, f));
    }
    let _ = writeln!(
        out,
        "right amplitude ratio at max n: {} ({:.4})",
        if r.amplitude_ok { "PASS" } else { "FAIL" },
        r.amplitude_ratio_at_max_n
    );
    let _ = writeln!(out, "overall: {}", if r.passed() { "PASS" } else { "FAIL" });
    out
}

/// Run the rate pipeline: eigenpairs at the configured resolution and at twice
/// that, asymptotic estimates, and the report.
pub fn rate_report(cfg: &RunConfig, spec: &ProblemSpec) -> Result<RateReport, CliError> {
    let (n_min, n_max) = cfg.range()?.indices().ok_or_else(|| {
        CliError::Config("verify needs an index range (range.n_min, range.n_max)".into())
    })?;
    let count = n_max - n_min + 1;
    if count < MIN_RATE_INDICES {
        return Err(CliError::Config(format!(
            "insufficient range: verify needs at least {MIN_RATE_INDICES} indices, got {count}; \
             widen range.n_min..range.n_max (for example 5..50)"
        )));
    }
    let pairs = localize_all(&solver(cfg, spec, 1)?, n_min, n_max)?;
    let reference = localize_all(&solver(cfg, spec, 2)?, n_min, n_max)?;
    let model = AsymptoticModel::new(spec, cfg.solver.quadrature_points).map_err(solver_err)?;
    let estimates: Vec<_> = (n_min..=n_max).map(|n| model.predict_s(n)).collect();
    let settings = RateSettings {
        quadrature_points: cfg.solver.quadrature_points,
        root_tolerance: cfg.solver.refine_tol,
        ..RateSettings::default()
    };
    verify_rates(spec, &pairs, &estimates, Some(&reference), &settings).map_err(solver_err)
}

pub fn verify(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let spec = checked_spec(cfg)?;
    let report = rate_report(cfg, &spec)?;
    let body = match format {
        Format::Csv => {
            let mut t = Table::new(&[
                "n",
                "s_n",
                "s_refined",
                "scaled_shift",
                "eigenvalue_residual",
                "eigenvalue_noise",
                "err_leading_left",
                "err_refined_left",
                "err_refined_right_printed",
                "err_refined_right_rescaled",
                "eigenfunction_noise",
                "right_amplitude_ratio",
            ]);
            for r in &report.rows {
                t.push(vec![
                    r.n.into(),
                    r.s_n.into(),
                    r.s_refined.into(),
                    r.scaled_shift.into(),
                    r.eigenvalue_residual.into(),
                    r.eigenvalue_noise.into(),
                    r.left_err_leading.into(),
                    r.left_err_refined.into(),
                    r.right_err_printed.into(),
                    r.right_err_rescaled.into(),
                    r.eigenfunction_noise.into(),
                    r.right_amplitude_ratio.into(),
                ]);
            }
            t.to_csv()
        }
        Format::Json => json_text(&json!({
            "passed": report.passed(),
            "report": report,
        })),
    };
    let failure = (!report.passed())
        .then(|| CliError::Verification("one or more rate thresholds failed".into()));
    Ok(Outcome {
        body,
        summary: Some(rate_summary(&report)),
        failure,
    })
}

pub fn validate_cmd(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?;
    let eval = |e: retspec::expr::EvalError| CliError::Config(e.to_string());
    let report = validate(&spec, DEFAULT_GRID).map_err(eval)?;
    let conditions = check_refined_conditions(&spec, DEFAULT_GRID).map_err(eval)?;
    let body = match format {
        Format::Csv => {
            let mut t = Table::new(&["check", "passed", "worst_x", "worst_value"]);
            let c = &conditions;
            let extra = [
                &c.q_derivative_bounded[0],
                &c.q_derivative_bounded[1],
                &c.retard_second_derivative_bounded[0],
                &c.retard_second_derivative_bounded[1],
                &c.retard_slope[0],
                &c.retard_slope[1],
                &c.retard_zero_at_origin,
                &c.retard_zero_right_of_interface,
            ];
            for check in report.checks.iter().chain(extra) {
                t.push(vec![
                    check.name.into(),
                    check.passed.into(),
                    check.worst_x.into(),
                    check.worst_value.into(),
                ]);
            }
            t.push(vec![
                "case1".into(),
                c.case1.into(),
                Cell::Missing,
                Cell::Missing,
            ]);
            t.push(vec![
                "refined_asymptotics_ready".into(),
                c.refined_ready().into(),
                Cell::Missing,
                Cell::Missing,
            ]);
            t.to_csv()
        }
        Format::Json => json_text(&json!({
            "accepted": report.accepted(),
            "refined_asymptotics_ready": conditions.refined_ready(),
            "validation": report,
            "conditions": conditions,
        })),
    };
    let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
    let summary = if failed.is_empty() {
        format!(
            "accepted; refined asymptotics {}\n",
            if conditions.refined_ready() {
                "available"
            } else {
                "unavailable"
            }
        )
    } else {
        format!("rejected: {}\n", failed.join(", "))
    };
    Ok(Outcome {
        body,
        summary: Some(summary),
        failure: (!failed.is_empty()).then(|| CliError::Validation(failed.join(", "))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigfn_grid_skips_interface() {
        let g = eigfn_grid(8);
        assert_eq!(g.len(), 16);
        assert!(g.iter().all(|&x| x != INTERFACE));
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), PI);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn charfn_grid_from_indices() {
        let (a, b, n) = charfn_grid(Range::Indices { n_min: 2, n_max: 3 });
        assert_eq!((a, b), (1.5, 3.5));
        assert_eq!(n, 201);
    }
}
