//! Browser bindings. Each export takes the problem as a JSON string with the
//! same fields as the CLI's `problem` section and returns JSON text.

use std::f64::consts::{FRAC_PI_2, PI};

use retspec::asymptotics::{AsymptoticModel, RightScaling};
use retspec::problem::{validate, ProblemConfig, DEFAULT_GRID};
use retspec::spectral::SpectralSolver;
use retspec::ProblemSpec;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Coarser than the CLI default; plenty for plotting and keeps the page responsive.
pub const DEMO_STEPS: usize = 1024;
const QUADRATURE: usize = 2048;
const MAX_SAMPLES: usize = 20_000;
const MAX_INDEX: usize = 200;

fn problem(json: &str) -> Result<ProblemSpec, String> {
    let cfg: ProblemConfig = serde_json::from_str(json).map_err(|e| format!("problem: {e}"))?;
    let spec = ProblemSpec::from_config(&cfg).map_err(|e| e.to_string())?;
    let report = validate(&spec, DEFAULT_GRID).map_err(|e| e.to_string())?;
    if !report.accepted() {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        return Err(format!("problem rejected: {}", names.join(", ")));
    }
    Ok(spec)
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("plain numeric data serializes")
}

#[derive(Serialize)]
struct Curve {
    s: Vec<f64>,
    f: Vec<f64>,
}

/// `F(s²)` sampled on `samples` equispaced points of `[s_min, s_max]`.
#[wasm_bindgen]
pub fn characteristic_curve(
    problem_json: &str,
    s_min: f64,
    s_max: f64,
    samples: usize,
) -> Result<String, String> {
    if !(s_min > 0.0 && s_max > s_min && (2..=MAX_SAMPLES).contains(&samples)) {
        return Err(format!(
            "need 0 < s_min < s_max and 2..={MAX_SAMPLES} samples"
        ));
    }
    let spec = problem(problem_json)?;
    let solver = SpectralSolver::new(&spec, DEMO_STEPS, 1e-10).map_err(|e| e.to_string())?;
    let pts = solver
        .sample_grid(s_min, s_max, samples)
        .map_err(|e| e.to_string())?;
    let (s, f) = pts.into_iter().unzip();
    Ok(to_json(&Curve { s, f }))
}

#[derive(Serialize)]
struct Row {
    n: usize,
    s_n: f64,
    lambda_n: f64,
    s_refined: Option<f64>,
    residual: Option<f64>,
}

/// Eigenvalues for `n_min..=n_max` next to their refined asymptotic estimates.
#[wasm_bindgen]
pub fn eigenvalue_table(problem_json: &str, n_min: usize, n_max: usize) -> Result<String, String> {
    if !(1 <= n_min && n_min <= n_max && n_max <= MAX_INDEX) {
        return Err(format!("need 1 <= n_min <= n_max <= {MAX_INDEX}"));
    }
    let spec = problem(problem_json)?;
    let solver = SpectralSolver::new(&spec, DEMO_STEPS, 1e-10).map_err(|e| e.to_string())?;
    let model = AsymptoticModel::new(&spec, QUADRATURE).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for (n, r) in solver.localize_range(n_min..=n_max) {
        let p = r.map_err(|e| e.to_string())?;
        let s_refined = model.predict_s(n).s_refined;
        rows.push(Row {
            n,
            s_n: p.s,
            lambda_n: p.lambda,
            s_refined,
            residual: s_refined.map(|r| (p.s - r).abs()),
        });
    }
    Ok(to_json(&rows))
}

#[derive(Serialize)]
struct Eigenfunction {
    n: usize,
    s_n: f64,
    x: Vec<f64>,
    computed: Vec<f64>,
    leading: Vec<f64>,
    refined: Option<Vec<f64>>,
}

/// The `n`-th eigenfunction on `points` samples per subinterval (interface
/// excluded), with the leading and refined asymptotic forms.
#[wasm_bindgen]
pub fn eigenfunction(problem_json: &str, n: usize, points: usize) -> Result<String, String> {
    if !(1..=MAX_INDEX).contains(&n) || !(2..=MAX_SAMPLES / 2).contains(&points) {
        return Err(format!(
            "need 1 <= n <= {MAX_INDEX} and 2..={} points",
            MAX_SAMPLES / 2
        ));
    }
    let spec = problem(problem_json)?;
    let solver = SpectralSolver::new(&spec, DEMO_STEPS, 1e-10).map_err(|e| e.to_string())?;
    let pair = solver.localize_near_n(n).map_err(|e| e.to_string())?;
    let model = AsymptoticModel::new(&spec, QUADRATURE).map_err(|e| e.to_string())?;
    let profile = model.profile(n as f64);
    let h = FRAC_PI_2 / points as f64;
    let x: Vec<f64> = (0..=2 * points)
        .filter(|&k| k != points)
        .map(|k| if k == 2 * points { PI } else { k as f64 * h })
        .collect();
    let err = |e: retspec::asymptotics::AsymptoticError| e.to_string();
    let leading = x
        .iter()
        .map(|&x| model.leading(n, x))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let refined = if model.refined_available() {
        Some(
            x.iter()
                .map(|&x| model.refined_with(&profile, n, x, RightScaling::AsPrinted))
                .collect::<Result<_, _>>()
                .map_err(err)?,
        )
    } else {
        None
    };
    Ok(to_json(&Eigenfunction {
        n,
        s_n: pair.s,
        computed: x.iter().map(|&x| pair.eval(x)).collect(),
        x,
        leading,
        refined,
    }))
}
