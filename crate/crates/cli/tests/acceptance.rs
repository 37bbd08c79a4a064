//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Built without the libtest harness so the verdict lines are always shown.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use retspec::asymptotics::{apriori_bounds, oscillatory_decay, RateReport, RateSettings};
use retspec::dde::shoot;
use retspec::picard::{picard_pair, PicardSettings};
use retspec::problem::q_norms;
use retspec::spectral::{default_certificate_step, Eigenpair, SpectralSolver};
use retspec::ProblemSpec;
use retspec_cli::commands;
use retspec_cli::config::{Format, RunConfig};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> (RunConfig, ProblemSpec) {
    let cfg = RunConfig::load(&configs().join(format!("{name}.json"))).expect("shipped config");
    let spec = cfg.spec().expect("shipped problem");
    (cfg, spec)
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

/// Shared state: eigenpairs computed once and reused by later criteria.
#[derive(Default)]
struct Ctx {
    null_pairs: Vec<Eigenpair>,
    localized: Vec<(&'static str, Vec<Eigenpair>)>,
    reports: Vec<(&'static str, RateReport, Duration)>,
}

fn criterion_1(ctx: &mut Ctx) -> Verdict {
    let (cfg, spec) = load("null");
    let start = Instant::now();
    let out = match commands::solve(&cfg, Format::Csv) {
        Ok(o) => o,
        Err(e) => return verdict(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    let mut rows = 0;
    for (i, line) in out.body.lines().skip(1).enumerate() {
        let s: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        worst = worst.max((s - (i + 1) as f64).abs());
        rows += 1;
    }
    let solver =
        SpectralSolver::new(&spec, cfg.solver.steps_per_segment, cfg.solver.refine_tol).unwrap();
    ctx.null_pairs = solver
        .localize_range(1..=20)
        .into_iter()
        .map(|(_, r)| r.unwrap())
        .collect();
    verdict(
        rows == 20 && worst < 1e-8 && elapsed < Duration::from_secs(10),
        format!("max |s_n - n| = {worst:.2e} over {rows} rows in {elapsed:.2?}"),
    )
}

fn criterion_2(_: &mut Ctx) -> Verdict {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for name in ["constant_q", "delayed"] {
        let (cfg, spec) = load(name);
        let norms = q_norms(&spec, 4096).unwrap();
        for s in [2.0 * norms.q1.max(norms.q2) + 1.0, 10.0, 25.0] {
            let lambda = s * s;
            let sh = match shoot(&spec, lambda, cfg.solver.steps_per_segment) {
                Ok(r) => r,
                Err(e) => return verdict(false, format!("{name} s={s}: {e}")),
            };
            let (w1, w2) = match picard_pair(&spec, lambda, &PicardSettings::default()) {
                Ok(p) => p,
                Err(e) => return verdict(false, format!("{name} s={s}: {e}")),
            };
            let (l_v, l_d) = w1.segment.sup_distance(&sh.left);
            let (r_v, r_d) = w2.segment.sup_distance(&sh.right);
            let m = l_v.max(l_d).max(r_v).max(r_d);
            worst = worst.max(m);
            lines.push(format!("{name}@{s:.3}:{m:.1e}"));
        }
    }
    verdict(
        worst < 1e-6,
        format!("max sup distance {worst:.2e} [{}]", lines.join(" ")),
    )
}

fn criterion_3(_: &mut Ctx) -> Verdict {
    let spec = ProblemSpec::parse(["0", "0"], ["0", "0"], FRAC_PI_2, FRAC_PI_2, 1.0).unwrap();
    let mut orders = Vec::new();
    for lambda in [1.0f64, 4.0, 25.0] {
        let s = lambda.sqrt();
        let err = |steps| {
            let r = shoot(&spec, lambda, steps).unwrap();
            r.left
                .nodes()
                .iter()
                .map(|&x| (r.left.eval(x) - (s * x).cos()).abs())
                .fold(0.0, f64::max)
        };
        orders.push((err(32) / err(64)).log2());
    }
    let ok = orders.iter().all(|p| (p - 4.0).abs() <= 0.3);
    verdict(ok, format!("observed orders {orders:.3?} for λ = 1, 4, 25"))
}

fn criterion_4(ctx: &mut Ctx) -> Verdict {
    let mut failures = Vec::new();
    for name in ["constant_q", "delayed"] {
        let (cfg, spec) = load(name);
        let solver =
            SpectralSolver::new(&spec, cfg.solver.steps_per_segment, cfg.solver.refine_tol)
                .unwrap();
        let mut pairs = Vec::new();
        for (n, r) in solver.localize_range(5..=50) {
            match r {
                Ok(p) => pairs.push(p),
                Err(e) => failures.push(format!("{name} n={n}: {e}")),
            }
        }
        ctx.localized.push((name, pairs));
    }
    let count: usize = ctx.localized.iter().map(|(_, p)| p.len()).sum();
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{count} windows, each with exactly one sign change")
        } else {
            failures.join("; ")
        },
    )
}

fn rate_reports(ctx: &mut Ctx) -> Result<(), String> {
    if !ctx.reports.is_empty() {
        return Ok(());
    }
    for name in ["constant_q", "delayed"] {
        let (cfg, spec) = load(name);
        let start = Instant::now();
        let report = commands::rate_report(&cfg, &spec).map_err(|e| format!("{name}: {e}"))?;
        ctx.reports.push((name, report, start.elapsed()));
    }
    Ok(())
}

fn criterion_5(ctx: &mut Ctx) -> Verdict {
    if let Err(e) = rate_reports(ctx) {
        return verdict(false, e);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, r, _) in &ctx.reports {
        let b = &r.boundedness;
        // halves are n ∈ [5, 27] and n ∈ [28, 50]
        debug_assert_eq!(r.rows[r.rows.len() / 2].n, 28);
        ok &= b.passed;
        parts.push(format!(
            "{name}: max[5,27] {:.3e}, max[28,50] {:.3e}",
            b.first_half_max, b.second_half_max
        ));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_6(ctx: &mut Ctx) -> Verdict {
    if let Err(e) = rate_reports(ctx) {
        return verdict(false, e);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, r, t) in &ctx.reports {
        let f = &r.eigenvalue_rate;
        ok &= f.gating && f.passed && !f.floor_limited && *t < Duration::from_secs(120);
        parts.push(format!(
            "{name}: slope {:.3} over {} points in {t:.2?}",
            f.slope.unwrap_or(f64::NAN),
            f.points_used
        ));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_7(ctx: &mut Ctx) -> Verdict {
    if let Err(e) = rate_reports(ctx) {
        return verdict(false, e);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, r, _) in &ctx.reports {
        let show = |f: &retspec::asymptotics::SlopeFit| match f.slope {
            Some(s) => format!("{s:.3}"),
            None => "floor-limited".to_string(),
        };
        ok &= r.refined_eigenfunction_rate.passed
            && r.leading_eigenfunction_rate.passed
            && r.amplitude_ok;
        parts.push(format!(
            "{name}: refined {}, leading {}, amplitude ratio {:.4}",
            show(&r.refined_eigenfunction_rate),
            show(&r.leading_eigenfunction_rate),
            r.amplitude_ratio_at_max_n
        ));
    }
    // one spec must exercise the fits with real (non-floor) residuals
    let delayed = &ctx
        .reports
        .iter()
        .find(|(n, _, _)| *n == "delayed")
        .unwrap()
        .1;
    ok &= !delayed.refined_eigenfunction_rate.floor_limited
        && !delayed.leading_eigenfunction_rate.floor_limited;
    verdict(ok, parts.join("; "))
}

fn criterion_8(_: &mut Ctx) -> Verdict {
    let (cfg, spec) = load("constant_q");
    let q1 = q_norms(&spec, 4096).unwrap().q1;
    let mut violations = 0;
    let mut detail = Vec::new();
    for lambda in [4.0 * q1 * q1, 25.0, 100.0] {
        let b = apriori_bounds(&spec, lambda, 4096).unwrap();
        let r = shoot(&spec, lambda, cfg.solver.steps_per_segment).unwrap();
        let s53 = lambda.sqrt().powf(5.0 / 3.0);
        let (mut m1, mut m2, mut md) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..512 {
            let t = k as f64 / 511.0;
            let xl = t * FRAC_PI_2;
            let xr = FRAC_PI_2 + t * FRAC_PI_2;
            m1 = m1.max(r.left.eval(xl).abs());
            m2 = m2.max(r.right.eval(xr).abs());
            md = md.max(r.left.eval_deriv(xl).abs() / s53);
        }
        for (v, bound, applies) in [
            (m1, 2.0, b.applicable_w1),
            (m2, b.w2, b.applicable_w2),
            (md, b.dw1_scaled, b.applicable_w1),
        ] {
            if !applies || v > bound {
                violations += 1;
            }
        }
        detail.push(format!(
            "λ={lambda:.3}: |w1| {m1:.3}≤{:.3}, |w2| {m2:.3}≤{:.3}, |w1'|/s^(5/3) {md:.3}≤{:.3}",
            b.w1, b.w2, b.dw1_scaled
        ));
    }
    verdict(
        violations == 0,
        format!("{violations} violations; {}", detail.join("; ")),
    )
}

fn criterion_9(ctx: &mut Ctx) -> Verdict {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut groups: Vec<(&str, &Vec<Eigenpair>)> = vec![("null", &ctx.null_pairs)];
    groups.extend(ctx.localized.iter().map(|(n, p)| (*n, p)));
    for (name, pairs) in groups {
        let (cfg, spec) = load(name);
        let solver =
            SpectralSolver::new(&spec, cfg.solver.steps_per_segment, cfg.solver.refine_tol)
                .unwrap();
        for p in pairs {
            let cert = solver
                .simplicity_certificate(p, default_certificate_step(p.lambda))
                .unwrap();
            checked += 1;
            if !cert.ok() {
                failures.push(format!("{name} n={}", p.index));
            }
        }
    }
    verdict(
        failures.is_empty() && checked == 20 + 46 * 2,
        format!(
            "{checked} eigenvalues certified, {} failures {failures:?}",
            failures.len()
        ),
    )
}

fn criterion_10(_: &mut Ctx) -> Verdict {
    let (_, spec) = load("delayed");
    let d = oscillatory_decay(&spec, FRAC_PI_2, &RateSettings::default()).unwrap();
    let f = &d.cos_fit;
    verdict(
        f.passed && !f.floor_limited,
        format!(
            "slope {:.3}; |I(s)| at s = {:?}: [{}]",
            f.slope.unwrap_or(f64::NAN),
            d.s,
            d.cos_integrals
                .iter()
                .map(|v| format!("{:.3e}", v.abs()))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_11(_: &mut Ctx) -> Verdict {
    let bin = env!("CARGO_BIN_EXE_retspec");
    let mut runs = 0;
    for name in ["null", "constant_q", "delayed"] {
        let cfg = configs().join(format!("{name}.json"));
        for cmd in ["solve", "charfn"] {
            let once = || {
                Command::new(bin)
                    .args([cmd, "--config", cfg.to_str().unwrap(), "--format", "csv"])
                    .output()
                    .expect("binary runs")
            };
            let (a, b) = (once(), once());
            runs += 1;
            if !a.status.success() || a.stdout.is_empty() || a.stdout != b.stdout {
                return verdict(false, format!("{cmd} on {name} differs or failed"));
            }
        }
    }
    verdict(
        true,
        format!("{runs} command/config pairs byte-identical on rerun"),
    )
}

type Criterion = (&'static str, fn(&mut Ctx) -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("null-spec exactness", criterion_1),
        ("oracle equivalence", criterion_2),
        ("integrator order", criterion_3),
        ("localization", criterion_4),
        ("shift boundedness", criterion_5),
        ("eigenvalue rate", criterion_6),
        ("eigenfunction asymptotics", criterion_7),
        ("a-priori bounds", criterion_8),
        ("simplicity", criterion_9),
        ("oscillatory decay", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut ctx = Ctx::default();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check(&mut ctx);
        if !v.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<26} {}  {}",
            i + 1,
            name,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
