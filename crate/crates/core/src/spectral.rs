//! The characteristic function `F(λ) = w(π,λ)·cos β + w′(π,λ)·sin β` and the
//! search for its positive roots, which are exactly the eigenvalues.
//!
//! All searching is done in `s = √λ`, where roots are asymptotically one per
//! unit interval around each integer.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dde::{Shooter, SolverError, DEFAULT_STEPS};
use crate::picard::{picard_pair, PicardError, PicardSettings};
use crate::problem::ProblemSpec;
use crate::segment::SolutionSegment;

pub const DEFAULT_REFINE_TOL: f64 = 1e-10;
/// Subgrid used to count sign changes in a localization window.
pub const WINDOW_SAMPLES: usize = 64;
pub const WINDOW_HALF_WIDTH: f64 = 0.5;
pub const SAMPLES_PER_UNIT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shooting,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicSample {
    pub lambda: f64,
    pub value: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    /// 1-based ordinal in a scan, or the integer `n` of a localized root.
    pub index: usize,
    pub s: f64,
    pub lambda: f64,
    pub left: SolutionSegment,
    pub right: SolutionSegment,
    pub f_residual: f64,
}

impl Eigenpair {
    /// The eigenfunction at `x`; the interface point maps to the left piece.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= crate::problem::INTERFACE {
            self.left.eval(x)
        } else {
            self.right.eval(x)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("window around n = {n} holds {sign_changes} sign changes of F, expected exactly one")]
    ZeroOrMany { n: usize, sign_changes: usize },
    #[error("localization near n² needs sin α ≠ 0 and sin β ≠ 0")]
    Case1Required,
    #[error("invalid search range [{s_min}, {s_max}] with {samples} samples")]
    InvalidRange {
        s_min: f64,
        s_max: f64,
        samples: usize,
    },
    #[error("localization index must be at least 1")]
    ZeroIndex,
}

/// `F` at `λ` from a fresh shoot.
pub fn char_fn(
    spec: &ProblemSpec,
    lambda: f64,
    steps: usize,
) -> Result<CharacteristicSample, SolverError> {
    let r = Shooter::new(spec, steps)?.shoot(lambda)?;
    Ok(CharacteristicSample {
        lambda,
        value: r.boundary_residual(spec.beta),
        method: Method::Shooting,
    })
}

/// `F` at `λ` assembled from the integral-equation oracle.
pub fn char_fn_picard(
    spec: &ProblemSpec,
    lambda: f64,
    settings: &PicardSettings,
) -> Result<CharacteristicSample, PicardError> {
    let (_, w2) = picard_pair(spec, lambda, settings)?;
    let (y, dy) = w2.segment.end();
    Ok(CharacteristicSample {
        lambda,
        value: y * spec.beta.cos() + dy * spec.beta.sin(),
        method: Method::Picard,
    })
}

/// Result of the transversality test for a computed eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimplicityCertificate {
    /// Central-difference estimate of `dF/dλ` at the eigenvalue.
    pub derivative: f64,
    /// `10·|F_residual|/h`.
    pub threshold: f64,
    pub h: f64,
    /// False when `h` is too large (or too close to λ) for the estimate to mean much.
    pub reliable: bool,
    pub passed: bool,
}

impl SimplicityCertificate {
    pub fn ok(&self) -> bool {
        self.reliable && self.passed
    }
}

/// Root finding on `F(s²)` for one problem at a fixed resolution.
#[derive(Debug, Clone)]
pub struct SpectralSolver {
    spec: ProblemSpec,
    shooter: Shooter,
    refine_tol: f64,
}

impl SpectralSolver {
    pub fn new(spec: &ProblemSpec, steps: usize, refine_tol: f64) -> Result<Self, SolverError> {
        Ok(SpectralSolver {
            spec: spec.clone(),
            shooter: Shooter::new(spec, steps)?,
            refine_tol,
        })
    }

    pub fn with_defaults(spec: &ProblemSpec) -> Result<Self, SolverError> {
        Self::new(spec, DEFAULT_STEPS, DEFAULT_REFINE_TOL)
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn refine_tol(&self) -> f64 {
        self.refine_tol
    }

    pub fn steps(&self) -> usize {
        self.shooter.steps()
    }

    pub fn f_lambda(&self, lambda: f64) -> Result<f64, SolverError> {
        Ok(self
            .shooter
            .shoot(lambda)?
            .boundary_residual(self.spec.beta))
    }

    pub fn f_s(&self, s: f64) -> Result<f64, SolverError> {
        self.f_lambda(s * s)
    }

    pub fn sample(&self, lambda: f64) -> Result<CharacteristicSample, SolverError> {
        Ok(CharacteristicSample {
            lambda,
            value: self.f_lambda(lambda)?,
            method: Method::Shooting,
        })
    }

    /// `F(s²)` on a uniform grid of `samples` points spanning `[s_min, s_max]`.
    pub fn sample_grid(
        &self,
        s_min: f64,
        s_max: f64,
        samples: usize,
    ) -> Result<Vec<(f64, f64)>, SolverError> {
        uniform_grid(s_min, s_max, samples)
            .into_par_iter()
            .map(|s| Ok((s, self.f_s(s)?)))
            .collect()
    }

    /// Bisection on a sign-changing bracket until it is narrower than the tolerance.
    fn bisect(&self, mut lo: (f64, f64), mut hi: (f64, f64)) -> Result<f64, SolverError> {
        if lo.1 == 0.0 {
            return Ok(lo.0);
        }
        if hi.1 == 0.0 {
            return Ok(hi.0);
        }
        while hi.0 - lo.0 > self.refine_tol {
            let mid = 0.5 * (lo.0 + hi.0);
            if mid <= lo.0 || mid >= hi.0 {
                break;
            }
            let f = self.f_s(mid)?;
            if f == 0.0 {
                return Ok(mid);
            }
            if (f < 0.0) == (lo.1 < 0.0) {
                lo = (mid, f);
            } else {
                hi = (mid, f);
            }
        }
        Ok(0.5 * (lo.0 + hi.0))
    }

    fn eigenpair(&self, index: usize, s: f64) -> Result<Eigenpair, SolverError> {
        let lambda = s * s;
        let r = self.shooter.shoot(lambda)?;
        let f_residual = r.boundary_residual(self.spec.beta);
        Ok(Eigenpair {
            index,
            s,
            lambda,
            left: r.left,
            right: r.right,
            f_residual,
        })
    }

    /// All sign changes of `F(s²)` on a uniform grid, each refined by bisection.
    pub fn scan_roots(
        &self,
        s_min: f64,
        s_max: f64,
        samples: usize,
    ) -> Result<Vec<Eigenpair>, SpectralError> {
        if !(s_min > 0.0 && s_max > s_min && samples >= 2) {
            return Err(SpectralError::InvalidRange {
                s_min,
                s_max,
                samples,
            });
        }
        let grid = self.sample_grid(s_min, s_max, samples)?;
        let brackets = sign_change_brackets(&grid);
        let roots = brackets
            .into_par_iter()
            .map(|(lo, hi)| self.bisect(lo, hi))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(roots
            .into_par_iter()
            .enumerate()
            .map(|(i, s)| self.eigenpair(i + 1, s))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// The unique root with `s ∈ [n − ½, n + ½]`, or [`SpectralError::ZeroOrMany`].
    pub fn localize_near_n(&self, n: usize) -> Result<Eigenpair, SpectralError> {
        if n == 0 {
            return Err(SpectralError::ZeroIndex);
        }
        if !self.spec.is_case1() {
            return Err(SpectralError::Case1Required);
        }
        let c = n as f64;
        let grid: Vec<(f64, f64)> =
            uniform_grid(c - WINDOW_HALF_WIDTH, c + WINDOW_HALF_WIDTH, WINDOW_SAMPLES)
                .into_iter()
                .map(|s| Ok((s, self.f_s(s)?)))
                .collect::<Result<_, SolverError>>()?;
        let brackets = sign_change_brackets(&grid);
        if brackets.len() != 1 {
            return Err(SpectralError::ZeroOrMany {
                n,
                sign_changes: brackets.len(),
            });
        }
        let (lo, hi) = brackets[0];
        let s = self.bisect(lo, hi)?;
        Ok(self.eigenpair(n, s)?)
    }

    /// Localize every index in the range concurrently; results come back ordered by `n`.
    pub fn localize_range(
        &self,
        ns: impl IntoIterator<Item = usize>,
    ) -> Vec<(usize, Result<Eigenpair, SpectralError>)> {
        let ns: Vec<usize> = ns.into_iter().collect();
        ns.into_par_iter()
            .map(|n| (n, self.localize_near_n(n)))
            .collect()
    }

    /// Central-difference slope of `F` at the eigenvalue, compared with the
    /// residual left by the refinement.
    pub fn simplicity_certificate(
        &self,
        pair: &Eigenpair,
        h: f64,
    ) -> Result<SimplicityCertificate, SolverError> {
        let lambda = pair.lambda;
        let reliable = h > 0.0 && h <= 1.0 && h < lambda;
        let derivative = if h > 0.0 && h < lambda {
            (self.f_lambda(lambda + h)? - self.f_lambda(lambda - h)?) / (2.0 * h)
        } else {
            f64::NAN
        };
        let threshold = 10.0 * pair.f_residual.abs() / h;
        Ok(SimplicityCertificate {
            derivative,
            threshold,
            h,
            reliable,
            passed: derivative.abs() > threshold,
        })
    }
}

/// Default finite-difference step for the simplicity certificate.
pub fn default_certificate_step(lambda: f64) -> f64 {
    1e-5 * lambda.max(1.0)
}

/// `samples` equispaced points from `a` to `b` inclusive (the last one is exactly `b`).
pub fn uniform_grid(a: f64, b: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (samples - 1) as f64;
            (0..samples)
                .map(|i| {
                    if i == samples - 1 {
                        b
                    } else {
                        a + i as f64 * h
                    }
                })
                .collect()
        }
    }
}

type Bracket = ((f64, f64), (f64, f64));

/// Consecutive sample pairs enclosing a sign change. A sample that is exactly
/// zero is a root on its own and is reported once, as a degenerate bracket.
pub fn sign_change_brackets(samples: &[(f64, f64)]) -> Vec<Bracket> {
    let mut out = Vec::new();
    for (i, w) in samples.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if a.1 == 0.0 {
            // count an exact zero at an interior sample only once
            if i == 0 {
                out.push((a, a));
            }
            continue;
        }
        if b.1 == 0.0 {
            out.push((b, b));
            continue;
        }
        if (a.1 < 0.0) != (b.1 < 0.0) {
            out.push((a, b));
        }
    }
    out
}

/// Scan with a fresh solver at default resolution.
pub fn scan_roots(
    spec: &ProblemSpec,
    s_min: f64,
    s_max: f64,
    samples: usize,
    refine_tol: f64,
) -> Result<Vec<Eigenpair>, SpectralError> {
    SpectralSolver::new(spec, DEFAULT_STEPS, refine_tol)?.scan_roots(s_min, s_max, samples)
}

/// Localize with a fresh solver at default resolution.
pub fn localize_near_n(
    spec: &ProblemSpec,
    n: usize,
    refine_tol: f64,
) -> Result<Eigenpair, SpectralError> {
    SpectralSolver::new(spec, DEFAULT_STEPS, refine_tol)?.localize_near_n(n)
}

pub fn simplicity_certificate(
    spec: &ProblemSpec,
    pair: &Eigenpair,
    h: f64,
) -> Result<SimplicityCertificate, SolverError> {
    SpectralSolver::with_defaults(spec)?.simplicity_certificate(pair, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn null(beta: f64) -> ProblemSpec {
        ProblemSpec::parse(["0", "0"], ["0", "0"], FRAC_PI_2, beta, 1.0).unwrap()
    }

    /// F(s²) for q ≡ 0, α = π/2, δ = 1.
    fn closed_form(s: f64, beta: f64) -> f64 {
        s.powf(-2.0 / 3.0) * (s * PI).cos() * beta.cos() - s.cbrt() * (s * PI).sin() * beta.sin()
    }

    fn closed_form_root(lo: f64, hi: f64, beta: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        let fa = closed_form(a, beta);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (closed_form(m, beta) < 0.0) == (fa < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn null_spec_vanishes_at_integers() {
        let spec = null(FRAC_PI_2);
        for n in 1..=6 {
            let f = char_fn(&spec, (n * n) as f64, DEFAULT_STEPS).unwrap();
            assert!(f.value.abs() < 1e-8, "n={n}: {}", f.value);
        }
        let f = char_fn(&spec, 2.25, DEFAULT_STEPS).unwrap();
        assert!((f.value - 1.5f64.cbrt()).abs() < 1e-9);
        assert!((f.value - 1.1447).abs() < 1e-4);
    }

    #[test]
    fn oblique_right_boundary_root() {
        let spec = null(FRAC_PI_4);
        let exact = closed_form_root(1.0, 1.45, FRAC_PI_4);
        // tan(δπ) = 1/s at s = 1 + δ
        assert!(((exact - 1.0) * PI).tan() * exact - 1.0 < 1e-12);
        let roots = scan_roots(&spec, 1.0, 1.45, 46, DEFAULT_REFINE_TOL).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(
            (roots[0].s - exact).abs() < 1e-7,
            "{} vs {exact}",
            roots[0].s
        );
        for s in [0.7, 1.3, 2.6] {
            let f = char_fn(&spec, s * s, DEFAULT_STEPS).unwrap().value;
            assert!((f - closed_form(s, FRAC_PI_4)).abs() < 1e-8);
        }
    }

    #[test]
    fn scan_finds_integers() {
        let roots = scan_roots(&null(FRAC_PI_2), 0.5, 5.5, 500, DEFAULT_REFINE_TOL).unwrap();
        let s: Vec<f64> = roots.iter().map(|r| r.s).collect();
        assert_eq!(s.len(), 5, "{s:?}");
        for (i, r) in roots.iter().enumerate() {
            assert_eq!(r.index, i + 1);
            assert!((r.s - (i + 1) as f64).abs() < 1e-8);
            assert_eq!(r.lambda, r.s * r.s);
        }
    }

    #[test]
    fn scan_below_first_root_is_empty() {
        assert!(scan_roots(&null(FRAC_PI_2), 0.2, 0.9, 50, 1e-10)
            .unwrap()
            .is_empty());
        assert!(matches!(
            scan_roots(&null(FRAC_PI_2), 2.0, 1.0, 50, 1e-10),
            Err(SpectralError::InvalidRange { .. })
        ));
    }

    #[test]
    fn constant_q_roots_have_small_residuals() {
        let spec = ProblemSpec::parse(["1", "1"], ["0", "0"], FRAC_PI_2, FRAC_PI_2, 1.0).unwrap();
        let roots = scan_roots(&spec, 0.5, 6.5, 600, DEFAULT_REFINE_TOL).unwrap();
        assert!(!roots.is_empty());
        for r in &roots {
            assert!(r.f_residual.abs() < 1e-8);
            // eigenvalues are n² − 1 here
            let n = (r.lambda + 1.0).sqrt();
            assert!((n - n.round()).abs() < 1e-8, "{}", r.lambda);
        }
    }

    #[test]
    fn localization_examples() {
        let solver = SpectralSolver::with_defaults(&null(FRAC_PI_2)).unwrap();
        let p = solver.localize_near_n(10).unwrap();
        assert_eq!(p.index, 10);
        assert!((p.s - 10.0).abs() < 1e-9);

        let solver = SpectralSolver::with_defaults(&null(FRAC_PI_4)).unwrap();
        let p = solver.localize_near_n(20).unwrap();
        let predicted = 20.0 + 1.0 / (20.0 * PI);
        assert!((predicted - 20.015915).abs() < 1e-6);
        assert!((p.s - predicted).abs() < 5e-5);
        assert!((p.s - closed_form_root(19.6, 20.4, FRAC_PI_4)).abs() < 1e-8);
    }

    #[test]
    fn localization_requires_case1() {
        let spec = ProblemSpec::parse(["0", "0"], ["0", "0"], 0.0, FRAC_PI_2, 1.0).unwrap();
        let solver = SpectralSolver::with_defaults(&spec).unwrap();
        assert_eq!(
            solver.localize_near_n(3).unwrap_err(),
            SpectralError::Case1Required
        );
        assert_eq!(
            SpectralSolver::with_defaults(&null(1.0))
                .unwrap()
                .localize_near_n(0)
                .unwrap_err(),
            SpectralError::ZeroIndex
        );
    }

    #[test]
    fn non_asymptotic_window_reports_zero_or_many() {
        // strong negative potential pushes low eigenvalues away from n²
        let spec =
            ProblemSpec::parse(["-30", "-30"], ["0", "0"], FRAC_PI_2, FRAC_PI_2, 1.0).unwrap();
        let solver = SpectralSolver::with_defaults(&spec).unwrap();
        match solver.localize_near_n(1) {
            Err(SpectralError::ZeroOrMany { n: 1, .. }) => {}
            Ok(p) => assert!((p.s - 1.0).abs() < 0.5),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn certificate_slope_matches_closed_form() {
        let solver = SpectralSolver::with_defaults(&null(FRAC_PI_2)).unwrap();
        let p = solver.localize_near_n(5).unwrap();
        let c = solver
            .simplicity_certificate(&p, default_certificate_step(p.lambda))
            .unwrap();
        let expected = 5f64.cbrt() * PI / 10.0;
        assert!((expected - 0.5372).abs() < 1e-4);
        assert!((c.derivative - expected).abs() < 1e-6, "{}", c.derivative);
        assert!(c.ok());

        let c = solver.simplicity_certificate(&p, 2.0).unwrap();
        assert!(!c.reliable && !c.ok());
    }

    #[test]
    fn exact_zero_samples_are_counted_once() {
        let b = sign_change_brackets(&[(0.0, 1.0), (1.0, 0.0), (2.0, -1.0), (3.0, 1.0)]);
        assert_eq!(b.len(), 2);
        assert_eq!(b[0], ((1.0, 0.0), (1.0, 0.0)));
    }

    #[test]
    fn picard_route_matches_shooting() {
        let spec = ProblemSpec::parse(
            ["sin(x)", "cos(x)"],
            ["0.5*x*(pi/2 - x)", "(x - pi/2)*(pi - x)*0.25"],
            1.1,
            0.6,
            1.0,
        )
        .unwrap();
        for s in [3.0f64, 7.5] {
            let a = char_fn(&spec, s * s, DEFAULT_STEPS).unwrap().value;
            let b = char_fn_picard(&spec, s * s, &PicardSettings::default())
                .unwrap()
                .value;
            assert!((a - b).abs() < 1e-6, "s={s}: {a} vs {b}");
        }
    }
}
