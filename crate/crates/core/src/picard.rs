//! Independent construction of `w₁`, `w₂` by fixed-point iteration on the
//! Volterra integral equations equivalent to the shooting problem:
//!
//! ```text
//! w₁(x) = sin α·cos sx − (cos α/s)·sin sx − (1/s)∫₀ˣ q(τ) sin s(x−τ) w₁(τ−Δ(τ)) dτ
//! w₂(x) = w₁(π/2)/(s^{2/3}δ)·cos s(x−π/2) + w₁′(π/2)/(s^{5/3}δ)·sin s(x−π/2)
//!         − (1/s)∫_{π/2}^x q(τ) sin s(x−τ) w₂(τ−Δ(τ)) dτ
//! ```
//!
//! with the derivative channels from the differentiated equations. Used only
//! as a cross-check for [`crate::dde`]; it needs `s = √λ` above the L¹ norm of
//! `q` on the relevant side so that the iteration contracts.

use thiserror::Error;

use crate::expr::EvalError;
use crate::problem::{q_norms, ProblemSpec, Side, INTERFACE};
use crate::quadrature::cumulative_simpson;
use crate::segment::{hermite_value, SolutionSegment};

pub const DEFAULT_GRID: usize = 4097;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PicardError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("s = {s} does not exceed the L1 norm {norm} of q on this side; the iteration need not contract")]
    NoContraction { s: f64, norm: f64 },
    #[error("no convergence after {iterations} iterations (last update {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("spectral parameter must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("transmission coupling must be non-zero")]
    ZeroCoupling,
    #[error("retarded argument {delayed} at x = {x} leaves the subinterval")]
    DelayOutOfRange { x: f64, delayed: f64 },
    #[error("the w1 segment was computed at lambda = {found}, expected {expected}")]
    LambdaMismatch { expected: f64, found: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    pub grid_points: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for PicardSettings {
    fn default() -> Self {
        PicardSettings {
            grid_points: DEFAULT_GRID,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

/// A converged fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub segment: SolutionSegment,
    pub iterations: usize,
    /// Sup-norm change of the value channel in the final iteration.
    pub residual: f64,
}

/// Data for one side: grid, `q` at the nodes and the retarded points.
struct Kernel {
    a: f64,
    h: f64,
    s: f64,
    q: Vec<f64>,
    delayed: Vec<f64>,
}

impl Kernel {
    fn new(
        spec: &ProblemSpec,
        side: Side,
        s: f64,
        grid_points: usize,
    ) -> Result<Self, PicardError> {
        let n = grid_points.max(3);
        let (a, b) = side.interval();
        let h = (b - a) / (n - 1) as f64;
        let mut q = Vec::with_capacity(n);
        let mut delayed = Vec::with_capacity(n);
        for j in 0..n {
            let x = if j == n - 1 { b } else { a + j as f64 * h };
            q.push(spec.q(side, x)?);
            let d = x - spec.retard(side, x)?;
            if !(d >= a - 1e-10 && d <= x + 1e-10) {
                return Err(PicardError::DelayOutOfRange { x, delayed: d });
            }
            delayed.push(d.clamp(a, x));
        }
        Ok(Kernel {
            a,
            h,
            s,
            q,
            delayed,
        })
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    /// Iterate `w = base − (1/s)∫ sin s(x−τ) q w(τ−Δ)`, `w′ = base′ − ∫ cos s(x−τ) q w(τ−Δ)`
    /// in the local coordinate `u = x − a`.
    fn solve(
        &self,
        base: &[f64],
        base_d: &[f64],
        settings: &PicardSettings,
    ) -> Result<(Vec<f64>, Vec<f64>, usize, f64), PicardError> {
        let n = self.len();
        let s = self.s;
        let (sin_su, cos_su): (Vec<f64>, Vec<f64>) =
            (0..n).map(|j| (s * j as f64 * self.h).sin_cos()).unzip();

        let mut w = base.to_vec();
        let mut wd = base_d.to_vec();
        let mut g_cos = vec![0.0; n];
        let mut g_sin = vec![0.0; n];
        let (mut cum_c, mut cum_s) = (Vec::new(), Vec::new());
        let mut residual = f64::INFINITY;

        for iter in 1..=settings.max_iters {
            for j in 0..n {
                let g = self.q[j] * self.lookup(&w, &wd, self.delayed[j]);
                g_cos[j] = cos_su[j] * g;
                g_sin[j] = sin_su[j] * g;
            }
            cumulative_simpson(&g_cos, self.h, &mut cum_c);
            cumulative_simpson(&g_sin, self.h, &mut cum_s);

            residual = 0.0;
            for j in 0..n {
                // ∫ sin s(u−v) g = sin su·C − cos su·S,  ∫ cos s(u−v) g = cos su·C + sin su·S
                let int_sin = sin_su[j] * cum_c[j] - cos_su[j] * cum_s[j];
                let int_cos = cos_su[j] * cum_c[j] + sin_su[j] * cum_s[j];
                let next = base[j] - int_sin / s;
                residual = residual.max((next - w[j]).abs());
                w[j] = next;
                wd[j] = base_d[j] - int_cos;
            }
            if residual < settings.tol {
                return Ok((w, wd, iter, residual));
            }
        }
        Err(PicardError::NotConverged {
            iterations: settings.max_iters,
            residual,
        })
    }

    /// Cubic Hermite lookup in the current iterate.
    fn lookup(&self, w: &[f64], wd: &[f64], x: f64) -> f64 {
        let last = self.len() - 2;
        let u = (x - self.a) / self.h;
        let j = (u.floor().max(0.0) as usize).min(last);
        let t = u - j as f64;
        if t == 0.0 {
            return w[j];
        }
        hermite_value(w[j], wd[j], w[j + 1], wd[j + 1], self.h, t)
    }
}

fn sqrt_lambda(lambda: f64) -> Result<f64, PicardError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(PicardError::NonPositiveLambda(lambda));
    }
    Ok(lambda.sqrt())
}

/// Fixed point of the integral equation for `w₁` on `[0, π/2]`.
pub fn picard_w1(
    spec: &ProblemSpec,
    lambda: f64,
    settings: &PicardSettings,
) -> Result<PicardSolution, PicardError> {
    let s = sqrt_lambda(lambda)?;
    let q1 = q_norms(spec, settings.grid_points)?.q1;
    if s <= q1 {
        return Err(PicardError::NoContraction { s, norm: q1 });
    }
    let kernel = Kernel::new(spec, Side::Left, s, settings.grid_points)?;
    let (sa, ca) = spec.alpha.sin_cos();
    let (base, base_d): (Vec<f64>, Vec<f64>) = (0..kernel.len())
        .map(|j| {
            let (sn, cs) = (s * j as f64 * kernel.h).sin_cos();
            (sa * cs - ca / s * sn, -s * sa * sn - ca * cs)
        })
        .unzip();
    let (w, wd, iterations, residual) = kernel.solve(&base, &base_d, settings)?;
    Ok(PicardSolution {
        segment: SolutionSegment::from_samples(0.0, INTERFACE, w, wd, lambda),
        iterations,
        residual,
    })
}

/// Fixed point of the integral equation for `w₂` on `[π/2, π]`, started from
/// the interface data of `w1`.
pub fn picard_w2(
    spec: &ProblemSpec,
    lambda: f64,
    w1: &SolutionSegment,
    settings: &PicardSettings,
) -> Result<PicardSolution, PicardError> {
    let s = sqrt_lambda(lambda)?;
    if w1.lambda() != lambda {
        return Err(PicardError::LambdaMismatch {
            expected: lambda,
            found: w1.lambda(),
        });
    }
    if spec.coupling == 0.0 {
        return Err(PicardError::ZeroCoupling);
    }
    let q2 = q_norms(spec, settings.grid_points)?.q2;
    if s <= q2 {
        return Err(PicardError::NoContraction { s, norm: q2 });
    }
    let kernel = Kernel::new(spec, Side::Right, s, settings.grid_points)?;
    let s13 = s.cbrt();
    let amp_cos = w1.eval(INTERFACE) / (s13 * s13 * spec.coupling);
    let amp_sin = w1.eval_deriv(INTERFACE) / (s * s13 * s13 * spec.coupling);
    let (base, base_d): (Vec<f64>, Vec<f64>) = (0..kernel.len())
        .map(|j| {
            let (sn, cs) = (s * j as f64 * kernel.h).sin_cos();
            (
                amp_cos * cs + amp_sin * sn,
                s * (amp_sin * cs - amp_cos * sn),
            )
        })
        .unzip();
    let (w, wd, iterations, residual) = kernel.solve(&base, &base_d, settings)?;
    Ok(PicardSolution {
        segment: SolutionSegment::from_samples(INTERFACE, std::f64::consts::PI, w, wd, lambda),
        iterations,
        residual,
    })
}

/// Both halves from the integral equations.
pub fn picard_pair(
    spec: &ProblemSpec,
    lambda: f64,
    settings: &PicardSettings,
) -> Result<(PicardSolution, PicardSolution), PicardError> {
    let w1 = picard_w1(spec, lambda, settings)?;
    let w2 = picard_w2(spec, lambda, &w1.segment, settings)?;
    Ok((w1, w2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::shoot;
    use std::f64::consts::FRAC_PI_2;

    fn spec(q: [&str; 2], d: [&str; 2], alpha: f64, coupling: f64) -> ProblemSpec {
        ProblemSpec::parse(q, d, alpha, FRAC_PI_2, coupling).unwrap()
    }

    #[test]
    fn q_free_converges_in_one_iteration() {
        let alpha = 0.8;
        let s = spec(["0", "0"], ["0", "0"], alpha, 1.0);
        let lambda: f64 = 9.0;
        let k = lambda.sqrt();
        let sol = picard_w1(&s, lambda, &PicardSettings::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        for &x in sol.segment.nodes() {
            let exact = alpha.sin() * (k * x).cos() - alpha.cos() / k * (k * x).sin();
            assert!((sol.segment.eval(x) - exact).abs() < 1e-14);
        }
        let w2 = picard_w2(&s, lambda, &sol.segment, &PicardSettings::default()).unwrap();
        assert_eq!(w2.iterations, 1);
        let (y, dy) = sol.segment.end();
        for &x in w2.segment.nodes() {
            let u = x - FRAC_PI_2;
            let exact =
                y / (k.powf(2.0 / 3.0)) * (k * u).cos() + dy / k.powf(5.0 / 3.0) * (k * u).sin();
            assert!((w2.segment.eval(x) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn agrees_with_shooting_constant_q() {
        let s = spec(["1", "1"], ["0", "0"], FRAC_PI_2, 1.0);
        let (w1, w2) = picard_pair(&s, 25.0, &PicardSettings::default()).unwrap();
        let r = shoot(&s, 25.0, 4096).unwrap();
        let (dv, dd) = w1.segment.sup_distance(&r.left);
        assert!(dv < 1e-6 && dd < 1e-6, "{dv} {dd}");
        let (dv, dd) = w2.segment.sup_distance(&r.right);
        assert!(dv < 1e-6 && dd < 1e-6, "{dv} {dd}");
    }

    #[test]
    fn iteration_count_respects_contraction_bound() {
        let s = spec(["1", "1"], ["0", "0"], FRAC_PI_2, 1.0);
        let settings = PicardSettings {
            tol: 1e-12,
            ..Default::default()
        };
        let sol = picard_w1(&s, 25.0, &settings).unwrap();
        let bound = (1e-12f64.ln() / (FRAC_PI_2 / 5.0).ln()).ceil() as usize + 2;
        assert!(sol.iterations <= bound, "{} > {bound}", sol.iterations);
    }

    #[test]
    fn coupling_scales_right_half() {
        let one = spec(["1", "0"], ["0", "0"], FRAC_PI_2, 1.0);
        let two = spec(["1", "0"], ["0", "0"], FRAC_PI_2, 2.0);
        let w1 = picard_w1(&one, 16.0, &PicardSettings::default())
            .unwrap()
            .segment;
        let a = picard_w2(&one, 16.0, &w1, &PicardSettings::default())
            .unwrap()
            .segment;
        let b = picard_w2(&two, 16.0, &w1, &PicardSettings::default())
            .unwrap()
            .segment;
        for (va, vb) in a.values().iter().zip(b.values()) {
            assert!((0.5 * va - vb).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_check_after_convergence() {
        let s = spec(
            ["sin(x)", "cos(x)"],
            ["0.5*x*(pi/2 - x)", "(x - pi/2)*(pi - x)*0.25"],
            1.0,
            1.0,
        );
        let settings = PicardSettings::default();
        let sol = picard_w1(&s, 40.0, &settings).unwrap();
        assert!(sol.residual < settings.tol);
        // one more sweep from the converged iterate moves nothing
        let again = picard_w1(
            &s,
            40.0,
            &PicardSettings {
                tol: 1e-14,
                ..settings
            },
        )
        .unwrap();
        let (dv, _) = sol.segment.sup_distance(&again.segment);
        assert!(dv < settings.tol * 10.0);
    }

    #[test]
    fn refuses_small_s() {
        let s = spec(["1", "1"], ["0", "0"], FRAC_PI_2, 1.0);
        assert!(matches!(
            picard_w1(&s, 1.0, &PicardSettings::default()),
            Err(PicardError::NoContraction { .. })
        ));
        let few = PicardSettings {
            max_iters: 2,
            ..Default::default()
        };
        assert!(matches!(
            picard_w1(&s, 4.0, &few),
            Err(PicardError::NotConverged { iterations: 2, .. })
        ));
        let w1 = picard_w1(&s, 25.0, &PicardSettings::default())
            .unwrap()
            .segment;
        assert!(matches!(
            picard_w2(&s, 36.0, &w1, &PicardSettings::default()),
            Err(PicardError::LambdaMismatch { .. })
        ));
    }
}
