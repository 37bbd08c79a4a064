//! Fixed-step integration of `y″(x) + q(x)·y(x − Δ(x)) + λ·y(x) = 0` on each
//! subinterval, and the shooting construction that chains the two halves
//! through the transmission conditions.
//!
//! The scheme is classical RK4 on `(y, y′)` with a cubic Hermite continuous
//! extension per step. The retarded value `y(x − Δ(x))` at a stage abscissa is
//! read from the dense output of completed steps. When the retarded point falls
//! inside the step being computed it is taken from the previous step's cubic,
//! extrapolated forward; on the very first step a second-order Taylor
//! polynomial at the initial point plays that role. A retarded point that
//! coincides with the stage abscissa (Δ = 0 there) uses the stage value itself,
//! which reduces the scheme to plain RK4 when the delay vanishes.

use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;
use crate::problem::{ProblemSpec, Side, INTERFACE, RIGHT_END};
use crate::segment::{hermite_value, SolutionSegment};

pub const DEFAULT_STEPS: usize = 4096;

// how far a retarded argument may stray outside [a, x] before it is an error
const DELAY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("spectral parameter must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("transmission coupling must be non-zero")]
    ZeroCoupling,
    #[error("at least one step is required")]
    NoSteps,
    #[error("solution became non-finite at x = {x} (lambda = {lambda})")]
    NonFinite { x: f64, lambda: f64 },
    #[error("retarded argument {delayed} at x = {x} lies outside [{a}, {x}]")]
    DelayOutOfRange { x: f64, delayed: f64, a: f64 },
}

/// `q` and the retarded argument `x − Δ(x)` tabulated at every half step of a
/// subinterval; these are all the abscissae RK4 visits.
#[derive(Debug, Clone)]
pub struct SideTable {
    side: Side,
    a: f64,
    h: f64,
    steps: usize,
    q: Vec<f64>,
    delayed: Vec<f64>,
}

impl SideTable {
    pub fn new(spec: &ProblemSpec, side: Side, steps: usize) -> Result<Self, SolverError> {
        if steps == 0 {
            return Err(SolverError::NoSteps);
        }
        let (a, b) = side.interval();
        let h = (b - a) / steps as f64;
        let half = 0.5 * h;
        let mut q = Vec::with_capacity(2 * steps + 1);
        let mut delayed = Vec::with_capacity(2 * steps + 1);
        for k in 0..=2 * steps {
            let x = if k == 2 * steps {
                b
            } else {
                a + k as f64 * half
            };
            q.push(spec.q(side, x)?);
            let d = x - spec.retard(side, x)?;
            if d > x + DELAY_SLACK || !d.is_finite() {
                return Err(SolverError::DelayOutOfRange { x, delayed: d, a });
            }
            // points before `a` are kept as-is: only a history segment can serve them
            delayed.push(if d < a - DELAY_SLACK {
                d
            } else {
                d.clamp(a, x)
            });
        }
        Ok(SideTable {
            side,
            a,
            h,
            steps,
            q,
            delayed,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn x_at(&self, k: usize) -> f64 {
        if k == 2 * self.steps {
            self.side.interval().1
        } else {
            self.a + k as f64 * 0.5 * self.h
        }
    }

    /// Integrate from the left end of the subinterval with the given initial data.
    pub fn integrate(
        &self,
        lambda: f64,
        y0: f64,
        dy0: f64,
        history: Option<&SolutionSegment>,
    ) -> Result<SolutionSegment, SolverError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(SolverError::NonPositiveLambda(lambda));
        }
        if history.is_none() {
            if let Some(k) = self.delayed.iter().position(|&d| d < self.a) {
                return Err(SolverError::DelayOutOfRange {
                    x: self.x_at(k),
                    delayed: self.delayed[k],
                    a: self.a,
                });
            }
        }
        let n = self.steps;
        let h = self.h;
        let mut ys = Vec::with_capacity(n + 1);
        let mut vs = Vec::with_capacity(n + 1);
        ys.push(y0);
        vs.push(dy0);

        // Taylor data at the start for lookups inside the first step; the
        // retarded point at `a` is `a` itself.
        let acc0 = -self.q[0] * y0 - lambda * y0;

        for i in 0..n {
            let (y, v) = (ys[i], vs[i]);
            let xi = self.a + i as f64 * h;

            let lookup = |k: usize, stage_y: f64| -> Result<f64, SolverError> {
                let p = self.delayed[k];
                let x = self.x_at(k);
                if p == x {
                    return Ok(stage_y);
                }
                if p < self.a {
                    return match history {
                        Some(hist) => Ok(hist.eval(p)),
                        None => Err(SolverError::DelayOutOfRange {
                            x,
                            delayed: p,
                            a: self.a,
                        }),
                    };
                }
                if p <= xi {
                    if i == 0 {
                        return Ok(y0);
                    }
                    let j = (((p - self.a) / h).floor() as usize).min(i.saturating_sub(1));
                    let t = (p - (self.a + j as f64 * h)) / h;
                    return Ok(hermite_value(ys[j], vs[j], ys[j + 1], vs[j + 1], h, t));
                }
                // retarded point inside the current step
                if i == 0 {
                    let s = p - self.a;
                    Ok(y0 + dy0 * s + 0.5 * acc0 * s * s)
                } else {
                    let t = (p - (xi - h)) / h;
                    Ok(hermite_value(ys[i - 1], vs[i - 1], y, v, h, t))
                }
            };
            let accel = |k: usize, stage_y: f64| -> Result<f64, SolverError> {
                Ok(-self.q[k] * lookup(k, stage_y)? - lambda * stage_y)
            };

            let k0 = 2 * i;
            let k1y = v;
            let k1v = accel(k0, y)?;
            let y2 = y + 0.5 * h * k1y;
            let k2y = v + 0.5 * h * k1v;
            let k2v = accel(k0 + 1, y2)?;
            let y3 = y + 0.5 * h * k2y;
            let k3y = v + 0.5 * h * k2v;
            let k3v = accel(k0 + 1, y3)?;
            let y4 = y + h * k3y;
            let k4y = v + h * k3v;
            let k4v = accel(k0 + 2, y4)?;

            let y_next = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            let v_next = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if !y_next.is_finite() || !v_next.is_finite() {
                return Err(SolverError::NonFinite { x: xi + h, lambda });
            }
            ys.push(y_next);
            vs.push(v_next);
        }
        let (a, b) = self.side.interval();
        Ok(SolutionSegment::from_samples(a, b, ys, vs, lambda))
    }
}

/// Integrate one subinterval of the equation from its left end.
pub fn integrate_segment(
    spec: &ProblemSpec,
    lambda: f64,
    side: Side,
    y0: f64,
    dy0: f64,
    history: Option<&SolutionSegment>,
    steps: usize,
) -> Result<SolutionSegment, SolverError> {
    SideTable::new(spec, side, steps)?.integrate(lambda, y0, dy0, history)
}

/// `λ^{1/3}` for `λ > 0`.
pub fn cube_root(lambda: f64) -> f64 {
    (lambda.ln() / 3.0).exp()
}

/// The two halves `w₁` on `[0, π/2]` and `w₂` on `[π/2, π]` of the shooting solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    pub left: SolutionSegment,
    pub right: SolutionSegment,
    pub lambda: f64,
}

impl ShootingResult {
    /// Residuals of the two transmission conditions at the interface.
    pub fn transmission_residuals(&self, coupling: f64) -> (f64, f64) {
        let scale = cube_root(self.lambda) * coupling;
        (
            self.left.eval(INTERFACE) - scale * self.right.eval(INTERFACE),
            self.left.eval_deriv(INTERFACE) - scale * self.right.eval_deriv(INTERFACE),
        )
    }

    /// `w(π)·cos β + w′(π)·sin β`.
    pub fn boundary_residual(&self, beta: f64) -> f64 {
        let (y, dy) = self.right.end();
        y * beta.cos() + dy * beta.sin()
    }

    /// The shooting solution at any `x ≠ π/2`; the interface itself maps to the left piece.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= INTERFACE {
            self.left.eval(x)
        } else {
            self.right.eval(x)
        }
    }
}

/// Reusable shooting machinery for a fixed problem and step count.
///
/// Coefficient tables are built once; each [`Shooter::shoot`] is then pure
/// arithmetic and can run concurrently from several threads.
#[derive(Debug, Clone)]
pub struct Shooter {
    alpha: f64,
    coupling: f64,
    left: SideTable,
    right: SideTable,
}

impl Shooter {
    pub fn new(spec: &ProblemSpec, steps_per_segment: usize) -> Result<Self, SolverError> {
        if spec.coupling == 0.0 || !spec.coupling.is_finite() {
            return Err(SolverError::ZeroCoupling);
        }
        Ok(Shooter {
            alpha: spec.alpha,
            coupling: spec.coupling,
            left: SideTable::new(spec, Side::Left, steps_per_segment)?,
            right: SideTable::new(spec, Side::Right, steps_per_segment)?,
        })
    }

    pub fn steps(&self) -> usize {
        self.left.steps()
    }

    pub fn shoot(&self, lambda: f64) -> Result<ShootingResult, SolverError> {
        let left = self
            .left
            .integrate(lambda, self.alpha.sin(), -self.alpha.cos(), None)?;
        let scale = 1.0 / (cube_root(lambda) * self.coupling);
        let (y, dy) = left.end();
        let right = self.right.integrate(lambda, scale * y, scale * dy, None)?;
        debug_assert_eq!(right.interval().1, RIGHT_END);
        Ok(ShootingResult {
            left,
            right,
            lambda,
        })
    }
}

/// Build the shooting solution at `λ` from the boundary data at 0 and the
/// transmission map at π/2.
pub fn shoot(
    spec: &ProblemSpec,
    lambda: f64,
    steps_per_segment: usize,
) -> Result<ShootingResult, SolverError> {
    Shooter::new(spec, steps_per_segment)?.shoot(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn spec(q: [&str; 2], d: [&str; 2], alpha: f64, coupling: f64) -> ProblemSpec {
        ProblemSpec::parse(q, d, alpha, FRAC_PI_2, coupling).unwrap()
    }

    fn null(alpha: f64) -> ProblemSpec {
        spec(["0", "0"], ["0", "0"], alpha, 1.0)
    }

    #[test]
    fn free_oscillation_cos() {
        let seg =
            integrate_segment(&null(FRAC_PI_2), 4.0, Side::Left, 1.0, 0.0, None, 256).unwrap();
        assert!((seg.eval(FRAC_PI_2) + 1.0).abs() < 1e-9);
        for &x in seg.nodes() {
            assert!((seg.eval(x) - (2.0 * x).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn free_oscillation_minus_sin() {
        let seg = integrate_segment(&null(0.0), 1.0, Side::Left, 0.0, -1.0, None, 256).unwrap();
        for &x in seg.nodes() {
            assert!((seg.eval(x) + x.sin()).abs() < 1e-10);
            assert!((seg.eval_deriv(x) + x.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn balanced_coefficient_gives_constant_solution() {
        let s = spec(["-1", "-1"], ["0", "0"], FRAC_PI_2, 1.0);
        for side in [Side::Left, Side::Right] {
            let seg = integrate_segment(&s, 1.0, side, 1.0, 0.0, None, 64).unwrap();
            assert!(seg.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
            assert!(seg.derivs().iter().all(|d| d.abs() < 1e-14));
        }
    }

    #[test]
    fn shooting_null_problem_closed_form() {
        let r = shoot(&null(FRAC_PI_2), 4.0, 1024).unwrap();
        let scale = 4f64.powf(-1.0 / 3.0);
        assert!((r.right.eval(PI) - scale).abs() < 1e-9);
        assert!((scale - 0.629961).abs() < 1e-6);
        for &x in r.right.nodes() {
            assert!((r.right.eval(x) - scale * (2.0 * x).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn coupling_divides_right_initial_data() {
        let r = shoot(&spec(["0", "0"], ["0", "0"], FRAC_PI_2, 2.0), 1.0, 256).unwrap();
        assert!((r.right.eval(FRAC_PI_2) - 0.5 * r.left.eval(FRAC_PI_2)).abs() < 1e-15);
        assert!((r.right.eval_deriv(FRAC_PI_2) - 0.5 * r.left.eval_deriv(FRAC_PI_2)).abs() < 1e-15);
    }

    #[test]
    fn boundary_and_transmission_identities() {
        let s = ProblemSpec::parse(
            ["sin(x)", "cos(x)"],
            ["0.5*x*(pi/2 - x)", "(x - pi/2)*(pi - x)*0.25"],
            0.7,
            1.1,
            -1.7,
        )
        .unwrap();
        for lambda in [0.3, 7.0, 410.0] {
            let r = shoot(&s, lambda, 512).unwrap();
            assert_eq!(r.left.start(), (0.7f64.sin(), -0.7f64.cos()));
            let (e0, e1) = r.transmission_residuals(s.coupling);
            assert!(e0.abs() < 1e-9 && e1.abs() < 1e-9, "{e0} {e1}");
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let s = null(FRAC_PI_2);
        for lambda in [1.0f64, 4.0, 25.0] {
            let k = lambda.sqrt();
            let err = |n| {
                let seg = integrate_segment(&s, lambda, Side::Left, 1.0, 0.0, None, n).unwrap();
                let (y, dy) = seg.end();
                (y - (k * FRAC_PI_2).cos())
                    .abs()
                    .max((dy + k * (k * FRAC_PI_2).sin()).abs())
            };
            let ratio = err(32) / err(64);
            let order = ratio.log2();
            assert!((order - 4.0).abs() < 0.3, "lambda {lambda}: order {order}");
        }
    }

    #[test]
    fn linear_in_initial_data() {
        let s = spec(
            ["sin(x)", "cos(x)"],
            ["0.5*x*(pi/2 - x)", "(x - pi/2)*(pi - x)*0.25"],
            1.0,
            1.0,
        );
        let table = SideTable::new(&s, Side::Left, 512).unwrap();
        let (a, b) = (1.3, -0.4);
        let u = table.integrate(30.0, 0.2, 1.0, None).unwrap();
        let v = table.integrate(30.0, -1.1, 0.5, None).unwrap();
        let w = table
            .integrate(30.0, a * 0.2 + b * -1.1, a * 1.0 + b * 0.5, None)
            .unwrap();
        for (i, _) in w.nodes().iter().enumerate() {
            assert!((w.values()[i] - (a * u.values()[i] + b * v.values()[i])).abs() < 1e-9);
            assert!((w.derivs()[i] - (a * u.derivs()[i] + b * v.derivs()[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn delayed_solution_converges_at_fourth_order() {
        // no closed form: compare successive refinements against a fine reference
        let s = spec(
            ["sin(x)", "cos(x)"],
            ["0.5*x*(pi/2 - x)", "(x - pi/2)*(pi - x)*0.25"],
            FRAC_PI_2,
            1.0,
        );
        let reference = shoot(&s, 30.0, 8192).unwrap();
        let err = |n| {
            let r = shoot(&s, 30.0, n).unwrap();
            (r.right.end().0 - reference.right.end().0).abs()
        };
        let order = (err(64) / err(128)).log2();
        assert!(order > 3.5, "order {order}");
    }

    #[test]
    fn errors() {
        let s = null(1.0);
        assert_eq!(
            shoot(&s, 0.0, 16).unwrap_err(),
            SolverError::NonPositiveLambda(0.0)
        );
        assert_eq!(
            shoot(&s, -2.0, 16).unwrap_err(),
            SolverError::NonPositiveLambda(-2.0)
        );
        assert_eq!(shoot(&s, 1.0, 0).unwrap_err(), SolverError::NoSteps);
        let z = spec(["0", "0"], ["0", "0"], 1.0, 0.0);
        assert_eq!(shoot(&z, 1.0, 16).unwrap_err(), SolverError::ZeroCoupling);
        let bad = spec(["1", "0"], ["2*x", "0"], 1.0, 1.0);
        assert!(matches!(
            shoot(&bad, 1.0, 16).unwrap_err(),
            SolverError::DelayOutOfRange { .. }
        ));
        let blowup = spec(["1e300*1e300", "0"], ["0", "0"], 1.0, 1.0);
        assert!(matches!(shoot(&blowup, 1.0, 16), Err(SolverError::Eval(_))));
        let huge = spec(["-1e200", "0"], ["0", "0"], 1.0, 1.0);
        assert!(matches!(
            shoot(&huge, 1.0, 64),
            Err(SolverError::NonFinite { .. })
        ));
    }

    #[test]
    fn history_serves_lookups_before_the_start() {
        // the right delay reaches back to the fixed point π/2 − 0.1
        let s = spec(["1", "1"], ["0", "x - pi/2 + 0.1"], FRAC_PI_2, 1.0);
        assert!(matches!(
            integrate_segment(&s, 4.0, Side::Right, 1.0, 0.0, None, 64),
            Err(SolverError::DelayOutOfRange { .. })
        ));
        let hist = integrate_segment(&s, 4.0, Side::Left, 1.0, 0.0, None, 256).unwrap();
        let anchor = hist.eval(FRAC_PI_2 - 0.1);
        let seg = integrate_segment(&s, 4.0, Side::Right, 1.0, 0.0, Some(&hist), 256).unwrap();
        // y″ + 4y = −anchor has solution (1 + anchor/4)·cos 2t − anchor/4, t = x − π/2
        for &x in seg.nodes() {
            let t = x - FRAC_PI_2;
            let exact = (1.0 + anchor / 4.0) * (2.0 * t).cos() - anchor / 4.0;
            assert!((seg.eval(x) - exact).abs() < 1e-9);
        }
    }
}
