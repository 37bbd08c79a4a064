//! Problem instances: the coefficient `q`, the retardation `Δ`, the boundary
//! angles and the transmission coupling, together with grid-based checks of
//! the structural constraints the theory places on them.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ParseError};
use crate::quadrature::simpson;

/// Location of the transmission (discontinuity) point.
pub const INTERFACE: f64 = FRAC_PI_2;
/// Right end of the domain.
pub const RIGHT_END: f64 = PI;

/// Offset used to approximate one-sided limits at the interface.
pub const ONE_SIDED_OFFSET: f64 = 1e-9;
/// Absolute tolerance for the "= 0" parts of the refined conditions.
pub const ZERO_TOL: f64 = 1e-9;
/// Default number of validation grid points per subinterval.
pub const DEFAULT_GRID: usize = 4096;

// slack for the inequality checks so round-off at the endpoints is not a violation
const INEQ_SLACK: f64 = 1e-12;

/// Which of the two subintervals a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn interval(self) -> (f64, f64) {
        match self {
            Side::Left => (0.0, INTERFACE),
            Side::Right => (INTERFACE, RIGHT_END),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("field `{field}`: {source}")]
    Parse {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// JSON-facing description of a problem; expressions are kept as strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub q_left: String,
    pub q_right: String,
    pub retard_left: String,
    pub retard_right: String,
    pub alpha: f64,
    pub beta: f64,
    pub coupling: f64,
}

/// A fully parsed problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub q_left: Expr,
    pub q_right: Expr,
    pub retard_left: Expr,
    pub retard_right: Expr,
    pub alpha: f64,
    pub beta: f64,
    pub coupling: f64,
}

impl ProblemSpec {
    pub fn from_config(cfg: &ProblemConfig) -> Result<Self, ProblemError> {
        let p = |field: &'static str, src: &str| {
            expr::parse(src).map_err(|source| ProblemError::Parse { field, source })
        };
        Ok(ProblemSpec {
            q_left: p("q_left", &cfg.q_left)?,
            q_right: p("q_right", &cfg.q_right)?,
            retard_left: p("retard_left", &cfg.retard_left)?,
            retard_right: p("retard_right", &cfg.retard_right)?,
            alpha: cfg.alpha,
            beta: cfg.beta,
            coupling: cfg.coupling,
        })
    }

    /// Convenience constructor from expression strings.
    pub fn parse(
        q: [&str; 2],
        retard: [&str; 2],
        alpha: f64,
        beta: f64,
        coupling: f64,
    ) -> Result<Self, ProblemError> {
        Self::from_config(&ProblemConfig {
            q_left: q[0].into(),
            q_right: q[1].into(),
            retard_left: retard[0].into(),
            retard_right: retard[1].into(),
            alpha,
            beta,
            coupling,
        })
    }

    pub fn to_config(&self) -> ProblemConfig {
        ProblemConfig {
            q_left: self.q_left.to_string(),
            q_right: self.q_right.to_string(),
            retard_left: self.retard_left.to_string(),
            retard_right: self.retard_right.to_string(),
            alpha: self.alpha,
            beta: self.beta,
            coupling: self.coupling,
        }
    }

    pub fn interface_point(&self) -> f64 {
        INTERFACE
    }

    pub fn q_expr(&self, side: Side) -> &Expr {
        match side {
            Side::Left => &self.q_left,
            Side::Right => &self.q_right,
        }
    }

    pub fn retard_expr(&self, side: Side) -> &Expr {
        match side {
            Side::Left => &self.retard_left,
            Side::Right => &self.retard_right,
        }
    }

    pub fn q(&self, side: Side, x: f64) -> Result<f64, EvalError> {
        self.q_expr(side).eval(x)
    }

    pub fn retard(&self, side: Side, x: f64) -> Result<f64, EvalError> {
        self.retard_expr(side).eval(x)
    }

    /// `sin α ≠ 0` and `sin β ≠ 0`: the only regime covered by the refined asymptotics.
    pub fn is_case1(&self) -> bool {
        self.alpha.sin().abs() > 1e-12 && self.beta.sin().abs() > 1e-12
    }
}

/// Outcome of one structural check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Point of the worst violation (or of the closest call when passing).
    pub worst_x: Option<f64>,
    /// The checked quantity at `worst_x`.
    pub worst_value: Option<f64>,
}

impl Check {
    fn scalar(name: &'static str, passed: bool, value: f64) -> Self {
        Check {
            name,
            passed,
            worst_x: None,
            worst_value: Some(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Interior validation points of one subinterval. The left grid includes 0
/// and stops short of the interface; the right grid starts just after it and
/// includes π.
pub fn side_grid(side: Side, points: usize) -> Vec<f64> {
    let (a, b) = side.interval();
    let h = (b - a) / points as f64;
    match side {
        Side::Left => (0..points).map(|i| a + i as f64 * h).collect(),
        Side::Right => (1..=points).map(|i| a + i as f64 * h).collect(),
    }
}

/// Minimum of `f` over the points, as `(x, value)`.
fn grid_min(
    xs: &[f64],
    mut f: impl FnMut(f64) -> Result<f64, EvalError>,
) -> Result<(f64, f64), EvalError> {
    let mut best = (f64::NAN, f64::INFINITY);
    for &x in xs {
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

fn min_check(name: &'static str, (x, v): (f64, f64)) -> Check {
    Check {
        name,
        passed: v >= -INEQ_SLACK,
        worst_x: Some(x),
        worst_value: Some(v),
    }
}

/// Samples approaching the interface from one side: ε = 1e-3 … 1e-9.
fn interface_limit_check(name: &'static str, side: Side, f: &Expr) -> Result<Check, EvalError> {
    let sign = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let eps = [1e-3, 1e-5, 1e-7, ONE_SIDED_OFFSET];
    let vals = eps
        .iter()
        .map(|e| f.eval(INTERFACE + sign * e))
        .collect::<Result<Vec<_>, _>>()?;
    let last = vals[vals.len() - 1];
    let tail_gap = (vals[vals.len() - 2] - last).abs();
    let head_gap = (vals[0] - last).abs();
    // successive samples must settle: the gap shrinks, or is already negligible
    let passed = tail_gap <= 1e-6 * (1.0 + last.abs()) && tail_gap <= head_gap.max(1e-12);
    Ok(Check {
        name,
        passed,
        worst_x: Some(INTERFACE + sign * ONE_SIDED_OFFSET),
        worst_value: Some(last),
    })
}

/// Check the standing constraints on a problem instance on a uniform grid.
pub fn validate(spec: &ProblemSpec, grid_points: usize) -> Result<ValidationReport, EvalError> {
    let n = grid_points.max(16);
    let left = side_grid(Side::Left, n);
    let mut right = side_grid(Side::Right, n);
    right.insert(0, INTERFACE + ONE_SIDED_OFFSET);
    let mut left_closed = left.clone();
    left_closed.push(INTERFACE - ONE_SIDED_OFFSET);

    let mut checks = vec![Check::scalar(
        "coupling_nonzero",
        spec.coupling != 0.0 && spec.coupling.is_finite(),
        spec.coupling,
    )];
    checks.push(Check::scalar(
        "angles_finite",
        spec.alpha.is_finite() && spec.beta.is_finite(),
        spec.alpha,
    ));

    checks.push(min_check(
        "retard_nonnegative_left",
        grid_min(&left_closed, |x| spec.retard(Side::Left, x))?,
    ));
    checks.push(min_check(
        "retard_nonnegative_right",
        grid_min(&right, |x| spec.retard(Side::Right, x))?,
    ));
    checks.push(min_check(
        "delayed_argument_left",
        grid_min(&left_closed, |x| Ok(x - spec.retard(Side::Left, x)?))?,
    ));
    checks.push(min_check(
        "delayed_argument_right",
        grid_min(&right, |x| Ok(x - spec.retard(Side::Right, x)? - INTERFACE))?,
    ));

    // q must also be finite everywhere on the grid; evaluation errors propagate
    for &x in &left {
        spec.q(Side::Left, x)?;
    }
    for &x in &right {
        spec.q(Side::Right, x)?;
    }
    checks.push(interface_limit_check(
        "q_limit_left",
        Side::Left,
        &spec.q_left,
    )?);
    checks.push(interface_limit_check(
        "q_limit_right",
        Side::Right,
        &spec.q_right,
    )?);

    Ok(ValidationReport { checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `q′` bounded on each side, with finite one-sided limits at the interface.
    pub q_derivative_bounded: [Check; 2],
    /// `Δ″` bounded on each side, with finite one-sided limits at the interface.
    pub retard_second_derivative_bounded: [Check; 2],
    /// `Δ′(x) ≤ 1` on both subintervals.
    pub retard_slope: [Check; 2],
    pub retard_zero_at_origin: Check,
    pub retard_zero_right_of_interface: Check,
    pub case1: bool,
}

impl ConditionReport {
    pub fn condition_a(&self) -> bool {
        self.q_derivative_bounded.iter().all(|c| c.passed)
            && self
                .retard_second_derivative_bounded
                .iter()
                .all(|c| c.passed)
    }

    pub fn condition_b(&self) -> bool {
        self.retard_slope.iter().all(|c| c.passed)
            && self.retard_zero_at_origin.passed
            && self.retard_zero_right_of_interface.passed
    }

    /// Everything the refined asymptotic formulas need.
    pub fn refined_ready(&self) -> bool {
        self.case1 && self.condition_a() && self.condition_b()
    }
}

const FD_STEP1: f64 = 1e-6;
const FD_STEP2: f64 = 1e-4;

fn first_derivative(f: &Expr, x: f64) -> Result<f64, EvalError> {
    Ok((f.eval(x + FD_STEP1)? - f.eval(x - FD_STEP1)?) / (2.0 * FD_STEP1))
}

fn second_derivative(f: &Expr, x: f64) -> Result<f64, EvalError> {
    let h = FD_STEP2;
    Ok((f.eval(x + h)? - 2.0 * f.eval(x)? + f.eval(x - h)?) / (h * h))
}

/// Boundedness of a derivative on one side, estimated by finite differences.
///
/// The sup over the interior grid must be finite, and probes approaching both
/// endpoints of the subinterval (distances 1e-2 and 1e-3) must not grow by
/// more than a factor of two, i.e. the one-sided limits look finite.
fn derivative_bounded(
    name: &'static str,
    side: Side,
    f: &Expr,
    grid_points: usize,
    deriv: fn(&Expr, f64) -> Result<f64, EvalError>,
) -> Result<Check, EvalError> {
    let (a, b) = side.interval();
    // keep the difference stencil strictly inside the subinterval
    let margin = 10.0 * FD_STEP2;
    let h = (b - a - 2.0 * margin) / grid_points as f64;
    let mut worst = (a + margin, 0.0f64);
    for i in 0..=grid_points {
        let x = a + margin + i as f64 * h;
        let d = deriv(f, x)?.abs();
        if !d.is_finite() || d > worst.1 {
            worst = (x, d);
        }
    }
    let mut settled = worst.1.is_finite();
    for (end, inward) in [(a, 1.0), (b, -1.0)] {
        let near = deriv(f, end + inward * 1e-2)?.abs();
        let nearer = deriv(f, end + inward * 1e-3)?.abs();
        settled &= nearer.is_finite() && nearer <= 2.0 * near + 1.0;
    }
    Ok(Check {
        name,
        passed: settled,
        worst_x: Some(worst.0),
        worst_value: Some(worst.1),
    })
}

/// Conditions a) and b) for the refined asymptotics, plus the case-1 flag.
pub fn check_refined_conditions(
    spec: &ProblemSpec,
    grid_points: usize,
) -> Result<ConditionReport, EvalError> {
    let n = grid_points.max(16);
    let q_derivative_bounded = [
        derivative_bounded(
            "q_prime_bounded_left",
            Side::Left,
            &spec.q_left,
            n,
            first_derivative,
        )?,
        derivative_bounded(
            "q_prime_bounded_right",
            Side::Right,
            &spec.q_right,
            n,
            first_derivative,
        )?,
    ];
    let retard_second_derivative_bounded = [
        derivative_bounded(
            "retard_second_bounded_left",
            Side::Left,
            &spec.retard_left,
            n,
            second_derivative,
        )?,
        derivative_bounded(
            "retard_second_bounded_right",
            Side::Right,
            &spec.retard_right,
            n,
            second_derivative,
        )?,
    ];

    let slope = |name, side: Side| -> Result<Check, EvalError> {
        let (a, b) = side.interval();
        let f = spec.retard_expr(side);
        let mut xs = side_grid(side, n);
        // one-sided differences at the ends so the stencil stays on this side
        let mut worst = (f64::NAN, f64::NEG_INFINITY);
        for x in xs.drain(..) {
            let d = if x - FD_STEP1 < a {
                (f.eval(x + FD_STEP1)? - f.eval(x)?) / FD_STEP1
            } else if x + FD_STEP1 > b {
                (f.eval(x)? - f.eval(x - FD_STEP1)?) / FD_STEP1
            } else {
                first_derivative(f, x)?
            };
            if d > worst.1 {
                worst = (x, d);
            }
        }
        Ok(Check {
            name,
            passed: worst.1 <= 1.0 + ZERO_TOL,
            worst_x: Some(worst.0),
            worst_value: Some(worst.1),
        })
    };
    let retard_slope = [
        slope("retard_slope_left", Side::Left)?,
        slope("retard_slope_right", Side::Right)?,
    ];

    let d0 = spec.retard(Side::Left, 0.0)?;
    let d_plus = spec.retard(Side::Right, INTERFACE + ONE_SIDED_OFFSET)?;
    Ok(ConditionReport {
        q_derivative_bounded,
        retard_second_derivative_bounded,
        retard_slope,
        retard_zero_at_origin: Check {
            name: "retard_zero_at_origin",
            passed: d0.abs() <= ZERO_TOL,
            worst_x: Some(0.0),
            worst_value: Some(d0),
        },
        retard_zero_right_of_interface: Check {
            name: "retard_zero_right_of_interface",
            passed: d_plus.abs() <= ZERO_TOL,
            worst_x: Some(INTERFACE + ONE_SIDED_OFFSET),
            worst_value: Some(d_plus),
        },
        case1: spec.is_case1(),
    })
}

/// `q₁ = ∫₀^{π/2} |q|` and `q₂ = ∫_{π/2}^{π} |q|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QNorms {
    pub q1: f64,
    pub q2: f64,
}

pub const DEFAULT_QUADRATURE: usize = 4096;

/// Composite Simpson approximations of the L¹ norms of `q` on each side.
pub fn q_norms(spec: &ProblemSpec, quadrature_points: usize) -> Result<QNorms, EvalError> {
    let q1 = simpson(0.0, INTERFACE, quadrature_points, |x| {
        Ok(spec.q(Side::Left, x)?.abs())
    })?;
    let q2 = simpson(INTERFACE, RIGHT_END, quadrature_points, |x| {
        Ok(spec.q(Side::Right, x)?.abs())
    })?;
    Ok(QNorms { q1, q2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(q: [&str; 2], d: [&str; 2], alpha: f64) -> ProblemSpec {
        ProblemSpec::parse(q, d, alpha, FRAC_PI_2, 1.0).unwrap()
    }

    #[test]
    fn null_spec_passes_everything() {
        let s = spec(["0", "0"], ["0", "0"], FRAC_PI_2);
        let r = validate(&s, 64).unwrap();
        assert!(r.accepted(), "{r:?}");
        let c = check_refined_conditions(&s, 64).unwrap();
        assert!(c.condition_a() && c.condition_b() && c.case1);
        assert_eq!(c.retard_slope[0].worst_value, Some(0.0));
    }

    #[test]
    fn excessive_left_delay_fails() {
        let s = spec(["0", "0"], ["2*x", "0"], FRAC_PI_2);
        let r = validate(&s, 64).unwrap();
        assert!(!r.accepted());
        let c = r.get("delayed_argument_left").unwrap();
        assert!(!c.passed);
        // x - 2x = -x is most negative at the right end of the grid
        assert!(c.worst_x.unwrap() > 1.5);
        assert!(r.get("delayed_argument_right").unwrap().passed);
    }

    #[test]
    fn reference_delay_passes_brute_force() {
        let left = "0.5*x*(pi/2 - x)";
        let right = "(x - pi/2)*(pi - x)*0.25";
        let s = spec(["sin(x)", "cos(x)"], [left, right], FRAC_PI_2);
        assert!(validate(&s, 4096).unwrap().accepted());

        // independent brute-force minimization of the three inequalities
        let n = 10_000;
        let (mut d_min, mut l_min, mut r_min) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let xl = t * FRAC_PI_2;
            let xr = FRAC_PI_2 + t * FRAC_PI_2;
            let dl = 0.5 * xl * (FRAC_PI_2 - xl);
            let dr = (xr - FRAC_PI_2) * (PI - xr) * 0.25;
            d_min = d_min.min(dl).min(dr);
            l_min = l_min.min(xl - dl);
            r_min = r_min.min(xr - dr - FRAC_PI_2);
        }
        assert!(d_min >= -1e-15 && l_min >= -1e-15 && r_min >= -1e-15);
        assert!(s.retard(Side::Left, 0.0).unwrap().abs() < 1e-15);

        let c = check_refined_conditions(&s, 4096).unwrap();
        assert!(c.refined_ready(), "{c:?}");
        // Δ′(0) = π/4 is the steepest point on the left
        let w = c.retard_slope[0].worst_value.unwrap();
        assert!((w - std::f64::consts::FRAC_PI_4).abs() < 1e-5, "{w}");
    }

    #[test]
    fn steep_delay_fails_slope_condition() {
        let s = spec(["0", "0"], ["0.5*x", "2*(x - pi/2)*(pi - x)"], FRAC_PI_2);
        let c = check_refined_conditions(&s, 256).unwrap();
        assert!(c.retard_slope[0].passed);
        assert!(!c.retard_slope[1].passed);
    }

    #[test]
    fn nonzero_delay_at_origin_fails_b() {
        let s = spec(["0", "0"], ["0.1", "0"], FRAC_PI_2);
        let c = check_refined_conditions(&s, 64).unwrap();
        assert!(!c.retard_zero_at_origin.passed);
        assert!(!c.condition_b());
    }

    #[test]
    fn case1_flag() {
        let s = spec(["0", "0"], ["0", "0"], 0.0);
        assert!(!check_refined_conditions(&s, 32).unwrap().case1);
    }

    #[test]
    fn unbounded_derivative_is_flagged() {
        let s = spec(["sqrt(x)", "0"], ["0", "0"], FRAC_PI_2);
        let c = check_refined_conditions(&s, 256).unwrap();
        assert!(!c.q_derivative_bounded[0].passed);
        assert!(c.q_derivative_bounded[1].passed);
    }

    #[test]
    fn singular_q_fails_limit_check() {
        let s = spec(["1/(x - pi/2 - 1e-30)", "0"], ["0", "0"], FRAC_PI_2);
        let r = validate(&s, 64).unwrap();
        assert!(!r.get("q_limit_left").unwrap().passed);
    }

    #[test]
    fn zero_coupling_is_rejected() {
        let s = ProblemSpec::parse(["0", "0"], ["0", "0"], 1.0, 1.0, 0.0).unwrap();
        assert!(
            !validate(&s, 16)
                .unwrap()
                .get("coupling_nonzero")
                .unwrap()
                .passed
        );
    }

    #[test]
    fn domain_error_propagates_from_validate() {
        let s = spec(["log(x - 1)", "0"], ["0", "0"], FRAC_PI_2);
        assert!(validate(&s, 32).is_err());
    }

    #[test]
    fn validate_is_idempotent() {
        let s = spec(["sin(x)", "cos(x)"], ["0.5*x*(pi/2-x)", "0"], 1.0);
        assert_eq!(validate(&s, 128).unwrap(), validate(&s, 128).unwrap());
    }

    #[test]
    fn q_norm_values() {
        let n = q_norms(&spec(["0", "0"], ["0", "0"], 1.0), 256).unwrap();
        assert_eq!((n.q1, n.q2), (0.0, 0.0));
        let n = q_norms(&spec(["1", "1"], ["0", "0"], 1.0), 256).unwrap();
        assert!((n.q1 - FRAC_PI_2).abs() < 1e-14 && (n.q2 - FRAC_PI_2).abs() < 1e-14);
        // ∫₀^{π/2} sin = 1 − cos(π/2)
        let n = q_norms(&spec(["sin(x)", "0"], ["0", "0"], 1.0), 256).unwrap();
        assert!((n.q1 - (1.0 - FRAC_PI_2.cos())).abs() < 1e-9);
        assert_eq!(n.q2, 0.0);
    }

    #[test]
    fn q_norms_scale_linearly() {
        let base = q_norms(&spec(["sin(3*x) + 0.2", "x*cos(x)"], ["0", "0"], 1.0), 512).unwrap();
        for c in [0.0, 0.5, 3.0] {
            let scaled = spec(
                [&format!("{c}*(sin(3*x) + 0.2)"), &format!("{c}*x*cos(x)")],
                ["0", "0"],
                1.0,
            );
            let n = q_norms(&scaled, 512).unwrap();
            assert!((n.q1 - c * base.q1).abs() < 1e-12 * (1.0 + c));
            assert!((n.q2 - c * base.q2).abs() < 1e-12 * (1.0 + c));
        }
    }

    #[test]
    fn config_round_trip_through_json() {
        let s = spec(["sin(x)", "cos(x)"], ["0.5*x*(pi/2-x)", "0"], 1.0);
        let json = serde_json::to_string(&s.to_config()).unwrap();
        let back: ProblemConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(ProblemSpec::from_config(&back).unwrap(), s);
    }
}
