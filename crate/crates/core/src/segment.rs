//! Dense-output solution segments on a uniform grid.

use serde::Serialize;

/// A solution `y` and its derivative sampled on a uniform grid over `[a, b]`,
/// with piecewise cubic Hermite interpolation in between (C¹ overall).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSegment {
    a: f64,
    b: f64,
    h: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    lambda: f64,
}

impl SolutionSegment {
    /// Build a segment from node samples; `values.len()` must equal
    /// `derivs.len()` and be at least two.
    pub fn from_samples(a: f64, b: f64, values: Vec<f64>, derivs: Vec<f64>, lambda: f64) -> Self {
        assert!(values.len() >= 2 && values.len() == derivs.len());
        let steps = values.len() - 1;
        let h = (b - a) / steps as f64;
        let nodes = (0..=steps)
            .map(|i| if i == steps { b } else { a + i as f64 * h })
            .collect();
        SolutionSegment {
            a,
            b,
            h,
            nodes,
            values,
            derivs,
            lambda,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let x = x.clamp(self.a, self.b);
        let last = self.steps() - 1;
        if x >= self.b {
            return (last, 1.0);
        }
        let mut i = (((x - self.a) / self.h).floor() as usize).min(last);
        // land exactly on a node when x is one, whatever the rounding of the quotient
        if i < last && x >= self.nodes[i + 1] {
            i += 1;
        } else if i > 0 && x < self.nodes[i] {
            i -= 1;
        }
        (i, (x - self.nodes[i]) / self.h)
    }

    /// Value at `x`, clamped to the segment's interval.
    pub fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        hermite_value(
            self.values[i],
            self.derivs[i],
            self.values[i + 1],
            self.derivs[i + 1],
            self.h,
            t,
        )
    }

    /// Derivative at `x`, clamped to the segment's interval.
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        hermite_slope(
            self.values[i],
            self.derivs[i],
            self.values[i + 1],
            self.derivs[i + 1],
            self.h,
            t,
        )
    }

    pub fn start(&self) -> (f64, f64) {
        (self.values[0], self.derivs[0])
    }

    pub fn end(&self) -> (f64, f64) {
        let n = self.steps();
        (self.values[n], self.derivs[n])
    }

    /// Largest `|value|` and `|derivative|` difference against another segment,
    /// sampled at this segment's nodes.
    pub fn sup_distance(&self, other: &SolutionSegment) -> (f64, f64) {
        self.nodes
            .iter()
            .enumerate()
            .fold((0.0f64, 0.0f64), |(dv, dd), (i, &x)| {
                (
                    dv.max((self.values[i] - other.eval(x)).abs()),
                    dd.max((self.derivs[i] - other.eval_deriv(x)).abs()),
                )
            })
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .chain(&self.derivs)
            .all(|v| v.is_finite())
    }
}

/// Cubic Hermite interpolant on a step of length `h`, local coordinate `t`
/// (t may lie outside [0, 1] for extrapolation).
#[inline]
pub(crate) fn hermite_value(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

#[inline]
pub(crate) fn hermite_slope(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}
