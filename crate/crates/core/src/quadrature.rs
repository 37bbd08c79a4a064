//! Composite Simpson rules.

/// Composite Simpson approximation of `∫_a^b f` with `n` panels (rounded up to even).
pub fn simpson<E>(
    a: f64,
    b: f64,
    n: usize,
    mut f: impl FnMut(f64) -> Result<f64, E>,
) -> Result<f64, E> {
    let n = even_panels(n);
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

pub(crate) fn even_panels(n: usize) -> usize {
    let n = n.max(2);
    n + n % 2
}

/// Running integral of uniformly spaced samples: `out[i] ≈ ∫_{x_0}^{x_i} f`.
///
/// Even nodes use composite Simpson from the origin; odd nodes add a
/// three-point quadratic rule over the last interval to the preceding even
/// node, so every entry carries fourth-order accuracy.
pub fn cumulative_simpson(values: &[f64], h: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(values.len(), 0.0);
    let n = values.len();
    if n < 2 {
        return;
    }
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return;
    }
    let mut i = 2;
    while i < n {
        out[i] = out[i - 2] + h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
        i += 2;
    }
    let mut i = 1;
    while i < n {
        out[i] = if i + 1 < n {
            out[i - 1] + h / 12.0 * (5.0 * values[i - 1] + 8.0 * values[i] - values[i + 1])
        } else {
            out[i - 1] + h / 12.0 * (-values[i - 2] + 8.0 * values[i - 1] + 5.0 * values[i])
        };
        i += 2;
    }
}
