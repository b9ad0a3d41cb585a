//! Pearson and partial correlation with two-sided p-values.

use crate::error::{CoreError, Result};
use crate::metrics::registry::DIMENSIONS;

/// Product-moment correlation with a two-sided p-value from the
/// t-distribution. p is reported for tables, never gated on.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(CoreError::ShapeMismatch(format!("{} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(CoreError::TooFewSamples { need: 3, have: n });
    }
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mean_x;
        let dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(CoreError::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(CoreError::ZeroVariance("y".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        // two-sided survival of Student's t via the incomplete beta
        incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
    };
    Ok((r, p))
}

/// Partial correlation of column `dim` with `target`, controlling for the
/// other three dimensions: Pearson correlation of the residuals after
/// least-squares regression (with intercept) on the controls.
pub fn partial_correlation(
    scores: &[[f64; DIMENSIONS]],
    target: &[f64],
    dim: usize,
) -> Result<f64> {
    if dim >= DIMENSIONS {
        return Err(CoreError::InvalidConfig(format!("dimension index {dim}")));
    }
    if scores.len() != target.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "{} rows vs {} targets",
            scores.len(),
            target.len()
        )));
    }
    if scores.len() < 6 {
        return Err(CoreError::TooFewSamples { need: 6, have: scores.len() });
    }
    let x: Vec<f64> = scores.iter().map(|r| r[dim]).collect();
    let controls: Vec<Vec<f64>> = (0..DIMENSIONS)
        .filter(|&d| d != dim)
        .map(|d| scores.iter().map(|r| r[d]).collect())
        .collect();
    partial_correlation_with_controls(&x, target, &controls)
}

/// Residual-regression partial correlation with an arbitrary control set.
/// With no controls this is plain Pearson r.
pub fn partial_correlation_with_controls(
    x: &[f64],
    y: &[f64],
    controls: &[Vec<f64>],
) -> Result<f64> {
    if controls.is_empty() {
        return pearson(x, y).map(|(r, _)| r);
    }
    let rx = regression_residuals(x, controls)?;
    let ry = regression_residuals(y, controls)?;
    // a variable explained exactly by the controls has nothing left to
    // correlate; treat floating-point dust as zero rather than
    // correlating it
    if is_residual_noise(&rx, x) || is_residual_noise(&ry, y) {
        return Ok(0.0);
    }
    pearson(&rx, &ry).map(|(r, _)| r)
}

fn is_residual_noise(residuals: &[f64], original: &[f64]) -> bool {
    let n = original.len() as f64;
    let mean = original.iter().sum::<f64>() / n;
    let ss_total: f64 = original.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|v| v * v).sum();
    ss_res <= 1e-20 * ss_total.max(f64::MIN_POSITIVE)
}

/// Residuals of y after least-squares regression on the controls plus an
/// intercept, via the normal equations.
fn regression_residuals(y: &[f64], controls: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = y.len();
    let k = controls.len() + 1; // intercept first
    for c in controls {
        if c.len() != n {
            return Err(CoreError::ShapeMismatch("control length".into()));
        }
    }
    // design matrix column accessor: col 0 is all ones
    let col = |j: usize, i: usize| if j == 0 { 1.0 } else { controls[j - 1][i] };
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            let va = col(a, i);
            xty[a] += va * y[i];
            for b in a..k {
                xtx[a][b] += va * col(b, i);
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[a][b] = xtx[b][a];
        }
    }
    let beta = solve(&mut xtx, &mut xty)?;
    let mut residuals = Vec::with_capacity(n);
    for i in 0..n {
        let fit: f64 = (0..k).map(|j| beta[j] * col(j, i)).sum();
        residuals.push(y[i] - fit);
    }
    Ok(residuals)
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
fn solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let k = b.len();
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    for p in 0..k {
        let pivot = (p..k)
            .max_by(|&i, &j| a[i][p].abs().partial_cmp(&a[j][p].abs()).expect("finite"))
            .expect("non-empty");
        if a[pivot][p].abs() < 1e-12 * scale {
            return Err(CoreError::RankDeficient(format!("pivot {p}")));
        }
        a.swap(p, pivot);
        b.swap(p, pivot);
        for i in (p + 1)..k {
            let f = a[i][p] / a[p][p];
            for j in p..k {
                a[i][j] -= f * a[p][j];
            }
            b[i] -= f * b[p];
        }
    }
    let mut x = vec![0.0; k];
    for p in (0..k).rev() {
        let mut sum = b[p];
        for j in (p + 1)..k {
            sum -= a[p][j] * x[j];
        }
        x[p] = sum / a[p][p];
    }
    Ok(x)
}

/// Regularized incomplete beta function I_x(a, b) by Lentz's continued
/// fraction; accurate to ~1e-12 over the range the t-test needs.
fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - ln_gamma_swap(x, a, b)
    }
}

fn ln_gamma_swap(x: f64, a: f64, b: f64) -> f64 {
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    ln_front.exp() * beta_cf(1.0 - x, b, a) / b
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-14;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation, g = 7, n = 9.
fn ln_gamma(x: f64) -> f64 {
    #[allow(clippy::excessive_precision)] // published table values
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
