//! Complex least-squares fitting of transformation matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fitted matrix `X` with `targets[k][i] ~ sum_j X[i][j] basis[k][j]`.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub matrix: Vec<Vec<Complex64>>,
    /// Largest absolute residual over all samples and rows.
    pub residual: f64,
    /// Ratio of extreme singular values of the basis matrix.
    pub condition: f64,
}

pub const MAX_CONDITION: f64 = 1e12;

/// Solve for `X` by SVD; each sample row pairs basis values with target values.
pub fn fit_matrix(samples: &[(Vec<Complex64>, Vec<Complex64>)]) -> Result<FitResult> {
    let k = samples.len();
    let nb = samples.first().map(|s| s.0.len()).unwrap_or(0);
    let nt = samples.first().map(|s| s.1.len()).unwrap_or(0);
    if k < nb || nb == 0 {
        return Err(Error::IllConditionedFit { residual: f64::INFINITY, condition: f64::INFINITY });
    }
    let m = DMatrix::from_fn(k, nb, |r, c| samples[r].0[c]);
    let f = DMatrix::from_fn(k, nt, |r, c| samples[r].1[c]);
    let svd = m.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditionedFit { residual: f64::NAN, condition });
    }
    let x = svd
        .solve(&f, 0.0)
        .map_err(|_| Error::IllConditionedFit { residual: f64::NAN, condition })?;
    let res = &m * &x - &f;
    let residual = res.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // x is nb x nt; the fitted matrix is its transpose
    let matrix = (0..nt).map(|i| (0..nb).map(|j| x[(j, i)]).collect()).collect();
    Ok(FitResult { matrix, residual, condition })
}

pub fn max_abs_diff(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

pub fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let m = b.first().map(|r| r.len()).unwrap_or(0);
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn conj_transpose(a: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let m = a.first().map(|r| r.len()).unwrap_or(0);
    (0..m).map(|j| (0..n).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn identity(n: usize) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_matrix() {
        let truth = vec![vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)], vec![Complex64::new(0.0, 1.0), Complex64::new(3.0, -1.0)]];
        let samples: Vec<_> = (0..6)
            .map(|k| {
                let b = vec![Complex64::new(k as f64, 1.0), Complex64::new(1.0, (k * k) as f64 * 0.1)];
                let t = (0..2).map(|i| truth[i][0] * b[0] + truth[i][1] * b[1]).collect();
                (b, t)
            })
            .collect();
        let fit = fit_matrix(&samples).unwrap();
        assert!(max_abs_diff(&fit.matrix, &truth) < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn degenerate_basis_rejected() {
        let samples: Vec<_> = (0..4)
            .map(|k| (vec![Complex64::new(k as f64, 0.0), Complex64::new(2.0 * k as f64, 0.0)], vec![Complex64::new(1.0, 0.0)]))
            .collect();
        assert!(matches!(fit_matrix(&samples), Err(Error::IllConditionedFit { .. })));
    }
}
