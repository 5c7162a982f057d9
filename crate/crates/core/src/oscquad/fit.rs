//! Tiny least-squares helpers for the decay and sublevel fitters.

/// Solves the normal equations for `targets ~ sum_k coef_k * regressors_k`
/// with up to three regressors, by Gaussian elimination with partial
/// pivoting. Returns the coefficients and the residual RMS.
pub fn least_squares(regressors: &[Vec<f64>], targets: &[f64]) -> (Vec<f64>, f64) {
    let k = regressors.len();
    let n = targets.len();
    assert!(k >= 1 && n >= k, "underdetermined fit");
    // normal matrix
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = dot(&regressors[r], &regressors[c]);
        }
        a[r][k] = dot(&regressors[r], targets);
    }
    // elimination
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        assert!(d.abs() > 1e-14, "singular fit matrix");
        for c in col..=k {
            a[col][c] /= d;
        }
        for r in 0..k {
            if r != col {
                let factor = a[r][col];
                for c in col..=k {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    let coefs: Vec<f64> = (0..k).map(|r| a[r][k]).collect();
    let mut ss = 0.0;
    for i in 0..n {
        let fit: f64 = (0..k).map(|r| coefs[r] * regressors[r][i]).sum();
        ss += (targets[i] - fit).powi(2);
    }
    (coefs, (ss / n as f64).sqrt())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_plain_line() {
        let xs: Vec<f64> = (0..20).map(|k| k as f64 * 0.3).collect();
        let ones = vec![1.0; xs.len()];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 - 1.25 * x).collect();
        let (c, rms) = least_squares(&[ones, xs], &ys);
        assert!((c[0] - 2.5).abs() < 1e-10);
        assert!((c[1] + 1.25).abs() < 1e-10);
        assert!(rms < 1e-10);
    }
}
