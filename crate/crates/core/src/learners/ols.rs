use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Standardizer};

pub const RIDGE_FALLBACK: f64 = 1e-8;

/// Least-squares fit with intercept, stored on the original feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Coefficients on the standardized scale.
    pub standardized: Vec<f64>,
}

impl OlsModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Returns the model and whether the ridge fallback was needed.
    pub(crate) fn fit(x: &Matrix, y: &[f64]) -> (Self, bool) {
        let d = x.cols();
        let st = Standardizer::fit(x);
        let z = st.transform(x);
        let y_mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
        let mut a = vec![0.0; d * d];
        let mut rhs = vec![0.0; d];
        for (row, &yi) in z.chunks_exact(d.max(1)).zip(y) {
            let r = yi - y_mean;
            for i in 0..d {
                rhs[i] += row[i] * r;
                for j in 0..d {
                    a[i * d + j] += row[i] * row[j];
                }
            }
        }
        let (beta, ridge) = match solve(a.clone(), rhs.clone(), d, true) {
            Some(b) => (b, false),
            None => {
                for i in 0..d {
                    a[i * d + i] += RIDGE_FALLBACK;
                }
                (solve(a, rhs, d, false).unwrap_or_else(|| vec![0.0; d]), true)
            }
        };
        let coefficients: Vec<f64> = beta.iter().zip(&st.scale).map(|(b, s)| b / s).collect();
        let intercept = y_mean - coefficients.iter().zip(&st.mean).map(|(c, m)| c * m).sum::<f64>();
        (
            Self {
                coefficients,
                intercept,
                standardized: beta,
            },
            ridge,
        )
    }
}

/// Gaussian elimination with partial pivoting on a `d × d` system.
///
/// With `strict`, a pivot that is negligible against the largest diagonal
/// entry counts as singular; otherwise only an exact zero does.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, d: usize, strict: bool) -> Option<Vec<f64>> {
    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(0.0, f64::max).max(1e-300);
    let tol = if strict { 1e-10 * scale } else { 0.0 };
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i * d + col].abs().total_cmp(&a[j * d + col].abs()))?;
        if a[piv * d + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for k in 0..d {
                a.swap(col * d + k, piv * d + k);
            }
            b.swap(col, piv);
        }
        for r in col + 1..d {
            let f = a[r * d + col] / a[col * d + col];
            if f != 0.0 {
                for k in col..d {
                    a[r * d + k] -= f * a[col * d + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; d];
    for r in (0..d).rev() {
        let s: f64 = (r + 1..d).map(|k| a[r * d + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * d + r];
    }
    Some(x)
}
