//! Multivariate Student t sampling via the normal scale mixture
//! `X = Z / sqrt(W / nu)` with `Z ~ N(0, S)` and `W ~ chi^2_nu`.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// stored row-major. Returns `None` when a pivot is not strictly positive.
pub(crate) fn cholesky(dim: usize, scale: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(scale.len(), dim * dim);
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = scale[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// Draws `n` rows of a `dim`-variate t with the given Cholesky factor,
/// returned as `dim` columns of length `n`.
pub(crate) fn draw_columns<R: Rng>(
    n: usize,
    nu: f64,
    dim: usize,
    chol: &[f64],
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let chi = ChiSquared::new(nu).expect("degrees of freedom must be positive");
    let mut columns = vec![Vec::with_capacity(n); dim];
    let mut z = vec![0.0; dim];
    for _ in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let w: f64 = chi.sample(rng);
        let scale = (nu / w).sqrt();
        for i in 0..dim {
            let mut v = 0.0;
            for k in 0..=i {
                v += chol[i * dim + k] * z[k];
            }
            columns[i].push(v * scale);
        }
    }
    columns
}
