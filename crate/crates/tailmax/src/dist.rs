//! Quantile helpers for the Student t and standard normal distributions.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// CDF of the standard Student t with `nu` degrees of freedom.
pub fn student_t_cdf(x: f64, nu: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, nu).expect("degrees of freedom must be positive");
    t.cdf(x)
}

/// Quantile of the standard Student t by bisection on the CDF.
///
/// The bracket is widened geometrically until it straddles `q`, then bisected
/// until the interval is below 1e-12 in relative width. Accuracy away from
/// the median is limited only by the underlying CDF.
pub fn student_t_quantile(q: f64, nu: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0, "quantile level must be in (0, 1)");
    // Symmetric distribution; the CDF's own rounding error near the center
    // would otherwise leak into the root.
    if q == 0.5 {
        return 0.0;
    }
    let t = StudentsT::new(0.0, 1.0, nu).expect("degrees of freedom must be positive");
    let mut lo = -1.0_f64;
    let mut hi = 1.0_f64;
    while t.cdf(lo) > q {
        lo *= 2.0;
    }
    while t.cdf(hi) < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.abs().max(1.0) {
            break;
        }
        if t.cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quantile of the standard normal distribution.
pub fn normal_quantile(q: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0, "quantile level must be in (0, 1)");
    let n = Normal::new(0.0, 1.0).unwrap();
    n.inverse_cdf(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantile_inverts_cdf() {
        for &nu in &[3.0, 4.0, 5.0] {
            for &q in &[0.01, 0.25, 0.5, 0.9, 0.98, 0.9999] {
                let x = student_t_quantile(q, nu);
                assert!(
                    (student_t_cdf(x, nu) - q).abs() < 1e-10,
                    "round trip failed at nu={nu} q={q}"
                );
            }
        }
    }

    #[test]
    fn t_quantile_median_is_zero() {
        assert_eq!(student_t_quantile(0.5, 4.0), 0.0);
    }

    #[test]
    fn t_with_one_degree_is_cauchy() {
        // t_1 is Cauchy: the 0.75 quantile is tan(pi/4) = 1.
        assert!((student_t_quantile(0.75, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normal_quantile_matches_reference() {
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.5)).abs() < 1e-12);
    }
}
