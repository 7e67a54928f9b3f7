//! Upper tail copula evaluators and the tail dependence identities linking
//! the covariate copula to the joint tail of `(X, Y)` under a max-linear
//! response.
//!
//! An evaluator computes `R(args)`, the joint tail mass at extended-real
//! coordinates: nondecreasing in every coordinate, equal to `a` when exactly
//! one coordinate is finite at `a`, and never above the smallest finite
//! coordinate. Infinite coordinates drop out of the event.

use crate::dist::student_t_quantile;
use crate::evt::{EvtError, RankVector, TailCount};
use crate::mvt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TailDepError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("theta[{index}] = {value} outside (0, 1)")]
    InvalidTheta { index: usize, value: f64 },
    #[error("coordinate index {j} out of range for dimension {d}")]
    CoordinateIndex { j: usize, d: usize },
    #[error("all coordinates are infinite")]
    AllInfinite,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("scale matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("tail level p = {0} outside (0, 1)")]
    InvalidTailLevel(f64),
    #[error(transparent)]
    Evt(#[from] EvtError),
}

/// Upper tail copula on extended-real coordinates.
pub trait TailCopula {
    fn dim(&self) -> usize;

    /// Evaluates `R(args)`. Every entry must be positive, infinite entries
    /// drop out, and at least one entry must be finite.
    fn eval(&self, args: &[f64]) -> f64;
}

fn debug_check_args(dim: usize, args: &[f64]) {
    debug_assert_eq!(args.len(), dim);
    debug_assert!(args.iter().any(|a| a.is_finite()));
    debug_assert!(args.iter().all(|&a| a > 0.0));
}

/// Perfect positive dependence: `R(args) = min over finite coordinates`.
#[derive(Debug, Clone, Copy)]
pub struct Comonotone {
    dim: usize,
}

impl Comonotone {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        Comonotone { dim }
    }
}

impl TailCopula for Comonotone {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, args: &[f64]) -> f64 {
        debug_check_args(self.dim, args);
        args.iter().copied().filter(|a| a.is_finite()).fold(f64::INFINITY, f64::min)
    }
}

/// Asymptotic independence: joint tail mass vanishes unless exactly one
/// coordinate is finite.
#[derive(Debug, Clone, Copy)]
pub struct Independence {
    dim: usize,
}

impl Independence {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        Independence { dim }
    }
}

impl TailCopula for Independence {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, args: &[f64]) -> f64 {
        debug_check_args(self.dim, args);
        let mut finite = args.iter().copied().filter(|a| a.is_finite());
        match (finite.next(), finite.next()) {
            (Some(a), None) => a,
            _ => 0.0,
        }
    }
}

/// Monte Carlo evaluator for the tail copula of a multivariate Student t.
///
/// Draws are taken once at construction from a fixed seed, so evaluation is
/// a pure function. `R(args)` is the fraction of draws exceeding the exact
/// per-margin t quantile at level `1 - p*args_c` in every finite coordinate,
/// scaled by `1/p`; a single finite coordinate short-circuits to the exact
/// marginal value. The sampling error of a value `R` is about
/// `sqrt(R / (N p))`.
#[derive(Debug, Clone)]
pub struct McTCopula {
    nu: f64,
    p: f64,
    margin_sd: Vec<f64>,
    columns: Vec<Vec<f64>>,
    n_samples: usize,
}

impl McTCopula {
    pub fn new(
        nu: f64,
        scale: &[Vec<f64>],
        p: f64,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self, TailDepError> {
        let dim = scale.len();
        if dim == 0 || scale.iter().any(|row| row.len() != dim) {
            return Err(TailDepError::InvalidParams(
                "scale matrix must be square and nonempty".into(),
            ));
        }
        if !(nu > 0.0) {
            return Err(TailDepError::InvalidParams(
                "degrees of freedom must be positive".into(),
            ));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(TailDepError::InvalidTailLevel(p));
        }
        if n_samples == 0 {
            return Err(TailDepError::InvalidParams(
                "sample count must be positive".into(),
            ));
        }
        let flat: Vec<f64> = scale.iter().flatten().copied().collect();
        let chol = mvt::cholesky(dim, &flat).ok_or(TailDepError::NotPositiveDefinite)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let columns = mvt::draw_columns(n_samples, nu, dim, &chol, &mut rng);
        let margin_sd = (0..dim).map(|j| scale[j][j].sqrt()).collect();
        Ok(McTCopula {
            nu,
            p,
            margin_sd,
            columns,
            n_samples,
        })
    }

    /// Approximate Monte Carlo standard error for an evaluated value.
    pub fn standard_error(&self, value: f64) -> f64 {
        (value.max(0.0) / (self.n_samples as f64 * self.p)).sqrt()
    }
}

impl TailCopula for McTCopula {
    fn dim(&self) -> usize {
        self.columns.len()
    }

    fn eval(&self, args: &[f64]) -> f64 {
        debug_check_args(self.dim(), args);
        let finite: Vec<usize> = (0..args.len()).filter(|&c| args[c].is_finite()).collect();
        if finite.len() == 1 {
            // The margins are standardized exactly by quantile inversion.
            return args[finite[0]];
        }
        let thresholds: Vec<(usize, f64)> = finite
            .iter()
            .map(|&c| {
                let q = 1.0 - self.p * args[c];
                debug_assert!(q > 0.0 && q < 1.0);
                (c, self.margin_sd[c] * student_t_quantile(q, self.nu))
            })
            .collect();
        let mut count = 0usize;
        for i in 0..self.n_samples {
            if thresholds.iter().all(|&(c, t)| self.columns[c][i] > t) {
                count += 1;
            }
        }
        count as f64 / (self.n_samples as f64 * self.p)
    }
}

/// Rank-based empirical tail copula over fixed columns.
///
/// Evaluation matches [`empirical_r`] bitwise. Rows appearing in the top k
/// of at least one column are kept in a compact list so that arguments at or
/// below 1 (the only ones the solvers use) count a few hundred rows instead
/// of the whole sample.
#[derive(Debug, Clone)]
pub struct EmpiricalTailCopula {
    n: usize,
    k: usize,
    columns: Vec<Vec<u32>>,
    top_rows: Vec<Vec<u32>>,
}

impl EmpiricalTailCopula {
    pub fn from_ranks(columns: &[RankVector], k: TailCount) -> Result<Self, TailDepError> {
        if columns.is_empty() {
            return Err(TailDepError::InvalidParams("no rank columns".into()));
        }
        let n = columns[0].len();
        for c in columns {
            if c.len() != n {
                return Err(EvtError::ColumnLengthMismatch(n, c.len()).into());
            }
        }
        let k = k.check_against(n)?;
        let copied: Vec<Vec<u32>> = columns
            .iter()
            .map(|c| c.as_slice().iter().map(|&r| r as u32).collect())
            .collect();
        let cutoff = (n - k) as u32;
        let mut top_rows = Vec::new();
        for i in 0..n {
            if copied.iter().any(|c| c[i] > cutoff) {
                top_rows.push(copied.iter().map(|c| c[i]).collect());
            }
        }
        Ok(EmpiricalTailCopula {
            n,
            k,
            columns: copied,
            top_rows,
        })
    }

    pub fn tail_count(&self) -> usize {
        self.k
    }

    pub(crate) fn sample_len(&self) -> usize {
        self.n
    }

    pub(crate) fn rank_columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    fn thresholds(&self, args: &[f64]) -> Vec<Option<f64>> {
        args.iter()
            .map(|&a| {
                if a.is_finite() {
                    Some(self.n as f64 - self.k as f64 * a + 0.5)
                } else {
                    None
                }
            })
            .collect()
    }
}

impl TailCopula for EmpiricalTailCopula {
    fn dim(&self) -> usize {
        self.columns.len()
    }

    fn eval(&self, args: &[f64]) -> f64 {
        debug_check_args(self.dim(), args);
        let thresholds = self.thresholds(args);
        let count = if args.iter().all(|&a| !a.is_finite() || a <= 1.0) {
            // Arguments at or below 1 can only be satisfied by top-k rows.
            self.top_rows
                .iter()
                .filter(|row| {
                    thresholds
                        .iter()
                        .zip(row.iter())
                        .all(|(t, &r)| t.map_or(true, |t| (r as f64) > t))
                })
                .count()
        } else {
            (0..self.n)
                .filter(|&i| {
                    thresholds
                        .iter()
                        .enumerate()
                        .all(|(c, t)| t.map_or(true, |t| (self.columns[c][i] as f64) > t))
                })
                .count()
        };
        count as f64 / self.k as f64
    }
}

/// Scaled coefficients `theta_j in (0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector(Vec<f64>);

impl ThetaVector {
    pub fn new(values: Vec<f64>) -> Result<Self, TailDepError> {
        if values.is_empty() {
            return Err(TailDepError::InvalidParams("theta must be nonempty".into()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(TailDepError::InvalidTheta { index, value });
            }
        }
        Ok(ThetaVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Max-linear model parameters with a common extreme value index.
///
/// The scaled coefficients `theta_j = (beta_j / alpha_j)^(1/gamma)` must lie
/// in `(0, 1)`, i.e. each `beta_j` stays below its tail scale `alpha_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    gamma: f64,
}

impl ModelParams {
    pub fn new(beta: Vec<f64>, alpha: Vec<f64>, gamma: f64) -> Result<Self, TailDepError> {
        if beta.is_empty() || beta.len() != alpha.len() {
            return Err(TailDepError::DimensionMismatch {
                expected: beta.len(),
                got: alpha.len(),
            });
        }
        if !(gamma > 0.0) {
            return Err(TailDepError::InvalidParams(
                "extreme value index must be positive".into(),
            ));
        }
        for (j, (&b, &a)) in beta.iter().zip(alpha.iter()).enumerate() {
            if !(b > 0.0 && a > 0.0) {
                return Err(TailDepError::InvalidParams(format!(
                    "beta and alpha must be positive at position {j}"
                )));
            }
            let theta = (b / a).powf(1.0 / gamma);
            if !(theta > 0.0 && theta < 1.0) {
                return Err(TailDepError::InvalidTheta {
                    index: j,
                    value: theta,
                });
            }
        }
        Ok(ModelParams { beta, alpha, gamma })
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> ThetaVector {
        let v = self
            .beta
            .iter()
            .zip(self.alpha.iter())
            .map(|(&b, &a)| (b / a).powf(1.0 / self.gamma))
            .collect();
        ThetaVector::new(v).expect("validated at construction")
    }
}

fn min_extended(a: f64, b: f64) -> f64 {
    // a is theta*y with theta in (0,1): infinite y propagates, so the min
    // falls back to the finite coordinate.
    if a.is_infinite() {
        b
    } else if b.is_infinite() {
        a
    } else {
        a.min(b)
    }
}

/// Joint tail mass of `(X_1, X_2, Y)` implied by a bivariate max-linear
/// model: with `m_j = min(theta_j * y, x_j)`,
/// `R(x1, x2, y) = R^X(m1, x2) + R^X(x1, m2) - R^X(m1, m2)`.
///
/// Setting `y = inf` telescopes the three terms back to `R^X(x1, x2)`
/// exactly.
pub fn model_r(
    x1: f64,
    x2: f64,
    y: f64,
    params: &ModelParams,
    rx: &dyn TailCopula,
) -> Result<f64, TailDepError> {
    if params.dim() != 2 {
        return Err(TailDepError::DimensionMismatch {
            expected: 2,
            got: params.dim(),
        });
    }
    if rx.dim() != 2 {
        return Err(TailDepError::DimensionMismatch {
            expected: 2,
            got: rx.dim(),
        });
    }
    if x1.is_infinite() && x2.is_infinite() && y.is_infinite() {
        return Err(TailDepError::AllInfinite);
    }
    for (name, v) in [("x1", x1), ("x2", x2), ("y", y)] {
        if !(v > 0.0) {
            return Err(TailDepError::InvalidParams(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let theta = params.theta();
    let t = theta.as_slice();
    let m1 = min_extended(t[0] * y, x1);
    let m2 = min_extended(t[1] * y, x2);
    Ok(rx.eval(&[m1, x2]) + rx.eval(&[x1, m2]) - rx.eval(&[m1, m2]))
}

/// Model-implied tail dependence between covariate `j` (0-based) and the
/// response, both at coordinate 1: the inclusion-exclusion sum over nonempty
/// subsets `S` of covariates of `(-1)^(|S|+1) * R^X(v_S)`, where `v_S` takes
/// `theta_i` on `S`, 1 at coordinate `j` when `j` is outside `S`, and
/// infinity elsewhere.
///
/// The `S = {j}` term is the marginal at `theta_j`, which every standardized
/// evaluator maps to `theta_j` itself, so it is added directly.
pub fn implied_r_xy(
    j: usize,
    theta: &ThetaVector,
    rx: &dyn TailCopula,
) -> Result<f64, TailDepError> {
    let d = theta.len();
    if d < 2 {
        return Err(TailDepError::InvalidParams(
            "at least two covariates required".into(),
        ));
    }
    if rx.dim() != d {
        return Err(TailDepError::DimensionMismatch {
            expected: d,
            got: rx.dim(),
        });
    }
    if j >= d {
        return Err(TailDepError::CoordinateIndex { j, d });
    }
    let t = theta.as_slice();
    let mut args = vec![0.0; d];
    let mut acc = 0.0;
    for mask in 1u32..(1 << d) {
        if mask == 1 << j {
            acc += t[j];
            continue;
        }
        for (i, a) in args.iter_mut().enumerate() {
            *a = if mask & (1 << i) != 0 {
                t[i]
            } else if i == j {
                1.0
            } else {
                f64::INFINITY
            };
        }
        let term = rx.eval(&args);
        if mask.count_ones() % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::{empirical_r, ranks, Series};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn theta(v: &[f64]) -> ThetaVector {
        ThetaVector::new(v.to_vec()).unwrap()
    }

    /// beta = theta, alpha = 1, gamma = 1.
    fn params_from_theta(t: &[f64]) -> ModelParams {
        ModelParams::new(t.to_vec(), vec![1.0; t.len()], 1.0).unwrap()
    }

    #[test]
    fn comonotone_takes_the_smallest_finite_coordinate() {
        let c = Comonotone::new(2);
        assert_eq!(c.eval(&[0.6, 0.4]), 0.4);
        assert_eq!(c.eval(&[1.0, f64::INFINITY]), 1.0);
        let c3 = Comonotone::new(3);
        assert_eq!(c3.eval(&[f64::INFINITY, f64::INFINITY, 2.0]), 2.0);
    }

    #[test]
    fn independence_vanishes_off_the_axes() {
        let ind = Independence::new(2);
        assert_eq!(ind.eval(&[0.6, 0.4]), 0.0);
        assert_eq!(ind.eval(&[0.7, f64::INFINITY]), 0.7);
    }

    #[test]
    fn mc_t_copula_is_exact_on_the_margins() {
        let s = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let mc = McTCopula::new(4.0, &s, 1e-4, 10_000, 3).unwrap();
        assert_eq!(mc.eval(&[1.0, f64::INFINITY]), 1.0);
        assert_eq!(mc.eval(&[f64::INFINITY, 0.37]), 0.37);
    }

    #[test]
    fn mc_t_copula_joint_mass_is_strictly_inside_unit_interval() {
        let s = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let mc = McTCopula::new(4.0, &s, 1e-3, 1_000_000, 42).unwrap();
        let r = mc.eval(&[1.0, 1.0]);
        assert!(r > 0.0 && r < 1.0, "R(1,1) = {r}");
        // t copula with rho = 0.5, nu = 4 has tail dependence near 0.25.
        assert!((r - 0.25).abs() < 0.1, "R(1,1) = {r}");
    }

    #[test]
    fn mc_t_copula_approaches_comonotone_as_rho_tends_to_one() {
        let s = vec![vec![1.0, 0.999], vec![0.999, 1.0]];
        let mc = McTCopula::new(4.0, &s, 1e-3, 500_000, 7).unwrap();
        assert!(mc.eval(&[1.0, 1.0]) > 0.8);
    }

    #[test]
    fn mc_t_copula_is_deterministic_per_seed() {
        let s = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let a = McTCopula::new(4.0, &s, 1e-4, 100_000, 5).unwrap();
        let b = McTCopula::new(4.0, &s, 1e-4, 100_000, 5).unwrap();
        assert_eq!(a.eval(&[1.0, 0.7]), b.eval(&[1.0, 0.7]));
    }

    #[test]
    fn mc_t_copula_rejects_bad_inputs() {
        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(
            McTCopula::new(4.0, &bad, 1e-4, 100, 0),
            Err(TailDepError::NotPositiveDefinite)
        ));
        let s = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        assert!(matches!(
            McTCopula::new(4.0, &s, 0.0, 100, 0),
            Err(TailDepError::InvalidTailLevel(_))
        ));
    }

    #[test]
    fn empirical_evaluator_matches_empirical_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let raw: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..40).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let cols: Vec<_> = raw
            .iter()
            .map(|c| ranks(&Series::new(c.clone()).unwrap()))
            .collect();
        let k = TailCount::new(8).unwrap();
        let ev = EmpiricalTailCopula::from_ranks(&cols, k).unwrap();
        for _ in 0..300 {
            let args: Vec<f64> = (0..3)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        f64::INFINITY
                    } else {
                        rng.gen_range(0.01..5.0)
                    }
                })
                .collect();
            if args.iter().all(|a| a.is_infinite()) {
                continue;
            }
            assert_eq!(ev.eval(&args), empirical_r(&args, k, &cols).unwrap());
        }
    }

    #[test]
    fn evaluators_are_monotone_and_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let raw: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..50).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let cols: Vec<_> = raw
            .iter()
            .map(|c| ranks(&Series::new(c.clone()).unwrap()))
            .collect();
        let k = TailCount::new(10).unwrap();
        let empirical = EmpiricalTailCopula::from_ranks(&cols, k).unwrap();
        let s = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let mc = McTCopula::new(4.0, &s, 1e-3, 200_000, 11).unwrap();
        let com = Comonotone::new(2);
        let ind = Independence::new(2);
        let evaluators: Vec<(&str, &dyn TailCopula, f64)> = vec![
            ("comonotone", &com, 0.0),
            ("independence", &ind, 0.0),
            // Rank rounding shifts counts by up to half a slot of width 1/k.
            ("empirical", &empirical, 0.05),
            // Monte Carlo noise allowance at N p = 200.
            ("mc_t", &mc, 0.25),
        ];
        for (name, ev, slack) in evaluators {
            for _ in 0..100 {
                let a = rng.gen_range(0.05..1.0);
                let b = rng.gen_range(0.05..1.0);
                let bump = rng.gen_range(0.0..(1.0 - a));
                let lo = ev.eval(&[a, b]);
                let hi = ev.eval(&[a + bump, b]);
                assert!(hi >= lo, "{name} not monotone");
                assert!(lo <= a.min(b) + slack, "{name} exceeds min coordinate");
            }
            // Marginal standardization on a grid the empirical evaluator
            // resolves exactly.
            for j in 1..=10 {
                let a = j as f64 / 10.0;
                assert_eq!(ev.eval(&[a, f64::INFINITY]), a, "{name} margin at {a}");
            }
        }
    }

    #[test]
    fn model_r_under_independence_recovers_theta1() {
        let params = params_from_theta(&[0.6, 0.4]);
        let r = model_r(1.0, f64::INFINITY, 1.0, &params, &Independence::new(2)).unwrap();
        assert!((r - 0.6).abs() < 1e-15);
    }

    #[test]
    fn model_r_under_comonotonicity_recovers_theta1() {
        let params = params_from_theta(&[0.6, 0.4]);
        let r = model_r(1.0, f64::INFINITY, 1.0, &params, &Comonotone::new(2)).unwrap();
        assert!((r - 0.6).abs() < 1e-15);
    }

    #[test]
    fn model_r_with_infinite_y_reduces_to_the_covariate_copula() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let mc = McTCopula::new(4.0, &s, 1e-3, 50_000, 2).unwrap();
        let com = Comonotone::new(2);
        let ind = Independence::new(2);
        let evaluators: Vec<&dyn TailCopula> = vec![&com, &ind, &mc];
        let params = params_from_theta(&[0.6, 0.4]);
        for ev in evaluators {
            for _ in 0..50 {
                let x1 = rng.gen_range(0.05..2.0);
                let x2 = rng.gen_range(0.05..2.0);
                let direct = ev.eval(&[x1, x2]);
                let via_model = model_r(x1, x2, f64::INFINITY, &params, ev).unwrap();
                assert_eq!(via_model, direct);
            }
        }
    }

    #[test]
    fn model_r_rejects_all_infinite_coordinates() {
        let params = params_from_theta(&[0.6, 0.4]);
        assert!(matches!(
            model_r(
                f64::INFINITY,
                f64::INFINITY,
                f64::INFINITY,
                &params,
                &Comonotone::new(2)
            ),
            Err(TailDepError::AllInfinite)
        ));
    }

    /// Direct simulation of Y = max(0.6 X1, 0.4 X2) with independent unit
    /// Pareto covariates. The exceedance quantile of Y solves
    /// (1 - 0.6/y)(1 - 0.4/y) = 1 - p, a quadratic in 1/y.
    #[test]
    fn model_r_matches_a_direct_max_linear_simulation() {
        let p: f64 = 1e-4;
        let n = 4_000_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let u1 = 1.0 / p;
        let uy = (1.0 + (1.0 - 4.0 * 0.24 * p).sqrt()) / (2.0 * p);
        let mut count = 0usize;
        for _ in 0..n {
            let x1 = 1.0 / rng.gen_range(0.0..1.0_f64);
            let x2 = 1.0 / rng.gen_range(0.0..1.0_f64);
            let y = (0.6 * x1).max(0.4 * x2);
            if x1 > u1 && y > uy {
                count += 1;
            }
        }
        let simulated = count as f64 / (n as f64 * p);
        let params = params_from_theta(&[0.6, 0.4]);
        let exact = model_r(1.0, f64::INFINITY, 1.0, &params, &Independence::new(2)).unwrap();
        // Three standard errors at N p = 400 expected tail hits.
        let se = (exact / (n as f64 * p)).sqrt();
        assert!(
            (simulated - exact).abs() < 3.0 * se + 0.01,
            "simulated {simulated} vs exact {exact}"
        );
    }

    #[test]
    fn implied_r_matches_the_bivariate_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let mc = McTCopula::new(4.0, &s, 1e-3, 100_000, 8).unwrap();
        let com = Comonotone::new(2);
        let ind = Independence::new(2);
        let evaluators: Vec<&dyn TailCopula> = vec![&com, &ind, &mc];
        for ev in evaluators {
            for _ in 0..50 {
                let t = theta(&[rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)]);
                let ts = t.as_slice();
                let closed_0 = ts[0] + ev.eval(&[1.0, ts[1]]) - ev.eval(&[ts[0], ts[1]]);
                let closed_1 = ev.eval(&[ts[0], 1.0]) + ts[1] - ev.eval(&[ts[0], ts[1]]);
                assert!((implied_r_xy(0, &t, ev).unwrap() - closed_0).abs() < 1e-12);
                assert!((implied_r_xy(1, &t, ev).unwrap() - closed_1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn implied_r_comonotone_example() {
        let t = theta(&[0.6, 0.4]);
        let r = implied_r_xy(1, &t, &Comonotone::new(2)).unwrap();
        // 0.4 + min(0.6, 1) - min(0.6, 0.4) = 0.6.
        assert!((r - 0.6).abs() < 1e-15);
    }

    #[test]
    fn implied_r_independence_keeps_only_the_own_margin() {
        let t = theta(&[0.4, 0.3, 0.5]);
        let r = implied_r_xy(0, &t, &Independence::new(3)).unwrap();
        assert!((r - 0.4).abs() < 1e-15);
    }

    #[test]
    fn implied_r_stays_between_theta_and_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..100 {
            let d = rng.gen_range(2..=4);
            let tv: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..0.99)).collect();
            let t = theta(&tv);
            for j in 0..d {
                for ev in [
                    &Comonotone::new(d) as &dyn TailCopula,
                    &Independence::new(d),
                ] {
                    let r = implied_r_xy(j, &t, ev).unwrap();
                    assert!(r >= tv[j] - 1e-12 && r <= 1.0 + 1e-12, "r = {r}");
                }
            }
        }
    }

    #[test]
    fn implied_r_validates_inputs() {
        let t = theta(&[0.5, 0.5]);
        assert!(matches!(
            implied_r_xy(2, &t, &Comonotone::new(2)),
            Err(TailDepError::CoordinateIndex { .. })
        ));
        assert!(matches!(
            implied_r_xy(0, &t, &Comonotone::new(3)),
            Err(TailDepError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn theta_vector_requires_open_unit_interval() {
        assert!(ThetaVector::new(vec![0.5, 1.0]).is_err());
        assert!(ThetaVector::new(vec![0.0]).is_err());
        assert!(ThetaVector::new(vec![0.3, 0.9]).is_ok());
    }

    #[test]
    fn model_params_require_beta_below_alpha() {
        assert!(ModelParams::new(vec![0.6, 0.4], vec![1.0, 1.0], 1.0).is_ok());
        // beta = alpha puts theta on the boundary.
        assert!(matches!(
            ModelParams::new(vec![1.0], vec![1.0], 1.0),
            Err(TailDepError::InvalidTheta { .. })
        ));
        let p = ModelParams::new(vec![0.25], vec![1.0], 0.5).unwrap();
        // theta = (0.25)^(1/0.5) = 0.0625.
        assert!((p.theta().as_slice()[0] - 0.0625).abs() < 1e-15);
    }
}
