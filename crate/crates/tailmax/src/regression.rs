//! Coefficient estimation for a max-linear response over heavy tailed
//! covariates: `Y = max_j(beta_j * X_j) + noise` on the joint tail region.
//!
//! The tail estimator works on ranks alone. For each covariate the pairwise
//! tail mass `R_j(1,1)` with the response is matched against the mass
//! implied by scaled coefficients `theta`, and `beta_j` is recovered as
//! `alpha_j * theta_j^gamma`. The least squares baseline fits the same
//! max-linear form directly on tail rows.

use crate::evt::{alpha_hat, pooled_gamma, ranks, EvtError, RankVector, Series, TailCount};
use crate::taildep::{implied_r_xy, EmpiricalTailCopula, TailCopula, TailDepError, ThetaVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error(transparent)]
    Evt(#[from] EvtError),
    #[error(transparent)]
    TailDep(#[from] TailDepError),
    #[error("no candidate fits the tail: squared residual norm {norm} over {d} equations")]
    NoProgress { norm: f64, d: usize },
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Covariate columns plus a response of equal length.
#[derive(Debug, Clone)]
pub struct TailSample {
    columns: Vec<Vec<f64>>,
    response: Vec<f64>,
}

impl TailSample {
    pub fn new(columns: Vec<Vec<f64>>, response: Vec<f64>) -> Result<Self, RegressionError> {
        if columns.is_empty() {
            return Err(RegressionError::InvalidSample(
                "at least one covariate column required".into(),
            ));
        }
        let n = response.len();
        if n < 3 {
            return Err(RegressionError::InvalidSample(format!(
                "sample length {n} too short"
            )));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(RegressionError::InvalidSample(format!(
                    "column {j} has length {} but the response has {n}",
                    c.len()
                )));
            }
        }
        if columns.iter().flatten().chain(&response).any(|v| !v.is_finite()) {
            return Err(RegressionError::InvalidSample(
                "values must be finite".into(),
            ));
        }
        Ok(TailSample { columns, response })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }
}

/// Tuning for [`fit`].
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub k: TailCount,
    /// Lower end of the integration range for the tail scales, in (0, 1).
    pub s0: f64,
    /// Points per axis for the coarse search when three or more covariates
    /// are present.
    pub grid_resolution: usize,
}

impl FitConfig {
    pub fn new(k: TailCount) -> Self {
        FitConfig {
            k,
            s0: 0.5,
            grid_resolution: 20,
        }
    }

    pub fn with_s0(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }

    pub fn with_grid_resolution(mut self, grid_resolution: usize) -> Self {
        self.grid_resolution = grid_resolution;
        self
    }
}

/// Output of the rank-based tail fit.
#[derive(Debug, Clone)]
pub struct BetaFit {
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: f64,
    pub objective: f64,
    pub residuals: Vec<f64>,
}

/// Matching residuals `g_j(theta) = rhat_xy[j] - implied_r_xy(j, theta)`.
///
/// `rhat_xy[j]` is the observed pairwise tail mass of covariate `j` with the
/// response at coordinates (1, 1).
pub fn estimating_residuals(
    theta: &ThetaVector,
    rhat_xy: &[f64],
    rx: &dyn TailCopula,
) -> Result<Vec<f64>, RegressionError> {
    let d = theta.len();
    if rhat_xy.len() != d {
        return Err(TailDepError::DimensionMismatch {
            expected: d,
            got: rhat_xy.len(),
        }
        .into());
    }
    let mut g = Vec::with_capacity(d);
    for j in 0..d {
        g.push(rhat_xy[j] - implied_r_xy(j, theta, rx)?);
    }
    Ok(g)
}

fn objective_from_residuals(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |acc, &v| acc + v * v)
}

/// Candidate value for axis cell `a` of a k-cell rank grid. Interior cells
/// sit at `a/k`; the two boundary cells pull a quarter step inward so every
/// candidate stays strictly inside (0, 1).
fn grid_value(a: usize, k: usize) -> f64 {
    let kf = k as f64;
    if a == 0 {
        0.25 / kf
    } else if a == k {
        (kf - 0.25) / kf
    } else {
        a as f64 / kf
    }
}

/// Minimizer of the matching objective over the canonical candidate grid.
#[derive(Debug, Clone)]
pub struct ThetaSolution {
    pub theta: ThetaVector,
    pub objective: f64,
    pub residuals: Vec<f64>,
}

/// Minimizes `sum_j g_j(theta)^2` over scaled coefficients.
///
/// With two covariates the candidate set is the full grid of cell values
/// and the reported solution is its exact argmin, first in row-major order
/// on ties. With more covariates a coarse scan, a direct search, and a
/// local cell sweep with an exact within-cell step are used instead.
///
/// Fails with `NoProgress` when even the best candidate leaves a squared
/// residual norm above the number of equations.
pub fn solve_theta(
    rhat_xy: &[f64],
    rx: &EmpiricalTailCopula,
    grid_resolution: usize,
) -> Result<ThetaSolution, RegressionError> {
    let d = rx.dim();
    if d < 2 {
        return Err(RegressionError::InvalidSample(
            "at least two covariates required".into(),
        ));
    }
    if rhat_xy.len() != d {
        return Err(TailDepError::DimensionMismatch {
            expected: d,
            got: rhat_xy.len(),
        }
        .into());
    }
    let solution = if d == 2 {
        solve_bivariate(rhat_xy, rx)?
    } else {
        solve_multivariate(rhat_xy, rx, grid_resolution)?
    };
    if solution.objective > d as f64 {
        return Err(RegressionError::NoProgress {
            norm: solution.objective,
            d,
        });
    }
    Ok(solution)
}

/// Exact bivariate search via a joint exceedance table.
///
/// Cell `a` of the grid keeps exactly the rows whose top index in that
/// column is at most `a`, so the three tail masses at a candidate pair are
/// prefix sums. Residuals follow the same expression order as
/// [`estimating_residuals`], which keeps the two paths bitwise identical.
fn solve_bivariate(
    rhat_xy: &[f64],
    rx: &EmpiricalTailCopula,
) -> Result<ThetaSolution, RegressionError> {
    let k = rx.tail_count();
    let n = rx.sample_len();
    let cols = rx.rank_columns();
    let kf = k as f64;
    let mut joint = vec![vec![0u32; k + 1]; k + 1];
    for i in 0..n {
        let u1 = n as u32 + 1 - cols[0][i];
        let u2 = n as u32 + 1 - cols[1][i];
        if u1 as usize <= k && u2 as usize <= k {
            joint[u1 as usize][u2 as usize] += 1;
        }
    }
    for a in 0..=k {
        for b in 1..=k {
            joint[a][b] += joint[a][b - 1];
        }
        if a > 0 {
            for b in 0..=k {
                joint[a][b] += joint[a - 1][b];
            }
        }
    }
    let mut best: Option<ThetaSolution> = None;
    for a in 0..=k {
        let t1 = grid_value(a, k);
        let r_a_full = joint[a][k] as f64 / kf;
        for b in 0..=k {
            let t2 = grid_value(b, k);
            let r_joint = joint[a][b] as f64 / kf;
            let r_full_b = joint[k][b] as f64 / kf;
            let g = [
                rhat_xy[0] - ((t1 + r_full_b) - r_joint),
                rhat_xy[1] - ((r_a_full + t2) - r_joint),
            ];
            let objective = objective_from_residuals(&g);
            if best.as_ref().map_or(true, |s| objective < s.objective) {
                best = Some(ThetaSolution {
                    theta: ThetaVector::new(vec![t1, t2])?,
                    objective,
                    residuals: g.to_vec(),
                });
            }
        }
    }
    Ok(best.expect("grid is nonempty"))
}

fn clamp_theta(v: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    v.iter().map(|&t| t.clamp(lo, hi)).collect()
}

/// Coarse scan, direct search, then an exact sweep of nearby grid cells.
fn solve_multivariate(
    rhat_xy: &[f64],
    rx: &EmpiricalTailCopula,
    grid_resolution: usize,
) -> Result<ThetaSolution, RegressionError> {
    if grid_resolution < 2 {
        return Err(RegressionError::InvalidConfig(format!(
            "grid resolution {grid_resolution} below 2"
        )));
    }
    let d = rx.dim();
    let k = rx.tail_count();
    let lo = grid_value(0, k);
    let hi = grid_value(k, k);
    let evaluate = |theta_values: &[f64]| -> Result<(Vec<f64>, f64), RegressionError> {
        let theta = ThetaVector::new(theta_values.to_vec())?;
        let g = estimating_residuals(&theta, rhat_xy, rx)?;
        let objective = objective_from_residuals(&g);
        Ok((g, objective))
    };

    let mut best_theta = vec![0.0; d];
    let mut best_obj = f64::INFINITY;
    let mut best_g = vec![0.0; d];
    let consider =
        |theta_values: &[f64], g: Vec<f64>, obj: f64, best_theta: &mut Vec<f64>, best_obj: &mut f64, best_g: &mut Vec<f64>| {
            if obj < *best_obj {
                *best_obj = obj;
                *best_theta = theta_values.to_vec();
                *best_g = g;
            }
        };

    // Coarse scan in row-major order; ties keep the first candidate.
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut index = vec![0usize; d];
    loop {
        let theta_values: Vec<f64> = index
            .iter()
            .map(|&i| ((i as f64 + 0.5) / grid_resolution as f64).clamp(lo, hi))
            .collect();
        let (g, obj) = evaluate(&theta_values)?;
        consider(&theta_values, g, obj, &mut best_theta, &mut best_obj, &mut best_g);
        starts.push((obj, theta_values));
        let mut done = true;
        for axis in (0..d).rev() {
            index[axis] += 1;
            if index[axis] < grid_resolution {
                done = false;
                break;
            }
            index[axis] = 0;
        }
        if done {
            break;
        }
    }
    starts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    starts.truncate(3);

    for (_, start) in &starts {
        let mut objective = |v: &[f64]| {
            let clamped = clamp_theta(v, lo, hi);
            match evaluate(&clamped) {
                Ok((_, obj)) => obj,
                Err(_) => f64::INFINITY,
            }
        };
        let (point, _) = nelder_mead(start, 0.5 / grid_resolution as f64, 150 * d, &mut objective);
        let clamped = clamp_theta(&point, lo, hi);
        let (g, obj) = evaluate(&clamped)?;
        consider(&clamped, g, obj, &mut best_theta, &mut best_obj, &mut best_g);
    }

    // Exact sweep of the grid cells around the incumbent.
    let center: Vec<usize> = best_theta
        .iter()
        .map(|&t| ((t * k as f64).round() as isize).clamp(0, k as isize) as usize)
        .collect();
    let windows: Vec<Vec<usize>> = center
        .iter()
        .map(|&c| {
            let from = c.saturating_sub(2);
            let to = (c + 2).min(k);
            (from..=to).collect()
        })
        .collect();
    let mut cursor = vec![0usize; d];
    let mut best_cell: Vec<usize> = center.clone();
    loop {
        let cells: Vec<usize> = cursor.iter().zip(&windows).map(|(&c, w)| w[c]).collect();
        let theta_values: Vec<f64> = cells.iter().map(|&a| grid_value(a, k)).collect();
        let (g, obj) = evaluate(&theta_values)?;
        if obj < best_obj {
            best_cell = cells;
        }
        consider(&theta_values, g, obj, &mut best_theta, &mut best_obj, &mut best_g);
        let mut done = true;
        for axis in (0..d).rev() {
            cursor[axis] += 1;
            if cursor[axis] < windows[axis].len() {
                done = false;
                break;
            }
            cursor[axis] = 0;
        }
        if done {
            break;
        }
    }

    // Within a cell every residual is `c_j - theta_j` with constant `c_j`,
    // so the cell-constrained minimizer is a coordinatewise clamp.
    let at_mid: Vec<f64> = best_cell.iter().map(|&a| grid_value(a, k)).collect();
    if let Ok((g_mid, _)) = evaluate(&at_mid) {
        let kf = k as f64;
        let refined: Vec<f64> = (0..d)
            .map(|j| {
                let c = at_mid[j] + g_mid[j];
                let cell_lo = if best_cell[j] == 0 {
                    lo
                } else {
                    (best_cell[j] as f64 - 0.5) / kf
                };
                let cell_hi = if best_cell[j] == k {
                    hi
                } else {
                    (best_cell[j] as f64 + 0.5) / kf
                };
                let inset = (cell_hi - cell_lo) * 1e-6;
                c.clamp(cell_lo + inset, cell_hi - inset)
            })
            .collect();
        if let Ok((g, obj)) = evaluate(&refined) {
            consider(&refined, g, obj, &mut best_theta, &mut best_obj, &mut best_g);
        }
    }

    Ok(ThetaSolution {
        theta: ThetaVector::new(best_theta)?,
        objective: best_obj,
        residuals: best_g,
    })
}

/// Observed pairwise tail mass at (1, 1): the fraction of the top k rows of
/// `a` that are also top k rows of `b`. Integer comparison against the rank
/// cutoff matches the evaluator's threshold test exactly.
fn pair_tail_mass(a: &RankVector, b: &RankVector, k: usize) -> f64 {
    let n = a.len();
    let cut = n - k;
    let count = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .filter(|&(&ra, &rb)| ra > cut && rb > cut)
        .count();
    count as f64 / k as f64
}

/// Rank-based tail fit of max-linear coefficients.
pub fn fit(sample: &TailSample, config: &FitConfig) -> Result<BetaFit, RegressionError> {
    let d = sample.dim();
    if d < 2 {
        return Err(RegressionError::InvalidSample(
            "at least two covariates required".into(),
        ));
    }
    let x_series: Vec<Series> = sample
        .columns
        .iter()
        .map(|c| Series::new(c.clone()))
        .collect::<Result<_, _>>()?;
    let y_series = Series::new(sample.response.clone())?;
    let gamma = pooled_gamma(&x_series, &y_series, config.k)?;
    let alpha: Vec<f64> = x_series
        .iter()
        .map(|x| alpha_hat(&y_series, x, config.k, config.s0))
        .collect::<Result<_, _>>()?;
    let x_ranks: Vec<RankVector> = x_series.iter().map(ranks).collect();
    let y_ranks = ranks(&y_series);
    let k = config.k.check_against(sample.len())?;
    let rhat_xy: Vec<f64> = x_ranks
        .iter()
        .map(|xr| pair_tail_mass(xr, &y_ranks, k))
        .collect();
    let rx = EmpiricalTailCopula::from_ranks(&x_ranks, config.k)?;
    let solution = solve_theta(&rhat_xy, &rx, config.grid_resolution)?;
    let theta = solution.theta.as_slice().to_vec();
    let beta: Vec<f64> = alpha
        .iter()
        .zip(&theta)
        .map(|(&a, &t)| a * t.powf(gamma))
        .collect();
    Ok(BetaFit {
        beta,
        theta,
        alpha,
        gamma,
        objective: solution.objective,
        residuals: solution.residuals,
    })
}

/// Output of the least squares baseline.
#[derive(Debug, Clone)]
pub struct ClsFit {
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub objective: f64,
    pub n_tail: usize,
}

fn cls_objective(intercept: f64, beta: &[f64], rows: &[Vec<f64>], y: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .fold(0.0, |acc, (x, &yi)| {
            let m = x
                .iter()
                .zip(beta)
                .map(|(&xv, &b)| b * xv)
                .fold(f64::NEG_INFINITY, f64::max);
            let r = yi - intercept - m;
            acc + r * r
        })
}

/// Least squares fit of `Y = intercept + max_j(beta_j * X_j)` on the rows
/// where at least one covariate reaches its upper order statistic cutoff.
///
/// The objective is piecewise quadratic, so a direct search from several
/// starts is followed by an assignment descent: fix the argmax covariate of
/// each row, solve the resulting linear problem exactly, clamp slopes at
/// zero, and repeat until the assignment is stable. The reported fit never
/// scores worse than any start.
pub fn cls_fit(
    sample: &TailSample,
    k: TailCount,
    seed: u64,
    hint: Option<&[f64]>,
) -> Result<ClsFit, RegressionError> {
    let d = sample.dim();
    let n = sample.len();
    let k_val = k.check_against(n)?;
    if let Some(h) = hint {
        if h.len() != d {
            return Err(RegressionError::InvalidConfig(format!(
                "hint has {} coefficients, expected {d}",
                h.len()
            )));
        }
    }
    let cutoffs: Vec<f64> = (0..d)
        .map(|j| Series::new(sample.columns[j].clone()).and_then(|s| s.order_statistic(n - k_val)))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for i in 0..n {
        if (0..d).any(|j| sample.columns[j][i] >= cutoffs[j]) {
            rows.push((0..d).map(|j| sample.columns[j][i]).collect());
            y.push(sample.response[i]);
        }
    }
    let n_tail = rows.len();
    if n_tail < d + 2 {
        return Err(RegressionError::InvalidSample(format!(
            "only {n_tail} tail rows for {d} coefficients"
        )));
    }

    // Slope of the response on the rowwise max, shared across coefficients.
    let maxes: Vec<f64> = rows
        .iter()
        .map(|x| x.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mean_m = maxes.iter().sum::<f64>() / n_tail as f64;
    let mean_y = y.iter().sum::<f64>() / n_tail as f64;
    let var_m = maxes.iter().map(|&m| (m - mean_m) * (m - mean_m)).sum::<f64>();
    let cov = maxes
        .iter()
        .zip(&y)
        .map(|(&m, &yi)| (m - mean_m) * (yi - mean_y))
        .sum::<f64>();
    let slope = if var_m > 0.0 { cov / var_m } else { 0.0 };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut base = vec![mean_y - slope * mean_m];
    base.extend(std::iter::repeat(slope).take(d));
    starts.push(base.clone());
    if let Some(h) = hint {
        let mut s = vec![0.0];
        s.extend_from_slice(h);
        starts.push(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = slope.abs().max(mean_y.abs() / mean_m.abs().max(1.0)).max(1e-3);
    for _ in 0..3 {
        let mut s = vec![base[0] + rng.gen_range(-1.0..1.0) * spread];
        for j in 0..d {
            s.push((base[j + 1].abs().max(0.1 * spread)) * (rng.gen_range(-0.7..0.7_f64)).exp());
        }
        starts.push(s);
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |params: &[f64], best: &mut Option<(f64, Vec<f64>)>| {
        let obj = cls_objective(params[0], &params[1..], &rows, &y);
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            *best = Some((obj, params.to_vec()));
        }
    };
    for start in &starts {
        consider(start, &mut best);
        let mut objective = |p: &[f64]| cls_objective(p[0], &p[1..], &rows, &y);
        let step = spread.max(mean_y.abs() * 0.1).max(1e-2);
        let (point, _) = nelder_mead(start, step, 300, &mut objective);
        consider(&point, &mut best);
        if let Some(polished) = assignment_descent(&point, &rows, &y) {
            consider(&polished, &mut best);
        }
    }
    let (objective, params) = best.expect("at least one start");
    Ok(ClsFit {
        intercept: params[0],
        beta: params[1..].to_vec(),
        objective,
        n_tail,
    })
}

/// Alternates between fixing each row's argmax covariate and solving the
/// induced linear least squares exactly. Slopes are clamped at zero; ties
/// pick the lowest covariate index. Returns the best parameters seen.
fn assignment_descent(start: &[f64], rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let d = rows[0].len();
    let mut params = start.to_vec();
    let mut best = (cls_objective(params[0], &params[1..], rows, y), params.clone());
    let mut assignment: Vec<usize> = Vec::new();
    for _ in 0..50 {
        let next: Vec<usize> = rows
            .iter()
            .map(|x| {
                let mut arg = 0;
                let mut top = params[1] * x[0];
                for j in 1..d {
                    let v = params[1 + j] * x[j];
                    if v > top {
                        top = v;
                        arg = j;
                    }
                }
                arg
            })
            .collect();
        let p = d + 1;
        let mut ata = vec![vec![0.0; p]; p];
        let mut atb = vec![0.0; p];
        for (i, x) in rows.iter().enumerate() {
            // Design row: intercept plus the assigned covariate's value.
            let col = 1 + next[i];
            let xv = x[next[i]];
            ata[0][0] += 1.0;
            ata[0][col] += xv;
            ata[col][0] += xv;
            ata[col][col] += xv * xv;
            atb[0] += y[i];
            atb[col] += xv * y[i];
        }
        for j in 0..p {
            // Unused covariates get a pinned zero slope.
            if ata[j][j] == 0.0 {
                ata[j][j] = 1.0;
                atb[j] = 0.0;
            }
        }
        let solved = solve_linear(ata, atb)?;
        params = solved;
        for b in params.iter_mut().skip(1) {
            if *b < 0.0 {
                *b = 0.0;
            }
        }
        let obj = cls_objective(params[0], &params[1..], rows, y);
        if obj < best.0 {
            best = (obj, params.clone());
        }
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Some(best.1)
}

fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let p = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..p {
            let f = a[row][col] / a[col][col];
            for c in col..p {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for col in (0..p).rev() {
        let mut v = b[col];
        for c in (col + 1)..p {
            v -= a[col][c] * x[c];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

/// Standard simplex direct search with reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5. The best vertex only ever improves, so the
/// returned point is the best one evaluated.
fn nelder_mead(
    start: &[f64],
    step: f64,
    iterations: usize,
    f: &mut impl FnMut(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), f(start)));
    for j in 0..d {
        let mut v = start.to_vec();
        v[j] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let worst = simplex[d].clone();
        let second = simplex[d - 1].1;
        let best = simplex[0].1;
        let mut centroid = vec![0.0; d];
        for v in &simplex[..d] {
            for j in 0..d {
                centroid[j] += v.0[j];
            }
        }
        for c in centroid.iter_mut() {
            *c /= d as f64;
        }
        let reflect: Vec<f64> = (0..d).map(|j| centroid[j] + (centroid[j] - worst.0[j])).collect();
        let fr = f(&reflect);
        if fr < best {
            let expand: Vec<f64> = (0..d)
                .map(|j| centroid[j] + 2.0 * (centroid[j] - worst.0[j]))
                .collect();
            let fe = f(&expand);
            simplex[d] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < second {
            simplex[d] = (reflect, fr);
        } else {
            let contract: Vec<f64> = (0..d)
                .map(|j| centroid[j] + 0.5 * (worst.0[j] - centroid[j]))
                .collect();
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[d] = (contract, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for j in 0..d {
                        v.0[j] = anchor[j] + 0.5 * (v.0[j] - anchor[j]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let (v, fv) = simplex.swap_remove(0);
    (v, fv)
}
