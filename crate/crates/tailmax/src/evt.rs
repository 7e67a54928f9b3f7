//! Order statistics, ranks, Hill estimation, and the rank-based tail
//! dependence counts every estimator downstream is built from.

use thiserror::Error;

/// Which series an estimator was working on when it failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesRole {
    /// 1-based covariate position.
    Covariate(usize),
    Response,
    Unlabeled,
}

impl std::fmt::Display for SeriesRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeriesRole::Covariate(j) => write!(f, "covariate {j}"),
            SeriesRole::Response => write!(f, "response"),
            SeriesRole::Unlabeled => write!(f, "series"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvtError {
    #[error("series must hold at least two values, got {0}")]
    TooShort(usize),
    #[error("series value at index {0} is not finite")]
    NonFinite(usize),
    #[error("tail count must be at least 1")]
    ZeroTailCount,
    #[error("tail count {k} must be below the series length {n}")]
    TailCountTooLarge { k: usize, n: usize },
    #[error("order statistic index {index} outside 1..={n}")]
    OrderIndex { index: usize, n: usize },
    #[error("{series}: order statistic at the tail threshold is not positive")]
    NonPositiveThreshold { series: SeriesRole },
    #[error("covariate order statistic at tail position {position} is zero")]
    ZeroDenominator { position: usize },
    #[error("integration start {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("coordinate {coord} = {value} outside (0, {max}]")]
    CoordinateOutOfDomain { coord: usize, value: f64, max: f64 },
    #[error("at least one coordinate must be finite")]
    AllInfinite,
    #[error("columns must share one length: {0} vs {1}")]
    ColumnLengthMismatch(usize, usize),
    #[error("{expected} coordinates expected, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ranks must be a permutation of 1..=n")]
    NotAPermutation,
}

/// Finite observations with the sorted copy cached at construction, so order
/// statistic lookups are O(1) and the cache never mutates afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self, EvtError> {
        if values.len() < 2 {
            return Err(EvtError::TooShort(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EvtError::NonFinite(i));
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Series { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The i-th smallest value, 1-based: `order_statistic(1)` is the minimum
    /// and `order_statistic(n)` the maximum.
    pub fn order_statistic(&self, i: usize) -> Result<f64, EvtError> {
        let n = self.len();
        if i == 0 || i > n {
            return Err(EvtError::OrderIndex { index: i, n });
        }
        Ok(self.sorted[i - 1])
    }
}

/// 1-based ranks forming a permutation of 1..=n; ties take the order the
/// values appear in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    pub fn new(ranks: Vec<usize>) -> Result<Self, EvtError> {
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r == 0 || r > n || seen[r - 1] {
                return Err(EvtError::NotAPermutation);
            }
            seen[r - 1] = true;
        }
        Ok(RankVector(ranks))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Number of upper order statistics used by a tail estimator. Must satisfy
/// `1 <= k < n`; the upper bound is checked where the series is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TailCount(usize);

impl TailCount {
    pub fn new(k: usize) -> Result<Self, EvtError> {
        if k == 0 {
            return Err(EvtError::ZeroTailCount);
        }
        Ok(TailCount(k))
    }

    pub fn get(&self) -> usize {
        self.0
    }

    pub(crate) fn check_against(&self, n: usize) -> Result<usize, EvtError> {
        if self.0 >= n {
            return Err(EvtError::TailCountTooLarge { k: self.0, n });
        }
        Ok(self.0)
    }
}

/// Ranks of a series, ties broken by original position.
pub fn ranks(s: &Series) -> RankVector {
    let n = s.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let values = s.values();
    idx.sort_unstable_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut out = vec![0usize; n];
    for (pos, &i) in idx.iter().enumerate() {
        out[i] = pos + 1;
    }
    RankVector(out)
}

/// Hill estimator of the extreme value index:
/// `(1/k) * sum_{i=1..k} log(X_{(n-i+1)} / X_{(n-k)})`.
///
/// Requires the top k+1 order statistics strictly positive, which reduces to
/// `X_{(n-k)} > 0`.
pub fn hill(s: &Series, k: TailCount) -> Result<f64, EvtError> {
    let n = s.len();
    let k = k.check_against(n)?;
    let threshold = s.order_statistic(n - k)?;
    if threshold <= 0.0 {
        return Err(EvtError::NonPositiveThreshold {
            series: SeriesRole::Unlabeled,
        });
    }
    let mut acc = 0.0;
    for i in 1..=k {
        acc += (s.order_statistic(n - i + 1)? / threshold).ln();
    }
    Ok(acc / k as f64)
}

/// Mean of the Hill estimates of the covariates and the response, the pooled
/// index used when all margins share one extreme value index.
pub fn pooled_gamma(
    covariates: &[Series],
    response: &Series,
    k: TailCount,
) -> Result<f64, EvtError> {
    let tag = |e: EvtError, role: SeriesRole| match e {
        EvtError::NonPositiveThreshold { .. } => EvtError::NonPositiveThreshold { series: role },
        other => other,
    };
    let mut acc = 0.0;
    for (j, x) in covariates.iter().enumerate() {
        acc += hill(x, k).map_err(|e| tag(e, SeriesRole::Covariate(j + 1)))?;
    }
    acc += hill(response, k).map_err(|e| tag(e, SeriesRole::Response))?;
    Ok(acc / (covariates.len() + 1) as f64)
}

/// Tail quantile ratio estimate: the integral of
/// `Y_{(n-floor(k s))} / X_{(n-floor(k s))}` over `s in [s0, 1]`, normalized
/// by the total segment weight (which telescopes to `1 - s0`).
///
/// The integrand is constant on each `[i/k, (i+1)/k)`, so the integral is an
/// exact weighted sum of order statistic ratios.
pub fn alpha_hat(y: &Series, x: &Series, k: TailCount, s0: f64) -> Result<f64, EvtError> {
    let n = y.len();
    if x.len() != n {
        return Err(EvtError::ColumnLengthMismatch(n, x.len()));
    }
    let k = k.check_against(n)?;
    if !(s0 > 0.0 && s0 < 1.0) {
        return Err(EvtError::InvalidFraction(s0));
    }
    let start = (k as f64 * s0).floor() as usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in start..k {
        let lo = (i as f64 / k as f64).max(s0);
        let hi = (i + 1) as f64 / k as f64;
        if hi <= lo {
            continue;
        }
        let xi = x.order_statistic(n - i)?;
        if xi == 0.0 {
            return Err(EvtError::ZeroDenominator { position: i });
        }
        let yi = y.order_statistic(n - i)?;
        let w = hi - lo;
        num += w * (yi / xi);
        den += w;
    }
    Ok(num / den)
}

/// Rank-based joint tail exceedance estimate. For extended-real coordinates
/// `args` (infinite entries drop out), counts the rows whose rank exceeds
/// `n - k*args_c + 1/2` in every finite coordinate `c`, divided by `k`.
///
/// Finite coordinates must lie in `(0, n/k]`; the half-rank offset keeps the
/// count centered between adjacent rank thresholds.
pub fn empirical_r(args: &[f64], k: TailCount, columns: &[RankVector]) -> Result<f64, EvtError> {
    if columns.is_empty() || args.len() != columns.len() {
        return Err(EvtError::DimensionMismatch {
            expected: columns.len(),
            got: args.len(),
        });
    }
    let n = columns[0].len();
    for c in columns {
        if c.len() != n {
            return Err(EvtError::ColumnLengthMismatch(n, c.len()));
        }
    }
    let k = k.check_against(n)?;
    let max_arg = n as f64 / k as f64;
    let mut any_finite = false;
    for (c, &a) in args.iter().enumerate() {
        if a.is_infinite() && a > 0.0 {
            continue;
        }
        if !(a > 0.0 && a <= max_arg) {
            return Err(EvtError::CoordinateOutOfDomain {
                coord: c,
                value: a,
                max: max_arg,
            });
        }
        any_finite = true;
    }
    if !any_finite {
        return Err(EvtError::AllInfinite);
    }

    let thresholds: Vec<Option<f64>> = args
        .iter()
        .map(|&a| {
            if a.is_finite() {
                Some(n as f64 - k as f64 * a + 0.5)
            } else {
                None
            }
        })
        .collect();
    let mut count = 0usize;
    for i in 0..n {
        let pass = thresholds.iter().enumerate().all(|(c, t)| match t {
            Some(t) => (columns[c].as_slice()[i] as f64) > *t,
            None => true,
        });
        if pass {
            count += 1;
        }
    }
    Ok(count as f64 / k as f64)
}
