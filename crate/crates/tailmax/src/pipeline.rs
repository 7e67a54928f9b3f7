//! Panel ingestion and the applied workflow: index construction,
//! declustering, tail index diagnostics, marginal rescaling, per-entity
//! coefficient fits, and the dominance proportion over the joint tail.

use crate::dist::normal_quantile;
use crate::evt::{hill, EvtError, Series, TailCount};
use crate::exec;
use crate::regression::{fit, FitConfig, RegressionError, TailSample};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("row {row}, column {column}: {detail}")]
    Parse {
        row: usize,
        column: String,
        detail: String,
    },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("empty panel: no data rows")]
    EmptyPanel,
    #[error("no entity columns after the date column")]
    NoEntities,
    #[error("need at least two rows, found {0}")]
    TooFewRows(usize),
    #[error("nonpositive price {value} at row {row}, column {column}")]
    NonPositivePrice {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("dates not strictly increasing at row {0}")]
    UnorderedDates(usize),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("returns mode requires a market column")]
    MarketRequired,
    #[error("k_star {k_star} must be below k {k}")]
    KStarTooLarge { k_star: usize, k: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate series: zero standard deviation")]
    DegenerateSeries,
    #[error("tail event set is empty")]
    EmptySet,
    #[error(transparent)]
    Evt(#[from] EvtError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error("io: {0}")]
    Io(String),
}

/// Whether panel values are prices to be turned into losses, or
/// nonnegative amounts used as-is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelMode {
    Returns,
    Levels,
}

/// Rectangular panel: one date per row, one numeric column per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    dates: Vec<String>,
    entities: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl PanelData {
    pub fn new(
        dates: Vec<String>,
        entities: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self, PipelineError> {
        if entities.is_empty() {
            return Err(PipelineError::NoEntities);
        }
        if dates.is_empty() {
            return Err(PipelineError::EmptyPanel);
        }
        if columns.len() != entities.len() || columns.iter().any(|c| c.len() != dates.len()) {
            return Err(PipelineError::InvalidConfig(
                "columns must match entities and dates".into(),
            ));
        }
        for i in 1..dates.len() {
            if dates[i] <= dates[i - 1] {
                return Err(PipelineError::UnorderedDates(i + 1));
            }
        }
        Ok(PanelData {
            dates,
            entities,
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[f64]> {
        self.entities
            .iter()
            .position(|e| e == name)
            .map(|j| self.columns[j].as_slice())
    }
}

/// Parses a panel from CSV text: a header, a leading date column, and one
/// numeric column per entity. Returns mode additionally requires strictly
/// positive values.
pub fn read_panel_csv<R: Read>(reader: R, mode: PanelMode) -> Result<PanelData, PipelineError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| PipelineError::Io(e.to_string()))?
        .clone();
    if headers.len() < 2 {
        return Err(PipelineError::NoEntities);
    }
    let entities: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let m = entities.len();
    let mut dates = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); m];
    for (idx, record) in r.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| PipelineError::Io(e.to_string()))?;
        if record.len() != m + 1 {
            return Err(PipelineError::Ragged {
                row,
                expected: m + 1,
                found: record.len(),
            });
        }
        let date = record.get(0).unwrap_or("").trim();
        if date.is_empty() {
            return Err(PipelineError::Parse {
                row,
                column: "date".into(),
                detail: "blank cell".into(),
            });
        }
        dates.push(date.to_string());
        for j in 0..m {
            let field = record.get(j + 1).unwrap_or("").trim();
            if field.is_empty() {
                return Err(PipelineError::Parse {
                    row,
                    column: entities[j].clone(),
                    detail: "blank cell".into(),
                });
            }
            let value: f64 = field.parse().map_err(|_| PipelineError::Parse {
                row,
                column: entities[j].clone(),
                detail: format!("cannot parse {field:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(PipelineError::Parse {
                    row,
                    column: entities[j].clone(),
                    detail: "value is not finite".into(),
                });
            }
            if mode == PanelMode::Returns && value <= 0.0 {
                return Err(PipelineError::NonPositivePrice {
                    row,
                    column: entities[j].clone(),
                    value,
                });
            }
            columns[j].push(value);
        }
    }
    if dates.is_empty() {
        return Err(PipelineError::EmptyPanel);
    }
    PanelData::new(dates, entities, columns)
}

pub fn load_panel_csv(path: impl AsRef<Path>, mode: PanelMode) -> Result<PanelData, PipelineError> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| PipelineError::Io(e.to_string()))?;
    read_panel_csv(file, mode)
}

/// Price panel to per-period losses: `-log(P_i / P_{i-1})`, one row
/// shorter.
pub fn neg_log_returns(panel: &PanelData) -> Result<PanelData, PipelineError> {
    let n = panel.len();
    if n < 2 {
        return Err(PipelineError::TooFewRows(n));
    }
    for (j, col) in panel.columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            if v <= 0.0 {
                return Err(PipelineError::NonPositivePrice {
                    row: i + 1,
                    column: panel.entities[j].clone(),
                    value: v,
                });
            }
        }
    }
    let columns = panel
        .columns
        .iter()
        .map(|col| (1..n).map(|i| -(col[i] / col[i - 1]).ln()).collect())
        .collect();
    PanelData::new(panel.dates[1..].to_vec(), panel.entities.clone(), columns)
}

/// Index pair for the fit: `x2` is the rowwise maximum over all entities;
/// `x1` is the named market column, or the rowwise mean when none is given.
pub fn build_indices(
    panel: &PanelData,
    market: Option<&str>,
) -> Result<(Vec<f64>, Vec<f64>), PipelineError> {
    if panel.is_empty() {
        return Err(PipelineError::EmptyPanel);
    }
    let n = panel.len();
    let m = panel.n_entities();
    let x1 = match market {
        Some(name) => panel
            .column_by_name(name)
            .ok_or_else(|| PipelineError::UnknownColumn(name.to_string()))?
            .to_vec(),
        None => (0..n)
            .map(|i| panel.columns.iter().map(|c| c[i]).sum::<f64>() / m as f64)
            .collect(),
    };
    let x2 = (0..n)
        .map(|i| {
            panel
                .columns
                .iter()
                .map(|c| c[i])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok((x1, x2))
}

/// Keeps every stride-th observation starting at the first.
pub fn decluster(values: &[f64], stride: usize) -> Vec<f64> {
    assert!(stride >= 1);
    values.iter().copied().step_by(stride).collect()
}

/// Normal-approximation interval around a Hill estimate, using the
/// estimator's asymptotic variance `gamma^2 / k`.
pub fn hill_ci(gamma_hat: f64, k: usize, confidence: f64) -> (f64, f64) {
    let z = normal_quantile((1.0 + confidence) / 2.0);
    let width = z * gamma_hat / (k as f64).sqrt();
    (gamma_hat - width, gamma_hat + width)
}

/// Hill estimate plus its confidence interval.
pub fn gamma_ci(
    series: &Series,
    k: TailCount,
    confidence: f64,
) -> Result<(f64, (f64, f64)), PipelineError> {
    let gamma_hat = hill(series, k)?;
    Ok((gamma_hat, hill_ci(gamma_hat, k.get(), confidence)))
}

/// Sample standard deviation with the n-1 denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 2);
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

fn signed_power(v: f64, exponent: f64) -> f64 {
    let m = v.abs().powf(exponent);
    if v > 0.0 {
        m
    } else if v < 0.0 {
        -m
    } else {
        0.0
    }
}

/// Rescales a response so its tail matches the reference index: each value
/// becomes `|y|^(gamma1/gamma_y) * sign(y)`, then the whole series is
/// scaled back to the original standard deviation. Ranks and signs are
/// preserved; equal indices return the input unchanged.
pub fn marginal_transform(
    y: &[f64],
    gamma1: f64,
    gamma_y: f64,
) -> Result<Vec<f64>, PipelineError> {
    if !(gamma1 > 0.0 && gamma_y > 0.0) {
        return Err(PipelineError::InvalidConfig(
            "tail indices must be positive".into(),
        ));
    }
    if y.len() < 2 {
        return Err(PipelineError::TooFewRows(y.len()));
    }
    let exponent = gamma1 / gamma_y;
    let tilde: Vec<f64> = y.iter().map(|&v| signed_power(v, exponent)).collect();
    let sd_tilde = sample_sd(&tilde);
    if sd_tilde == 0.0 {
        return Err(PipelineError::DegenerateSeries);
    }
    let scale = sample_sd(y) / sd_tilde;
    Ok(tilde.into_iter().map(|v| v * scale).collect())
}

/// Indices where either coordinate exceeds its own (n - k_star)-th order
/// statistic, strictly.
pub fn tail_event_set(
    x1: &[f64],
    x2: &[f64],
    k_star: TailCount,
) -> Result<Vec<usize>, PipelineError> {
    if x1.len() != x2.len() {
        return Err(EvtError::ColumnLengthMismatch(x1.len(), x2.len()).into());
    }
    let n = x1.len();
    let k = k_star.check_against(n)?;
    let s1 = Series::new(x1.to_vec())?;
    let s2 = Series::new(x2.to_vec())?;
    let t1 = s1.order_statistic(n - k)?;
    let t2 = s2.order_statistic(n - k)?;
    Ok((0..n).filter(|&i| x1[i] > t1 || x2[i] > t2).collect())
}

/// Fraction of the index set where `beta[0] * x1 > beta[1] * x2`, ties
/// counting against.
pub fn dominance_proportion(
    x1: &[f64],
    x2: &[f64],
    beta: &[f64],
    c: &[usize],
) -> Result<f64, PipelineError> {
    if c.is_empty() {
        return Err(PipelineError::EmptySet);
    }
    debug_assert_eq!(beta.len(), 2);
    let count = c
        .iter()
        .filter(|&&i| beta[0] * x1[i] > beta[1] * x2[i])
        .count();
    Ok(count as f64 / c.len() as f64)
}

/// Settings for [`analyze`].
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub k: TailCount,
    pub k_star: TailCount,
    pub decluster_stride: usize,
    pub s0: f64,
    pub ci_confidence: f64,
    pub mode: PanelMode,
}

impl AnalysisConfig {
    /// Price panels: losses are declustered by taking every second row.
    pub fn returns_default() -> Self {
        AnalysisConfig {
            k: TailCount::new(40).expect("positive"),
            k_star: TailCount::new(20).expect("positive"),
            decluster_stride: 2,
            s0: 0.5,
            ci_confidence: 0.95,
            mode: PanelMode::Returns,
        }
    }

    /// Amount panels arrive pre-declustered, so the stride is 1.
    pub fn levels_default() -> Self {
        AnalysisConfig {
            k: TailCount::new(60).expect("positive"),
            k_star: TailCount::new(20).expect("positive"),
            decluster_stride: 1,
            s0: 0.5,
            ci_confidence: 0.95,
            mode: PanelMode::Levels,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k_star.get() >= self.k.get() {
            return Err(PipelineError::KStarTooLarge {
                k_star: self.k_star.get(),
                k: self.k.get(),
            });
        }
        if self.decluster_stride < 1 {
            return Err(PipelineError::InvalidConfig(
                "decluster stride must be at least 1".into(),
            ));
        }
        if !(self.s0 > 0.0 && self.s0 < 1.0) {
            return Err(PipelineError::InvalidConfig(
                "s0 must lie in (0, 1)".into(),
            ));
        }
        if !(self.ci_confidence >= 0.0 && self.ci_confidence < 1.0) {
            return Err(PipelineError::InvalidConfig(
                "confidence must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One Hill-plot point on the reference index.
#[derive(Debug, Clone, PartialEq)]
pub struct HillPoint {
    pub k: usize,
    pub gamma_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-entity outcome; failed stages leave the later fields unset and the
/// error column filled.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityRow {
    pub entity: String,
    pub gamma_y: Option<f64>,
    pub in_ci: Option<bool>,
    pub transformed: Option<bool>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub p_c: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub rows: Vec<EntityRow>,
    pub hill_curve: Vec<HillPoint>,
}

/// Full panel workflow.
///
/// Returns mode first converts prices to losses and requires `market` to
/// name the reference column; levels mode uses the cross-sectional mean as
/// the reference. Everything is declustered by the configured stride. Each
/// entity's tail index is compared against the reference interval, the
/// response is rescaled when it falls outside, and the max-linear fit plus
/// the dominance proportion over the joint tail are recorded per entity.
/// Entity failures land in their row's error column.
pub fn analyze(
    panel: &PanelData,
    config: &AnalysisConfig,
    market: Option<&str>,
) -> Result<AnalysisReport, PipelineError> {
    config.validate()?;
    let prepared = match config.mode {
        PanelMode::Returns => neg_log_returns(panel)?,
        PanelMode::Levels => panel.clone(),
    };
    if config.mode == PanelMode::Returns && market.is_none() {
        return Err(PipelineError::MarketRequired);
    }
    if let Some(name) = market {
        if prepared.column_by_name(name).is_none() {
            return Err(PipelineError::UnknownColumn(name.to_string()));
        }
    }
    let market_arg = match config.mode {
        PanelMode::Returns => market,
        PanelMode::Levels => None,
    };
    let (x1, x2) = build_indices(&prepared, market_arg)?;
    let x1d = decluster(&x1, config.decluster_stride);
    let x2d = decluster(&x2, config.decluster_stride);
    let s1 = Series::new(x1d.clone())?;
    let s2 = Series::new(x2d.clone())?;
    let (gamma1, (ci_lower, ci_upper)) = gamma_ci(&s1, config.k, config.ci_confidence)?;
    let gamma2 = hill(&s2, config.k)?;

    let k_max = (x1d.len() - 1).min(100.max(2 * config.k.get()));
    let mut hill_curve = Vec::new();
    for k in 1..=k_max {
        match gamma_ci(&s1, TailCount::new(k).expect("positive"), config.ci_confidence) {
            Ok((g, (lo, hi))) => hill_curve.push(HillPoint {
                k,
                gamma_hat: g,
                lower: lo,
                upper: hi,
            }),
            Err(_) => break,
        }
    }

    let tail_set = tail_event_set(&x1d, &x2d, config.k_star)?;
    let analyze_entity = |j: usize| -> EntityRow {
        let entity = prepared.entities()[j].clone();
        let mut row = EntityRow {
            entity,
            gamma_y: None,
            in_ci: None,
            transformed: None,
            beta1: None,
            beta2: None,
            p_c: None,
            error: None,
        };
        let yd = decluster(prepared.column(j), config.decluster_stride);
        let y_series = match Series::new(yd.clone()) {
            Ok(s) => s,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        };
        let gamma_y = match hill(&y_series, config.k) {
            Ok(g) => g,
            Err(e) => {
                row.error = Some(format!("tail index: {e}"));
                return row;
            }
        };
        row.gamma_y = Some(gamma_y);
        let in_ci = gamma_y >= ci_lower && gamma_y <= ci_upper;
        row.in_ci = Some(in_ci);
        row.transformed = Some(!in_ci);
        let y_used = if in_ci {
            yd
        } else {
            match marginal_transform(&yd, gamma1, gamma_y) {
                Ok(t) => t,
                Err(e) => {
                    row.error = Some(format!("marginal transform: {e}"));
                    return row;
                }
            }
        };
        let sample = match TailSample::new(vec![x1d.clone(), x2d.clone()], y_used) {
            Ok(s) => s,
            Err(e) => {
                row.error = Some(format!("sample: {e}"));
                return row;
            }
        };
        let fc = FitConfig::new(config.k).with_s0(config.s0);
        let fitted = match fit(&sample, &fc) {
            Ok(f) => f,
            Err(e) => {
                row.error = Some(format!("fit: {e}"));
                return row;
            }
        };
        row.beta1 = Some(fitted.beta[0]);
        row.beta2 = Some(fitted.beta[1]);
        match dominance_proportion(&x1d, &x2d, &fitted.beta, &tail_set) {
            Ok(p) => row.p_c = Some(p),
            Err(e) => {
                row.error = Some(format!("dominance: {e}"));
            }
        }
        row
    };
    let rows = exec::map_indexed(prepared.n_entities(), 0, analyze_entity);

    Ok(AnalysisReport {
        gamma1,
        gamma2,
        ci_lower,
        ci_upper,
        rows,
        hill_curve,
    })
}

/// Six significant digits, plain notation for moderate magnitudes.
pub fn g6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if !(-4..6).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    } else {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

fn opt_g6(v: Option<f64>) -> String {
    v.map(g6).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(report: &AnalysisReport, writer: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "entity",
        "gamma_y",
        "in_ci",
        "transformed",
        "beta1",
        "beta2",
        "p_C",
        "error",
    ])
    .map_err(|e| PipelineError::Io(e.to_string()))?;
    for r in &report.rows {
        w.write_record([
            r.entity.clone(),
            opt_g6(r.gamma_y),
            opt_bool(r.in_ci),
            opt_bool(r.transformed),
            opt_g6(r.beta1),
            opt_g6(r.beta2),
            opt_g6(r.p_c),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| PipelineError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| PipelineError::Io(e.to_string()))
}

pub fn write_hill_csv<W: Write>(curve: &[HillPoint], writer: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "gamma_hat", "ci_lower", "ci_upper"])
        .map_err(|e| PipelineError::Io(e.to_string()))?;
    for p in curve {
        w.write_record([
            p.k.to_string(),
            g6(p.gamma_hat),
            g6(p.lower),
            g6(p.upper),
        ])
        .map_err(|e| PipelineError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| PipelineError::Io(e.to_string()))
}

/// Scatter rows for entities that produced estimates.
pub fn write_scatter_csv<W: Write>(report: &AnalysisReport, writer: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["entity", "beta1", "beta2", "p_C"])
        .map_err(|e| PipelineError::Io(e.to_string()))?;
    for r in &report.rows {
        if let (Some(b1), Some(b2), Some(p)) = (r.beta1, r.beta2, r.p_c) {
            w.write_record([r.entity.clone(), g6(b1), g6(b2), g6(p)])
                .map_err(|e| PipelineError::Io(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| PipelineError::Io(e.to_string()))
}
