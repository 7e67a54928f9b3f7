//! Monte Carlo study of the tail fit against the least squares baseline on
//! synthetic heavy tailed designs.
//!
//! Every design draws Student t covariates, applies a max-linear response
//! above a fixed marginal quantile and a degenerate single-covariate branch
//! below it, and reports per-coefficient mean squared errors over
//! replications. Replications are seeded independently from one master
//! seed, so results do not depend on the thread count.

use crate::dist::student_t_quantile;
use crate::evt::TailCount;
use crate::exec;
use crate::mvt;
use crate::regression::{cls_fit, fit, FitConfig, RegressionError, TailSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("degrees of freedom {0} unsupported; use 3, 4, or 5")]
    UnsupportedNu(u32),
    #[error("tail count grid is empty")]
    EmptyGrid,
    #[error("replication count must be positive")]
    NoReps,
    #[error("{estimator} failed in every replication at k = {k}")]
    AllReplicationsFailed { estimator: &'static str, k: usize },
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error("csv: {0}")]
    Csv(String),
}

pub const ESTIMATOR_TAIL: &str = "tail";
pub const ESTIMATOR_CLS: &str = "cls";

/// Synthetic designs. All use the scale matrix [[1, 0.5], [0.5, 1]] for the
/// first two covariates and noise with one extra degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Independent rows of bivariate t covariates.
    M1,
    /// As M1 with noise scaled by the covariates.
    M2,
    /// AR(1) covariate series with bivariate t innovations.
    M3,
    /// Three covariates: a bivariate t pair plus an independent t.
    D3,
}

/// A fully specified data generating process.
#[derive(Debug, Clone)]
pub struct DgpSpec {
    model: Model,
    nu: f64,
    beta: Vec<f64>,
    scale: Vec<Vec<f64>>,
    phi: f64,
    burn_in: usize,
}

const THRESHOLD_QUANTILE: f64 = 0.98;
const AR_PHI: f64 = 0.5;
const AR_BURN_IN: usize = 1000;

impl DgpSpec {
    pub fn new(model: Model, nu: u32) -> Result<Self, SimError> {
        if !(3..=5).contains(&nu) {
            return Err(SimError::UnsupportedNu(nu));
        }
        let scale = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let (beta, phi, burn_in) = match model {
            Model::M1 | Model::M2 => (vec![0.6, 0.4], 0.0, 0),
            Model::M3 => (vec![0.6, 0.4], AR_PHI, AR_BURN_IN),
            Model::D3 => (vec![0.4, 0.3, 0.5], 0.0, 0),
        };
        Ok(DgpSpec {
            model,
            nu: nu as f64,
            beta,
            scale,
            phi,
            burn_in,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_true(&self) -> &[f64] {
        &self.beta
    }

    /// Upper branch cutoff on each covariate's own scale.
    pub fn threshold(&self) -> f64 {
        student_t_quantile(THRESHOLD_QUANTILE, self.nu)
    }

    /// Draws covariate columns, then noise, then assembles the response.
    pub fn simulate(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<TailSample, SimError> {
        let mut columns = match self.model {
            Model::M1 | Model::M2 => sample_mvt(n, self.nu, &self.scale, rng)?,
            Model::M3 => sample_ar1_t(n, self.nu, &self.scale, self.phi, self.burn_in, rng)?,
            Model::D3 => sample_mvt(n, self.nu, &self.scale, rng)?,
        };
        if self.model == Model::D3 {
            let extra = sample_mvt(n, self.nu, &[vec![1.0]], rng)?;
            columns.extend(extra);
        }
        let noise = sample_mvt(n, self.nu + 1.0, &[vec![1.0]], rng)?.pop().expect("one column");
        let y = self.segmented_response(&columns, &noise);
        Ok(TailSample::new(columns, y)?)
    }

    /// Max-linear response on rows where any covariate clears the cutoff;
    /// below it the response degenerates to a single rescaled covariate.
    pub fn segmented_response(&self, columns: &[Vec<f64>], noise: &[f64]) -> Vec<f64> {
        let n = noise.len();
        let threshold = self.threshold();
        let d = self.beta.len();
        (0..n)
            .map(|i| {
                let eps = match self.model {
                    Model::M2 => {
                        columns[0][i].abs().sqrt() / 3.0 + columns[1][i].abs().sqrt() * noise[i]
                    }
                    _ => noise[i],
                };
                let upper = (0..d).any(|j| columns[j][i] > threshold);
                if upper {
                    let m = (0..d)
                        .map(|j| self.beta[j] * columns[j][i])
                        .fold(f64::NEG_INFINITY, f64::max);
                    m + eps
                } else {
                    match self.model {
                        Model::D3 => (self.beta[0] + self.beta[1]) * columns[2][i] + eps,
                        _ => self.beta[1] * columns[0][i] + eps,
                    }
                }
            })
            .collect()
    }
}

fn checked_cholesky(scale: &[Vec<f64>]) -> Result<Vec<f64>, SimError> {
    let dim = scale.len();
    let flat: Vec<f64> = scale.iter().flatten().copied().collect();
    mvt::cholesky(dim, &flat).ok_or_else(|| {
        SimError::Regression(RegressionError::InvalidConfig(
            "scale matrix is not positive definite".into(),
        ))
    })
}

/// Independent rows from a centered multivariate t, returned as columns.
pub fn sample_mvt(
    n: usize,
    nu: f64,
    scale: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>, SimError> {
    let chol = checked_cholesky(scale)?;
    Ok(mvt::draw_columns(n, nu, scale.len(), &chol, rng))
}

/// AR(1) recursion over multivariate t innovations. With `phi = 0` and no
/// burn-in the output is identical to [`sample_mvt`].
pub fn sample_ar1_t(
    n: usize,
    nu: f64,
    scale: &[Vec<f64>],
    phi: f64,
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>, SimError> {
    let chol = checked_cholesky(scale)?;
    let total = n + burn_in;
    let innovations = mvt::draw_columns(total, nu, scale.len(), &chol, rng);
    let columns = innovations
        .into_iter()
        .map(|z| {
            let mut prev = 0.0;
            let mut out = Vec::with_capacity(total);
            for zi in z {
                let x = phi * prev + zi;
                out.push(x);
                prev = x;
            }
            out.split_off(burn_in)
        })
        .collect();
    Ok(columns)
}

/// Replication study settings.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n: usize,
    pub reps: usize,
    pub k_grid: Vec<usize>,
    pub seed: u64,
    /// 0 uses the default thread pool; 1 forces sequential execution.
    pub threads: usize,
    pub s0: f64,
    pub grid_resolution: usize,
}

impl StudyConfig {
    pub fn new(n: usize, reps: usize, k_grid: Vec<usize>, seed: u64) -> Self {
        StudyConfig {
            n,
            reps,
            k_grid,
            seed,
            threads: 0,
            s0: 0.5,
            grid_resolution: 20,
        }
    }
}

/// One mean squared error cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub k: usize,
    /// 1-based coefficient position.
    pub coef: usize,
    pub estimator: String,
    pub mse: f64,
    /// Replications that produced an estimate for this cell.
    pub reps: usize,
}

/// Per-cell mean squared errors, sorted by coefficient, estimator, then k.
#[derive(Debug, Clone, PartialEq)]
pub struct MseTable {
    rows: Vec<MseRow>,
}

impl MseTable {
    pub fn rows(&self) -> &[MseRow] {
        &self.rows
    }

    pub fn mse(&self, k: usize, coef: usize, estimator: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.k == k && r.coef == coef && r.estimator == estimator)
            .map(|r| r.mse)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "coef", "estimator", "mse", "reps"])
            .map_err(|e| SimError::Csv(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.coef.to_string(),
                r.estimator.clone(),
                format!("{}", r.mse),
                r.reps.to_string(),
            ])
            .map_err(|e| SimError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| SimError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SimError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| SimError::Csv(e.to_string()))?;
            if record.len() != 5 {
                return Err(SimError::Csv(format!(
                    "expected 5 fields, got {}",
                    record.len()
                )));
            }
            let parse = |i: usize| -> Result<&str, SimError> {
                record.get(i).ok_or_else(|| SimError::Csv("short record".into()))
            };
            rows.push(MseRow {
                k: parse(0)?.parse().map_err(|_| SimError::Csv("bad k".into()))?,
                coef: parse(1)?.parse().map_err(|_| SimError::Csv("bad coef".into()))?,
                estimator: parse(2)?.to_string(),
                mse: parse(3)?.parse().map_err(|_| SimError::Csv("bad mse".into()))?,
                reps: parse(4)?.parse().map_err(|_| SimError::Csv("bad reps".into()))?,
            });
        }
        Ok(MseTable { rows })
    }
}

fn child_seed(master: u64, rep: usize) -> u64 {
    let mut z = master.wrapping_add((rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type CellErrors = Option<Vec<f64>>;

/// Runs `reps` independent replications and aggregates squared coefficient
/// errors for both estimators at every tail count in the grid.
///
/// A replication that fails for an estimator at some k is excluded from
/// that cell only; the `reps` column reports how many were kept.
pub fn run_study(spec: &DgpSpec, config: &StudyConfig) -> Result<MseTable, SimError> {
    if config.k_grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    if config.reps == 0 {
        return Err(SimError::NoReps);
    }
    let d = spec.dim();
    let grid = config.k_grid.clone();
    let per_rep = |rep: usize| -> Vec<(CellErrors, CellErrors)> {
        let seed = child_seed(config.seed, rep);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = match spec.simulate(config.n, &mut rng) {
            Ok(s) => s,
            Err(_) => return vec![(None, None); grid.len()],
        };
        grid.iter()
            .map(|&k| {
                let tail = TailCount::new(k)
                    .ok()
                    .and_then(|tc| {
                        let fc = FitConfig::new(tc)
                            .with_s0(config.s0)
                            .with_grid_resolution(config.grid_resolution);
                        fit(&sample, &fc).ok()
                    });
                let tail_err = tail.as_ref().map(|f| {
                    f.beta
                        .iter()
                        .zip(spec.beta_true())
                        .map(|(&b, &t)| (b - t) * (b - t))
                        .collect::<Vec<f64>>()
                });
                let hint = tail.as_ref().map(|f| f.beta.as_slice());
                let cls_err = TailCount::new(k).ok().and_then(|tc| {
                    cls_fit(&sample, tc, seed.wrapping_add(1), hint).ok().map(|c| {
                        c.beta
                            .iter()
                            .zip(spec.beta_true())
                            .map(|(&b, &t)| (b - t) * (b - t))
                            .collect::<Vec<f64>>()
                    })
                });
                (tail_err, cls_err)
            })
            .collect()
    };
    let outcomes = exec::map_indexed(config.reps, config.threads, per_rep);

    let mut rows = Vec::new();
    for (ki, &k) in grid.iter().enumerate() {
        for (estimator, pick) in [
            (ESTIMATOR_TAIL, 0usize),
            (ESTIMATOR_CLS, 1usize),
        ] {
            let mut sums = vec![0.0; d];
            let mut kept = 0usize;
            for outcome in &outcomes {
                let cell = if pick == 0 { &outcome[ki].0 } else { &outcome[ki].1 };
                if let Some(errs) = cell {
                    kept += 1;
                    for (s, &e) in sums.iter_mut().zip(errs) {
                        *s += e;
                    }
                }
            }
            if kept == 0 {
                return Err(SimError::AllReplicationsFailed { estimator, k });
            }
            for (j, &s) in sums.iter().enumerate() {
                rows.push(MseRow {
                    k,
                    coef: j + 1,
                    estimator: estimator.to_string(),
                    mse: s / kept as f64,
                    reps: kept,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.coef, &a.estimator, a.k).cmp(&(b.coef, &b.estimator, b.k))
    });
    Ok(MseTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::{hill, Series};

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        let mut sab = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
            sab += (x - ma) * (y - mb);
        }
        sab / (saa.sqrt() * sbb.sqrt())
    }

    #[test]
    fn bivariate_t_covariates_have_the_target_correlation() {
        let spec = DgpSpec::new(Model::M1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cols = sample_mvt(200_000, spec.nu(), &[vec![1.0, 0.5], vec![0.5, 1.0]], &mut rng).unwrap();
        let r = corr(&cols[0], &cols[1]);
        assert!((r - 0.5).abs() < 0.02, "correlation {r}");
    }

    #[test]
    fn covariate_tail_index_is_the_reciprocal_of_nu() {
        // Small tail fraction keeps the regular-variation bias below the
        // sampling noise.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cols = sample_mvt(200_000, 4.0, &[vec![1.0]], &mut rng).unwrap();
        let s = Series::new(cols[0].clone()).unwrap();
        let g = hill(&s, TailCount::new(200).unwrap()).unwrap();
        assert!((g - 0.25).abs() < 0.05, "hill {g}");
    }

    #[test]
    fn ar1_series_has_the_target_lag_one_autocorrelation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cols = sample_ar1_t(
            50_000,
            4.0,
            &[vec![1.0, 0.5], vec![0.5, 1.0]],
            0.5,
            1000,
            &mut rng,
        )
        .unwrap();
        let x = &cols[0];
        let r = corr(&x[..x.len() - 1], &x[1..]);
        assert!((r - 0.5).abs() < 0.05, "autocorrelation {r}");
    }

    #[test]
    fn ar1_with_zero_phi_and_no_burn_in_is_the_iid_sampler() {
        let scale = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let mut rng1 = ChaCha8Rng::seed_from_u64(19);
        let iid = sample_mvt(500, 4.0, &scale, &mut rng1).unwrap();
        let mut rng2 = ChaCha8Rng::seed_from_u64(19);
        let ar = sample_ar1_t(500, 4.0, &scale, 0.0, 0, &mut rng2).unwrap();
        assert_eq!(iid, ar);
    }

    #[test]
    fn response_uses_the_max_linear_branch_above_the_cutoff() {
        let spec = DgpSpec::new(Model::M1, 4).unwrap();
        let threshold = spec.threshold();
        let columns = vec![
            vec![threshold + 1.0, 0.5, 2.0 * threshold],
            vec![0.1, 0.2, 3.0 * threshold],
        ];
        let noise = vec![0.0, 0.0, 0.0];
        let y = spec.segmented_response(&columns, &noise);
        assert_eq!(y[0], 0.6 * (threshold + 1.0));
        // Below the cutoff the response follows the first covariate at the
        // second coefficient.
        assert_eq!(y[1], 0.4 * 0.5);
        // Both coefficients reach 1.2 * threshold on the third row.
        assert!((y[2] - 1.2 * threshold).abs() < 1e-12);
    }

    #[test]
    fn three_covariate_response_degenerates_to_the_third_below_the_cutoff() {
        let spec = DgpSpec::new(Model::D3, 4).unwrap();
        let columns = vec![vec![0.1], vec![0.2], vec![1.0]];
        let noise = vec![0.0];
        let y = spec.segmented_response(&columns, &noise);
        assert!((y[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn heteroscedastic_noise_scales_with_the_covariates() {
        let spec = DgpSpec::new(Model::M2, 4).unwrap();
        let columns = vec![vec![9.0], vec![4.0]];
        let noise = vec![1.0];
        let y = spec.segmented_response(&columns, &noise);
        // Upper branch: max(0.6*9, 0.4*4) + sqrt(9)/3 + sqrt(4)*1 = 5.4 + 3.
        assert!((y[0] - 8.4).abs() < 1e-12);
    }

    #[test]
    fn upper_branch_fraction_is_a_few_percent() {
        let spec = DgpSpec::new(Model::M1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sample = spec.simulate(100_000, &mut rng).unwrap();
        let threshold = spec.threshold();
        let n = sample.len();
        let hits = (0..n)
            .filter(|&i| sample.column(0)[i] > threshold || sample.column(1)[i] > threshold)
            .count();
        let fraction = hits as f64 / n as f64;
        assert!(
            (0.02..=0.06).contains(&fraction),
            "upper branch fraction {fraction}"
        );
    }

    #[test]
    fn single_replication_study_reproduces_a_direct_fit() {
        let spec = DgpSpec::new(Model::M1, 4).unwrap();
        let config = StudyConfig::new(2000, 1, vec![80], 4242);
        let table = run_study(&spec, &config).unwrap();

        let seed = child_seed(4242, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = spec.simulate(2000, &mut rng).unwrap();
        let fc = FitConfig::new(TailCount::new(80).unwrap());
        let direct = fit(&sample, &fc).unwrap();
        let want = (direct.beta[0] - 0.6) * (direct.beta[0] - 0.6);
        assert_eq!(table.mse(80, 1, ESTIMATOR_TAIL), Some(want));

        let cls = cls_fit(
            &sample,
            TailCount::new(80).unwrap(),
            seed.wrapping_add(1),
            Some(&direct.beta),
        )
        .unwrap();
        let want_cls = (cls.beta[1] - 0.4) * (cls.beta[1] - 0.4);
        assert_eq!(table.mse(80, 2, ESTIMATOR_CLS), Some(want_cls));
    }

    #[test]
    fn study_results_do_not_depend_on_the_thread_count() {
        let spec = DgpSpec::new(Model::M1, 4).unwrap();
        let mut sequential = StudyConfig::new(400, 8, vec![20, 40], 7);
        sequential.threads = 1;
        let mut parallel = sequential.clone();
        parallel.threads = 4;
        let a = run_study(&spec, &sequential).unwrap();
        let b = run_study(&spec, &parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mse_table_round_trips_through_csv() {
        let spec = DgpSpec::new(Model::M1, 4).unwrap();
        let config = StudyConfig::new(500, 3, vec![30, 50], 99);
        let table = run_study(&spec, &config).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,coef,estimator,mse,reps\n"));
        let back = MseTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(table, back);
        // Sorted by coefficient, estimator, then k.
        let keys: Vec<_> = back
            .rows()
            .iter()
            .map(|r| (r.coef, r.estimator.clone(), r.k))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn spec_validation_rejects_unsupported_degrees_of_freedom() {
        assert!(matches!(
            DgpSpec::new(Model::M1, 6),
            Err(SimError::UnsupportedNu(6))
        ));
        assert!(DgpSpec::new(Model::D3, 3).is_ok());
    }
}
