//! Ordinary least squares with absorbed fixed effects.
//!
//! The design is factored with Householder QR, processing columns in order;
//! a column whose component orthogonal to the earlier columns vanishes is
//! reported as collinear. Coefficient covariance comes from a named
//! [`CovarianceEstimator`] (`classical` or `hc1`).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalyticsError;
use crate::registry::Registry;

pub const INTERCEPT: &str = "(intercept)";

/// Relative threshold below which a column counts as linearly dependent.
const RANK_TOL: f64 = 1e-9;

/// Named covariate columns, all of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Design {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Design {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, column: Vec<f64>) -> Result<Self, AnalyticsError> {
        self.push(name, column)?;
        Ok(self)
    }

    pub fn push(&mut self, name: &str, column: Vec<f64>) -> Result<(), AnalyticsError> {
        if let Some(first) = self.columns.first() {
            if first.len() != column.len() {
                return Err(AnalyticsError::InvalidInput(format!(
                    "column `{name}` has {} rows, expected {}",
                    column.len(),
                    first.len()
                )));
            }
        }
        if self.names.iter().any(|n| n == name) {
            return Err(AnalyticsError::InvalidInput(format!("duplicate column `{name}`")));
        }
        if column.iter().any(|x| !x.is_finite()) {
            return Err(AnalyticsError::InvalidInput(format!("column `{name}` has NaN/inf")));
        }
        self.names.push(name.to_string());
        self.columns.push(column);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

/// A categorical column absorbed as drop-first dummy variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEffect {
    pub name: String,
    pub levels: Vec<String>,
}

impl FixedEffect {
    pub fn new(name: &str, levels: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsOptions {
    pub intercept: bool,
    pub fixed_effects: Vec<FixedEffect>,
    /// Covariates z-scored before fitting.
    pub standardize: BTreeSet<String>,
    pub standardize_outcome: bool,
    /// Registered covariance estimator name.
    pub se: String,
    pub outcome_name: String,
}

impl Default for OlsOptions {
    fn default() -> Self {
        Self {
            intercept: true,
            fixed_effects: Vec::new(),
            standardize: BTreeSet::new(),
            standardize_outcome: false,
            se: "classical".into(),
            outcome_name: "y".into(),
        }
    }
}

impl OlsOptions {
    pub fn robust(mut self) -> Self {
        self.se = "hc1".into();
        self
    }

    pub fn standardizing<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.standardize.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn with_fixed_effect(mut self, fe: FixedEffect) -> Self {
        self.fixed_effects.push(fe);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub outcome: String,
    pub terms: Vec<Term>,
    pub n_obs: usize,
    pub df_resid: usize,
    pub r_squared: f64,
    pub se_kind: String,
    /// Names of absorbed fixed-effect groups.
    pub fixed_effects: Vec<String>,
}

impl RegressionFit {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn coefficients(&self) -> BTreeMap<String, f64> {
        self.terms.iter().map(|t| (t.name.clone(), t.estimate)).collect()
    }

    pub fn std_errors(&self) -> BTreeMap<String, f64> {
        self.terms.iter().map(|t| (t.name.clone(), t.std_error)).collect()
    }

    /// Terms that are neither the intercept nor fixed-effect dummies.
    pub fn covariate_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms
            .iter()
            .filter(|t| t.name != INTERCEPT && !t.name.starts_with("fe:"))
    }
}

/// Inputs a covariance estimator works from.
pub struct FitContext<'a> {
    /// Design columns, including intercept and dummies.
    pub columns: &'a [Vec<f64>],
    pub residuals: &'a [f64],
    /// `(XᵀX)⁻¹`, row-major `p × p`.
    pub xtx_inv: &'a [Vec<f64>],
}

impl FitContext<'_> {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }
}

/// Strategy for the coefficient covariance matrix.
pub trait CovarianceEstimator: Send + Sync {
    fn name(&self) -> &str;
    fn covariance(&self, ctx: &FitContext<'_>) -> Vec<Vec<f64>>;
}

/// `σ̂² (XᵀX)⁻¹` with `σ̂² = RSS / (n − p)`.
pub struct Classical;

impl CovarianceEstimator for Classical {
    fn name(&self) -> &str {
        "classical"
    }

    fn covariance(&self, ctx: &FitContext<'_>) -> Vec<Vec<f64>> {
        let rss: f64 = ctx.residuals.iter().map(|e| e * e).sum();
        let sigma2 = rss / (ctx.n() - ctx.p()) as f64;
        ctx.xtx_inv
            .iter()
            .map(|row| row.iter().map(|x| x * sigma2).collect())
            .collect()
    }
}

/// White's heteroskedasticity-consistent sandwich with the `n / (n − p)`
/// small-sample factor.
pub struct Hc1;

impl CovarianceEstimator for Hc1 {
    fn name(&self) -> &str {
        "hc1"
    }

    fn covariance(&self, ctx: &FitContext<'_>) -> Vec<Vec<f64>> {
        let (n, p) = (ctx.n(), ctx.p());
        // meat = Xᵀ diag(e²) X
        let mut meat = vec![vec![0.0; p]; p];
        for a in 0..p {
            for b in a..p {
                let s: f64 = (0..n)
                    .map(|i| ctx.columns[a][i] * ctx.columns[b][i] * ctx.residuals[i].powi(2))
                    .sum();
                meat[a][b] = s;
                meat[b][a] = s;
            }
        }
        let scale = n as f64 / (n - p) as f64;
        let left = mat_mul(ctx.xtx_inv, &meat);
        let mut cov = mat_mul(&left, ctx.xtx_inv);
        cov.iter_mut().flatten().for_each(|x| *x *= scale);
        cov
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..p)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub type CovarianceRegistry = Registry<(), dyn CovarianceEstimator, AnalyticsError>;

pub fn builtin_covariance_registry() -> CovarianceRegistry {
    let mut r = CovarianceRegistry::new("standard error estimator");
    r.register("classical", |_: &()| Ok(Box::new(Classical) as Box<dyn CovarianceEstimator>))
        .expect("fresh registry");
    r.register("hc1", |_: &()| Ok(Box::new(Hc1) as Box<dyn CovarianceEstimator>))
        .expect("fresh registry");
    r
}

fn covariance_estimator(name: &str) -> Result<Box<dyn CovarianceEstimator>, AnalyticsError> {
    static REGISTRY: OnceLock<CovarianceRegistry> = OnceLock::new();
    REGISTRY
        .get_or_init(builtin_covariance_registry)
        .create(name, &())?
}

/// Z-score with the sample (n − 1) standard deviation.
pub fn zscore(xs: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    let n = xs.len();
    if n < 2 {
        return Err(AnalyticsError::InvalidInput("need at least 2 values to standardize".into()));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // rounding in the mean can leave a tiny variance for constant input
    if var <= 0.0 || xs.iter().all(|x| *x == xs[0]) {
        return Err(AnalyticsError::InvalidInput("zero variance column".into()));
    }
    let sd = var.sqrt();
    Ok(xs.iter().map(|x| (x - mean) / sd).collect())
}

/// Fit `outcome` on `design` (plus intercept and fixed-effect dummies).
pub fn ols_fit(
    design: &Design,
    outcome: &[f64],
    options: &OlsOptions,
) -> Result<RegressionFit, AnalyticsError> {
    let n = outcome.len();
    if n == 0 {
        return Err(AnalyticsError::EmptyInput);
    }
    if !design.columns.is_empty() && design.n_rows() != n {
        return Err(AnalyticsError::InvalidInput(format!(
            "design has {} rows, outcome {n}",
            design.n_rows()
        )));
    }
    if outcome.iter().any(|y| !y.is_finite()) {
        return Err(AnalyticsError::InvalidInput("outcome has NaN/inf".into()));
    }

    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if options.intercept {
        names.push(INTERCEPT.to_string());
        columns.push(vec![1.0; n]);
    }
    for (name, col) in design.names.iter().zip(&design.columns) {
        let col = if options.standardize.contains(name) {
            zscore(col).map_err(|_| AnalyticsError::RankDeficient { column: name.clone() })?
        } else {
            col.clone()
        };
        names.push(name.clone());
        columns.push(col);
    }
    if let Some(missing) = options
        .standardize
        .iter()
        .find(|s| !design.names.contains(s))
    {
        return Err(AnalyticsError::InvalidInput(format!(
            "cannot standardize unknown column `{missing}`"
        )));
    }
    for fe in &options.fixed_effects {
        if fe.levels.len() != n {
            return Err(AnalyticsError::InvalidInput(format!(
                "fixed effect `{}` has {} rows, expected {n}",
                fe.name,
                fe.levels.len()
            )));
        }
        let levels: BTreeSet<&String> = fe.levels.iter().collect();
        for level in levels.into_iter().skip(1) {
            names.push(format!("fe:{}={}", fe.name, level));
            columns.push(fe.levels.iter().map(|l| f64::from(l == level)).collect());
        }
    }
    let y = if options.standardize_outcome {
        zscore(outcome)?
    } else {
        outcome.to_vec()
    };

    let p = columns.len();
    if p == 0 {
        return Err(AnalyticsError::InvalidInput("no regressors".into()));
    }
    if n <= p {
        return Err(AnalyticsError::InsufficientObservations { n_obs: n, n_params: p });
    }

    let qr = HouseholderQr::factor(&columns, &names)?;
    let beta = qr.solve(&y);
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - columns.iter().zip(&beta).map(|(c, b)| c[i] * b).sum::<f64>())
        .collect();
    let xtx_inv = qr.xtx_inverse();

    let estimator = covariance_estimator(&options.se)?;
    let cov = estimator.covariance(&FitContext {
        columns: &columns,
        residuals: &residuals,
        xtx_inv: &xtx_inv,
    });

    let df = n - p;
    let t_dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| AnalyticsError::InvalidInput(e.to_string()))?;
    let terms = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let se = cov[j][j].max(0.0).sqrt();
            let t = beta[j] / se;
            let p_value = if se == 0.0 {
                if beta[j] == 0.0 { 1.0 } else { 0.0 }
            } else {
                2.0 * (1.0 - t_dist.cdf(t.abs()))
            };
            Term {
                name,
                estimate: beta[j],
                std_error: se,
                t_stat: t,
                p_value,
            }
        })
        .collect();

    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = if options.intercept {
        y.iter().map(|v| (v - y_mean).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    Ok(RegressionFit {
        outcome: options.outcome_name.clone(),
        terms,
        n_obs: n,
        df_resid: df,
        r_squared,
        se_kind: estimator.name().to_string(),
        fixed_effects: options.fixed_effects.iter().map(|f| f.name.clone()).collect(),
    })
}

struct HouseholderQr {
    n: usize,
    /// Transformed columns; the upper `p × p` block is R.
    a: Vec<Vec<f64>>,
    /// Householder vectors, `vs[j]` acting on rows `j..n`.
    vs: Vec<Vec<f64>>,
}

impl HouseholderQr {
    fn factor(columns: &[Vec<f64>], names: &[String]) -> Result<Self, AnalyticsError> {
        let n = columns[0].len();
        let p = columns.len();
        let mut a: Vec<Vec<f64>> = columns.to_vec();
        let mut vs = Vec::with_capacity(p);
        for j in 0..p {
            let original = columns[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            let norm = a[j][j..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if original == 0.0 || norm <= RANK_TOL * original {
                return Err(AnalyticsError::RankDeficient {
                    column: names[j].clone(),
                });
            }
            let alpha = if a[j][j] > 0.0 { -norm } else { norm };
            let mut v: Vec<f64> = a[j][j..].to_vec();
            v[0] -= alpha;
            let v_norm2: f64 = v.iter().map(|x| x * x).sum();
            for col in a.iter_mut().skip(j) {
                reflect(&v, v_norm2, &mut col[j..]);
            }
            vs.push(v);
        }
        Ok(Self { n, a, vs })
    }

    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let p = self.a.len();
        let mut qty = y.to_vec();
        for (j, v) in self.vs.iter().enumerate() {
            let v_norm2: f64 = v.iter().map(|x| x * x).sum();
            reflect(v, v_norm2, &mut qty[j..self.n]);
        }
        let mut beta = vec![0.0; p];
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|k| self.a[k][i] * beta[k]).sum();
            beta[i] = (qty[i] - s) / self.a[i][i];
        }
        beta
    }

    /// `(XᵀX)⁻¹ = R⁻¹ R⁻ᵀ`.
    fn xtx_inverse(&self) -> Vec<Vec<f64>> {
        let p = self.a.len();
        let r = |i: usize, k: usize| self.a[k][i];
        // upper-triangular inverse by back substitution, column by column
        let mut rinv = vec![vec![0.0; p]; p];
        for c in 0..p {
            for i in (0..=c).rev() {
                let rhs = if i == c { 1.0 } else { 0.0 };
                let s: f64 = (i + 1..=c).map(|k| r(i, k) * rinv[k][c]).sum();
                rinv[i][c] = (rhs - s) / r(i, i);
            }
        }
        let mut out = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                out[i][j] = (i.max(j)..p).map(|k| rinv[i][k] * rinv[j][k]).sum();
            }
        }
        out
    }
}

fn reflect(v: &[f64], v_norm2: f64, x: &mut [f64]) {
    if v_norm2 == 0.0 {
        return;
    }
    let s = 2.0 * v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() / v_norm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}
