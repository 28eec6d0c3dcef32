//! Rank statistics, least squares and the income/cross-metric regressions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::eigen::symmetric_eigen;
use crate::error::{Axis, Error, Result};
use crate::matrix::BinaryMatrix;
use crate::metrics::{CountryMetrics, ProductMetrics};
use crate::special::student_t_two_sided;
use crate::stats;

/// Condition number above which a design matrix counts as collinear.
pub const COLLINEARITY_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CorrelationMethod {
    Spearman,
    Pearson,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationResult {
    pub statistic: f64,
    pub method: CorrelationMethod,
    pub n: usize,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::DegenerateInput("correlation needs at least 3 observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value"));
    }
    Ok(())
}

fn pearson_unchecked(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mx, my) = (stats::mean(x), stats::mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("constant vector"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_pair(x, y)?;
    Ok(CorrelationResult { statistic: pearson_unchecked(x, y)?, method: CorrelationMethod::Pearson, n: x.len() })
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_pair(x, y)?;
    let rx = stats::average_ranks(x);
    let ry = stats::average_ranks(y);
    Ok(CorrelationResult { statistic: pearson_unchecked(&rx, &ry)?, method: CorrelationMethod::Spearman, n: x.len() })
}

/// Average ranks.
///
/// With `reversed = true` the largest value gets the largest rank number
/// (so the top country by GDP gets rank `n`). With `reversed = false` the
/// largest value gets rank 1.
pub fn rank_transform(v: &[f64], reversed: bool) -> Vec<f64> {
    let ascending = stats::average_ranks(v);
    if reversed {
        ascending
    } else {
        let n1 = v.len() as f64 + 1.0;
        ascending.into_iter().map(|r| n1 - r).collect()
    }
}

/// Ordinary least squares fit.
///
/// Coefficient, standard error and p-value vectors follow the regressor
/// order; when an intercept is fitted it comes last.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionResult {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub intercept_included: bool,
    pub n: usize,
}

impl RegressionResult {
    pub fn slopes(&self) -> &[f64] {
        let k = self.coefficients.len() - usize::from(self.intercept_included);
        &self.coefficients[..k]
    }

    pub fn intercept(&self) -> Option<f64> {
        self.intercept_included.then(|| *self.coefficients.last().unwrap())
    }
}

/// Least squares of `y` on `regressors`, via Householder QR.
///
/// Standard errors are the classical homoskedastic ones; p-values are
/// two-sided t tests with `n - p` degrees of freedom. R² is centered with an
/// intercept and uncentered without one.
pub fn ols<R: AsRef<[f64]>>(y: &[f64], regressors: &[R], intercept: bool) -> Result<RegressionResult> {
    let n = y.len();
    let k = regressors.len();
    for r in regressors {
        if r.as_ref().len() != n {
            return Err(Error::LengthMismatch { left: n, right: r.as_ref().len() });
        }
    }
    if n < k + 2 {
        return Err(Error::DegenerateInput("need at least regressors + 2 observations"));
    }
    let p = k + usize::from(intercept);
    if p == 0 {
        return Err(Error::DegenerateInput("no regressors"));
    }
    if y.iter().chain(regressors.iter().flat_map(|r| r.as_ref())).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value"));
    }
    // column-major design
    let mut columns: Vec<Vec<f64>> = regressors.iter().map(|r| r.as_ref().to_vec()).collect();
    if intercept {
        columns.push(vec![1.0; n]);
    }

    let condition = scaled_condition_number(&columns);
    if !(condition <= COLLINEARITY_LIMIT) {
        return Err(Error::Collinear { condition });
    }

    let (r, qty) = householder_qr(columns.clone(), y.to_vec());
    let beta = back_substitute(&r, &qty, p);
    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|c| columns[c][i] * beta[c]).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let total = if intercept {
        let m = stats::mean(y);
        y.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    if total == 0.0 {
        return Err(Error::DegenerateInput("response has no variation"));
    }
    let r_squared = (1.0 - rss / total).clamp(0.0, 1.0);

    let df = (n - p) as f64;
    let sigma2 = rss / df;
    let r_inv = invert_upper(&r, p);
    let mut standard_errors = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for c in 0..p {
        // diag of R^-1 R^-T
        let v: f64 = (c..p).map(|j| r_inv[c][j] * r_inv[c][j]).sum();
        let se = libm::sqrt(sigma2 * v);
        let pv = if se == 0.0 {
            if beta[c] == 0.0 { 1.0 } else { 0.0 }
        } else {
            student_t_two_sided(beta[c] / se, df)
        };
        standard_errors.push(se);
        p_values.push(pv);
    }
    Ok(RegressionResult { coefficients: beta, standard_errors, p_values, r_squared, intercept_included: intercept, n })
}

fn scaled_condition_number(columns: &[Vec<f64>]) -> f64 {
    let p = columns.len();
    let norms: Vec<f64> = columns.iter().map(|c| libm::sqrt(c.iter().map(|v| v * v).sum::<f64>())).collect();
    if norms.contains(&0.0) {
        return f64::INFINITY;
    }
    let mut gram = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            let dot: f64 = columns[a].iter().zip(&columns[b]).map(|(x, y)| x * y).sum();
            gram[a * p + b] = dot / (norms[a] * norms[b]);
        }
    }
    let eig = symmetric_eigen(gram, p);
    let hi = eig.values[0];
    let lo = eig.values[p - 1];
    if lo <= 0.0 {
        return f64::INFINITY;
    }
    libm::sqrt(hi / lo)
}

/// Returns the `p x p` upper-triangular R and `Qᵀ y`.
fn householder_qr(mut cols: Vec<Vec<f64>>, mut y: Vec<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = cols.len();
    let n = y.len();
    for k in 0..p {
        let norm = libm::sqrt(cols[k][k..].iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            continue;
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for col in cols.iter_mut().skip(k) {
            reflect(&mut col[k..n]);
        }
        reflect(&mut y[k..n]);
    }
    let r = (0..p).map(|i| (0..p).map(|j| if j >= i { cols[j][i] } else { 0.0 }).collect()).collect();
    (r, y)
}

fn back_substitute(r: &[Vec<f64>], qty: &[f64], p: usize) -> Vec<f64> {
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r[i][j] * beta[j]).sum();
        beta[i] = (qty[i] - s) / r[i][i];
    }
    beta
}

fn invert_upper(r: &[Vec<f64>], p: usize) -> Vec<Vec<f64>> {
    let mut inv = vec![vec![0.0; p]; p];
    for col in 0..p {
        for i in (0..=col).rev() {
            let target = if i == col { 1.0 } else { 0.0 };
            let s: f64 = ((i + 1)..=col).map(|j| r[i][j] * inv[j][col]).sum();
            inv[i][col] = (target - s) / r[i][i];
        }
    }
    inv
}

/// Maximum-likelihood exponential fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentialFit {
    /// `1 / mean`.
    pub rate: f64,
    /// Kolmogorov–Smirnov distance to the fitted exponential.
    pub ks_distance: f64,
    pub n: usize,
}

pub fn fit_exponential(values: &[f64]) -> Result<ExponentialFit> {
    if values.len() < 10 {
        return Err(Error::DegenerateInput("exponential fit needs at least 10 values"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::DegenerateInput("exponential fit needs positive finite values"));
    }
    let rate = 1.0 / stats::mean(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = sorted.len() as f64;
    let ks_distance = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = -libm::expm1(-rate * x);
            let above = (i + 1) as f64 / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max);
    Ok(ExponentialFit { rate, ks_distance, n: values.len() })
}

/// GDP and natural-resource rents per country.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IncomePanel {
    country_labels: Vec<String>,
    gdp: Vec<f64>,
    natural_rents: Vec<f64>,
}

impl IncomePanel {
    pub fn new(country_labels: Vec<String>, gdp: Vec<f64>, natural_rents: Vec<f64>) -> Result<Self> {
        if gdp.len() != country_labels.len() {
            return Err(Error::LengthMismatch { left: country_labels.len(), right: gdp.len() });
        }
        if natural_rents.len() != country_labels.len() {
            return Err(Error::LengthMismatch { left: country_labels.len(), right: natural_rents.len() });
        }
        let mut seen = BTreeMap::new();
        for label in &country_labels {
            if seen.insert(label.as_str(), ()).is_some() {
                return Err(Error::DuplicateLabel { axis: Axis::Country, label: label.clone() });
            }
        }
        if gdp.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::DegenerateInput("gdp must be positive"));
        }
        if natural_rents.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::DegenerateInput("natural rents must be non-negative"));
        }
        Ok(Self { country_labels, gdp, natural_rents })
    }

    pub fn country_labels(&self) -> &[String] {
        &self.country_labels
    }

    pub fn gdp(&self) -> &[f64] {
        &self.gdp
    }

    pub fn natural_rents(&self) -> &[f64] {
        &self.natural_rents
    }
}

/// Exact-label join between matrix countries and an income panel, in
/// sorted label order.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JoinReport {
    pub matched: Vec<String>,
    /// `(matrix index, panel index)` per matched label.
    pub indices: Vec<(usize, usize)>,
    pub unmatched_matrix: Vec<String>,
    pub unmatched_panel: Vec<String>,
}

pub fn join(matrix_labels: &[String], panel: &IncomePanel) -> JoinReport {
    let left: BTreeMap<&str, usize> = matrix_labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let right: BTreeMap<&str, usize> =
        panel.country_labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut report = JoinReport::default();
    for (label, &i) in &left {
        match right.get(label) {
            Some(&j) => {
                report.matched.push(label.to_string());
                report.indices.push((i, j));
            }
            None => report.unmatched_matrix.push(label.to_string()),
        }
    }
    report.unmatched_panel = right.keys().filter(|l| !left.contains_key(*l)).map(|l| l.to_string()).collect();
    report
}

/// A regression fitted with and without an intercept.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionPair {
    pub with_intercept: Option<RegressionResult>,
    pub without_intercept: Option<RegressionResult>,
    /// Published slopes for the 2008 HS extract, when there are any to compare with.
    pub reference_slopes: Option<Vec<f64>>,
    /// `"with_intercept"` or `"without_intercept"`: whichever has slopes
    /// closer (Euclidean) to the reference slopes.
    pub closer_to_reference: Option<String>,
    pub error: Option<String>,
}

impl RegressionPair {
    fn fit<R: AsRef<[f64]>>(y: &[f64], x: &[R], reference: Option<&[f64]>) -> Self {
        let with = ols(y, x, true);
        let without = ols(y, x, false);
        let error = match (&with, &without) {
            (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
            _ => None,
        };
        let with_intercept = with.ok();
        let without_intercept = without.ok();
        let closer_to_reference = match (reference, &with_intercept, &without_intercept) {
            (Some(r), Some(a), Some(b)) => {
                let dist = |fit: &RegressionResult| -> f64 {
                    fit.slopes().iter().zip(r).map(|(s, t)| (s - t) * (s - t)).sum()
                };
                Some(if dist(a) <= dist(b) { "with_intercept" } else { "without_intercept" }.into())
            }
            _ => None,
        };
        Self { with_intercept, without_intercept, reference_slopes: reference.map(|r| r.to_vec()), closer_to_reference, error }
    }
}

/// Published slopes of the rank and log regressions of GDP on
/// diversification and natural rents.
pub const REFERENCE_RANK_SLOPES: [f64; 2] = [0.72, 0.32];
pub const REFERENCE_LOG_SLOPES: [f64; 2] = [1.03, 0.3];

/// Output of [`run_income_regressions`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionReport {
    pub join: JoinReport,
    /// Spearman correlation of GDP and diversification over the joined sample.
    pub spearman_gdp_diversification: Option<CorrelationResult>,
    /// rank(GDP) on rank(d) and rank(natural rents).
    pub rank_gdp: RegressionPair,
    /// ln GDP on ln d and ln(natural rents + offset).
    pub log_gdp: RegressionPair,
    /// Offset added to rents before taking logs: the smallest positive rent.
    pub rents_offset: Option<f64>,
    /// ECI on TDI.
    pub eci_on_tdi: RegressionPair,
    /// Fitness on `d ln d / <d ln d>`.
    pub fitness_on_dlogd: RegressionPair,
    pub spearman_tsi_pci: Option<CorrelationResult>,
    pub spearman_tsi_q: Option<CorrelationResult>,
    pub spearman_pci_q: Option<CorrelationResult>,
}

/// Runs the income and cross-metric regressions on the countries shared by
/// the matrix and the panel.
///
/// `countries` and `products` must be aligned with `m`'s labels.
pub fn run_income_regressions(
    m: &BinaryMatrix,
    panel: &IncomePanel,
    countries: &CountryMetrics,
    products: &ProductMetrics,
) -> Result<RegressionReport> {
    let n = m.n_countries();
    for len in [countries.tdi.len(), countries.eci.len(), countries.fitness.len(), countries.country_labels.len()] {
        if len != n {
            return Err(Error::LengthMismatch { left: n, right: len });
        }
    }
    let k = m.n_products();
    for len in [products.tsi.len(), products.pci.len(), products.q.len()] {
        if len != k {
            return Err(Error::LengthMismatch { left: k, right: len });
        }
    }
    if countries.country_labels.as_slice() != m.country_labels() {
        return Err(Error::DegenerateInput("country metrics are not aligned with the matrix"));
    }
    let joined = join(m.country_labels(), panel);
    if joined.indices.is_empty() {
        return Err(Error::JoinEmpty);
    }

    let d_all: Vec<f64> = m.diversification().iter().map(|&d| d as f64).collect();
    let pick = |v: &[f64]| -> Vec<f64> { joined.indices.iter().map(|&(i, _)| v[i]).collect() };
    let pick_panel = |v: &[f64]| -> Vec<f64> { joined.indices.iter().map(|&(_, j)| v[j]).collect() };
    let d = pick(&d_all);
    let gdp = pick_panel(&panel.gdp);
    let rents = pick_panel(&panel.natural_rents);

    let rank_gdp = RegressionPair::fit(
        &rank_transform(&gdp, true),
        &[rank_transform(&d, true), rank_transform(&rents, true)],
        Some(&REFERENCE_RANK_SLOPES),
    );

    let rents_offset = rents.iter().copied().filter(|&r| r > 0.0).fold(None, |acc: Option<f64>, r| {
        Some(acc.map_or(r, |a| a.min(r)))
    });
    let log_gdp = match rents_offset {
        Some(delta) => RegressionPair::fit(
            &gdp.iter().map(|g| libm::log(*g)).collect::<Vec<_>>(),
            &[
                d.iter().map(|v| libm::log(*v)).collect::<Vec<_>>(),
                rents.iter().map(|r| libm::log(r + delta)).collect::<Vec<_>>(),
            ],
            Some(&REFERENCE_LOG_SLOPES),
        ),
        None => RegressionPair {
            error: Some("no country has positive natural rents".into()),
            reference_slopes: Some(REFERENCE_LOG_SLOPES.to_vec()),
            ..Default::default()
        },
    };

    let eci_on_tdi = RegressionPair::fit(&pick(&countries.eci), &[pick(&countries.tdi)], None);

    let dlogd: Vec<f64> = d_all.iter().map(|&x| x * libm::log(x)).collect();
    let mean_dlogd = stats::mean(&dlogd);
    let fitness_on_dlogd = if mean_dlogd > 0.0 {
        let scaled: Vec<f64> = dlogd.iter().map(|v| v / mean_dlogd).collect();
        RegressionPair::fit(&pick(&countries.fitness), &[pick(&scaled)], None)
    } else {
        RegressionPair { error: Some("every country has diversification 1".into()), ..Default::default() }
    };

    Ok(RegressionReport {
        join: joined.clone(),
        spearman_gdp_diversification: spearman(&gdp, &d).ok(),
        rank_gdp,
        log_gdp,
        rents_offset,
        eci_on_tdi,
        fitness_on_dlogd,
        spearman_tsi_pci: spearman(&products.tsi, &products.pci).ok(),
        spearman_tsi_q: spearman(&products.tsi, &products.q).ok(),
        spearman_pci_q: spearman(&products.pci, &products.q).ok(),
    })
}
