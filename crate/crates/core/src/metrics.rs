//! Country and product metrics on a pruned binary matrix.
//!
//! Four families are provided:
//!
//! * TDI / TSI: standardized log-diversification and negative
//!   log-ubiquity.
//! * ECI / PCI: standardized eigenvectors of the averaging matrices
//!   `W·W*` and `W*·W` for the second-largest eigenvalue.
//! * Fitness / Q: fixed point of the normalized nonlinear iteration in
//!   which product scores are harmonic-mean-like in the producers' scores.
//!
//! All of them expect a matrix without empty rows or columns, see
//! [`prune_degenerate`](crate::matrix::prune_degenerate).

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::symmetric_eigen;
use crate::error::{Axis, Error, Result};
use crate::matrix::BinaryMatrix;
use crate::stats;
use crate::validation::{pearson, spearman};

/// Eigenvalues at or above `1 - EIGEN_TOL` count as the unit eigenvalue.
pub const EIGEN_TOL: f64 = 1e-10;

/// Smallest admissible fitness or complexity value.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// Shifts and scales `v` to mean 0 and population standard deviation 1.
pub fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateVector);
    }
    let mean = stats::mean(v);
    let sd = stats::std_dev(v);
    let scale = v.iter().fold(0.0f64, |acc, x| acc.max(libm::fabs(*x)));
    if !(sd > 1e-14 * scale) {
        return Err(Error::DegenerateVector);
    }
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

fn require_pruned(m: &BinaryMatrix) -> Result<()> {
    if m.diversification().contains(&0) {
        return Err(Error::Unpruned { axis: Axis::Country });
    }
    if m.ubiquity().contains(&0) {
        return Err(Error::Unpruned { axis: Axis::Product });
    }
    Ok(())
}

/// Technological Development Index: `standardize(ln d)`.
pub fn tdi(m: &BinaryMatrix) -> Result<Vec<f64>> {
    require_pruned(m)?;
    let logs: Vec<f64> = m.diversification().iter().map(|&d| libm::log(d as f64)).collect();
    standardize(&logs)
}

/// Technological Sophistication Index: `-standardize(ln u)`.
pub fn tsi(m: &BinaryMatrix) -> Result<Vec<f64>> {
    require_pruned(m)?;
    let logs: Vec<f64> = m.ubiquity().iter().map(|&u| libm::log(u as f64)).collect();
    Ok(standardize(&logs)?.into_iter().map(|x| -x).collect())
}

/// Diagnostics from the ECI/PCI eigen-decomposition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenReport {
    pub leading_eigenvalue: f64,
    pub second_eigenvalue: f64,
    pub third_eigenvalue: Option<f64>,
    /// `(max - min) / mean` of the leading country eigenvector; zero when uniform.
    pub leading_vector_spread: f64,
    pub eci_sign_flipped: bool,
    pub pci_sign_flipped: bool,
    /// Which side's symmetric similarity matrix was diagonalized.
    pub decomposed_side: String,
    pub jacobi_sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EciPci {
    pub eci: Vec<f64>,
    pub pci: Vec<f64>,
    pub report: EigenReport,
}

/// Economic and Product Complexity Indices.
///
/// `W·W* = D⁻¹ M U⁻¹ Mᵀ` is similar to the symmetric `A Aᵀ` with
/// `A = D^-1/2 M U^-1/2`, and `W*·W` to `Aᵀ A`. The smaller of the two Gram
/// matrices is diagonalized; the other side's eigenvector follows from one
/// multiplication by `W` or `W*`.
///
/// ECI is oriented to have positive Spearman correlation with
/// diversification, PCI negative correlation with ubiquity.
pub fn eci_pci(m: &BinaryMatrix) -> Result<EciPci> {
    require_pruned(m)?;
    let (n, k) = (m.n_countries(), m.n_products());
    if n < 3 || k < 3 {
        return Err(Error::InsufficientSize { countries: n, products: k });
    }
    if !m.is_connected() {
        return Err(Error::DisconnectedMatrix { second_eigenvalue: 1.0 });
    }
    let d: Vec<f64> = m.diversification().iter().map(|&x| x as f64).collect();
    let u: Vec<f64> = m.ubiquity().iter().map(|&x| x as f64).collect();

    let country_side = n <= k;
    let size = if country_side { n } else { k };
    let mut gram = vec![0.0; size * size];
    if country_side {
        for j in 0..k {
            let col = m.column(j);
            for &a in col {
                for &b in col {
                    gram[a * size + b] += 1.0 / (libm::sqrt(d[a] * d[b]) * u[j]);
                }
            }
        }
    } else {
        for i in 0..n {
            let row = m.row(i);
            for &a in row {
                for &b in row {
                    gram[a * size + b] += 1.0 / (libm::sqrt(u[a] * u[b]) * d[i]);
                }
            }
        }
    }
    let eig = symmetric_eigen(gram, size);
    let leading = eig.values[0];

    // rank the sub-unit eigenvalues by magnitude
    let mut below: Vec<usize> = (1..size).collect();
    if eig.values[1] >= 1.0 - EIGEN_TOL {
        return Err(Error::DisconnectedMatrix { second_eigenvalue: eig.values[1] });
    }
    below.sort_by(|&a, &b| libm::fabs(eig.values[b]).total_cmp(&libm::fabs(eig.values[a])).then(a.cmp(&b)));
    let second_idx = below[0];
    let second = eig.values[second_idx];
    let third = below.get(1).map(|&t| eig.values[t]);
    if let Some(third) = third {
        if libm::fabs(second) - libm::fabs(third) <= EIGEN_TOL {
            return Err(Error::DegenerateSpectrum { second, third });
        }
    }

    let x = eig.vector(second_idx);
    let (c, p) = if country_side {
        let c: Vec<f64> = (0..n).map(|i| x[i] / libm::sqrt(d[i])).collect();
        let p = average_over_producers(m, &c, &u);
        (c, p)
    } else {
        let p: Vec<f64> = (0..k).map(|j| x[j] / libm::sqrt(u[j])).collect();
        let c = average_over_products(m, &p, &d);
        (c, p)
    };
    let degenerate = |_| Error::DegenerateSpectrum { second, third: third.unwrap_or(0.0) };
    let mut eci = standardize(&c).map_err(degenerate)?;
    let mut pci = standardize(&p).map_err(degenerate)?;
    let eci_sign_flipped = orient(&mut eci, &d, m.country_labels(), true);
    let pci_sign_flipped = orient(&mut pci, &u, m.product_labels(), false);

    let lead = eig.vector(0);
    let lead_country: Vec<f64> = if country_side {
        (0..n).map(|i| lead[i] / libm::sqrt(d[i])).collect()
    } else {
        let p: Vec<f64> = (0..k).map(|j| lead[j] / libm::sqrt(u[j])).collect();
        average_over_products(m, &p, &d)
    };
    let (lo, hi) = lead_country.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let leading_vector_spread = (hi - lo) / libm::fabs(stats::mean(&lead_country));

    Ok(EciPci {
        eci,
        pci,
        report: EigenReport {
            leading_eigenvalue: leading,
            second_eigenvalue: second,
            third_eigenvalue: third,
            leading_vector_spread,
            eci_sign_flipped,
            pci_sign_flipped,
            decomposed_side: if country_side { "countries".into() } else { "products".into() },
            jacobi_sweeps: eig.sweeps,
        },
    })
}

/// `(W* c)_j`: mean of `c` over the producers of each product.
fn average_over_producers(m: &BinaryMatrix, c: &[f64], u: &[f64]) -> Vec<f64> {
    (0..m.n_products()).map(|j| m.column(j).iter().map(|&i| c[i]).sum::<f64>() / u[j]).collect()
}

/// `(W p)_i`: mean of `p` over each country's products.
fn average_over_products(m: &BinaryMatrix, p: &[f64], d: &[f64]) -> Vec<f64> {
    (0..m.n_countries()).map(|i| m.row(i).iter().map(|&j| p[j]).sum::<f64>() / d[i]).collect()
}

/// Correlations below this magnitude are treated as zero when orienting.
const ORIENT_TOL: f64 = 1e-9;

/// Flips `v` in place so that its correlation with `reference` has the wanted
/// sign. Spearman decides; Pearson breaks a zero or undefined Spearman. If
/// both vanish (an exactly symmetric matrix), the largest-magnitude entry
/// with the smallest label is made positive (or negative). Returns whether
/// the sign was flipped.
fn orient(v: &mut [f64], reference: &[f64], labels: &[String], want_positive: bool) -> bool {
    let snapped = snap_ties(v);
    let score = [spearman(&snapped, reference), pearson(&snapped, reference)]
        .into_iter()
        .filter_map(|r| r.ok())
        .map(|r| r.statistic)
        .find(|s| libm::fabs(*s) > ORIENT_TOL)
        .unwrap_or_else(|| {
            let big = v.iter().fold(0.0f64, |acc, x| acc.max(libm::fabs(*x)));
            let pick = (0..v.len())
                .filter(|&i| libm::fabs(v[i]) >= big * (1.0 - ORIENT_TOL))
                .min_by(|&a, &b| labels[a].cmp(&labels[b]))
                .map_or(0.0, |i| v[i]);
            if want_positive { pick } else { -pick }
        });
    let flip = if want_positive { score < 0.0 } else { score > 0.0 };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    flip
}

/// Copy of `v` where runs of sorted values closer than `ORIENT_TOL` share the
/// run's first value, so rounding noise cannot split exact ties.
fn snap_ties(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = v.to_vec();
    for w in 1..order.len() {
        let (prev, cur) = (order[w - 1], order[w]);
        if v[cur] - v[prev] < ORIENT_TOL {
            out[cur] = out[prev];
        }
    }
    out
}

/// Stopping rule for [`fitness_complexity`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitnessOptions {
    /// Bound on the largest relative change of any fitness or complexity value.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitnessOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000 }
    }
}

/// Normalized fitness (mean 1 over countries) and complexity (mean 1 over
/// products) after `iterations` steps.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitnessOutcome {
    pub fitness: Vec<f64>,
    pub complexity: Vec<f64>,
    pub iterations: usize,
    /// Largest relative change in the final step.
    pub change: f64,
}

/// Country Fitness and Product Complexity.
///
/// Starting from unit scores, each step computes
/// `c_i = Σ_j m_ij Q_j` and `p_j = 1 / Σ_i m_ij / F_i` from the previous
/// normalized scores, then renormalizes both to unit mean. On matrices with
/// nested blocks some scores drift to zero and the iteration stops with
/// [`Error::NonConvergence`] or [`Error::NumericalUnderflow`]; both carry the
/// last iterate.
pub fn fitness_complexity(m: &BinaryMatrix, opts: &FitnessOptions) -> Result<FitnessOutcome> {
    fitness_complexity_observed(m, opts, |_, _, _| {})
}

/// Same as [`fitness_complexity`], calling `observe(iteration, fitness,
/// complexity)` after every normalized step.
pub fn fitness_complexity_observed<F>(m: &BinaryMatrix, opts: &FitnessOptions, mut observe: F) -> Result<FitnessOutcome>
where
    F: FnMut(usize, &[f64], &[f64]),
{
    require_pruned(m)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("fitness tol must be > 0 and max_iter >= 1"));
    }
    let (n, k) = (m.n_countries(), m.n_products());
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut fitness = vec![1.0; n];
    let mut complexity = vec![1.0; k];
    let mut change = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let c: Vec<f64> = (0..n).map(|i| m.row(i).iter().map(|&j| complexity[j]).sum()).collect();
        let p: Vec<f64> = (0..k)
            .map(|j| 1.0 / m.column(j).iter().map(|&i| 1.0 / fitness[i]).sum::<f64>())
            .collect();
        let c_mean = stats::mean(&c);
        let p_mean = stats::mean(&p);
        let next_f: Vec<f64> = c.iter().map(|x| x / c_mean).collect();
        let next_q: Vec<f64> = p.iter().map(|x| x / p_mean).collect();

        let healthy = |x: &f64| x.is_finite() && *x >= POSITIVITY_FLOOR;
        if !next_f.iter().all(healthy) || !next_q.iter().all(healthy) {
            return Err(Error::NumericalUnderflow {
                last: Box::new(FitnessOutcome { fitness, complexity, iterations: iteration - 1, change }),
            });
        }
        change = relative_change(&fitness, &next_f).max(relative_change(&complexity, &next_q));
        fitness = next_f;
        complexity = next_q;
        observe(iteration, &fitness, &complexity);
        if change < opts.tol {
            return Ok(FitnessOutcome { fitness, complexity, iterations: iteration, change });
        }
    }
    Err(Error::NonConvergence {
        change,
        last: Box::new(FitnessOutcome { fitness, complexity, iterations: opts.max_iter, change }),
    })
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter().zip(new).map(|(o, n)| libm::fabs(n - o) / libm::fabs(*o)).fold(0.0, f64::max)
}

/// Per-country metric bundle, aligned with the matrix's country labels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountryMetrics {
    pub country_labels: Vec<String>,
    pub diversification: Vec<usize>,
    pub tdi: Vec<f64>,
    pub eci: Vec<f64>,
    pub fitness: Vec<f64>,
}

/// Per-product metric bundle, aligned with the matrix's product labels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProductMetrics {
    pub product_labels: Vec<String>,
    pub ubiquity: Vec<usize>,
    pub tsi: Vec<f64>,
    pub pci: Vec<f64>,
    pub q: Vec<f64>,
}

/// Everything [`compute_metrics`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSuite {
    pub countries: CountryMetrics,
    pub products: ProductMetrics,
    pub eigen: EigenReport,
    pub fitness_iterations: usize,
}

/// Runs all four metric families, failing on the first error.
pub fn compute_metrics(m: &BinaryMatrix, opts: &FitnessOptions) -> Result<MetricSuite> {
    let tdi = tdi(m)?;
    let tsi = tsi(m)?;
    let EciPci { eci, pci, report } = eci_pci(m)?;
    let fc = fitness_complexity(m, opts)?;
    Ok(MetricSuite {
        countries: CountryMetrics {
            country_labels: m.country_labels().to_vec(),
            diversification: m.diversification().to_vec(),
            tdi,
            eci,
            fitness: fc.fitness,
        },
        products: ProductMetrics {
            product_labels: m.product_labels().to_vec(),
            ubiquity: m.ubiquity().to_vec(),
            tsi,
            pci,
            q: fc.complexity,
        },
        eigen: report,
        fitness_iterations: fc.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{numbered_labels, BinaryMatrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn nested3() -> BinaryMatrix {
        BinaryMatrix::from_dense(&[[1u8, 1, 1], [1, 1, 0], [1, 0, 0]]).unwrap()
    }

    /// Matrix with prescribed diversifications, each country making a prefix
    /// of the product list.
    fn staircase(d: &[usize]) -> BinaryMatrix {
        let cols = *d.iter().max().unwrap();
        let entries = d.iter().enumerate().flat_map(|(i, &di)| (0..di).map(move |j| (i, j)));
        BinaryMatrix::from_entries(numbered_labels("c", d.len()), numbered_labels("p", cols), entries).unwrap()
    }

    #[test]
    fn standardize_examples() {
        let s = standardize(&[1.0, 1.0, 4.0]).unwrap();
        let expect = [-1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 2.0 / 2f64.sqrt()];
        for (a, b) in s.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_eq!(standardize(&[5.0, 5.0, 5.0]), Err(Error::DegenerateVector));
        assert_eq!(standardize(&[5.0]), Err(Error::DegenerateVector));
        let again = standardize(&s).unwrap();
        for (a, b) in s.iter().zip(&again) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn tdi_examples() {
        let t = tdi(&staircase(&[10, 100, 1000])).unwrap();
        // ln values equally spaced by ln 10; pop std sqrt(2/3) ln 10
        let step = 1.0 / (2.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(t[0], -step, epsilon = 1e-12);
        assert_abs_diff_eq!(t[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[2], step, epsilon = 1e-12);
        assert_abs_diff_eq!(t[2], 1.2247448713915890, epsilon = 1e-12);
        assert_eq!(tdi(&staircase(&[5, 5])), Err(Error::DegenerateVector));
    }

    #[test]
    fn tsi_examples() {
        // u = [2, 2, 16]: two products made by 2 countries, one by 16
        let entries = (0..2).flat_map(|j| (0..2).map(move |i| (i, j))).chain((0..16).map(|i| (i, 2)));
        let m = BinaryMatrix::from_entries(numbered_labels("c", 16), numbered_labels("p", 3), entries).unwrap();
        assert_eq!(m.ubiquity(), &[2, 2, 16]);
        let t = tsi(&m).unwrap();
        assert_abs_diff_eq!(t[0], 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(t[1], 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(t[2], -(2f64.sqrt()), epsilon = 1e-12);

        let flat = BinaryMatrix::from_dense(&[[1u8, 1], [1, 1]]).unwrap();
        assert_eq!(tsi(&flat), Err(Error::DegenerateVector));
    }

    #[test]
    fn metrics_reject_unpruned() {
        let m = BinaryMatrix::from_dense(&[[1u8, 0], [0, 0]]).unwrap();
        assert_eq!(tdi(&m), Err(Error::Unpruned { axis: Axis::Country }));
        assert!(matches!(eci_pci(&m), Err(Error::Unpruned { .. })));
        assert!(matches!(fitness_complexity(&m, &FitnessOptions::default()), Err(Error::Unpruned { .. })));
    }

    #[test]
    fn eci_nested_ordering() {
        let r = eci_pci(&nested3()).unwrap();
        assert!(r.eci[0] > r.eci[1] && r.eci[1] > r.eci[2], "{:?}", r.eci);
        assert!(r.pci[0] < r.pci[1] && r.pci[1] < r.pci[2], "{:?}", r.pci);
        assert_abs_diff_eq!(r.report.leading_eigenvalue, 1.0, epsilon = 1e-12);
        assert!(r.report.leading_vector_spread < 1e-8);
    }

    #[test]
    fn eci_nested_matches_explicit_product() {
        // W W* for the nested matrix, written out: d = [3,2,1], u = [3,2,1]
        let m = [[1.0, 1.0, 1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        let d = [3.0, 2.0, 1.0];
        let u = [3.0, 2.0, 1.0];
        let mut ww = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                ww[i][k] = (0..3).map(|j| m[i][j] / d[i] * m[k][j] / u[j]).sum();
            }
        }
        let r = eci_pci(&nested3()).unwrap();
        // ECI is an affine image of an eigenvector c of ww with eigenvalue
        // lambda; (ww - lambda) applied to (eci - mean) must vanish.
        // Rows of ww sum to 1, so eci = a*c + b gives ww*eci = lambda*eci + (1-lambda)*b.
        // Differencing two rows removes the offset.
        let lambda = r.report.second_eigenvalue;
        for (a, b) in [(0usize, 1usize), (1, 2)] {
            let lhs: f64 = (0..3).map(|k| (ww[a][k] - ww[b][k]) * r.eci[k]).sum();
            assert_abs_diff_eq!(lhs, lambda * (r.eci[a] - r.eci[b]), epsilon = 1e-12);
        }
    }

    #[test]
    fn eci_errors() {
        let ones = BinaryMatrix::from_dense(&[[1u8; 4]; 3]).unwrap();
        assert!(matches!(eci_pci(&ones), Err(Error::DegenerateSpectrum { .. })));
        let blocks = BinaryMatrix::from_dense(&[
            [1u8, 1, 0, 0],
            [1, 0, 0, 0],
            [0, 0, 1, 1],
            [0, 0, 1, 0],
        ])
        .unwrap();
        assert!(matches!(eci_pci(&blocks), Err(Error::DisconnectedMatrix { .. })));
        let small = BinaryMatrix::from_dense(&[[1u8, 1], [1, 0]]).unwrap();
        assert!(matches!(eci_pci(&small), Err(Error::InsufficientSize { .. })));
    }

    #[test]
    fn fitness_all_ones_is_exact() {
        for n in 1..10 {
            for k in 1..10 {
                let ones = BinaryMatrix::from_dense(&vec![vec![1u8; k]; n]).unwrap();
                let mut checked = 0;
                let out = fitness_complexity_observed(&ones, &FitnessOptions::default(), |_, f, q| {
                    assert!(f.iter().all(|&x| x == 1.0));
                    assert!(q.iter().all(|&x| x == 1.0));
                    checked += 1;
                })
                .unwrap();
                assert!(checked >= 1);
                assert!(out.fitness.iter().all(|&x| x == 1.0), "{n}x{k}");
                assert!(out.complexity.iter().all(|&x| x == 1.0), "{n}x{k}");
            }
        }
    }

    #[test]
    fn fitness_nested_keeps_ordering_but_does_not_converge() {
        // Scores of the less diversified countries decay toward zero, so the
        // relative-change criterion is never met.
        let opts = FitnessOptions { tol: 1e-12, max_iter: 2000 };
        let mut ordered = true;
        let res = fitness_complexity_observed(&nested3(), &opts, |_, f, q| {
            ordered &= f[0] > f[1] && f[1] > f[2];
            ordered &= q[0] < q[1] && q[1] < q[2];
            ordered &= (stats::mean(f) - 1.0).abs() < 1e-12;
        });
        assert!(ordered);
        match res {
            Err(Error::NonConvergence { last, .. }) => {
                assert_eq!(last.iterations, 2000);
                assert!(last.fitness[0] > last.fitness[1] && last.fitness[1] > last.fitness[2]);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn fitness_rejects_bad_options() {
        let ones = BinaryMatrix::from_dense(&[[1u8; 2]; 2]).unwrap();
        let bad = FitnessOptions { tol: 0.0, max_iter: 10 };
        assert!(matches!(fitness_complexity(&ones, &bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn nested_rankings_agree() {
        for size in 3..9 {
            let d: Vec<usize> = (1..=size).rev().collect();
            let m = staircase(&d);
            let t = tdi(&m).unwrap();
            let e = eci_pci(&m).unwrap().eci;
            let opts = FitnessOptions { tol: 1e-10, max_iter: 300 };
            let f = match fitness_complexity(&m, &opts) {
                Ok(o) => o.fitness,
                Err(Error::NonConvergence { last, .. }) | Err(Error::NumericalUnderflow { last }) => last.fitness,
                Err(e) => panic!("{e}"),
            };
            for i in 1..size {
                assert!(t[i - 1] > t[i]);
                assert!(e[i - 1] > e[i], "size {size}: {e:?}");
                assert!(f[i - 1] > f[i]);
            }
        }
    }

    fn random_connected() -> impl Strategy<Value = BinaryMatrix> {
        (3usize..9, 3usize..12, any::<u64>()).prop_filter_map("disconnected", |(n, k, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<u8>> =
                (0..n).map(|_| (0..k).map(|_| rng.random_bool(0.5) as u8).collect()).collect();
            let m = crate::matrix::prune_degenerate(&BinaryMatrix::from_dense(&rows).ok()?).ok()?;
            (m.is_connected() && m.n_countries() >= 3 && m.n_products() >= 3).then_some(m)
        })
    }

    proptest! {
        #[test]
        fn standardize_is_affine_and_order_preserving(v in proptest::collection::vec(-1e3f64..1e3, 2..20)) {
            if let Ok(s) = standardize(&v) {
                prop_assert!(stats::mean(&s).abs() < 1e-9);
                prop_assert!((stats::std_dev(&s) - 1.0).abs() < 1e-9);
                for a in 0..v.len() {
                    for b in 0..v.len() {
                        if v[a] < v[b] { prop_assert!(s[a] < s[b]); }
                    }
                }
            }
        }

        #[test]
        fn eci_sign_contract_and_permutation(m in random_connected(), rot in 0usize..7) {
            let Ok(base) = eci_pci(&m) else { return Ok(()) };
            let d: Vec<f64> = m.diversification().iter().map(|&x| x as f64).collect();
            let u: Vec<f64> = m.ubiquity().iter().map(|&x| x as f64).collect();
            if let Ok(r) = spearman(&snap_ties(&base.eci), &d) { prop_assert!(r.statistic > -1e-9); }
            if let Ok(r) = spearman(&snap_ties(&base.pci), &u) { prop_assert!(r.statistic < 1e-9); }
            prop_assert!((stats::mean(&base.eci)).abs() < 1e-9);
            prop_assert!((stats::std_dev(&base.pci) - 1.0).abs() < 1e-9);

            // rotate rows and reverse columns
            let (n, k) = (m.n_countries(), m.n_products());
            let row_of = |i: usize| (i + rot) % n;
            let col_of = |j: usize| k - 1 - j;
            let entries: Vec<(usize, usize)> = m.entries().map(|(i, j)| (row_of(i), col_of(j))).collect();
            let mut cl = vec![String::new(); n];
            for i in 0..n { cl[row_of(i)] = m.country_labels()[i].clone(); }
            let mut pl = vec![String::new(); k];
            for j in 0..k { pl[col_of(j)] = m.product_labels()[j].clone(); }
            let permuted = BinaryMatrix::from_entries(cl, pl, entries).unwrap();
            let other = eci_pci(&permuted).unwrap();
            // the orientation rule is permutation invariant, so no sign ambiguity
            for i in 0..n { prop_assert!((base.eci[i] - other.eci[row_of(i)]).abs() < 1e-8); }
            for j in 0..k { prop_assert!((base.pci[j] - other.pci[col_of(j)]).abs() < 1e-8); }
        }

        #[test]
        fn fitness_means_and_anonymity(m in random_connected()) {
            let opts = FitnessOptions::default();
            let res = fitness_complexity_observed(&m, &opts, |_, f, q| {
                assert!((stats::mean(f) - 1.0).abs() < 1e-9);
                assert!((stats::mean(q) - 1.0).abs() < 1e-9);
                assert!(f.iter().chain(q).all(|&x| x > 0.0));
            });
            // duplicating country 0 must give it a twin with equal fitness
            let n = m.n_countries();
            let mut labels = m.country_labels().to_vec();
            labels.push("twin".into());
            let entries: Vec<(usize, usize)> = m.entries().chain(m.row(0).iter().map(|&j| (n, j))).collect();
            let dup = BinaryMatrix::from_entries(labels, m.product_labels().to_vec(), entries).unwrap();
            let f = match fitness_complexity(&dup, &opts) {
                Ok(o) => o.fitness,
                Err(Error::NonConvergence { last, .. }) | Err(Error::NumericalUnderflow { last }) => last.fitness,
                Err(e) => panic!("{e}"),
            };
            prop_assert!((f[0] - f[n]).abs() <= 1e-10 * f[0].abs().max(1e-300));
            let _ = res;
        }
    }
}
