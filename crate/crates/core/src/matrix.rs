//! Trade data containers, binarization, the RCA filter and degenerate pruning.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Axis, Error, Result};

fn check_unique(labels: &[String], axis: Axis) -> Result<()> {
    let mut seen = BTreeSet::new();
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel { axis, label: label.clone() });
        }
    }
    Ok(())
}

/// Sparse non-negative country × product export values.
///
/// Only strictly positive values are stored; a missing cell means zero.
/// Entries are kept sorted by `(country, product)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportMatrix {
    country_labels: Vec<String>,
    product_labels: Vec<String>,
    entries: Vec<(usize, usize, f64)>,
}

impl ExportMatrix {
    /// Builds a matrix from `(country, product, value)` triplets.
    ///
    /// Repeated cells are summed and zero cells are dropped. Negative or
    /// non-finite values are rejected.
    pub fn from_triplets<I>(
        country_labels: Vec<String>,
        product_labels: Vec<String>,
        triplets: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        check_unique(&country_labels, Axis::Country)?;
        check_unique(&product_labels, Axis::Product)?;
        let (rows, cols) = (country_labels.len(), product_labels.len());
        let mut cells = Vec::new();
        for (row, col, value) in triplets {
            if row >= rows || col >= cols {
                return Err(Error::IndexOutOfBounds { row, col, rows, cols });
            }
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeValue { row, col, value });
            }
            cells.push((row, col, value));
        }
        // stable sort keeps the summation order of duplicates deterministic
        cells.sort_by_key(|c| (c.0, c.1));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(cells.len());
        for (row, col, value) in cells {
            match entries.last_mut() {
                Some(last) if last.0 == row && last.1 == col => last.2 += value,
                _ => entries.push((row, col, value)),
            }
        }
        entries.retain(|e| e.2 > 0.0);
        Ok(Self { country_labels, product_labels, entries })
    }

    pub fn country_labels(&self) -> &[String] {
        &self.country_labels
    }

    pub fn product_labels(&self) -> &[String] {
        &self.product_labels
    }

    pub fn n_countries(&self) -> usize {
        self.country_labels.len()
    }

    pub fn n_products(&self) -> usize {
        self.product_labels.len()
    }

    /// Stored (strictly positive) cells, sorted by `(country, product)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, country: usize, product: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(country, product)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn country_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_countries()];
        for &(i, _, v) in &self.entries {
            totals[i] += v;
        }
        totals
    }

    pub fn product_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_products()];
        for &(_, j, v) in &self.entries {
            totals[j] += v;
        }
        totals
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    /// Drops countries and products whose exports sum to zero, keeping labels
    /// of the survivors in their original order.
    pub fn drop_empty_marginals(&self) -> Result<Self> {
        let rows: Vec<bool> = self.country_totals().iter().map(|&t| t > 0.0).collect();
        let cols: Vec<bool> = self.product_totals().iter().map(|&t| t > 0.0).collect();
        let (row_map, country_labels) = compact(&rows, &self.country_labels);
        let (col_map, product_labels) = compact(&cols, &self.product_labels);
        if country_labels.is_empty() || product_labels.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let entries = self
            .entries
            .iter()
            .map(|&(i, j, v)| (row_map[i].unwrap(), col_map[j].unwrap(), v))
            .collect();
        Ok(Self { country_labels, product_labels, entries })
    }
}

/// Maps kept indices to their new position and returns the surviving labels.
fn compact(keep: &[bool], labels: &[String]) -> (Vec<Option<usize>>, Vec<String>) {
    let mut map = vec![None; keep.len()];
    let mut kept = Vec::new();
    for (idx, &k) in keep.iter().enumerate() {
        if k {
            map[idx] = Some(kept.len());
            kept.push(labels[idx].clone());
        }
    }
    (map, kept)
}

/// Binary country × product matrix with row (CSR) and column (CSC) indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    country_labels: Vec<String>,
    product_labels: Vec<String>,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    diversification: Vec<usize>,
    ubiquity: Vec<usize>,
}

impl BinaryMatrix {
    /// Builds a matrix from `(country, product)` pairs; duplicates collapse.
    pub fn from_entries<I>(
        country_labels: Vec<String>,
        product_labels: Vec<String>,
        entries: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        check_unique(&country_labels, Axis::Country)?;
        check_unique(&product_labels, Axis::Product)?;
        let (rows, cols) = (country_labels.len(), product_labels.len());
        let mut pairs = Vec::new();
        for (row, col) in entries {
            if row >= rows || col >= cols {
                return Err(Error::IndexOutOfBounds { row, col, rows, cols });
            }
            pairs.push((row, col));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted(country_labels, product_labels, &pairs))
    }

    /// Builds a matrix from dense 0/1 rows with generated labels `c0, c1, ...`
    /// and `p0, p1, ...`. Any nonzero cell counts as 1.
    pub fn from_dense<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::LengthMismatch { left: cols, right: row.len() });
            }
            entries.extend(row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, _)| (i, j)));
        }
        let countries = (0..rows.len()).map(|i| alloc::format!("c{i}")).collect();
        let products = (0..cols).map(|j| alloc::format!("p{j}")).collect();
        Self::from_entries(countries, products, entries)
    }

    // `pairs` must be sorted and unique, with indices in range.
    fn from_sorted(country_labels: Vec<String>, product_labels: Vec<String>, pairs: &[(usize, usize)]) -> Self {
        let (rows, cols) = (country_labels.len(), product_labels.len());
        let mut diversification = vec![0usize; rows];
        let mut ubiquity = vec![0usize; cols];
        for &(i, j) in pairs {
            diversification[i] += 1;
            ubiquity[j] += 1;
        }
        let row_ptr = prefix_offsets(&diversification);
        let col_ptr = prefix_offsets(&ubiquity);
        let row_cols = pairs.iter().map(|&(_, j)| j).collect();
        // pairs are row-major, so filling columns in that order keeps each column sorted
        let mut col_rows = vec![0usize; pairs.len()];
        let mut fill = col_ptr[..cols].to_vec();
        for &(i, j) in pairs {
            col_rows[fill[j]] = i;
            fill[j] += 1;
        }
        Self {
            country_labels,
            product_labels,
            row_ptr,
            row_cols,
            col_ptr,
            col_rows,
            diversification,
            ubiquity,
        }
    }

    pub fn country_labels(&self) -> &[String] {
        &self.country_labels
    }

    pub fn product_labels(&self) -> &[String] {
        &self.product_labels
    }

    pub fn n_countries(&self) -> usize {
        self.country_labels.len()
    }

    pub fn n_products(&self) -> usize {
        self.product_labels.len()
    }

    pub fn n_entries(&self) -> usize {
        self.row_cols.len()
    }

    /// Products made by country `i`, ascending.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.row_cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Countries making product `j`, ascending.
    pub fn column(&self, j: usize) -> &[usize] {
        &self.col_rows[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    /// All `(country, product)` pairs in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_countries()).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn diversification(&self) -> &[usize] {
        &self.diversification
    }

    pub fn ubiquity(&self) -> &[usize] {
        &self.ubiquity
    }

    pub fn fill_rate(&self) -> f64 {
        let cells = self.n_countries() * self.n_products();
        if cells == 0 {
            0.0
        } else {
            self.n_entries() as f64 / cells as f64
        }
    }

    /// True when every country and every product has at least one entry.
    pub fn is_pruned(&self) -> bool {
        self.diversification.iter().all(|&d| d > 0) && self.ubiquity.iter().all(|&u| u > 0)
    }

    /// Whether the bipartite country–product graph forms a single component.
    /// Empty rows or columns count as separate components.
    pub fn is_connected(&self) -> bool {
        let (n, m) = (self.n_countries(), self.n_products());
        if n + m == 0 {
            return true;
        }
        let mut seen_country = vec![false; n];
        let mut seen_product = vec![false; m];
        // node ids: countries 0..n, products n..n+m
        let mut stack = vec![0usize];
        if n > 0 {
            seen_country[0] = true;
        } else {
            seen_product[0] = true;
            stack[0] = n;
        }
        let mut visited = 1;
        while let Some(node) = stack.pop() {
            if node < n {
                for &j in self.row(node) {
                    if !seen_product[j] {
                        seen_product[j] = true;
                        visited += 1;
                        stack.push(n + j);
                    }
                }
            } else {
                for &i in self.column(node - n) {
                    if !seen_country[i] {
                        seen_country[i] = true;
                        visited += 1;
                        stack.push(i);
                    }
                }
            }
        }
        visited == n + m
    }

    /// Keeps the flagged rows and columns, preserving order and labels.
    pub fn select(&self, keep_countries: &[bool], keep_products: &[bool]) -> Self {
        let (row_map, country_labels) = compact(keep_countries, &self.country_labels);
        let (col_map, product_labels) = compact(keep_products, &self.product_labels);
        let pairs: Vec<(usize, usize)> = self
            .entries()
            .filter_map(|(i, j)| Some((row_map[i]?, col_map[j]?)))
            .collect();
        Self::from_sorted(country_labels, product_labels, &pairs)
    }

    /// Dense 0/1 copy, row-major. Meant for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.n_products()]; self.n_countries()];
        for (i, j) in self.entries() {
            dense[i][j] = 1;
        }
        dense
    }
}

fn prefix_offsets(counts: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(counts.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &c in counts {
        acc += c;
        offsets.push(acc);
    }
    offsets
}

/// Plain binarization: a cell is set exactly when its export value is positive.
pub fn binarize(x: &ExportMatrix) -> BinaryMatrix {
    let pairs: Vec<(usize, usize)> = x.entries.iter().map(|&(i, j, _)| (i, j)).collect();
    BinaryMatrix::from_sorted(x.country_labels.clone(), x.product_labels.clone(), &pairs)
}

/// Revealed comparative advantage values on the sparsity pattern of an
/// export matrix. Cells absent from the pattern have RCA zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    country_labels: Vec<String>,
    product_labels: Vec<String>,
    entries: Vec<(usize, usize, f64)>,
}

impl RcaMatrix {
    pub fn country_labels(&self) -> &[String] {
        &self.country_labels
    }

    pub fn product_labels(&self) -> &[String] {
        &self.product_labels
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, country: usize, product: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(country, product)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }
}

/// RCA_ij = (x_ij / row total) / (column total / world total).
pub fn rca(x: &ExportMatrix) -> Result<RcaMatrix> {
    let rows = x.country_totals();
    let cols = x.product_totals();
    if let Some(index) = rows.iter().position(|&t| t <= 0.0) {
        return Err(Error::ZeroMarginal { axis: Axis::Country, index });
    }
    if let Some(index) = cols.iter().position(|&t| t <= 0.0) {
        return Err(Error::ZeroMarginal { axis: Axis::Product, index });
    }
    let world = x.total();
    let entries = x
        .entries
        .iter()
        .map(|&(i, j, v)| (i, j, (v / rows[i]) / (cols[j] / world)))
        .collect();
    Ok(RcaMatrix {
        country_labels: x.country_labels.clone(),
        product_labels: x.product_labels.clone(),
        entries,
    })
}

/// Binarizes on `RCA >= threshold`. Ties at the threshold are included.
pub fn rca_binarize(x: &ExportMatrix, threshold: f64) -> Result<BinaryMatrix> {
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::InvalidParameter("rca threshold must be finite and >= 0"));
    }
    let r = rca(x)?;
    let pairs: Vec<(usize, usize)> = r
        .entries
        .iter()
        .filter(|e| e.2 >= threshold)
        .map(|&(i, j, _)| (i, j))
        .collect();
    Ok(BinaryMatrix::from_sorted(r.country_labels, r.product_labels, &pairs))
}

/// Repeatedly drops countries with no products and products with no
/// producers. Survivors keep their labels and relative order.
pub fn prune_degenerate(m: &BinaryMatrix) -> Result<BinaryMatrix> {
    let mut current = m.clone();
    while !current.is_pruned() {
        let keep_c: Vec<bool> = current.diversification.iter().map(|&d| d > 0).collect();
        let keep_p: Vec<bool> = current.ubiquity.iter().map(|&u| u > 0).collect();
        current = current.select(&keep_c, &keep_p);
    }
    if current.n_countries() == 0 || current.n_products() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(current)
}

impl core::fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{} countries x {} products, {} entries",
            self.n_countries(),
            self.n_products(),
            self.n_entries()
        )
    }
}

/// Convenience for tests and examples: labels `prefix0, prefix1, ...`.
pub fn numbered_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| prefix.to_string() + &alloc::format!("{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn export(rows: &[&[f64]]) -> ExportMatrix {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let triplets = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)));
        ExportMatrix::from_triplets(numbered_labels("c", n), numbered_labels("p", m), triplets).unwrap()
    }

    #[test]
    fn binarize_thresholds_positive_cells() {
        let b = binarize(&export(&[&[0.5, 0.0], &[0.0, 0.0]]));
        assert_eq!(b.entries().collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(b.diversification(), &[1, 0]);
        assert_eq!(b.ubiquity(), &[1, 0]);

        let b = binarize(&export(&[&[3.0, 7.0], &[2.0, 9.0]]));
        assert_eq!(b.n_entries(), 4);
        assert_eq!(b.diversification(), &[2, 2]);
        assert_eq!(b.ubiquity(), &[2, 2]);

        let b = binarize(&export(&[]));
        assert_eq!(b.n_entries(), 0);
        assert!(b.diversification().is_empty() && b.ubiquity().is_empty());
    }

    #[test]
    fn duplicates_sum_and_negatives_fail() {
        let x = ExportMatrix::from_triplets(
            numbered_labels("c", 1),
            numbered_labels("p", 1),
            [(0, 0, 2.0), (0, 0, 3.0)],
        )
        .unwrap();
        assert_eq!(x.entries(), &[(0, 0, 5.0)]);
        let err = ExportMatrix::from_triplets(numbered_labels("c", 1), numbered_labels("p", 1), [(0, 0, -1.0)]);
        assert!(matches!(err, Err(Error::NegativeValue { .. })));
        let err = ExportMatrix::from_triplets(
            alloc::vec!["a".into(), "a".into()],
            numbered_labels("p", 1),
            core::iter::empty(),
        );
        assert!(matches!(err, Err(Error::DuplicateLabel { axis: Axis::Country, .. })));
    }

    #[test]
    fn rca_hand_values() {
        // row totals 10, 20; column totals 20, 10; world 30
        let r = rca(&export(&[&[10.0, 0.0], &[10.0, 10.0]])).unwrap();
        assert_relative_eq!(r.get(0, 0), 1.5, epsilon = 1e-15);
        assert_relative_eq!(r.get(1, 0), 0.75, epsilon = 1e-15);
        assert_relative_eq!(r.get(1, 1), 1.5, epsilon = 1e-15);
        assert_eq!(r.get(0, 1), 0.0);

        assert_eq!(rca(&export(&[&[5.0]])).unwrap().get(0, 0), 1.0);
        let uniform = rca(&export(&[&[2.0, 2.0, 2.0], &[2.0, 2.0, 2.0]])).unwrap();
        assert!(uniform.entries().iter().all(|e| (e.2 - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rca_needs_positive_marginals() {
        let x = export(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(rca(&x), Err(Error::ZeroMarginal { axis: Axis::Country, index: 1 }));
        let pruned = x.drop_empty_marginals().unwrap();
        assert_eq!(pruned.n_countries(), 1);
        assert_eq!(pruned.n_products(), 1);
    }

    #[test]
    fn rca_binarize_cases() {
        let x = export(&[&[10.0, 0.0], &[10.0, 10.0]]);
        let b = rca_binarize(&x, 1.0).unwrap();
        assert_eq!(b.entries().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        assert_eq!(rca_binarize(&x, 0.0).unwrap(), binarize(&x));
        let uniform = export(&[&[4.0, 4.0], &[4.0, 4.0]]);
        assert_eq!(rca_binarize(&uniform, 1.0).unwrap().n_entries(), 4);
    }

    #[test]
    fn prune_cases() {
        let m = BinaryMatrix::from_dense(&[[1u8, 0], [0, 0]]).unwrap();
        let p = prune_degenerate(&m).unwrap();
        assert_eq!(p.country_labels(), &["c0"]);
        assert_eq!(p.product_labels(), &["p0"]);

        let full = BinaryMatrix::from_dense(&[[1u8, 1], [0, 1]]).unwrap();
        assert_eq!(prune_degenerate(&full).unwrap(), full);

        let zeros = BinaryMatrix::from_dense(&[[0u8, 0], [0, 0]]).unwrap();
        assert_eq!(prune_degenerate(&zeros), Err(Error::EmptyMatrix));
    }

    #[test]
    fn connectivity() {
        let block = BinaryMatrix::from_dense(&[[1u8, 0], [0, 1]]).unwrap();
        assert!(!block.is_connected());
        let joined = BinaryMatrix::from_dense(&[[1u8, 1], [0, 1]]).unwrap();
        assert!(joined.is_connected());
    }

    fn dense_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..8, 1usize..8).prop_flat_map(|(n, m)| {
            proptest::collection::vec(
                proptest::collection::vec(prop_oneof![Just(0.0), 0.01f64..100.0], m),
                n,
            )
        })
    }

    proptest! {
        #[test]
        fn diversification_matches_naive_recount(rows in dense_strategy()) {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let b = binarize(&export(&refs));
            for (i, r) in rows.iter().enumerate() {
                prop_assert_eq!(b.diversification()[i], r.iter().filter(|&&v| v > 0.0).count());
            }
            for j in 0..rows[0].len() {
                prop_assert_eq!(b.ubiquity()[j], rows.iter().filter(|r| r[j] > 0.0).count());
                prop_assert_eq!(b.column(j).len(), b.ubiquity()[j]);
            }
            let sd: usize = b.diversification().iter().sum();
            let su: usize = b.ubiquity().iter().sum();
            prop_assert_eq!(sd, su);
            prop_assert_eq!(sd, b.n_entries());
        }

        #[test]
        fn rca_shares_reconstruct(rows in dense_strategy()) {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let Ok(x) = export(&refs).drop_empty_marginals() else { return Ok(()) };
            let r = rca(&x).unwrap();
            let world = x.total();
            let col_share: Vec<f64> = x.product_totals().iter().map(|t| t / world).collect();
            let mut sums = vec![0.0; x.n_countries()];
            for &(i, j, v) in r.entries() {
                sums[i] += v * col_share[j];
            }
            for s in sums {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(rca_binarize(&x, 0.0).unwrap(), binarize(&x));
        }

        #[test]
        fn prune_is_idempotent(rows in proptest::collection::vec(proptest::collection::vec(0u8..2, 5), 1..7)) {
            let m = BinaryMatrix::from_dense(&rows).unwrap();
            if let Ok(once) = prune_degenerate(&m) {
                prop_assert!(once.is_pruned());
                prop_assert_eq!(prune_degenerate(&once).unwrap(), once.clone());
                let sd: usize = once.diversification().iter().sum();
                prop_assert_eq!(sd, once.ubiquity().iter().sum::<usize>());
            }
        }
    }
}
