//! Symmetric sparse operators in compressed-row storage and a sparse
//! Cholesky factorization with nested-dissection ordering.

mod cholesky;
mod ordering;

use std::fmt::Write as _;

pub use cholesky::CholeskyFactor;
pub use ordering::nested_dissection;

/// Symmetric matrix with both triangles stored row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    constrained: bool,
}

impl SymmetricSparseOperator {
    /// Builds an all-zero operator on the sparsity pattern given by `(row, col)`
    /// pairs. The pattern is symmetrized and each row is sorted.
    pub fn from_pattern(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in pairs {
            rows[i].push(j);
            rows[j].push(i);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        SymmetricSparseOperator { n, row_ptr, col_idx, values: vec![0.0; nnz], constrained: false }
    }

    /// Builds from triplets, summing duplicates. Panics if the result is not
    /// exactly symmetric.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut op = Self::from_pattern(n, triplets.iter().map(|&(i, j, _)| (i, j)));
        for &(i, j, v) in triplets {
            op.add(i, j, v);
        }
        assert_eq!(op.max_asymmetry(), 0.0, "triplets are not symmetric");
        op
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// True when Dirichlet rows/columns have been eliminated.
    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds `v` to entry `(i, j)` only; the caller is responsible for the
    /// mirrored entry. Panics if `(i, j)` is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.position(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[p] += v;
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&j, &v)| v * y[j]).sum::<f64>()
            })
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Largest `|A_ij - A_ji|` over the stored pattern.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Restricts to the rows/columns listed in `keep` (in that order),
    /// producing a constrained operator.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in keep {
            let (cols, vals) = self.row(i);
            let mut entries: Vec<(usize, f64)> =
                cols.iter().zip(vals).filter(|(&j, _)| new_index[j] != usize::MAX).map(|(&j, &v)| (new_index[j], v)).collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (j, v) in entries {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SymmetricSparseOperator { n: keep.len(), row_ptr, col_idx, values, constrained: true }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    /// `%%MatrixMarket matrix coordinate real symmetric` text (lower triangle, 1-based).
    pub fn to_matrix_market(&self) -> String {
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).filter(move |(&j, _)| j <= i).map(move |(&j, &v)| (i, j, v))
            })
            .collect();
        let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, lower.len());
        for (i, j, v) in lower {
            let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> SymmetricSparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SymmetricSparseOperator::from_triplets(n, &t)
    }

    #[test]
    fn matvec_and_restrict() {
        let a = laplace_1d(5);
        assert_eq!(a.nnz(), 13);
        assert_eq!(a.mul_vec(&[1.0; 5]), vec![1.0, 0.0, 0.0, 0.0, 1.0]);
        let r = a.restrict(&[1, 2, 3]);
        assert!(r.is_constrained());
        assert_eq!(r.to_dense(), laplace_1d(3).to_dense());
    }

    #[test]
    fn matrix_market_header() {
        let mm = laplace_1d(3).to_matrix_market();
        let mut lines = mm.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real symmetric"));
        assert_eq!(lines.next(), Some("3 3 5"));
    }
}
