//! Up-looking sparse Cholesky factorization `P A Pᵀ = L Lᵀ`.
//!
//! Symbolic analysis computes the elimination tree and column counts; the
//! numeric phase computes one row of `L` at a time from the row subtree
//! (`ereach`), storing `L` column-compressed with the diagonal first.

use super::{nested_dissection, SymmetricSparseOperator};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// `perm[k]` = original index of pivot `k`.
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Upper triangle of `P A Pᵀ` in compressed-column form.
struct UpperCsc {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

fn permuted_upper(a: &SymmetricSparseOperator, pinv: &[usize]) -> UpperCsc {
    let n = a.dim();
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for &j in a.row(i).0 {
            let (pi, pj) = (pinv[i], pinv[j]);
            if pi <= pj {
                counts[pj] += 1;
            }
        }
    }
    let mut col_ptr = vec![0; n + 1];
    for k in 0..n {
        col_ptr[k + 1] = col_ptr[k] + counts[k];
    }
    let mut next = col_ptr.clone();
    let mut row_idx = vec![0; col_ptr[n]];
    let mut values = vec![0.0; col_ptr[n]];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let (pi, pj) = (pinv[i], pinv[j]);
            if pi <= pj {
                row_idx[next[pj]] = pi;
                values[next[pj]] = v;
                next[pj] += 1;
            }
        }
    }
    UpperCsc { col_ptr, row_idx, values }
}

fn etree(c: &UpperCsc, n: usize) -> Vec<Option<usize>> {
    let mut parent = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for k in 0..n {
        for p in c.col_ptr[k]..c.col_ptr[k + 1] {
            let mut i = Some(c.row_idx[p]);
            while let Some(cur) = i {
                if cur >= k {
                    break;
                }
                let next = ancestor[cur];
                ancestor[cur] = Some(k);
                if next.is_none() {
                    parent[cur] = Some(k);
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written into
/// `stack[top..]` in topological order. `mark` entries equal to `k` are visited.
fn ereach(c: &UpperCsc, k: usize, parent: &[Option<usize>], stack: &mut [usize], mark: &mut [usize]) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for p in c.col_ptr[k]..c.col_ptr[k + 1] {
        let mut i = c.row_idx[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i].expect("row subtree reaches k");
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl CholeskyFactor {
    /// Factorizes with a nested-dissection ordering.
    pub fn new(a: &SymmetricSparseOperator) -> Result<Self> {
        let perm = nested_dissection(a);
        Self::with_ordering(a, perm)
    }

    pub fn with_ordering(a: &SymmetricSparseOperator, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        let mut pinv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }
        let c = permuted_upper(a, &pinv);
        let parent = etree(&c, n);

        let mut stack = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&c, k, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut col_ptr = vec![0; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut fill = col_ptr.clone();
        let mut x = vec![0.0; n];
        mark.iter_mut().for_each(|m| *m = usize::MAX);

        for k in 0..n {
            let top = ereach(&c, k, &parent, &mut stack, &mut mark);
            for p in c.col_ptr[k]..c.col_ptr[k + 1] {
                let i = c.row_idx[p];
                if i <= k {
                    x[i] += c.values[p];
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in (col_ptr[i] + 1)..fill[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                let p = fill[i];
                fill[i] += 1;
                row_idx[p] = k;
                values[p] = lki;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: perm[k] });
            }
            let p = fill[k];
            fill[k] += 1;
            row_idx[p] = k;
            values[p] = d.sqrt();
        }
        Ok(CholeskyFactor { n, perm, col_ptr, row_idx, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for j in 0..n {
            let range = self.col_ptr[j]..self.col_ptr[j + 1];
            y[j] /= self.values[range.start];
            let yj = y[j];
            for p in (range.start + 1)..range.end {
                y[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let range = self.col_ptr[j]..self.col_ptr[j + 1];
            let mut s = y[j];
            for p in (range.start + 1)..range.end {
                s -= self.values[p] * y[self.row_idx[p]];
            }
            y[j] = s / self.values[range.start];
        }
        for (k, &i) in self.perm.iter().enumerate() {
            b[i] = y[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::norm2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> SymmetricSparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        let mut diag = vec![1.0; n];
        for i in 0..n {
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    t.push((i, j, v));
                    t.push((j, i, v));
                    diag[i] += v.abs();
                    diag[j] += v.abs();
                }
            }
        }
        for (i, d) in diag.into_iter().enumerate() {
            t.push((i, i, d));
        }
        SymmetricSparseOperator::from_triplets(n, &t)
    }

    #[test]
    fn solves_random_spd_systems() {
        for (n, seed) in [(1, 1), (10, 2), (200, 3), (1500, 4)] {
            let a = random_spd(n, seed);
            let f = CholeskyFactor::new(&a).unwrap();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b = a.mul_vec(&x);
            let y = f.solve(&b);
            let err: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
            assert!(norm2(&err) <= 1e-10 * norm2(&x), "n={n}");
        }
    }

    #[test]
    fn natural_and_dissection_orderings_agree() {
        let a = random_spd(300, 9);
        let b: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let x1 = CholeskyFactor::with_ordering(&a, (0..300).collect()).unwrap().solve(&b);
        let x2 = CholeskyFactor::new(&a).unwrap().solve(&b);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-10 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = SymmetricSparseOperator::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(CholeskyFactor::new(&a), Err(Error::NotPositiveDefinite { .. })));
    }
}
