use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::*;
use crate::fem::{assemble, FeSpace};
use crate::geometry::{builtin_domain, initial_mesh};
use crate::sparse::dot;

fn operators(id: &str, n: usize, k: u8) -> (SymmetricSparseOperator, SymmetricSparseOperator) {
    let mesh = initial_mesh(&builtin_domain(id).unwrap(), n).unwrap();
    let space = FeSpace::new(Arc::new(mesh), k).unwrap();
    assemble(&space).unwrap()
}

/// Dense generalized eigenvalues via `M = LLᵀ`, `L⁻¹ A L⁻ᵀ`.
fn dense_eigenvalues(a: &SymmetricSparseOperator, m: &SymmetricSparseOperator) -> Vec<f64> {
    let n = a.dim();
    let da = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let dm = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let l = dm.cholesky().unwrap().l();
    let linv = l.try_inverse().unwrap();
    let c = &linv * da * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn matches_dense_oracle_on_small_problems() {
    for (id, n, k) in [("unit_square", 8, 1), ("omega1", 8, 1), ("unit_square", 4, 2)] {
        let (a, m) = operators(id, n, k);
        assert!(a.dim() <= 100);
        let count = 8.min(a.dim() - 1);
        let pairs = solve_smallest(&a, &m, count, &SolverOptions::default()).unwrap();
        let dense = dense_eigenvalues(&a, &m);
        for j in 0..count {
            let rel = (pairs.values[j] - dense[j]).abs() / dense[j];
            assert!(rel <= 1e-8, "{id} k={k} j={j}: {} vs {}", pairs.values[j], dense[j]);
        }
    }
}

#[test]
fn square_first_eigenvalue_from_above() {
    let (a, m) = operators("unit_square", 8, 1);
    let pairs = solve_smallest(&a, &m, 1, &SolverOptions::default()).unwrap();
    assert!(pairs.values[0] >= 2.0 * PI * PI);
    assert!(pairs.values[0] < 2.0 * PI * PI * 1.1);
}

#[test]
fn contract_orthonormality_and_residuals() {
    let (a, m) = operators("omega2", 8, 1);
    let opts = SolverOptions::default();
    let pairs = solve_smallest(&a, &m, 6, &opts).unwrap();
    assert_eq!(pairs.m_converged, 6);
    assert!(pairs.values.windows(2).all(|w| w[0] <= w[1]));
    assert!(pairs.orthonormality_defect(&m) <= 1e-10);
    for j in 0..6 {
        assert!(pairs.residuals[j] <= opts.tol);
        let again = relative_residual(&a, &m, pairs.values[j], &pairs.vectors[j]);
        assert!((again - pairs.residuals[j]).abs() <= 1e-12);
        let first = pairs.vectors[j].iter().find(|v| v.abs() > 0.0).unwrap();
        assert!(*first > 0.0);
    }
}

/// Five-point Laplacian on a `k × k` grid with identity mass. Its spectrum is
/// `μ_a + μ_b` over pairs of 1D eigenvalues, so every `a ≠ b` is double.
fn grid_laplacian(k: usize) -> (SymmetricSparseOperator, SymmetricSparseOperator) {
    let idx = |i: usize, j: usize| i * k + j;
    let mut t = Vec::new();
    let mut id = Vec::new();
    for i in 0..k {
        for j in 0..k {
            t.push((idx(i, j), idx(i, j), 4.0));
            id.push((idx(i, j), idx(i, j), 1.0));
            if i + 1 < k {
                t.push((idx(i, j), idx(i + 1, j), -1.0));
                t.push((idx(i + 1, j), idx(i, j), -1.0));
            }
            if j + 1 < k {
                t.push((idx(i, j), idx(i, j + 1), -1.0));
                t.push((idx(i, j + 1), idx(i, j), -1.0));
            }
        }
    }
    (SymmetricSparseOperator::from_triplets(k * k, &t), SymmetricSparseOperator::from_triplets(k * k, &id))
}

#[test]
fn finds_both_copies_of_a_multiple_eigenvalue() {
    let k = 12;
    let (a, m) = grid_laplacian(k);
    let mu = |a: usize| 2.0 - 2.0 * (a as f64 * PI / (k + 1) as f64).cos();
    let mut exact: Vec<f64> = (1..=k).flat_map(|a| (1..=k).map(move |b| mu(a) + mu(b))).collect();
    exact.sort_by(f64::total_cmp);
    assert!((exact[1] - exact[2]).abs() < 1e-14);
    let pairs = solve_smallest(&a, &m, 6, &SolverOptions::default()).unwrap();
    for j in 0..6 {
        assert!((pairs.values[j] - exact[j]).abs() <= 1e-10 * exact[j], "j={j}: {:?}", pairs.values);
    }
    let groups = pairs.near_multiple_groups();
    assert!(groups.contains(&(2, 3)) && groups.contains(&(5, 6)), "{groups:?}");
    assert!(pairs.orthonormality_defect(&m) <= 1e-10);
}

#[test]
fn square_mesh_splits_the_double_eigenvalue() {
    // the mesh has only the x <-> y reflection, which does not force λ2 = λ3
    let (a, m) = operators("unit_square", 8, 1);
    let pairs = solve_smallest(&a, &m, 3, &SolverOptions::default()).unwrap();
    let dense = dense_eigenvalues(&a, &m);
    for j in 0..3 {
        assert!((pairs.values[j] - dense[j]).abs() <= 1e-8 * dense[j]);
    }
    assert!(pairs.near_multiple_groups().is_empty());
}

#[test]
fn deterministic_given_seed() {
    let (a, m) = operators("omega1", 8, 1);
    let p1 = solve_smallest(&a, &m, 4, &SolverOptions::default()).unwrap();
    let p2 = solve_smallest(&a, &m, 4, &SolverOptions::default()).unwrap();
    assert_eq!(p1.values, p2.values);
    assert_eq!(p1.vectors, p2.vectors);
}

#[test]
fn scale_equivariance() {
    let (a, m) = operators("unit_square", 8, 1);
    let opts = SolverOptions::default();
    let p = solve_smallest(&a, &m, 1, &opts).unwrap();
    let q = solve_smallest(&a.scaled(3.5), &m, 1, &opts).unwrap();
    assert!((q.values[0] - 3.5 * p.values[0]).abs() <= 1e-9 * q.values[0]);
    let overlap = dot(&p.vectors[0], &m.mul_vec(&q.vectors[0])).abs();
    // sin of the subspace angle
    assert!((1.0 - overlap * overlap).max(0.0).sqrt() <= 1e-8);
}

#[test]
fn argument_errors() {
    let (a, m) = operators("unit_square", 2, 2);
    assert_eq!(a.dim(), 9);
    assert!(matches!(solve_smallest(&a, &m, 9, &SolverOptions::default()), Err(Error::Argument(_))));
    assert!(matches!(solve_smallest(&a, &m, 0, &SolverOptions::default()), Err(Error::Argument(_))));
}

#[test]
fn cluster_validation() {
    assert!(ClusterSelection::new(0, 1).is_err());
    assert!(ClusterSelection::new(3, 2).is_err());
    let j = ClusterSelection::new(12, 13).unwrap();
    assert_eq!(j.len(), 2);
    assert_eq!(j.pairs_to_request(), 16);
    let pairs = EigenPairSet::new(vec![1.0, 2.0, 3.0], vec![vec![]; 3], vec![0.0; 3], 3, 0);
    assert!(ClusterSelection::new(2, 3).unwrap().check(&pairs).is_err());
    assert!(ClusterSelection::new(2, 2).unwrap().check(&pairs).is_ok());
}

#[test]
fn separation_with_square_reference() {
    let pi2 = PI * PI;
    let pairs = EigenPairSet::new(vec![2.01 * pi2, 5.02 * pi2, 5.03 * pi2], vec![vec![]; 3], vec![0.0; 3], 3, 0);
    let reference = [2.0 * pi2, 5.0 * pi2, 5.0 * pi2, 8.0 * pi2];
    let d = separation_diagnostic(&pairs, ClusterSelection::new(1, 1).unwrap(), &reference).unwrap();
    assert!((d.gap_above - 3.0 * pi2).abs() < 1e-12);
    assert!((d.gap_below - 2.0 * pi2).abs() < 1e-12);
    // max over i ∈ {2,3} of 2π² / |λ_i − 2π²|
    let expected = 2.0 / 3.02;
    assert!((d.m_j_discrete - expected).abs() < 1e-12);
}

#[test]
fn separation_division_guard() {
    let pairs = EigenPairSet::new(vec![1.0, 2.0, 2.0, 4.0], vec![vec![]; 4], vec![0.0; 4], 4, 0);
    let d = separation_diagnostic(&pairs, ClusterSelection::new(2, 2).unwrap(), &[]).unwrap();
    assert!(d.m_j_discrete.is_infinite());
    let d = separation_diagnostic(&pairs, ClusterSelection::new(2, 3).unwrap(), &[]).unwrap();
    assert_eq!(d.gap_below, 1.0);
    assert_eq!(d.gap_above, 2.0);
    assert!((d.m_j_discrete - 2.0).abs() < 1e-15);
    assert!(separation_diagnostic(&pairs, ClusterSelection::new(3, 4).unwrap(), &[]).is_err());
}
