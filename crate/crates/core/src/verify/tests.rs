use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn square_space(n: usize, k: u8) -> Arc<FeSpace> {
    let mesh = initial_mesh(&builtin_domain("unit_square").unwrap(), n).unwrap();
    Arc::new(FeSpace::new(Arc::new(mesh), k).unwrap())
}

fn pairs_for(space: &Arc<FeSpace>, m: usize) -> (EigenPairSet, SymmetricSparseOperator) {
    let (a, mass) = assemble(space).unwrap();
    (solve_smallest(&a, &mass, m, &SolverOptions::default()).unwrap(), mass)
}

#[test]
fn lowest_modes() {
    let modes: Vec<(u32, u32)> = ExactEigenpair::lowest(6).iter().map(|e| (e.m, e.n)).collect();
    assert_eq!(modes, vec![(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)]);
    assert!(ExactEigenpair::new(0, 1).is_err());
    let u = ExactEigenpair::new(1, 1).unwrap();
    assert!((u.value([0.5, 0.5]) - 2.0).abs() < 1e-15);
    assert!(u.value([0.0, 0.3]).abs() < 1e-15);
}

#[test]
fn ritz_reproduces_discrete_functions() {
    let s = square_space(4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let coeffs = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = FeFunction::from_coeffs(Arc::clone(&s), coeffs).unwrap();
    let r = ritz_project_with(&s, |t, l, _| (0.0, g.evaluate_gradient(t, l).unwrap())).unwrap();
    for (a, b) in r.coeffs().iter().zip(g.coeffs()) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn ritz_is_linear() {
    let s = square_space(8, 1);
    let u = ExactEigenpair::new(1, 2).unwrap();
    let r = ritz_project(&u, &s).unwrap();
    let lambda = u.lambda();
    let r3 = ritz_project_with(&s, |_, _, p| (-3.0 * lambda * u.value(p), [0.0, 0.0])).unwrap();
    for (a, b) in r3.coeffs().iter().zip(r.coeffs()) {
        assert!((a + 3.0 * b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn ritz_energy_error_halves() {
    // ‖∇(u − R u)‖² = ‖∇u‖² − ‖∇R u‖² = λ − rᵀ A r for normalized u
    let u = ExactEigenpair::new(1, 1).unwrap();
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let s = square_space(n, 1);
            let r = ritz_project(&u, &s).unwrap();
            let (a, _) = assemble(&s).unwrap();
            let rf = r.free_coeffs();
            (u.lambda() - a.bilinear(&rf, &rf)).sqrt()
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..2.2).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn cluster_projection_contract() {
    let s = square_space(8, 1);
    let (pairs, mass) = pairs_for(&s, 5);
    let j = ClusterSelection::new(2, 3).unwrap();
    let v2 = FeFunction::from_free(Arc::clone(&s), pairs.vector(2));
    let p = lambda_project_with_mass(&v2, &pairs, j, &mass).unwrap();
    for (a, b) in p.coeffs().iter().zip(v2.coeffs()) {
        assert!((a - b).abs() <= 1e-12);
    }
    let v1 = FeFunction::from_free(Arc::clone(&s), pairs.vector(1));
    let zero = lambda_project_with_mass(&v1, &pairs, j, &mass).unwrap();
    assert!(zero.coeffs().iter().all(|c| c.abs() <= 1e-12));

    let u = ExactEigenpair::new(1, 2).unwrap();
    let r = ritz_project(&u, &s).unwrap();
    let once = lambda_project(&r, &pairs, j).unwrap();
    let twice = lambda_project(&once, &pairs, j).unwrap();
    for (a, b) in once.coeffs().iter().zip(twice.coeffs()) {
        assert!((a - b).abs() <= 1e-12);
    }
    // the complement component of the projection vanishes
    let of = once.free_coeffs();
    let mo = mass.mul_vec(&of);
    let mut rest = of.clone();
    for k in j.indices() {
        let c = dot(&mo, pairs.vector(k));
        for (x, v) in rest.iter_mut().zip(pairs.vector(k)) {
            *x -= c * v;
        }
    }
    assert!(mass.bilinear(&rest, &rest).sqrt() <= 1e-12);
    assert!(lambda_project(&r, &pairs, ClusterSelection::new(5, 6).unwrap()).is_err());
}

#[test]
fn sampled_errors() {
    let u = ExactEigenpair::new(1, 1).unwrap();
    let s = square_space(8, 1);
    let zero = FeFunction::zero(Arc::clone(&s));
    assert!((linf_error(&u, &zero, 8).unwrap() - 2.0).abs() <= 1e-6);
    assert!(linf_error(&u, &zero, 3).is_err());

    let interp = |n: usize, k: u8| {
        let s = square_space(n, k);
        let f = crate::fem::interpolate(|p| u.value(p), &s);
        linf_error(&u, &f, 8).unwrap()
    };
    assert!(interp(16, 1) < interp(8, 1));

    let s = square_space(16, 2);
    let f = crate::fem::interpolate(|p| u.value(p), &s);
    let coarse = linf_error(&u, &f, 8).unwrap();
    let dense = linf_error(&u, &f, 80).unwrap();
    assert!(dense >= coarse && dense <= 1.05 * coarse, "{coarse} vs {dense}");
}

#[test]
fn uniform_report_small() {
    let j = ClusterSelection::new(1, 1).unwrap();
    let r = reliability_efficiency_report(j, 3, RefinementMode::Uniform, 4, 1, 6).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.rows.iter().all(|row| row.history.eta_pointwise.unwrap() > 0.0 && row.err_linf[0] > 0.0));
    assert!(r.rows.windows(2).all(|w| w[1].err_linf[0] < w[0].err_linf[0]));
    assert!(r.within_band(10.0), "{} {}", r.rel_spread(), r.eff_spread());
    let csv = r.to_csv();
    assert!(csv.lines().next().unwrap().ends_with(",err_linf_1,ratio_rel,ratio_eff"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn adaptive_report_small() {
    let j = ClusterSelection::new(2, 3).unwrap();
    let r = reliability_efficiency_report(j, 3, RefinementMode::Adaptive { theta: 0.5 }, 4, 1, 6).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.modes.len(), 2);
    assert!(r.rows.iter().all(|row| row.ratio_rel > 0.0 && row.ratio_eff > 0.0));
}
