//! Conical product rule on triangles (Stroud, *Approximate Calculation of
//! Multiple Integrals*, 1971): the square `[0,1]²` is collapsed onto
//! the triangle by `(x, y) ↦ (x, (1 − x) y)` and both directions use
//! five-point Gauss-Legendre. The Jacobian `1 − x` raises the degree in `x`
//! by one, so the rule integrates polynomials of total degree ≤ 8 exactly.

use std::sync::OnceLock;

/// Polynomial degree integrated exactly.
pub const EXACT_DEGREE: usize = 8;

/// Rule identity recorded in run metadata.
pub const RULE_NAME: &str = "stroud-conical-product-gauss-legendre-5x5";

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre_5() -> [(f64, f64); 5] {
    let r = (10.0f64 / 7.0).sqrt();
    let a = (5.0 - 2.0 * r).sqrt() / 3.0;
    let b = (5.0 + 2.0 * r).sqrt() / 3.0;
    let s = 70.0f64.sqrt();
    let wa = (322.0 + 13.0 * s) / 900.0;
    let wb = (322.0 - 13.0 * s) / 900.0;
    [(-b, wb), (-a, wa), (0.0, 128.0 / 225.0), (a, wa), (b, wb)]
}

/// Barycentric points and weights; weights sum to 1, so `∫_T f ≈ |T| Σ w f`.
pub fn triangle_rule() -> &'static [([f64; 3], f64)] {
    static RULE: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let g: Vec<(f64, f64)> = gauss_legendre_5().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        let mut out = Vec::with_capacity(25);
        for &(x, wx) in &g {
            for &(y, wy) in &g {
                let l1 = x;
                let l2 = (1.0 - x) * y;
                out.push(([1.0 - l1 - l2, l1, l2], 2.0 * wx * wy * (1.0 - x)));
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn integrates_monomials_up_to_degree_eight() {
        // ∫_T λ1^a λ2^b / |T| = 2 a! b! / (a + b + 2)!
        for a in 0..=EXACT_DEGREE {
            for b in 0..=EXACT_DEGREE - a {
                let q: f64 = triangle_rule().iter().map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
                let exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((q - exact).abs() <= 1e-14, "a={a} b={b}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn gauss_weights() {
        let g = gauss_legendre_5();
        assert!((g.iter().map(|p| p.1).sum::<f64>() - 2.0).abs() < 1e-15);
        // x⁸ integrates to 2/9
        assert!((g.iter().map(|p| p.1 * p.0.powi(8)).sum::<f64>() - 2.0 / 9.0).abs() < 1e-15);
        assert!(triangle_rule().iter().all(|(l, w)| *w > 0.0 && l.iter().all(|v| *v > 0.0)));
    }
}
