//! Closed-form element matrices for P1 and P2 Lagrange elements.
//!
//! Every local basis function is written as a homogeneous quadratic form in
//! the barycentric coordinates, `phi(λ) = λᵀ Q λ` (P1 functions are
//! homogenized with `Σλ = 1`). Integrals of barycentric monomials are exact:
//! `∫_T λ^α = 2|T| α₀! α₁! α₂! / (|α| + 2)!`, so stiffness and mass matrices
//! reduce to precomputed rational tensors scaled by element geometry.

use crate::Point;

/// Geometry of one affine triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
    /// Gram matrix `∇λ_a · ∇λ_b`.
    pub gram: [[f64; 3]; 3],
}

impl ElementGeometry {
    pub fn new(p: [Point; 3]) -> Self {
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
        let mut grad_lambda = [[0.0; 2]; 3];
        for i in 0..3 {
            let b = p[(i + 1) % 3];
            let c = p[(i + 2) % 3];
            grad_lambda[i] = [(b[1] - c[1]) / (2.0 * area), (c[0] - b[0]) / (2.0 * area)];
        }
        let mut gram = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                gram[a][b] = grad_lambda[a][0] * grad_lambda[b][0] + grad_lambda[a][1] * grad_lambda[b][1];
            }
        }
        ElementGeometry { area, grad_lambda, gram }
    }
}

/// Local P1 or P2 basis on the reference barycentric simplex.
///
/// P2 ordering: vertices 0, 1, 2, then edge midpoints opposite vertex 0, 1, 2
/// (i.e. edges (1,2), (2,0), (0,1)).
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub degree: u8,
    pub q: Vec<[[f64; 3]; 3]>,
    /// Stiffness tensor: `K_ij = |T| Σ_ab gram_ab stiff[i][j][a][b]`.
    stiff: Vec<Vec<[[f64; 3]; 3]>>,
    /// Mass matrix divided by `|T|`.
    mass_ref: Vec<Vec<f64>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `∫_T Π λ_{idx}` divided by `|T|`.
pub fn monomial_integral(idx: &[usize]) -> f64 {
    let mut alpha = [0usize; 3];
    for &i in idx {
        alpha[i] += 1;
    }
    2.0 * alpha.iter().map(|&a| factorial(a)).product::<f64>() / factorial(idx.len() + 2)
}

impl LocalBasis {
    pub fn new(degree: u8) -> Self {
        let q: Vec<[[f64; 3]; 3]> = match degree {
            1 => (0..3)
                .map(|i| {
                    let mut m = [[0.0; 3]; 3];
                    for a in 0..3 {
                        for b in 0..3 {
                            m[a][b] = (f64::from(u8::from(a == i)) + f64::from(u8::from(b == i))) / 2.0;
                        }
                    }
                    m
                })
                .collect(),
            2 => {
                let mut qs = Vec::with_capacity(6);
                for i in 0..3 {
                    let mut m = [[0.0; 3]; 3];
                    m[i][i] = 1.0;
                    for j in (0..3).filter(|&j| j != i) {
                        m[i][j] = -0.5;
                        m[j][i] = -0.5;
                    }
                    qs.push(m);
                }
                for i in 0..3 {
                    let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                    let mut m = [[0.0; 3]; 3];
                    m[a][b] = 2.0;
                    m[b][a] = 2.0;
                    qs.push(m);
                }
                qs
            }
            _ => panic!("unsupported degree {degree}"),
        };
        let n = q.len();
        let w = |c: usize, d: usize| monomial_integral(&[c, d]);
        let mut stiff = vec![vec![[[0.0; 3]; 3]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for a in 0..3 {
                    for b in 0..3 {
                        let mut s = 0.0;
                        for c in 0..3 {
                            for d in 0..3 {
                                s += q[i][a][c] * q[j][b][d] * w(c, d);
                            }
                        }
                        stiff[i][j][a][b] = 4.0 * s;
                    }
                }
            }
        }
        let mut mass_ref = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        if q[i][a][b] == 0.0 {
                            continue;
                        }
                        for c in 0..3 {
                            for d in 0..3 {
                                if q[j][c][d] != 0.0 {
                                    s += q[i][a][b] * q[j][c][d] * monomial_integral(&[a, b, c, d]);
                                }
                            }
                        }
                    }
                }
                mass_ref[i][j] = s;
            }
        }
        // symmetrize exactly
        for i in 0..n {
            for j in 0..i {
                mass_ref[i][j] = mass_ref[j][i];
            }
        }
        LocalBasis { degree, q, stiff, mass_ref }
    }

    pub fn n_local(&self) -> usize {
        self.q.len()
    }

    /// Local stiffness matrix (upper triangle computed, then mirrored).
    pub fn stiffness(&self, geo: &ElementGeometry) -> Vec<Vec<f64>> {
        let n = self.n_local();
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        s += geo.gram[a][b] * self.stiff[i][j][a][b];
                    }
                }
                k[i][j] = geo.area * s;
                k[j][i] = k[i][j];
            }
        }
        k
    }

    pub fn mass(&self, geo: &ElementGeometry) -> Vec<Vec<f64>> {
        self.mass_ref.iter().map(|row| row.iter().map(|v| geo.area * v).collect()).collect()
    }

    pub fn value(&self, i: usize, lam: [f64; 3]) -> f64 {
        let q = &self.q[i];
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += q[a][b] * lam[a] * lam[b];
            }
        }
        s
    }

    pub fn gradient(&self, i: usize, lam: [f64; 3], geo: &ElementGeometry) -> [f64; 2] {
        let q = &self.q[i];
        let mut g = [0.0; 2];
        for a in 0..3 {
            // ∂φ/∂λ_a = 2 (Qλ)_a
            let d: f64 = 2.0 * (0..3).map(|c| q[a][c] * lam[c]).sum::<f64>();
            g[0] += d * geo.grad_lambda[a][0];
            g[1] += d * geo.grad_lambda[a][1];
        }
        g
    }

    /// Laplacian of basis function `i` (constant on the element).
    pub fn laplacian(&self, i: usize, geo: &ElementGeometry) -> f64 {
        if self.degree == 1 {
            return 0.0;
        }
        let q = &self.q[i];
        let mut s = 0.0;
        for a in 0..3 {
            for c in 0..3 {
                s += q[a][c] * geo.gram[a][c];
            }
        }
        2.0 * s
    }

    /// Barycentric coordinates of the local nodal points.
    pub fn nodes(&self) -> Vec<[f64; 3]> {
        let mut out = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        if self.degree == 2 {
            out.extend([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]);
        }
        out
    }
}
