//! Weighted graph Laplacian, its spectrum, and the structural constants `gamma` and `psi*`.

use crate::array::{AgentVectors, SquareMatrix};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};

/// `L_ij = -(lambda/N) psi_ij` for `i != j`, `L_ii = (lambda/N) sum_{j != i} psi_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianMatrix(SquareMatrix);

impl LaplacianMatrix {
    /// Builds the Laplacian of a symmetric weight matrix; its diagonal is ignored.
    pub fn from_weights(lambda: f64, psi: &SquareMatrix) -> Self {
        let n = psi.n();
        let scale = lambda / n as f64;
        let mut l = SquareMatrix::zeros(n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let w = scale * psi[(i, j)];
                l[(i, j)] = -w;
                diag += w;
            }
            l[(i, i)] = diag;
        }
        Self(l)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    /// `<L v, v>` with `L` acting coordinatewise on `v in (R^d)^N`.
    pub fn quadratic_form(&self, v: &AgentVectors) -> f64 {
        let lv = self.0.apply(v);
        lv.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a * b).sum()
    }
}

/// Laplacian of the symmetric weights `psi(|x_i - x_j|)` at positions `x`.
///
/// The symmetric potential underlies every variant, so this is defined for all of them; for the
/// nonsymmetric variants it describes the potential, not the actual coupling.
pub fn laplacian(params: &ModelParams, x: &AgentVectors) -> Result<LaplacianMatrix> {
    x.check_shape(params.n(), params.dim(), "positions")?;
    if !x.is_finite() {
        return Err(Error::NonFinite("positions passed to laplacian".into()));
    }
    Ok(LaplacianMatrix::from_weights(
        params.lambda(),
        &model::pairwise_psi(params.potential(), x),
    ))
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: SquareMatrix,
}

impl SymmetricEigen {
    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> SquareMatrix {
        let n = self.values.len();
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                    .sum();
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps over all `(p, q)` pairs until the off-diagonal Frobenius norm is at most
/// `1e-12 ||A||_F`.
pub fn jacobi_eigen(a: &SquareMatrix) -> Result<SymmetricEigen> {
    let n = a.n();
    let norm = a.frobenius_norm();
    let asym = a.max_asymmetry();
    if asym > 1e-12 * norm.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut m = a.clone();
    // symmetrize away rounding noise so rotations see an exactly symmetric input
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let mut v = SquareMatrix::identity(n);
    let target = 1e-12 * norm;

    let off = |m: &SquareMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                s += m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[(p, p)], m[(q, q)]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = SquareMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = v[(k, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues_sym(a: &SquareMatrix) -> Result<Vec<f64>> {
    Ok(jacobi_eigen(a)?.values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fiedler {
    /// Second-smallest Laplacian eigenvalue.
    pub mu: f64,
    /// Set when `mu <= 1e-10 ||L||_F`, i.e. the graph is numerically disconnected.
    pub degenerate: bool,
}

/// Algebraic connectivity of a Laplacian.
pub fn fiedler(l: &LaplacianMatrix) -> Result<Fiedler> {
    let values = eigenvalues_sym(l.matrix())?;
    let mu = values.get(1).copied().unwrap_or(0.0);
    let scale = l.matrix().frobenius_norm();
    Ok(Fiedler {
        mu,
        degenerate: mu <= 1e-10 * scale,
    })
}

/// `a_ii := N - sum_{j != i} a_ij`, so every row sums to `N`.
pub fn augment_diagonal(a: &SquareMatrix) -> SquareMatrix {
    let n = a.n();
    let mut out = a.clone();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        out[(i, i)] = n as f64 - off;
    }
    out
}

/// `min_{p,q} (1/N^2) sum_{i,j} min(a_qi a_pj, a_qj a_pi)` for an already augmented matrix.
///
/// Cost is `O(N^4)`.
pub fn psi_star_empirical(a: &SquareMatrix) -> f64 {
    let n = a.n();
    let norm = 1.0 / (n * n) as f64;
    let mut best = f64::INFINITY;
    for p in 0..n {
        for q in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                let (aqi, api) = (a[(q, i)], a[(p, i)]);
                for j in 0..n {
                    s += (aqi * a[(p, j)]).min(a[(q, j)] * api);
                }
            }
            best = best.min(s * norm);
        }
    }
    best
}

/// Empirical structural constants along a computed trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralCertificate {
    /// Minimum sampled Fiedler number.
    pub gamma_emp: f64,
    /// Minimum sampled min-sum quantity.
    pub psi_star_emp: f64,
    pub sample_times: Vec<f64>,
}

impl StructuralCertificate {
    pub fn from_samples(samples: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let mut gamma_emp = f64::INFINITY;
        let mut psi_star_emp = f64::INFINITY;
        let mut sample_times = Vec::new();
        for (t, mu, psi_star) in samples {
            gamma_emp = gamma_emp.min(mu);
            psi_star_emp = psi_star_emp.min(psi_star);
            sample_times.push(t);
        }
        Self {
            gamma_emp,
            psi_star_emp,
            sample_times,
        }
    }
}
