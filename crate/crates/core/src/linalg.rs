//! Shared dense/matrix-free numerical kernels: Hermitian eigendecompositions,
//! spectral norms (exact SVD at small dimension, power iteration above), and
//! deterministic seeded start vectors.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::state::{vec_inner, vec_norm};

/// Dimension up to which spectral norms are taken from an exact SVD.
pub const DENSE_SVD_LIMIT: usize = 512;

/// Relative tolerance for power-iteration spectral norms.
pub const SPECTRAL_RTOL: f64 = 1e-8;

const MAX_POWER_ITERS: usize = 20_000;

/// Deterministic complex Gaussian vector of unit norm. The stream depends
/// only on `seed`, never on scheduling, so every estimate that starts from it
/// is reproducible bit for bit.
pub fn seeded_unit_vector(seed: u64, dim: usize) -> Vec<C64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let n = vec_norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    v
}

/// Eigendecomposition `H = U diag(values) U^dagger` of a Hermitian matrix.
/// One factorization serves both state propagation and Heisenberg
/// conjugation.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn hermitian_eig(mat: DMatrix<C64>) -> HermitianEig {
    let eig = mat.symmetric_eigen();
    HermitianEig {
        values: eig.eigenvalues.iter().copied().collect(),
        vectors: eig.eigenvectors,
    }
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Applies `exp(i s H)` to a vector: `U e^{i s values} U^dagger v`.
    pub fn expi_apply(&self, s: f64, v: &[C64]) -> Vec<C64> {
        let dim = self.dim();
        let u = &self.vectors;
        // w = U^dagger v
        let mut w = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..dim {
                acc += u[(r, k)].conj() * v[r];
            }
            w[k] = acc * C64::from_polar(1.0, s * self.values[k]);
        }
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let wk = w[k];
            if wk == C64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..dim {
                out[r] += u[(r, k)] * wk;
            }
        }
        out
    }

    /// Dense `exp(i s H)`.
    pub fn expi_matrix(&self, s: f64) -> DMatrix<C64> {
        let dim = self.dim();
        let u = &self.vectors;
        let mut phased = u.clone();
        for k in 0..dim {
            let ph = C64::from_polar(1.0, s * self.values[k]);
            for r in 0..dim {
                phased[(r, k)] *= ph;
            }
        }
        phased * u.adjoint()
    }

    /// Largest |eigenvalue|, i.e. the operator norm of H.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, &l| a.max(l.abs()))
    }
}

/// Largest singular value of a dense matrix. Exact SVD up to
/// [`DENSE_SVD_LIMIT`], monotone power iteration above (which can only
/// under-estimate — the safe direction for one-sided bound checks).
pub fn spectral_norm_dense(mat: &DMatrix<C64>) -> f64 {
    let dim = mat.nrows().max(mat.ncols());
    if dim <= DENSE_SVD_LIMIT {
        mat.clone().singular_values().iter().fold(0.0_f64, |a, &s| a.max(s))
    } else {
        let apply = |v: &[C64]| -> Vec<C64> { dense_matvec(mat, v, false) };
        let apply_adj = |v: &[C64]| -> Vec<C64> { dense_matvec(mat, v, true) };
        // fall back on the best monotone estimate if the change criterion
        // never fires; for a norm this is still a certified lower bound
        spectral_norm_matvec(mat.ncols(), &apply, &apply_adj, SPECTRAL_RTOL)
            .unwrap_or_else(|e| match e {
                Error::Numerical { residual, .. } => residual,
                _ => 0.0,
            })
    }
}

fn dense_matvec(mat: &DMatrix<C64>, v: &[C64], adjoint: bool) -> Vec<C64> {
    let (rows, cols) = (mat.nrows(), mat.ncols());
    if adjoint {
        let mut out = vec![C64::new(0.0, 0.0); cols];
        for r in 0..rows {
            let x = v[r];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..cols {
                out[c] += mat[(r, c)].conj() * x;
            }
        }
        out
    } else {
        let mut out = vec![C64::new(0.0, 0.0); rows];
        for r in 0..rows {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..cols {
                acc += mat[(r, c)] * v[c];
            }
            out[r] = acc;
        }
        out
    }
}

/// Power iteration for the largest singular value of an operator given only
/// as a matvec pair `(C, C^dagger)`. Two deterministic seeded starts, maxed;
/// the Rayleigh estimate on `C^dagger C` is monotone non-decreasing, so the
/// returned value never overshoots the true norm.
///
/// Errors with the last iterate when the relative change criterion is not
/// met within the iteration budget.
pub fn spectral_norm_matvec(
    dim: usize,
    apply: &dyn Fn(&[C64]) -> Vec<C64>,
    apply_adj: &dyn Fn(&[C64]) -> Vec<C64>,
    rtol: f64,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for start in 0..2u64 {
        let sigma = power_iterate(dim, apply, apply_adj, rtol, 0x5eed_0000 + start)?;
        best = best.max(sigma);
    }
    Ok(best)
}

fn power_iterate(
    dim: usize,
    apply: &dyn Fn(&[C64]) -> Vec<C64>,
    apply_adj: &dyn Fn(&[C64]) -> Vec<C64>,
    rtol: f64,
    seed: u64,
) -> Result<f64> {
    let mut v = seeded_unit_vector(seed, dim);
    let mut sigma: f64 = 0.0;
    for _ in 0..MAX_POWER_ITERS {
        let u = apply(&v);
        let sigma_new = vec_norm(&u);
        if !sigma_new.is_finite() {
            return Err(Error::Numerical {
                context: "power iteration".into(),
                residual: sigma_new,
            });
        }
        // ||C v|| below this? the operator is numerically zero along every
        // direction we have probed; call it zero.
        if sigma_new <= 1e-14 {
            return Ok(sigma_new);
        }
        let mut w = apply_adj(&u);
        let nw = vec_norm(&w);
        if nw <= 1e-300 {
            return Ok(sigma_new);
        }
        w.iter_mut().for_each(|z| *z /= nw);
        let converged = (sigma_new - sigma).abs() <= rtol * sigma_new;
        sigma = sigma_new;
        v = w;
        if converged {
            return Ok(sigma);
        }
    }
    Err(Error::Numerical {
        context: "power iteration (no convergence)".into(),
        residual: sigma,
    })
}

/// Gram-Schmidt projection helper: `w -= <q, w> q` for each basis vector,
/// applied twice for numerical full reorthogonalization.
pub(crate) fn reorthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = vec_inner(q, w);
            if c != C64::new(0.0, 0.0) {
                for (wz, qz) in w.iter_mut().zip(q) {
                    *wz -= c * qz;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_has_unit_norm() {
        let id = DMatrix::<C64>::identity(7, 7);
        assert!((spectral_norm_dense(&id) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_matrix_has_norm_sigma() {
        // sigma * x y^dagger with unit x, y
        let dim = 12;
        let x = seeded_unit_vector(3, dim);
        let y = seeded_unit_vector(4, dim);
        let sigma = 2.75;
        let mat = DMatrix::from_fn(dim, dim, |r, cidx| x[r] * y[cidx].conj() * sigma);
        assert!((spectral_norm_dense(&mat) - sigma).abs() < 1e-10);
        // matvec route agrees
        let apply = |v: &[C64]| -> Vec<C64> {
            let inner: C64 = y.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            x.iter().map(|&xi| xi * inner * sigma).collect()
        };
        let apply_adj = |v: &[C64]| -> Vec<C64> {
            let inner: C64 = x.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            y.iter().map(|&yi| yi * inner * sigma).collect()
        };
        let est = spectral_norm_matvec(dim, &apply, &apply_adj, 1e-10).unwrap();
        assert!((est - sigma).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_matches_svd_on_random_matrix() {
        let dim = 100;
        let mat = DMatrix::from_fn(dim, dim, |r, cidx| {
            c(
                ((r * 31 + cidx * 7) as f64 * 0.137).sin(),
                ((r * 13 + cidx * 17) as f64 * 0.291).cos(),
            ) / 10.0
        });
        let exact = mat.clone().singular_values()[0];
        let apply = |v: &[C64]| dense_matvec(&mat, v, false);
        let apply_adj = |v: &[C64]| dense_matvec(&mat, v, true);
        let est = spectral_norm_matvec(dim, &apply, &apply_adj, SPECTRAL_RTOL).unwrap();
        assert!((est - exact).abs() < 1e-7 * exact.max(1.0), "est {est} exact {exact}");
    }

    #[test]
    fn expi_apply_matches_expi_matrix() {
        let dim = 9;
        let raw = DMatrix::from_fn(dim, dim, |r, cidx| {
            c((r as f64 - cidx as f64) * 0.3, (r * cidx) as f64 * 0.1)
        });
        let herm = (&raw + raw.adjoint()) * c(0.5, 0.0);
        let eig = hermitian_eig(herm.clone());
        // reconstruction sanity
        let mut recon = DMatrix::<C64>::zeros(dim, dim);
        for k in 0..dim {
            let col = eig.vectors.column(k);
            for r in 0..dim {
                for s in 0..dim {
                    recon[(r, s)] += col[r] * col[s].conj() * c(eig.values[k], 0.0);
                }
            }
        }
        assert!((&recon - &herm).norm() < 1e-11);

        let v = seeded_unit_vector(9, dim);
        let fast = eig.expi_apply(-0.37, &v);
        let mat = eig.expi_matrix(-0.37);
        let slow = dense_matvec(&mat, &v, false);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        // unitarity
        assert!((vec_norm(&fast) - 1.0).abs() < 1e-12);
    }
}
