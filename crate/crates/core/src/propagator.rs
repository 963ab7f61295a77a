//! Time evolution `psi -> e^{-itH} psi`.
//!
//! Two interchangeable engines:
//!
//! * **dense** — one cached eigendecomposition per Hamiltonian, then every
//!   propagation is two dense matvecs. Exact up to the eigensolver; the
//!   reference below the dense-size threshold.
//! * **krylov** — Lanczos with full reorthogonalization, a small projected
//!   exponential per substep, and an a-posteriori error estimate. Substeps are
//!   sized from a Gershgorin bound on the operator norm; if the estimate fails
//!   to meet tolerance at the configured subspace size, the substep is halved
//!   and retried a bounded number of times before reporting a numerical
//!   failure.
//!
//! Both engines drive the same observable pipelines, which is what lets tests
//! cross-check them against each other on small systems.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::embed::EmbeddedOperator;
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::linalg::reorthogonalize;
use crate::state::{vec_inner, vec_norm, MixtureState};

/// Propagation engine selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Dense when the dimension allows it, Krylov beyond.
    Auto,
    /// Force the dense eigendecomposition route.
    Dense,
    /// Force the Lanczos route.
    Krylov,
}

/// Knobs of the propagator. `Default` gives auto dispatch with a 30-vector
/// Krylov space, tolerance 1e-10 and dense dispatch up to dimension 4096.
#[derive(Clone, Copy, Debug)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Maximum Lanczos basis size per substep.
    pub krylov_dim: usize,
    /// Substep length override; `None` sizes substeps as `5 / ||H||_bound`.
    pub substep: Option<f64>,
    /// Target accuracy of each Krylov substep, relative to the input norm.
    pub tol: f64,
    /// Largest dimension the dense engine accepts.
    pub dense_threshold: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            method: Method::Auto,
            krylov_dim: 30,
            substep: None,
            tol: 1e-10,
            dense_threshold: 4096,
        }
    }
}

impl PropagatorConfig {
    fn validate(&self) -> Result<()> {
        if self.krylov_dim < 2 {
            return Err(Error::invalid("krylov_dim must be at least 2"));
        }
        if let Some(s) = self.substep {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid("substep must be positive and finite"));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive and finite"));
        }
        Ok(())
    }
}

/// `e^{-itH}` applied to a state.
pub fn evolve(
    h: &SparseHamiltonian,
    psi: &MixtureState,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<MixtureState> {
    if psi.grid() != h.grid() || psi.config() != h.config() {
        return Err(Error::invalid(
            "state and Hamiltonian live on different lattices or particle numbers",
        ));
    }
    let amps = propagate(h, psi.amplitudes(), t, cfg)?;
    MixtureState::from_amplitudes(amps, *psi.config(), psi.grid().clone())
}

/// `e^{-itH} v` on raw amplitudes. Observable pipelines use this directly on
/// vectors that are not normalized states (operator images).
pub fn propagate(
    h: &SparseHamiltonian,
    v: &[C64],
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<Vec<C64>> {
    cfg.validate()?;
    if v.len() != h.dim() {
        return Err(Error::invalid(format!(
            "vector length {} does not match Hamiltonian dimension {}",
            v.len(),
            h.dim()
        )));
    }
    if t == 0.0 {
        return Ok(v.to_vec());
    }
    let dense_ok = h.dim() <= cfg.dense_threshold;
    match cfg.method {
        Method::Dense if !dense_ok => Err(Error::invalid(format!(
            "dense propagation requested for dimension {} above threshold {}",
            h.dim(),
            cfg.dense_threshold
        ))),
        Method::Dense => Ok(h.dense_eig().expi_apply(-t, v)),
        Method::Auto if dense_ok => Ok(h.dense_eig().expi_apply(-t, v)),
        Method::Auto | Method::Krylov => krylov_propagate(h, v, t, cfg),
    }
}

/// Heisenberg evolution of an embedded operator, dense route:
/// `A(t) = e^{itH} A e^{-itH}` as an explicit matrix.
pub fn heisenberg_dense(
    h: &SparseHamiltonian,
    op: &EmbeddedOperator,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<DMatrix<C64>> {
    if op.grid() != h.grid() || op.config() != h.config() {
        return Err(Error::invalid(
            "operator and Hamiltonian live on different lattices or particle numbers",
        ));
    }
    if h.dim() > cfg.dense_threshold {
        return Err(Error::invalid(format!(
            "dense Heisenberg evolution for dimension {} above threshold {}",
            h.dim(),
            cfg.dense_threshold
        )));
    }
    let a0 = op.to_dense();
    if t == 0.0 {
        return Ok(a0);
    }
    let e_plus = h.dense_eig().expi_matrix(t);
    Ok(&e_plus * a0 * e_plus.adjoint())
}

fn krylov_propagate(
    h: &SparseHamiltonian,
    v: &[C64],
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<Vec<C64>> {
    let norm_bound = h.norm_upper_bound();
    let tau_max = cfg
        .substep
        .unwrap_or(if norm_bound > 0.0 { 5.0 / norm_bound } else { t.abs() })
        .max(f64::MIN_POSITIVE);
    let substeps = (t.abs() / tau_max).ceil().max(1.0) as usize;
    let tau = t / substeps as f64;
    let mut cur = v.to_vec();
    for _ in 0..substeps {
        cur = lanczos_step(h, &cur, tau, cfg, 0)?;
    }
    Ok(cur)
}

const HALVING_LEVELS: usize = 6;

/// One `e^{-i tau H}` application from a Lanczos subspace. Full
/// reorthogonalization keeps the basis orthonormal to machine precision, so
/// the projected operator really is tridiagonal; the error estimate is the
/// classic last-coefficient residual `beta_k |y_k|`.
fn lanczos_step(
    h: &SparseHamiltonian,
    v: &[C64],
    tau: f64,
    cfg: &PropagatorConfig,
    depth: usize,
) -> Result<Vec<C64>> {
    let beta0 = vec_norm(v);
    if beta0 == 0.0 {
        return Ok(v.to_vec());
    }
    let dim = v.len();
    let kmax = cfg.krylov_dim.min(dim);
    let breakdown = 1e-13 * (1.0 + h.norm_upper_bound());
    let target = cfg.tol * beta0;

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(kmax);
    basis.push(v.iter().map(|z| z / beta0).collect());
    let mut alphas: Vec<f64> = Vec::with_capacity(kmax);
    let mut betas: Vec<f64> = Vec::with_capacity(kmax);

    loop {
        let j = alphas.len();
        let mut w = h.matvec(&basis[j]);
        alphas.push(vec_inner(&basis[j], &w).re);
        reorthogonalize(&mut w, &basis);
        let beta = vec_norm(&w);
        let y = expi_tridiag(&alphas, &betas, -tau);
        let err = beta * y[j].norm();
        let exhausted = basis.len() == dim;
        if err <= target || beta <= breakdown || exhausted {
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (coeff, q) in y.iter().zip(&basis) {
                let c = coeff * beta0;
                for (o, qi) in out.iter_mut().zip(q) {
                    *o += c * qi;
                }
            }
            return Ok(out);
        }
        if alphas.len() == kmax {
            // Subspace too small for this substep; halve and recurse.
            if depth >= HALVING_LEVELS {
                return Err(Error::Numerical {
                    context: "Lanczos propagation did not converge after substep halving".into(),
                    residual: err,
                });
            }
            let half = lanczos_step(h, v, tau / 2.0, cfg, depth + 1)?;
            return lanczos_step(h, &half, tau / 2.0, cfg, depth + 1);
        }
        betas.push(beta);
        basis.push(w.iter().map(|z| z / beta).collect());
    }
}

/// `e^{i s T} e_1` for the real symmetric tridiagonal `T` given by its
/// diagonal and off-diagonal entries.
fn expi_tridiag(alphas: &[f64], betas: &[f64], s: f64) -> Vec<C64> {
    let k = alphas.len();
    debug_assert_eq!(betas.len() + 1, k.max(1));
    if k == 1 {
        return vec![C64::from_polar(1.0, s * alphas[0])];
    }
    let mut t = DMatrix::<f64>::zeros(k, k);
    for (i, &a) in alphas.iter().enumerate() {
        t[(i, i)] = a;
    }
    for (i, &b) in betas.iter().enumerate() {
        t[(i, i + 1)] = b;
        t[(i + 1, i)] = b;
    }
    let eig = t.symmetric_eigen();
    let mut y = vec![C64::new(0.0, 0.0); k];
    for l in 0..k {
        let phase = C64::from_polar(1.0, s * eig.eigenvalues[l]);
        let weight = phase * eig.eigenvectors[(0, l)];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += weight * eig.eigenvectors[(i, l)];
        }
    }
    y
}
