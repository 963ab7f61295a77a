//! Mean-field mixture Hamiltonians on the lattice.
//!
//! The full generator is
//!
//! ```text
//! H = sum_i h1^(i) + (1/N1) sum_{i<j} V1(x_i - x_j)
//!   + sum_r h2^(r) + (1/N2) sum_{r<s} V2(y_r - y_s)
//!   + (1/(N1+N2)) sum_{i,r} V12(x_i - y_r)
//! ```
//!
//! with one-body part `(h psi)_j = (2 psi_j - psi_{j+1} - psi_{j-1})/h^2 + U_j psi_j`
//! on the periodic lattice. All pair interactions are diagonal in the position
//! basis, so the operator is stored as one diagonal vector plus a single
//! hopping coefficient applied slot by slot — matvec costs `O(dim * (N1+N2))`
//! and nothing larger than the diagonal is ever materialized.
//!
//! The *decoupled* variant keeps only interactions inside the leading block
//! (first `n1` A-particles, first `n2` B-particles) and inside its complement,
//! removing the four cross-block sums. It generates dynamics in which the
//! leading block evolves independently of the rest — the property the locality
//! acceptance test checks.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, HermitianEig};
use crate::space::{strides, LatticeGrid, Species, SpeciesConfig};

/// Trap and pair potentials of one experiment. Traps are site-indexed; pair
/// potentials are indexed by periodic displacement and must be even,
/// `V(d) = V(-d)`, to make the interaction real and symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSet {
    u1: Vec<f64>,
    u2: Vec<f64>,
    v1: Vec<f64>,
    v2: Vec<f64>,
    v12: Vec<f64>,
}

const EVEN_TOL: f64 = 1e-12;

impl PotentialSet {
    pub fn new(
        grid: &LatticeGrid,
        u1: Vec<f64>,
        u2: Vec<f64>,
        v1: Vec<f64>,
        v2: Vec<f64>,
        v12: Vec<f64>,
    ) -> Result<Self> {
        let m = grid.sites();
        for (name, arr) in [("U1", &u1), ("U2", &u2), ("V1", &v1), ("V2", &v2), ("V12", &v12)] {
            if arr.len() != m {
                return Err(Error::invalid(format!(
                    "potential {name} has {} entries, lattice has {m} sites",
                    arr.len()
                )));
            }
            if !arr.iter().all(|x| x.is_finite()) {
                return Err(Error::invalid(format!("potential {name} has non-finite entries")));
            }
        }
        for (name, arr) in [("V1", &v1), ("V2", &v2), ("V12", &v12)] {
            for d in 0..m {
                let mirror = (m - d) % m;
                if (arr[d] - arr[mirror]).abs() > EVEN_TOL {
                    return Err(Error::invalid(format!(
                        "pair potential {name} is not even under periodic reflection: \
                         V({d}) = {} but V({}) = {}",
                        arr[d], mirror, arr[mirror]
                    )));
                }
            }
        }
        Ok(PotentialSet { u1, u2, v1, v2, v12 })
    }

    /// Free mixture: no traps, no interactions.
    pub fn zero(grid: &LatticeGrid) -> Self {
        let z = vec![0.0; grid.sites()];
        PotentialSet { u1: z.clone(), u2: z.clone(), v1: z.clone(), v2: z.clone(), v12: z }
    }

    /// On-site inter-species contact of height 1, everything else zero.
    pub fn delta_v12(grid: &LatticeGrid) -> Self {
        let mut p = PotentialSet::zero(grid);
        p.v12[0] = 1.0;
        p
    }

    pub fn u_trap(&self, species: Species) -> &[f64] {
        match species {
            Species::A => &self.u1,
            Species::B => &self.u2,
        }
    }

    pub fn v1(&self) -> &[f64] {
        &self.v1
    }

    pub fn v2(&self) -> &[f64] {
        &self.v2
    }

    pub fn v12(&self) -> &[f64] {
        &self.v12
    }

    pub fn is_zero(&self) -> bool {
        [&self.u1, &self.u2, &self.v1, &self.v2, &self.v12]
            .iter()
            .all(|a| a.iter().all(|&x| x == 0.0))
    }
}

/// One-body lattice operator `(h psi)_j = (2 psi_j - psi_{j+1} - psi_{j-1})/h^2 + U_j psi_j`
/// as a dense real symmetric `M x M` matrix.
pub fn one_body(grid: &LatticeGrid, u: &[f64]) -> Result<DMatrix<f64>> {
    let m = grid.sites();
    if u.len() != m {
        return Err(Error::invalid(format!(
            "trap has {} entries, lattice has {m} sites",
            u.len()
        )));
    }
    if !u.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("trap potential has non-finite entries"));
    }
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let mut h = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        h[(j, j)] = 2.0 * inv_h2 + u[j];
        h[(j, (j + 1) % m)] += -inv_h2;
        h[(j, (j + m - 1) % m)] += -inv_h2;
    }
    Ok(h)
}

/// Which interaction graph a Hamiltonian carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// Everything interacts with everything.
    Full,
    /// Cross-block interactions between the leading block (first `n1` A, first
    /// `n2` B) and the rest are removed; the two blocks evolve independently.
    Decoupled { n1: usize, n2: usize },
    /// Pure position-space diagonal (test/diagnostic constructor).
    Diagonal,
}

/// Hermitian many-body operator with a fast matvec: a position-space diagonal
/// (traps + interactions + the stencil center) plus one hopping coefficient
/// applied on every slot.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    grid: LatticeGrid,
    config: SpeciesConfig,
    kind: HamiltonianKind,
    potentials: Option<PotentialSet>,
    diag: Vec<f64>,
    hop: f64,
    eig: OnceLock<HermitianEig>,
    norm_bound: OnceLock<f64>,
}

/// The full mean-field Hamiltonian.
pub fn assemble_full(
    grid: &LatticeGrid,
    config: &SpeciesConfig,
    potentials: &PotentialSet,
) -> Result<SparseHamiltonian> {
    // Full = nothing removed, i.e. the leading block is everything.
    assemble(grid, config, potentials, config.n1(), config.n2(), HamiltonianKind::Full)
}

/// The decoupled Hamiltonian: interactions across the boundary of the leading
/// block (first `n1` A-particles, first `n2` B-particles) are dropped. With
/// `n1 = N1, n2 = N2` (or `n1 = n2 = 0`) nothing is removed and the operator
/// equals [`assemble_full`].
pub fn assemble_modified(
    grid: &LatticeGrid,
    config: &SpeciesConfig,
    potentials: &PotentialSet,
    n1: usize,
    n2: usize,
) -> Result<SparseHamiltonian> {
    if n1 > config.n1() || n2 > config.n2() {
        return Err(Error::invalid(format!(
            "leading block ({n1}, {n2}) exceeds particle numbers ({}, {})",
            config.n1(),
            config.n2()
        )));
    }
    assemble(grid, config, potentials, n1, n2, HamiltonianKind::Decoupled { n1, n2 })
}

fn assemble(
    grid: &LatticeGrid,
    config: &SpeciesConfig,
    potentials: &PotentialSet,
    block1: usize,
    block2: usize,
    kind: HamiltonianKind,
) -> Result<SparseHamiltonian> {
    let dim = config.dimension(grid)?;
    let m = grid.sites();
    let s = config.total();
    let n1 = config.n1();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let scale1 = 1.0 / config.n1() as f64;
    let scale2 = 1.0 / config.n2() as f64;
    let scale12 = 1.0 / config.total() as f64;

    // A particle index (1-based within its species) is "leading" if it falls
    // inside the decoupled block; a pair interaction survives iff both members
    // are leading or both are not. For kind = Full every pair survives because
    // block1 = N1, block2 = N2.
    let leading_a = |i: usize| i < block1; // 0-based slot within species A
    let leading_b = |r: usize| r < block2;

    let mut diag = vec![0.0f64; dim];
    let mut digits = vec![0usize; s];
    for (i, d) in diag.iter_mut().enumerate() {
        let mut rem = i;
        for g in (0..s).rev() {
            digits[g] = rem % m;
            rem /= m;
        }
        let mut acc = 0.0;
        for (g, &site) in digits.iter().enumerate() {
            let trap = if g < n1 { &potentials.u1 } else { &potentials.u2 };
            acc += 2.0 * inv_h2 + trap[site];
        }
        for a in 0..n1 {
            for b in (a + 1)..n1 {
                if leading_a(a) == leading_a(b) {
                    acc += scale1 * potentials.v1[(digits[a] + m - digits[b]) % m];
                }
            }
        }
        for a in 0..config.n2() {
            for b in (a + 1)..config.n2() {
                if leading_b(a) == leading_b(b) {
                    acc += scale2 * potentials.v2[(digits[n1 + a] + m - digits[n1 + b]) % m];
                }
            }
        }
        for a in 0..n1 {
            for b in 0..config.n2() {
                if leading_a(a) == leading_b(b) {
                    acc += scale12 * potentials.v12[(digits[a] + m - digits[n1 + b]) % m];
                }
            }
        }
        *d = acc;
    }

    Ok(SparseHamiltonian {
        grid: grid.clone(),
        config: *config,
        kind,
        potentials: Some(potentials.clone()),
        diag,
        hop: -inv_h2,
        eig: OnceLock::new(),
        norm_bound: OnceLock::new(),
    })
}

impl SparseHamiltonian {
    /// Purely diagonal operator in the position basis — no hopping. Handy for
    /// tests (the propagator must reproduce `e^{-i t diag}` phases exactly)
    /// and for diagnostics.
    pub fn diagonal(grid: &LatticeGrid, config: &SpeciesConfig, diag: Vec<f64>) -> Result<Self> {
        let dim = config.dimension(grid)?;
        if diag.len() != dim {
            return Err(Error::invalid(format!(
                "diagonal has {} entries, tensor space has dimension {dim}",
                diag.len()
            )));
        }
        if !diag.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("diagonal has non-finite entries"));
        }
        Ok(SparseHamiltonian {
            grid: grid.clone(),
            config: *config,
            kind: HamiltonianKind::Diagonal,
            potentials: None,
            diag,
            hop: 0.0,
            eig: OnceLock::new(),
            norm_bound: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn config(&self) -> &SpeciesConfig {
        &self.config
    }

    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    pub fn potentials(&self) -> Option<&PotentialSet> {
        self.potentials.as_ref()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `H v`. Sequential and allocation-per-call; at desk scale this is the
    /// right trade against determinism headaches.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let dim = self.dim();
        debug_assert_eq!(v.len(), dim);
        let mut out: Vec<C64> = self
            .diag
            .iter()
            .zip(v)
            .map(|(&d, &z)| z * d)
            .collect();
        if self.hop != 0.0 {
            let m = self.grid.sites();
            let s = self.config.total();
            for &st in &strides(m, s) {
                let block = st * m;
                let mut start = 0;
                while start < dim {
                    for site in 0..m {
                        let up = start + ((site + 1) % m) * st;
                        let dn = start + ((site + m - 1) % m) * st;
                        let row = start + site * st;
                        for b in 0..st {
                            out[row + b] += (v[up + b] + v[dn + b]) * self.hop;
                        }
                    }
                    start += block;
                }
            }
        }
        out
    }

    /// `Re <v, H v>` — the energy of a (normalized) vector.
    pub fn energy(&self, v: &[C64]) -> f64 {
        let hv = self.matvec(v);
        v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense materialization. Only sensible at desk-scale dimensions.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut dense = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..dim {
            dense[(i, i)] = C64::new(self.diag[i], 0.0);
        }
        if self.hop != 0.0 {
            let m = self.grid.sites();
            let s = self.config.total();
            for &st in &strides(m, s) {
                let block = st * m;
                let mut start = 0;
                while start < dim {
                    for site in 0..m {
                        let up = start + ((site + 1) % m) * st;
                        let dn = start + ((site + m - 1) % m) * st;
                        let row = start + site * st;
                        for b in 0..st {
                            dense[(row + b, up + b)] += C64::new(self.hop, 0.0);
                            dense[(row + b, dn + b)] += C64::new(self.hop, 0.0);
                        }
                    }
                    start += block;
                }
            }
        }
        dense
    }

    /// Eigendecomposition of the dense form, built once per Hamiltonian and
    /// cached (single-writer initialization) — a whole time sweep reuses it.
    pub fn dense_eig(&self) -> &HermitianEig {
        self.eig.get_or_init(|| hermitian_eig(self.to_dense()))
    }

    /// Cheap upper bound on the operator norm (Gershgorin row sums), used to
    /// size propagator substeps.
    pub fn norm_upper_bound(&self) -> f64 {
        *self.norm_bound.get_or_init(|| {
            let max_diag = self.diag.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
            max_diag + 2.0 * self.config.total() as f64 * self.hop.abs()
        })
    }
}

/// `sum_q |Vtilde(q)|` for `Vtilde(q) = (1/M) sum_x V(x) e^{-2 pi i q x / M}` —
/// the lattice stand-in for the L1 norm of a Fourier transform. Dominates
/// `max_x |V(x)|` because the inverse transform is a plain sum over q.
pub fn dft_l1_norm(v: &[f64]) -> f64 {
    let m = v.len();
    if m == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for q in 0..m {
        let mut re = 0.0;
        let mut im = 0.0;
        for (x, &val) in v.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * (q * x) as f64 / m as f64;
            re += val * phase.cos();
            im += val * phase.sin();
        }
        total += (re * re + im * im).sqrt() / m as f64;
    }
    total
}

/// Every scalar constant entering the two growth envelopes.
#[derive(Clone, Copy, Debug)]
pub struct BoundParams {
    /// Total particle number N = N1 + N2.
    pub n_total: usize,
    /// Population ratios c1 = N1/N, c2 = N2/N and their minimum c.
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    /// `max{ ||V1||_inf, ||V2||_inf, dft_l1_norm(V12) }` — the one potential
    /// scale both envelopes are built from.
    pub pot_max: f64,
    /// Exponential rate of the correlation envelope: 24 * pot_max.
    pub rate_corr: f64,
    /// Exponential rate of the commutator envelope: 12 * pot_max.
    pub rate_lr: f64,
    /// Combinatorial prefactor `(4mn/9) (8mn/N + 4(4+3m+3n))` of the
    /// correlation envelope.
    pub alpha: f64,
    /// Product of the four witness operator norms.
    pub opnorm_product: f64,
}

/// Assembles [`BoundParams`] for observables on `n` leading and `m` following
/// slots per species, with the four operator norms already measured.
pub fn bound_params(
    config: &SpeciesConfig,
    potentials: &PotentialSet,
    n: usize,
    m: usize,
    opnorms: [f64; 4],
) -> Result<BoundParams> {
    let min_species = config.n1().min(config.n2());
    if n >= min_species || m >= min_species {
        return Err(Error::invalid(format!(
            "block sizes n={n}, m={m} must stay below min(N1, N2) = {min_species}"
        )));
    }
    let n_total = config.total();
    let nf = n_total as f64;
    let c1 = config.n1() as f64 / nf;
    let c2 = config.n2() as f64 / nf;
    let linf = |v: &[f64]| v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let pot_max = linf(potentials.v1())
        .max(linf(potentials.v2()))
        .max(dft_l1_norm(potentials.v12()));
    let (mf, nnf) = (m as f64, n as f64);
    let alpha = (4.0 * mf * nnf / 9.0) * (8.0 * mf * nnf / nf + 4.0 * (4.0 + 3.0 * mf + 3.0 * nnf));
    Ok(BoundParams {
        n_total,
        c1,
        c2,
        c: c1.min(c2),
        pot_max,
        rate_corr: 24.0 * pot_max,
        rate_lr: 12.0 * pot_max,
        alpha,
        opnorm_product: opnorms.iter().product(),
    })
}
