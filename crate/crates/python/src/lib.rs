//! Python bindings for the bosemix laboratory.
//!
//! The module mirrors the Rust surface: build a lattice and a particle
//! mixture, pick potentials, assemble the Hamiltonian, evolve product
//! states, measure correlations and commutators against their analytic
//! envelopes, and run the same four experiments the CLI offers.
//!
//! Vectors of complex amplitudes cross the boundary as lists of Python
//! complex numbers; matrices as lists of rows.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use bosemix_core as core;
use bosemix_core::{
    EmbeddedOperator, ExperimentConfig, LatticeGrid, LrLayout, Method, MixtureState,
    PotentialSet, PropagatorConfig, SlotSet, SparseHamiltonian, Species, SpeciesConfig, Stepper,
};

/// Core errors keep their split: anything a caller can fix by changing
/// arguments or configuration becomes `ValueError`, a numerical breakdown
/// becomes `RuntimeError`.
fn pyify(e: core::Error) -> PyErr {
    match e.exit_code() {
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_species(name: &str) -> PyResult<Species> {
    match name {
        "A" | "a" => Ok(Species::A),
        "B" | "b" => Ok(Species::B),
        _ => Err(PyValueError::new_err(format!(
            "species must be \"A\" or \"B\", got {name:?}"
        ))),
    }
}

fn parse_method(name: &str) -> PyResult<Method> {
    match name {
        "auto" => Ok(Method::Auto),
        "dense" => Ok(Method::Dense),
        "krylov" => Ok(Method::Krylov),
        _ => Err(PyValueError::new_err(format!(
            "method must be \"auto\", \"dense\" or \"krylov\", got {name:?}"
        ))),
    }
}

fn parse_stepper(name: &str) -> PyResult<Stepper> {
    match name {
        "rk4" => Ok(Stepper::Rk4),
        "strang" => Ok(Stepper::Strang),
        _ => Err(PyValueError::new_err(format!(
            "stepper must be \"rk4\" or \"strang\", got {name:?}"
        ))),
    }
}

fn matrix_rows(m: &DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn rows_matrix(rows: Vec<Vec<C64>>) -> PyResult<DMatrix<C64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(
            "matrix must be a non-empty list of equal-length rows",
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

fn propagator_options(
    method: &str,
    krylov_dim: usize,
    tol: f64,
    dense_threshold: usize,
    substep: Option<f64>,
) -> PyResult<PropagatorConfig> {
    Ok(PropagatorConfig {
        method: parse_method(method)?,
        krylov_dim,
        substep,
        tol,
        dense_threshold,
    })
}

/// A finite periodic one-dimensional lattice.
#[pyclass(frozen)]
#[derive(Clone)]
struct Grid {
    inner: LatticeGrid,
}

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (m, spacing = 1.0))]
    fn new(m: usize, spacing: f64) -> PyResult<Self> {
        Ok(Grid { inner: LatticeGrid::new(m, spacing).map_err(pyify)? })
    }

    #[getter]
    fn sites(&self) -> usize {
        self.inner.sites()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    fn __repr__(&self) -> String {
        format!("Grid(m={}, spacing={})", self.inner.sites(), self.inner.spacing())
    }
}

/// Particle numbers of the two bosonic components.
#[pyclass(frozen)]
#[derive(Clone)]
struct Mixture {
    inner: SpeciesConfig,
}

#[pymethods]
impl Mixture {
    #[new]
    fn new(n1: usize, n2: usize) -> PyResult<Self> {
        Ok(Mixture { inner: SpeciesConfig::new(n1, n2).map_err(pyify)? })
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1()
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2()
    }

    #[getter]
    fn total(&self) -> usize {
        self.inner.total()
    }

    /// Dimension of the full tensor space on the given grid.
    fn dimension(&self, grid: &Grid) -> PyResult<usize> {
        self.inner.dimension(&grid.inner).map_err(pyify)
    }

    fn __repr__(&self) -> String {
        format!("Mixture(n1={}, n2={})", self.inner.n1(), self.inner.n2())
    }
}

/// Trap and interaction potentials sampled on the lattice.
#[pyclass(frozen)]
#[derive(Clone)]
struct Potentials {
    inner: PotentialSet,
}

#[pymethods]
impl Potentials {
    #[new]
    fn new(
        grid: &Grid,
        u1: Vec<f64>,
        u2: Vec<f64>,
        v1: Vec<f64>,
        v2: Vec<f64>,
        v12: Vec<f64>,
    ) -> PyResult<Self> {
        Ok(Potentials {
            inner: PotentialSet::new(&grid.inner, u1, u2, v1, v2, v12).map_err(pyify)?,
        })
    }

    /// The free mixture: every potential identically zero.
    #[staticmethod]
    fn zero(grid: &Grid) -> Self {
        Potentials { inner: PotentialSet::zero(&grid.inner) }
    }

    /// On-site cross-species contact interaction of unit strength.
    #[staticmethod]
    fn delta_v12(grid: &Grid) -> Self {
        Potentials { inner: PotentialSet::delta_v12(&grid.inner) }
    }

    #[getter]
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    #[getter]
    fn v12(&self) -> Vec<f64> {
        self.inner.v12().to_vec()
    }
}

/// A normalized many-body state of the mixture.
#[pyclass(frozen)]
struct State {
    inner: MixtureState,
}

#[pymethods]
impl State {
    /// The condensate product state `u ⊗ … ⊗ u ⊗ v ⊗ … ⊗ v`.
    #[staticmethod]
    fn product(u: Vec<C64>, v: Vec<C64>, mixture: &Mixture, grid: &Grid) -> PyResult<Self> {
        let inner = MixtureState::product(&u, &v, mixture.inner, grid.inner.clone())
            .map_err(pyify)?;
        Ok(State { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn amplitudes(&self) -> Vec<C64> {
        self.inner.amplitudes().to_vec()
    }

    /// One-body reduced density matrix of species "A" or "B" (unit trace).
    fn one_body_rdm(&self, species: &str) -> PyResult<Vec<Vec<C64>>> {
        Ok(matrix_rows(&self.inner.one_body_rdm(parse_species(species)?)))
    }

    /// Distance from the bosonic (slot-exchange symmetric) sector.
    fn symmetry_defect(&self) -> f64 {
        self.inner.symmetry_defect()
    }
}

/// An observable acting on chosen particle slots of each species.
#[pyclass(frozen)]
struct LocalOperator {
    inner: EmbeddedOperator,
}

#[pymethods]
impl LocalOperator {
    /// `kernel` acts jointly on the listed A-slots then B-slots (slot
    /// indices are 1-based); its dimension must be
    /// `m ** (len(a_slots) + len(b_slots))`.
    #[new]
    fn new(
        kernel: Vec<Vec<C64>>,
        a_slots: Vec<usize>,
        b_slots: Vec<usize>,
        mixture: &Mixture,
        grid: &Grid,
    ) -> PyResult<Self> {
        let slots_a = SlotSet::new(Species::A, a_slots).map_err(pyify)?;
        let slots_b = SlotSet::new(Species::B, b_slots).map_err(pyify)?;
        let inner = EmbeddedOperator::new(
            rows_matrix(kernel)?,
            slots_a,
            slots_b,
            mixture.inner,
            grid.inner.clone(),
        )
        .map_err(pyify)?;
        Ok(LocalOperator { inner })
    }

    fn spectral_norm(&self) -> f64 {
        self.inner.spectral_norm()
    }

    fn expectation(&self, state: &State) -> PyResult<C64> {
        self.inner.expectation(&state.inner).map_err(pyify)
    }

    fn apply(&self, state: &State) -> PyResult<State> {
        Ok(State { inner: self.inner.apply(&state.inner).map_err(pyify)? })
    }
}

/// The many-body Hamiltonian in its sparse hopping-plus-diagonal form.
#[pyclass(frozen)]
struct Hamiltonian {
    inner: SparseHamiltonian,
}

#[pymethods]
impl Hamiltonian {
    /// The full Hamiltonian: kinetic terms, traps, and all interactions.
    #[staticmethod]
    fn full(grid: &Grid, mixture: &Mixture, potentials: &Potentials) -> PyResult<Self> {
        let inner = core::assemble_full(&grid.inner, &mixture.inner, &potentials.inner)
            .map_err(pyify)?;
        Ok(Hamiltonian { inner })
    }

    /// The modified Hamiltonian: interactions that cross the boundary of the
    /// leading block (`block_a` A-slots, `block_b` B-slots) are dropped.
    #[staticmethod]
    fn modified(
        grid: &Grid,
        mixture: &Mixture,
        potentials: &Potentials,
        block_a: usize,
        block_b: usize,
    ) -> PyResult<Self> {
        let inner = core::assemble_modified(
            &grid.inner,
            &mixture.inner,
            &potentials.inner,
            block_a,
            block_b,
        )
        .map_err(pyify)?;
        Ok(Hamiltonian { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// A cheap upper bound on the operator norm.
    fn norm_bound(&self) -> f64 {
        self.inner.norm_upper_bound()
    }

    fn energy(&self, state: &State) -> f64 {
        self.inner.energy(state.inner.amplitudes())
    }

    /// `e^{-itH}` applied to the state.
    #[pyo3(signature = (state, t, *, method = "auto", krylov_dim = 30, tol = 1e-10,
                        dense_threshold = 4096, substep = None))]
    #[allow(clippy::too_many_arguments)]
    fn evolve(
        &self,
        state: &State,
        t: f64,
        method: &str,
        krylov_dim: usize,
        tol: f64,
        dense_threshold: usize,
        substep: Option<f64>,
    ) -> PyResult<State> {
        let pcfg = propagator_options(method, krylov_dim, tol, dense_threshold, substep)?;
        let inner = core::evolve(&self.inner, &state.inner, t, &pcfg).map_err(pyify)?;
        Ok(State { inner })
    }

    /// Connected correlation `<op2 op1> - <op2><op1>` in the evolved state.
    #[pyo3(signature = (state, op1, op2, t, *, method = "auto", krylov_dim = 30,
                        tol = 1e-10, dense_threshold = 4096, substep = None))]
    #[allow(clippy::too_many_arguments)]
    fn correlation(
        &self,
        state: &State,
        op1: &LocalOperator,
        op2: &LocalOperator,
        t: f64,
        method: &str,
        krylov_dim: usize,
        tol: f64,
        dense_threshold: usize,
        substep: Option<f64>,
    ) -> PyResult<C64> {
        let pcfg = propagator_options(method, krylov_dim, tol, dense_threshold, substep)?;
        core::correlation(&self.inner, &state.inner, &op1.inner, &op2.inner, t, &pcfg)
            .map_err(pyify)
    }

    /// `|| [op2, op1(t)] ||` with `op1(t)` the Heisenberg-evolved operator.
    #[pyo3(signature = (op1, op2, t, *, method = "auto", krylov_dim = 30, tol = 1e-10,
                        dense_threshold = 4096, substep = None))]
    #[allow(clippy::too_many_arguments)]
    fn commutator_norm(
        &self,
        op1: &LocalOperator,
        op2: &LocalOperator,
        t: f64,
        method: &str,
        krylov_dim: usize,
        tol: f64,
        dense_threshold: usize,
        substep: Option<f64>,
    ) -> PyResult<f64> {
        let pcfg = propagator_options(method, krylov_dim, tol, dense_threshold, substep)?;
        core::commutator_norm(&self.inner, &op1.inner, &op2.inner, t, &pcfg).map_err(pyify)
    }

    /// Splits the connected correlation of the product state `u ⊗ v` into the
    /// three projector-chain groups; `residual` is the reconstruction error.
    #[pyo3(signature = (u, v, op1, op2, t, *, method = "auto", krylov_dim = 30,
                        tol = 1e-10, dense_threshold = 4096, substep = None))]
    #[allow(clippy::too_many_arguments)]
    fn decomposition<'py>(
        &self,
        py: Python<'py>,
        u: Vec<C64>,
        v: Vec<C64>,
        op1: &LocalOperator,
        op2: &LocalOperator,
        t: f64,
        method: &str,
        krylov_dim: usize,
        tol: f64,
        dense_threshold: usize,
        substep: Option<f64>,
    ) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
        let pcfg = propagator_options(method, krylov_dim, tol, dense_threshold, substep)?;
        let report = core::projector_decomposition(
            &self.inner, &u, &v, &op1.inner, &op2.inner, t, &pcfg,
        )
        .map_err(pyify)?;
        let out = pyo3::types::PyDict::new(py);
        out.set_item("p", report.p)?;
        out.set_item("q", report.q)?;
        out.set_item("r", report.r)?;
        out.set_item("correlation", report.correlation)?;
        out.set_item("residual", report.residual)?;
        Ok(out)
    }
}

/// The analytic envelopes for correlation growth and commutator spreading.
#[pyclass(frozen)]
struct BoundEnvelope {
    params: core::BoundParams,
}

#[pymethods]
impl BoundEnvelope {
    /// `block_n`, `block_m` are the per-species slot counts of the two
    /// observables entering the correlation envelope; `opnorms` lists the
    /// four witness kernel norms (use `[1.0] * 4` for normalized kernels).
    #[new]
    fn new(
        mixture: &Mixture,
        potentials: &Potentials,
        block_n: usize,
        block_m: usize,
        opnorms: [f64; 4],
    ) -> PyResult<Self> {
        let params =
            core::bound_params(&mixture.inner, &potentials.inner, block_n, block_m, opnorms)
                .map_err(pyify)?;
        Ok(BoundEnvelope { params })
    }

    fn correlation_bound(&self, t: f64) -> f64 {
        core::correlation_bound(&self.params, t)
    }

    fn commutator_bound(&self, n1: usize, n2: usize, m1: usize, m2: usize, t: f64) -> f64 {
        core::commutator_bound(&self.params, &LrLayout { n1, n2, m1, m2 }, t)
    }

    /// Largest time with correlation envelope still below `epsilon`.
    fn validity_horizon(&self, epsilon: f64) -> PyResult<f64> {
        core::validity_horizon(&self.params, epsilon).map_err(pyify)
    }

    #[getter]
    fn rate_corr(&self) -> f64 {
        self.params.rate_corr
    }

    #[getter]
    fn rate_lr(&self) -> f64 {
        self.params.rate_lr
    }

    #[getter]
    fn pot_max(&self) -> f64 {
        self.params.pot_max
    }
}

/// The pair of coupled one-body mean-field equations.
#[pyclass(frozen)]
struct MeanFieldFlow {
    inner: core::HartreeFlow,
}

#[pymethods]
impl MeanFieldFlow {
    /// `c1`, `c2` are the population ratios (they must sum to one).
    #[new]
    fn new(grid: &Grid, potentials: &Potentials, c1: f64, c2: f64) -> PyResult<Self> {
        let inner = core::HartreeFlow::new(grid.inner.clone(), potentials.inner.clone(), c1, c2)
            .map_err(pyify)?;
        Ok(MeanFieldFlow { inner })
    }

    /// Integrates both orbitals to time `t`.
    #[pyo3(signature = (u0, v0, t, *, dt = 1e-3, stepper = "rk4"))]
    fn evolve(
        &self,
        u0: Vec<C64>,
        v0: Vec<C64>,
        t: f64,
        dt: f64,
        stepper: &str,
    ) -> PyResult<(Vec<C64>, Vec<C64>)> {
        self.inner.evolve(&u0, &v0, t, dt, parse_stepper(stepper)?).map_err(pyify)
    }

    /// The conserved mean-field energy functional.
    fn energy(&self, u: Vec<C64>, v: Vec<C64>) -> f64 {
        self.inner.energy(&u, &v)
    }
}

/// A reproducible random observable kernel: unit spectral norm, keyed only by
/// `(seed, sample, slot)`.
#[pyfunction]
#[pyo3(signature = (seed, sample, slot, dim, hermitian = false))]
fn witness_kernel(
    seed: u64,
    sample: usize,
    slot: usize,
    dim: usize,
    hermitian: bool,
) -> Vec<Vec<C64>> {
    matrix_rows(&core::witness_kernel(seed, sample, slot, dim, hermitian))
}

/// A reproducible normalized random orbital keyed by `(seed, sample, tag)`.
#[pyfunction]
fn seeded_orbital(seed: u64, sample: usize, tag: u64, dim: usize) -> Vec<C64> {
    core::seeded_orbital(seed, sample, tag, dim)
}

/// Half the trace-norm distance between a one-body density matrix and the
/// rank-one projector onto `orbital`; ranges from 0 to 1.
#[pyfunction]
fn factorization_gap(rdm: Vec<Vec<C64>>, orbital: Vec<C64>) -> PyResult<f64> {
    core::factorization_gap(&rows_matrix(rdm)?, &orbital).map_err(pyify)
}

/// Runs one of the CLI experiments on a config given as text.
///
/// `kind` is one of "lr-sweep", "corr-sweep", "decomp-check",
/// "hartree-compare". Returns `(csv, violation)` where `violation` is `None`
/// on a clean pass and otherwise the first offending CSV row.
#[pyfunction]
#[pyo3(signature = (kind, config_text, seed = None))]
fn run_experiment(
    kind: &str,
    config_text: &str,
    seed: Option<u64>,
) -> PyResult<(String, Option<String>)> {
    let mut cfg = ExperimentConfig::from_str(config_text).map_err(pyify)?;
    cfg.override_seed(seed);
    let runner = match kind {
        "lr-sweep" => core::run_lr_sweep,
        "corr-sweep" => core::run_corr_sweep,
        "decomp-check" => core::run_decomposition_check,
        "hartree-compare" => core::run_hartree_compare,
        _ => {
            return Err(PyValueError::new_err(format!(
                "kind must be one of lr-sweep, corr-sweep, decomp-check, \
                 hartree-compare; got {kind:?}"
            )))
        }
    };
    let out = runner(&cfg).map_err(pyify)?;
    Ok((out.csv, out.violation))
}

#[pymodule]
fn bosemix(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Mixture>()?;
    m.add_class::<Potentials>()?;
    m.add_class::<State>()?;
    m.add_class::<LocalOperator>()?;
    m.add_class::<Hamiltonian>()?;
    m.add_class::<BoundEnvelope>()?;
    m.add_class::<MeanFieldFlow>()?;
    m.add_function(wrap_pyfunction!(witness_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(seeded_orbital, m)?)?;
    m.add_function(wrap_pyfunction!(factorization_gap, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("MAX_DIMENSION", core::MAX_DIMENSION)?;
    Ok(())
}
