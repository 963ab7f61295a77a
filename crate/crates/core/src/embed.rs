//! Lifting k-particle kernels onto chosen particle slots.
//!
//! An [`EmbeddedOperator`] is a dense `M^k x M^k` kernel together with the
//! slots it acts on; application to a state touches only those slots and is
//! the identity elsewhere. Kernel rows/columns are ordered with the A-slots
//! first and, within a species, in increasing slot order — the same row-major
//! convention as the state layout.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::space::{local_offsets, outer_indices, LatticeGrid, Species, SpeciesConfig};
use crate::state::MixtureState;

/// An ordered set of slots of one species, 1-based within the species.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotSet {
    species: Species,
    indices: Vec<usize>,
}

impl SlotSet {
    pub fn new(species: Species, indices: Vec<usize>) -> Result<Self> {
        if indices.first().is_some_and(|&i| i == 0) {
            return Err(Error::invalid("slot indices are 1-based"));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(format!(
                "slot indices must be strictly increasing, got {indices:?}"
            )));
        }
        Ok(SlotSet { species, indices })
    }

    pub fn empty(species: Species) -> Self {
        SlotSet { species, indices: Vec::new() }
    }

    /// Contiguous range `first..=first+len-1`, the layout both analytic
    /// envelopes assume.
    pub fn range(species: Species, first: usize, len: usize) -> Result<Self> {
        SlotSet::new(species, (first..first + len).collect())
    }

    pub fn species(&self) -> Species {
        self.species
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn check_against(&self, config: &SpeciesConfig) -> Result<()> {
        let n = config.count(self.species);
        if let Some(&last) = self.indices.last() {
            if last > n {
                return Err(Error::invalid(format!(
                    "slot index {last} exceeds the {n} slots of species {:?}",
                    self.species
                )));
            }
        }
        Ok(())
    }

    fn globals(&self, config: &SpeciesConfig) -> Vec<usize> {
        let off = config.species_offset(self.species);
        self.indices.iter().map(|&i| off + i - 1).collect()
    }
}

/// A k-particle kernel lifted to chosen slots of the mixture.
#[derive(Debug)]
pub struct EmbeddedOperator {
    kernel: DMatrix<C64>,
    slots_a: SlotSet,
    slots_b: SlotSet,
    grid: LatticeGrid,
    config: SpeciesConfig,
    /// Global 0-based slot indices in kernel order (A first, increasing).
    targets: Vec<usize>,
    norm: OnceLock<f64>,
}

impl Clone for EmbeddedOperator {
    fn clone(&self) -> Self {
        EmbeddedOperator {
            kernel: self.kernel.clone(),
            slots_a: self.slots_a.clone(),
            slots_b: self.slots_b.clone(),
            grid: self.grid.clone(),
            config: self.config,
            targets: self.targets.clone(),
            norm: self.norm.clone(),
        }
    }
}

impl EmbeddedOperator {
    pub fn new(
        kernel: DMatrix<C64>,
        slots_a: SlotSet,
        slots_b: SlotSet,
        config: SpeciesConfig,
        grid: LatticeGrid,
    ) -> Result<Self> {
        if slots_a.species() != Species::A || slots_b.species() != Species::B {
            return Err(Error::invalid("slot sets passed in the wrong species order"));
        }
        slots_a.check_against(&config)?;
        slots_b.check_against(&config)?;
        let k = slots_a.len() + slots_b.len();
        if k == 0 {
            return Err(Error::invalid("an embedded operator needs at least one slot"));
        }
        let kdim = grid.sites().pow(k as u32);
        if kernel.nrows() != kdim || kernel.ncols() != kdim {
            return Err(Error::invalid(format!(
                "kernel is {}x{} but {k} slots on {} sites need {kdim}x{kdim}",
                kernel.nrows(),
                kernel.ncols(),
                grid.sites()
            )));
        }
        let mut targets = slots_a.globals(&config);
        targets.extend(slots_b.globals(&config));
        Ok(EmbeddedOperator { kernel, slots_a, slots_b, grid, config, targets, norm: OnceLock::new() })
    }

    /// Convenience constructor for one kernel on a single species.
    pub fn on_species(
        kernel: DMatrix<C64>,
        species: Species,
        indices: Vec<usize>,
        config: SpeciesConfig,
        grid: LatticeGrid,
    ) -> Result<Self> {
        let (sa, sb) = match species {
            Species::A => (SlotSet::new(Species::A, indices)?, SlotSet::empty(Species::B)),
            Species::B => (SlotSet::empty(Species::A), SlotSet::new(Species::B, indices)?),
        };
        EmbeddedOperator::new(kernel, sa, sb, config, grid)
    }

    pub fn kernel(&self) -> &DMatrix<C64> {
        &self.kernel
    }

    pub fn slots_a(&self) -> &SlotSet {
        &self.slots_a
    }

    pub fn slots_b(&self) -> &SlotSet {
        &self.slots_b
    }

    pub fn config(&self) -> &SpeciesConfig {
        &self.config
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    /// Global 0-based slots the kernel acts on, in kernel order.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Spectral norm of the kernel (equals the operator norm of the
    /// embedding); computed once and cached.
    pub fn spectral_norm(&self) -> f64 {
        *self
            .norm
            .get_or_init(|| linalg::spectral_norm_dense(&self.kernel))
    }

    /// Same slots, adjoint kernel.
    pub fn adjoint(&self) -> EmbeddedOperator {
        EmbeddedOperator {
            kernel: self.kernel.adjoint(),
            slots_a: self.slots_a.clone(),
            slots_b: self.slots_b.clone(),
            grid: self.grid.clone(),
            config: self.config,
            targets: self.targets.clone(),
            norm: self.norm.clone(), // ||K|| = ||K^dagger||
        }
    }

    fn check_state(&self, psi: &MixtureState) -> Result<()> {
        if psi.grid() != &self.grid || psi.config() != &self.config {
            return Err(Error::invalid("operator and state live on different tensor spaces"));
        }
        Ok(())
    }

    /// Linear action on raw amplitudes (no compatibility check, no copy of
    /// the surrounding state plumbing) — the hot path for propagators and
    /// norm estimators.
    pub fn apply_amplitudes(&self, amps: &[C64]) -> Vec<C64> {
        let m = self.grid.sites();
        let slots = self.config.total();
        let k = self.targets.len();
        let kdim = m.pow(k as u32);
        let offs = local_offsets(m, slots, &self.targets);
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        let mut gathered = vec![C64::new(0.0, 0.0); kdim];
        for base in outer_indices(m, slots, &self.targets) {
            for (c, &o) in offs.iter().enumerate() {
                gathered[c] = amps[base + o];
            }
            for (r, &o) in offs.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (c, g) in gathered.iter().enumerate() {
                    acc += self.kernel[(r, c)] * g;
                }
                out[base + o] = acc;
            }
        }
        out
    }

    /// Action on a state. The result is not renormalized: it carries whatever
    /// norm the kernel produces.
    pub fn apply(&self, psi: &MixtureState) -> Result<MixtureState> {
        self.check_state(psi)?;
        MixtureState::from_amplitudes(
            self.apply_amplitudes(psi.amplitudes()),
            self.config,
            self.grid.clone(),
        )
    }

    /// `<psi, Op psi>`.
    pub fn expectation(&self, psi: &MixtureState) -> Result<C64> {
        let applied = self.apply(psi)?;
        psi.inner(&applied)
    }

    /// Dense matrix of the embedding on the full tensor space. Only sensible
    /// at desk-scale dimensions; used by the dense Heisenberg path and by
    /// oracles.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let m = self.grid.sites();
        let slots = self.config.total();
        let dim = m.pow(slots as u32);
        let offs = local_offsets(m, slots, &self.targets);
        let mut dense = DMatrix::<C64>::zeros(dim, dim);
        for base in outer_indices(m, slots, &self.targets) {
            for (r, &or) in offs.iter().enumerate() {
                for (c, &oc) in offs.iter().enumerate() {
                    dense[(base + or, base + oc)] = self.kernel[(r, c)];
                }
            }
        }
        dense
    }
}
