//! The first-quantized tensor space of the mixture.
//!
//! A configuration of `N1` A-particles and `N2` B-particles on `M` sites is a
//! tuple `(x1,...,xN1; y1,...,yN2)` of site indices; amplitudes live on the
//! full distinguishable product space of dimension `M^(N1+N2)`. Slots are
//! numbered globally `0..N1+N2` with all A-slots first, and indices are
//! row-major with slot 0 slowest, so slot `g` has stride `M^(S-1-g)` for
//! `S = N1+N2`. Every dense oracle in the test suite (and any re-implementation
//! in another language) must agree with this layout bit for bit.

use crate::error::{Error, Result};

/// Hard cap on the tensor-space dimension: 2^27 complex amplitudes is 2 GiB,
/// which is as much as a desk-scale run should ever touch.
pub const MAX_DIMENSION: usize = 1 << 27;

/// Periodic one-dimensional lattice of `m` sites with spacing `spacing`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGrid {
    m: usize,
    spacing: f64,
}

impl LatticeGrid {
    pub fn new(m: usize, spacing: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("lattice needs at least 2 sites, got {m}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid(format!("lattice spacing must be positive, got {spacing}")));
        }
        Ok(LatticeGrid { m, spacing })
    }

    /// Unit-spacing lattice.
    pub fn unit(m: usize) -> Result<Self> {
        LatticeGrid::new(m, 1.0)
    }

    pub fn sites(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Reduce a site difference to its residue in `0..M`, the index used for
    /// displacement-valued arrays.
    pub fn wrap(&self, delta: isize) -> usize {
        delta.rem_euclid(self.m as isize) as usize
    }

    /// Signed displacement `j - k` reduced to the symmetric representative in
    /// `-floor(M/2) ..= ceil(M/2)-1`.
    pub fn displacement(&self, j: usize, k: usize) -> isize {
        let m = self.m as isize;
        let mut d = (j as isize - k as isize).rem_euclid(m);
        if d >= (m + 1) / 2 {
            d -= m;
        }
        d
    }
}

/// Particle counts of the two species.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpeciesConfig {
    n1: usize,
    n2: usize,
}

/// Which of the two species a slot set or reduced density matrix refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Species {
    A,
    B,
}

impl SpeciesConfig {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 1 || n2 < 1 {
            return Err(Error::invalid(format!(
                "both species need at least one particle, got N1={n1}, N2={n2}"
            )));
        }
        Ok(SpeciesConfig { n1, n2 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Total particle number `N = N1 + N2`, which is also the slot count.
    pub fn total(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn count(&self, species: Species) -> usize {
        match species {
            Species::A => self.n1,
            Species::B => self.n2,
        }
    }

    /// Global slot index of the first slot of a species.
    pub fn species_offset(&self, species: Species) -> usize {
        match species {
            Species::A => 0,
            Species::B => self.n1,
        }
    }

    /// Tensor-space dimension `M^(N1+N2)`, guarded against overflow and
    /// against blowing past [`MAX_DIMENSION`].
    pub fn dimension(&self, grid: &LatticeGrid) -> Result<usize> {
        let mut dim: usize = 1;
        for _ in 0..self.total() {
            dim = dim.checked_mul(grid.sites()).ok_or_else(|| {
                Error::invalid(format!(
                    "tensor space M^(N1+N2) = {}^{} overflows",
                    grid.sites(),
                    self.total()
                ))
            })?;
        }
        if dim > MAX_DIMENSION {
            return Err(Error::invalid(format!(
                "tensor space dimension {dim} exceeds the {MAX_DIMENSION} cap"
            )));
        }
        Ok(dim)
    }
}

/// Strides of the global slots: slot `g` of `slots` has stride `m^(slots-1-g)`.
pub fn strides(m: usize, slots: usize) -> Vec<usize> {
    let mut st = vec![1usize; slots];
    for g in (0..slots.saturating_sub(1)).rev() {
        st[g] = st[g + 1] * m;
    }
    st
}

/// Site occupied at slot `g` (of stride `stride`) in basis index `i`.
#[inline]
pub fn site_at(i: usize, stride: usize, m: usize) -> usize {
    (i / stride) % m
}

/// Enumerates basis indices whose digits on a set of target slots are all
/// zero, in increasing order — the "outer" loop shared by slot-local operator
/// application, partial traces and dense embeddings.
///
/// `target` must be strictly increasing global slot indices.
pub(crate) fn outer_indices(m: usize, slots: usize, target: &[usize]) -> Vec<usize> {
    let st = strides(m, slots);
    let rest: Vec<usize> = (0..slots).filter(|g| !target.contains(g)).collect();
    let count = m.pow(rest.len() as u32);
    let mut out = Vec::with_capacity(count);
    for o in 0..count {
        // digits of o over the complement slots, slowest first
        let mut base = 0usize;
        let mut rem = o;
        for (pos, &g) in rest.iter().enumerate() {
            let place = m.pow((rest.len() - 1 - pos) as u32);
            base += (rem / place) * st[g];
            rem %= place;
        }
        out.push(base);
    }
    out
}

/// Offsets `sum_j digit_j(c) * stride[target_j]` for every local configuration
/// `c` in `0..m^k` of the target slots, kernel-ordered (first target slowest).
pub(crate) fn local_offsets(m: usize, slots: usize, target: &[usize]) -> Vec<usize> {
    let st = strides(m, slots);
    let k = target.len();
    let count = m.pow(k as u32);
    let mut off = Vec::with_capacity(count);
    for c in 0..count {
        let mut o = 0usize;
        let mut rem = c;
        for (j, &g) in target.iter().enumerate() {
            let place = m.pow((k - 1 - j) as u32);
            o += (rem / place) * st[g];
            rem %= place;
        }
        off.push(o);
    }
    off
}
