//! Many-body states of the mixture and the measurements that only need a
//! state: one-body reduced density matrices and the permutation-symmetry
//! monitor.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::space::{outer_indices, site_at, strides, LatticeGrid, Species, SpeciesConfig};

/// Tolerance for "this vector is normalized" on construction inputs.
pub const NORM_TOL: f64 = 1e-12;

/// A (generally entangled) state of the mixture: complex amplitudes over the
/// full distinguishable tensor space, row-major with A-slot 1 slowest.
#[derive(Clone, Debug)]
pub struct MixtureState {
    amplitudes: Vec<C64>,
    grid: LatticeGrid,
    config: SpeciesConfig,
}

pub(crate) fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn vec_inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl MixtureState {
    /// Wraps raw amplitudes; rejects length mismatches but not non-normalized
    /// data (callers that need a normalized state check [`MixtureState::norm`]).
    pub fn from_amplitudes(
        amplitudes: Vec<C64>,
        config: SpeciesConfig,
        grid: LatticeGrid,
    ) -> Result<Self> {
        let dim = config.dimension(&grid)?;
        if amplitudes.len() != dim {
            return Err(Error::invalid(format!(
                "amplitude vector has length {}, tensor space has dimension {dim}",
                amplitudes.len()
            )));
        }
        Ok(MixtureState { amplitudes, config, grid })
    }

    /// The uncorrelated initial datum: every A-particle in orbital `u`, every
    /// B-particle in orbital `v`. Inputs must be normalized to `1e-12`.
    pub fn product(u: &[C64], v: &[C64], config: SpeciesConfig, grid: LatticeGrid) -> Result<Self> {
        let m = grid.sites();
        if u.len() != m || v.len() != m {
            return Err(Error::invalid(format!(
                "orbitals must have one amplitude per site ({m}), got {} and {}",
                u.len(),
                v.len()
            )));
        }
        for (name, w) in [("u", u), ("v", v)] {
            let n = vec_norm(w);
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::invalid(format!(
                    "orbital {name} is not normalized: ||{name}|| = {n:.17}"
                )));
            }
        }
        let dim = config.dimension(&grid)?;
        // Left-to-right Kronecker products: slot g+1 runs faster than slot g,
        // so extending with `new[i*M + j] = old[i] * factor[j]` lands every
        // amplitude at sum_g s_g * M^(S-1-g).
        let mut amps: Vec<C64> = vec![C64::new(1.0, 0.0)];
        amps.reserve(dim);
        for g in 0..config.total() {
            let factor = if g < config.n1() { u } else { v };
            let mut next = Vec::with_capacity(amps.len() * m);
            for &a in &amps {
                for &f in factor {
                    next.push(a * f);
                }
            }
            amps = next;
        }
        MixtureState::from_amplitudes(amps, config, grid)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn config(&self) -> &SpeciesConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &MixtureState) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(vec_inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn check_compatible(&self, other: &MixtureState) -> Result<()> {
        if self.grid != other.grid || self.config != other.config {
            return Err(Error::invalid("states live on different tensor spaces"));
        }
        Ok(())
    }

    /// Partial trace of `|psi><psi|` onto slot 1 of the chosen species —
    /// an `M x M` Hermitian, positive semidefinite, trace-1 matrix.
    pub fn one_body_rdm(&self, species: Species) -> DMatrix<C64> {
        let m = self.grid.sites();
        let slots = self.config.total();
        let g = self.config.species_offset(species);
        let st = strides(m, slots)[g];
        let mut rho = DMatrix::<C64>::zeros(m, m);
        for base in outer_indices(m, slots, &[g]) {
            for a in 0..m {
                let za = self.amplitudes[base + a * st];
                if za == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..m {
                    rho[(a, b)] += za * self.amplitudes[base + b * st].conj();
                }
            }
        }
        rho
    }

    /// Exchanges the occupations of two same-species slots (1-based within
    /// the species), returning the permuted state.
    pub fn transpose_slots(&self, species: Species, i: usize, j: usize) -> Result<MixtureState> {
        let n = self.config.count(species);
        if i < 1 || j < 1 || i > n || j > n {
            return Err(Error::invalid(format!(
                "transposition ({i} {j}) out of range for a species with {n} slots"
            )));
        }
        if i == j {
            return Ok(self.clone());
        }
        let off = self.config.species_offset(species);
        let (ga, gb) = (off + i - 1, off + j - 1);
        let m = self.grid.sites();
        let st = strides(m, self.config.total());
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let (sa, sb) = (site_at(idx, st[ga], m), site_at(idx, st[gb], m));
            let swapped = idx - sa * st[ga] - sb * st[gb] + sb * st[ga] + sa * st[gb];
            out[swapped] = amp;
        }
        MixtureState::from_amplitudes(out, self.config, self.grid.clone())
    }

    /// Distance to the permutation-symmetric sector, measured as the maximum
    /// of `||psi - P_sigma psi||` over adjacent same-species transpositions.
    /// Zero (to rounding) for physical bosonic states; the propagator must
    /// keep it zero because the Hamiltonian commutes with every such P_sigma.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (species, count) in [(Species::A, self.config.n1()), (Species::B, self.config.n2())] {
            for i in 1..count {
                let permuted = self
                    .transpose_slots(species, i, i + 1)
                    .expect("adjacent transposition is always in range");
                let d = self
                    .amplitudes
                    .iter()
                    .zip(&permuted.amplitudes)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// If `self` is (numerically) a pure product state `u ⊗ ... ⊗ v`, returns
    /// the orbitals recovered from the two one-body reduced density matrices.
    /// The check is by fidelity: the rebuilt product must overlap `self` to
    /// within `1e-10`.
    pub fn as_product(&self) -> Option<(Vec<C64>, Vec<C64>)> {
        let u = top_eigvec(&self.one_body_rdm(Species::A));
        let v = top_eigvec(&self.one_body_rdm(Species::B));
        let candidate =
            MixtureState::product(&u, &v, self.config, self.grid.clone()).ok()?;
        let overlap = vec_inner(&candidate.amplitudes, &self.amplitudes);
        if (overlap.norm() - 1.0).abs() <= 1e-10 && (self.norm() - 1.0).abs() <= 1e-10 {
            Some((u, v))
        } else {
            None
        }
    }
}

fn top_eigvec(rho: &DMatrix<C64>) -> Vec<C64> {
    let eig = rho.clone().symmetric_eigen();
    let mut best = 0;
    for k in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[k] > eig.eigenvalues[best] {
            best = k;
        }
    }
    let col = eig.eigenvectors.column(best);
    let mut u: Vec<C64> = col.iter().copied().collect();
    let n = vec_norm(&u);
    if n > 0.0 {
        for z in &mut u {
            *z /= n;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::LatticeGrid;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn basis(m: usize, k: usize) -> Vec<C64> {
        let mut e = vec![c(0.0, 0.0); m];
        e[k] = c(1.0, 0.0);
        e
    }

    #[test]
    fn product_of_basis_orbitals_is_a_basis_state() {
        let grid = LatticeGrid::unit(2).unwrap();
        let cfg = SpeciesConfig::new(1, 1).unwrap();
        let psi = MixtureState::product(&basis(2, 0), &basis(2, 1), cfg, grid).unwrap();
        // index (x=0; y=1) -> 0*2 + 1 = 1
        assert_eq!(psi.amplitudes()[1], c(1.0, 0.0));
        assert_eq!(psi.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn uniform_orbitals_give_uniform_amplitudes() {
        let grid = LatticeGrid::unit(2).unwrap();
        let cfg = SpeciesConfig::new(2, 1).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let plus = vec![c(s, 0.0), c(s, 0.0)];
        let psi = MixtureState::product(&plus, &plus, cfg, grid).unwrap();
        let expect = 0.125_f64.sqrt();
        for &z in psi.amplitudes() {
            assert!((z - c(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn product_matches_loop_oracle() {
        // independent oracle: fill amplitudes by explicit digit decomposition
        let grid = LatticeGrid::unit(4).unwrap();
        let cfg = SpeciesConfig::new(2, 2).unwrap();
        let mut u: Vec<C64> = (0..4)
            .map(|x| c((-((x as f64) - 1.5).powi(2) / 2.0).exp(), 0.2 * x as f64))
            .collect();
        let nu = vec_norm(&u);
        u.iter_mut().for_each(|z| *z /= nu);
        let v = basis(4, 0);
        let psi = MixtureState::product(&u, &v, cfg, grid).unwrap();

        let dim = 4usize.pow(4);
        for i in 0..dim {
            let digits = [(i / 64) % 4, (i / 16) % 4, (i / 4) % 4, i % 4];
            let want = u[digits[0]] * u[digits[1]] * v[digits[2]] * v[digits[3]];
            assert!((psi.amplitudes()[i] - want).norm() < 1e-14);
        }
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_orbitals() {
        let grid = LatticeGrid::unit(2).unwrap();
        let cfg = SpeciesConfig::new(1, 1).unwrap();
        let bad = vec![c(1.0, 0.0), c(0.5, 0.0)];
        assert!(MixtureState::product(&bad, &basis(2, 0), cfg, grid).is_err());
    }

    #[test]
    fn rdm_of_product_state_is_rank_one() {
        let grid = LatticeGrid::unit(3).unwrap();
        let cfg = SpeciesConfig::new(2, 2).unwrap();
        let mut u = vec![c(0.5, 0.1), c(-0.3, 0.4), c(0.2, -0.6)];
        let n = vec_norm(&u);
        u.iter_mut().for_each(|z| *z /= n);
        let v = basis(3, 1);
        let psi = MixtureState::product(&u, &v, cfg, grid).unwrap();
        let rho = psi.one_body_rdm(Species::A);
        for a in 0..3 {
            for b in 0..3 {
                assert!((rho[(a, b)] - u[a] * u[b].conj()).norm() < 1e-12);
            }
        }
        let trace: C64 = (0..3).map(|k| rho[(k, k)]).sum();
        assert!((trace - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rdm_of_maximally_entangled_pair_is_maximally_mixed() {
        // (|00> + |11>)/sqrt(2) for two A particles, one B spectator at site 0
        let grid = LatticeGrid::unit(2).unwrap();
        let cfg = SpeciesConfig::new(2, 1).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let mut amps = vec![c(0.0, 0.0); 8];
        amps[0] = c(s, 0.0); // (0,0;0)
        amps[6] = c(s, 0.0); // (1,1;0)
        let psi = MixtureState::from_amplitudes(amps, cfg, grid).unwrap();
        let rho = psi.one_body_rdm(Species::A);
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { c(0.5, 0.0) } else { c(0.0, 0.0) };
                assert!((rho[(a, b)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transposing_a_slot_with_itself_is_the_identity() {
        let grid = LatticeGrid::unit(2).unwrap();
        let cfg = SpeciesConfig::new(2, 1).unwrap();
        let psi = MixtureState::product(&basis(2, 1), &basis(2, 0), cfg, grid).unwrap();
        for i in 1..=2 {
            let same = psi.transpose_slots(Species::A, i, i).unwrap();
            assert_eq!(same.amplitudes(), psi.amplitudes());
        }
    }

    #[test]
    fn rdm_matches_double_loop_partial_trace() {
        // independent oracle: sum over explicit rest-configurations
        let grid = LatticeGrid::unit(2).unwrap();
        let cfg = SpeciesConfig::new(2, 2).unwrap();
        let dim = 16;
        let amps: Vec<C64> = (0..dim)
            .map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.71).cos()))
            .collect();
        let n = vec_norm(&amps);
        let amps: Vec<C64> = amps.into_iter().map(|z| z / n).collect();
        let psi = MixtureState::from_amplitudes(amps.clone(), cfg, grid).unwrap();

        // species B: keep slot 2 (global index 2 of 4), strides [8,4,2,1]
        let rho = psi.one_body_rdm(Species::B);
        for a in 0..2usize {
            for b in 0..2usize {
                let mut want = c(0.0, 0.0);
                for x1 in 0..2usize {
                    for x2 in 0..2usize {
                        for y2 in 0..2usize {
                            let ia = x1 * 8 + x2 * 4 + a * 2 + y2;
                            let ib = x1 * 8 + x2 * 4 + b * 2 + y2;
                            want += amps[ia] * amps[ib].conj();
                        }
                    }
                }
                assert!((rho[(a, b)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn product_states_have_zero_defect_and_are_detected() {
        let grid = LatticeGrid::unit(3).unwrap();
        let cfg = SpeciesConfig::new(3, 2).unwrap();
        let mut u = vec![c(0.3, 0.2), c(0.1, -0.5), c(0.7, 0.0)];
        let n = vec_norm(&u);
        u.iter_mut().for_each(|z| *z /= n);
        let v = basis(3, 2);
        let psi = MixtureState::product(&u, &v, cfg, grid).unwrap();
        assert!(psi.symmetry_defect() < 1e-12);
        assert!(psi.as_product().is_some());
    }

    #[test]
    fn antisymmetric_state_has_large_defect() {
        // (|01> - |10>)/sqrt(2): transposition flips the sign, defect = 2
        let grid = LatticeGrid::unit(2).unwrap();
        let cfg = SpeciesConfig::new(2, 1).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let mut amps = vec![c(0.0, 0.0); 8];
        amps[2] = c(s, 0.0); // (0,1;0)
        amps[4] = c(-s, 0.0); // (1,0;0)
        let psi = MixtureState::from_amplitudes(amps, cfg, grid).unwrap();
        assert!((psi.symmetry_defect() - 2.0).abs() < 1e-12);
        assert!(psi.as_product().is_none());
    }
}
