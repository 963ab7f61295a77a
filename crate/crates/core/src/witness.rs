//! Randomized witness operators for the sweep experiments.
//!
//! Each sample draws four kernels (one per observable) from the complex
//! Ginibre ensemble, optionally Hermitizes them, and rescales each to unit
//! spectral norm so the norm product entering the envelopes is exactly 1.
//!
//! Reproducibility contract: the kernel for `(seed, sample, slot)` depends on
//! nothing else — not on thread count, not on how many other kernels were
//! drawn before it. Each gets a private stream cipher keyed by a hash of the
//! identifying tuple.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::linalg::spectral_norm_dense;

/// Stream cipher privately keyed by the identifying tuple of one kernel.
fn kernel_rng(seed: u64, sample: u64, slot: u64) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"bosemix.witness.v1");
    hasher.update(seed.to_le_bytes());
    hasher.update(sample.to_le_bytes());
    hasher.update(slot.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}

fn ginibre(rng: &mut ChaCha12Rng, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// One witness kernel: Ginibre draw, optional Hermitization, unit spectral
/// norm. `slot` indexes the observable within the sample (0..4).
pub fn witness_kernel(seed: u64, sample: usize, slot: usize, dim: usize, hermitian: bool) -> DMatrix<C64> {
    let mut rng = kernel_rng(seed, sample as u64, slot as u64);
    let mut g = ginibre(&mut rng, dim);
    if hermitian {
        let adj = g.adjoint();
        g = (g + adj) * C64::new(0.5, 0.0);
    }
    let norm = spectral_norm_dense(&g);
    if norm.is_finite() && norm > 1e-300 {
        g / C64::new(norm, 0.0)
    } else {
        // A Ginibre draw is singular-to-zero with probability zero; keep the
        // pipeline total anyway.
        DMatrix::identity(dim, dim)
    }
}

/// A seeded normalized orbital, reproducible from `(seed, sample, tag)`
/// alone. The tag separates independent orbital families (species A vs B)
/// drawn from one seed; the stream is also independent of the kernel stream.
pub fn seeded_orbital(seed: u64, sample: usize, tag: u64, dim: usize) -> Vec<C64> {
    let mut hasher = Sha256::new();
    hasher.update(b"bosemix.orbital.v1");
    hasher.update(seed.to_le_bytes());
    hasher.update((sample as u64).to_le_bytes());
    hasher.update(tag.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha12Rng::from_seed(key);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 1e-300 {
        for z in &mut v {
            *z /= norm;
        }
    } else {
        v = vec![C64::new(0.0, 0.0); dim];
        v[0] = C64::new(1.0, 0.0);
    }
    v
}

/// The four kernels of one witness sample, with per-observable dimensions
/// (`M^slots`; a 1x1 identity stands in for an empty slot set).
pub fn witness_kernels(
    seed: u64,
    sample: usize,
    dims: [usize; 4],
    hermitian: bool,
) -> [DMatrix<C64>; 4] {
    std::array::from_fn(|slot| {
        if dims[slot] == 1 {
            DMatrix::identity(1, 1)
        } else {
            witness_kernel(seed, sample, slot, dims[slot], hermitian)
        }
    })
}
