//! The two analytic growth envelopes the laboratory checks measurements
//! against, plus the time horizon inside which the correlation envelope stays
//! meaningfully small.
//!
//! Both envelopes vanish at `t = 0` (computed via `exp_m1`, so exactly at
//! floating-point zero), grow like `e^{rate |t|} - 1`, and scale linearly in
//! the product of the four observable norms.

use crate::error::{Error, Result};
use crate::hamiltonian::BoundParams;

/// Slot counts of the four observables: the first pair acts on `n1` A-slots
/// and `n2` B-slots, the second pair on the following `m1` and `m2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LrLayout {
    pub n1: usize,
    pub n2: usize,
    pub m1: usize,
    pub m2: usize,
}

impl LrLayout {
    /// The symmetric layout used for correlation measurements: both species
    /// carry `n` leading and `m` following slots.
    pub fn symmetric(n: usize, m: usize) -> Self {
        LrLayout { n1: n, n2: n, m1: m, m2: m }
    }
}

/// Envelope for the equal-time correlation of the two observable pairs:
/// `(alpha / (c^2 N)) * L * (e^{rate_corr |t|} - 1)`.
pub fn correlation_bound(params: &BoundParams, t: f64) -> f64 {
    let prefactor = params.alpha / (params.c * params.c * params.n_total as f64);
    prefactor * params.opnorm_product * (params.rate_corr * t.abs()).exp_m1()
}

/// Envelope for the commutator of the second pair with the Heisenberg-evolved
/// first pair: `L * (m1+m2)(n1+n2) / (3 c N) * (e^{rate_lr |t|} - 1)`.
pub fn commutator_bound(params: &BoundParams, layout: &LrLayout, t: f64) -> f64 {
    let pairs = ((layout.m1 + layout.m2) * (layout.n1 + layout.n2)) as f64;
    let prefactor = pairs / (3.0 * params.c * params.n_total as f64);
    params.opnorm_product * prefactor * (params.rate_lr * t.abs()).exp_m1()
}

/// Largest time up to which the correlation envelope is guaranteed to stay
/// `O(N^{-epsilon})`: `(1 - epsilon) ln(N) / rate_corr`.
pub fn validity_horizon(params: &BoundParams, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if params.rate_corr <= 0.0 {
        return Err(Error::invalid(
            "validity horizon undefined for vanishing interaction scale",
        ));
    }
    Ok((1.0 - epsilon) * (params.n_total as f64).ln() / params.rate_corr)
}
