use serde::{Deserialize, Serialize};

use super::Lattice;
use crate::error::Result;
use crate::scalar::{Cx, Real};
use crate::statevec::QuantumState;

pub const STABILIZER_THRESHOLD: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerValue {
    pub lq: usize,
    pub expectation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerReport {
    pub values: Vec<StabilizerValue>,
    pub leakage: f64,
    pub threshold: f64,
}

impl StabilizerReport {
    pub fn all_pass(&self) -> bool {
        self.values.iter().all(|v| v.pass)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().map(|v| v.expectation).fold(f64::INFINITY, f64::min)
    }
}

/// `⟨K_a⟩` with `K_a = X_a ∏_{b ∈ nbr(a)} Z_b` on the logical operators.
/// Code-space overlaps are not renormalized, so leakage lowers every value.
pub fn verify_stabilizers<T: Real>(state: &QuantumState<T>, lattice: &Lattice) -> Result<StabilizerReport> {
    let psi = lattice.register.logical_overlaps(state)?;
    let weight: f64 = psi.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum();
    let values = (0..lattice.lq_count())
        .map(|a| {
            let mask = lattice.neighbours(a).iter().fold(0usize, |m, &b| m | (1 << b));
            let mut acc = Cx::<T>::new(T::zero(), T::zero());
            for (x, &p) in psi.iter().enumerate() {
                let v = psi[x ^ (1 << a)].conj() * p;
                acc += if (x & mask).count_ones() % 2 == 0 { v } else { -v };
            }
            let expectation = acc.re.to_f64_lossy();
            StabilizerValue { lq: a, expectation, pass: expectation >= STABILIZER_THRESHOLD }
        })
        .collect();
    Ok(StabilizerReport { values, leakage: (1.0 - weight).max(0.0), threshold: STABILIZER_THRESHOLD })
}

/// Logical amplitudes of the graph state `∏ CZ |+…+⟩` on the lattice.
pub fn ideal_cluster_amplitudes<T: Real>(lattice: &Lattice) -> Vec<Cx<T>> {
    let l = lattice.lq_count();
    let norm = T::lit((-(l as f64) / 2.0).exp2());
    (0..1usize << l)
        .map(|x| {
            let odd = lattice.adjacency.iter().filter(|&&(a, b)| (x >> a) & (x >> b) & 1 == 1).count() % 2 == 1;
            Cx::new(if odd { -norm } else { norm }, T::zero())
        })
        .collect()
}

/// `|⟨C|P_L ψ⟩|²` against the ideal cluster state.
pub fn cluster_fidelity<T: Real>(state: &QuantumState<T>, lattice: &Lattice) -> Result<T> {
    let psi = lattice.register.logical_overlaps(state)?;
    let ideal = ideal_cluster_amplitudes::<T>(lattice);
    let o = ideal.iter().zip(&psi).fold(Cx::new(T::zero(), T::zero()), |a, (c, p)| a + c.conj() * p);
    Ok(o.norm_sqr())
}
