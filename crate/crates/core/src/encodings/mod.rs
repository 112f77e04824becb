//! Logical-qubit embeddings: bare dots, two-dot DFS pairs and four-dot
//! supercoherent blocks.
//!
//! Within an LQ block the local bit `b` is the `b`-th listed site. For the
//! two-dot code the block is `[A, B]`; for the supercoherent code the block
//! lists spins 1–4 in order.

mod register;

pub use register::{LogicalProjection, LogicalRegister};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{pauli, CMat};
use crate::scalar::{Cx, Real};
use crate::statevec::{LocalOperator, PauliAxis, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingKind {
    Bare,
    TwoDot,
    Supercoherent,
}

impl EncodingKind {
    pub fn sites_per_lq(self) -> usize {
        match self {
            EncodingKind::Bare => 1,
            EncodingKind::TwoDot => 2,
            EncodingKind::Supercoherent => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::Bare => "bare",
            EncodingKind::TwoDot => "two-dot",
            EncodingKind::Supercoherent => "supercoherent",
        }
    }
}

/// Logical basis of one LQ block.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding<T> {
    pub kind: EncodingKind,
    pub sites_per_lq: usize,
    zero: Vec<Cx<T>>,
    one: Vec<Cx<T>>,
}

/// Local index of a spin string written spin 1 first; `u` is up (bit 0).
fn ket(spins: &str) -> usize {
    spins.chars().enumerate().fold(0, |acc, (b, c)| acc | (usize::from(c == 'd') << b))
}

impl<T: Real> Encoding<T> {
    pub fn new(kind: EncodingKind) -> Self {
        let k = kind.sites_per_lq();
        let mut zero = vec![Cx::zero(); 1 << k];
        let mut one = vec![Cx::zero(); 1 << k];
        let c = |x: f64| Complex::new(T::lit(x), T::zero());
        match kind {
            EncodingKind::Bare => {
                zero[0] = Cx::one();
                one[1] = Cx::one();
            }
            EncodingKind::TwoDot => {
                // |0_L⟩ = |0_A 1_B⟩, |1_L⟩ = |1_A 0_B⟩
                zero[ket("ud")] = Cx::one();
                one[ket("du")] = Cx::one();
            }
            EncodingKind::Supercoherent => {
                // ½(ud − du)₁₂ ⊗ (−ud + du)₃₄
                zero[ket("udud")] = c(-0.5);
                zero[ket("uddu")] = c(0.5);
                zero[ket("duud")] = c(0.5);
                zero[ket("dudu")] = c(-0.5);
                let a = 1.0 / 3f64.sqrt();
                let b = -1.0 / (2.0 * 3f64.sqrt());
                one[ket("uudd")] = c(a);
                one[ket("dduu")] = c(a);
                for s in ["udud", "uddu", "duud", "dudu"] {
                    one[ket(s)] = c(b);
                }
            }
        }
        Self { kind, sites_per_lq: k, zero, one }
    }

    pub fn local_dim(&self) -> usize {
        1 << self.sites_per_lq
    }

    /// Physical vector of logical basis state `bit` on one block.
    pub fn basis_vector(&self, bit: u8) -> &[Cx<T>] {
        if bit == 0 {
            &self.zero
        } else {
            &self.one
        }
    }

    pub fn logical_zero(&self) -> QuantumState<T> {
        QuantumState::from_amplitudes(self.sites_per_lq, self.zero.clone()).unwrap()
    }

    pub fn logical_one(&self) -> QuantumState<T> {
        QuantumState::from_amplitudes(self.sites_per_lq, self.one.clone()).unwrap()
    }

    /// Local indices where either basis vector is nonzero.
    pub(crate) fn support(&self) -> Vec<usize> {
        (0..self.local_dim()).filter(|&l| !self.zero[l].is_zero() || !self.one[l].is_zero()).collect()
    }

    /// `P_L = |0_L⟩⟨0_L| + |1_L⟩⟨1_L|`
    pub fn projector(&self) -> CMat<T> {
        CMat::from_fn(self.local_dim(), |r, c| {
            self.zero[r] * self.zero[c].conj() + self.one[r] * self.one[c].conj()
        })
    }

    /// `V u V† + (1 − P_L)` for a 2×2 `u`: the ideal logical operation,
    /// acting trivially outside the code space.
    pub fn embed(&self, u: &CMat<T>) -> CMat<T> {
        assert_eq!(u.dim(), 2);
        let v = [&self.zero, &self.one];
        let p = self.projector();
        CMat::from_fn(self.local_dim(), |r, c| {
            let delta: Cx<T> = if r == c { Cx::one() } else { Cx::zero() };
            let mut acc = delta - p[(r, c)];
            for a in 0..2 {
                for b in 0..2 {
                    acc += v[a][r] * u[(a, b)] * v[b][c].conj();
                }
            }
            acc
        })
    }

    /// `P_L O P_L` in the logical basis for an operator on this block.
    pub fn compress(&self, op: &CMat<T>) -> CMat<T> {
        assert_eq!(op.dim(), self.local_dim());
        let v = [&self.zero, &self.one];
        CMat::from_fn(2, |a, b| {
            let ov = op.apply(v[b]);
            v[a].iter().zip(&ov).fold(Cx::zero(), |acc, (x, y)| acc + x.conj() * y)
        })
    }

    /// Logical Pauli as a block operator (unitary and Hermitian).
    pub fn pauli(&self, axis: PauliAxis) -> CMat<T> {
        self.embed(&pauli(axis))
    }

    /// Logical Pauli on the LQ occupying `sites`, for expectation values.
    pub fn pauli_observable(&self, sites: &[usize], axis: PauliAxis) -> Result<LocalOperator<T>> {
        LocalOperator::hermitian(sites.to_vec(), self.pauli(axis))
    }

    /// Ideal logical unitary on the LQ occupying `sites`.
    pub fn logical_gate(&self, sites: &[usize], u: &CMat<T>) -> Result<LocalOperator<T>> {
        LocalOperator::unitary(sites.to_vec(), self.embed(u))
    }
}
