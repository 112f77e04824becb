use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::linalg::CMat;
use crate::scalar::{Cx, Real};
use crate::statevec::{QuantumState, PAR_THRESHOLD};

/// `Σ c_ij σ^i·σ^j + Σ h_i σ_z^i`. Both term families are real and conserve
/// total `S_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian<T> {
    pub n_sites: usize,
    /// `(i, j, c)` for `c σ^i·σ^j`.
    pub exchange: Vec<(usize, usize, T)>,
    /// `(i, h)` for `h σ_z^i`.
    pub field: Vec<(usize, T)>,
}

impl<T: Real> Hamiltonian<T> {
    fn diagonal(&self, idx: usize) -> T {
        let mut d = T::zero();
        for &(i, j, c) in &self.exchange {
            if ((idx >> i) ^ (idx >> j)) & 1 == 0 {
                d += c;
            } else {
                d -= c;
            }
        }
        for &(i, h) in &self.field {
            if (idx >> i) & 1 == 0 {
                d += h;
            } else {
                d -= h;
            }
        }
        d
    }

    fn row(&self, idx: usize, v: &[Cx<T>]) -> Cx<T> {
        let two = T::lit(2.0);
        let mut acc = v[idx] * self.diagonal(idx);
        for &(i, j, c) in &self.exchange {
            if ((idx >> i) ^ (idx >> j)) & 1 == 1 {
                // flip-flop part of σ·σ = 2 P_ij − 1
                acc += v[idx ^ ((1 << i) | (1 << j))] * (two * c);
            }
        }
        acc
    }

    /// `out = H v`
    pub fn apply(&self, v: &[Cx<T>], out: &mut [Cx<T>]) {
        assert_eq!(v.len(), 1 << self.n_sites);
        assert_eq!(out.len(), v.len());
        if v.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(idx, o)| *o = self.row(idx, v));
        } else {
            for (idx, o) in out.iter_mut().enumerate() {
                *o = self.row(idx, v);
            }
        }
    }

    pub fn energy(&self, state: &QuantumState<T>) -> T {
        let v = state.amplitudes();
        let mut hv = vec![Cx::zero(); v.len()];
        self.apply(v, &mut hv);
        v.iter().zip(&hv).fold(T::zero(), |acc, (a, b)| acc + (a.conj() * b).re)
    }

    /// Dense matrix; intended for small systems.
    pub fn to_matrix(&self) -> CMat<T> {
        let dim = 1usize << self.n_sites;
        let mut m = CMat::zeros(dim);
        let mut e = vec![Cx::zero(); dim];
        let mut col = vec![Cx::zero(); dim];
        for c in 0..dim {
            e[c] = Complex::new(T::one(), T::zero());
            self.apply(&e, &mut col);
            for r in 0..dim {
                m[(r, c)] = col[r];
            }
            e[c] = Cx::zero();
        }
        m
    }

    /// Same-shape linear combination `wa·a + wb·b`; both must come from
    /// `CouplingModel::local_terms` on the same sites.
    pub(crate) fn combine(a: &Self, wa: T, b: &Self, wb: T) -> Self {
        debug_assert_eq!(a.exchange.len(), b.exchange.len());
        Self {
            n_sites: a.n_sites,
            exchange: a.exchange.iter().zip(&b.exchange).map(|(&(i, j, x), &(_, _, y))| (i, j, wa * x + wb * y)).collect(),
            field: a.field.iter().zip(&b.field).map(|(&(i, x), &(_, y))| (i, wa * x + wb * y)).collect(),
        }
    }

    /// Real symmetric block of the terms on `sites`, over the local basis
    /// states `basis` (bit `b` ↔ `sites[b]`). Returns row-major data.
    pub(crate) fn sector_block(&self, sites: &[usize], basis: &[usize]) -> Vec<T> {
        let pos = |s: usize| sites.iter().position(|&x| x == s).expect("term outside component");
        let exch: Vec<(usize, usize, T)> = self.exchange.iter().map(|&(i, j, c)| (pos(i), pos(j), c)).collect();
        let field: Vec<(usize, T)> = self.field.iter().map(|&(i, h)| (pos(i), h)).collect();
        let d = basis.len();
        let mut index_of = vec![usize::MAX; 1 << sites.len()];
        for (k, &b) in basis.iter().enumerate() {
            index_of[b] = k;
        }
        let mut m = vec![T::zero(); d * d];
        let two = T::lit(2.0);
        for (r, &b) in basis.iter().enumerate() {
            let mut diag = T::zero();
            for &(i, j, c) in &exch {
                if ((b >> i) ^ (b >> j)) & 1 == 0 {
                    diag += c;
                } else {
                    diag -= c;
                    let k = index_of[b ^ ((1 << i) | (1 << j))];
                    m[k * d + r] += two * c;
                }
            }
            for &(i, h) in &field {
                diag += if (b >> i) & 1 == 0 { h } else { -h };
            }
            m[r * d + r] += diag;
        }
        m
    }
}
