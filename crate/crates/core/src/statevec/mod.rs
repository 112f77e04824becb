//! Dense state vectors over spin-1/2 sites.
//!
//! Site 0 is the least-significant bit of the amplitude index and `|0⟩` is
//! spin-up. Every module inherits this convention.

mod measure;
mod operator;

pub use measure::{Basis, MeasurementRecord};
pub use operator::{LocalOperator, OperatorKind};
#[cfg(test)]
pub(crate) use operator::swap_matrix;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Largest number of sites a dense state may hold.
pub const MAX_SITES: usize = 22;

/// Amplitude-vector length above which kernels split work across threads.
/// Each output element is written by exactly one task, so results do not
/// depend on the thread count.
pub(crate) const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

/// Normalized complex amplitude vector over `n_sites` spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct QuantumState<T> {
    n_sites: usize,
    amplitudes: Vec<Cx<T>>,
}

impl<T: Real> QuantumState<T> {
    /// All spins up.
    pub fn new(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let mut amplitudes = vec![Cx::zero(); 1 << n_sites];
        amplitudes[0] = Cx::one();
        Ok(Self { n_sites, amplitudes })
    }

    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        check_sites(n_sites)?;
        if index >= 1 << n_sites {
            return Err(Error::Dimension(format!("basis index {index} for {n_sites} sites")));
        }
        let mut amplitudes = vec![Cx::zero(); 1 << n_sites];
        amplitudes[index] = Cx::one();
        Ok(Self { n_sites, amplitudes })
    }

    /// Every site in `|+⟩`.
    pub fn plus(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let dim = 1usize << n_sites;
        let a = T::one() / T::from_usize(dim).unwrap().sqrt();
        Ok(Self { n_sites, amplitudes: vec![Complex::new(a, T::zero()); dim] })
    }

    /// Normalizes the given amplitudes; rejects zero vectors and bad lengths.
    pub fn from_amplitudes(n_sites: usize, amplitudes: Vec<Cx<T>>) -> Result<Self> {
        check_sites(n_sites)?;
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {} sites",
                amplitudes.len(),
                n_sites
            )));
        }
        let mut s = Self { n_sites, amplitudes };
        let norm = s.norm();
        if !(norm > T::zero()) {
            return Err(Error::Amplitudes("zero vector".into()));
        }
        s.scale(T::one() / norm);
        Ok(s)
    }

    /// Product state from single-site spinors, `spinors[k]` on site `k`.
    pub fn product(spinors: &[[Cx<T>; 2]]) -> Result<Self> {
        let n = spinors.len();
        check_sites(n)?;
        let amps = (0..1usize << n)
            .map(|idx| {
                spinors
                    .iter()
                    .enumerate()
                    .fold(Cx::one(), |acc, (k, sp)| acc * sp[(idx >> k) & 1])
            })
            .collect();
        Self::from_amplitudes(n, amps)
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Cx<T>] {
        &self.amplitudes
    }

    /// Raw mutable access; callers must keep the vector normalized.
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt()
    }

    pub(crate) fn scale(&mut self, s: T) {
        for a in &mut self.amplitudes {
            *a = *a * s;
        }
    }

    pub(crate) fn renormalize(&mut self) {
        let n = self.norm();
        if n > T::zero() {
            self.scale(T::one() / n);
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Cx<T> {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Cx::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    /// Tensor product with `other` placed on the higher sites.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n_sites + other.n_sites;
        check_sites(n)?;
        let lo = self.dim();
        let amps = (0..lo * other.dim())
            .map(|idx| self.amplitudes[idx % lo] * other.amplitudes[idx / lo])
            .collect();
        Ok(Self { n_sites: n, amplitudes: amps })
    }

    pub fn apply_unitary(&self, op: &LocalOperator<T>) -> Result<Self> {
        let mut out = self.clone();
        out.apply_unitary_in_place(op)?;
        Ok(out)
    }

    pub fn apply_unitary_in_place(&mut self, op: &LocalOperator<T>) -> Result<()> {
        if op.kind() != OperatorKind::Unitary {
            return Err(Error::NotUnitaryOrHermitian { kind: "unitary", deviation: f64::NAN });
        }
        self.apply_matrix(op)
    }

    /// Embeds `op`'s matrix at its support, regardless of kind.
    pub(crate) fn apply_matrix(&mut self, op: &LocalOperator<T>) -> Result<()> {
        op.check_range(self.n_sites)?;
        let support = op.support();
        let k = support.len();
        let local_dim = 1usize << k;
        let mask: usize = support.iter().fold(0, |m, &s| m | (1 << s));
        let offsets: Vec<usize> = (0..local_dim)
            .map(|l| (0..k).fold(0, |acc, b| acc | (((l >> b) & 1) << support[b])))
            .collect();
        let m = op.matrix();
        let bases: Vec<usize> = (0..self.dim()).filter(|i| i & mask == 0).collect();
        let amps = &mut self.amplitudes;

        let kernel = |base: usize, src: &[Cx<T>], buf: &mut Vec<Cx<T>>| {
            buf.clear();
            for r in 0..local_dim {
                let mut acc = Cx::zero();
                for c in 0..local_dim {
                    let v = m[(r, c)];
                    if !v.is_zero() {
                        acc += v * src[base | offsets[c]];
                    }
                }
                buf.push(acc);
            }
        };

        if amps.len() >= PAR_THRESHOLD {
            let src = amps.clone();
            let results: Vec<Vec<Cx<T>>> = bases
                .par_iter()
                .map_init(Vec::new, |buf, &base| {
                    kernel(base, &src, buf);
                    buf.clone()
                })
                .collect();
            for (base, vals) in bases.iter().zip(results) {
                for (r, v) in vals.into_iter().enumerate() {
                    amps[base | offsets[r]] = v;
                }
            }
        } else {
            let mut buf = Vec::with_capacity(local_dim);
            for &base in &bases {
                kernel(base, amps, &mut buf);
                for (r, &v) in buf.iter().enumerate() {
                    amps[base | offsets[r]] = v;
                }
            }
        }
        Ok(())
    }

    /// Applies the Pauli `axis` to each listed site (a π pulse without phase).
    pub fn apply_pauli(&mut self, site: usize, axis: PauliAxis) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::Support(format!("site {site} out of range")));
        }
        let bit = 1usize << site;
        let i = Complex::new(T::zero(), T::one());
        match axis {
            PauliAxis::I => {}
            PauliAxis::Z => {
                for (idx, a) in self.amplitudes.iter_mut().enumerate() {
                    if idx & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            PauliAxis::X | PauliAxis::Y => {
                for idx in 0..self.dim() {
                    if idx & bit == 0 {
                        let (a0, a1) = (self.amplitudes[idx], self.amplitudes[idx | bit]);
                        if axis == PauliAxis::X {
                            self.amplitudes[idx] = a1;
                            self.amplitudes[idx | bit] = a0;
                        } else {
                            self.amplitudes[idx] = -i * a1;
                            self.amplitudes[idx | bit] = i * a0;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `⟨ψ|O|ψ⟩` for a Hermitian operator.
    pub fn expectation(&self, op: &LocalOperator<T>) -> Result<T> {
        if op.kind() != OperatorKind::Hermitian {
            return Err(Error::NotUnitaryOrHermitian { kind: "Hermitian", deviation: f64::NAN });
        }
        let mut applied = self.clone();
        applied.apply_matrix(op)?;
        let v = self.inner(&applied);
        debug_assert!(v.im.abs() < T::lit(1e-9), "imaginary expectation {:?}", v);
        Ok(v.re)
    }

    /// Probability that the given sites are all found in the bit pattern `bits`.
    pub fn probability_of(&self, sites: &[usize], bits: usize) -> T {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| sites.iter().enumerate().all(|(b, &s)| ((idx >> s) & 1) == ((bits >> b) & 1)))
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr())
    }

    /// Distance to `other` after removing the global phase.
    pub fn phase_aligned_distance(&self, other: &Self) -> T {
        let ov = self.inner(other);
        let ph = if ov.norm() > T::zero() { ov / Cx::from(ov.norm()) } else { Cx::one() };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |acc, (a, b)| acc + (*a * ph - b).norm_sqr())
            .sqrt()
    }
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::SiteBudget { requested: n, cap: MAX_SITES });
    }
    Ok(())
}
