use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{Encoding, EncodingKind};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{Cx, Real};
use crate::statevec::{LocalOperator, QuantumState, MAX_SITES};

/// Assignment of logical qubits to physical sites. Logical qubit 0 is the
/// least-significant bit of logical amplitude indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalRegister {
    pub encoding: EncodingKind,
    pub site_map: Vec<Vec<usize>>,
}

/// Result of projecting a physical state onto the code space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalProjection<T> {
    /// Renormalized logical amplitudes.
    pub amplitudes: Vec<Cx<T>>,
    /// `1 − ‖P_L ψ‖²`
    pub leakage: T,
}

impl LogicalRegister {
    pub fn new(encoding: EncodingKind, site_map: Vec<Vec<usize>>) -> Result<Self> {
        let r = Self { encoding, site_map };
        r.validate()?;
        Ok(r)
    }

    /// LQ `q` on sites `q·k .. (q+1)·k`.
    pub fn contiguous(encoding: EncodingKind, lq_count: usize) -> Result<Self> {
        let k = encoding.sites_per_lq();
        Self::new(encoding, (0..lq_count).map(|q| (q * k..(q + 1) * k).collect()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.encoding.sites_per_lq();
        if self.site_map.is_empty() {
            return Err(Error::Register("no logical qubits".into()));
        }
        let mut seen = vec![];
        for (q, block) in self.site_map.iter().enumerate() {
            if block.len() != k {
                return Err(Error::Register(format!("LQ {q} has {} sites, {} expects {k}", block.len(), self.encoding.name())));
            }
            seen.extend_from_slice(block);
        }
        let n = seen.len();
        if n > MAX_SITES {
            return Err(Error::SiteBudget { requested: n, cap: MAX_SITES });
        }
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::Register("site blocks must be disjoint and cover 0..n".into()));
        }
        Ok(())
    }

    pub fn lq_count(&self) -> usize {
        self.site_map.len()
    }

    pub fn n_sites(&self) -> usize {
        self.site_map.len() * self.encoding.sites_per_lq()
    }

    pub fn sites(&self, lq: usize) -> &[usize] {
        &self.site_map[lq]
    }

    pub fn encoding<T: Real>(&self) -> Encoding<T> {
        Encoding::new(self.encoding)
    }

    /// Physical index of the local configuration `locals[q]` of every LQ.
    fn physical_index(&self, locals: &[usize]) -> usize {
        let mut idx = 0;
        for (block, &l) in self.site_map.iter().zip(locals) {
            for (b, &s) in block.iter().enumerate() {
                idx |= ((l >> b) & 1) << s;
            }
        }
        idx
    }

    /// Calls `f(physical_index, per-LQ local indices)` for every configuration
    /// in which each block lies in the support of its code space.
    fn for_each_code_config(&self, support: &[usize], mut f: impl FnMut(usize, &[usize])) {
        let l = self.lq_count();
        let mut digits = vec![0usize; l];
        let mut locals = vec![support[0]; l];
        loop {
            f(self.physical_index(&locals), &locals);
            let mut q = 0;
            loop {
                if q == l {
                    return;
                }
                digits[q] += 1;
                if digits[q] < support.len() {
                    locals[q] = support[digits[q]];
                    break;
                }
                digits[q] = 0;
                locals[q] = support[0];
                q += 1;
            }
        }
    }

    /// Tensor product of per-LQ logical basis states.
    pub fn encode_bits<T: Real>(&self, bits: &[u8]) -> Result<QuantumState<T>> {
        if bits.len() != self.lq_count() || bits.iter().any(|&b| b > 1) {
            return Err(Error::Amplitudes(format!("{bits:?} is not a {}-bit string", self.lq_count())));
        }
        let x = bits.iter().enumerate().fold(0usize, |acc, (q, &b)| acc | (usize::from(b) << q));
        let mut amps = vec![Cx::zero(); 1 << self.lq_count()];
        amps[x] = Complex::new(T::one(), T::zero());
        self.encode(&amps)
    }

    /// Embeds a normalized logical amplitude vector.
    pub fn encode<T: Real>(&self, logical: &[Cx<T>]) -> Result<QuantumState<T>> {
        self.validate()?;
        let l = self.lq_count();
        if logical.len() != 1 << l {
            return Err(Error::Amplitudes(format!("{} amplitudes for {l} logical qubits", logical.len())));
        }
        let norm = logical.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        if (norm - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::Amplitudes(format!("logical amplitudes have norm {norm}")));
        }
        let n = self.n_sites();
        let mut amps = vec![Cx::zero(); 1 << n];
        if self.encoding == EncodingKind::Bare {
            for (x, &a) in logical.iter().enumerate() {
                let locals: Vec<usize> = (0..l).map(|q| (x >> q) & 1).collect();
                amps[self.physical_index(&locals)] = a;
            }
        } else {
            let enc = self.encoding::<T>();
            let mut buf = Vec::with_capacity(1 << l);
            self.for_each_code_config(&enc.support(), |idx, locals| {
                // contract logical bits one LQ at a time
                buf.clear();
                buf.extend_from_slice(logical);
                for &loc in locals {
                    let (w0, w1) = (enc.zero[loc], enc.one[loc]);
                    let half = buf.len() / 2;
                    for y in 0..half {
                        buf[y] = buf[2 * y] * w0 + buf[2 * y + 1] * w1;
                    }
                    buf.truncate(half);
                }
                amps[idx] = buf[0];
            });
        }
        QuantumState::from_amplitudes(n, amps)
    }

    /// Logical amplitudes `⟨x_L|ψ⟩` (not renormalized) and their weight.
    pub fn logical_overlaps<T: Real>(&self, state: &QuantumState<T>) -> Result<Vec<Cx<T>>> {
        if state.n_sites() != self.n_sites() {
            return Err(Error::Dimension(format!("{}-site state, {}-site register", state.n_sites(), self.n_sites())));
        }
        let l = self.lq_count();
        let psi = state.amplitudes();
        let mut out = vec![Cx::zero(); 1 << l];
        if self.encoding == EncodingKind::Bare {
            for (x, o) in out.iter_mut().enumerate() {
                let locals: Vec<usize> = (0..l).map(|q| (x >> q) & 1).collect();
                *o = psi[self.physical_index(&locals)];
            }
            return Ok(out);
        }
        let enc = self.encoding::<T>();
        let mut weights = Vec::with_capacity(1 << l);
        self.for_each_code_config(&enc.support(), |idx, locals| {
            let a = psi[idx];
            if a.is_zero() {
                return;
            }
            weights.clear();
            weights.push(a);
            for &loc in locals {
                let (w0, w1) = (enc.zero[loc].conj(), enc.one[loc].conj());
                let len = weights.len();
                // new bit q is the most significant so far
                for y in 0..len {
                    let v = weights[y];
                    weights.push(v * w1);
                    weights[y] = v * w0;
                }
            }
            for (o, w) in out.iter_mut().zip(&weights) {
                *o += *w;
            }
        });
        Ok(out)
    }

    /// Projects onto the code space. Errors when nothing is left.
    pub fn project_logical<T: Real>(&self, state: &QuantumState<T>) -> Result<LogicalProjection<T>> {
        let mut amps = self.logical_overlaps(state)?;
        let weight = amps.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        let leakage = (T::one() - weight).max(T::zero());
        if weight < T::lit(1e-12) {
            return Err(Error::NoLogicalComponent { leakage: leakage.to_f64_lossy() });
        }
        let s = T::one() / weight.sqrt();
        for a in &mut amps {
            *a = *a * s;
        }
        Ok(LogicalProjection { amplitudes: amps, leakage })
    }

    pub fn leakage<T: Real>(&self, state: &QuantumState<T>) -> Result<T> {
        let amps = self.logical_overlaps(state)?;
        Ok((T::one() - amps.iter().fold(T::zero(), |a, z| a + z.norm_sqr())).max(T::zero()))
    }

    /// LQs whose blocks intersect `sites`, ascending.
    pub fn lqs_touching(&self, sites: &[usize]) -> Result<Vec<usize>> {
        let n = self.n_sites();
        if let Some(s) = sites.iter().find(|&&s| s >= n) {
            return Err(Error::Support(format!("site {s} is not registered")));
        }
        Ok((0..self.lq_count()).filter(|&q| self.site_map[q].iter().any(|s| sites.contains(s))).collect())
    }

    /// `P_L O P_L` in the logical basis of the LQs that `op` touches (in
    /// ascending LQ order, first LQ least significant).
    pub fn projected_operator<T: Real>(&self, op: &LocalOperator<T>) -> Result<CMat<T>> {
        let lqs = self.lqs_touching(op.support())?;
        let sub = LogicalRegister::contiguous(self.encoding, lqs.len())?;
        // relabel physical sites of the touched LQs into the sub-register
        let relabel = |s: usize| -> usize {
            for (new_q, &q) in lqs.iter().enumerate() {
                if let Some(b) = self.site_map[q].iter().position(|&x| x == s) {
                    return sub.site_map[new_q][b];
                }
            }
            unreachable!()
        };
        let local_op = LocalOperator::new(
            op.support().iter().map(|&s| relabel(s)).collect(),
            op.matrix().clone(),
            op.kind(),
        )?;
        let dim = 1usize << lqs.len();
        let mut m = CMat::zeros(dim);
        for y in 0..dim {
            let bits: Vec<u8> = (0..lqs.len()).map(|q| ((y >> q) & 1) as u8).collect();
            let mut v = sub.encode_bits::<T>(&bits)?;
            v.apply_matrix(&local_op)?;
            let col = sub.logical_overlaps(&v)?;
            for x in 0..dim {
                m[(x, y)] = col[x];
            }
        }
        Ok(m)
    }
}
