use num_complex::Complex;
use num_traits::Zero;

use super::{CouplingModel, DENSE_COMPONENT_SITES};
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::scalar::{Cx, Real};
use crate::statevec::QuantumState;

/// Eigenvalues closer than this are reported as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn check_size<T: Real>(model: &CouplingModel<T>) -> Result<()> {
    if model.n_sites > DENSE_COMPONENT_SITES {
        return Err(Error::SiteBudget { requested: model.n_sites, cap: DENSE_COMPONENT_SITES });
    }
    Ok(())
}

/// Every eigenpair of `H(t)` in ascending order, found sector by sector.
pub fn eigenstates<T: Real>(model: &CouplingModel<T>, t: T) -> Result<Vec<(T, QuantumState<T>)>> {
    check_size(model)?;
    let h = model.hamiltonian_at(t)?;
    let n = model.n_sites;
    let sites: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(1 << n);
    for m in 0..=n {
        let basis: Vec<usize> = (0..1usize << n).filter(|l| l.count_ones() as usize == m).collect();
        let eig = sym_eigen(&h.sector_block(&sites, &basis), basis.len());
        for (k, &e) in eig.values.iter().enumerate() {
            let mut amps = vec![Cx::zero(); 1 << n];
            for (&b, &c) in basis.iter().zip(eig.vector(k)) {
                amps[b] = Complex::new(c, T::zero());
            }
            out.push((e, QuantumState::from_amplitudes(n, amps)?));
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

/// Levels containing the `k` lowest eigenvalues, each with its full
/// degeneracy (so the counts may sum past `k`).
pub fn spectrum<T: Real>(model: &CouplingModel<T>, t: T, k: usize) -> Result<Vec<(T, usize)>> {
    check_size(model)?;
    let dim = 1usize << model.n_sites;
    if k == 0 || k > dim {
        return Err(Error::SpectrumSize { requested: k, dim });
    }
    let h = model.hamiltonian_at(t)?;
    let n = model.n_sites;
    let sites: Vec<usize> = (0..n).collect();
    let mut values = Vec::with_capacity(dim);
    for m in 0..=n {
        let basis: Vec<usize> = (0..1usize << n).filter(|l| l.count_ones() as usize == m).collect();
        values.extend(sym_eigen(&h.sector_block(&sites, &basis), basis.len()).values);
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = T::lit(DEGENERACY_TOL);
    let mut levels: Vec<(T, usize)> = Vec::new();
    for v in values {
        match levels.last_mut() {
            Some((e, c)) if (v - *e).abs() <= tol * (T::one() + e.abs()) => *c += 1,
            _ => levels.push((v, 1)),
        }
    }
    let mut covered = 0;
    Ok(levels
        .into_iter()
        .take_while(|&(_, c)| {
            let keep = covered < k;
            covered += c;
            keep
        })
        .collect())
}
