use num_complex::Complex;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::PauliAxis;
use crate::error::{Error, Result};
use crate::linalg::{pauli, su2_rotation, CMat};
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Unitary,
    Hermitian,
}

/// A matrix acting on an ordered list of sites. Bit `b` of the local index
/// refers to `support[b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LocalOperator<T> {
    support: Vec<usize>,
    matrix: CMat<T>,
    kind: OperatorKind,
}

const VALIDATION_TOL: f64 = 1e-9;

impl<T: Real> LocalOperator<T> {
    pub fn new(support: Vec<usize>, matrix: CMat<T>, kind: OperatorKind) -> Result<Self> {
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() || support.is_empty() {
            return Err(Error::Support(format!("support {support:?} must be non-empty and distinct")));
        }
        if matrix.dim() != 1 << support.len() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix on {} sites",
                matrix.dim(),
                matrix.dim(),
                support.len()
            )));
        }
        let deviation = match kind {
            OperatorKind::Unitary => matrix.unitarity_deviation(),
            OperatorKind::Hermitian => matrix.hermiticity_deviation(),
        };
        if deviation > T::lit(VALIDATION_TOL) {
            return Err(Error::NotUnitaryOrHermitian {
                kind: match kind {
                    OperatorKind::Unitary => "unitary",
                    OperatorKind::Hermitian => "Hermitian",
                },
                deviation: deviation.to_f64_lossy(),
            });
        }
        Ok(Self { support, matrix, kind })
    }

    pub fn unitary(support: Vec<usize>, matrix: CMat<T>) -> Result<Self> {
        Self::new(support, matrix, OperatorKind::Unitary)
    }

    pub fn hermitian(support: Vec<usize>, matrix: CMat<T>) -> Result<Self> {
        Self::new(support, matrix, OperatorKind::Hermitian)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub(crate) fn check_range(&self, n_sites: usize) -> Result<()> {
        match self.support.iter().find(|&&s| s >= n_sites) {
            Some(s) => Err(Error::Support(format!("site {s} outside {n_sites}-site state"))),
            None => Ok(()),
        }
    }

    pub fn pauli(site: usize, axis: PauliAxis) -> Result<Self> {
        Self::new(vec![site], pauli(axis), OperatorKind::Hermitian)
    }

    /// `exp(−i θ/2 n·σ)` on one site.
    pub fn rotation(site: usize, axis: [T; 3], angle: T) -> Result<Self> {
        Self::unitary(vec![site], su2_rotation(axis, angle))
    }

    /// `σ^i·σ^j`
    pub fn heisenberg(i: usize, j: usize) -> Result<Self> {
        Self::hermitian(vec![i, j], heisenberg_matrix())
    }

    /// `exp(−i θ σ^i·σ^j)`
    pub fn exchange_evolution(i: usize, j: usize, theta: T) -> Result<Self> {
        // σ·σ = 2 SWAP − 1
        let two = T::lit(2.0);
        let pre = Complex::from_polar(T::one(), theta);
        let c = pre * Cx::from((two * theta).cos());
        let s = pre * Complex::new(T::zero(), -(two * theta).sin());
        let m = CMat::identity(4).scale(c).add(&swap_matrix().scale(s));
        Self::unitary(vec![i, j], m)
    }

    /// Projector onto the two-spin singlet.
    pub fn singlet_projector(i: usize, j: usize) -> Result<Self> {
        let quarter = Cx::from(T::lit(0.25));
        let m = CMat::identity(4).sub(&heisenberg_matrix()).scale(quarter);
        Self::hermitian(vec![i, j], m)
    }

    pub fn swap(i: usize, j: usize) -> Result<Self> {
        Self::unitary(vec![i, j], swap_matrix())
    }
}

pub(crate) fn swap_matrix<T: Real>() -> CMat<T> {
    let mut m = CMat::zeros(4);
    m[(0, 0)] = Cx::one();
    m[(1, 2)] = Cx::one();
    m[(2, 1)] = Cx::one();
    m[(3, 3)] = Cx::one();
    m
}

pub(crate) fn heisenberg_matrix<T: Real>() -> CMat<T> {
    let x = pauli::<T>(PauliAxis::X);
    let y = pauli::<T>(PauliAxis::Y);
    let z = pauli::<T>(PauliAxis::Z);
    let m = x.kron(&x).add(&y.kron(&y)).add(&z.kron(&z));
    debug_assert!(m.as_slice().iter().all(|v| v.im == T::zero()));
    m
}
