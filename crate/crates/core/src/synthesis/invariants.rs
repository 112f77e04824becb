use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::linalg::CMat;
use crate::scalar::{expi, Cx, Real};

/// `1 − |Tr(V†U)/d|²`; insensitive to global phase.
pub fn infidelity<T: Real>(u: &CMat<T>, v: &CMat<T>) -> T {
    let o = u.phase_insensitive_overlap(v);
    (T::one() - o * o).max(T::zero())
}

/// Makhlin local invariants `(G1, G2)` of a two-qubit unitary.
pub fn makhlin_invariants<T: Real>(u: &CMat<T>) -> (Cx<T>, Cx<T>) {
    assert_eq!(u.dim(), 4);
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let (o, l, i) = (Cx::<T>::new(T::zero(), T::zero()), Cx::<T>::new(h, T::zero()), Cx::<T>::new(T::zero(), h));
    let q = CMat::from_rows(&[vec![l, o, o, i], vec![o, i, l, o], vec![o, i, -l, o], vec![l, o, o, -i]]);
    let ub = q.adjoint().matmul(u).matmul(&q);
    let m = ub.transpose().matmul(&ub);
    let det = u.determinant();
    let tr = m.trace();
    let tr2 = m.matmul(&m).trace();
    let g1 = tr * tr / (det * T::lit(16.0));
    let g2 = (tr * tr - tr2) / (det * T::lit(4.0));
    (g1, g2)
}

/// Distance of the invariants from the CZ class `(0, 1)`.
pub fn cz_class_distance<T: Real>(u: &CMat<T>) -> T {
    let (g1, g2) = makhlin_invariants(u);
    (g1.norm_sqr() + (g2 - Complex::new(T::one(), T::zero())).norm_sqr()).sqrt()
}

pub fn is_cz_class<T: Real>(u: &CMat<T>, tol: T) -> bool {
    cz_class_distance(u) < tol
}

/// Phases of a diagonal two-qubit gate written as
/// `exp(−i(α Z⊗Z + β₀ Z₀ + β₁ Z₁ + γ))`, qubit 0 least significant.
///
/// Each coefficient is recovered from a four-term phase ratio and so is only
/// defined modulo π/2; values lie in `(−π/4, π/4]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ZPhases<T> {
    pub alpha: T,
    pub beta: [T; 2],
}

impl<T: Real> ZPhases<T> {
    pub fn from_diagonal(u: &CMat<T>) -> Self {
        assert_eq!(u.dim(), 4);
        let d = [u[(0, 0)], u[(1, 1)], u[(2, 2)], u[(3, 3)]];
        let q = T::lit(4.0);
        let ratio = |a: Cx<T>, b: Cx<T>, c: Cx<T>, e: Cx<T>| -(a * b * c.conj() * e.conj()).arg() / q;
        Self {
            alpha: ratio(d[0], d[3], d[1], d[2]),
            beta: [ratio(d[0], d[2], d[1], d[3]), ratio(d[0], d[1], d[2], d[3])],
        }
    }

    /// `exp(−i(α ZZ + β₀ Z₀ + β₁ Z₁))`
    pub fn matrix(&self) -> CMat<T> {
        let d: Vec<Cx<T>> = (0..4)
            .map(|x| {
                let z0 = if x & 1 == 0 { T::one() } else { -T::one() };
                let z1 = if x & 2 == 0 { T::one() } else { -T::one() };
                expi(-(self.alpha * z0 * z1 + self.beta[0] * z0 + self.beta[1] * z1))
            })
            .collect();
        CMat::diag(&d)
    }
}

/// Infidelity of `u` to CZ after stripping the single-qubit z phases read
/// off its diagonal. Zero exactly when `u` is CZ up to local z rotations.
pub fn z_class_infidelity<T: Real>(u: &CMat<T>) -> T {
    assert_eq!(u.dim(), 4);
    let d0 = u[(0, 0)];
    let unit = |z: Cx<T>| if z.norm() > T::zero() { z / z.norm() } else { Cx::new(T::one(), T::zero()) };
    let p0 = unit(u[(1, 1)] * d0.conj()).conj();
    let p1 = unit(u[(2, 2)] * d0.conj()).conj();
    let local = CMat::diag(&[Cx::new(T::one(), T::zero()), p0, p1, p0 * p1]);
    let one = Cx::new(T::one(), T::zero());
    infidelity(&local.matmul(u), &CMat::diag(&[one, one, one, -one]))
}
