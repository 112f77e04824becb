//! Lanczos approximation of `exp(−i H dt) v` for components too large to
//! exponentiate densely.

use num_complex::Complex;
use num_traits::Zero;

use super::hamiltonian::Hamiltonian;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::scalar::{Cx, Real};

const KRYLOV_DIM: usize = 30;
const MAX_SUBSTEPS: usize = 100_000;

fn dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter().zip(b).fold(Cx::zero(), |acc, (x, y)| acc + x.conj() * y)
}

fn norm<T: Real>(a: &[Cx<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt()
}

/// One Lanczos exponential. Returns the result and an a-posteriori error
/// estimate (the residual weight on the first discarded Krylov vector).
fn lanczos_step<T: Real>(h: &Hamiltonian<T>, v: &[Cx<T>], dt: T) -> (Vec<Cx<T>>, T) {
    let beta0 = norm(v);
    if beta0 == T::zero() {
        return (v.to_vec(), T::zero());
    }
    let dim = v.len();
    let mut q: Vec<Vec<Cx<T>>> = vec![v.iter().map(|x| *x / beta0).collect()];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut w = vec![Cx::zero(); dim];
    let mut residual = T::zero();
    let breakdown = T::lit(1e-13);
    for j in 0..KRYLOV_DIM.min(dim) {
        h.apply(&q[j], &mut w);
        alpha.push(dot(&q[j], &w).re);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for qk in &q {
                let c = dot(qk, &w);
                for (x, y) in w.iter_mut().zip(qk) {
                    *x -= c * y;
                }
            }
        }
        let b = norm(&w);
        if b < breakdown || j + 1 == KRYLOV_DIM.min(dim) {
            residual = if b < breakdown { T::zero() } else { b };
            break;
        }
        beta.push(b);
        q.push(w.iter().map(|x| *x / b).collect());
    }
    let m = alpha.len();
    let mut t = vec![T::zero(); m * m];
    for i in 0..m {
        t[i * m + i] = alpha[i];
        if i + 1 < m {
            t[i * m + i + 1] = beta[i];
            t[(i + 1) * m + i] = beta[i];
        }
    }
    let eig = sym_eigen(&t, m);
    // y = exp(−i T dt) e_1
    let mut y = vec![Cx::zero(); m];
    for k in 0..m {
        let s = eig.vector(k);
        let ph = Complex::new((eig.values[k] * dt).cos(), -(eig.values[k] * dt).sin()) * s[0];
        for i in 0..m {
            y[i] += ph * s[i];
        }
    }
    let err = residual * y[m - 1].norm() * beta0;
    let mut out = vec![Cx::zero(); dim];
    for (qi, yi) in q.iter().zip(&y) {
        let c = *yi * beta0;
        for (o, x) in out.iter_mut().zip(qi) {
            *o += c * x;
        }
    }
    (out, err)
}

/// `exp(−i H dt) v` with substeps chosen so the total error stays below `tol`.
pub(crate) fn expmv<T: Real>(h: &Hamiltonian<T>, v: &[Cx<T>], dt: T, tol: T) -> Result<Vec<Cx<T>>> {
    let mut cur = v.to_vec();
    let mut done = T::zero();
    let mut step = dt;
    for _ in 0..MAX_SUBSTEPS {
        if done >= dt {
            return Ok(cur);
        }
        let s = step.min(dt - done);
        let (next, err) = lanczos_step(h, &cur, s);
        if err <= tol * s / dt {
            cur = next;
            done = if s == dt - done { dt } else { done + s };
            if err < tol * s / dt * T::lit(1e-3) {
                step = s * T::lit(2.0);
            }
        } else {
            step = s / T::lit(2.0);
        }
    }
    Err(Error::Tolerance { tolerance: tol.to_f64_lossy(), steps: MAX_SUBSTEPS })
}
