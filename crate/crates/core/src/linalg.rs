//! Small dense linear algebra: complex square matrices and a real symmetric
//! eigensolver (Householder tridiagonalization followed by implicit QL).

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{Cx, Real};

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CMat<T> {
    n: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Cx::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix rows must be square");
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn diag(d: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .fold(Cx::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Kronecker product `self ⊗ other`; `self` occupies the high-order index bits.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.n, other.n);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.n).fold(Cx::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> T {
        let gram = self.adjoint().matmul(self);
        hermitian_eigenvalues(&gram)
            .into_iter()
            .fold(T::zero(), |acc, x| acc.max(x))
            .max(T::zero())
            .sqrt()
    }

    /// `‖A†A − I‖_max`
    pub fn unitarity_deviation(&self) -> T {
        self.adjoint().matmul(self).sub(&Self::identity(self.n)).max_abs()
    }

    /// `‖A − A†‖_max`
    pub fn hermiticity_deviation(&self) -> T {
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn determinant(&self) -> Cx<T> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = Cx::<T>::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[x * n + col]
                        .norm()
                        .partial_cmp(&a[y * n + col].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[pivot * n + col].is_zero() {
                return Cx::zero();
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        det
    }

    /// Multiplies by the phase that makes the first element with modulus
    /// above `eps` (row-major scan) real and positive.
    pub fn remove_global_phase(&self, eps: T) -> Self {
        match self.data.iter().find(|z| z.norm() > eps) {
            Some(z) => self.scale(z.conj() / Cx::from(z.norm())),
            None => self.clone(),
        }
    }

    /// `|Tr(A†B)| / n`
    pub fn phase_insensitive_overlap(&self, other: &Self) -> T {
        self.adjoint().matmul(other).trace().norm() / T::from_usize(self.n).unwrap()
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Cx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: Self) -> CMat<T> {
        self.matmul(rhs)
    }
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// Column-major eigenvectors: `vectors[k * n + i]` is component `i` of vector `k`.
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Real> SymEigen<T> {
    pub fn vector(&self, k: usize) -> &[T] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

/// Symmetric eigensolver. `a` is row-major `n × n`; only symmetry is assumed.
pub fn sym_eigen<T: Real>(a: &[T], n: usize) -> SymEigen<T> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return SymEigen { values: vec![], vectors: vec![], n };
    }
    // v is row-major working storage; columns become eigenvectors.
    let mut v: Vec<T> = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        for i in 0..n {
            vectors.push(v[i * n + k]);
        }
    }
    SymEigen { values, vectors, n }
}

/// Eigenvalues of a complex Hermitian matrix via its real `2n × 2n` embedding
/// `[[Re, −Im], [Im, Re]]`, whose spectrum is the Hermitian one doubled.
pub fn hermitian_eigenvalues<T: Real>(h: &CMat<T>) -> Vec<T> {
    let n = h.dim();
    let m = 2 * n;
    let mut a = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            let (re, im) = ((z.re + h[(j, i)].re) / T::lit(2.0), (z.im - h[(j, i)].im) / T::lit(2.0));
            a[i * m + j] = re;
            a[(i + n) * m + (j + n)] = re;
            a[i * m + (j + n)] = -im;
            a[(i + n) * m + j] = im;
        }
    }
    let all = sym_eigen(&a, m).values;
    all.into_iter().step_by(2).collect()
}

// Householder reduction to tridiagonal form (EISPACK tred2 lineage).
fn tred2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
                v[idx(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = T::zero();
    }
    v[idx(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

// Implicit QL on the tridiagonal form, accumulating into v.
fn tql2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    let idx = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in l + 2..n {
                    d[i] -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[idx(k, i + 1)];
                        v[idx(k, i + 1)] = s * v[idx(k, i)] + c * h;
                        v[idx(k, i)] = c * v[idx(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
}

/// 2×2 Pauli matrices in the `|0⟩ = up` basis.
pub fn pauli<T: Real>(axis: crate::statevec::PauliAxis) -> CMat<T> {
    use crate::statevec::PauliAxis::*;
    let o = Cx::<T>::zero();
    let l = Cx::<T>::one();
    let i = Complex::new(T::zero(), T::one());
    match axis {
        I => CMat::identity(2),
        X => CMat::from_rows(&[vec![o, l], vec![l, o]]),
        Y => CMat::from_rows(&[vec![o, -i], vec![i, o]]),
        Z => CMat::from_rows(&[vec![l, o], vec![o, -l]]),
    }
}

/// `exp(−i θ/2 n·σ)` for a unit axis `n`.
pub fn su2_rotation<T: Real>(axis: [T; 3], angle: T) -> CMat<T> {
    use crate::statevec::PauliAxis::*;
    let half = angle / T::lit(2.0);
    let (c, s) = (half.cos(), half.sin());
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let n = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    let gen = pauli::<T>(X)
        .scale(Cx::from(n[0]))
        .add(&pauli::<T>(Y).scale(Cx::from(n[1])))
        .add(&pauli::<T>(Z).scale(Cx::from(n[2])));
    CMat::identity(2)
        .scale(Cx::from(c))
        .add(&gen.scale(Complex::new(T::zero(), -s)))
}

/// Axis and angle of a 2×2 unitary, up to global phase: returns `(n, θ)` with
/// `θ ∈ [0, π]` such that `U ∝ exp(−i θ/2 n·σ)`.
pub fn su2_axis_angle<T: Real>(u: &CMat<T>) -> ([T; 3], T) {
    let det = u.determinant();
    let phase = Complex::from_polar(T::one(), -det.arg() / T::lit(2.0));
    let v = u.scale(phase);
    // v = cos(θ/2) I − i sin(θ/2) n·σ
    let two = T::lit(2.0);
    let mut c = (v[(0, 0)] + v[(1, 1)]).re / two;
    let mut nx = -((v[(0, 1)] + v[(1, 0)]).im) / two;
    let mut ny = ((v[(1, 0)] - v[(0, 1)]).re) / two;
    let mut nz = -((v[(0, 0)] - v[(1, 1)]).im) / two;
    if c < T::zero() {
        c = -c;
        nx = -nx;
        ny = -ny;
        nz = -nz;
    }
    let s = (nx * nx + ny * ny + nz * nz).sqrt();
    let angle = two * s.atan2(c);
    if s <= T::epsilon() {
        return ([T::zero(), T::zero(), T::one()], T::zero());
    }
    ([nx / s, ny / s, nz / s], angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::PauliAxis;

    #[test]
    fn eigen_reconstructs_matrix() {
        let n = 6;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = ((i * 7 + j * 3) % 11) as f64 / 3.0 - 1.5;
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let eig = sym_eigen(&a, n);
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| eig.values[k] * eig.vector(k)[i] * eig.vector(k)[j]).sum();
                assert!((r - a[i * n + j]).abs() < 1e-12);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigen_handles_diagonal_and_degenerate() {
        let a: Vec<f64> = vec![2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0];
        let eig = sym_eigen(&a, 3);
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        assert!((eig.values[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_eigenvalues_of_pauli_y() {
        let ev = hermitian_eigenvalues(&pauli::<f64>(PauliAxis::Y));
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn axis_angle_roundtrip() {
        let axis = [0.6, -0.48, 0.64];
        let u = su2_rotation(axis, 1.1f64).scale(Complex::from_polar(1.0, 0.4));
        let (n, th) = su2_axis_angle(&u);
        assert!((th - 1.1).abs() < 1e-12);
        for k in 0..3 {
            assert!((n[k] - axis[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_norm_and_determinant() {
        let m = CMat::diag(&[Complex::new(3.0f64, 0.0), Complex::new(0.0, -2.0)]);
        assert!((m.operator_norm() - 3.0).abs() < 1e-12);
        assert!((m.determinant() - Complex::new(0.0, -6.0)).norm() < 1e-12);
    }
}
