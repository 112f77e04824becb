//! Time evolution under a [`CouplingModel`].
//!
//! The interval is cut at every schedule breakpoint. Within a piece the active
//! couplings split the sites into connected components whose propagators
//! commute. Small components get a dense propagator per `S_z` sector (split
//! further by total spin when the field is uniform, skipping blocks the
//! states do not occupy); larger
//! ones are stepped on the vector with Lanczos exponentials. Ramping pieces
//! use the fourth-order commutator-free Magnus scheme with step doubling.

use num_complex::Complex;
use num_traits::Zero;

use super::hamiltonian::Hamiltonian;
use super::krylov;
use super::{CouplingModel, DENSE_COMPONENT_SITES};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, CMat};
use crate::scalar::{Cx, Real};
use crate::statevec::QuantumState;

/// Default error budget per evolved piece.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Step budget of one adaptive integration before [`Error::Tolerance`].
const MAX_STEPS: usize = 100_000;

/// Evolves `state` from `t0` to `t1`.
pub fn evolve<T: Real>(
    state: &QuantumState<T>,
    model: &CouplingModel<T>,
    t0: T,
    t1: T,
    tol: T,
) -> Result<QuantumState<T>> {
    let mut out = evolve_batch(std::slice::from_ref(state), model, t0, t1, tol)?;
    Ok(out.pop().unwrap())
}

/// Evolves several states with one set of propagators.
pub fn evolve_batch<T: Real>(
    states: &[QuantumState<T>],
    model: &CouplingModel<T>,
    t0: T,
    t1: T,
    tol: T,
) -> Result<Vec<QuantumState<T>>> {
    evolve_batch_limited(states, model, t0, t1, tol, DENSE_COMPONENT_SITES)
}

pub(crate) fn evolve_batch_limited<T: Real>(
    states: &[QuantumState<T>],
    model: &CouplingModel<T>,
    t0: T,
    t1: T,
    tol: T,
    dense_limit: usize,
) -> Result<Vec<QuantumState<T>>> {
    model.validate()?;
    for s in states {
        if s.n_sites() != model.n_sites {
            return Err(Error::Dimension(format!("{}-site state, {}-site model", s.n_sites(), model.n_sites)));
        }
    }
    if !(t1 >= t0) {
        return Err(Error::Model(format!("evolution from {t0} back to {t1}")));
    }
    model.check_time(t0)?;
    model.check_time(t1)?;
    if !(tol > T::zero()) {
        return Err(Error::Model(format!("tolerance {tol} must be positive")));
    }

    let mut out: Vec<QuantumState<T>> = states.to_vec();
    let pts = model.breakpoints(t0, t1);
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        for comp in components(model, a, b) {
            if comp.sites.len() <= dense_limit {
                // spin blocks holding less amplitude than this are left idle
                let drop = tol * T::lit(1e-3);
                let frame = component_frame(model, &comp, &out, (a + b) / T::lit(2.0), drop);
                let u = dense_propagator(model, &comp, &frame, a, b, tol)?;
                for s in &mut out {
                    u.apply(s.amplitudes_mut());
                }
            } else {
                for s in &mut out {
                    krylov_piece(model, &comp, s.amplitudes_mut(), a, b, tol)?;
                }
            }
        }
    }
    for s in &mut out {
        s.renormalize();
    }
    Ok(out)
}

/// Full propagator `U(t1, t0)`; column `c` is the evolved basis state `c`.
pub fn propagator<T: Real>(model: &CouplingModel<T>, t0: T, t1: T, tol: T) -> Result<CMat<T>> {
    if model.n_sites > DENSE_COMPONENT_SITES {
        return Err(Error::SiteBudget { requested: model.n_sites, cap: DENSE_COMPONENT_SITES });
    }
    let dim = 1usize << model.n_sites;
    let basis: Vec<QuantumState<T>> =
        (0..dim).map(|c| QuantumState::basis(model.n_sites, c)).collect::<Result<_>>()?;
    let cols = evolve_batch(&basis, model, t0, t1, tol)?;
    Ok(CMat::from_fn(dim, |r, c| cols[c].amplitudes()[r]))
}

#[derive(Debug, Clone)]
pub(crate) struct Component {
    pub sites: Vec<usize>,
    pub ramping: bool,
}

/// Connected components of the couplings active on `(a, b)`. Sites that carry
/// only a Zeeman term form singleton components; idle sites are omitted.
pub(crate) fn components<T: Real>(model: &CouplingModel<T>, a: T, b: T) -> Vec<Component> {
    let n = model.n_sites;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut touched = vec![false; n];
    let mut ramping = vec![false; n];
    for e in model.edges.iter().filter(|e| !e.is_zero_on(a, b)) {
        let (ri, rj) = (find(&mut parent, e.i), find(&mut parent, e.j));
        parent[ri.max(rj)] = ri.min(rj);
        touched[e.i] = true;
        touched[e.j] = true;
        if !e.is_constant_on(a, b) {
            ramping[e.i] = true;
        }
    }
    if let Some(z) = &model.zeeman {
        for (i, s) in z.sites.iter().enumerate() {
            if s.g * z.b_z != T::zero() {
                touched[i] = true;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Component> = Default::default();
    for i in (0..n).filter(|&i| touched[i]) {
        let r = find(&mut parent, i);
        let c = groups.entry(r).or_insert_with(|| Component { sites: Vec::new(), ramping: false });
        c.sites.push(i);
        c.ramping |= ramping[i];
    }
    groups.into_values().collect()
}

/// Invariant subspaces of a component: `S_z` sectors, each optionally split
/// into total-spin eigenspaces. Sectors no state occupies are left out.
#[derive(Debug, Clone)]
pub(crate) struct Frame<T> {
    sites: Vec<usize>,
    /// Per sector: local configurations and, when split, the orthonormal
    /// total-spin bases (`d × m`, row-major) in those coordinates.
    sectors: Vec<Option<(Vec<usize>, Vec<Option<(Vec<T>, usize)>>)>>,
}

fn sector_bases(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k + 1];
    for l in 0..1usize << k {
        out[l.count_ones() as usize].push(l);
    }
    out
}

impl<T: Real> Frame<T> {
    /// `occupied[s]` marks sectors with `s` flipped spins that must be
    /// propagated; `split` requests the total-spin refinement, valid when
    /// the component Hamiltonian commutes with `S²`.
    fn new(sites: &[usize], occupied: &[bool], split: bool) -> Self {
        let k = sites.len();
        let total = Hamiltonian {
            n_sites: sites.iter().max().map_or(0, |m| m + 1),
            exchange: (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).map(|(a, b)| (sites[a], sites[b], T::one())).collect(),
            field: Vec::new(),
        };
        let sectors = sector_bases(k)
            .into_iter()
            .enumerate()
            .map(|(s, basis)| {
                if !occupied[s] {
                    return None;
                }
                let d = basis.len();
                if !split || d == 1 {
                    return Some((basis, vec![None]));
                }
                // Σ σ·σ = 2S(S+1) − 3k/2 has integer levels at least 4 apart
                let eig = sym_eigen(&total.sector_block(sites, &basis), d);
                let mut blocks = Vec::new();
                let mut start = 0;
                for end in 1..=d {
                    if end == d || eig.values[end] - eig.values[start] > T::lit(0.5) {
                        let m = end - start;
                        let mut w = vec![T::zero(); d * m];
                        for j in 0..m {
                            for (r, x) in eig.vector(start + j).iter().enumerate() {
                                w[r * m + j] = *x;
                            }
                        }
                        blocks.push(Some((w, m)));
                        start = end;
                    }
                }
                Some((basis, blocks))
            })
            .collect();
        Self { sites: sites.to_vec(), sectors }
    }
}

impl<T: Real> Frame<T> {
    /// Drops total-spin blocks on which every state has amplitude norm below
    /// `threshold` (summed over the remaining sites).
    fn prune(&mut self, states: &[QuantumState<T>], threshold: T) {
        let k = self.sites.len();
        let offsets: Vec<usize> =
            (0..1usize << k).map(|l| (0..k).fold(0, |acc, b| acc | (((l >> b) & 1) << self.sites[b]))).collect();
        let mask = offsets[(1 << k) - 1];
        for sector in self.sectors.iter_mut().flatten() {
            let (basis, blocks) = sector;
            if blocks.len() < 2 {
                continue;
            }
            let d = basis.len();
            let mut weights = vec![T::zero(); blocks.len()];
            for st in states {
                let amps = st.amplitudes();
                for rest in (0..amps.len()).filter(|i| i & mask == 0) {
                    for (b, wt) in blocks.iter().zip(weights.iter_mut()) {
                        let Some((w, m)) = b else { continue };
                        for j in 0..*m {
                            let y = (0..d).fold(Cx::<T>::zero(), |acc, r| acc + amps[rest | offsets[basis[r]]] * w[r * m + j]);
                            *wt += y.norm_sqr();
                        }
                    }
                }
            }
            let keep: Vec<bool> = weights.iter().map(|w| w.sqrt() > threshold).collect();
            let mut it = keep.iter();
            blocks.retain(|_| *it.next().unwrap());
        }
    }
}

/// Block-diagonal unitary on a component in a [`Frame`]; absent sectors act
/// as the identity.
#[derive(Debug, Clone)]
pub(crate) struct BlockUnitary<'f, T> {
    frame: &'f Frame<T>,
    /// One matrix per block, in frame order.
    blocks: Vec<Vec<CMat<T>>>,
}

fn project<T: Real>(hs: &[T], d: usize, w: &[T], m: usize) -> Vec<T> {
    // Wᵀ H W
    let mut hw = vec![T::zero(); d * m];
    for r in 0..d {
        for c in 0..d {
            let h = hs[r * d + c];
            if h == T::zero() {
                continue;
            }
            for j in 0..m {
                hw[r * m + j] += h * w[c * m + j];
            }
        }
    }
    let mut out = vec![T::zero(); m * m];
    for r in 0..d {
        for i in 0..m {
            let wi = w[r * m + i];
            if wi == T::zero() {
                continue;
            }
            for j in 0..m {
                out[i * m + j] += wi * hw[r * m + j];
            }
        }
    }
    out
}

impl<'f, T: Real> BlockUnitary<'f, T> {
    fn identity(frame: &'f Frame<T>) -> Self {
        let blocks = frame
            .sectors
            .iter()
            .map(|s| match s {
                None => Vec::new(),
                Some((basis, bs)) => bs.iter().map(|b| CMat::identity(b.as_ref().map_or(basis.len(), |x| x.1))).collect(),
            })
            .collect();
        Self { frame, blocks }
    }

    /// `exp(−i H dt)` for time-independent `H` supported on the frame sites.
    fn exp(h: &Hamiltonian<T>, frame: &'f Frame<T>, dt: T) -> Self {
        let blocks = frame
            .sectors
            .iter()
            .map(|s| {
                let Some((basis, bs)) = s else { return Vec::new() };
                let d = basis.len();
                let hs = h.sector_block(&frame.sites, basis);
                bs.iter()
                    .map(|b| {
                        let (hb, m) = match b {
                            Some((w, m)) => (project(&hs, d, w, *m), *m),
                            None => (hs.clone(), d),
                        };
                        let eig = sym_eigen(&hb, m);
                        let mut u = CMat::zeros(m);
                        for (k, &l) in eig.values.iter().enumerate() {
                            let ph = Complex::new((l * dt).cos(), -(l * dt).sin());
                            let v = eig.vector(k);
                            for r in 0..m {
                                let vr = ph * v[r];
                                for c in 0..m {
                                    u[(r, c)] += vr * v[c];
                                }
                            }
                        }
                        u
                    })
                    .collect()
            })
            .collect();
        Self { frame, blocks }
    }

    /// `self` applied after `earlier`.
    fn after(&self, earlier: &Self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .zip(&earlier.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u.matmul(v)).collect())
            .collect();
        Self { frame: self.frame, blocks }
    }

    fn distance(&self, other: &Self) -> T {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| u.sub(v).max_abs()))
            .fold(T::zero(), T::max)
    }

    fn apply(&self, amps: &mut [Cx<T>]) {
        let sites = &self.frame.sites;
        let k = sites.len();
        let offsets: Vec<usize> =
            (0..1usize << k).map(|l| (0..k).fold(0, |acc, b| acc | (((l >> b) & 1) << sites[b]))).collect();
        let mask = offsets[(1 << k) - 1];
        let mut buf = Vec::new();
        let mut out = Vec::new();
        let mut y = Vec::new();
        for rest in (0..amps.len()).filter(|i| i & mask == 0) {
            for (sector, us) in self.frame.sectors.iter().zip(&self.blocks) {
                let Some((basis, bs)) = sector else { continue };
                let d = basis.len();
                buf.clear();
                buf.extend(basis.iter().map(|&l| amps[rest | offsets[l]]));
                out.clear();
                out.extend_from_slice(&buf);
                for (b, u) in bs.iter().zip(us) {
                    match b {
                        None => {
                            for r in 0..d {
                                let mut acc = Cx::zero();
                                for c in 0..d {
                                    acc += u[(r, c)] * buf[c];
                                }
                                out[r] = acc;
                            }
                        }
                        Some((w, m)) => {
                            // out += W (U − 1) Wᵀ buf; blocks left out act trivially
                            let m = *m;
                            y.clear();
                            y.resize(m, Cx::zero());
                            for r in 0..d {
                                let a = buf[r];
                                for j in 0..m {
                                    y[j] += a * w[r * m + j];
                                }
                            }
                            let z: Vec<Cx<T>> = (0..m)
                                .map(|j| (0..m).fold(Cx::<T>::zero(), |acc, c| acc + u[(j, c)] * y[c]) - y[j])
                                .collect();
                            for r in 0..d {
                                let row = &w[r * m..(r + 1) * m];
                                out[r] += row.iter().zip(&z).fold(Cx::zero(), |acc, (&wj, &zj)| acc + zj * wj);
                            }
                        }
                    }
                }
                for (r, &l) in basis.iter().enumerate() {
                    amps[rest | offsets[l]] = out[r];
                }
            }
        }
    }
}

// Commutator-free fourth-order Magnus: Gauss nodes and mixing weights.
fn cf4_nodes<T: Real>() -> ([T; 2], [T; 2]) {
    let s3 = T::lit(3.0).sqrt();
    let half = T::lit(0.5);
    let c = [half - s3 / T::lit(6.0), half + s3 / T::lit(6.0)];
    let a = [T::lit(0.25) - s3 / T::lit(6.0), T::lit(0.25) + s3 / T::lit(6.0)];
    (c, a)
}

/// Two exponents of one CF4 step of size `h` from `t`, in application order.
fn cf4_exponents<T: Real>(model: &CouplingModel<T>, sites: &[usize], t: T, h: T) -> [Hamiltonian<T>; 2] {
    let (c, a) = cf4_nodes::<T>();
    let h1 = model.local_terms(t + c[0] * h, sites);
    let h2 = model.local_terms(t + c[1] * h, sites);
    // the early node dominates the first exponential
    [Hamiltonian::combine(&h1, a[1], &h2, a[0]), Hamiltonian::combine(&h1, a[0], &h2, a[1])]
}

fn cf4_step<'f, T: Real>(model: &CouplingModel<T>, frame: &'f Frame<T>, t: T, h: T) -> BlockUnitary<'f, T> {
    let [first, second] = cf4_exponents(model, &frame.sites, t, h);
    BlockUnitary::exp(&second, frame, h).after(&BlockUnitary::exp(&first, frame, h))
}

/// Frame for `comp` covering the sectors the states occupy. The total-spin
/// split applies when the field is uniform over the component.
fn component_frame<T: Real>(
    model: &CouplingModel<T>,
    comp: &Component,
    states: &[QuantumState<T>],
    t: T,
    drop_below: T,
) -> Frame<T> {
    let k = comp.sites.len();
    let mask = comp.sites.iter().fold(0usize, |m, &s| m | (1 << s));
    let mut occupied = vec![false; k + 1];
    for st in states {
        for (i, a) in st.amplitudes().iter().enumerate() {
            if !a.is_zero() {
                occupied[(i & mask).count_ones() as usize] = true;
            }
        }
    }
    let field = model.local_terms(t, &comp.sites).field;
    let uniform = field.windows(2).all(|w| w[0].1 == w[1].1);
    let mut frame = Frame::new(&comp.sites, &occupied, uniform);
    if uniform {
        frame.prune(states, drop_below);
    }
    frame
}

fn dense_propagator<'f, T: Real>(
    model: &CouplingModel<T>,
    comp: &Component,
    frame: &'f Frame<T>,
    a: T,
    b: T,
    tol: T,
) -> Result<BlockUnitary<'f, T>> {
    let sites = &comp.sites;
    if !comp.ramping {
        let mid = (a + b) / T::lit(2.0);
        return Ok(BlockUnitary::exp(&model.local_terms(mid, sites), frame, b - a));
    }
    adaptive(a, b, tol, BlockUnitary::identity(frame), |acc, t, h| {
        let one = cf4_step(model, frame, t, h);
        let half = h / T::lit(2.0);
        let two = cf4_step(model, frame, t + half, half).after(&cf4_step(model, frame, t, half));
        let err = one.distance(&two);
        (two.after(acc), err)
    })
}

fn krylov_piece<T: Real>(
    model: &CouplingModel<T>,
    comp: &Component,
    amps: &mut [Cx<T>],
    a: T,
    b: T,
    tol: T,
) -> Result<()> {
    let sites = &comp.sites;
    let result = if !comp.ramping {
        let mid = (a + b) / T::lit(2.0);
        krylov::expmv(&model.local_terms(mid, sites), amps, b - a, tol)?
    } else {
        let step = |v: &[Cx<T>], t: T, h: T| -> Result<Vec<Cx<T>>> {
            let [first, second] = cf4_exponents(model, sites, t, h);
            let inner = tol * T::lit(1e-2);
            let v = krylov::expmv(&first, v, h, inner)?;
            krylov::expmv(&second, &v, h, inner)
        };
        let mut failure = None;
        let out = adaptive(a, b, tol, amps.to_vec(), |acc, t, h| {
            let half = h / T::lit(2.0);
            let attempt = step(acc, t, h).and_then(|one| {
                let two = step(&step(acc, t, half)?, t + half, half)?;
                let err = one.iter().zip(&two).fold(T::zero(), |m, (x, y)| m.max((x - y).norm()));
                Ok((two, err))
            });
            match attempt {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(e);
                    (acc.clone(), T::zero())
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        out
    };
    amps.copy_from_slice(&result);
    Ok(())
}

/// Step-doubling driver. `step(acc, t, h)` returns the advanced accumulator
/// and an error estimate for that step.
fn adaptive<T: Real, A>(a: T, b: T, tol: T, init: A, mut step: impl FnMut(&A, T, T) -> (A, T)) -> Result<A> {
    let span = b - a;
    let mut h = span / T::lit(8.0);
    let mut t = a;
    let mut acc = init;
    let min_h = span * T::lit(1e-9);
    for _ in 0..MAX_STEPS {
        if t >= b {
            return Ok(acc);
        }
        let h_try = h.min(b - t);
        let (next, err) = step(&acc, t, h_try);
        // below a few hundred ulps the estimate is roundoff, not truncation
        let budget = (tol * h_try / span).max(T::epsilon() * T::lit(256.0));
        if err <= budget || h_try <= min_h {
            acc = next;
            t = if h_try == b - t { b } else { t + h_try };
        }
        let factor = if err > T::zero() {
            (T::lit(0.9) * (budget / err).powf(T::lit(0.2))).max(T::lit(0.2)).min(T::lit(4.0))
        } else {
            T::lit(4.0)
        };
        h = (h_try * factor).max(min_h);
    }
    Err(Error::Tolerance { tolerance: tol.to_f64_lossy(), steps: MAX_STEPS })
}
