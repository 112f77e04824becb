//! Physical realizations of single-LQ rotations for each encoding.

use num_complex::Complex;

use super::{Device, GateRecipe};
use crate::encodings::{EncodingKind, LogicalRegister};
use crate::error::{Error, Result};
use crate::linalg::{su2_rotation, CMat};
use crate::model::{CouplingModel, Edge, Species, Zeeman, ZeemanSite};
use crate::scalar::Real;
use crate::statevec::LocalOperator;

/// Angles `(a, b, c)` with `u ∝ R_z(a)·R_x(b)·R_z(c)`.
pub fn euler_zxz<T: Real>(u: &CMat<T>) -> (T, T, T) {
    assert_eq!(u.dim(), 2);
    let two = T::lit(2.0);
    let det = u.determinant();
    let w = u.scale(Complex::from_polar(T::one(), -det.arg() / two));
    let (c0, s0) = (w[(0, 0)].norm(), w[(1, 0)].norm());
    let b = two * s0.atan2(c0);
    let eps = T::lit(1e-12);
    let sum = if c0 > eps { two * w[(1, 1)].arg() } else { T::zero() };
    let i = Complex::new(T::zero(), T::one());
    let diff = if s0 > eps { two * (i * w[(1, 0)]).arg() } else { T::zero() };
    ((sum + diff) / two, b, (sum - diff) / two)
}

/// `θ` reduced to `[0, 2π)`, snapping near-multiples of 2π to zero.
pub(crate) fn wrap_angle<T: Real>(theta: T) -> T {
    let tau = T::TAU();
    let mut r = theta % tau;
    if r < T::zero() {
        r += tau;
    }
    let eps = T::lit(1e-12);
    if r < eps || tau - r < eps {
        T::zero()
    } else {
        r
    }
}

/// Equal-coupling background on every SQ block; empty for other encodings.
pub fn sq_background<T: Real>(register: &LogicalRegister, j_sq: T) -> Result<CouplingModel<T>> {
    let mut m = CouplingModel::new(register.n_sites());
    if register.encoding == EncodingKind::Supercoherent {
        for block in &register.site_map {
            for a in 0..4 {
                for b in a + 1..4 {
                    m.add_edge(Edge::constant(block[a], block[b], j_sq))?;
                }
            }
        }
    }
    Ok(m)
}

/// Axis of the logical rotation driven by raising the coupling of spins
/// `(2, 3)` inside an SQ: `(sin 120°, 0, cos 120°)`.
pub(crate) fn sq_cross_axis<T: Real>() -> [T; 3] {
    let a = T::lit(120f64.to_radians());
    [a.sin(), T::zero(), a.cos()]
}

/// Rotation `(c, b)` with `R_z(c)·R_n(b)` taking ẑ to x̂, `n` the cross axis.
fn sq_x_frame<T: Real>() -> (T, T) {
    let n = sq_cross_axis::<T>();
    let b = (-T::one() / T::lit(3.0)).acos();
    // Rodrigues on ẑ
    let (cb, sb) = (b.cos(), b.sin());
    let vx = n[1] * sb + n[0] * n[2] * (T::one() - cb);
    let vy = -n[0] * sb + n[1] * n[2] * (T::one() - cb);
    (-vy.atan2(vx), b)
}

#[derive(Clone, Copy)]
enum Axis {
    Z,
    X,
    /// SQ cross axis.
    N,
}

fn push_axis<T: Real>(
    recipe: &mut GateRecipe<T>,
    register: &LogicalRegister,
    lq: usize,
    axis: Axis,
    angle: T,
    device: &Device<T>,
) -> Result<()> {
    let block = register.sites(lq).to_vec();
    let n = register.n_sites();
    match register.encoding {
        EncodingKind::Bare => {
            let ax = match axis {
                Axis::Z => [T::zero(), T::zero(), T::one()],
                Axis::X => [T::one(), T::zero(), T::zero()],
                Axis::N => sq_cross_axis(),
            };
            if wrap_angle(angle) != T::zero() {
                recipe.apply(LocalOperator::rotation(block[0], ax, angle)?, format!("lq{lq} rotation"))?;
            }
        }
        EncodingKind::TwoDot => match axis {
            Axis::Z => {
                // Zeeman contrast on A: H_L = (Δg B_z / 2) Z_L
                let rate = device.b_z * device.delta_g;
                if rate == T::zero() {
                    return Err(Error::Model("two-dot z rotation needs B_z·Δg ≠ 0".into()));
                }
                let t = wrap_angle(angle * rate.signum()) / rate.abs();
                if t > T::zero() {
                    let sites = (0..n)
                        .map(|s| ZeemanSite {
                            g: if s == block[0] { device.delta_g } else { T::zero() },
                            species: if s == block[0] { Species::A } else { Species::B },
                        })
                        .collect();
                    let m = CouplingModel::new(n).with_zeeman(Zeeman { b_z: device.b_z, sites })?;
                    recipe.evolve(m, t, format!("lq{lq} zeeman z"))?;
                }
            }
            Axis::X => {
                // exchange within the pair: H_L = (J/2) X_L − J/4
                let j = device.exchange;
                if !(j > T::zero()) {
                    return Err(Error::Model("two-dot x rotation needs positive exchange".into()));
                }
                let t = wrap_angle(angle) / j;
                if t > T::zero() {
                    let m = CouplingModel::new(n).with_edge(Edge::constant(block[0], block[1], j))?;
                    recipe.evolve(m, t, format!("lq{lq} exchange x"))?;
                }
            }
            Axis::N => return Err(Error::Model("two-dot code has no cross-axis rotation".into())),
        },
        EncodingKind::Supercoherent if !(device.sq_delta_j > T::zero()) => {
            return Err(Error::Model("SQ rotations need a positive coupling change".into()))
        }
        EncodingKind::Supercoherent => match axis {
            // coupling raises give R(−ΔJ t)
            Axis::Z => {
                let t = wrap_angle(-angle) / device.sq_delta_j;
                if t > T::zero() {
                    recipe.append(&sq_rotation(register, lq, (1, 2), device.sq_delta_j, t, device.j_sq)?)?;
                }
            }
            Axis::N => {
                let t = wrap_angle(-angle) / device.sq_delta_j;
                if t > T::zero() {
                    recipe.append(&sq_rotation(register, lq, (2, 3), device.sq_delta_j, t, device.j_sq)?)?;
                }
            }
            Axis::X => {
                let (c, b) = sq_x_frame::<T>();
                push_axis(recipe, register, lq, Axis::Z, -c, device)?;
                push_axis(recipe, register, lq, Axis::N, -b, device)?;
                push_axis(recipe, register, lq, Axis::Z, angle, device)?;
                push_axis(recipe, register, lq, Axis::N, b, device)?;
                push_axis(recipe, register, lq, Axis::Z, c, device)?;
            }
        },
    }
    Ok(())
}

/// Appends a logical `R_z(θ)` on `lq`.
pub fn logical_z_steps<T: Real>(
    recipe: &mut GateRecipe<T>,
    register: &LogicalRegister,
    lq: usize,
    theta: T,
    device: &Device<T>,
) -> Result<()> {
    push_axis(recipe, register, lq, Axis::Z, theta, device)
}

/// Appends steps realizing the 2×2 unitary `u` (up to global phase) on `lq`.
pub fn logical_unitary_steps<T: Real>(
    recipe: &mut GateRecipe<T>,
    register: &LogicalRegister,
    lq: usize,
    u: &CMat<T>,
    device: &Device<T>,
) -> Result<()> {
    if lq >= register.lq_count() {
        return Err(Error::Register(format!("no logical qubit {lq}")));
    }
    if u.dim() != 2 || u.unitarity_deviation() > T::lit(1e-9) {
        return Err(Error::NotUnitaryOrHermitian { kind: "unitary", deviation: u.unitarity_deviation().to_f64_lossy() });
    }
    if register.encoding == EncodingKind::Bare {
        recipe.apply(LocalOperator::unitary(register.sites(lq).to_vec(), u.clone())?, format!("lq{lq} unitary"))?;
        return Ok(());
    }
    let (a, b, c) = euler_zxz(u);
    push_axis(recipe, register, lq, Axis::Z, c, device)?;
    push_axis(recipe, register, lq, Axis::X, b, device)?;
    push_axis(recipe, register, lq, Axis::Z, a, device)
}

/// Intra-SQ coupling change: spins `pair` (labelled 1–4 within the block)
/// go from `j_sq` to `j_sq + ΔJ` for `duration`, all other SQ couplings
/// staying at `j_sq`. Every SQ of the register keeps its background.
pub fn sq_rotation<T: Real>(
    register: &LogicalRegister,
    lq: usize,
    pair: (usize, usize),
    delta_j: T,
    duration: T,
    j_sq: T,
) -> Result<GateRecipe<T>> {
    if register.encoding != EncodingKind::Supercoherent {
        return Err(Error::Register("sq_rotation needs a supercoherent register".into()));
    }
    if lq >= register.lq_count() {
        return Err(Error::Register(format!("no logical qubit {lq}")));
    }
    let (p, q) = pair;
    if p == q || !(1..=4).contains(&p) || !(1..=4).contains(&q) {
        return Err(Error::Support(format!("spin pair {pair:?} is not within 1..=4")));
    }
    if delta_j <= -j_sq {
        return Err(Error::GapClosure(format!("ΔJ = {delta_j} closes the gap of J = {j_sq}")));
    }
    let block = register.sites(lq);
    let mut m = sq_background(register, j_sq)?;
    m.edge_mut(block[p - 1], block[q - 1]).expect("block edge").coupling = j_sq + delta_j;
    let mut r = GateRecipe::new(register.n_sites());
    r.evolve(m, duration, format!("lq{lq} sq ({p},{q})"))?;
    Ok(r)
}

/// `R_x(θ) = exp(−i θ/2 X)`
pub fn rx<T: Real>(theta: T) -> CMat<T> {
    su2_rotation([T::one(), T::zero(), T::zero()], theta)
}
