use serde::{Deserialize, Serialize};

use super::calibrate::{calibrate, linspace, Calibration};
use super::invariants::{z_class_infidelity, ZPhases};
use super::logical::{logical_z_steps, sq_background};
use super::{extract_logical_unitary, Device, EffectiveUnitary, GateRecipe};
use crate::encodings::{EncodingKind, LogicalRegister};
use crate::error::{Error, Result};
use crate::model::{CouplingModel, Edge, EdgeSchedule, RampProfile};
use crate::scalar::Real;
use crate::statevec::{LocalOperator, PauliAxis};

/// `U₁ · Z_{pair.1} · U₁` with `U₁ = exp(−iπ/8 σ·σ)` on two bare sites. The
/// product is `Z_{pair.1} · exp(−iπ/4 Z⊗Z)`.
pub fn ising_from_heisenberg<T: Real>(n_sites: usize, pair: (usize, usize)) -> Result<GateRecipe<T>> {
    let (i, j) = pair;
    // J = 1 for t = π/2 gives exp(−i (π/8) σ·σ)
    let u1 = CouplingModel::new(n_sites).with_edge(Edge::constant(i, j, T::one()))?;
    let t = T::FRAC_PI_2();
    let mut r = GateRecipe::new(n_sites);
    r.evolve(u1.clone(), t, "U1")?;
    r.apply(LocalOperator::pauli(j, PauliAxis::Z)?, "pi_z")?;
    r.evolve(u1, t, "U1")?;
    Ok(r)
}

/// Two two-dot LQs on sites `[A₁, B₁, A₂, B₂] = [0, 1, 2, 3]`.
pub fn two_dot_pair_register() -> LogicalRegister {
    LogicalRegister::contiguous(EncodingKind::TwoDot, 2).expect("static register")
}

/// `V(φ) · [logical π_z on LQ 1] · V(φ)` with `V(φ) = exp(−i φ/4 σ^{B₁}·σ^{A₂})`.
/// Without refocusing the middle pulse is dropped and the two halves merge.
pub fn two_dot_ising_recipe<T: Real>(device: &Device<T>, phi: T, refocused: bool) -> Result<GateRecipe<T>> {
    let reg = two_dot_pair_register();
    let j = device.exchange;
    let inter = CouplingModel::new(4).with_edge(Edge::constant(1, 2, j))?;
    let mut r = GateRecipe::new(4).with_tolerance(device.tolerance);
    if refocused {
        r.evolve(inter.clone(), phi / j, "inter-LQ exchange")?;
        logical_z_steps(&mut r, &reg, 1, T::PI(), device)?;
        r.evolve(inter, phi / j, "inter-LQ exchange")?;
    } else {
        r.evolve(inter, T::lit(2.0) * phi / j, "inter-LQ exchange")?;
    }
    Ok(r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TwoDotIsing<T> {
    pub recipe: GateRecipe<T>,
    pub effective: EffectiveUnitary<T>,
    pub phi: T,
    pub calibration: Calibration,
}

/// Calibrates the refocused two-dot inter-LQ gate to the CZ class over
/// `grid` (values of φ).
pub fn two_dot_ising<T: Real>(device: &Device<T>, grid: &[f64]) -> Result<TwoDotIsing<T>> {
    let reg = two_dot_pair_register();
    let family = |phi: f64| -> Result<(f64, f64)> {
        let r = two_dot_ising_recipe(device, T::lit(phi), true)?;
        let e = extract_logical_unitary(&r, &reg)?;
        Ok((z_class_infidelity(&e.logical_matrix).to_f64_lossy(), e.leakage.to_f64_lossy()))
    };
    let calibration = calibrate(family, grid)?;
    let phi = T::lit(calibration.params[0]);
    let recipe = two_dot_ising_recipe(device, phi, true)?;
    let effective = extract_logical_unitary(&recipe, &reg)?;
    Ok(TwoDotIsing { recipe, effective, phi, calibration })
}

/// Default φ grid for [`two_dot_ising`].
pub fn two_dot_grid() -> Vec<f64> {
    linspace(0.05, std::f64::consts::PI, 32)
}

/// Raises the coupling of `pair` by `ΔJ` above `background` for `π/ΔJ`,
/// which swaps the two spins up to a global phase when the background
/// commutes with the exchange.
pub fn swap_pair<T: Real>(background: &CouplingModel<T>, pair: (usize, usize), delta_j: T) -> Result<GateRecipe<T>> {
    if !(delta_j > T::zero()) {
        return Err(Error::Model(format!("SWAP needs ΔJ > 0, got {delta_j}")));
    }
    let mut m = background.clone();
    match m.edge_mut(pair.0, pair.1) {
        Some(e) => e.coupling += delta_j,
        None => m.add_edge(Edge::constant(pair.0, pair.1, delta_j))?,
    }
    let mut r = GateRecipe::new(m.n_sites);
    r.evolve(m, T::PI() / delta_j, format!("swap {pair:?}"))?;
    Ok(r)
}

/// Two SQs on sites `0..4` and `4..8`.
pub fn sq_pair_register() -> LogicalRegister {
    LogicalRegister::contiguous(EncodingKind::Supercoherent, 2).expect("static register")
}

/// Adiabatic coupling between two SQs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InterSqCoupling<T> {
    /// Spin pairs `(spin on SQ 0, spin on SQ 1)`, labelled 1–4.
    pub edges: Vec<(usize, usize)>,
    pub ramp: RampProfile<T>,
    pub hold: T,
    pub leakage_limit: T,
}

impl<T: Real> InterSqCoupling<T> {
    /// Edges `1↔1′, 2↔2′` at the device peak and ramp.
    pub fn standard(device: &Device<T>, hold: T) -> Result<Self> {
        Ok(Self { edges: vec![(1, 1), (2, 2)], ramp: device.ramp(device.inter_peak())?, hold, leakage_limit: T::lit(1e-6) })
    }

    pub fn duration(&self) -> T {
        T::lit(2.0) * self.ramp.duration + self.hold
    }

    /// Pulsed edges between LQs `a` and `b` of `register`, added to `model`.
    pub fn add_to(&self, model: &mut CouplingModel<T>, register: &LogicalRegister, a: usize, b: usize) -> Result<()> {
        for &(p, q) in &self.edges {
            if !(1..=4).contains(&p) || !(1..=4).contains(&q) {
                return Err(Error::Support(format!("inter-SQ edge ({p}, {q}) outside 1..=4")));
            }
            let (i, j) = (register.sites(a)[p - 1], register.sites(b)[q - 1]);
            model.add_edge(Edge { i, j, coupling: T::zero(), schedule: EdgeSchedule::pulse(self.ramp, self.hold) })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InterSqGate<T> {
    pub recipe: GateRecipe<T>,
    pub effective: EffectiveUnitary<T>,
    pub phases: ZPhases<T>,
}

pub(crate) fn inter_sq_unchecked<T: Real>(device: &Device<T>, c: &InterSqCoupling<T>) -> Result<InterSqGate<T>> {
    let reg = sq_pair_register();
    let mut m = sq_background(&reg, device.j_sq)?;
    c.add_to(&mut m, &reg, 0, 1)?;
    let mut recipe = GateRecipe::new(8).with_tolerance(device.tolerance);
    recipe.evolve(m, c.duration(), "inter-SQ adiabatic")?;
    let effective = extract_logical_unitary(&recipe, &reg)?;
    let phases = ZPhases::from_diagonal(&effective.logical_matrix);
    Ok(InterSqGate { recipe, effective, phases })
}

/// Ramped coupling between two SQs with the equal-coupling background on.
/// Fails with an adiabaticity error when leakage exceeds the limit.
pub fn adiabatic_inter_sq<T: Real>(device: &Device<T>, c: &InterSqCoupling<T>) -> Result<InterSqGate<T>> {
    let g = inter_sq_unchecked(device, c)?;
    if g.effective.leakage > c.leakage_limit {
        return Err(Error::Adiabaticity {
            leakage: g.effective.leakage.to_f64_lossy(),
            ramp: format!("{:?} over {} to peak {}", c.ramp.shape, c.ramp.duration, c.ramp.peak),
        });
    }
    Ok(g)
}

/// Controlled-phase angle `arg(d₀d₃ / d₁d₂) − π` of a diagonal gate,
/// wrapped to `(−π, π]`; zero exactly for the CZ class.
fn cz_offset<T: Real>(u: &crate::linalg::CMat<T>) -> f64 {
    let z = -(u[(0, 0)] * u[(3, 3)] * u[(1, 1)].conj() * u[(2, 2)].conj());
    z.arg().to_f64_lossy()
}

/// Finds the hold time that brings the ZZ phase of the inter-SQ gate to
/// `±π/4`, so the gate is CZ-class. The phase grows linearly during the
/// hold, so a rate estimate from two probes followed by secant steps on
/// the controlled-phase angle converges in a few evaluations.
pub fn calibrate_sq_hold<T: Real>(
    device: &Device<T>,
    template: &InterSqCoupling<T>,
) -> Result<(InterSqGate<T>, Calibration)> {
    let at = |hold: f64| {
        let mut c = template.clone();
        c.hold = T::lit(hold);
        inter_sq_unchecked(device, &c)
    };
    let mut trace = Vec::new();
    // α stays far from the π/4 wrap over the probes
    let a0 = at(0.0)?.phases.alpha.to_f64_lossy();
    let probe = template.ramp.duration.to_f64_lossy();
    let a1 = at(probe)?.phases.alpha.to_f64_lossy();
    trace.push((0.0, a0));
    trace.push((probe, a1));
    let rate = (a1 - a0) / probe;
    if !(rate.abs() > 1e-12) {
        return Err(Error::Calibration { message: "inter-SQ coupling produces no ZZ phase".into(), trace });
    }
    let target = std::f64::consts::FRAC_PI_4 * rate.signum();
    let mut hold = (target - a0) / rate;
    if hold < 0.0 {
        return Err(Error::Calibration { message: format!("ramps alone overshoot (α₀ = {a0})"), trace });
    }
    // the offset is −4α shifted by π
    let mut slope = -4.0 * rate;
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..8 {
        let g = at(hold)?;
        let off = cz_offset(&g.effective.logical_matrix);
        trace.push((hold, off));
        if off.abs() < 1e-10 {
            let infidelity = z_class_infidelity(&g.effective.logical_matrix).to_f64_lossy();
            let leakage = g.effective.leakage.to_f64_lossy();
            let cal = Calibration { params: vec![hold], infidelity, leakage, trace };
            if g.effective.leakage > template.leakage_limit {
                return Err(Error::Adiabaticity {
                    leakage,
                    ramp: format!("{:?} over {} to peak {}", template.ramp.shape, template.ramp.duration, template.ramp.peak),
                });
            }
            return Ok((g, cal));
        }
        if let Some((h0, o0)) = prev {
            if (hold - h0).abs() > 0.0 && (off - o0).abs() > 0.0 {
                slope = (off - o0) / (hold - h0);
            }
        }
        prev = Some((hold, off));
        hold = (hold - off / slope).max(0.0);
    }
    Err(Error::Calibration { message: "hold calibration did not converge".into(), trace })
}
