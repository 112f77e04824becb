use std::collections::HashMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Lattice, Schedule, ScheduleStep};
use crate::encodings::{EncodingKind, LogicalRegister};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model::{CouplingModel, Edge, EdgeSchedule, Species, Zeeman, ZeemanSite};
use crate::scalar::{Cx, Real};
use crate::statevec::{LocalOperator, PauliAxis, QuantumState};
use crate::synthesis::{
    calibrate_sq_hold, extract_logical_unitary, logical_z_steps, sq_background, two_dot_grid, two_dot_ising,
    z_class_infidelity, Device, GateRecipe, InterSqCoupling,
};

/// Device constants plus optional pre-calibrated gate parameters; missing
/// ones are calibrated on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct BuildConfig<T> {
    #[serde(default)]
    pub device: Device<T>,
    #[serde(default)]
    pub two_dot_phi: Option<T>,
    #[serde(default)]
    pub sq_hold: Option<T>,
    /// Drop the two-dot `π_z` pulses and merge the exchange halves.
    #[serde(default)]
    pub unrefocused: bool,
}

impl<T: Real> Default for BuildConfig<T> {
    fn default() -> Self {
        Self { device: Device::default(), two_dot_phi: None, sq_hold: None, unrefocused: false }
    }
}

/// Logical action of one scheduled edge, simulated on its own two LQs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeGateReport {
    pub step: usize,
    pub lqs: (usize, usize),
    /// `α` of `exp(−iα Z⊗Z)`, in `(−π/4, π/4]`.
    pub zz_phase: f64,
    pub offdiag_residual: f64,
    pub leakage: f64,
    /// Distance to CZ after local z phases are stripped.
    pub z_class_infidelity: f64,
}

#[derive(Debug, Clone)]
pub struct ClusterBuild<T> {
    pub state: QuantumState<T>,
    pub recipe: GateRecipe<T>,
    /// Final logical `R_z` angle per LQ.
    pub corrections: Vec<T>,
    pub edge_gates: Vec<EdgeGateReport>,
    pub leakage: T,
    pub two_dot_phi: Option<T>,
    pub sq_hold: Option<T>,
}

/// Physical content of one step on some register.
#[derive(Debug, Clone, PartialEq)]
struct StepView {
    couplings: Vec<(usize, usize)>,
    swaps: Vec<(usize, usize)>,
    pulses: Vec<usize>,
}

struct Resolved<T> {
    device: Device<T>,
    refocus: bool,
    phi: Option<T>,
    sq: Option<InterSqCoupling<T>>,
}

impl<T: Real> Resolved<T> {
    fn new(kind: EncodingKind, config: &BuildConfig<T>) -> Result<Self> {
        let device = config.device;
        let mut r = Self { device, refocus: !config.unrefocused, phi: None, sq: None };
        match kind {
            EncodingKind::Bare => {}
            EncodingKind::TwoDot => {
                r.phi = Some(match config.two_dot_phi {
                    Some(p) => p,
                    None => two_dot_ising(&device, &two_dot_grid())?.phi,
                });
            }
            EncodingKind::Supercoherent => {
                if !(device.sq_delta_j > T::zero()) {
                    return Err(Error::Model("SQ lattices need a positive coupling change".into()));
                }
                let mut c = InterSqCoupling::standard(&device, T::zero())?;
                c.hold = match config.sq_hold {
                    Some(h) => h,
                    None => T::lit(calibrate_sq_hold(&device, &c)?.1.params[0]),
                };
                r.sq = Some(c);
            }
        }
        Ok(r)
    }
}

fn full_view(lattice: &Lattice, step: &ScheduleStep) -> StepView {
    let reg = &lattice.register;
    let couplings: Vec<(usize, usize)> = step.couplings.iter().flat_map(|c| c.sites.iter().copied()).collect();
    let pulses = match reg.encoding {
        EncodingKind::Bare => match step.pulse {
            Some(sp) => (0..lattice.lq_count()).filter(|&q| lattice.species(q) == sp).collect(),
            None => vec![],
        },
        // the A dot of every active coupling; each coupling joins A to B
        EncodingKind::TwoDot => {
            let a_dots: Vec<usize> = (0..lattice.lq_count()).map(|q| reg.sites(q)[0]).collect();
            couplings.iter().flat_map(|&(i, j)| [i, j]).filter(|s| a_dots.contains(s)).collect()
        }
        EncodingKind::Supercoherent => vec![],
    };
    StepView { couplings, swaps: step.swaps.clone(), pulses }
}

/// Restriction of `full` to the LQs `(a, b)`, relabelled onto a contiguous
/// two-LQ register.
fn edge_view(lattice: &Lattice, full: &StepView, lqs: (usize, usize), sites: &[(usize, usize)]) -> StepView {
    let reg = &lattice.register;
    let k = reg.encoding.sites_per_lq();
    let map = |s: usize| -> Option<usize> {
        if let Some(p) = reg.sites(lqs.0).iter().position(|&x| x == s) {
            return Some(p);
        }
        reg.sites(lqs.1).iter().position(|&x| x == s).map(|p| k + p)
    };
    let touched: Vec<usize> = sites.iter().flat_map(|&(i, j)| [i, j]).collect();
    StepView {
        couplings: sites.iter().map(|&(i, j)| (map(i).unwrap(), map(j).unwrap())).collect(),
        swaps: full.swaps.iter().filter_map(|&(i, j)| Some((map(i)?, map(j)?))).collect(),
        pulses: full.pulses.iter().filter(|s| touched.contains(s)).map(|&s| map(s).unwrap()).collect(),
    }
}

fn zeeman_pulse<T: Real>(n: usize, a_sites: &[usize], device: &Device<T>) -> Result<(CouplingModel<T>, T)> {
    let rate = device.b_z * device.delta_g;
    if rate == T::zero() {
        return Err(Error::Model("two-dot refocusing needs B_z·Δg ≠ 0".into()));
    }
    let sites = (0..n)
        .map(|s| {
            if a_sites.contains(&s) {
                ZeemanSite { g: device.delta_g, species: Species::A }
            } else {
                ZeemanSite { g: T::zero(), species: Species::B }
            }
        })
        .collect();
    let m = CouplingModel::new(n).with_zeeman(Zeeman { b_z: device.b_z, sites })?;
    // R_z(π) on each listed A dot
    Ok((m, T::PI() / rate.abs()))
}

fn exchange_model<T: Real>(n: usize, pairs: &[(usize, usize)], j: T) -> Result<CouplingModel<T>> {
    let mut m = CouplingModel::new(n);
    for &(a, b) in pairs {
        m.add_edge(Edge::constant(a, b, j))?;
    }
    Ok(m)
}

fn push_swaps<T: Real>(r: &mut GateRecipe<T>, reg: &LogicalRegister, swaps: &[(usize, usize)], res: &Resolved<T>) -> Result<()> {
    let dj = res.device.sq_delta_j;
    let mut m = sq_background(reg, res.device.j_sq)?;
    for &(i, j) in swaps {
        match m.edge_mut(i, j) {
            Some(e) => e.coupling += dj,
            None => m.add_edge(Edge::constant(i, j, dj))?,
        }
    }
    r.evolve(m, T::PI() / dj, "diagonal SWAP")?;
    Ok(())
}

fn push_step<T: Real>(r: &mut GateRecipe<T>, reg: &LogicalRegister, v: &StepView, res: &Resolved<T>, label: &str) -> Result<()> {
    let n = reg.n_sites();
    let d = &res.device;
    match reg.encoding {
        EncodingKind::Bare => {
            let j = d.exchange;
            let u1 = exchange_model(n, &v.couplings, j)?;
            // exp(−iπ/8 σ·σ) on each coupled pair
            let t = T::FRAC_PI_2() / j;
            r.evolve(u1.clone(), t, format!("{label}: U1"))?;
            for &s in &v.pulses {
                r.apply(LocalOperator::pauli(s, PauliAxis::Z)?, format!("{label}: pi_z"))?;
            }
            r.evolve(u1, t, format!("{label}: U1"))?;
        }
        EncodingKind::TwoDot => {
            let j = d.exchange;
            let phi = res.phi.expect("resolved two-dot angle");
            let v_phi = exchange_model(n, &v.couplings, j)?;
            if !res.refocus {
                r.evolve(v_phi, T::lit(2.0) * phi / j, format!("{label}: exchange"))?;
                return Ok(());
            }
            r.evolve(v_phi.clone(), phi / j, format!("{label}: exchange"))?;
            if !v.pulses.is_empty() {
                let (m, t) = zeeman_pulse(n, &v.pulses, d)?;
                r.evolve(m, t, format!("{label}: logical pi_z"))?;
            }
            r.evolve(v_phi, phi / j, format!("{label}: exchange"))?;
        }
        EncodingKind::Supercoherent => {
            let c = res.sq.as_ref().expect("resolved inter-SQ coupling");
            if !v.swaps.is_empty() {
                push_swaps(r, reg, &v.swaps, res)?;
            }
            let mut m = sq_background(reg, d.j_sq)?;
            for &(i, j) in &v.couplings {
                m.add_edge(Edge { i, j, coupling: T::zero(), schedule: EdgeSchedule::pulse(c.ramp, c.hold) })?;
            }
            r.evolve(m, c.duration(), format!("{label}: inter-SQ"))?;
            if !v.swaps.is_empty() {
                push_swaps(r, reg, &v.swaps, res)?;
            }
        }
    }
    Ok(())
}

/// Takes every LQ of `reg` from `|0_L⟩` to an equator state `|0⟩ + e^{iχ}|1⟩`.
fn push_init<T: Real>(r: &mut GateRecipe<T>, reg: &LogicalRegister, res: &Resolved<T>) -> Result<()> {
    let n = reg.n_sites();
    let d = &res.device;
    match reg.encoding {
        EncodingKind::Bare => {
            // global field about ŷ
            for s in 0..n {
                r.apply(LocalOperator::rotation(s, [T::zero(), T::one(), T::zero()], T::FRAC_PI_2())?, "init R_y")?;
            }
        }
        EncodingKind::TwoDot => {
            let pairs: Vec<(usize, usize)> = reg.site_map.iter().map(|b| (b[0], b[1])).collect();
            r.evolve(exchange_model(n, &pairs, d.exchange)?, T::FRAC_PI_2() / d.exchange, "init intra-LQ exchange")?;
        }
        EncodingKind::Supercoherent => {
            // a (2,3) rotation by arccos(−1/3) reaches the equator from |0_L⟩
            let mut m = sq_background(reg, d.j_sq)?;
            for b in &reg.site_map {
                m.edge_mut(b[1], b[2]).expect("block edge").coupling += d.sq_delta_j;
            }
            let b = (-T::one() / T::lit(3.0)).acos();
            r.evolve(m, b / d.sq_delta_j, "init (2,3) coupling")?;
        }
    }
    Ok(())
}

/// Builds the cluster state after checking the schedule.
pub fn build_cluster<T: Real>(lattice: &Lattice, schedule: &Schedule, config: &BuildConfig<T>) -> Result<ClusterBuild<T>> {
    schedule.check(lattice)?;
    build_cluster_unchecked(lattice, schedule, config)
}

/// Builds without the legality check; used for the simultaneous control.
///
/// Each step's logical action is the product of its edge gates and of the
/// stray `π_z` pulses on uncoupled dots. Edge gates are extracted on their
/// own two-LQ registers, and the local z phases separating each from CZ are
/// summed per LQ and applied once at the end.
pub fn build_cluster_unchecked<T: Real>(
    lattice: &Lattice,
    schedule: &Schedule,
    config: &BuildConfig<T>,
) -> Result<ClusterBuild<T>> {
    let reg = &lattice.register;
    let enc = reg.encoding;
    let res = Resolved::new(enc, config)?;
    let d = &res.device;
    let l = lattice.lq_count();
    let mut theta = vec![0.0f64; l];

    let mut recipe = GateRecipe::new(reg.n_sites()).with_tolerance(d.tolerance);
    push_init(&mut recipe, reg, &res)?;
    {
        let one = LogicalRegister::contiguous(enc, 1)?;
        let mut r = GateRecipe::new(one.n_sites()).with_tolerance(d.tolerance);
        push_init(&mut r, &one, &res)?;
        let w = extract_logical_unitary(&r, &one)?.logical_matrix;
        let (w0, w1) = (w[(0, 0)].to_f64(), w[(1, 0)].to_f64());
        if (w0.norm() - w1.norm()).abs() > 1e-6 {
            return Err(Error::Model(format!("initialization misses the equator: |w0| = {}", w0.norm())));
        }
        let chi = w1.arg() - w0.arg();
        for t in &mut theta {
            *t -= chi;
        }
    }

    let pair = LogicalRegister::contiguous(enc, 2)?;
    // extracted edge gate, or the leakage that prevented extraction
    let mut memo: HashMap<String, std::result::Result<(CMat<T>, T), f64>> = HashMap::new();
    let mut edge_gates = vec![];
    for (k, step) in schedule.steps.iter().enumerate() {
        let full = full_view(lattice, step);
        push_step(&mut recipe, reg, &full, &res, &format!("step {k} ({})", step.label))?;
        let mut touched = vec![];
        for c in &step.couplings {
            touched.extend(c.sites.iter().flat_map(|&(i, j)| [i, j]));
            let v = edge_view(lattice, &full, c.lqs, &c.sites);
            let key = format!("{v:?}");
            if !memo.contains_key(&key) {
                let mut r = GateRecipe::new(pair.n_sites()).with_tolerance(d.tolerance);
                push_step(&mut r, &pair, &v, &res, "edge")?;
                let e = match extract_logical_unitary(&r, &pair) {
                    Ok(e) => Ok((e.logical_matrix, e.leakage)),
                    Err(Error::Leakage { leakage, .. }) => Err(leakage),
                    Err(e) => return Err(e),
                };
                memo.insert(key.clone(), e);
            }
            let (u, leak) = match &memo[&key] {
                Ok(x) => x,
                // a gate that leaves the code space gets no z correction
                Err(leakage) => {
                    edge_gates.push(EdgeGateReport {
                        step: k,
                        lqs: c.lqs,
                        zz_phase: f64::NAN,
                        offdiag_residual: f64::NAN,
                        leakage: *leakage,
                        z_class_infidelity: f64::NAN,
                    });
                    continue;
                }
            };
            let dg: Vec<Complex<f64>> = (0..4).map(|x| u[(x, x)].to_f64()).collect();
            // D = CZ·U† as local z phases
            let cz = [1.0, 1.0, 1.0, -1.0];
            let dd: Vec<Complex<f64>> = dg.iter().zip(cz).map(|(z, s)| z.conj() * s).collect();
            theta[c.lqs.0] += (dd[1] * dd[0].conj()).arg();
            theta[c.lqs.1] += (dd[2] * dd[0].conj()).arg();
            let alpha = -(dg[0] * dg[3] * dg[1].conj() * dg[2].conj()).arg() / 4.0;
            let mut off = 0.0f64;
            for r in 0..4 {
                for s in 0..4 {
                    if r != s {
                        off = off.max(u[(r, s)].norm().to_f64_lossy());
                    }
                }
            }
            edge_gates.push(EdgeGateReport {
                step: k,
                lqs: c.lqs,
                zz_phase: alpha,
                offdiag_residual: off,
                leakage: leak.to_f64_lossy(),
                z_class_infidelity: z_class_infidelity(u).to_f64_lossy(),
            });
        }
        // π_z on dots outside every coupling is a bare logical Z
        for &s in &full.pulses {
            if !touched.contains(&s) {
                let q = reg.lqs_touching(&[s])?[0];
                theta[q] += std::f64::consts::PI;
            }
        }
    }

    let mut corrections = Vec::with_capacity(l);
    for (q, t) in theta.iter().enumerate() {
        let w = t.rem_euclid(std::f64::consts::TAU);
        let w = if w < 1e-12 || std::f64::consts::TAU - w < 1e-12 { 0.0 } else { w };
        corrections.push(T::lit(w));
        logical_z_steps(&mut recipe, reg, q, T::lit(w), d)?;
    }

    let state = recipe.run(&reg.encode_bits(&vec![0u8; l])?)?;
    let leakage = reg.leakage(&state)?;
    Ok(ClusterBuild { state, recipe, corrections, edge_gates, leakage, two_dot_phi: res.phi, sq_hold: res.sq.map(|c| c.hold) })
}

trait ToF64 {
    fn to_f64(self) -> Complex<f64>;
}

impl<T: Real> ToF64 for Cx<T> {
    fn to_f64(self) -> Complex<f64> {
        Complex::new(self.re.to_f64_lossy(), self.im.to_f64_lossy())
    }
}

/// Singlet-pair expectation recorded around a SWAP-conjugated step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck {
    pub step: usize,
    pub stage: String,
    pub lq: usize,
    /// Spin labels 1–4.
    pub pair: (usize, usize),
    pub singlet: f64,
    pub pass: bool,
}

/// Tracks the singlet pairs of `|0_L…0_L⟩` through the SWAPs of every
/// SWAP-conjugated step: horizontal `(1,2), (3,4)` before, vertical
/// `(1,3), (2,4)` after the first SWAP, horizontal again after the second.
pub fn pairing_orientation_checks<T: Real>(
    lattice: &Lattice,
    schedule: &Schedule,
    device: &Device<T>,
) -> Result<Vec<PairingCheck>> {
    let reg = &lattice.register;
    if reg.encoding != EncodingKind::Supercoherent {
        return Err(Error::Register("pairing checks need an SQ lattice".into()));
    }
    if !(device.sq_delta_j > T::zero()) {
        return Err(Error::Model("SWAPs need a positive coupling change".into()));
    }
    let res = Resolved { device: *device, refocus: true, phi: None, sq: None };
    let horizontal = [(1, 2), (3, 4)];
    let vertical = [(1, 3), (2, 4)];
    let mut out = vec![];
    for (k, step) in schedule.steps.iter().enumerate().filter(|(_, s)| !s.swaps.is_empty()) {
        let mut swap = GateRecipe::new(reg.n_sites()).with_tolerance(device.tolerance);
        push_swaps(&mut swap, reg, &step.swaps, &res)?;
        let mut state = reg.encode_bits::<T>(&vec![0u8; lattice.lq_count()])?;
        for (stage, pairs) in [("before", horizontal), ("swapped", vertical), ("restored", horizontal)] {
            if stage != "before" {
                state = swap.run(&state)?;
            }
            for q in 0..lattice.lq_count() {
                let s = reg.sites(q);
                for (p, r) in pairs {
                    let singlet = state.expectation(&LocalOperator::singlet_projector(s[p - 1], s[r - 1])?)?.to_f64_lossy();
                    out.push(PairingCheck { step: k, stage: stage.into(), lq: q, pair: (p, r), singlet, pass: singlet > 1.0 - 1e-9 });
                }
            }
        }
    }
    Ok(out)
}
