//! One-way computation on cluster states: measurement patterns with adaptive
//! signs, Pauli-frame bookkeeping and logical readout.
//!
//! Conventions. Measuring an LQ in `xy(φ)` projects onto
//! `(|0⟩ ± e^{iφ}|1⟩)/√2`, outcome 0 being `+`. A frame entry `(x, z)` on an
//! output means the simulated state is `X^x Z^z` times the ideal one.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encodings::{EncodingKind, LogicalRegister};
use crate::error::{Error, Result};
use crate::linalg::{pauli, su2_rotation, CMat};
use crate::scalar::{Cx, Real};
use crate::statevec::{Basis, MeasurementRecord, PauliAxis, QuantumState};
use crate::synthesis::{logical_unitary_steps, rx, rz, Device, GateRecipe};

/// Code-space leakage above which a logical measurement is refused.
pub const READOUT_LEAKAGE_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "kebab-case")]
pub enum ReadoutAxis {
    Z,
    Xy { phi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatternBasis {
    ZRemoval,
    /// Measured at `(−1)^{Σ s_k} φ`, summing the outcomes of the earlier
    /// measurements listed in `sign_from`.
    Xy {
        phi: f64,
        #[serde(default)]
        sign_from: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternMeasurement {
    pub lq: usize,
    pub basis: PatternBasis,
}

/// Byproduct `X^{Σ x_from} Z^{Σ z_from}` left on an output LQ, the sums
/// running over outcomes of the listed measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRule {
    pub lq: usize,
    #[serde(default)]
    pub x_from: Vec<usize>,
    #[serde(default)]
    pub z_from: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementPattern {
    /// Executed in this order.
    pub measurements: Vec<PatternMeasurement>,
    #[serde(default)]
    pub frame: Vec<FrameRule>,
    pub outputs: Vec<usize>,
}

impl MeasurementPattern {
    /// Sign dependencies must point backwards; LQs are measured at most once
    /// and outputs never.
    pub fn validate(&self, lq_count: usize) -> Result<()> {
        let err = |m: String| Err(Error::Pattern(m));
        let mut used = vec![false; lq_count];
        for (k, m) in self.measurements.iter().enumerate() {
            if m.lq >= lq_count {
                return err(format!("measurement {k} on LQ {} of {lq_count}", m.lq));
            }
            if std::mem::replace(&mut used[m.lq], true) {
                return err(format!("LQ {} measured twice", m.lq));
            }
            if let PatternBasis::Xy { phi, sign_from } = &m.basis {
                if !phi.is_finite() {
                    return err(format!("measurement {k} has angle {phi}"));
                }
                if let Some(&d) = sign_from.iter().find(|&&d| d >= k) {
                    return err(format!("measurement {k} depends on measurement {d}, which is not earlier"));
                }
            }
        }
        for &o in &self.outputs {
            if o >= lq_count || used[o] {
                return err(format!("output LQ {o} is measured or out of range"));
            }
        }
        let mut outs = self.outputs.clone();
        outs.sort_unstable();
        outs.dedup();
        if outs.len() != self.outputs.len() {
            return err("repeated output LQ".into());
        }
        let n = self.measurements.len();
        for r in &self.frame {
            if !self.outputs.contains(&r.lq) {
                return err(format!("frame rule on LQ {}, which is not an output", r.lq));
            }
            if let Some(&d) = r.x_from.iter().chain(&r.z_from).find(|&&d| d >= n) {
                return err(format!("frame rule refers to measurement {d} of {n}"));
            }
        }
        Ok(())
    }

    /// `Z` measurement of `lq`, whose outcome leaves `Z^s` on each neighbour.
    pub fn z_removal(lq: usize, neighbours: &[usize], outputs: Vec<usize>) -> Self {
        let frame = neighbours.iter().map(|&b| FrameRule { lq: b, x_from: vec![], z_from: vec![0] }).collect();
        Self { measurements: vec![PatternMeasurement { lq, basis: PatternBasis::ZRemoval }], frame, outputs }
    }
}

/// 5-LQ chain `0 – 1 – 2 – 3 – 4` with input on LQ 0 and output on LQ 4,
/// implementing [`rotation_chain_target`].
pub fn compile_rotation_chain(xi: f64, eta: f64, zeta: f64) -> MeasurementPattern {
    let xy = |lq, phi, sign_from: Vec<usize>| PatternMeasurement { lq, basis: PatternBasis::Xy { phi, sign_from } };
    MeasurementPattern {
        measurements: vec![xy(0, 0.0, vec![]), xy(1, -xi, vec![0]), xy(2, -eta, vec![1]), xy(3, -zeta, vec![0, 2])],
        frame: vec![FrameRule { lq: 4, x_from: vec![1, 3], z_from: vec![0, 2] }],
        outputs: vec![4],
    }
}

/// `R_x(ζ)·R_z(η)·R_x(ξ)`
pub fn rotation_chain_target<T: Real>(xi: T, eta: T, zeta: T) -> CMat<T> {
    rx(zeta).matmul(&rz(eta)).matmul(&rx(xi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub lq: usize,
    pub x: u8,
    pub z: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PauliFrame {
    pub entries: Vec<FrameEntry>,
}

impl PauliFrame {
    pub fn get(&self, lq: usize) -> Option<FrameEntry> {
        self.entries.iter().copied().find(|e| e.lq == lq)
    }

    /// `Z^z X^x`, which maps the simulated output back to the ideal one.
    pub fn correction<T: Real>(&self, lq: usize) -> CMat<T> {
        let e = self.get(lq).unwrap_or(FrameEntry { lq, x: 0, z: 0 });
        let mut c = CMat::identity(2);
        if e.x == 1 {
            c = pauli(PauliAxis::X);
        }
        if e.z == 1 {
            c = pauli(PauliAxis::Z).matmul(&c);
        }
        c
    }
}

/// One row of the outcome log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub step: usize,
    pub lq: usize,
    /// `z` or `xy`.
    pub basis: String,
    /// Angle actually measured, after adaptive signs.
    pub angle: f64,
    pub outcome: u8,
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct PatternRun<T> {
    pub outcomes: Vec<OutcomeRecord>,
    pub frame: PauliFrame,
    pub state: QuantumState<T>,
}

impl<T: Real> PatternRun<T> {
    pub fn bits(&self) -> Vec<u8> {
        self.outcomes.iter().map(|o| o.outcome).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalRecord {
    pub lq: usize,
    pub axis: ReadoutAxis,
    /// 0 for the `+` side of the axis (`|0_L⟩` for `z`).
    pub outcome: u8,
    pub probability: f64,
    /// Physical measurement that produced the outcome.
    pub physical: MeasurementRecord,
}

/// How outcomes are chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Branch {
    Sampled(u64),
    Forced(Vec<u8>),
}

type Pick<'a, T> = dyn FnMut(&QuantumState<T>, &Basis) -> Result<(MeasurementRecord, QuantumState<T>)> + 'a;

fn rotation_recipe<T: Real>(
    register: &LogicalRegister,
    lq: usize,
    u: &CMat<T>,
    device: &Device<T>,
) -> Result<GateRecipe<T>> {
    let mut r = GateRecipe::new(register.n_sites()).with_tolerance(device.tolerance);
    logical_unitary_steps(&mut r, register, lq, u, device)?;
    Ok(r)
}

/// Physical measurement reading the logical `Z` of `lq`, outcome 0 ↔ `|0_L⟩`.
fn z_basis(register: &LogicalRegister, lq: usize) -> Basis {
    let s = register.sites(lq);
    match register.encoding {
        EncodingKind::Bare | EncodingKind::TwoDot => Basis::Z { site: s[0] },
        EncodingKind::Supercoherent => Basis::SingletTriplet { first: s[0], second: s[1] },
    }
}

fn readout<T: Real>(
    state: &QuantumState<T>,
    register: &LogicalRegister,
    lq: usize,
    axis: ReadoutAxis,
    device: &Device<T>,
    pick: &mut Pick<'_, T>,
) -> Result<(LogicalRecord, QuantumState<T>)> {
    if lq >= register.lq_count() {
        return Err(Error::Register(format!("no logical qubit {lq}")));
    }
    let leakage = register.leakage(state)?.to_f64_lossy();
    if leakage > READOUT_LEAKAGE_LIMIT {
        return Err(Error::Leakage { leakage, limit: READOUT_LEAKAGE_LIMIT });
    }
    let site = register.sites(lq)[0];
    let (physical, post) = match (axis, register.encoding) {
        (ReadoutAxis::Z, _) => pick(state, &z_basis(register, lq))?,
        (ReadoutAxis::Xy { phi }, EncodingKind::Bare) => pick(state, &Basis::Xy { site, phi })?,
        (ReadoutAxis::Xy { phi }, _) => {
            // a π/2 turn about the axis at φ − 90° takes +φ to ẑ
            let u = su2_rotation([T::lit(phi.sin()), T::lit(-phi.cos()), T::zero()], T::FRAC_PI_2());
            let rotated = rotation_recipe(register, lq, &u, device)?.run(state)?;
            let (rec, post) = pick(&rotated, &z_basis(register, lq))?;
            (rec, rotation_recipe(register, lq, &u.adjoint(), device)?.run(&post)?)
        }
    };
    let rec = LogicalRecord { lq, axis, outcome: physical.outcome, probability: physical.probability, physical };
    Ok((rec, post))
}

/// Measures `lq` along `axis`; `xy` axes on encoded LQs go through a logical
/// rotation, a `z` readout and the inverse rotation.
pub fn logical_readout<T: Real>(
    state: &QuantumState<T>,
    register: &LogicalRegister,
    lq: usize,
    axis: ReadoutAxis,
    seed: u64,
    device: &Device<T>,
) -> Result<(LogicalRecord, QuantumState<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    readout(state, register, lq, axis, device, &mut |s, b| s.measure(b, &mut rng))
}

pub fn run_pattern<T: Real>(
    state: &QuantumState<T>,
    pattern: &MeasurementPattern,
    register: &LogicalRegister,
    seed: u64,
    device: &Device<T>,
) -> Result<PatternRun<T>> {
    run_pattern_branch(state, pattern, register, &Branch::Sampled(seed), device)
}

pub fn run_pattern_branch<T: Real>(
    state: &QuantumState<T>,
    pattern: &MeasurementPattern,
    register: &LogicalRegister,
    branch: &Branch,
    device: &Device<T>,
) -> Result<PatternRun<T>> {
    pattern.validate(register.lq_count())?;
    if state.n_sites() != register.n_sites() {
        return Err(Error::Dimension(format!("{}-site state, {}-site register", state.n_sites(), register.n_sites())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(match branch {
        Branch::Sampled(seed) => *seed,
        Branch::Forced(_) => 0,
    });
    if let Branch::Forced(bits) = branch {
        if bits.len() != pattern.measurements.len() {
            return Err(Error::Pattern(format!(
                "{} forced outcomes for {} measurements",
                bits.len(),
                pattern.measurements.len()
            )));
        }
    }
    let mut cur = state.clone();
    let mut outcomes: Vec<OutcomeRecord> = Vec::with_capacity(pattern.measurements.len());
    for (k, m) in pattern.measurements.iter().enumerate() {
        let parity = |from: &[usize]| from.iter().map(|&d| outcomes[d].outcome).sum::<u8>() % 2;
        let (axis, name, angle) = match &m.basis {
            PatternBasis::ZRemoval => (ReadoutAxis::Z, "z", 0.0),
            PatternBasis::Xy { phi, sign_from } => {
                let a = if parity(sign_from) == 1 { -phi } else { *phi };
                (ReadoutAxis::Xy { phi: a }, "xy", a)
            }
        };
        let mut pick = |s: &QuantumState<T>, b: &Basis| match branch {
            Branch::Sampled(_) => s.measure(b, &mut rng),
            Branch::Forced(bits) => s.project(b, bits[k]),
        };
        let (rec, post) = readout(&cur, register, m.lq, axis, device, &mut pick)?;
        cur = post;
        outcomes.push(OutcomeRecord {
            step: k,
            lq: m.lq,
            basis: name.into(),
            angle,
            outcome: rec.outcome,
            probability: rec.probability,
        });
    }
    let parity = |from: &[usize]| from.iter().map(|&d| outcomes[d].outcome).sum::<u8>() % 2;
    let entries = pattern
        .outputs
        .iter()
        .map(|&lq| {
            let (mut x, mut z) = (0, 0);
            for r in pattern.frame.iter().filter(|r| r.lq == lq) {
                x ^= parity(&r.x_from);
                z ^= parity(&r.z_from);
            }
            FrameEntry { lq, x, z }
        })
        .collect();
    Ok(PatternRun { outcomes, frame: PauliFrame { entries }, state: cur })
}

/// Runs every outcome branch with nonzero probability, in binary order of the
/// outcome string (first measurement least significant).
pub fn enumerate_branches<T: Real>(
    state: &QuantumState<T>,
    pattern: &MeasurementPattern,
    register: &LogicalRegister,
    device: &Device<T>,
) -> Result<Vec<PatternRun<T>>> {
    let m = pattern.measurements.len();
    let mut runs = vec![];
    for x in 0..1usize << m {
        let bits = (0..m).map(|k| ((x >> k) & 1) as u8).collect();
        match run_pattern_branch(state, pattern, register, &Branch::Forced(bits), device) {
            Ok(r) => runs.push(r),
            Err(Error::ZeroProbability { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(runs)
}

/// Reduced logical density matrix of `lq`, frame-corrected and normalized
/// on the code space.
pub fn output_density<T: Real>(
    state: &QuantumState<T>,
    register: &LogicalRegister,
    lq: usize,
    frame: &PauliFrame,
) -> Result<CMat<T>> {
    if lq >= register.lq_count() {
        return Err(Error::Register(format!("no logical qubit {lq}")));
    }
    let psi = register.logical_overlaps(state)?;
    let mut rho = CMat::zeros(2);
    let bit = 1usize << lq;
    for x in (0..psi.len()).filter(|x| x & bit == 0) {
        let (a0, a1) = (psi[x], psi[x | bit]);
        rho[(0, 0)] += a0 * a0.conj();
        rho[(0, 1)] += a0 * a1.conj();
        rho[(1, 0)] += a1 * a0.conj();
        rho[(1, 1)] += a1 * a1.conj();
    }
    let tr = rho.trace().re;
    if tr < T::lit(1e-12) {
        return Err(Error::NoLogicalComponent { leakage: (T::one() - tr).to_f64_lossy() });
    }
    let c = frame.correction::<T>(lq);
    Ok(c.matmul(&rho).matmul(&c.adjoint()).scale(Complex::new(T::one() / tr, T::zero())))
}

/// `⟨t|ρ|t⟩`
pub fn density_fidelity<T: Real>(rho: &CMat<T>, target: &[Cx<T>]) -> T {
    let v = rho.apply(target);
    target.iter().zip(&v).fold(Cx::new(T::zero(), T::zero()), |a, (t, w)| a + t.conj() * w).re
}
