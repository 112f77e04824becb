//! Coherent coupling errors: perturbed models, drift extraction, two-pulse
//! refocusing, the inter-SQ imbalance sweep and the single-edge probe.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encodings::{EncodingKind, LogicalRegister};
use crate::error::{Error, Result};
use crate::linalg::{su2_axis_angle, su2_rotation, CMat};
use crate::model::{CouplingModel, Edge, EdgeSchedule, RampProfile};
use crate::scalar::{Cx, Real};
use crate::statevec::LocalOperator;
use crate::synthesis::{
    extract_logical_unitary, infidelity, sq_background, sq_pair_register, Device, EffectiveUnitary, GateRecipe,
    InterSqCoupling, ZPhases,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// Target couplings scaled by `1 + δ`.
    IntraMismatch,
    /// Constant coupling `ε · reference` added on each target pair.
    ResidualInter,
    /// Two targets scaled by `1 + Δ/2` and `1 − Δ/2`.
    InterSqImbalance,
    /// Every target but the first is removed.
    SingleEdgeOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSpec {
    pub kind: ErrorKind,
    /// Fraction of the nominal coupling.
    #[serde(default)]
    pub magnitude: f64,
    /// Site pairs.
    pub targets: Vec<(usize, usize)>,
    /// Nominal coupling that `ResidualInter` magnitudes refer to.
    #[serde(default = "unit")]
    pub reference: f64,
}

fn unit() -> f64 {
    1.0
}

impl ErrorSpec {
    pub fn new(kind: ErrorKind, magnitude: f64, targets: Vec<(usize, usize)>) -> Self {
        Self { kind, magnitude, targets, reference: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed<T> {
    pub model: CouplingModel<T>,
    pub warnings: Vec<String>,
}

fn scale_edge<T: Real>(e: &mut Edge<T>, f: T) {
    e.coupling *= f;
    if let EdgeSchedule::Pulse { ramp, .. } = &mut e.schedule {
        ramp.peak *= f;
    }
}

/// Largest value `J(t)` reaches.
fn strength<T: Real>(e: &Edge<T>) -> T {
    match e.schedule {
        EdgeSchedule::Constant => e.coupling,
        EdgeSchedule::Pulse { ramp, .. } => e.coupling.max(e.coupling + ramp.peak),
    }
}

/// Perturbed copy of `model`. A coupling that was positive and is driven to
/// zero or below closes the gap it protected; that is reported as a warning.
pub fn apply_error_model<T: Real>(model: &CouplingModel<T>, spec: &ErrorSpec) -> Result<Perturbed<T>> {
    let n = model.n_sites;
    if !spec.magnitude.is_finite() || !spec.reference.is_finite() {
        return Err(Error::Model(format!("error magnitude {} is not finite", spec.magnitude)));
    }
    if let Some(&(i, j)) = spec.targets.iter().find(|&&(i, j)| i >= n || j >= n || i == j) {
        return Err(Error::Model(format!("error target ({i}, {j}) is not a pair of the {n} sites")));
    }
    let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Model(format!("{:?} needs {what}", spec.kind))) };
    let mut m = model.clone();
    let registered = spec.targets.iter().all(|&(i, j)| model.edge(i, j).is_some());
    let mut warnings = vec![];
    let mut touched = vec![];
    match spec.kind {
        ErrorKind::IntraMismatch => {
            need(registered && !spec.targets.is_empty(), "existing target couplings")?;
            for &(i, j) in &spec.targets {
                scale_edge(m.edge_mut(i, j).unwrap(), T::lit(1.0 + spec.magnitude));
                touched.push((i, j));
            }
        }
        ErrorKind::ResidualInter => {
            need(!spec.targets.is_empty(), "target pairs")?;
            let c = T::lit(spec.magnitude * spec.reference);
            for &(i, j) in &spec.targets {
                match m.edge_mut(i, j) {
                    Some(e) => e.coupling += c,
                    None => m.add_edge(Edge::constant(i, j, c))?,
                }
            }
        }
        ErrorKind::InterSqImbalance => {
            need(registered && spec.targets.len() == 2, "two existing target couplings")?;
            let h = spec.magnitude / 2.0;
            for (&(i, j), f) in spec.targets.iter().zip([1.0 + h, 1.0 - h]) {
                scale_edge(m.edge_mut(i, j).unwrap(), T::lit(f));
                touched.push((i, j));
            }
        }
        ErrorKind::SingleEdgeOnly => {
            need(registered && !spec.targets.is_empty(), "existing target couplings")?;
            let drop = &spec.targets[1..];
            m.edges.retain(|e| !drop.iter().any(|&(i, j)| (e.i, e.j) == (i, j) || (e.j, e.i) == (i, j)));
        }
    }
    for (i, j) in touched {
        let (before, after) = (strength(model.edge(i, j).unwrap()), strength(m.edge(i, j).unwrap()));
        if before > T::zero() && after <= T::zero() {
            warnings.push(format!("coupling ({i}, {j}) driven from {before} to {after}: the gap closes"));
        }
    }
    m.validate()?;
    Ok(Perturbed { model: m, warnings })
}

/// Logical generator `P (H' − H) P` of a constant perturbation on one LQ,
/// as `(c, n)` with traceless part `c n·σ`, `c ≥ 0`.
pub fn projected_drift<T: Real>(
    nominal: &CouplingModel<T>,
    perturbed: &CouplingModel<T>,
    register: &LogicalRegister,
    lq: usize,
) -> Result<(T, [T; 3])> {
    let enc = register.encoding::<T>();
    let sites = register.sites(lq);
    let quarter = T::lit(0.25);
    let mut g = CMat::zeros(2);
    for e in &perturbed.edges {
        let before = nominal.edge(e.i, e.j).map_or(T::zero(), |x| x.coupling);
        let d = e.coupling - before;
        if d == T::zero() {
            continue;
        }
        if !sites.contains(&e.i) || !sites.contains(&e.j) {
            return Err(Error::Model(format!("perturbed coupling ({}, {}) leaves LQ {lq}", e.i, e.j)));
        }
        let li = sites.iter().position(|&s| s == e.i).unwrap();
        let lj = sites.iter().position(|&s| s == e.j).unwrap();
        let op = LocalOperator::<T>::heisenberg(li, lj)?;
        let block = LogicalRegister::contiguous(enc.kind, 1)?;
        g = g.add(&block.projected_operator(&op)?.scale(Cx::from(d * quarter)));
    }
    // traceless part c·n·σ
    let two = T::lit(2.0);
    let x = (g[(0, 1)] + g[(1, 0)]).re / two;
    let y = (g[(1, 0)] - g[(0, 1)]).im / two;
    let z = (g[(0, 0)] - g[(1, 1)]).re / two;
    let c = (x * x + y * y + z * z).sqrt();
    if c == T::zero() {
        return Ok((c, [T::zero(), T::zero(), T::one()]));
    }
    Ok((c, [x / c, y / c, z / c]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub delta: f64,
    /// Measured coefficient of `n·σ_L` in the logical generator.
    pub coefficient: f64,
    /// Same, from the projected generator.
    pub predicted: f64,
    pub axis: [f64; 3],
    pub leakage: f64,
}

fn one_sq<T: Real>(device: &Device<T>, pair: (usize, usize), delta: f64) -> Result<(LogicalRegister, CouplingModel<T>, CouplingModel<T>)> {
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1)?;
    let (p, q) = pair;
    if p == q || !(1..=4).contains(&p) || !(1..=4).contains(&q) {
        return Err(Error::Support(format!("spin pair {pair:?} is not within 1..=4")));
    }
    let nominal = sq_background(&reg, device.j_sq)?;
    let spec = ErrorSpec::new(ErrorKind::IntraMismatch, delta, vec![(p - 1, q - 1)]);
    let perturbed = apply_error_model(&nominal, &spec)?.model;
    Ok((reg, nominal, perturbed))
}

fn idle<T: Real>(model: &CouplingModel<T>, t: T, tol: T) -> Result<GateRecipe<T>> {
    let mut r = GateRecipe::new(model.n_sites).with_tolerance(tol);
    if t > T::zero() {
        r.evolve(model.clone(), t, "idle")?;
    }
    Ok(r)
}

/// Idle drift of one SQ whose spins `pair` (labels 1–4) couple at
/// `j_sq (1 + δ)`. `t` must keep the accumulated angle below π.
pub fn sq_mismatch_drift<T: Real>(device: &Device<T>, pair: (usize, usize), delta: f64, t: T) -> Result<DriftReport> {
    let (reg, nominal, perturbed) = one_sq(device, pair, delta)?;
    let (c, n) = projected_drift(&nominal, &perturbed, &reg, 0)?;
    let e = extract_logical_unitary(&idle(&perturbed, t, device.tolerance)?, &reg)?;
    let (axis, angle) = su2_axis_angle(&e.logical_matrix);
    let along = axis[0] * n[0] + axis[1] * n[1] + axis[2] * n[2];
    let coefficient = (angle * along.signum() / (T::lit(2.0) * t)).to_f64_lossy();
    Ok(DriftReport {
        delta,
        coefficient,
        predicted: c.to_f64_lossy(),
        axis: n.map(|x| x.to_f64_lossy()),
        leakage: e.leakage.to_f64_lossy(),
    })
}

/// `drift(t/2) · π_m · drift(t/2) · π_m` with ideal, instantaneous logical
/// π pulses about `axis` on `lq`.
pub fn refocus_sequence<T: Real>(
    drift: &CouplingModel<T>,
    t: T,
    register: &LogicalRegister,
    lq: usize,
    axis: [T; 3],
) -> Result<GateRecipe<T>> {
    if lq >= register.lq_count() {
        return Err(Error::Register(format!("no logical qubit {lq}")));
    }
    let pulse = register.encoding::<T>().logical_gate(register.sites(lq), &su2_rotation(axis, T::PI()))?;
    let half = t / T::lit(2.0);
    let mut r = GateRecipe::new(register.n_sites());
    for _ in 0..2 {
        r.append(&idle(drift, half, T::lit(1e-12))?)?;
        r.apply(pulse.clone(), format!("lq{lq} π pulse"))?;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefocusReport {
    pub delta: f64,
    pub t: f64,
    pub axis: [f64; 3],
    pub unrefocused_infidelity: f64,
    pub refocused_infidelity: f64,
    pub leakage: f64,
}

/// Idle infidelity of one mismatched SQ with and without refocusing about
/// `axis`.
pub fn sq_mismatch_refocusing<T: Real>(
    device: &Device<T>,
    pair: (usize, usize),
    delta: f64,
    t: T,
    axis: [T; 3],
) -> Result<RefocusReport> {
    let (reg, _, perturbed) = one_sq(device, pair, delta)?;
    let id = CMat::identity(2);
    let bare = extract_logical_unitary(&idle(&perturbed, t, T::lit(1e-12))?, &reg)?;
    let fixed = extract_logical_unitary(&refocus_sequence(&perturbed, t, &reg, 0, axis)?, &reg)?;
    Ok(RefocusReport {
        delta,
        t: t.to_f64_lossy(),
        axis: axis.map(|x| x.to_f64_lossy()),
        unrefocused_infidelity: infidelity(&bare.logical_matrix, &id).to_f64_lossy(),
        refocused_infidelity: infidelity(&fixed.logical_matrix, &id).to_f64_lossy(),
        leakage: fixed.leakage.to_f64_lossy(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdleReport {
    pub magnitude: f64,
    pub t: f64,
    pub infidelity: f64,
    /// `(ε t)²`-coefficient from `⟨H₁²⟩ − ⟨H₁⟩²` over the code space.
    pub series: f64,
    pub leakage: f64,
}

/// Idle evolution of `register` under `background` plus the residual
/// couplings of `spec`. The series prediction assumes the background acts
/// trivially on the code space over `t`.
pub fn residual_idle<T: Real>(
    register: &LogicalRegister,
    background: &CouplingModel<T>,
    spec: &ErrorSpec,
    t: T,
) -> Result<IdleReport> {
    if spec.kind != ErrorKind::ResidualInter {
        return Err(Error::Model("residual_idle needs a residual-inter error".into()));
    }
    let perturbed = apply_error_model(background, spec)?.model;
    let e = extract_logical_unitary(&idle(&perturbed, t, T::lit(1e-12))?, register)?;
    let d = 1usize << register.lq_count();
    let inf = infidelity(&e.logical_matrix, &CMat::identity(d)).to_f64_lossy();
    // unit-strength residual generator
    let mut unit_spec = spec.clone();
    unit_spec.magnitude = 1.0;
    let h1 = apply_error_model(&CouplingModel::new(register.n_sites()), &unit_spec)?.model.hamiltonian_at(T::zero())?;
    let (mut sq, mut mean) = (0.0, 0.0);
    for x in 0..d {
        let bits: Vec<u8> = (0..register.lq_count()).map(|q| ((x >> q) & 1) as u8).collect();
        let v = register.encode_bits::<T>(&bits)?;
        let mut hv = vec![Cx::new(T::zero(), T::zero()); v.dim()];
        h1.apply(v.amplitudes(), &mut hv);
        sq += hv.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum::<f64>();
        mean += v.amplitudes().iter().zip(&hv).map(|(a, b)| (a.conj() * b).re.to_f64_lossy()).sum::<f64>();
    }
    let (sq, mean) = (sq / d as f64, mean / d as f64);
    Ok(IdleReport {
        magnitude: spec.magnitude,
        t: t.to_f64_lossy(),
        infidelity: inf,
        series: sq - mean * mean,
        leakage: e.leakage.to_f64_lossy(),
    })
}

/// Ordinary least squares `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// NaN when `y` has no spread.
    pub r_squared: f64,
    pub max_residual: f64,
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len().min(y.len());
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let intercept = my - slope * mx;
    let res: Vec<f64> = x[..n].iter().zip(&y[..n]).map(|(a, b)| b - (slope * a + intercept)).collect();
    let ss_res: f64 = res.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y[..n].iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN };
    LinearFit { slope, intercept, r_squared, max_residual: res.iter().fold(0.0, |m, r| m.max(r.abs())), points: n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalancePoint {
    /// `ΔJ_inter` as a fraction of the peak.
    pub delta: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub offdiag_residual: f64,
    pub leakage: f64,
    /// Adiabaticity failure; excluded from the fits.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSweep {
    pub points: Vec<ImbalancePoint>,
    /// `β₁ − β₂` against `ΔJ_inter`.
    pub beta_difference_fit: LinearFit,
    /// Largest odd part `|f(Δ) − f(−Δ)|/2` over mirrored grid points.
    pub alpha_odd: f64,
    pub alpha_even: f64,
    pub beta_odd: f64,
    pub beta_even: f64,
    pub max_offdiag: f64,
}

pub const IMBALANCE_R_SQUARED: f64 = 0.999;
pub const IMBALANCE_OFFDIAG: f64 = 1e-6;

impl ImbalanceSweep {
    pub fn linear(&self) -> bool {
        self.beta_difference_fit.r_squared > IMBALANCE_R_SQUARED
    }

    pub fn diagonal(&self) -> bool {
        self.max_offdiag < IMBALANCE_OFFDIAG
    }
}

/// Representative of `x` modulo π/2 closest to `near`.
fn unwrap_quarter(x: f64, near: f64) -> f64 {
    let p = std::f64::consts::FRAC_PI_2;
    x + p * ((near - x) / p).round()
}

/// Inter-SQ gate of `template` with its two edges scaled `1 ± Δ/2`, for
/// each `Δ` in `grid`.
pub fn imbalance_sweep<T: Real>(device: &Device<T>, template: &InterSqCoupling<T>, grid: &[f64]) -> Result<ImbalanceSweep> {
    if template.edges.len() != 2 {
        return Err(Error::Model("the imbalance sweep needs two inter-SQ edges".into()));
    }
    let reg = sq_pair_register();
    let mut base = sq_background(&reg, device.j_sq)?;
    template.add_to(&mut base, &reg, 0, 1)?;
    let targets: Vec<(usize, usize)> =
        template.edges.iter().map(|&(p, q)| (reg.sites(0)[p - 1], reg.sites(1)[q - 1])).collect();
    let raw: Vec<Result<(ZPhases<T>, EffectiveUnitary<T>)>> = grid
        .par_iter()
        .map(|&delta| {
            let m = apply_error_model(&base, &ErrorSpec::new(ErrorKind::InterSqImbalance, delta, targets.clone()))?.model;
            let mut r = GateRecipe::new(reg.n_sites()).with_tolerance(device.tolerance);
            r.evolve(m, template.duration(), format!("imbalance {delta}"))?;
            let e = extract_logical_unitary(&r, &reg)?;
            Ok((ZPhases::from_diagonal(&e.logical_matrix), e))
        })
        .collect();
    let raw = raw.into_iter().collect::<Result<Vec<_>>>()?;
    // unwrap against the point closest to balance
    let k0 = (0..grid.len()).min_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs())).unwrap_or(0);
    let f = |x: T| x.to_f64_lossy();
    let (a0, b0) = raw.get(k0).map_or((0.0, 0.0), |(p, _)| (f(p.alpha), f(p.beta[0])));
    let points: Vec<ImbalancePoint> = grid
        .iter()
        .zip(&raw)
        .map(|(&delta, (p, e))| ImbalancePoint {
            delta,
            alpha: unwrap_quarter(f(p.alpha), a0),
            beta1: unwrap_quarter(f(p.beta[0]), b0),
            beta2: unwrap_quarter(f(p.beta[1]), b0),
            offdiag_residual: f(e.offdiag_residual()),
            leakage: f(e.leakage),
            flagged: e.leakage > template.leakage_limit,
        })
        .collect();
    let good: Vec<&ImbalancePoint> = points.iter().filter(|p| !p.flagged).collect();
    let x: Vec<f64> = good.iter().map(|p| p.delta).collect();
    let y: Vec<f64> = good.iter().map(|p| p.beta1 - p.beta2).collect();
    let mut parts = [0.0f64; 4];
    for p in &good {
        if let Some(q) = good.iter().find(|q| q.delta == -p.delta && p.delta > 0.0) {
            let b = |r: &ImbalancePoint| (r.beta1 + r.beta2) / 2.0;
            parts[0] = parts[0].max((p.alpha - q.alpha).abs() / 2.0);
            parts[1] = parts[1].max(((p.alpha + q.alpha) / 2.0 - points[k0].alpha).abs());
            parts[2] = parts[2].max((b(p) - b(q)).abs() / 2.0);
            parts[3] = parts[3].max(((b(p) + b(q)) / 2.0 - b(&points[k0])).abs());
        }
    }
    Ok(ImbalanceSweep {
        beta_difference_fit: linear_fit(&x, &y),
        alpha_odd: parts[0],
        alpha_even: parts[1],
        beta_odd: parts[2],
        beta_even: parts[3],
        max_offdiag: good.iter().map(|p| p.offdiag_residual).fold(0.0, f64::max),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub peak: f64,
    pub ramp_duration: f64,
    pub infidelity: f64,
    pub leakage: f64,
    pub offdiag_residual: f64,
}

/// One inter-SQ edge `(spin on SQ 0, spin on SQ 1)` pulsed with `ramp`
/// around a `hold`, background on. Leakage is reported, not rejected.
pub fn single_edge_probe<T: Real>(
    device: &Device<T>,
    edge: (usize, usize),
    ramp: RampProfile<T>,
    hold: T,
) -> Result<(EffectiveUnitary<T>, ProbeReport)> {
    let reg = sq_pair_register();
    let c = InterSqCoupling { edges: vec![edge], ramp, hold, leakage_limit: T::one() };
    let mut m = sq_background(&reg, device.j_sq)?;
    c.add_to(&mut m, &reg, 0, 1)?;
    let mut r = GateRecipe::new(reg.n_sites()).with_tolerance(device.tolerance);
    r.evolve(m, c.duration(), "single inter-SQ edge")?;
    let e = extract_logical_unitary(&r, &reg)?;
    let rep = ProbeReport {
        peak: ramp.peak.to_f64_lossy(),
        ramp_duration: ramp.duration.to_f64_lossy(),
        infidelity: infidelity(&e.logical_matrix, &CMat::identity(4)).to_f64_lossy(),
        leakage: e.leakage.to_f64_lossy(),
        offdiag_residual: e.offdiag_residual().to_f64_lossy(),
    };
    Ok((e, rep))
}
