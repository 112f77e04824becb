//! Gate constructions built from exchange pulses, Zeeman rotations and ideal
//! single-site pulses, and extraction of their action on the code space.

mod calibrate;
mod gates;
mod invariants;
mod logical;

pub use calibrate::{calibrate, calibrate_2d, linspace, Calibration, SCAN_THRESHOLD};
pub use gates::{
    adiabatic_inter_sq, calibrate_sq_hold, ising_from_heisenberg, sq_pair_register, swap_pair, two_dot_grid,
    two_dot_ising, two_dot_ising_recipe, two_dot_pair_register, InterSqCoupling, InterSqGate, TwoDotIsing,
};
pub use invariants::{cz_class_distance, infidelity, is_cz_class, makhlin_invariants, z_class_infidelity, ZPhases};
pub use logical::{euler_zxz, logical_unitary_steps, logical_z_steps, rx, sq_background, sq_rotation};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::encodings::LogicalRegister;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model::{evolve_batch, CouplingModel, RampProfile, RampShape, DEFAULT_TOLERANCE};
use crate::scalar::Real;
use crate::statevec::{LocalOperator, QuantumState};

/// Hardware constants shared by the constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields, default)]
pub struct Device<T> {
    /// Exchange used for bare and two-dot pulses.
    pub exchange: T,
    /// Field and g-factor contrast for two-dot z rotations.
    pub b_z: T,
    pub delta_g: T,
    /// Equal intra-SQ coupling; the SQ gap equals this value.
    pub j_sq: T,
    /// Coupling change used for intra-SQ rotations and SWAPs.
    pub sq_delta_j: T,
    /// Inter-SQ peak as a fraction of the gap.
    pub inter_peak_fraction: T,
    pub ramp_shape: RampShape,
    pub ramp_duration: T,
    pub tolerance: T,
}

impl<T: Real> Default for Device<T> {
    fn default() -> Self {
        Self {
            exchange: T::one(),
            b_z: T::one(),
            delta_g: T::one(),
            j_sq: T::lit(4.0),
            sq_delta_j: T::lit(0.4),
            inter_peak_fraction: T::lit(0.02),
            ramp_shape: RampShape::Smoothstep,
            ramp_duration: T::lit(40.0),
            tolerance: T::lit(DEFAULT_TOLERANCE),
        }
    }
}

impl<T: Real> Device<T> {
    pub fn gap(&self) -> T {
        self.j_sq
    }

    pub fn inter_peak(&self) -> T {
        self.inter_peak_fraction * self.gap()
    }

    pub fn ramp(&self, peak: T) -> Result<RampProfile<T>> {
        RampProfile::new(self.ramp_shape, self.ramp_duration, peak)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", bound = "T: Real")]
pub enum Step<T> {
    /// Evolve under `model` over `[0, duration]`.
    Evolve { model: CouplingModel<T>, duration: T, label: String },
    /// Instantaneous ideal operation.
    Apply { op: LocalOperator<T>, label: String },
}

impl<T: Real> Step<T> {
    pub fn label(&self) -> &str {
        match self {
            Step::Evolve { label, .. } | Step::Apply { label, .. } => label,
        }
    }
}

/// Ordered list of steps on a fixed number of sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GateRecipe<T> {
    pub n_sites: usize,
    pub steps: Vec<Step<T>>,
    pub tolerance: T,
}

impl<T: Real> GateRecipe<T> {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, steps: Vec::new(), tolerance: T::lit(DEFAULT_TOLERANCE) }
    }

    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn evolve(&mut self, model: CouplingModel<T>, duration: T, label: impl Into<String>) -> Result<&mut Self> {
        if model.n_sites != self.n_sites {
            return Err(Error::Dimension(format!("{}-site model in {}-site recipe", model.n_sites, self.n_sites)));
        }
        if !(duration > T::zero()) {
            return Err(Error::Model(format!("step duration {duration} must be positive")));
        }
        model.validate()?;
        self.steps.push(Step::Evolve { model, duration, label: label.into() });
        Ok(self)
    }

    pub fn apply(&mut self, op: LocalOperator<T>, label: impl Into<String>) -> Result<&mut Self> {
        op.check_range(self.n_sites)?;
        self.steps.push(Step::Apply { op, label: label.into() });
        Ok(self)
    }

    pub fn append(&mut self, other: &GateRecipe<T>) -> Result<&mut Self> {
        if other.n_sites != self.n_sites {
            return Err(Error::Dimension("recipes on different site counts".into()));
        }
        self.steps.extend(other.steps.iter().cloned());
        Ok(self)
    }

    pub fn total_duration(&self) -> T {
        self.steps.iter().fold(T::zero(), |acc, s| match s {
            Step::Evolve { duration, .. } => acc + *duration,
            Step::Apply { .. } => acc,
        })
    }

    pub fn run(&self, state: &QuantumState<T>) -> Result<QuantumState<T>> {
        Ok(self.run_batch(std::slice::from_ref(state))?.pop().unwrap())
    }

    pub fn run_batch(&self, states: &[QuantumState<T>]) -> Result<Vec<QuantumState<T>>> {
        let mut cur = states.to_vec();
        for s in &cur {
            if s.n_sites() != self.n_sites {
                return Err(Error::Dimension(format!("{}-site state, {}-site recipe", s.n_sites(), self.n_sites)));
            }
        }
        for step in &self.steps {
            match step {
                Step::Evolve { model, duration, .. } => {
                    cur = evolve_batch(&cur, model, T::zero(), *duration, self.tolerance)?;
                }
                Step::Apply { op, .. } => {
                    for s in &mut cur {
                        s.apply_matrix(op)?;
                    }
                }
            }
        }
        Ok(cur)
    }

    /// Full physical unitary; small recipes only.
    pub fn unitary(&self) -> Result<CMat<T>> {
        let dim = 1usize << self.n_sites;
        let basis: Vec<QuantumState<T>> =
            (0..dim).map(|c| QuantumState::basis(self.n_sites, c)).collect::<Result<_>>()?;
        let cols = self.run_batch(&basis)?;
        Ok(CMat::from_fn(dim, |r, c| cols[c].amplitudes()[r]))
    }
}

/// Action of a recipe on the code space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EffectiveUnitary<T> {
    pub logical_matrix: CMat<T>,
    /// Largest leakage over logical basis inputs.
    pub leakage: T,
    pub global_phase_removed: bool,
}

impl<T: Real> EffectiveUnitary<T> {
    /// Largest off-diagonal magnitude.
    pub fn offdiag_residual(&self) -> T {
        let d = self.logical_matrix.dim();
        let mut m = T::zero();
        for r in 0..d {
            for c in 0..d {
                if r != c {
                    m = m.max(self.logical_matrix[(r, c)].norm());
                }
            }
        }
        m
    }

    pub fn infidelity_to(&self, target: &CMat<T>) -> T {
        infidelity(&self.logical_matrix, target)
    }
}

/// Leakage at or above this aborts extraction.
pub const EXTRACTION_LEAKAGE_LIMIT: f64 = 0.5;

/// Runs `recipe` on each logical basis state of `register` and collects the
/// code-space overlaps.
pub fn extract_logical_unitary<T: Real>(
    recipe: &GateRecipe<T>,
    register: &LogicalRegister,
) -> Result<EffectiveUnitary<T>> {
    register.validate()?;
    if register.n_sites() != recipe.n_sites {
        return Err(Error::Dimension(format!("{}-site recipe, {}-site register", recipe.n_sites, register.n_sites())));
    }
    let dim = 1usize << register.lq_count();
    let inputs: Vec<QuantumState<T>> = (0..dim)
        .map(|x| {
            let bits: Vec<u8> = (0..register.lq_count()).map(|q| ((x >> q) & 1) as u8).collect();
            register.encode_bits(&bits)
        })
        .collect::<Result<_>>()?;
    let outputs = recipe.run_batch(&inputs)?;
    let mut m = CMat::zeros(dim);
    let mut leakage = T::zero();
    for (c, out) in outputs.iter().enumerate() {
        let col = register.logical_overlaps(out)?;
        let w = col.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        leakage = leakage.max((T::one() - w).max(T::zero()));
        for (r, v) in col.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    if leakage >= T::lit(EXTRACTION_LEAKAGE_LIMIT) {
        return Err(Error::Leakage { leakage: leakage.to_f64_lossy(), limit: EXTRACTION_LEAKAGE_LIMIT });
    }
    Ok(EffectiveUnitary { logical_matrix: m.remove_global_phase(T::lit(1e-6)), leakage, global_phase_removed: true })
}

/// `exp(−i θ/2 σ_z)` as a 2×2 matrix.
pub fn rz<T: Real>(theta: T) -> CMat<T> {
    let h = theta / T::lit(2.0);
    CMat::diag(&[Complex::from_polar(T::one(), -h), Complex::from_polar(T::one(), h)])
}

#[cfg(test)]
mod tests;
