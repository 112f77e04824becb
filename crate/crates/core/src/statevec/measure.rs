use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LocalOperator, QuantumState};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{Cx, Real};

/// Projective measurement bases. Outcome 0 is: spin-up (`Z`), the `+φ`
/// direction (`Xy`), or the singlet (`SingletTriplet`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "kebab-case")]
pub enum Basis {
    Z { site: usize },
    /// Axis in the x–y plane at angle `phi` (radians) from +x.
    Xy { site: usize, phi: f64 },
    SingletTriplet { first: usize, second: usize },
}

impl Basis {
    pub fn support(&self) -> Vec<usize> {
        match *self {
            Basis::Z { site } | Basis::Xy { site, .. } => vec![site],
            Basis::SingletTriplet { first, second } => vec![first, second],
        }
    }

    /// Projector for `outcome` as a Hermitian local operator.
    pub fn projector<T: Real>(&self, outcome: u8) -> Result<LocalOperator<T>> {
        let zero = match *self {
            Basis::Z { site } => {
                LocalOperator::hermitian(vec![site], CMat::diag(&[Cx::from(T::one()), Cx::zero()]))?
            }
            Basis::Xy { site, phi } => {
                let h = T::lit(0.5);
                let e = Complex::from_polar(h, T::lit(phi));
                let m = CMat::from_rows(&[vec![Cx::from(h), e.conj()], vec![e, Cx::from(h)]]);
                LocalOperator::hermitian(vec![site], m)?
            }
            Basis::SingletTriplet { first, second } => LocalOperator::singlet_projector(first, second)?,
        };
        match outcome {
            0 => Ok(zero),
            1 => {
                let d = zero.matrix().dim();
                LocalOperator::hermitian(zero.support().to_vec(), CMat::identity(d).sub(zero.matrix()))
            }
            _ => Err(Error::Support(format!("outcome {outcome} is not binary"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub support: Vec<usize>,
    pub basis: Basis,
    pub outcome: u8,
    /// Born probability of `outcome` in the pre-measurement state.
    pub probability: f64,
}

/// Below this a branch is treated as impossible.
const ZERO_PROBABILITY: f64 = 1e-14;

impl<T: Real> QuantumState<T> {
    /// Born probabilities `[p0, p1]` for `basis`.
    pub fn outcome_probabilities(&self, basis: &Basis) -> Result<[f64; 2]> {
        let p0 = self.projected_weight(&basis.projector::<T>(0)?)?;
        let p0 = p0.to_f64_lossy().clamp(0.0, 1.0);
        Ok([p0, 1.0 - p0])
    }

    fn projected_weight(&self, proj: &LocalOperator<T>) -> Result<T> {
        let mut v = self.clone();
        v.apply_matrix(proj)?;
        Ok(v.amplitudes().iter().fold(T::zero(), |a, z| a + z.norm_sqr()))
    }

    /// Samples an outcome by the Born rule, collapses and renormalizes.
    pub fn measure<R: Rng + ?Sized>(&self, basis: &Basis, rng: &mut R) -> Result<(MeasurementRecord, Self)> {
        let [p0, _] = self.outcome_probabilities(basis)?;
        let u: f64 = rng.gen();
        let outcome = if u < p0 { 0 } else { 1 };
        self.project(basis, outcome)
    }

    /// Post-selects `outcome`; errors when that branch has zero probability.
    pub fn project(&self, basis: &Basis, outcome: u8) -> Result<(MeasurementRecord, Self)> {
        let proj = basis.projector::<T>(outcome)?;
        let mut post = self.clone();
        post.apply_matrix(&proj)?;
        let w = post.amplitudes().iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        let probability = w.to_f64_lossy();
        if probability < ZERO_PROBABILITY {
            return Err(Error::ZeroProbability { outcome, probability });
        }
        post.renormalize();
        Ok((
            MeasurementRecord { support: basis.support(), basis: *basis, outcome, probability },
            post,
        ))
    }
}
