//! Heisenberg exchange plus Zeeman Hamiltonians on coupling graphs.
//!
//! `H(t) = Σ_edges (J_ij(t)/4) σ^i·σ^j + Σ_i (g_i B_z / 2) σ_z^i`, with ħ = 1.
//! A pair with `J = 1` therefore has singlet–triplet splitting 1; the bare
//! `Σ σ·σ` normalization corresponds to `J = 4`.

mod evolve;
mod hamiltonian;
mod krylov;
mod spectrum;

pub use evolve::{evolve, evolve_batch, propagator, DEFAULT_TOLERANCE};
pub use hamiltonian::Hamiltonian;
pub use spectrum::{eigenstates, spectrum, DEGENERACY_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest connected component propagated by dense eigendecomposition.
pub const DENSE_COMPONENT_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    /// Sudden switch: full strength for the whole pulse window.
    Constant,
    Linear,
    /// `3s² − 2s³`, zero slope at both ends.
    Smoothstep,
}

/// Turn-on profile of a coupling change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RampProfile<T> {
    pub shape: RampShape,
    /// Rise (and fall) time.
    pub duration: T,
    /// Coupling added at full strength.
    pub peak: T,
}

impl<T: Real> RampProfile<T> {
    pub fn new(shape: RampShape, duration: T, peak: T) -> Result<Self> {
        if !(duration > T::zero()) || !duration.is_finite() || !peak.is_finite() {
            return Err(Error::Model(format!("ramp duration {duration} / peak {peak} invalid")));
        }
        Ok(Self { shape, duration, peak })
    }

    /// Envelope in `[0, 1]` at fraction `s ∈ [0, 1]` of the rise.
    fn rise(&self, s: T) -> T {
        let s = s.max(T::zero()).min(T::one());
        match self.shape {
            RampShape::Constant => T::one(),
            RampShape::Linear => s,
            RampShape::Smoothstep => s * s * (T::lit(3.0) - T::lit(2.0) * s),
        }
    }
}

/// Time dependence of one coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", bound = "T: Real")]
pub enum EdgeSchedule<T> {
    Constant,
    /// `J(t) = J + peak · envelope(t − start)`: rise, hold, fall.
    Pulse { ramp: RampProfile<T>, hold: T, start: T },
}

impl<T: Real> EdgeSchedule<T> {
    pub fn pulse(ramp: RampProfile<T>, hold: T) -> Self {
        EdgeSchedule::Pulse { ramp, hold, start: T::zero() }
    }

    fn window(&self) -> Option<[T; 4]> {
        match *self {
            EdgeSchedule::Constant => None,
            EdgeSchedule::Pulse { ramp, hold, start } => Some([
                start,
                start + ramp.duration,
                start + ramp.duration + hold,
                start + ramp.duration + ramp.duration + hold,
            ]),
        }
    }

    fn envelope(&self, t: T) -> T {
        match *self {
            EdgeSchedule::Constant => T::zero(),
            EdgeSchedule::Pulse { ramp, .. } => {
                let [a, b, c, d] = self.window().unwrap();
                if t < a || t > d {
                    T::zero()
                } else if t < b {
                    ramp.rise((t - a) / ramp.duration)
                } else if t <= c {
                    T::one()
                } else {
                    ramp.rise((d - t) / ramp.duration)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "J")]
    pub coupling: T,
    #[serde(default = "constant_schedule")]
    pub schedule: EdgeSchedule<T>,
}

fn constant_schedule<T>() -> EdgeSchedule<T> {
    EdgeSchedule::Constant
}

impl<T: Real> Edge<T> {
    pub fn constant(i: usize, j: usize, coupling: T) -> Self {
        Self { i, j, coupling, schedule: EdgeSchedule::Constant }
    }

    pub fn coupling_at(&self, t: T) -> T {
        match self.schedule {
            EdgeSchedule::Constant => self.coupling,
            EdgeSchedule::Pulse { ramp, .. } => self.coupling + ramp.peak * self.schedule.envelope(t),
        }
    }

    fn is_zero_on(&self, a: T, b: T) -> bool {
        if self.coupling != T::zero() {
            return false;
        }
        match (self.schedule, self.schedule.window()) {
            (EdgeSchedule::Pulse { ramp, .. }, Some([s, _, _, e])) => ramp.peak == T::zero() || b <= s || a >= e,
            _ => true,
        }
    }

    /// Whether `J(t)` is constant on the open interval `(a, b)`, assuming no
    /// breakpoint lies inside it.
    fn is_constant_on(&self, a: T, b: T) -> bool {
        match (self.schedule, self.schedule.window()) {
            (EdgeSchedule::Pulse { ramp, .. }, Some([s, r, h, e])) => {
                let mid = (a + b) / T::lit(2.0);
                ramp.shape == RampShape::Constant || mid <= s || mid >= e || (mid >= r && mid <= h)
            }
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ZeemanSite<T> {
    pub g: T,
    pub species: Species,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Zeeman<T> {
    #[serde(rename = "B_z")]
    pub b_z: T,
    pub sites: Vec<ZeemanSite<T>>,
}

/// Weighted exchange graph plus per-site Zeeman terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CouplingModel<T> {
    pub n_sites: usize,
    pub edges: Vec<Edge<T>>,
    #[serde(default)]
    pub zeeman: Option<Zeeman<T>>,
}

impl<T: Real> CouplingModel<T> {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, edges: Vec::new(), zeeman: None }
    }

    pub fn with_edge(mut self, edge: Edge<T>) -> Result<Self> {
        self.add_edge(edge)?;
        Ok(self)
    }

    pub fn add_edge(&mut self, edge: Edge<T>) -> Result<()> {
        self.edges.push(edge);
        if let Err(e) = self.validate() {
            self.edges.pop();
            return Err(e);
        }
        Ok(())
    }

    /// Complete graph on `sites` with equal couplings.
    pub fn complete(n_sites: usize, sites: &[usize], coupling: T) -> Result<Self> {
        let mut m = Self::new(n_sites);
        for (a, &i) in sites.iter().enumerate() {
            for &j in &sites[a + 1..] {
                m.add_edge(Edge::constant(i, j, coupling))?;
            }
        }
        Ok(m)
    }

    pub fn with_zeeman(mut self, zeeman: Zeeman<T>) -> Result<Self> {
        self.zeeman = Some(zeeman);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e.i == e.j {
                return Err(Error::Model(format!("self-coupling on site {}", e.i)));
            }
            if e.i >= self.n_sites || e.j >= self.n_sites {
                return Err(Error::Model(format!("edge ({}, {}) outside {} sites", e.i, e.j, self.n_sites)));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::Model(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
            if !e.coupling.is_finite() {
                return Err(Error::Model(format!("non-finite coupling on ({}, {})", e.i, e.j)));
            }
            if let EdgeSchedule::Pulse { ramp, hold, start } = e.schedule {
                if !(ramp.duration > T::zero()) || hold < T::zero() || start < T::zero() || !ramp.peak.is_finite() {
                    return Err(Error::Model(format!("invalid pulse on ({}, {})", e.i, e.j)));
                }
            }
        }
        if let Some(z) = &self.zeeman {
            if !z.sites.is_empty() && z.sites.len() != self.n_sites {
                return Err(Error::Model(format!("{} Zeeman sites for {} sites", z.sites.len(), self.n_sites)));
            }
            if !z.b_z.is_finite() || z.sites.iter().any(|s| !s.g.is_finite()) {
                return Err(Error::Model("non-finite Zeeman term".into()));
            }
        }
        Ok(())
    }

    pub fn edge_mut(&mut self, i: usize, j: usize) -> Option<&mut Edge<T>> {
        self.edges.iter_mut().find(|e| (e.i == i && e.j == j) || (e.i == j && e.j == i))
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&Edge<T>> {
        self.edges.iter().find(|e| (e.i == i && e.j == j) || (e.i == j && e.j == i))
    }

    /// End of the last pulse; `None` when every coupling is constant.
    pub fn horizon(&self) -> Option<T> {
        self.edges
            .iter()
            .filter_map(|e| e.schedule.window().map(|w| w[3]))
            .fold(None, |acc: Option<T>, x| Some(acc.map_or(x, |a| a.max(x))))
    }

    pub(crate) fn breakpoints(&self, t0: T, t1: T) -> Vec<T> {
        let mut pts = vec![t0, t1];
        for e in &self.edges {
            if let Some(w) = e.schedule.window() {
                pts.extend(w.iter().copied().filter(|&x| x > t0 && x < t1));
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (T::one() + b.abs()));
        pts
    }

    fn check_time(&self, t: T) -> Result<()> {
        let out = t < T::zero() || self.horizon().is_some_and(|h| t > h);
        if out || !t.is_finite() {
            return Err(Error::TimeOutOfRange {
                t: t.to_f64_lossy(),
                horizon: self.horizon().map_or(f64::INFINITY, |h| h.to_f64_lossy()),
            });
        }
        Ok(())
    }

    /// Instantaneous Hamiltonian.
    pub fn hamiltonian_at(&self, t: T) -> Result<Hamiltonian<T>> {
        self.check_time(t)?;
        Ok(self.hamiltonian_unchecked(t))
    }

    pub(crate) fn hamiltonian_unchecked(&self, t: T) -> Hamiltonian<T> {
        let quarter = T::lit(0.25);
        let exchange = self
            .edges
            .iter()
            .map(|e| (e.i, e.j, e.coupling_at(t) * quarter))
            .filter(|&(_, _, c)| c != T::zero())
            .collect();
        let field = match &self.zeeman {
            Some(z) => z
                .sites
                .iter()
                .enumerate()
                .map(|(i, s)| (i, s.g * z.b_z / T::lit(2.0)))
                .filter(|&(_, c)| c != T::zero())
                .collect(),
            None => Vec::new(),
        };
        Hamiltonian { n_sites: self.n_sites, exchange, field }
    }

    /// Terms touching only `sites`, zero coefficients kept so that terms at
    /// different times line up one to one.
    pub(crate) fn local_terms(&self, t: T, sites: &[usize]) -> Hamiltonian<T> {
        let quarter = T::lit(0.25);
        let exchange = self
            .edges
            .iter()
            .filter(|e| sites.contains(&e.i) && sites.contains(&e.j))
            .map(|e| (e.i, e.j, e.coupling_at(t) * quarter))
            .collect();
        let field = match &self.zeeman {
            Some(z) if !z.sites.is_empty() => {
                sites.iter().map(|&i| (i, z.sites[i].g * z.b_z / T::lit(2.0))).collect()
            }
            _ => Vec::new(),
        };
        Hamiltonian { n_sites: self.n_sites, exchange, field }
    }

    pub fn species_of(&self, site: usize) -> Option<Species> {
        self.zeeman.as_ref().and_then(|z| z.sites.get(site)).map(|s| s.species)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_and_duplicate_edges() {
        let m = CouplingModel::<f64>::new(3);
        assert!(m.clone().with_edge(Edge::constant(1, 1, 1.0)).is_err());
        let m = m.with_edge(Edge::constant(0, 1, 1.0)).unwrap();
        assert!(m.clone().with_edge(Edge::constant(1, 0, 2.0)).is_err());
        assert!(m.with_edge(Edge::constant(0, 2, f64::NAN)).is_err());
    }

    #[test]
    fn ramp_requires_positive_duration() {
        assert!(RampProfile::new(RampShape::Linear, 0.0f64, 1.0).is_err());
    }

    #[test]
    fn smoothstep_envelope_shape() {
        let ramp = RampProfile::new(RampShape::Smoothstep, 2.0f64, 0.5).unwrap();
        let e = Edge { i: 0, j: 1, coupling: 0.0, schedule: EdgeSchedule::pulse(ramp, 3.0) };
        assert_eq!(e.coupling_at(0.0), 0.0);
        assert!((e.coupling_at(1.0) - 0.25).abs() < 1e-15);
        assert_eq!(e.coupling_at(3.0), 0.5);
        assert!((e.coupling_at(6.0) - 0.25).abs() < 1e-15);
        assert_eq!(e.coupling_at(7.0), 0.0);
        // zero slope at the ends
        let d = 1e-6;
        assert!(e.coupling_at(d) / d < 1e-5);
        assert!((0.5 - e.coupling_at(2.0 - d)) / d < 1e-5);
    }

    #[test]
    fn time_outside_horizon_rejected() {
        let ramp = RampProfile::new(RampShape::Linear, 1.0f64, 1.0).unwrap();
        let m = CouplingModel::new(2)
            .with_edge(Edge { i: 0, j: 1, coupling: 0.0, schedule: EdgeSchedule::pulse(ramp, 1.0) })
            .unwrap();
        assert!(m.hamiltonian_at(3.0).is_ok());
        assert!(matches!(m.hamiltonian_at(3.5), Err(Error::TimeOutOfRange { .. })));
        assert!(m.hamiltonian_at(-0.1).is_err());
    }

    #[test]
    fn json_document_shape() {
        let m = CouplingModel::<f64>::new(2)
            .with_edge(Edge::constant(0, 1, 1.5))
            .unwrap()
            .with_zeeman(Zeeman {
                b_z: 1.0,
                sites: vec![ZeemanSite { g: 2.0, species: Species::A }, ZeemanSite { g: 1.0, species: Species::B }],
            })
            .unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["edges"][0]["J"], 1.5);
        assert_eq!(v["edges"][0]["schedule"], "constant");
        assert_eq!(v["zeeman"]["B_z"], 1.0);
        assert_eq!(v["zeeman"]["sites"][1]["species"], "B");
        let back: CouplingModel<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }
}
