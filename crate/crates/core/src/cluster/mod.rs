//! Cluster states on LQ grids: lattice layouts, staged coupling schedules,
//! the physical build and stabilizer checks.
//!
//! LQ `q = r·cols + c` sits at row `r`, column `c`.

mod build;
mod schedule;
mod stabilizer;

pub use build::{
    build_cluster, build_cluster_unchecked, pairing_orientation_checks, BuildConfig, ClusterBuild, EdgeGateReport,
    PairingCheck,
};
pub use schedule::{make_schedule, EdgeCoupling, Schedule, ScheduleStep};
pub use stabilizer::{
    cluster_fidelity, ideal_cluster_amplitudes, verify_stabilizers, StabilizerReport, StabilizerValue,
    STABILIZER_THRESHOLD,
};

use serde::{Deserialize, Serialize};

use crate::encodings::{EncodingKind, LogicalRegister};
use crate::error::{Error, Result};
use crate::model::Species;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    /// One bare dot per LQ, species alternating in a checkerboard.
    TwoSpeciesPlanar,
    /// Two-dot LQs laid out as horizontal `A`/`B` dominoes.
    PairedDotPlanar,
    /// SQs with spins 1, 3 on the top layer and 2, 4 beneath.
    SqTwoLayer,
    /// SQs as 2×2 dot blocks: spins 1 2 on top, 3 4 below.
    SqPlanar,
}

impl LatticeKind {
    pub fn encoding(self) -> EncodingKind {
        match self {
            LatticeKind::TwoSpeciesPlanar => EncodingKind::Bare,
            LatticeKind::PairedDotPlanar => EncodingKind::TwoDot,
            LatticeKind::SqTwoLayer | LatticeKind::SqPlanar => EncodingKind::Supercoherent,
        }
    }

    /// Largest number of physical sites a lattice of this kind may use.
    pub fn site_cap(self) -> usize {
        match self {
            LatticeKind::TwoSpeciesPlanar => 20,
            LatticeKind::PairedDotPlanar => 12,
            LatticeKind::SqTwoLayer | LatticeKind::SqPlanar => 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub kind: LatticeKind,
    pub rows: usize,
    pub cols: usize,
    pub register: LogicalRegister,
    /// Nearest-neighbour LQ pairs `(a, b)`, `a < b`.
    pub adjacency: Vec<(usize, usize)>,
}

impl Lattice {
    pub fn new(kind: LatticeKind, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Register(format!("empty {rows}×{cols} lattice")));
        }
        let enc = kind.encoding();
        let n = rows * cols * enc.sites_per_lq();
        if n > kind.site_cap() {
            return Err(Error::SiteBudget { requested: n, cap: kind.site_cap() });
        }
        let register = LogicalRegister::contiguous(enc, rows * cols)?;
        let mut adjacency = vec![];
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    adjacency.push((q, q + 1));
                }
                if r + 1 < rows {
                    adjacency.push((q, q + cols));
                }
            }
        }
        Ok(Self { kind, rows, cols, register, adjacency })
    }

    pub fn lq_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_sites(&self) -> usize {
        self.register.n_sites()
    }

    pub fn position(&self, q: usize) -> (usize, usize) {
        (q / self.cols, q % self.cols)
    }

    pub fn neighbours(&self, q: usize) -> Vec<usize> {
        self.adjacency
            .iter()
            .filter_map(|&(a, b)| if a == q { Some(b) } else if b == q { Some(a) } else { None })
            .collect()
    }

    /// Species of the dot carrying bare LQ `q`.
    pub fn species(&self, q: usize) -> Species {
        let (r, c) = self.position(q);
        if (r + c) % 2 == 0 {
            Species::A
        } else {
            Species::B
        }
    }

    /// Left and right dots of two-dot LQ `q`. Physical species alternate in
    /// a checkerboard, so even rows start with `A`.
    pub fn domino(&self, q: usize) -> (usize, usize) {
        let s = self.register.sites(q);
        if self.position(q).0 % 2 == 0 {
            (s[0], s[1])
        } else {
            (s[1], s[0])
        }
    }
}
