use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Lattice, LatticeKind};
use crate::error::{Error, Result};
use crate::model::Species;

/// Physical couplings realizing one LQ edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCoupling {
    pub lqs: (usize, usize),
    /// Site pairs `(site of lqs.0, site of lqs.1)`.
    pub sites: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub label: String,
    pub couplings: Vec<EdgeCoupling>,
    /// Intra-LQ SWAPs applied before the couplings and undone after.
    #[serde(default)]
    pub swaps: Vec<(usize, usize)>,
    /// Species receiving the refocusing `π_z` (bare lattices).
    #[serde(default)]
    pub pulse: Option<Species>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub steps: Vec<ScheduleStep>,
}

/// Spin labels (1–4) joining SQ `a` to the next SQ `b` when both have their
/// singlet pairs facing each other.
const SQ_FACING: [(usize, usize); 2] = [(3, 1), (4, 2)];
/// Right column of `a` to left column of `b` in the planar layout.
const SQ_PLANAR_SIDE: [(usize, usize); 2] = [(2, 1), (4, 3)];

fn sq_coupling(lattice: &Lattice, a: usize, b: usize, labels: [(usize, usize); 2]) -> EdgeCoupling {
    let (sa, sb) = (lattice.register.sites(a), lattice.register.sites(b));
    EdgeCoupling { lqs: (a, b), sites: labels.iter().map(|&(p, q)| (sa[p - 1], sb[q - 1])).collect() }
}

/// Couplings for edge `(a, b)` as placed by [`make_schedule`].
fn coupling(lattice: &Lattice, a: usize, b: usize) -> EdgeCoupling {
    let horizontal = b == a + 1 && lattice.position(a).0 == lattice.position(b).0;
    match lattice.kind {
        LatticeKind::TwoSpeciesPlanar => EdgeCoupling { lqs: (a, b), sites: vec![(a, b)] },
        LatticeKind::PairedDotPlanar => {
            let (la, ra) = lattice.domino(a);
            let (lb, rb) = lattice.domino(b);
            let pair = if horizontal {
                (ra, lb)
            } else if lattice.position(a).0 % 2 == 0 {
                (la, lb)
            } else {
                (ra, rb)
            };
            EdgeCoupling { lqs: (a, b), sites: vec![pair] }
        }
        LatticeKind::SqTwoLayer => sq_coupling(lattice, a, b, SQ_FACING),
        LatticeKind::SqPlanar if horizontal && lattice.rows > 1 => sq_coupling(lattice, a, b, SQ_PLANAR_SIDE),
        LatticeKind::SqPlanar => sq_coupling(lattice, a, b, SQ_FACING),
    }
}

/// Staged schedule for `lattice`; empty classes are dropped.
///
/// * two-species: four matchings, horizontal and vertical edges split by
///   the parity of `r + c` of their first LQ, with `π_z` alternating between
///   species `A` and `B`;
/// * paired-dot: horizontal edges, then vertical edges in even columns, then
///   in odd columns;
/// * SQ two-layer: horizontal edges, then vertical edges;
/// * SQ planar: vertical edges with the singlet pairs horizontal, then
///   horizontal edges conjugated by a SWAP of spins 1 and 4 in every SQ.
///   A single-row lattice is laid out transposed so its only step needs no
///   SWAP.
pub fn make_schedule(lattice: &Lattice) -> Result<Schedule> {
    let n = lattice.n_sites();
    if n > lattice.kind.site_cap() {
        return Err(Error::SiteBudget { requested: n, cap: lattice.kind.site_cap() });
    }
    let horizontal = |&(a, b): &(usize, usize)| b == a + 1 && lattice.position(a).0 == lattice.position(b).0;
    let parity = |a: usize| {
        let (r, c) = lattice.position(a);
        (r + c) % 2
    };
    let col = |a: usize| lattice.position(a).1 % 2;
    type Class<'a> = (&'a str, Box<dyn Fn(&(usize, usize)) -> bool + 'a>, bool, Option<Species>);
    let classes: Vec<Class> = match lattice.kind {
        LatticeKind::TwoSpeciesPlanar => vec![
            ("horizontal, even", Box::new(move |e| horizontal(e) && parity(e.0) == 0), false, Some(Species::A)),
            ("horizontal, odd", Box::new(move |e| horizontal(e) && parity(e.0) == 1), false, Some(Species::B)),
            ("vertical, even", Box::new(move |e| !horizontal(e) && parity(e.0) == 0), false, Some(Species::A)),
            ("vertical, odd", Box::new(move |e| !horizontal(e) && parity(e.0) == 1), false, Some(Species::B)),
        ],
        LatticeKind::PairedDotPlanar => vec![
            ("horizontal", Box::new(horizontal), false, None),
            ("vertical, even columns", Box::new(move |e| !horizontal(e) && col(e.0) == 0), false, None),
            ("vertical, odd columns", Box::new(move |e| !horizontal(e) && col(e.0) == 1), false, None),
        ],
        LatticeKind::SqTwoLayer => vec![
            ("horizontal", Box::new(horizontal), false, None),
            ("vertical", Box::new(move |e| !horizontal(e)), false, None),
        ],
        LatticeKind::SqPlanar if lattice.rows == 1 => vec![("row", Box::new(|_| true), false, None)],
        LatticeKind::SqPlanar => vec![
            ("vertical", Box::new(move |e| !horizontal(e)), false, None),
            ("horizontal, diagonal swapped", Box::new(horizontal), true, None),
        ],
    };
    let mut steps = vec![];
    for (label, member, swapped, pulse) in classes {
        let couplings: Vec<EdgeCoupling> =
            lattice.adjacency.iter().filter(|e| member(e)).map(|&(a, b)| coupling(lattice, a, b)).collect();
        if couplings.is_empty() {
            continue;
        }
        let swaps = if swapped {
            (0..lattice.lq_count()).map(|q| {
                let s = lattice.register.sites(q);
                (s[0], s[3])
            })
            .collect()
        } else {
            vec![]
        };
        steps.push(ScheduleStep { label: label.into(), couplings, swaps, pulse });
    }
    let s = Schedule { steps };
    s.check(lattice)?;
    Ok(s)
}

impl Schedule {
    /// Every edge in one step, ignoring the one-coupling-per-site rule.
    pub fn simultaneous(lattice: &Lattice) -> Self {
        let couplings = lattice.adjacency.iter().map(|&(a, b)| coupling(lattice, a, b)).collect();
        let pulse = (lattice.kind == LatticeKind::TwoSpeciesPlanar).then_some(Species::A);
        Self { steps: vec![ScheduleStep { label: "simultaneous".into(), couplings, swaps: vec![], pulse }] }
    }

    /// Steps reordered as `order[k]`-th original step at position `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = order.to_vec();
        seen.sort_unstable();
        if seen != (0..self.steps.len()).collect::<Vec<_>>() {
            return Err(Error::Schedule(format!("{order:?} is not a permutation of {} steps", self.steps.len())));
        }
        Ok(Self { steps: order.iter().map(|&k| self.steps[k].clone()).collect() })
    }

    pub fn edge_count(&self) -> usize {
        self.steps.iter().map(|s| s.couplings.len()).sum()
    }

    /// Site-disjoint couplings and SWAPs within each step, couplings joining
    /// the two LQs they claim to, and every lattice edge covered exactly once.
    pub fn check(&self, lattice: &Lattice) -> Result<()> {
        let reg = &lattice.register;
        let n = lattice.n_sites();
        let owner = |s: usize| -> Result<usize> {
            (0..reg.lq_count())
                .find(|&q| reg.sites(q).contains(&s))
                .ok_or_else(|| Error::Schedule(format!("site {s} outside the {n}-site lattice")))
        };
        let mut covered = BTreeSet::new();
        for (k, step) in self.steps.iter().enumerate() {
            let mut busy = BTreeSet::new();
            for c in &step.couplings {
                let (a, b) = (c.lqs.0.min(c.lqs.1), c.lqs.0.max(c.lqs.1));
                if !lattice.adjacency.contains(&(a, b)) {
                    return Err(Error::Schedule(format!("step {k}: LQs {a}, {b} are not neighbours")));
                }
                if !covered.insert((a, b)) {
                    return Err(Error::Schedule(format!("edge ({a}, {b}) scheduled twice")));
                }
                if c.sites.is_empty() {
                    return Err(Error::Schedule(format!("step {k}: edge ({a}, {b}) has no coupling")));
                }
                for &(i, j) in &c.sites {
                    if owner(i)? != c.lqs.0 || owner(j)? != c.lqs.1 {
                        return Err(Error::Schedule(format!("step {k}: sites ({i}, {j}) do not join LQs {:?}", c.lqs)));
                    }
                    for s in [i, j] {
                        if !busy.insert(s) {
                            return Err(Error::Schedule(format!("step {k}: site {s} in more than one coupling")));
                        }
                    }
                }
            }
            let mut swapped = BTreeSet::new();
            for &(i, j) in &step.swaps {
                if i == j || owner(i)? != owner(j)? {
                    return Err(Error::Schedule(format!("step {k}: SWAP ({i}, {j}) must join two sites of one LQ")));
                }
                if !swapped.insert(i) || !swapped.insert(j) {
                    return Err(Error::Schedule(format!("step {k}: overlapping SWAPs")));
                }
            }
        }
        if covered.len() != lattice.adjacency.len() {
            let missing: Vec<_> = lattice.adjacency.iter().filter(|e| !covered.contains(e)).collect();
            return Err(Error::Schedule(format!("edges {missing:?} never coupled")));
        }
        Ok(())
    }
}
