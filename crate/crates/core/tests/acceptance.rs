//! Acceptance run: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines reach the terminal; exits nonzero on any failure
//! other than the expected one recorded in `EXPECTED_FAILURES`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qdcluster::cluster::{
    build_cluster, build_cluster_unchecked, cluster_fidelity, make_schedule,
    pairing_orientation_checks, verify_stabilizers, BuildConfig, Lattice, LatticeKind, Schedule,
};
use qdcluster::encodings::{Encoding, EncodingKind, LogicalRegister};
use qdcluster::errorlab::{linear_fit, single_edge_probe, sq_mismatch_drift};
use qdcluster::linalg::{hermitian_eigenvalues, pauli, su2_rotation, CMat};
use qdcluster::mbqc::{
    compile_rotation_chain, density_fidelity, enumerate_branches, output_density,
    rotation_chain_target, run_pattern,
};
use qdcluster::model::CouplingModel;
use qdcluster::scenario::{execute, load_scenario, without_timestamp, Scenario};
use qdcluster::statevec::{LocalOperator, PauliAxis};
use qdcluster::synthesis::{adiabatic_inter_sq, ising_from_heisenberg, Device, InterSqCoupling};

/// Sub-checks allowed to fail, as `(criterion, check)`. β₁ − β₂ vanishes
/// identically for every imbalance, so a linear fit of it has no
/// explained variance and its R² is noise.
const EXPECTED_FAILURES: &[(usize, &str)] = &[(9, "beta_difference_r_squared")];

struct Sub {
    name: String,
    value: f64,
    bound: String,
    pass: bool,
}

#[derive(Default)]
struct Criterion {
    subs: Vec<Sub>,
}

impl Criterion {
    fn check(&mut self, name: impl Into<String>, value: f64, bound: &str, pass: bool) {
        self.subs.push(Sub {
            name: name.into(),
            value,
            bound: bound.into(),
            pass,
        });
    }

    fn below(&mut self, name: impl Into<String>, value: f64, b: f64) {
        self.check(name, value, &format!("< {b:e}"), value < b);
    }

    fn above(&mut self, name: impl Into<String>, value: f64, b: f64) {
        self.check(name, value, &format!("> {b:e}"), value > b);
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, b: f64) {
        self.check(name, value, &format!(">= {b:e}"), value >= b);
    }

    fn flag(&mut self, name: impl Into<String>, ok: bool) {
        self.check(name, if ok { 1.0 } else { 0.0 }, "== 1", ok);
    }

    fn runtime(&mut self, start: Instant, budget_s: f64) {
        let s = start.elapsed().as_secs_f64();
        self.below("runtime_s", s, budget_s);
    }
}

fn device() -> Device<f64> {
    Device::default()
}

fn scenario_file(name: &str) -> Scenario {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    load_scenario(&std::fs::read_to_string(&p).unwrap(), &[], None).unwrap()
}

fn inline(text: &str) -> Scenario {
    load_scenario(text, &[], None).unwrap()
}

fn c1() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let u = ising_from_heisenberg::<f64>(2, (0, 1))
        .unwrap()
        .unitary()
        .unwrap();
    // Z on the high site, times exp(−iπ/4 Z⊗Z) from its eigenvalues
    let z_hi = pauli::<f64>(PauliAxis::Z).kron(&CMat::identity(2));
    let zz = pauli::<f64>(PauliAxis::Z).kron(&pauli(PauliAxis::Z));
    let phases: Vec<_> = (0..4)
        .map(|k| Complex::from_polar(1.0, -FRAC_PI_4 * zz[(k, k)].re))
        .collect();
    let target = z_hi.matmul(&CMat::diag(&phases));
    c.below(
        "operator_norm_deviation",
        u.sub(&target).operator_norm(),
        1e-12,
    );
    let (summary, _) = execute(&scenario_file("ising_gate.json")).unwrap();
    c.flag("scenario_pass", summary["pass"] == true);
    c.runtime(t, 1.0);
    c
}

fn c2() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let enc = Encoding::<f64>::new(EncodingKind::Supercoherent);
    let p = enc.projector();
    for j in [0.5f64, 1.0, 2.0] {
        // dense route: all 16 eigenvalues of the full matrix
        let h = CouplingModel::complete(4, &[0, 1, 2, 3], 4.0 * j)
            .unwrap()
            .hamiltonian_at(0.0)
            .unwrap()
            .to_matrix();
        let mut ev = hermitian_eigenvalues(&h);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let deg = ev.iter().filter(|&&e| e - ev[0] < 1e-9).count();
        let gap = ev[deg] - ev[0];
        c.flag(format!("degeneracy_j{j}"), deg == 2);
        c.below(format!("gap_error_j{j}"), (gap - 4.0 * j).abs(), 1e-10);
        // the code projector must lie in the ground eigenspace: ‖(H − E₀)P‖
        let shifted = h.sub(&CMat::identity(16).scale(Complex::new(ev[0], 0.0)));
        c.below(
            format!("code_space_residual_j{j}"),
            shifted.matmul(&p).operator_norm(),
            1e-10,
        );
    }
    let (summary, _) = execute(&scenario_file("sq_spectrum.json")).unwrap();
    for ch in summary["checks"].as_array().unwrap() {
        let name = ch["name"].as_str().unwrap();
        if name.starts_with("subspace_fidelity") {
            let v = ch["value"].as_f64().unwrap();
            c.above(name, v, 1.0 - 1e-10);
        }
    }
    c.flag("scenario_pass", summary["pass"] == true);
    c.runtime(t, 1.0);
    c
}

/// `σ_axis` on `site` of four sites as a full 16×16 matrix.
fn full_pauli(site: usize, axis: PauliAxis) -> CMat<f64> {
    (0..4).rev().fold(CMat::identity(1), |m, s| {
        m.kron(&if s == site {
            pauli(axis)
        } else {
            CMat::identity(2)
        })
    })
}

fn c3() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let enc = Encoding::<f64>::new(EncodingKind::Supercoherent);
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1).unwrap();
    let (mut dense, mut projected) = (0.0f64, 0.0f64);
    for site in 0..4 {
        for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
            dense = dense.max(enc.compress(&full_pauli(site, axis)).operator_norm());
            let op = LocalOperator::pauli(site, axis).unwrap();
            projected = projected.max(reg.projected_operator(&op).unwrap().operator_norm());
        }
    }
    c.below("max_norm_dense", dense, 1e-12);
    c.below("max_norm_projected", projected, 1e-12);
    let d = device();
    let edges = [(1, 1), (2, 2), (1, 3), (4, 2)];
    let worst = edges
        .par_iter()
        .map(|&e| {
            single_edge_probe(&d, e, d.ramp(d.inter_peak()).unwrap(), 10.0)
                .unwrap()
                .1
                .infidelity
        })
        .reduce(|| 0.0, f64::max);
    c.below("max_probe_infidelity", worst, 1e-6);
    c.runtime(t, 60.0);
    c
}

fn c4() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let d = device();
    let fractions = [0.01, 0.02, 0.03, 0.04, 0.05];
    let gates: Vec<_> = fractions
        .par_iter()
        .map(|&f| {
            let mut cp = InterSqCoupling::standard(&d, 100.0).unwrap();
            cp.ramp.peak = f * d.gap();
            adiabatic_inter_sq(&d, &cp).unwrap()
        })
        .collect();
    let mut offdiag = 0.0f64;
    let mut beta_diff = 0.0f64;
    let mut leak = 0.0f64;
    for g in &gates {
        offdiag = offdiag.max(g.effective.offdiag_residual());
        beta_diff = beta_diff.max((g.phases.beta[0] - g.phases.beta[1]).abs());
        leak = leak.max(g.effective.leakage);
    }
    c.below("max_offdiag_residual", offdiag, 1e-6);
    c.below("max_beta_difference", beta_diff, 1e-8);
    c.below("max_leakage", leak, 1e-6);
    let x: Vec<f64> = fractions.iter().map(|f| (f * d.gap()).ln()).collect();
    let y: Vec<f64> = gates.iter().map(|g| g.phases.alpha.abs().ln()).collect();
    let fit = linear_fit(&x, &y);
    c.below("zz_exponent_minus_2", (fit.slope - 2.0).abs(), 0.1);
    c.runtime(t, 300.0);
    c
}

fn c5() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let cfg = BuildConfig::<f64>::default();
    for (r, k) in [(2, 2), (3, 3)] {
        let l = Lattice::new(LatticeKind::TwoSpeciesPlanar, r, k).unwrap();
        let s = make_schedule(&l).unwrap();
        c.flag(format!("steps_{r}x{k}_is_4"), s.steps.len() == 4);
        let b = build_cluster(&l, &s, &cfg).unwrap();
        c.at_least(
            format!("min_stabilizer_{r}x{k}"),
            verify_stabilizers(&b.state, &l).unwrap().min(),
            1.0 - 1e-9,
        );
        c.above(
            format!("ideal_fidelity_{r}x{k}"),
            cluster_fidelity(&b.state, &l).unwrap(),
            1.0 - 1e-9,
        );
        if r == 3 {
            let mut worst = 0.0f64;
            for p in permutations(4) {
                let other = build_cluster(&l, &s.permuted(&p).unwrap(), &cfg).unwrap();
                worst = worst.max(b.state.phase_aligned_distance(&other.state));
            }
            c.below("step_permutation_distance_3x3", worst, 1e-10);
        }
    }
    let l = Lattice::new(LatticeKind::TwoSpeciesPlanar, 2, 2).unwrap();
    let neg = build_cluster_unchecked(&l, &Schedule::simultaneous(&l), &cfg).unwrap();
    c.below(
        "simultaneous_min_stabilizer",
        verify_stabilizers(&neg.state, &l).unwrap().min(),
        0.99,
    );
    c.runtime(t, 120.0);
    c
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn c6() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let l = Lattice::new(LatticeKind::PairedDotPlanar, 2, 2).unwrap();
    let s = make_schedule(&l).unwrap();
    c.flag("steps_is_3", s.steps.len() == 3);
    let b = build_cluster(&l, &s, &BuildConfig::<f64>::default()).unwrap();
    c.at_least(
        "min_stabilizer",
        verify_stabilizers(&b.state, &l).unwrap().min(),
        1.0 - 1e-6,
    );
    c.below("leakage", b.leakage, 1e-6);
    let cfg = BuildConfig::<f64> {
        unrefocused: true,
        two_dot_phi: b.two_dot_phi,
        ..Default::default()
    };
    let control = build_cluster(&l, &s, &cfg).unwrap();
    c.above("unrefocused_leakage", control.leakage, 1e-3);
    c.runtime(t, 120.0);
    c
}

fn c7() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let cfg = BuildConfig::<f64>::default();
    for kind in [LatticeKind::SqPlanar, LatticeKind::SqTwoLayer] {
        let l = Lattice::new(kind, 1, 2).unwrap();
        let b = build_cluster(&l, &make_schedule(&l).unwrap(), &cfg).unwrap();
        let tag = if kind == LatticeKind::SqPlanar {
            "planar"
        } else {
            "two_layer"
        };
        c.at_least(
            format!("min_stabilizer_1x2_{tag}"),
            verify_stabilizers(&b.state, &l).unwrap().min(),
            1.0 - 1e-4,
        );
        c.below(format!("leakage_1x2_{tag}"), b.leakage, 1e-4);
    }
    let t16 = Instant::now();
    let l = Lattice::new(LatticeKind::SqPlanar, 2, 2).unwrap();
    let s = make_schedule(&l).unwrap();
    let pairing = pairing_orientation_checks(&l, &s, &cfg.device).unwrap();
    c.flag(
        "pairing_checks_2x2",
        !pairing.is_empty() && pairing.iter().all(|p| p.pass),
    );
    let b = build_cluster(&l, &s, &cfg).unwrap();
    c.flag("completed_2x2_16_sites", b.state.n_sites() == 16);
    c.at_least(
        "min_stabilizer_2x2",
        verify_stabilizers(&b.state, &l).unwrap().min(),
        1.0 - 1e-4,
    );
    c.below("runtime_16_site_s", t16.elapsed().as_secs_f64(), 1800.0);
    c.runtime(t, 1800.0);
    c
}

fn c8() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let plus = [Complex::new(FRAC_1_SQRT_2, 0.0); 2];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let angles: Vec<[f64; 3]> = (0..20)
        .map(|_| [(); 3].map(|_| rng.gen_range(-PI..PI)))
        .collect();
    // target from axis-angle rotations, independent of the pattern compiler
    let target = |[xi, eta, zeta]: [f64; 3]| {
        let r = |axis, a| su2_rotation::<f64>(axis, a);
        r([1.0, 0.0, 0.0], zeta)
            .matmul(&r([0.0, 0.0, 1.0], eta))
            .matmul(&r([1.0, 0.0, 0.0], xi))
    };
    let mut compiled_dev = 0.0f64;
    for &a in &angles {
        compiled_dev = compiled_dev.max(
            target(a)
                .sub(&rotation_chain_target(a[0], a[1], a[2]))
                .max_abs(),
        );
    }
    c.below("target_cross_check", compiled_dev, 1e-12);
    for (kind, tag) in [
        (LatticeKind::TwoSpeciesPlanar, "bare"),
        (LatticeKind::PairedDotPlanar, "two_dot"),
    ] {
        let l = Lattice::new(kind, 1, 5).unwrap();
        let cfg = BuildConfig::<f64>::default();
        let b = build_cluster(&l, &make_schedule(&l).unwrap(), &cfg).unwrap();
        let per_rotation: Vec<(usize, f64)> = angles
            .par_iter()
            .enumerate()
            .map(|(k, &a)| {
                let p = compile_rotation_chain(a[0], a[1], a[2]);
                let want = target(a).apply(&plus);
                let runs = if kind == LatticeKind::TwoSpeciesPlanar {
                    enumerate_branches(&b.state, &p, &l.register, &cfg.device).unwrap()
                } else {
                    (0..4)
                        .map(|j| {
                            run_pattern(&b.state, &p, &l.register, (k * 4 + j) as u64, &cfg.device)
                                .unwrap()
                        })
                        .collect()
                };
                let worst = runs
                    .iter()
                    .map(|r| {
                        density_fidelity(
                            &output_density(&r.state, &l.register, 4, &r.frame).unwrap(),
                            &want,
                        )
                    })
                    .fold(1.0, f64::min);
                (runs.len(), worst)
            })
            .collect();
        let worst = per_rotation.iter().map(|r| r.1).fold(1.0, f64::min);
        c.below(format!("max_infidelity_{tag}"), 1.0 - worst, 1e-6);
        if kind == LatticeKind::TwoSpeciesPlanar {
            c.flag(
                "all_16_branches_bare",
                per_rotation.iter().all(|r| r.0 == 16),
            );
        }
    }
    c.runtime(t, 300.0);
    c
}

fn c9() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    // hand-derived: a (1,2) mismatch δ adds (δ J/4)(−I − 2 Z_L), so the
    // Z_L coefficient is J δ / 2
    let d = device();
    let deltas = [0.005, 0.01, 0.02, 0.05];
    let measured: Vec<f64> = deltas
        .iter()
        .map(|&x| sq_mismatch_drift(&d, (1, 2), x, 10.0).unwrap().coefficient)
        .collect();
    let fit = linear_fit(&deltas, &measured);
    c.below(
        "drift_slope_vs_hand_derivation",
        (fit.slope / (d.j_sq / 2.0) - 1.0).abs(),
        0.01,
    );
    let (summary, _) = execute(&scenario_file("sq_error_sweep.json")).unwrap();
    for ch in summary["checks"].as_array().unwrap() {
        let name = ch["name"].as_str().unwrap();
        let value = ch["value"].as_f64().unwrap_or(f64::NAN);
        c.check(
            name,
            value,
            ch["tolerance"].as_str().unwrap(),
            ch["pass"] == true,
        );
    }
    let params = &summary["parameters"]["error"];
    c.flag(
        "refocus_at_delta_0.02_t_10",
        params["refocus"]["delta"] == 0.02 && params["refocus"]["t"] == 10.0,
    );
    c.runtime(t, 600.0);
    c
}

fn c10() -> Criterion {
    let t = Instant::now();
    let mut c = Criterion::default();
    let bare_chain = inline(
        r#"{"name": "repro-chain", "experiment": "mbqc-rotation", "seed": 5,
            "lattice": {"kind": "two-species-planar", "rows": 1, "cols": 5},
            "mbqc": {"rotations": 6, "branches": "sampled", "samples": 3}}"#,
    );
    let scenarios = [
        scenario_file("ising_gate.json"),
        scenario_file("sq_spectrum.json"),
        scenario_file("bare_3x3_cluster.json"),
        scenario_file("two_dot_chain_rotation.json"),
        scenario_file("sq_single_edge_probe.json"),
        scenario_file("sq_error_sweep.json"),
        bare_chain,
    ];
    let in_pool = |n: usize, s: &Scenario| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap();
        without_timestamp(&pool.install(|| execute(s)).unwrap().0)
    };
    for s in &scenarios {
        let one = in_pool(1, s);
        let again = in_pool(1, s);
        let four = in_pool(4, s);
        c.flag(format!("identical_{}", s.name), one == again && one == four);
    }
    // a different seed must change the sampled outcomes
    let mut other = scenarios[6].clone();
    other.seed = 6;
    c.flag(
        "seed_changes_samples",
        in_pool(1, &other)["results"] != in_pool(1, &scenarios[6])["results"],
    );
    c.runtime(t, 600.0);
    c
}

fn main() {
    let criteria: [(usize, &str, fn() -> Criterion); 10] = [
        (1, "Ising synthesis identity", c1),
        (2, "SQ spectrum", c2),
        (3, "supercoherence and single-edge probe", c3),
        (4, "diagonal inter-SQ coupling", c4),
        (5, "bare cluster construction", c5),
        (6, "two-dot architecture", c6),
        (7, "SQ architecture", c7),
        (8, "MBQC rotation", c8),
        (9, "error lab", c9),
        (10, "reproducibility", c10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut unexpected = vec![];
    for (n, title, f) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let c = f();
        let pass = c.subs.iter().all(|s| s.pass);
        println!(
            "criterion {n} ({title}): {}",
            if pass { "PASS" } else { "FAIL" }
        );
        for s in &c.subs {
            let mark = if s.pass { "ok  " } else { "FAIL" };
            println!("    {mark} {:<40} {:>12.4e}  {}", s.name, s.value, s.bound);
            if !s.pass {
                if EXPECTED_FAILURES.contains(&(n, s.name.as_str())) {
                    println!("         expected failure: β₁ − β₂ vanishes identically, see README");
                } else {
                    unexpected.push(format!("{n}:{}", s.name));
                }
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
