use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::*;
use crate::encodings::EncodingKind;
use crate::linalg::{pauli, su2_axis_angle, su2_rotation};
use crate::model::RampShape;
use crate::scalar::expi;
use crate::statevec::PauliAxis;
use crate::testutil::random_su2;

type C = num_complex::Complex<f64>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn zz(alpha: f64) -> CMat<f64> {
    ZPhases { alpha, beta: [0.0; 2] }.matrix()
}

fn cz() -> CMat<f64> {
    CMat::diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
}

#[test]
fn ising_sandwich_identity() {
    let r = ising_from_heisenberg::<f64>(2, (0, 1)).unwrap();
    let u = r.unitary().unwrap();
    // oracle: closed-form exchange exponential and Pauli products
    let u1 = LocalOperator::<f64>::exchange_evolution(0, 1, PI / 8.0).unwrap().matrix().clone();
    let z_hi = pauli::<f64>(PauliAxis::Z).kron(&CMat::identity(2));
    let oracle = u1.matmul(&z_hi).matmul(&u1);
    assert!(u.sub(&oracle).operator_norm() < 1e-12);
    let e = (-FRAC_PI_4).cos();
    let s = (-FRAC_PI_4).sin();
    let want = [c(e, s), c(e, -s), c(-e, s), c(-e, -s)];
    for (k, w) in want.iter().enumerate() {
        assert!((u[(k, k)] - w).norm() < 1e-12, "{k}: {}", u[(k, k)]);
    }
    // stripping the local Z leaves exp(−iπ/4 ZZ)
    let stripped = z_hi.matmul(&u);
    assert!(stripped.sub(&zz(FRAC_PI_4)).operator_norm() < 1e-12);
}

#[test]
fn ising_on_bare_register_extracts_same_matrix() {
    let reg = LogicalRegister::contiguous(EncodingKind::Bare, 2).unwrap();
    let r = ising_from_heisenberg::<f64>(2, (0, 1)).unwrap();
    let e = extract_logical_unitary(&r, &reg).unwrap();
    assert_eq!(e.leakage, 0.0);
    assert!(e.global_phase_removed);
    assert!(e.logical_matrix[(0, 0)].im.abs() < 1e-15 && e.logical_matrix[(0, 0)].re > 0.0);
    let target = pauli::<f64>(PauliAxis::Z).kron(&CMat::identity(2)).matmul(&zz(FRAC_PI_4));
    assert!(e.infidelity_to(&target) < 1e-14);
}

#[test]
fn makhlin_invariants_of_standard_gates() {
    let check = |u: &CMat<f64>, g1: C, g2: C| {
        let (a, b) = makhlin_invariants(u);
        assert!((a - g1).norm() < 1e-12 && (b - g2).norm() < 1e-12, "{a} {b}");
    };
    check(&CMat::identity(4), c(1.0, 0.0), c(3.0, 0.0));
    check(&cz(), c(0.0, 0.0), c(1.0, 0.0));
    check(&zz(FRAC_PI_4), c(0.0, 0.0), c(1.0, 0.0));
    check(&zz(-FRAC_PI_4), c(0.0, 0.0), c(1.0, 0.0));
    check(&crate::statevec::swap_matrix(), c(-1.0, 0.0), c(-3.0, 0.0));
    // local dressing leaves them unchanged
    let local = random_su2(3).kron(&random_su2(4));
    check(&local.matmul(&cz()).matmul(&random_su2(5).kron(&random_su2(6))), c(0.0, 0.0), c(1.0, 0.0));
    assert!(!is_cz_class(&zz(0.3), 1e-6));
}

#[test]
fn z_phases_roundtrip() {
    let p = ZPhases { alpha: 0.21, beta: [-0.13, 0.4] };
    let u = p.matrix().scale(expi(0.7));
    let q: ZPhases<f64> = ZPhases::from_diagonal(&u);
    assert!((q.alpha - 0.21).abs() < 1e-14);
    assert!((q.beta[0] + 0.13).abs() < 1e-14 && (q.beta[1] - 0.4).abs() < 1e-14);
    assert!(z_class_infidelity(&cz()) < 1e-14);
    assert!(z_class_infidelity(&zz(0.5)) > 1e-3);
}

#[test]
fn euler_roundtrip() {
    for seed in 0..20 {
        let u = random_su2(seed);
        let (a, b, cc) = euler_zxz(&u);
        let v = rz(a).matmul(&rx(b)).matmul(&rz(cc));
        assert!(infidelity(&u, &v) < 1e-13, "seed {seed}");
    }
    for u in [CMat::<f64>::identity(2), pauli(PauliAxis::X), pauli(PauliAxis::Z), pauli(PauliAxis::Y)] {
        let (a, b, cc) = euler_zxz(&u);
        assert!(infidelity(&u, &rz(a).matmul(&rx(b)).matmul(&rz(cc))) < 1e-13);
    }
}

#[test]
fn empty_recipe_is_identity() {
    for kind in [EncodingKind::Bare, EncodingKind::TwoDot, EncodingKind::Supercoherent] {
        let reg = LogicalRegister::contiguous(kind, 2).unwrap();
        let e = extract_logical_unitary(&GateRecipe::<f64>::new(reg.n_sites()), &reg).unwrap();
        assert!(e.logical_matrix.sub(&CMat::identity(4)).max_abs() < 1e-14);
        assert!(e.leakage < 1e-15);
    }
}

#[test]
fn logical_pi_z_twice_is_identity() {
    let d = Device::<f64>::default();
    for kind in [EncodingKind::TwoDot, EncodingKind::Supercoherent] {
        let reg = LogicalRegister::contiguous(kind, 1).unwrap();
        let mut r = GateRecipe::new(reg.n_sites());
        logical_z_steps(&mut r, &reg, 0, PI, &d).unwrap();
        let once = extract_logical_unitary(&r, &reg).unwrap();
        assert!(infidelity(&once.logical_matrix, &pauli(PauliAxis::Z)) < 1e-12, "{kind:?}");
        let r2 = r.clone();
        r.append(&r2).unwrap();
        let e = extract_logical_unitary(&r, &reg).unwrap();
        assert!(infidelity(&e.logical_matrix, &CMat::identity(2)) < 1e-12);
        assert!(e.leakage < 1e-12);
    }
}

#[test]
fn leaky_recipe_is_rejected() {
    // swapping A and B of a two-dot LQ maps |0_L⟩ ↔ |1_L⟩; a single X flip leaks fully
    let reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 1).unwrap();
    let mut r = GateRecipe::<f64>::new(2);
    r.apply(LocalOperator::pauli(0, PauliAxis::X).unwrap(), "flip").unwrap();
    assert!(matches!(extract_logical_unitary(&r, &reg), Err(Error::Leakage { .. })));
}

#[test]
fn recipe_validation() {
    let mut r = GateRecipe::<f64>::new(2);
    assert!(r.evolve(CouplingModel::new(3), 1.0, "x").is_err());
    assert!(r.evolve(CouplingModel::new(2), 0.0, "x").is_err());
    assert!(r.apply(LocalOperator::pauli(2, PauliAxis::Z).unwrap(), "x").is_err());
    let reg = LogicalRegister::contiguous(EncodingKind::Bare, 3).unwrap();
    assert!(extract_logical_unitary(&r, &reg).is_err());
}

#[test]
fn two_dot_calibrates_to_cz_class() {
    let d = Device::<f64>::default();
    let g = two_dot_ising(&d, &two_dot_grid()).unwrap();
    // exp(+iφ/2 Z Z) after refocusing: the CZ class first appears at φ = π/2
    assert!((g.phi - FRAC_PI_2).abs() < 1e-6, "{}", g.phi);
    assert!(g.effective.leakage < 1e-8);
    assert!(is_cz_class(&g.effective.logical_matrix, 1e-6));
    assert!(g.effective.offdiag_residual() < 1e-9);
    let bare = two_dot_ising_recipe(&d, g.phi, false).unwrap();
    let reg = two_dot_pair_register();
    let leak = (0..4u8)
        .map(|x| reg.leakage(&bare.run(&reg.encode_bits(&[x & 1, x >> 1]).unwrap()).unwrap()).unwrap())
        .fold(0.0, f64::max);
    assert!(leak > 1e-3, "{leak}");
}

#[test]
fn two_dot_zero_angle_is_identity() {
    let d = Device::<f64>::default();
    let r = two_dot_ising_recipe(&d, 1e-300, true).unwrap();
    let e = extract_logical_unitary(&r, &two_dot_pair_register()).unwrap();
    // the refocusing pulse itself remains
    let z1 = pauli::<f64>(PauliAxis::Z).kron(&CMat::identity(2));
    assert!(infidelity(&e.logical_matrix, &z1) < 1e-14);
    assert!(e.leakage < 1e-14);
}

#[test]
fn swap_pair_swaps() {
    let r = swap_pair(&CouplingModel::<f64>::new(2), (0, 1), 0.7).unwrap();
    let u = r.unitary().unwrap();
    let s = crate::statevec::swap_matrix::<f64>();
    assert!(infidelity(&u, &s) < 1e-12);
    assert!(infidelity(&u.matmul(&u), &CMat::identity(4)) < 1e-12);
    let out = r.run(&QuantumState::basis(2, 0b01).unwrap()).unwrap();
    assert!((out.amplitudes()[0b10].norm() - 1.0).abs() < 1e-12);
    assert!(swap_pair(&CouplingModel::<f64>::new(2), (0, 1), 0.0).is_err());
}

#[test]
fn swap_duration_calibrates_to_pi_over_delta_j() {
    let dj = 0.4;
    let s = crate::statevec::swap_matrix::<f64>();
    let family = |t: f64| {
        let m = CouplingModel::new(2).with_edge(crate::model::Edge::constant(0, 1, dj))?;
        let mut r = GateRecipe::new(2);
        r.evolve(m, t, "swap")?;
        Ok((infidelity(&r.unitary()?, &s), 0.0))
    };
    let cal = calibrate(family, &linspace(1.0, 12.0, 23)).unwrap();
    assert!((cal.params[0] - PI / dj).abs() < 1e-6, "{}", cal.params[0]);
}

#[test]
fn zeeman_pi_calibrates_to_pi_over_b_delta_g() {
    let d = Device { b_z: 1.3, delta_g: 0.7, ..Device::<f64>::default() };
    let reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 1).unwrap();
    let z = pauli::<f64>(PauliAxis::Z);
    let family = |t: f64| {
        let sites = vec![
            crate::model::ZeemanSite { g: d.delta_g, species: crate::model::Species::A },
            crate::model::ZeemanSite { g: 0.0, species: crate::model::Species::B },
        ];
        let m = CouplingModel::new(2).with_zeeman(crate::model::Zeeman { b_z: d.b_z, sites })?;
        let mut r = GateRecipe::new(2);
        r.evolve(m, t, "zeeman")?;
        let e = extract_logical_unitary(&r, &reg)?;
        Ok((infidelity(&e.logical_matrix, &z), e.leakage))
    };
    let cal = calibrate(family, &linspace(0.5, 5.0, 19)).unwrap();
    assert!((cal.params[0] - PI / (1.3 * 0.7)).abs() < 1e-6, "{}", cal.params[0]);
}

#[test]
fn sq_diagonal_swap_turns_pairing_vertical() {
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1).unwrap();
    let bg = sq_background(&reg, 4.0).unwrap();
    let r = swap_pair(&bg, (0, 3), 0.4).unwrap();
    let zero: QuantumState<f64> = reg.encode_bits(&[0]).unwrap();
    let out = r.run(&zero).unwrap();
    // singlets on spins (1,3) and (2,4)
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = QuantumState::from_amplitudes(2, vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).unwrap();
    let pairs = singlet.tensor(&singlet).unwrap();
    // pairs has (0,1) and (2,3); reorder to (0,2),(1,3)
    let mut vertical = vec![c(0.0, 0.0); 16];
    for (idx, a) in pairs.amplitudes().iter().enumerate() {
        let bit = |k: usize| (idx >> k) & 1;
        let to = bit(0) | (bit(2) << 1) | (bit(1) << 2) | (bit(3) << 3);
        vertical[to] = *a;
    }
    let vertical = QuantumState::from_amplitudes(4, vertical).unwrap();
    assert!((out.fidelity(&vertical) - 1.0).abs() < 1e-10);
    // the background commutes, so the code space is preserved
    assert!(reg.leakage(&out).unwrap() < 1e-12);
}

#[test]
fn sq_pair_12_matches_projected_generator() {
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1).unwrap();
    let dj = 0.3;
    let t = FRAC_PI_4 / dj;
    let r = sq_rotation::<f64>(&reg, 0, (1, 2), dj, t, 4.0).unwrap();
    let e = extract_logical_unitary(&r, &reg).unwrap();
    // generator (ΔJ/4)(−I − 2 Z_L) = (ΔJ/4)·diag(−3, 1)
    let want = CMat::diag(&[expi(3.0 * dj * t / 4.0), expi(-dj * t / 4.0)]);
    assert!(infidelity(&e.logical_matrix, &want) < 1e-13);
    assert!(e.leakage < 1e-13);
    let same = sq_rotation::<f64>(&reg, 0, (3, 4), dj, t, 4.0).unwrap();
    assert!(infidelity(&extract_logical_unitary(&same, &reg).unwrap().logical_matrix, &want) < 1e-13);
}

#[test]
fn sq_cross_pair_axis_is_120_degrees() {
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1).unwrap();
    let r = sq_rotation::<f64>(&reg, 0, (2, 3), 0.01, 30.0, 4.0).unwrap();
    let e = extract_logical_unitary(&r, &reg).unwrap();
    let (axis, angle) = su2_axis_angle(&e.logical_matrix);
    let a = 120f64.to_radians();
    // a coupling raise rotates about −n
    let n = [a.sin(), 0.0, a.cos()];
    let dist = ((axis[0] + n[0]).powi(2) + (axis[1] + n[1]).powi(2) + (axis[2] + n[2]).powi(2)).sqrt();
    assert!(dist < 1e-6, "{axis:?}");
    assert!((angle - 0.3).abs() < 1e-9, "{angle}");
    assert!(e.leakage < 1e-12);
}

#[test]
fn sq_zero_change_is_identity_and_gap_closure_rejected() {
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1).unwrap();
    let r = sq_rotation::<f64>(&reg, 0, (1, 2), 0.0, 2.0, 4.0).unwrap();
    let e = extract_logical_unitary(&r, &reg).unwrap();
    assert!(infidelity(&e.logical_matrix, &CMat::identity(2)) < 1e-14);
    assert!(matches!(sq_rotation::<f64>(&reg, 0, (1, 2), -4.0, 1.0, 4.0), Err(Error::GapClosure(_))));
    assert!(sq_rotation::<f64>(&reg, 0, (1, 5), 0.1, 1.0, 4.0).is_err());
}

#[test]
fn logical_unitaries_realized_per_encoding() {
    let d = Device::<f64>::default();
    for kind in [EncodingKind::Bare, EncodingKind::TwoDot, EncodingKind::Supercoherent] {
        let reg = LogicalRegister::contiguous(kind, 2).unwrap();
        for seed in 0..3 {
            let u = random_su2(100 + seed);
            let mut r = GateRecipe::new(reg.n_sites());
            logical_unitary_steps(&mut r, &reg, 1, &u, &d).unwrap();
            let e = extract_logical_unitary(&r, &reg).unwrap();
            let want = u.kron(&CMat::identity(2));
            assert!(infidelity(&e.logical_matrix, &want) < 1e-9, "{kind:?} {seed}");
            assert!(e.leakage < 1e-10);
        }
    }
}

#[test]
fn logical_x_on_sq_uses_cross_axis_frame() {
    let d = Device::<f64>::default();
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1).unwrap();
    let mut r = GateRecipe::new(4);
    logical_unitary_steps(&mut r, &reg, 0, &rx(0.9), &d).unwrap();
    assert!(r.steps.len() >= 3);
    let e = extract_logical_unitary(&r, &reg).unwrap();
    assert!(infidelity(&e.logical_matrix, &su2_rotation([1.0, 0.0, 0.0], 0.9)) < 1e-10);
}

fn short_coupling(d: &Device<f64>, edges: Vec<(usize, usize)>, peak: f64) -> InterSqCoupling<f64> {
    InterSqCoupling {
        edges,
        ramp: crate::model::RampProfile::new(RampShape::Smoothstep, d.ramp_duration, peak).unwrap(),
        hold: 20.0,
        leakage_limit: 1e-6,
    }
}

#[test]
fn inter_sq_zero_peak_is_identity() {
    let d = Device::<f64>::default();
    let g = adiabatic_inter_sq(&d, &short_coupling(&d, vec![(1, 1), (2, 2)], 0.0)).unwrap();
    assert!(infidelity(&g.effective.logical_matrix, &CMat::identity(4)) < 1e-13);
}

#[test]
fn inter_sq_two_edges_diagonal_with_equal_local_phases() {
    let d = Device::<f64>::default();
    let g = adiabatic_inter_sq(&d, &short_coupling(&d, vec![(1, 1), (2, 2)], d.inter_peak())).unwrap();
    assert!(g.effective.offdiag_residual() < 1e-6);
    assert!(g.effective.leakage < 1e-6);
    assert!((g.phases.beta[0] - g.phases.beta[1]).abs() < 1e-8);
    assert!(g.phases.alpha.abs() > 1e-5, "{:?}", g.phases);
}

#[test]
fn inter_sq_single_edge_does_nothing() {
    let d = Device::<f64>::default();
    let g = adiabatic_inter_sq(&d, &short_coupling(&d, vec![(1, 1)], d.inter_peak())).unwrap();
    assert!(infidelity(&g.effective.logical_matrix, &CMat::identity(4)) < 1e-6);
}

#[test]
fn sudden_inter_sq_coupling_is_flagged() {
    let d = Device::<f64>::default();
    let mut c = short_coupling(&d, vec![(1, 1), (2, 2)], 1.0);
    c.ramp = crate::model::RampProfile::new(RampShape::Constant, 0.5, 1.0).unwrap();
    assert!(matches!(adiabatic_inter_sq(&d, &c), Err(Error::Adiabaticity { .. })));
}

#[test]
fn device_json_roundtrip() {
    let d = Device::<f64>::default();
    let s = serde_json::to_string(&d).unwrap();
    assert_eq!(serde_json::from_str::<Device<f64>>(&s).unwrap(), d);
    assert!(serde_json::from_str::<Device<f64>>(r#"{"bogus": 1}"#).is_err());
    let r = ising_from_heisenberg::<f64>(2, (0, 1)).unwrap();
    let back: GateRecipe<f64> = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}
