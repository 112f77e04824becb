use qdcluster::errorlab::*;
use qdcluster::model::{RampProfile, RampShape};
use qdcluster::synthesis::{Device, InterSqCoupling};

#[test]
fn imbalance_keeps_the_gate_diagonal_and_symmetric() {
    let d = Device::<f64>::default();
    let c = InterSqCoupling::standard(&d, 400.0).unwrap();
    let s = imbalance_sweep(&d, &c, &[-0.2, -0.1, 0.0, 0.1, 0.2]).unwrap();
    assert!(s.diagonal(), "{s:?}");
    for p in &s.points {
        assert!(!p.flagged);
        assert!((p.beta1 - p.beta2).abs() < 1e-8, "{p:?}");
    }
    // swapping spins 1 ↔ 2 in both SQs exchanges the edges and acts as Z⊗Z
    assert!(s.alpha_odd < 1e-9 && s.beta_odd < 1e-9, "{s:?}");
    assert!(s.alpha_even > 1e-6, "{s:?}");
}

#[test]
fn single_edge_probe_is_identity_when_adiabatic() {
    let d = Device::<f64>::default();
    let peak = 0.05 * d.gap();
    let ramp = RampProfile::new(RampShape::Smoothstep, d.ramp_duration, peak).unwrap();
    let (_, r) = single_edge_probe(&d, (1, 1), ramp, 50.0).unwrap();
    assert!(r.infidelity < 1e-6, "{r:?}");
    let step = RampProfile::new(RampShape::Constant, 1e-3, peak).unwrap();
    let (_, s) = single_edge_probe(&d, (1, 1), step, 50.0).unwrap();
    assert!(s.infidelity > 100.0 * r.infidelity && s.leakage > 1e-5, "{s:?}");
    let mut prev = f64::INFINITY;
    // beyond 8 the leakage sits at the integrator floor
    for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let ramp = RampProfile::new(RampShape::Smoothstep, t, peak).unwrap();
        let (_, r) = single_edge_probe(&d, (1, 1), ramp, 50.0).unwrap();
        assert!(r.infidelity < prev, "{t} {r:?}");
        prev = r.infidelity;
    }
}
