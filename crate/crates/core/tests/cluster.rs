use qdcluster::cluster::{
    build_cluster, cluster_fidelity, make_schedule, verify_stabilizers, BuildConfig, Lattice, LatticeKind,
};

#[test]
fn three_by_three_bare_cluster() {
    let l = Lattice::new(LatticeKind::TwoSpeciesPlanar, 3, 3).unwrap();
    let s = make_schedule(&l).unwrap();
    let b = build_cluster(&l, &s, &BuildConfig::<f64>::default()).unwrap();
    let rep = verify_stabilizers(&b.state, &l).unwrap();
    assert!(rep.min() >= 1.0 - 1e-9, "{rep:?}");
}

#[test]
fn paired_dot_square() {
    let l = Lattice::new(LatticeKind::PairedDotPlanar, 2, 2).unwrap();
    let s = make_schedule(&l).unwrap();
    let b = build_cluster(&l, &s, &BuildConfig::<f64>::default()).unwrap();
    let rep = verify_stabilizers(&b.state, &l).unwrap();
    assert!(b.leakage < 1e-6, "{}", b.leakage);
    assert!(rep.min() >= 1.0 - 1e-6, "{rep:?}");
    assert!(cluster_fidelity(&b.state, &l).unwrap() > 1.0 - 1e-6);

    let cfg = BuildConfig::<f64> { unrefocused: true, two_dot_phi: b.two_dot_phi, ..Default::default() };
    let control = build_cluster(&l, &s, &cfg).unwrap();
    assert!(control.leakage > 1e-3, "{}", control.leakage);
}

#[test]
fn sq_pair_cluster() {
    for kind in [LatticeKind::SqPlanar, LatticeKind::SqTwoLayer] {
        let l = Lattice::new(kind, 1, 2).unwrap();
        let s = make_schedule(&l).unwrap();
        let b = build_cluster(&l, &s, &BuildConfig::<f64>::default()).unwrap();
        let rep = verify_stabilizers(&b.state, &l).unwrap();
        assert!(rep.min() >= 1.0 - 1e-4, "{rep:?}");
        assert!(cluster_fidelity(&b.state, &l).unwrap() > 1.0 - 1e-4);
    }
}
