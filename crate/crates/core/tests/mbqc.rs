use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex;
use qdcluster::cluster::{build_cluster, make_schedule, BuildConfig, Lattice, LatticeKind};
use qdcluster::mbqc::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn angles(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [(); 3].map(|_| rng.gen_range(-PI..PI))
}

#[test]
fn built_chains_rotate_plus() {
    let plus = [Complex::new(FRAC_1_SQRT_2, 0.0); 2];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for kind in [LatticeKind::TwoSpeciesPlanar, LatticeKind::PairedDotPlanar] {
        let l = Lattice::new(kind, 1, 5).unwrap();
        let cfg = BuildConfig::<f64>::default();
        let b = build_cluster(&l, &make_schedule(&l).unwrap(), &cfg).unwrap();
        for k in 0..4 {
            let [xi, eta, zeta] = angles(&mut rng);
            let p = compile_rotation_chain(xi, eta, zeta);
            let target = rotation_chain_target(xi, eta, zeta).apply(&plus);
            let runs = if kind == LatticeKind::TwoSpeciesPlanar {
                enumerate_branches(&b.state, &p, &l.register, &cfg.device).unwrap()
            } else {
                vec![run_pattern(&b.state, &p, &l.register, k, &cfg.device).unwrap()]
            };
            for run in runs {
                let rho = output_density(&run.state, &l.register, 4, &run.frame).unwrap();
                let f = density_fidelity(&rho, &target);
                assert!(f > 1.0 - 1e-6, "{kind:?} {:?} {f}", run.bits());
            }
        }
    }
}
