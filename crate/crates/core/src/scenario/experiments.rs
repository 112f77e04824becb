use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::*;
use crate::cluster::{
    build_cluster, build_cluster_unchecked, cluster_fidelity, make_schedule, pairing_orientation_checks,
    verify_stabilizers, BuildConfig, Lattice, Schedule,
};
use crate::encodings::{Encoding, EncodingKind, LogicalRegister};
use crate::errorlab::{
    imbalance_sweep, linear_fit, residual_idle, single_edge_probe, sq_mismatch_drift, sq_mismatch_refocusing,
    ErrorKind, ErrorSpec,
};
use crate::linalg::CMat;
use crate::mbqc::{
    compile_rotation_chain, density_fidelity, enumerate_branches, output_density, rotation_chain_target, run_pattern,
    PatternRun,
};
use crate::model::{eigenstates, spectrum, CouplingModel, RampProfile};
use crate::statevec::{LocalOperator, PauliAxis};
use crate::synthesis::{
    calibrate_sq_hold, extract_logical_unitary, is_cz_class, ising_from_heisenberg, two_dot_grid, two_dot_ising,
    two_dot_ising_recipe, two_dot_pair_register, z_class_infidelity, InterSqCoupling,
};

fn cell(v: f64) -> String {
    v.to_string()
}

pub(super) fn run(s: &Scenario) -> Result<Outcome, RunError> {
    match s.experiment {
        Experiment::BuildCluster => build(s),
        Experiment::VerifyGate => verify_gate(s),
        Experiment::Spectrum => sq_spectrum(s),
        Experiment::MbqcRotation => mbqc_rotation(s),
        Experiment::ErrorSweep => error_sweep(s),
        Experiment::SingleEdgeProbe => probe(s),
    }
}

/// Stabilizer threshold and leakage limit per encoding.
fn build_limits(kind: EncodingKind) -> (f64, f64) {
    match kind {
        EncodingKind::Bare => (1.0 - 1e-9, 1e-9),
        EncodingKind::TwoDot => (1.0 - 1e-6, 1e-6),
        EncodingKind::Supercoherent => (1.0 - 1e-4, 1e-4),
    }
}

fn lattice_of(s: &Scenario) -> Result<Lattice, RunError> {
    let spec = s.lattice.ok_or_else(|| RunError::Config("missing lattice section".into()))?;
    Ok(Lattice::new(spec.kind, spec.rows, spec.cols)?)
}

fn build_config(s: &Scenario) -> BuildConfig<f64> {
    BuildConfig {
        device: s.device,
        two_dot_phi: s.build.two_dot_phi,
        sq_hold: s.build.sq_hold,
        unrefocused: s.build.unrefocused,
    }
}

fn build(s: &Scenario) -> Result<Outcome, RunError> {
    let lattice = lattice_of(s)?;
    let cfg = build_config(s);
    let (schedule, b) = match s.schedule {
        ScheduleChoice::Staged => {
            let sch = make_schedule(&lattice)?;
            let b = build_cluster(&lattice, &sch, &cfg)?;
            (sch, b)
        }
        ScheduleChoice::Simultaneous => {
            let sch = Schedule::simultaneous(&lattice);
            let b = build_cluster_unchecked(&lattice, &sch, &cfg)?;
            (sch, b)
        }
    };
    let (default_threshold, default_leak) = build_limits(lattice.register.encoding);
    let threshold = s.build.threshold.unwrap_or(default_threshold);
    let leak_limit = s.build.leakage_limit.unwrap_or(default_leak);
    let rep = verify_stabilizers(&b.state, &lattice)?;
    let fidelity = cluster_fidelity(&b.state, &lattice)?;

    let mut out = Outcome::default();
    out.checks.push(Check::at_least("min_stabilizer", rep.min(), threshold));
    out.checks.push(Check::below("leakage", b.leakage, leak_limit));

    let mut stab = Table::new("stabilizers.csv", &["lq_index", "expectation", "pass"]);
    for v in &rep.values {
        let pass = v.expectation >= threshold;
        stab.push(vec![v.lq.to_string(), cell(v.expectation), pass.to_string()]);
    }
    let mut gates = Table::new(
        "edge_gates.csv",
        &["step", "lq_a", "lq_b", "zz_phase", "offdiag_residual", "leakage", "z_class_infidelity"],
    );
    for g in &b.edge_gates {
        gates.push(vec![
            g.step.to_string(),
            g.lqs.0.to_string(),
            g.lqs.1.to_string(),
            cell(g.zz_phase),
            cell(g.offdiag_residual),
            cell(g.leakage),
            cell(g.z_class_infidelity),
        ]);
    }
    out.tables.push(stab);
    out.tables.push(gates);

    if lattice.register.encoding == EncodingKind::Supercoherent && schedule.steps.iter().any(|st| !st.swaps.is_empty()) {
        let checks = pairing_orientation_checks(&lattice, &schedule, &s.device)?;
        let mut t = Table::new("pairing.csv", &["step", "stage", "lq", "pair", "singlet", "pass"]);
        for c in &checks {
            t.push(vec![
                c.step.to_string(),
                c.stage.clone(),
                c.lq.to_string(),
                format!("{}-{}", c.pair.0, c.pair.1),
                cell(c.singlet),
                c.pass.to_string(),
            ]);
        }
        let worst = checks.iter().map(|c| c.singlet).fold(1.0, f64::min);
        out.checks.push(Check::flag("pairing_orientation", checks.iter().all(|c| c.pass)));
        out.result("pairing_min_singlet", worst);
        out.tables.push(t);
    }

    let steps: Vec<_> = schedule
        .steps
        .iter()
        .map(|st| json!({"label": st.label, "couplings": st.couplings.len(), "swaps": st.swaps.len()}))
        .collect();
    out.result("n_sites", lattice.n_sites());
    out.result("steps", steps);
    out.result("stabilizers", &rep.values.iter().map(|v| v.expectation).collect::<Vec<_>>());
    out.result("min_stabilizer", rep.min());
    out.result("leakage", b.leakage);
    out.result("cluster_fidelity", fidelity);
    out.result("corrections", &b.corrections);
    out.result("two_dot_phi", b.two_dot_phi);
    out.result("sq_hold", b.sq_hold);
    Ok(out)
}

fn matrix_table(file: &str, m: &CMat<f64>) -> Table {
    let mut t = Table::new(file, &["row", "col", "re", "im"]);
    for r in 0..m.dim() {
        for c in 0..m.dim() {
            t.push(vec![r.to_string(), c.to_string(), cell(m[(r, c)].re), cell(m[(r, c)].im)]);
        }
    }
    t
}

fn verify_gate(s: &Scenario) -> Result<Outcome, RunError> {
    let g = s.gate.clone().unwrap_or_default();
    let d = &s.device;
    let mut out = Outcome::default();
    out.result("kind", g.kind);
    match g.kind {
        GateKind::Ising => {
            let u = ising_from_heisenberg::<f64>(2, (0, 1))?.unitary()?;
            // (Z on site 1) · exp(−iπ/4 Z⊗Z), diagonal in the computational basis
            let target = CMat::diag(&(0..4usize)
                .map(|x| {
                    let z1 = if x & 2 == 0 { 1.0 } else { -1.0 };
                    let zz = if (x.count_ones() % 2) == 0 { 1.0 } else { -1.0 };
                    Complex::from_polar(1.0, -FRAC_PI_4 * zz) * z1
                })
                .collect::<Vec<_>>());
            let dev = u.sub(&target).operator_norm();
            out.checks.push(Check::below("operator_norm_deviation", dev, g.tolerance));
            out.result("operator_norm_deviation", dev);
            out.result("unitarity_deviation", u.unitarity_deviation());
            out.tables.push(matrix_table("unitary.csv", &u));
        }
        GateKind::TwoDotIsing => {
            let gate = match s.build.two_dot_phi {
                Some(phi) => {
                    let r = two_dot_ising_recipe(d, phi, true)?;
                    (extract_logical_unitary(&r, &two_dot_pair_register())?, phi)
                }
                None => {
                    let t = two_dot_ising(d, &two_dot_grid())?;
                    (t.effective, t.phi)
                }
            };
            let (e, phi) = gate;
            let control = extract_logical_unitary(&two_dot_ising_recipe(d, phi, false)?, &two_dot_pair_register())?;
            let zc = z_class_infidelity(&e.logical_matrix);
            out.checks.push(Check::below("z_class_infidelity", zc, g.tolerance.max(1e-9)));
            out.checks.push(Check::below("leakage", e.leakage, 1e-8));
            out.checks.push(Check::above("unrefocused_leakage", control.leakage, 1e-3));
            out.result("phi", phi);
            out.result("z_class_infidelity", zc);
            out.result("leakage", e.leakage);
            out.result("unrefocused_leakage", control.leakage);
            out.tables.push(matrix_table("logical_matrix.csv", &e.logical_matrix));
        }
        GateKind::InterSq => {
            let template = InterSqCoupling::standard(d, s.build.sq_hold.unwrap_or(0.0))?;
            let (gate, cal) = calibrate_sq_hold(d, &template)?;
            let e = &gate.effective;
            let beta = gate.phases.beta;
            out.checks.push(Check::below("z_class_infidelity", cal.infidelity, g.tolerance.max(1e-9)));
            out.checks.push(Check::below("leakage", e.leakage, 1e-6));
            out.checks.push(Check::below("offdiag_residual", e.offdiag_residual(), 1e-6));
            out.checks.push(Check::below("beta_difference", (beta[0] - beta[1]).abs(), 1e-8));
            out.checks.push(Check::flag("cz_class", is_cz_class(&e.logical_matrix, 1e-6)));
            out.result("hold", cal.params[0]);
            out.result("alpha", gate.phases.alpha);
            out.result("beta", beta);
            out.result("leakage", e.leakage);
            out.tables.push(matrix_table("logical_matrix.csv", &e.logical_matrix));
        }
    }
    Ok(out)
}

fn sq_spectrum(s: &Scenario) -> Result<Outcome, RunError> {
    let sec = s.spectrum.clone().unwrap_or_default();
    let enc = Encoding::<f64>::new(EncodingKind::Supercoherent);
    let code = [enc.logical_zero(), enc.logical_one()];
    let mut out = Outcome::default();
    let mut t = Table::new("spectrum.csv", &["coupling", "degeneracy", "gap", "expected_gap", "subspace_fidelity"]);
    let mut rows = vec![];
    for &j in &sec.couplings {
        if !(j > 0.0) {
            return Err(RunError::Config(format!("spectrum coupling {j} must be positive")));
        }
        // J Σσ·σ is model coupling 4J
        let m = CouplingModel::complete(4, &[0, 1, 2, 3], 4.0 * j)?;
        let levels = spectrum(&m, 0.0, 3)?;
        let (e0, deg) = levels[0];
        let gap = levels[1].0 - e0;
        let ground: Vec<_> = eigenstates(&m, 0.0)?.into_iter().filter(|(e, _)| (e - e0).abs() < 1e-9).collect();
        let fid = ground.iter().flat_map(|(_, g)| code.iter().map(move |c| c.inner(g).norm_sqr())).sum::<f64>()
            / ground.len().max(code.len()) as f64;
        out.checks.push(Check::flag(format!("degeneracy_j{j}"), deg == 2));
        out.checks.push(Check::below(format!("gap_error_j{j}"), (gap - 4.0 * j).abs(), 1e-10));
        out.checks.push(Check::above(format!("subspace_fidelity_j{j}"), fid, 1.0 - sec.fidelity_tolerance));
        t.push(vec![cell(j), deg.to_string(), cell(gap), cell(4.0 * j), cell(fid)]);
        rows.push(json!({"coupling": j, "degeneracy": deg, "gap": gap, "subspace_fidelity": fid}));
    }
    let reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1)?;
    let mut p = Table::new("projected_paulis.csv", &["site", "axis", "norm"]);
    let mut worst: f64 = 0.0;
    for site in 0..4 {
        for (name, axis) in [("x", PauliAxis::X), ("y", PauliAxis::Y), ("z", PauliAxis::Z)] {
            let n = reg.projected_operator(&LocalOperator::<f64>::pauli(site, axis)?)?.operator_norm();
            worst = worst.max(n);
            p.push(vec![(site + 1).to_string(), name.into(), cell(n)]);
        }
    }
    out.checks.push(Check::below("max_projected_pauli_norm", worst, sec.projection_tolerance));
    out.result("levels", rows);
    out.result("max_projected_pauli_norm", worst);
    out.tables.push(t);
    out.tables.push(p);
    Ok(out)
}

fn mbqc_rotation(s: &Scenario) -> Result<Outcome, RunError> {
    let sec = s.mbqc.clone().unwrap_or_default();
    if sec.rotations == 0 || (sec.branches == BranchMode::Sampled && sec.samples == 0) {
        return Err(RunError::Config("mbqc needs at least one rotation and one sample".into()));
    }
    let lattice = lattice_of(s)?;
    let cfg = build_config(s);
    let b = build_cluster(&lattice, &make_schedule(&lattice)?, &cfg)?;
    let output = lattice.lq_count() - 1;

    // angles and run seeds are drawn up front so the result does not depend
    // on how rotations are spread over threads
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let jobs: Vec<([f64; 3], Vec<u64>)> = (0..sec.rotations)
        .map(|_| {
            let a = [(); 3].map(|_| rng.gen_range(-PI..PI));
            let seeds = (0..sec.samples).map(|_| rng.gen()).collect();
            (a, seeds)
        })
        .collect();
    let plus = [Complex::new(FRAC_1_SQRT_2, 0.0); 2];
    let results: Vec<Vec<(PatternRun<f64>, f64)>> = jobs
        .par_iter()
        .map(|([xi, eta, zeta], seeds)| -> Result<_, RunError> {
            let p = compile_rotation_chain(*xi, *eta, *zeta);
            let target = rotation_chain_target(*xi, *eta, *zeta).apply(&plus);
            let runs = match sec.branches {
                BranchMode::All => enumerate_branches(&b.state, &p, &lattice.register, &cfg.device)?,
                BranchMode::Sampled => seeds
                    .iter()
                    .map(|&k| run_pattern(&b.state, &p, &lattice.register, k, &cfg.device))
                    .collect::<crate::Result<_>>()?,
            };
            runs.into_iter()
                .map(|r| {
                    let rho = output_density(&r.state, &lattice.register, output, &r.frame)?;
                    let f = density_fidelity(&rho, &target);
                    Ok((r, f))
                })
                .collect()
        })
        .collect::<Result<_, RunError>>()?;

    let mut out = Outcome::default();
    let mut rot = Table::new("rotations.csv", &["rotation", "xi", "eta", "zeta", "runs", "min_fidelity"]);
    let mut log = Table::new("outcomes.csv", &["rotation", "run", "step", "lq", "basis", "angle", "outcome", "probability"]);
    let mut worst = 1.0f64;
    let mut min_runs = usize::MAX;
    for (k, ((a, _), runs)) in jobs.iter().zip(&results).enumerate() {
        let m = runs.iter().map(|r| r.1).fold(1.0, f64::min);
        worst = worst.min(m);
        min_runs = min_runs.min(runs.len());
        rot.push(vec![k.to_string(), cell(a[0]), cell(a[1]), cell(a[2]), runs.len().to_string(), cell(m)]);
        for (j, (r, _)) in runs.iter().enumerate() {
            for o in &r.outcomes {
                log.push(vec![
                    k.to_string(),
                    j.to_string(),
                    o.step.to_string(),
                    o.lq.to_string(),
                    o.basis.clone(),
                    cell(o.angle),
                    o.outcome.to_string(),
                    cell(o.probability),
                ]);
            }
        }
    }
    out.checks.push(Check::below("max_infidelity", 1.0 - worst, sec.tolerance));
    if sec.branches == BranchMode::All {
        out.checks.push(Check::flag("all_branches_run", min_runs == 16));
    }
    out.result("rotations", sec.rotations);
    out.result("runs", results.iter().map(Vec::len).sum::<usize>());
    out.result("min_fidelity", worst);
    out.result("build_leakage", b.leakage);
    out.tables.push(rot);
    out.tables.push(log);
    Ok(out)
}

fn error_sweep(s: &Scenario) -> Result<Outcome, RunError> {
    let sec = s.error.clone().unwrap_or_else(ErrorSection::full);
    let d = &s.device;
    let mut out = Outcome::default();
    if let Some(dr) = &sec.drift {
        if dr.deltas.len() < 2 {
            return Err(RunError::Config("drift needs at least two deltas".into()));
        }
        let reps: Vec<_> =
            dr.deltas.iter().map(|&delta| sq_mismatch_drift(d, dr.pair, delta, dr.t)).collect::<crate::Result<_>>()?;
        let measured = linear_fit(&dr.deltas, &reps.iter().map(|r| r.coefficient).collect::<Vec<_>>());
        let predicted = linear_fit(&dr.deltas, &reps.iter().map(|r| r.predicted).collect::<Vec<_>>());
        let rel = (measured.slope / predicted.slope - 1.0).abs();
        out.checks.push(Check::below("drift_slope_relative_error", rel, dr.slope_tolerance));
        let mut t = Table::new("drift.csv", &["delta", "coefficient", "predicted", "axis_x", "axis_y", "axis_z", "leakage"]);
        for r in &reps {
            t.push(vec![
                cell(r.delta),
                cell(r.coefficient),
                cell(r.predicted),
                cell(r.axis[0]),
                cell(r.axis[1]),
                cell(r.axis[2]),
                cell(r.leakage),
            ]);
        }
        out.result("drift", json!({"measured_fit": measured, "predicted_fit": predicted}));
        out.tables.push(t);
    }
    if let Some(rf) = &sec.refocus {
        let r = sq_mismatch_refocusing(d, rf.pair, rf.delta, rf.t, rf.axis)?;
        out.checks.push(Check::below("refocused_infidelity", r.refocused_infidelity, rf.tolerance));
        let mut t = Table::new("refocus.csv", &["delta", "t", "unrefocused_infidelity", "refocused_infidelity", "leakage"]);
        t.push(vec![cell(r.delta), cell(r.t), cell(r.unrefocused_infidelity), cell(r.refocused_infidelity), cell(r.leakage)]);
        out.result("refocus", &r);
        out.tables.push(t);
    }
    if let Some(im) = &sec.imbalance {
        let template = InterSqCoupling::standard(d, im.hold)?;
        let sw = imbalance_sweep(d, &template, &im.grid)?;
        out.checks.push(Check::above("beta_difference_r_squared", sw.beta_difference_fit.r_squared, im.r_squared));
        out.checks.push(Check::below("imbalance_max_offdiag", sw.max_offdiag, im.offdiag_tolerance));
        let mut t = Table::new(
            "imbalance.csv",
            &["parameter", "alpha", "beta1", "beta2", "offdiag_residual", "leakage", "flagged"],
        );
        for p in &sw.points {
            t.push(vec![
                cell(p.delta),
                cell(p.alpha),
                cell(p.beta1),
                cell(p.beta2),
                cell(p.offdiag_residual),
                cell(p.leakage),
                p.flagged.to_string(),
            ]);
        }
        out.result(
            "imbalance",
            json!({
                "beta_difference_fit": sw.beta_difference_fit,
                "alpha_odd": sw.alpha_odd,
                "alpha_even": sw.alpha_even,
                "beta_odd": sw.beta_odd,
                "beta_even": sw.beta_even,
                "max_offdiag": sw.max_offdiag,
            }),
        );
        out.tables.push(t);
    }
    if let Some(rs) = &sec.residual {
        // B of LQ 0 sits next to A of LQ 1
        let reg = two_dot_pair_register();
        let bg = CouplingModel::new(4);
        let mut t = Table::new("residual.csv", &["magnitude", "t", "infidelity", "series", "ratio", "leakage"]);
        let mut worst: f64 = 0.0;
        for &eps in &rs.magnitudes {
            let spec = ErrorSpec::new(ErrorKind::ResidualInter, eps, vec![(1, 2)]);
            let r = residual_idle(&reg, &bg, &spec, rs.t)?;
            let ratio = r.infidelity / ((eps * rs.t).powi(2) * r.series);
            worst = worst.max((ratio - 1.0).abs());
            t.push(vec![cell(eps), cell(rs.t), cell(r.infidelity), cell(r.series), cell(ratio), cell(r.leakage)]);
        }
        out.checks.push(Check::below("residual_series_ratio_error", worst, 0.01));
        out.tables.push(t);
    }
    if out.checks.is_empty() {
        return Err(RunError::Config("error section selects no sweep".into()));
    }
    Ok(out)
}

fn probe(s: &Scenario) -> Result<Outcome, RunError> {
    let sec = s.probe.clone().unwrap_or_default();
    let d = &s.device;
    let peak = sec.peak.unwrap_or(d.inter_peak());
    let ramp_for = |duration: f64| RampProfile::new(d.ramp_shape, duration, peak);
    let (_, main) = single_edge_probe(d, sec.edge, ramp_for(d.ramp_duration)?, sec.hold)?;
    let mut out = Outcome::default();
    out.checks.push(Check::below("probe_infidelity", main.infidelity, sec.tolerance));
    let sweep: Vec<_> = sec
        .durations
        .par_iter()
        .map(|&dur| Ok(single_edge_probe(d, sec.edge, ramp_for(dur)?, sec.hold)?.1))
        .collect::<Result<_, RunError>>()?;
    if sweep.len() >= 2 {
        let monotone = sweep.windows(2).all(|w| w[1].leakage <= w[0].leakage);
        out.checks.push(Check::flag("leakage_monotone_in_duration", monotone));
    }
    let mut t = Table::new("probe.csv", &["ramp_duration", "peak", "infidelity", "leakage", "offdiag_residual"]);
    for r in std::iter::once(&main).chain(&sweep) {
        t.push(vec![cell(r.ramp_duration), cell(r.peak), cell(r.infidelity), cell(r.leakage), cell(r.offdiag_residual)]);
    }
    out.result("probe", &main);
    out.result("sweep", &sweep);
    out.tables.push(t);
    Ok(out)
}
