//! JSON scenario runner: resolve a scenario file plus overrides, run one
//! experiment, write `summary.json` and CSV detail files.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for
//! configuration errors.

mod experiments;
mod overrides;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cluster::LatticeKind;
use crate::synthesis::Device;

pub use overrides::apply_override;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// The one key in `summary.json` that differs between identical reruns.
pub const TIMESTAMP_KEY: &str = "generated_at";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BuildCluster,
    VerifyGate,
    Spectrum,
    MbqcRotation,
    ErrorSweep,
    SingleEdgeProbe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BuildCluster => "build-cluster",
            Experiment::VerifyGate => "verify-gate",
            Experiment::Spectrum => "spectrum",
            Experiment::MbqcRotation => "mbqc-rotation",
            Experiment::ErrorSweep => "error-sweep",
            Experiment::SingleEdgeProbe => "single-edge-probe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleChoice {
    /// The lattice's staged schedule, checked for legality.
    #[default]
    Staged,
    /// Every edge at once; a negative control.
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildSection {
    pub two_dot_phi: Option<f64>,
    pub sq_hold: Option<f64>,
    pub unrefocused: bool,
    /// Overrides the per-encoding stabilizer threshold.
    pub threshold: Option<f64>,
    /// Overrides the per-encoding leakage limit.
    pub leakage_limit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    #[default]
    Ising,
    TwoDotIsing,
    InterSq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSection {
    pub kind: GateKind,
    pub tolerance: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        Self { kind: GateKind::Ising, tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// Values of `J` in `J Σ σ·σ`.
    pub couplings: Vec<f64>,
    pub fidelity_tolerance: f64,
    pub projection_tolerance: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { couplings: vec![0.5, 1.0, 2.0], fidelity_tolerance: 1e-10, projection_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchMode {
    /// All outcome strings with nonzero probability.
    All,
    /// One sampled run per rotation.
    #[default]
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MbqcSection {
    pub rotations: usize,
    pub branches: BranchMode,
    /// Sampled runs per rotation.
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for MbqcSection {
    fn default() -> Self {
        Self { rotations: 20, branches: BranchMode::Sampled, samples: 1, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    /// Spin labels 1–4 of the mismatched pair.
    pub pair: (usize, usize),
    pub deltas: Vec<f64>,
    pub t: f64,
    pub slope_tolerance: f64,
}

impl Default for DriftSection {
    fn default() -> Self {
        Self { pair: (1, 2), deltas: vec![0.005, 0.01, 0.02, 0.05], t: 10.0, slope_tolerance: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefocusSection {
    pub pair: (usize, usize),
    pub delta: f64,
    pub t: f64,
    /// Logical axis of the π pulses.
    pub axis: [f64; 3],
    pub tolerance: f64,
}

impl Default for RefocusSection {
    fn default() -> Self {
        Self { pair: (1, 2), delta: 0.02, t: 10.0, axis: [1.0, 0.0, 0.0], tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImbalanceSection {
    /// Relative imbalance `ΔJ_inter / J_peak`.
    pub grid: Vec<f64>,
    pub hold: f64,
    pub r_squared: f64,
    pub offdiag_tolerance: f64,
}

impl Default for ImbalanceSection {
    fn default() -> Self {
        Self { grid: vec![-0.2, -0.1, 0.0, 0.1, 0.2], hold: 400.0, r_squared: 0.999, offdiag_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSection {
    pub magnitudes: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorSection {
    pub drift: Option<DriftSection>,
    pub refocus: Option<RefocusSection>,
    pub imbalance: Option<ImbalanceSection>,
    /// Residual inter-LQ coupling on an idle two-dot pair.
    pub residual: Option<ResidualSection>,
}

impl ErrorSection {
    pub fn full() -> Self {
        Self {
            drift: Some(DriftSection::default()),
            refocus: Some(RefocusSection::default()),
            imbalance: Some(ImbalanceSection::default()),
            residual: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    /// `(spin on SQ 0, spin on SQ 1)`, labels 1–4.
    pub edge: (usize, usize),
    /// Defaults to the device inter-SQ peak.
    pub peak: Option<f64>,
    pub hold: f64,
    /// Extra ramp durations for a leakage-convergence sweep.
    pub durations: Vec<f64>,
    pub tolerance: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { edge: (1, 1), peak: None, hold: 10.0, durations: vec![], tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_path: String,
    #[serde(default)]
    pub device: Device<f64>,
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    #[serde(default)]
    pub schedule: ScheduleChoice,
    #[serde(default)]
    pub build: BuildSection,
    #[serde(default)]
    pub gate: Option<GateSection>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default)]
    pub mbqc: Option<MbqcSection>,
    #[serde(default)]
    pub error: Option<ErrorSection>,
    #[serde(default)]
    pub probe: Option<ProbeSection>,
}

fn default_output() -> String {
    "runs".into()
}

impl Scenario {
    /// Fills in the section of the named experiment when absent and checks
    /// that the experiment's inputs are present and sane.
    pub fn resolve(mut self) -> Result<Self, RunError> {
        let cfg = |m: String| Err(RunError::Config(m));
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            return cfg(format!("name {:?} must be a non-empty file-name-safe string", self.name));
        }
        match self.experiment {
            Experiment::BuildCluster | Experiment::MbqcRotation if self.lattice.is_none() => {
                return cfg(format!("{} needs a lattice section", self.experiment.name()));
            }
            Experiment::VerifyGate => {
                self.gate.get_or_insert_with(Default::default);
            }
            Experiment::Spectrum => {
                self.spectrum.get_or_insert_with(Default::default);
            }
            Experiment::MbqcRotation => {
                self.mbqc.get_or_insert_with(Default::default);
            }
            Experiment::ErrorSweep => {
                self.error.get_or_insert_with(ErrorSection::full);
            }
            Experiment::SingleEdgeProbe => {
                self.probe.get_or_insert_with(Default::default);
            }
            _ => {}
        }
        if let Some(l) = self.lattice {
            let n = l.rows * l.cols * l.kind.encoding().sites_per_lq();
            if n > l.kind.site_cap() {
                return Err(RunError::SiteBudget(format!("{}×{} {} lattice needs {n} sites, cap is {}", l.rows, l.cols, serde_json::to_string(&l.kind).unwrap_or_default(), l.kind.site_cap())));
            }
        }
        if self.experiment == Experiment::MbqcRotation {
            let l = self.lattice.expect("checked above");
            if l.rows * l.cols != 5 || l.rows != 1 {
                return cfg(format!("mbqc-rotation runs on a 1×5 chain, not {}×{}", l.rows, l.cols));
            }
        }
        Ok(self)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("site budget exceeded: {0}")]
    SiteBudget(String),
    #[error("{0}")]
    Io(String),
    #[error("simulation failed: {0}")]
    Simulation(#[from] crate::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            RunError::Config(_) | RunError::SiteBudget(_) | RunError::Io(_) => EXIT_CONFIG,
            RunError::Simulation(e) => match e {
                E::SiteBudget { .. }
                | E::Support(_)
                | E::Register(_)
                | E::Schedule(_)
                | E::Pattern(_)
                | E::GapClosure(_)
                | E::Model(_) => EXIT_CONFIG,
                _ => EXIT_CHECK_FAILED,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. `< 1e-12`.
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, tolerance: format!("< {bound:e}"), pass: value < bound }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, tolerance: format!("> {bound:e}"), pass: value > bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, tolerance: format!(">= {bound:e}"), pass: value >= bound }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: "== 1".into(), pass: ok }
    }
}

/// CSV detail file: header plus rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&'static str]) -> Self {
        Self { file: file.into(), header: header.to_vec(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Checks, results and detail tables of one experiment.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub results: serde_json::Map<String, Value>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn result(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(key.into(), serde_json::to_value(v).expect("serializable result"));
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub summary: Value,
    pub outcome: Outcome,
    pub exit_code: i32,
    pub dir: PathBuf,
}

/// Command-line adjustments to a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// `key=value` dotted-path overrides, applied in order.
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub force: bool,
}

/// Parses a scenario from JSON text after applying `overrides` and `seed`.
pub fn load_scenario(text: &str, overrides: &[String], seed: Option<u64>) -> Result<Scenario, RunError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let mut v: Value = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| RunError::Config(format!("malformed JSON near `{}`: {}", e.path(), e.inner())))?;
    de.end().map_err(|e| RunError::Config(format!("malformed JSON: {e}")))?;
    for o in overrides {
        apply_override(&mut v, o)?;
    }
    if let Some(s) = seed {
        apply_override(&mut v, &format!("seed={s}"))?;
    }
    let s: Scenario = serde_path_to_error::deserialize(&v).map_err(|e| {
        let path = e.path().to_string();
        RunError::Config(format!("field `{path}`: {}", e.into_inner()))
    })?;
    s.resolve()
}

/// SHA-256 of the resolved parameters in compact, key-sorted JSON.
pub fn scenario_hash(params: &Value) -> String {
    hex::encode(Sha256::digest(params.to_string().as_bytes()))
}

/// Runs the experiment and assembles the summary without touching disk.
pub fn execute(scenario: &Scenario) -> Result<(Value, Outcome), RunError> {
    let outcome = experiments::run(scenario)?;
    let params = serde_json::to_value(scenario).expect("serializable scenario");
    let pass = outcome.checks.iter().all(|c| c.pass);
    let summary = json!({
        "name": scenario.name,
        "experiment": scenario.experiment.name(),
        "scenario_hash": scenario_hash(&params),
        "parameters": params,
        "pass": pass,
        "checks": outcome.checks,
        "results": Value::Object(outcome.results.clone()),
        "files": outcome.tables.iter().map(|t| t.file.clone()).collect::<Vec<_>>(),
        TIMESTAMP_KEY: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    });
    Ok((summary, outcome))
}

/// `summary` with the timestamp removed, for rerun comparisons.
pub fn without_timestamp(summary: &Value) -> Value {
    let mut s = summary.clone();
    if let Some(m) = s.as_object_mut() {
        m.remove(TIMESTAMP_KEY);
    }
    s
}

fn write_tables(dir: &Path, tables: &[Table]) -> Result<(), RunError> {
    for t in tables {
        let path = dir.join(&t.file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
        w.write_record(&t.header).map_err(io)?;
        for r in &t.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Loads, runs and writes one scenario. Reports go to
/// `<out or output_path>/<name>/`.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<Report, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let scenario = load_scenario(&text, &opts.overrides, opts.seed)?;
    let base = opts.out.clone().unwrap_or_else(|| PathBuf::from(&scenario.output_path));
    let dir = base.join(&scenario.name);
    let summary_path = dir.join("summary.json");
    if summary_path.exists() && !opts.force {
        return Err(RunError::Config(format!("{} exists; pass --force to overwrite", summary_path.display())));
    }
    let (summary, outcome) = execute(&scenario)?;
    fs::create_dir_all(&dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    write_tables(&dir, &outcome.tables)?;
    let text = serde_json::to_string_pretty(&summary).expect("serializable summary") + "\n";
    fs::write(&summary_path, text).map_err(|e| RunError::Io(format!("{}: {e}", summary_path.display())))?;
    let exit_code = if outcome.checks.iter().all(|c| c.pass) { EXIT_PASS } else { EXIT_CHECK_FAILED };
    Ok(Report { summary, outcome, exit_code, dir })
}

#[cfg(test)]
mod tests;
