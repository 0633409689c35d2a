//! Report schemas and CSV tables the command layer emits.
//!
//! JSON reports are versioned through `schema_version` and are
//! deterministic for fixed inputs and flags except the `timing` block,
//! which is always the last field so consumers can compare everything
//! before it byte for byte. CSV column names and order are part of the
//! public interface; the golden headers live here as constants and are
//! covered by tests.

use std::path::Path;

use crate::error::Result;
use crate::oracle::Certification;
use crate::pid::PidResult;
use crate::solver::{SolveTrace, SolverConfig, StopReason};

/// Bumped when any report layout changes shape.
pub const SCHEMA_VERSION: u32 = 1;

pub const GATES_CSV_HEADER: &str = "gate,R,U1,U2,S,oracle_gap";
pub const FUSION_CSV_HEADER: &str = "rule,c1,c2,degenerate";
pub const LAYERS_CSV_HEADER: &str = "layer,R,U1,U2,S,C1,C2";
pub const BENCH_CSV_HEADER: &str = "m,n,k,mean_iter_seconds";
pub const SWEEP_CSV_HEADER: &str = "k1,k2,ky,R,U1,U2,S,C1,C2";

/// Round a fraction to a percentage with two decimal places, the form the
/// human-facing fields use; full-precision fractions ride alongside.
pub fn percent_2dp(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}

/// Condensed view of a solve for reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceSummary {
    pub outer_iters_used: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub final_objective_nats: f64,
    pub final_marginal_err: f64,
    pub degenerate_labels: Vec<usize>,
}

impl TraceSummary {
    pub fn from_trace(trace: &SolveTrace) -> Self {
        TraceSummary {
            outer_iters_used: trace.outer_iters_used,
            converged: trace.converged,
            stop_reason: trace.stop_reason,
            final_objective_nats: trace.final_objective(),
            final_marginal_err: trace.final_marginal_err(),
            degenerate_labels: trace.degenerate_labels.clone(),
        }
    }
}

/// Fingerprint of one input file.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(InputDigest {
            path: path.display().to_string(),
            sha256: crate::io::sha256_hex(path)?,
        })
    }
}

/// Where a report's numbers came from: tool build, RNG family, seed, and
/// the exact bytes of every input file.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub rng_algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
}

impl Provenance {
    pub fn new(seed: Option<u64>, inputs: Vec<InputDigest>) -> Self {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            rng_algorithm: crate::synth::RNG_ALGORITHM.to_string(),
            seed,
            inputs,
        }
    }
}

/// Wall-clock seconds per named stage. Excluded from determinism
/// guarantees; always serialized last.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Timing {
    pub stages: Vec<StageTime>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageTime {
    pub name: String,
    pub seconds: f64,
}

impl Timing {
    pub fn push(&mut self, name: &str, seconds: f64) {
        self.stages.push(StageTime {
            name: name.to_string(),
            seconds,
        });
    }
}

/// One gate's decomposition with its certification verdict.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GateReport {
    pub schema_version: u32,
    pub gate: String,
    pub solver: SolverConfig,
    pub tol_bits: f64,
    pub pid: PidResult,
    pub certification: Certification,
    pub trace: TraceSummary,
    pub provenance: Provenance,
    pub timing: Timing,
}

/// One fusion rule's contribution scores.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FusionRuleReport {
    pub rule: String,
    pub c1: f64,
    pub c2: f64,
    pub c1_percent: f64,
    pub c2_percent: f64,
    pub degenerate: bool,
    pub pid: PidResult,
    pub trace: TraceSummary,
}

/// All five fusion rules plus the checked ordering properties.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FusionReport {
    pub schema_version: u32,
    pub n: usize,
    pub bins: usize,
    pub solver: SolverConfig,
    pub rules: Vec<FusionRuleReport>,
    /// `c2` strictly increases along add < weighted(10) < weighted(100) <
    /// only_second.
    pub ordering_pass: bool,
    /// add and mul keep `|c1 - c2| < 0.1`.
    pub balance_pass: bool,
    pub small_sample_warning: bool,
    pub provenance: Provenance,
    pub timing: Timing,
}

/// Echo of the knobs an analysis ran with.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AnalyzeConfigEcho {
    pub method: String,
    pub k1: usize,
    pub k2: usize,
    pub ky: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_restarts: usize,
    pub solver: SolverConfig,
}

/// Full decomposition of one embedding-file triple.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub config: AnalyzeConfigEcho,
    pub rows: usize,
    pub support: (usize, usize, usize),
    pub pid: PidResult,
    pub c1_percent: f64,
    pub c2_percent: f64,
    pub trace: TraceSummary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sweep: Vec<SweepEntry>,
    pub provenance: Provenance,
    pub timing: Timing,
}

/// One extra cluster-count setting evaluated alongside the main analysis.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepEntry {
    pub k1: usize,
    pub k2: usize,
    pub ky: usize,
    pub pid: PidResult,
}

/// Per-layer decompositions over a directory of embedding triples.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LayerwiseReport {
    pub schema_version: u32,
    pub config: AnalyzeConfigEcho,
    /// Layer indices are strictly increasing.
    pub layers: Vec<LayerEntry>,
    pub provenance: Provenance,
    pub timing: Timing,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LayerEntry {
    pub layer: usize,
    pub pid: PidResult,
    pub c1_percent: f64,
    pub c2_percent: f64,
    pub trace: TraceSummary,
}

/// Mean per-outer-iteration solve time across support sizes.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub repeats: usize,
    pub solver: SolverConfig,
    pub rows: Vec<BenchRow>,
    pub timing: Timing,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub mean_iter_seconds: f64,
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn gates_csv(rows: &[(String, PidResult, f64)]) -> String {
    csv_table(
        GATES_CSV_HEADER,
        rows.iter().map(|(gate, pid, gap)| {
            format!(
                "{gate},{},{},{},{},{}",
                pid.redundancy, pid.unique_1, pid.unique_2, pid.synergy, gap
            )
        }),
    )
}

pub fn fusion_csv(rules: &[FusionRuleReport]) -> String {
    csv_table(
        FUSION_CSV_HEADER,
        rules
            .iter()
            .map(|r| format!("{},{},{},{}", r.rule, r.c1, r.c2, r.degenerate)),
    )
}

pub fn layers_csv(layers: &[LayerEntry]) -> String {
    csv_table(
        LAYERS_CSV_HEADER,
        layers.iter().map(|l| {
            format!(
                "{},{},{},{},{},{},{}",
                l.layer,
                l.pid.redundancy,
                l.pid.unique_1,
                l.pid.unique_2,
                l.pid.synergy,
                l.pid.c1,
                l.pid.c2
            )
        }),
    )
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    csv_table(
        BENCH_CSV_HEADER,
        rows.iter()
            .map(|r| format!("{},{},{},{}", r.m, r.n, r.k, r.mean_iter_seconds)),
    )
}

pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    csv_table(
        SWEEP_CSV_HEADER,
        entries.iter().map(|e| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                e.k1,
                e.k2,
                e.ky,
                e.pid.redundancy,
                e.pid.unique_1,
                e.pid.unique_2,
                e.pid.synergy,
                e.pid.c1,
                e.pid.c2
            )
        }),
    )
}

/// Pretty JSON with a trailing newline, the fixed on-disk form.
pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
