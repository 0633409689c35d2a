//! Subcommand implementations behind the thin CLI binary.
//!
//! Each command returns `Ok(all_checks_passed)`: the binary maps `Ok(true)`
//! to exit 0, `Ok(false)` to exit 1 (a check ran and failed), and `Err` to
//! exit 2 (bad input, bad flags, or I/O trouble). Commands print one line
//! per check naming it and its outcome, write their JSON/CSV artifacts
//! under `--out`, and keep every random draw downstream of the single
//! top-level seed: child seeds are taken sequentially from one ChaCha12
//! stream in a fixed documented order, so reports are reproducible from
//! the seed alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::discretize::{
    histogram_assign, joint_counts, kmeans_assign, DiscretizeConfig, EmbeddingMatrix, LabelVector,
};
use crate::dist::JointDistribution;
use crate::error::{Error, Result};
use crate::io;
use crate::oracle::{certify, GridOracleConfig};
use crate::pid::{decompose, PidResult};
use crate::report::{
    bench_csv, fusion_csv, gates_csv, layers_csv, percent_2dp, sweep_csv, to_json_pretty,
    AnalysisReport, AnalyzeConfigEcho, BenchReport, BenchRow, FusionReport, FusionRuleReport,
    GateReport, InputDigest, LayerEntry, LayerwiseReport, Provenance, SweepEntry, Timing,
    TraceSummary, SCHEMA_VERSION,
};
use crate::solver::{solve, SolverConfig};
use crate::synth::{fusion_samples, gate_distribution, FusionRule, GateKind};

/// How embeddings become labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Kmeans,
    Histogram,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kmeans => "kmeans",
            Method::Histogram => "histogram",
        }
    }
}

/// Default threshold below which fusion reports carry a small-sample flag.
pub const SMALL_SAMPLE_THRESHOLD: usize = 10_000;

/// Fixed solver setting for benchmarking: tolerances far below reach pin
/// the outer loop at exactly `max_outer` iterations and every inner loop at
/// `max_sinkhorn` updates, so measured time per outer iteration tracks the
/// support size rather than convergence luck.
pub fn bench_solver_config() -> SolverConfig {
    SolverConfig {
        max_outer: 5,
        max_sinkhorn: 50,
        tol_outer: 1e-300,
        tol_sinkhorn: 1e-300,
        epsilon_floor: 1e-12,
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn check_line(pass: bool, name: &str, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {name}: {detail}");
}

pub struct GatesArgs {
    pub out: PathBuf,
    pub tol_bits: f64,
    pub solver: SolverConfig,
}

/// Decompose and certify all five reference gates.
pub fn cmd_gates(args: &GatesArgs) -> Result<bool> {
    args.solver.validate()?;
    ensure_out_dir(&args.out)?;
    let oracle_cfg = GridOracleConfig::default();
    let mut all_pass = true;
    let mut csv_rows = Vec::new();

    for kind in GateKind::ALL {
        let start = Instant::now();
        let p = gate_distribution(kind);
        let coupling = solve(&p, &args.solver)?;
        let pid = decompose(&p, &coupling)?;
        let cert = certify(&p, &coupling, &oracle_cfg, args.tol_bits)?;
        let mut timing = Timing::default();
        timing.push("solve_and_certify", start.elapsed().as_secs_f64());

        check_line(
            cert.pass,
            &format!("gate {}", kind.name()),
            &format!(
                "R={:.6} U1={:.6} U2={:.6} S={:.6} |gap|={:.3e} tol={:.1e} stop={}",
                pid.redundancy,
                pid.unique_1,
                pid.unique_2,
                pid.synergy,
                cert.gap_bits.abs(),
                args.tol_bits,
                coupling.trace.stop_reason,
            ),
        );
        all_pass &= cert.pass;
        let report = GateReport {
            schema_version: SCHEMA_VERSION,
            gate: kind.name().to_string(),
            solver: args.solver,
            tol_bits: args.tol_bits,
            pid: pid.clone(),
            certification: cert,
            trace: TraceSummary::from_trace(&coupling.trace),
            provenance: Provenance::new(None, vec![]),
            timing,
        };
        io::write_text(
            &args.out.join(format!("gate_{}.json", kind.name())),
            &to_json_pretty(&report),
        )?;
        csv_rows.push((kind.name().to_string(), pid, cert.gap_bits));
    }

    io::write_text(&args.out.join("gates.csv"), &gates_csv(&csv_rows))?;
    Ok(all_pass)
}

pub struct FusionArgs {
    pub out: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub bins: usize,
    pub solver: SolverConfig,
}

/// Run the five synthetic fusion rules and check contribution ordering.
pub fn cmd_fusion(args: &FusionArgs) -> Result<bool> {
    args.solver.validate()?;
    if args.n < 100 {
        return Err(Error::InvalidConfig(format!(
            "fusion needs at least 100 samples, got {}",
            args.n
        )));
    }
    if args.bins < 2 {
        return Err(Error::InvalidConfig(
            "fusion needs at least 2 histogram bins".to_string(),
        ));
    }
    ensure_out_dir(&args.out)?;

    let mut seed_stream = ChaCha12Rng::seed_from_u64(args.seed);
    let mut rules = Vec::new();
    let mut timing = Timing::default();
    let mut c2_by_rule = BTreeMap::new();
    let mut gap_by_rule = BTreeMap::new();

    for rule in FusionRule::standard_five() {
        let child_seed: u64 = seed_stream.random();
        let start = Instant::now();
        let samples = fusion_samples(rule, args.n, child_seed)?;
        let l1 = histogram_assign(&samples.x1, args.bins)?;
        let l2 = histogram_assign(&samples.x2, args.bins)?;
        let ly = histogram_assign(&samples.y, args.bins)?;
        let counts = joint_counts(&l1, &l2, &ly)?;
        let p = JointDistribution::from_counts(&counts)?;
        let coupling = solve(&p, &args.solver)?;
        let pid = decompose(&p, &coupling)?;
        timing.push(&rule.name(), start.elapsed().as_secs_f64());

        c2_by_rule.insert(rule.name().to_string(), pid.c2);
        gap_by_rule.insert(rule.name().to_string(), (pid.c1 - pid.c2).abs());
        rules.push(FusionRuleReport {
            rule: rule.name().to_string(),
            c1: pid.c1,
            c2: pid.c2,
            c1_percent: percent_2dp(pid.c1),
            c2_percent: percent_2dp(pid.c2),
            degenerate: pid.degenerate_contributions,
            pid,
            trace: TraceSummary::from_trace(&coupling.trace),
        });
    }

    let c2 = |name: &str| c2_by_rule[name];
    let ordering_pass = c2("only_second") > c2("weighted_100")
        && c2("weighted_100") > c2("weighted_10")
        && c2("weighted_10") > c2("add");
    let balance_pass = gap_by_rule["add"] < 0.1 && gap_by_rule["mul"] < 0.1;
    let small_sample_warning = args.n < SMALL_SAMPLE_THRESHOLD;

    check_line(
        ordering_pass,
        "fusion ordering",
        &format!(
            "c2: only_second={:.4} > weighted_100={:.4} > weighted_10={:.4} > add={:.4}",
            c2("only_second"),
            c2("weighted_100"),
            c2("weighted_10"),
            c2("add"),
        ),
    );
    check_line(
        balance_pass,
        "fusion balance",
        &format!(
            "|c1-c2|: add={:.4} mul={:.4} (limit 0.1)",
            gap_by_rule["add"], gap_by_rule["mul"],
        ),
    );
    if small_sample_warning {
        println!(
            "[WARN] fusion sample size: n={} is below {}; contribution scores are noisy",
            args.n, SMALL_SAMPLE_THRESHOLD
        );
    }

    let report = FusionReport {
        schema_version: SCHEMA_VERSION,
        n: args.n,
        bins: args.bins,
        solver: args.solver,
        rules,
        ordering_pass,
        balance_pass,
        small_sample_warning,
        provenance: Provenance::new(Some(args.seed), vec![]),
        timing,
    };
    io::write_text(&args.out.join("fusion.json"), &to_json_pretty(&report))?;
    io::write_text(&args.out.join("fusion.csv"), &fusion_csv(&report.rules))?;
    Ok(ordering_pass && balance_pass)
}

pub struct AnalyzeArgs {
    pub x1: PathBuf,
    pub x2: PathBuf,
    pub y: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub method: Method,
    pub discretize: DiscretizeConfig,
    pub solver: SolverConfig,
    /// Extra `(k1, k2, ky)` settings to evaluate alongside the main run.
    pub sweep: Vec<(usize, usize, usize)>,
}

struct TripleOutcome {
    pid: PidResult,
    trace: TraceSummary,
    rows: usize,
}

fn assign_labels(
    x: &EmbeddingMatrix,
    k: usize,
    method: Method,
    seed: u64,
    cfg: &DiscretizeConfig,
) -> Result<LabelVector> {
    match method {
        Method::Kmeans => {
            let (labels, _) = kmeans_assign(x, k, seed, cfg.kmeans_max_iters, cfg.kmeans_restarts)?;
            Ok(labels)
        }
        Method::Histogram => histogram_assign(&x.scalar_column()?, k),
    }
}

fn analyze_triple(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    y: &EmbeddingMatrix,
    method: Method,
    k: (usize, usize, usize),
    seeds: (u64, u64, u64),
    dcfg: &DiscretizeConfig,
    solver_cfg: &SolverConfig,
) -> Result<TripleOutcome> {
    let l1 = assign_labels(x1, k.0, method, seeds.0, dcfg)?;
    let l2 = assign_labels(x2, k.1, method, seeds.1, dcfg)?;
    let ly = assign_labels(y, k.2, method, seeds.2, dcfg)?;
    let counts = joint_counts(&l1, &l2, &ly)?;
    let p = JointDistribution::from_counts(&counts)?;
    let coupling = solve(&p, solver_cfg)?;
    let pid = decompose(&p, &coupling)?;
    Ok(TripleOutcome {
        pid,
        trace: TraceSummary::from_trace(&coupling.trace),
        rows: l1.len(),
    })
}

fn load_aligned_triple(
    x1_path: &Path,
    x2_path: &Path,
    y_path: &Path,
) -> Result<(EmbeddingMatrix, EmbeddingMatrix, EmbeddingMatrix)> {
    let x1 = io::read_embedding_file(x1_path)?;
    let x2 = io::read_embedding_file(x2_path)?;
    let y = io::read_embedding_file(y_path)?;
    for (other, other_path) in [(&x2, x2_path), (&y, y_path)] {
        if other.rows() != x1.rows() {
            return Err(Error::RowCountMismatch {
                left: x1_path.to_path_buf(),
                left_rows: x1.rows(),
                right: other_path.to_path_buf(),
                right_rows: other.rows(),
            });
        }
    }
    Ok((x1, x2, y))
}

/// Decompose one aligned triple of embedding files.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<bool> {
    args.solver.validate()?;
    args.discretize.validate()?;
    ensure_out_dir(&args.out)?;

    let start = Instant::now();
    let (x1, x2, y) = load_aligned_triple(&args.x1, &args.x2, &args.y)?;
    let mut timing = Timing::default();
    timing.push("load", start.elapsed().as_secs_f64());

    // Child-seed order: three draws for the main run, then three per sweep
    // entry; identical for both methods so reports stay comparable.
    let mut seed_stream = ChaCha12Rng::seed_from_u64(args.seed);
    let mut next_three = move || {
        (
            seed_stream.random::<u64>(),
            seed_stream.random::<u64>(),
            seed_stream.random::<u64>(),
        )
    };

    let start = Instant::now();
    let main_k = (args.discretize.k1, args.discretize.k2, args.discretize.ky);
    let outcome = analyze_triple(
        &x1,
        &x2,
        &y,
        args.method,
        main_k,
        next_three(),
        &args.discretize,
        &args.solver,
    )?;
    timing.push("decompose", start.elapsed().as_secs_f64());

    let start = Instant::now();
    let mut sweep = Vec::new();
    for &(k1, k2, ky) in &args.sweep {
        let entry = analyze_triple(
            &x1,
            &x2,
            &y,
            args.method,
            (k1, k2, ky),
            next_three(),
            &args.discretize,
            &args.solver,
        )?;
        sweep.push(SweepEntry {
            k1,
            k2,
            ky,
            pid: entry.pid,
        });
    }
    if !args.sweep.is_empty() {
        timing.push("sweep", start.elapsed().as_secs_f64());
    }

    let pid = outcome.pid;
    println!(
        "analysis: R={:.6} U1={:.6} U2={:.6} S={:.6} C1={:.2}% C2={:.2}%{}",
        pid.redundancy,
        pid.unique_1,
        pid.unique_2,
        pid.synergy,
        percent_2dp(pid.c1),
        percent_2dp(pid.c2),
        if pid.degenerate_contributions {
            " (degenerate: unique parts near zero)"
        } else {
            ""
        },
    );

    let report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        config: AnalyzeConfigEcho {
            method: args.method.name().to_string(),
            k1: args.discretize.k1,
            k2: args.discretize.k2,
            ky: args.discretize.ky,
            kmeans_max_iters: args.discretize.kmeans_max_iters,
            kmeans_restarts: args.discretize.kmeans_restarts,
            solver: args.solver,
        },
        rows: outcome.rows,
        support: main_k,
        c1_percent: percent_2dp(pid.c1),
        c2_percent: percent_2dp(pid.c2),
        pid,
        trace: outcome.trace,
        sweep,
        provenance: Provenance::new(
            Some(args.seed),
            vec![
                InputDigest::of(&args.x1)?,
                InputDigest::of(&args.x2)?,
                InputDigest::of(&args.y)?,
            ],
        ),
        timing,
    };
    if !report.sweep.is_empty() {
        io::write_text(&args.out.join("sweep.csv"), &sweep_csv(&report.sweep))?;
    }
    io::write_text(&args.out.join("analysis.json"), &to_json_pretty(&report))?;
    Ok(true)
}

pub struct LayersArgs {
    pub dir: PathBuf,
    pub out: PathBuf,
    pub pattern: String,
    pub seed: u64,
    pub method: Method,
    pub discretize: DiscretizeConfig,
    pub solver: SolverConfig,
}

const LAYER_VARS: [&str; 3] = ["x1", "x2", "y"];

/// Match `name` against `pattern` with `{var}` fixed; the `{layer}` span
/// must be all digits. Returns the parsed index and its raw digit string.
fn match_layer_name(pattern: &str, var: &str, name: &str) -> Option<(usize, String)> {
    let concrete = pattern.replace("{var}", var);
    let (prefix, suffix) = concrete.split_once("{layer}")?;
    let digits = name.strip_prefix(prefix)?.strip_suffix(suffix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<usize>().ok().map(|i| (i, digits.to_string()))
}

struct LayerFiles {
    digits: String,
    paths: [Option<PathBuf>; 3],
}

fn scan_layer_dir(dir: &Path, pattern: &str) -> Result<BTreeMap<usize, LayerFiles>> {
    let mut layers: BTreeMap<usize, LayerFiles> = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        for (slot, var) in LAYER_VARS.iter().enumerate() {
            if let Some((index, digits)) = match_layer_name(pattern, var, name) {
                let files = layers.entry(index).or_insert_with(|| LayerFiles {
                    digits: digits.clone(),
                    paths: [None, None, None],
                });
                if let Some(existing) = &files.paths[slot] {
                    return Err(Error::InvalidConfig(format!(
                        "layer {index} has two {var} files: {} and {}",
                        existing.display(),
                        entry.path().display()
                    )));
                }
                files.paths[slot] = Some(entry.path());
                break;
            }
        }
    }
    Ok(layers)
}

/// Decompose every complete layer triple in a directory, in layer order.
pub fn cmd_layers(args: &LayersArgs) -> Result<bool> {
    args.solver.validate()?;
    args.discretize.validate()?;
    if args.pattern.matches("{layer}").count() != 1
        || args.pattern.matches("{var}").count() != 1
    {
        return Err(Error::InvalidConfig(format!(
            "layer pattern must contain `{{layer}}` and `{{var}}` exactly once, got `{}`",
            args.pattern
        )));
    }
    ensure_out_dir(&args.out)?;

    let layers = scan_layer_dir(&args.dir, &args.pattern)?;
    if layers.is_empty() {
        return Err(Error::IncompleteTriple {
            layer: "none found".to_string(),
            missing: format!("files matching `{}` in {}", args.pattern, args.dir.display()),
        });
    }
    for (index, files) in &layers {
        for (slot, var) in LAYER_VARS.iter().enumerate() {
            if files.paths[slot].is_none() {
                return Err(Error::IncompleteTriple {
                    layer: index.to_string(),
                    missing: args
                        .pattern
                        .replace("{layer}", &files.digits)
                        .replace("{var}", var),
                });
            }
        }
    }

    let mut seed_stream = ChaCha12Rng::seed_from_u64(args.seed);
    let mut entries = Vec::new();
    let mut digests = Vec::new();
    let mut timing = Timing::default();
    for (&index, files) in &layers {
        let [x1_path, x2_path, y_path] = files
            .paths
            .clone()
            .map(|p| p.expect("completeness checked above"));
        let start = Instant::now();
        let (x1, x2, y) = load_aligned_triple(&x1_path, &x2_path, &y_path)?;
        let seeds = (
            seed_stream.random::<u64>(),
            seed_stream.random::<u64>(),
            seed_stream.random::<u64>(),
        );
        let outcome = analyze_triple(
            &x1,
            &x2,
            &y,
            args.method,
            (args.discretize.k1, args.discretize.k2, args.discretize.ky),
            seeds,
            &args.discretize,
            &args.solver,
        )?;
        timing.push(&format!("layer_{index}"), start.elapsed().as_secs_f64());
        println!(
            "layer {index}: R={:.6} U1={:.6} U2={:.6} S={:.6} C1={:.2}% C2={:.2}%",
            outcome.pid.redundancy,
            outcome.pid.unique_1,
            outcome.pid.unique_2,
            outcome.pid.synergy,
            percent_2dp(outcome.pid.c1),
            percent_2dp(outcome.pid.c2),
        );
        for path in [&x1_path, &x2_path, &y_path] {
            digests.push(InputDigest::of(path)?);
        }
        entries.push(LayerEntry {
            layer: index,
            c1_percent: percent_2dp(outcome.pid.c1),
            c2_percent: percent_2dp(outcome.pid.c2),
            pid: outcome.pid,
            trace: outcome.trace,
        });
    }

    let report = LayerwiseReport {
        schema_version: SCHEMA_VERSION,
        config: AnalyzeConfigEcho {
            method: args.method.name().to_string(),
            k1: args.discretize.k1,
            k2: args.discretize.k2,
            ky: args.discretize.ky,
            kmeans_max_iters: args.discretize.kmeans_max_iters,
            kmeans_restarts: args.discretize.kmeans_restarts,
            solver: args.solver,
        },
        layers: entries,
        provenance: Provenance::new(Some(args.seed), digests),
        timing,
    };
    io::write_text(&args.out.join("layers.json"), &to_json_pretty(&report))?;
    io::write_text(&args.out.join("layers.csv"), &layers_csv(&report.layers))?;
    Ok(true)
}

pub struct BenchArgs {
    pub out: PathBuf,
    pub sizes: Vec<(usize, usize, usize)>,
    pub repeats: usize,
    pub seed: u64,
}

/// Time the solver across support sizes at a pinned iteration budget.
pub fn cmd_bench(args: &BenchArgs) -> Result<bool> {
    if args.repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".to_string()));
    }
    if args.sizes.is_empty() {
        return Err(Error::InvalidConfig("at least one support size is required".to_string()));
    }
    for &(m, n, k) in &args.sizes {
        if m < 2 || n < 2 || k < 2 {
            return Err(Error::InvalidConfig(format!(
                "support sizes must be at least 2x2x2, got {m}x{n}x{k}"
            )));
        }
    }
    ensure_out_dir(&args.out)?;

    let cfg = bench_solver_config();
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    let mut timing = Timing::default();
    for &(m, n, k) in &args.sizes {
        let mut counts = Array3::zeros((m, n, k));
        counts.mapv_inplace(|_: f64| rng.random::<f64>() + 0.05);
        let p = JointDistribution::from_counts(&counts)?;

        let start = Instant::now();
        let mut outer_iters = 0usize;
        for _ in 0..args.repeats {
            let coupling = solve(&p, &cfg)?;
            outer_iters += coupling.trace.outer_iters_used;
        }
        let elapsed = start.elapsed().as_secs_f64();
        let mean_iter_seconds = elapsed / outer_iters as f64;
        println!("bench {m}x{n}x{k}: {mean_iter_seconds:.6e} s/iteration over {outer_iters} iterations");
        timing.push(&format!("{m}x{n}x{k}"), elapsed);
        rows.push(BenchRow {
            m,
            n,
            k,
            mean_iter_seconds,
        });
    }

    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        repeats: args.repeats,
        solver: cfg,
        rows,
        timing,
    };
    io::write_text(&args.out.join("bench.json"), &to_json_pretty(&report))?;
    io::write_text(&args.out.join("bench.csv"), &bench_csv(&report.rows))?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_names_parse_with_zero_padding() {
        let pat = "layer{layer}_{var}.csv";
        assert_eq!(
            match_layer_name(pat, "x1", "layer03_x1.csv"),
            Some((3, "03".to_string()))
        );
        assert_eq!(
            match_layer_name(pat, "y", "layer12_y.csv"),
            Some((12, "12".to_string()))
        );
        assert_eq!(match_layer_name(pat, "x1", "layer03_x2.csv"), None);
        assert_eq!(match_layer_name(pat, "x1", "layer_x1.csv"), None);
        assert_eq!(match_layer_name(pat, "x1", "layerxx_x1.csv"), None);
        assert_eq!(match_layer_name(pat, "x1", "notes.txt"), None);
    }

    #[test]
    fn custom_patterns_work() {
        let pat = "emb.{var}.{layer}.jsonl";
        assert_eq!(
            match_layer_name(pat, "x2", "emb.x2.7.jsonl"),
            Some((7, "7".to_string()))
        );
        assert_eq!(match_layer_name(pat, "x2", "emb.x2..jsonl"), None);
    }

    #[test]
    fn bench_rejects_zero_repeats_and_tiny_supports() {
        let args = BenchArgs {
            out: std::env::temp_dir(),
            sizes: vec![(4, 4, 4)],
            repeats: 0,
            seed: 0,
        };
        assert!(matches!(cmd_bench(&args).unwrap_err(), Error::InvalidConfig(_)));

        let args = BenchArgs {
            out: std::env::temp_dir(),
            sizes: vec![(1, 4, 4)],
            repeats: 1,
            seed: 0,
        };
        assert!(matches!(cmd_bench(&args).unwrap_err(), Error::InvalidConfig(_)));
    }

    #[test]
    fn fusion_rejects_undersized_runs() {
        let args = FusionArgs {
            out: std::env::temp_dir(),
            n: 99,
            seed: 0,
            bins: 8,
            solver: SolverConfig::default(),
        };
        assert!(matches!(cmd_fusion(&args).unwrap_err(), Error::InvalidConfig(_)));
    }
}
