//! Experiment driver: learning phase, benchmark sweep, metrics and the files
//! the CLI writes.
//!
//! Every output is a headered CSV or JSON document whose bytes depend only on
//! the config, so reruns can be diffed directly. Wall-clock times are logged
//! but never written.

mod config;
pub mod validate;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{BenchmarkConfig, CurveConfig, ExperimentConfig, LearningConfig, ProblemClass};

use crate::error::{Error, Result};
use crate::optimize::{optimize_instance, CurveSet, Method, ObjectiveSpec, OptResult};
use crate::problems::{
    brute_force_extrema, gen_random_qubo, gen_regular_graph, maxcut_to_ising, qubo_to_ising, rescale_ising,
    IsingModel,
};
use crate::schedule::{fit_bezier, BezierGapCurve};
use crate::spectrum::{
    aggregate_profiles, sample_ensemble_gaps, uniform_grid, write_ensemble_csv, write_final_gaps_csv,
    write_paired_csv, Aggregation, EnsembleSpec, GapProfile,
};

pub const CURVE_MEAN_FILE: &str = "curve_mean.json";
pub const CURVE_MEDIAN_FILE: &str = "curve_median.json";
pub const ENSEMBLE_FILE: &str = "gap_profiles.csv";
pub const AGGREGATE_FILE: &str = "gap_aggregates.csv";
pub const FINAL_GAPS_FILE: &str = "final_gaps.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DIFFERENCE_FILE: &str = "ratio_difference.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Slack on the bracketing preconditions of the ratio functions.
const RATIO_TOL: f64 = 1e-9;

/// `(E_max - E) / (E_max - E_min)`.
pub fn approximation_ratio(energy: f64, e_min: f64, e_max: f64) -> Result<f64> {
    if !(e_max > e_min) {
        return Err(Error::invalid(format!("degenerate spectrum [{e_min}, {e_max}]")));
    }
    let tol = RATIO_TOL * e_min.abs().max(e_max.abs()).max(1.0);
    if !(energy >= e_min - tol && energy <= e_max + tol) {
        return Err(Error::invalid(format!("energy {energy} outside [{e_min}, {e_max}]")));
    }
    Ok((e_max - energy) / (e_max - e_min))
}

/// Expected cut over the maximum cut; the worst cut of any graph is 0.
pub fn maxcut_ratio(expected_cut: f64, c_max: f64) -> Result<f64> {
    if !(c_max > 0.0) {
        return Err(Error::invalid("maximum cut is zero (edgeless graph)"));
    }
    let tol = RATIO_TOL * c_max.max(1.0);
    if !(expected_cut >= -tol && expected_cut <= c_max + tol) {
        return Err(Error::invalid(format!("expected cut {expected_cut} outside [0, {c_max}]")));
    }
    Ok(expected_cut / c_max)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    software: &'a str,
    version: &'a str,
    command: &'a str,
    config_sha256: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

/// Records config hash, input and output hashes and the software version.
fn write_manifest(cfg: &ExperimentConfig, command: &str, dir: &Path, inputs: &[PathBuf], outputs: &[&str]) -> Result<PathBuf> {
    let hash_all = |paths: Vec<PathBuf>| -> Result<BTreeMap<String, String>> {
        paths
            .iter()
            .map(|p| {
                let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Ok((name, sha256_file(p)?))
            })
            .collect()
    };
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: cfg.hash(),
        inputs: hash_all(inputs.to_vec())?,
        outputs: hash_all(outputs.iter().map(|f| dir.join(f)).collect())?,
    };
    let path = dir.join(format!("{command}_{MANIFEST_FILE}"));
    write_file(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(path)
}

/// Profiles and fitted curves of one learning run.
#[derive(Clone, Debug)]
pub struct LearningArtifacts {
    pub profiles: Vec<GapProfile>,
    pub mean: GapProfile,
    pub median: GapProfile,
    pub curve_mean: BezierGapCurve,
    pub curve_median: BezierGapCurve,
}

impl LearningArtifacts {
    pub fn curve_set(&self) -> CurveSet {
        CurveSet {
            mean: Some(self.curve_mean.clone()),
            median: Some(self.curve_median.clone()),
        }
    }
}

/// Samples the ensemble, aggregates and fits both curves without touching
/// the filesystem.
pub fn learn_curves(learning: &LearningConfig, curves: &CurveConfig) -> Result<LearningArtifacts> {
    let spec = EnsembleSpec {
        n: learning.n,
        lo: learning.coeff_range.0,
        hi: learning.coeff_range.1,
        count: learning.instances,
        seed_base: learning.seed,
    };
    let profiles = sample_ensemble_gaps(&spec, &uniform_grid(learning.grid_points))?;
    let mean = aggregate_profiles(&profiles, Aggregation::Mean)?;
    let median = aggregate_profiles(&profiles, Aggregation::Median)?;
    let curve_mean = fit_bezier(&mean, curves.mean_degree)?;
    let curve_median = fit_bezier(&median, curves.median_degree)?;
    Ok(LearningArtifacts {
        profiles,
        mean,
        median,
        curve_mean,
        curve_median,
    })
}

fn write_curve(path: &Path, curve: &BezierGapCurve) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, curve)?;
        writeln!(w)?;
        Ok(())
    })
}

/// `curve,degree,rms_residual,min_value,min_at` for both fits.
pub fn write_fit_report<W: Write>(w: W, a: &LearningArtifacts) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["curve", "degree", "rms_residual", "min_value", "min_at"])?;
    for (name, c) in [("mean", &a.curve_mean), ("median", &a.curve_median)] {
        let (min_value, at) = c.min_on_grid(crate::schedule::POSITIVITY_CHECK_POINTS);
        out.write_record([
            name.to_string(),
            c.degree.to_string(),
            c.rms_residual.to_string(),
            min_value.to_string(),
            at.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Runs the learning phase and writes its files into the output directory.
pub fn run_learning_phase(cfg: &ExperimentConfig) -> Result<LearningArtifacts> {
    let learning = cfg
        .learning
        .as_ref()
        .ok_or_else(|| Error::Config("config has no learning section".into()))?;
    let dir = cfg.output_path();
    let start = Instant::now();
    let a = in_pool(cfg.workers, || learn_curves(learning, &cfg.curves))??;
    info!(
        "learned {} profiles in {:.1?}; rms residuals mean {:.4} (degree {}), median {:.4} (degree {})",
        a.profiles.len(),
        start.elapsed(),
        a.curve_mean.rms_residual,
        a.curve_mean.degree,
        a.curve_median.rms_residual,
        a.curve_median.degree
    );
    write_file(&dir.join(ENSEMBLE_FILE), |w| write_ensemble_csv(w, &a.profiles))?;
    write_file(&dir.join(AGGREGATE_FILE), |w| write_paired_csv(w, &a.mean, &a.median))?;
    write_file(&dir.join(FINAL_GAPS_FILE), |w| write_final_gaps_csv(w, &a.profiles))?;
    write_file(&dir.join(FIT_REPORT_FILE), |w| write_fit_report(w, &a))?;
    write_curve(&dir.join(CURVE_MEAN_FILE), &a.curve_mean)?;
    write_curve(&dir.join(CURVE_MEDIAN_FILE), &a.curve_median)?;
    write_manifest(
        cfg,
        "learn",
        &dir,
        &[],
        &[ENSEMBLE_FILE, AGGREGATE_FILE, FINAL_GAPS_FILE, FIT_REPORT_FILE, CURVE_MEAN_FILE, CURVE_MEDIAN_FILE],
    )?;
    Ok(a)
}

/// Loads `curve_mean.json` and `curve_median.json` from `dir`, skipping
/// curves that none of `methods` needs.
pub fn load_curves(dir: &Path, methods: &[Method]) -> Result<(CurveSet, Vec<PathBuf>)> {
    let mut set = CurveSet::default();
    let mut used = Vec::new();
    for (method, file) in [(Method::HeuristicMean, CURVE_MEAN_FILE), (Method::HeuristicMedian, CURVE_MEDIAN_FILE)] {
        if methods.contains(&method) {
            let path = dir.join(file);
            let curve = BezierGapCurve::from_json_file(&path)?;
            curve.check_positive()?;
            match method {
                Method::HeuristicMean => set.mean = Some(curve),
                _ => set.median = Some(curve),
            }
            used.push(path);
        }
    }
    Ok((set, used))
}

/// A benchmark instance in the form the optimizer sees: rescaled, with its
/// exact extrema.
#[derive(Clone, Debug)]
pub struct BenchInstance {
    pub class: ProblemClass,
    pub id: usize,
    pub model: IsingModel,
}

impl BenchInstance {
    /// Rescales `model` by `2 / (hi - lo)` of the range its coefficients (or
    /// edge weights) were drawn from; `None` leaves it unscaled.
    pub fn new(class: ProblemClass, id: usize, model: &IsingModel, range: Option<(f64, f64)>) -> Result<Self> {
        let model = match range {
            Some((lo, hi)) => rescale_ising(model, lo, hi)?,
            None => model.clone(),
        };
        Ok(Self { class, id, model })
    }

    /// Approximation ratio of an optimizer value, i.e. an expectation of the
    /// minimized Hamiltonian.
    pub fn ratio(&self, value: f64) -> Result<f64> {
        let ext = brute_force_extrema(&self.model.to_minimization())?;
        if self.class.is_maxcut() {
            let offset = self.model.offset();
            maxcut_ratio(offset - value, offset - ext.e_min)
        } else {
            approximation_ratio(value, ext.e_min, ext.e_max)
        }
    }
}

/// Instance `id` of the configured class, drawn with seed `seed + id`.
pub fn generate_instance(cfg: &BenchmarkConfig, id: usize) -> Result<BenchInstance> {
    let seed = cfg.seed.wrapping_add(id as u64);
    match cfg.problem_class {
        ProblemClass::QuboRandom => {
            let (lo, hi) = cfg.coeff_range;
            let q = gen_random_qubo(cfg.n, lo, hi, seed)?;
            BenchInstance::new(cfg.problem_class, id, &qubo_to_ising(&q), Some((lo, hi)))
        }
        ProblemClass::MaxCutUnweighted => {
            let g = gen_regular_graph(cfg.n, 3, None, seed)?;
            BenchInstance::new(cfg.problem_class, id, &maxcut_to_ising(&g)?, None)
        }
        ProblemClass::MaxCutWeighted => {
            let g = gen_regular_graph(cfg.n, 3, Some(cfg.weight_range), seed)?;
            BenchInstance::new(cfg.problem_class, id, &maxcut_to_ising(&g)?, Some(cfg.weight_range))
        }
    }
}

/// One `(instance, method, p)` cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub problem_class: ProblemClass,
    pub instance_id: usize,
    pub method: Method,
    pub p: usize,
    pub ratio: Option<f64>,
    /// Best expectation of the minimized, rescaled Hamiltonian.
    pub best_value: Option<f64>,
    pub best_params: Vec<f64>,
    pub evaluations_used: usize,
    pub error: Option<String>,
    pub wall_time: Duration,
}

/// SplitMix64 finalizer; spreads structured job keys over the seed space.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Optimizer seed for one sweep cell.
pub fn job_seed(seed: u64, instance_id: usize, method: Method, p: usize) -> u64 {
    let m = Method::ALL.iter().position(|&x| x == method).unwrap_or(0) as u64;
    mix(mix(mix(seed ^ 0x5EED) ^ instance_id as u64) ^ (m << 32 | p as u64))
}

fn run_cell(inst: &BenchInstance, method: Method, p: usize, budget: usize, seed: u64, curves: &CurveSet) -> Result<(OptResult, f64)> {
    let spec = ObjectiveSpec::new(inst.model.clone(), p, budget)?;
    let result = optimize_instance(&spec, method, curves, seed)?;
    let ratio = inst.ratio(result.best_value)?;
    Ok((result, ratio))
}

/// Optimizes every `(instance, method, p)` combination. Cells run in
/// parallel; a failing cell yields a record carrying the error message.
pub fn run_instances(
    instances: &[std::result::Result<BenchInstance, (usize, String)>],
    class: ProblemClass,
    methods: &[Method],
    depths: std::ops::RangeInclusive<usize>,
    budget: usize,
    seed: u64,
    curves: &CurveSet,
) -> Vec<ResultRecord> {
    let mut jobs = Vec::new();
    for inst in instances {
        for &method in methods {
            for p in depths.clone() {
                jobs.push((inst, method, p));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(inst, method, p)| {
            let start = Instant::now();
            let id = match inst {
                Ok(i) => i.id,
                Err((id, _)) => *id,
            };
            let outcome = match inst {
                Ok(i) => run_cell(i, method, p, budget, job_seed(seed, id, method, p), curves).map_err(|e| e.to_string()),
                Err((_, msg)) => Err(msg.clone()),
            };
            let mut rec = ResultRecord {
                problem_class: class,
                instance_id: id,
                method,
                p,
                ratio: None,
                best_value: None,
                best_params: Vec::new(),
                evaluations_used: 0,
                error: None,
                wall_time: Duration::ZERO,
            };
            match outcome {
                Ok((r, ratio)) => {
                    rec.ratio = Some(ratio);
                    rec.best_value = Some(r.best_value);
                    rec.best_params = r.best_params;
                    rec.evaluations_used = r.evaluations_used;
                }
                Err(msg) => {
                    warn!("{class} instance {id} {method} p={p}: {msg}");
                    rec.error = Some(msg);
                }
            }
            rec.wall_time = start.elapsed();
            rec
        })
        .collect()
}

/// Full sweep for the configured class. Never fails on a single cell.
pub fn run_benchmark(cfg: &BenchmarkConfig, curves: &CurveSet) -> Vec<ResultRecord> {
    let instances: Vec<_> = (0..cfg.instances)
        .map(|id| generate_instance(cfg, id).map_err(|e| (id, e.to_string())))
        .collect();
    run_instances(&instances, cfg.problem_class, &cfg.methods, cfg.depths(), cfg.budget, cfg.seed, curves)
}

fn opt_to_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join_params(params: &[f64]) -> String {
    params.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// `problem_class,instance_id,method,p,ratio,best_value,evaluations_used,params,error`;
/// `params` is `;`-separated.
pub fn write_records_csv<W: Write>(w: W, records: &[ResultRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "problem_class",
        "instance_id",
        "method",
        "p",
        "ratio",
        "best_value",
        "evaluations_used",
        "params",
        "error",
    ])?;
    for r in records {
        out.write_record([
            r.problem_class.name().to_string(),
            r.instance_id.to_string(),
            r.method.name().to_string(),
            r.p.to_string(),
            opt_to_string(r.ratio),
            opt_to_string(r.best_value),
            r.evaluations_used.to_string(),
            join_params(&r.best_params),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub problem_class: ProblemClass,
    pub method: Method,
    pub p: usize,
    /// Records with a ratio.
    pub count: usize,
    pub errors: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; 0 for a single record.
    pub std: f64,
    /// Per-coordinate mean of the best parameters.
    pub mean_params: Vec<f64>,
}

/// Sums in sorted order so that the result does not depend on row order.
fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Statistics per `(class, method, p)`, ordered by that key.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(ProblemClass, Method, usize), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.problem_class, r.method, r.p)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((problem_class, method, p), rows)| {
            let ok: Vec<&ResultRecord> = rows.iter().copied().filter(|r| r.ratio.is_some()).collect();
            let mut ratios: Vec<f64> = ok.iter().filter_map(|r| r.ratio).collect();
            let count = ratios.len();
            let (mean, median, std) = if count == 0 {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                let mean = sorted_mean(&mut ratios);
                let median = if count % 2 == 1 {
                    ratios[count / 2]
                } else {
                    0.5 * (ratios[count / 2 - 1] + ratios[count / 2])
                };
                let std = if count < 2 {
                    0.0
                } else {
                    let mut sq: Vec<f64> = ratios.iter().map(|r| (r - mean).powi(2)).collect();
                    sq.sort_by(f64::total_cmp);
                    (sq.iter().sum::<f64>() / (count - 1) as f64).sqrt()
                };
                (mean, median, std)
            };
            let dim = ok.first().map_or(0, |r| r.best_params.len());
            let mean_params = (0..dim)
                .map(|k| {
                    let mut col: Vec<f64> = ok.iter().filter_map(|r| r.best_params.get(k).copied()).collect();
                    sorted_mean(&mut col)
                })
                .collect();
            SummaryRow {
                problem_class,
                method,
                p,
                count,
                errors: rows.len() - count,
                mean,
                median,
                std,
                mean_params,
            }
        })
        .collect()
}

fn finite_or_empty(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

/// `problem_class,method,p,count,errors,mean_ratio,median_ratio,std_ratio,mean_params`.
pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "problem_class",
        "method",
        "p",
        "count",
        "errors",
        "mean_ratio",
        "median_ratio",
        "std_ratio",
        "mean_params",
    ])?;
    for r in rows {
        out.write_record([
            r.problem_class.name().to_string(),
            r.method.name().to_string(),
            r.p.to_string(),
            r.count.to_string(),
            r.errors.to_string(),
            finite_or_empty(r.mean),
            finite_or_empty(r.median),
            finite_or_empty(r.std),
            join_params(&r.mean_params),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceRow {
    pub problem_class: ProblemClass,
    pub p: usize,
    pub variant: Method,
    /// Mean heuristic ratio minus mean vanilla ratio; `None` when either
    /// side has no data.
    pub difference: Option<f64>,
}

/// Heuristic-minus-vanilla mean ratio per class, depth and heuristic variant.
pub fn ratio_difference(records: &[ResultRecord]) -> Vec<DifferenceRow> {
    let summary = summarize(records);
    let mean_of = |class: ProblemClass, method: Method, p: usize| {
        summary
            .iter()
            .find(|s| s.problem_class == class && s.method == method && s.p == p)
            .map(|s| s.mean)
            .filter(|m| m.is_finite())
    };
    let keys: std::collections::BTreeSet<(ProblemClass, usize)> =
        summary.iter().map(|s| (s.problem_class, s.p)).collect();
    let mut rows = Vec::new();
    for (class, p) in keys {
        for variant in [Method::HeuristicMean, Method::HeuristicMedian] {
            let h = mean_of(class, variant, p);
            let v = mean_of(class, Method::VanillaQaoa, p);
            if h.is_none() && !summary.iter().any(|s| s.problem_class == class && s.method == variant) {
                continue;
            }
            rows.push(DifferenceRow {
                problem_class: class,
                p,
                variant,
                difference: h.zip(v).map(|(h, v)| h - v),
            });
        }
    }
    rows
}

/// `problem_class,p,variant,difference,status`; status is `ok` or
/// `missing`.
pub fn write_difference_csv<W: Write>(w: W, rows: &[DifferenceRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["problem_class", "p", "variant", "difference", "status"])?;
    for r in rows {
        out.write_record([
            r.problem_class.name().to_string(),
            r.p.to_string(),
            r.variant.name().to_string(),
            opt_to_string(r.difference),
            if r.difference.is_some() { "ok" } else { "missing" }.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Runs the configured benchmark with curves from `curve_dir` and writes
/// records, summary, difference table and manifest.
pub fn run_benchmark_phase(cfg: &ExperimentConfig, curve_dir: &Path) -> Result<Vec<ResultRecord>> {
    let bench = cfg
        .benchmark
        .as_ref()
        .ok_or_else(|| Error::Config("config has no benchmark section".into()))?;
    let (curves, inputs) = load_curves(curve_dir, &bench.methods)?;
    let dir = cfg.output_path();
    let start = Instant::now();
    let records = in_pool(cfg.workers, || run_benchmark(bench, &curves))?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    info!("{} records ({} failed) in {:.1?}", records.len(), failed, start.elapsed());
    let summary = summarize(&records);
    write_file(&dir.join(RECORDS_FILE), |w| write_records_csv(w, &records))?;
    write_file(&dir.join(SUMMARY_FILE), |w| write_summary_csv(w, &summary))?;
    write_file(&dir.join(DIFFERENCE_FILE), |w| write_difference_csv(w, &ratio_difference(&records)))?;
    write_manifest(cfg, "bench", &dir, &inputs, &[RECORDS_FILE, SUMMARY_FILE, DIFFERENCE_FILE])?;
    Ok(records)
}
