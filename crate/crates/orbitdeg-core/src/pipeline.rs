//! End-to-end pipeline: sample, solve, certify, trace, report.
//!
//! Every stage is seeded from the run seed and a stage tag, all seeds land
//! in the run report, and every artifact on disk suffices to recompute the
//! report numbers with the standalone verbs. Complex numbers are stored as
//! [re, im] pairs; values beyond binary64 precision are decimal strings.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alpha::{certify_distinct, refine, AlphaCertificate, SquareInstance};
use crate::error::{Error, Result};
use crate::homotopy::TrackOptions;
use crate::monodromy::{rescale_to_patch, StoppingRule};
use crate::orbit::{
    cayley_cubic, degree_report, sample_hypersurface, stage_seed, veronese_slice, Hypersurface,
    PointConfig, Provenance,
};
use crate::polysys::HomogeneousForm;
use crate::scalar::{lower_vec, C64};
use crate::solver::{strategy, Formulation, MethodReport, OrbitInstance, SolveOptions};
use crate::tracetest::{build_pencil, trace_test, TraceReport, TraceSetup};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Problem file: `{"n", "d", "form": <form|{"seed"}|"cayley">, "stabilizer_order"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub d: usize,
    pub form: FormSpec,
    #[serde(default = "default_stabilizer")]
    pub stabilizer_order: u64,
}

fn default_stabilizer() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    /// Named built-in ("cayley").
    Named(String),
    Seeded { seed: u64 },
    Explicit(HomogeneousForm),
}

impl ProblemSpec {
    pub fn resolve(&self) -> Result<Hypersurface> {
        let mut h = match &self.form {
            FormSpec::Seeded { seed } => sample_hypersurface(self.n, self.d, *seed),
            FormSpec::Explicit(form) => {
                if form.num_vars != self.n || form.degree != self.d {
                    return Err(Error::Config(format!(
                        "form is ({}, {}) but the problem declares ({}, {})",
                        form.num_vars, form.degree, self.n, self.d
                    )));
                }
                Hypersurface {
                    form: form.clone(),
                    provenance: Provenance::UserSupplied,
                    stabilizer_order: 1,
                }
            }
            FormSpec::Named(name) if name == "cayley" => {
                let c = cayley_cubic();
                if self.n != 4 || self.d != 3 {
                    return Err(Error::Config("cayley is a cubic surface: n=4, d=3".into()));
                }
                c
            }
            FormSpec::Named(other) => {
                return Err(Error::Config(format!("unknown named form '{other}'")));
            }
        };
        h.stabilizer_order = self.stabilizer_order;
        Ok(h)
    }
}

/// Resolved options for one run; embedded verbatim in the run report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub seed: u64,
    pub digits: u32,
    pub budget: u64,
    pub workers: usize,
    pub method: String,
    pub stall_loops: usize,
    pub max_loops: usize,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, seed: u64) -> Self {
        RunConfig {
            problem,
            seed,
            digits: 30,
            budget: 1_000_000,
            workers: 0,
            method: "monodromy".into(),
            stall_loops: StoppingRule::default().stall_loops,
            max_loops: StoppingRule::default().max_loops,
        }
    }

    fn stopping(&self) -> StoppingRule {
        StoppingRule {
            stall_loops: self.stall_loops,
            max_loops: self.max_loops,
            target_count: None,
        }
    }

    fn stage_seeds(&self) -> StageSeeds {
        StageSeeds {
            start_pair: stage_seed(self.seed, 2),
            patch: stage_seed(self.seed, 3),
            solve: stage_seed(self.seed, 4),
            pencil: stage_seed(self.seed, 6),
            chart: stage_seed(self.seed, 7),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageSeeds {
    pub start_pair: u64,
    pub patch: u64,
    pub solve: u64,
    pub pencil: u64,
    pub chart: u64,
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

fn pairvec(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpair(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

/// Instance file: everything the standalone verbs need to rebuild the
/// systems (resolved problem, configuration points, patch, seeds).
#[derive(Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub d: usize,
    pub form: HomogeneousForm,
    pub stabilizer_order: u64,
    pub points: Vec<Vec<[f64; 2]>>,
    pub patch: Vec<[f64; 2]>,
    pub seeds: StageSeeds,
}

impl InstanceFile {
    pub fn from_instance(inst: &OrbitInstance, seeds: &StageSeeds) -> Self {
        InstanceFile {
            n: inst.hypersurface.n(),
            d: inst.hypersurface.d(),
            form: inst.hypersurface.form.clone(),
            stabilizer_order: inst.hypersurface.stabilizer_order,
            points: inst
                .start
                .config
                .all_points()
                .iter()
                .map(|p| pairvec(p))
                .collect(),
            patch: pairvec(&inst.patch),
            seeds: seeds.clone(),
        }
    }

    pub fn to_instance(&self) -> Result<OrbitInstance> {
        let hypersurface = Hypersurface {
            form: self.form.clone(),
            provenance: Provenance::UserSupplied,
            stabilizer_order: self.stabilizer_order,
        };
        let config =
            PointConfig::from_points(self.n, self.points.iter().map(|p| unpair(p)).collect())?;
        let patch = unpair(&self.patch);
        // the stored configuration already solves nothing (no phi): rebuild
        // a start pair shell carrying the configuration
        let phi0 = crate::orbit::MatrixPoint::new(self.n, vec![C64::new(0.0, 0.0); self.n * self.n])?;
        Ok(OrbitInstance {
            hypersurface,
            start: crate::orbit::StartPair {
                phi0,
                config,
                residual_norm: f64::NAN,
            },
            patch,
        })
    }
}

#[derive(Serialize, Deserialize)]
pub struct SolutionRecord {
    pub coords: Vec<[f64; 2]>,
    pub residual: f64,
    pub abs_det: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

pub fn write_solutions(path: &Path, records: &[SolutionRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_solutions(path: &Path) -> Result<Vec<SolutionRecord>> {
    let f = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: SolutionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Schema(format!("solutions line {}: {e}", i + 1)))?;
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::Schema("no solutions in file".into()));
    }
    Ok(out)
}

pub fn write_certificates(path: &Path, certs: &[AlphaCertificate]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for c in certs {
        serde_json::to_writer(&mut f, c)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// Trace test failed: the solution set is likely missing points.
    Incomplete,
    CertificationFailed,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Complete => 0,
            RunStatus::Incomplete => 2,
            RunStatus::CertificationFailed => 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifySummary {
    pub certified: usize,
    pub uncertified: usize,
    pub refined: usize,
    pub all_distinct: bool,
    pub same_zero_pairs: usize,
    pub undecided_pairs: usize,
    pub pairs_tested: usize,
    pub precision_bits: u32,
}

#[derive(Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub seeds: StageSeeds,
    pub solve: MethodReport,
    pub certify: CertifySummary,
    pub trace: TraceReport,
    pub terminal_count: u64,
    pub stabilizer_order: u64,
    pub degree: u64,
    pub status: RunStatus,
    /// Wall-clock seconds per stage; excluded from reproducibility checks.
    pub timings: std::collections::BTreeMap<String, f64>,
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Certification of a solution set against the square point system: every
/// point is certified (refining once when the raw certificate falls short)
/// and pairwise distinctness is established.
pub fn certify_stage(
    inst: &OrbitInstance,
    reps: &[Vec<C64>],
    digits: u32,
) -> Result<(Vec<AlphaCertificate>, CertifySummary, Vec<Vec<C64>>)> {
    let square = inst.point_square()?;
    let sq_inst = SquareInstance::new(square)?;
    let prec = crate::scalar::bits_for_digits(digits);
    // patch representatives
    let mut points = Vec::with_capacity(reps.len());
    for rep in reps {
        points.push(rescale_to_patch(&sq_inst.system, rep).ok_or_else(|| {
            Error::DegenerateInput("solution lies on the patch hyperplane".into())
        })?);
    }
    let mut certs = crate::alpha::certify_set(&sq_inst, &points, 53);
    let mut refined_count = 0usize;
    for (i, cert) in certs.iter_mut().enumerate() {
        if !cert.certified {
            if let Ok(r) = refine(&sq_inst, &points[i], digits.min(25)) {
                points[i] = lower_vec(&r.point);
                *cert = crate::alpha::certify_zero_at_precision(&sq_inst, &points[i], prec);
                refined_count += 1;
            }
        }
    }
    let uncertified = certs.iter().filter(|c| !c.certified).count();
    let distinct = certify_distinct(&sq_inst, &points, &certs);
    let summary = CertifySummary {
        certified: certs.len() - uncertified,
        uncertified,
        refined: refined_count,
        all_distinct: distinct.all_distinct,
        same_zero_pairs: distinct.same_zero_pairs.len(),
        undecided_pairs: distinct.undecided_pairs.len(),
        pairs_tested: distinct.pairs_tested,
        precision_bits: prec,
    };
    Ok((certs, summary, points))
}

/// Trace stage: build the slice from the configuration, a pencil from the
/// seed, and run the trace test; a path failure retries once with a complex
/// pencil value.
pub fn trace_stage(
    inst: &OrbitInstance,
    patched_solutions: &[Vec<C64>],
    digits: u32,
    pencil_seed: u64,
    chart_seed: u64,
    tracker: &TrackOptions,
) -> Result<TraceReport> {
    let slice = veronese_slice(&inst.start.config, inst.hypersurface.d())?;
    let pencil = build_pencil(&slice, pencil_seed)?;
    let setup = TraceSetup {
        hypersurface: &inst.hypersurface,
        pencil: &pencil,
        patch: &inst.patch,
        digits,
        track_opts: *tracker,
        chart_seed,
    };
    match trace_test(&setup, patched_solutions, C64::new(1.0, 0.0), false) {
        Ok((report, _)) => Ok(report),
        Err(Error::TracePathFailure { .. }) => {
            log::warn!("trace path failed at t1 = 1; retrying with a complex pencil value");
            let (report, _) =
                trace_test(&setup, patched_solutions, C64::new(0.37, 0.41), false)?;
            Ok(report)
        }
        Err(e) => Err(e),
    }
}

/// Outputs of a full degree run, with artifact paths.
pub struct DegreeRun {
    pub report: RunReport,
    pub out_dir: PathBuf,
}

/// The full pipeline: prepare, solve, certify, trace, divide by the
/// stabilizer order, and persist all artifacts under `out_dir`.
pub fn cmd_degree(config: &RunConfig, out_dir: &Path) -> Result<DegreeRun> {
    std::fs::create_dir_all(out_dir)?;
    let seeds = config.stage_seeds();
    let mut timings = std::collections::BTreeMap::new();

    let t0 = Instant::now();
    let hypersurface = config.problem.resolve()?;
    let inst = prepare_with_seeds(hypersurface, &seeds)?;
    write_json(
        &out_dir.join("problem.json"),
        &ResolvedProblem::of(&inst, config),
    )?;
    write_json(
        &out_dir.join("instance.json"),
        &InstanceFile::from_instance(&inst, &seeds),
    )?;
    timings.insert("prepare".into(), t0.elapsed().as_secs_f64());

    // solve
    let t1 = Instant::now();
    let strat = strategy(&config.method)?;
    let opts = SolveOptions {
        seed: seeds.solve,
        tracker: TrackOptions::default(),
        stopping: config.stopping(),
        budget: config.budget,
        formulation: Formulation::Points,
    };
    let outcome = strat.solve(&inst, &opts)?;
    let records: Vec<SolutionRecord> = outcome
        .registry
        .solutions()
        .iter()
        .map(|s| SolutionRecord {
            coords: pairvec(&s.coords),
            residual: s.residual,
            abs_det: s.abs_det,
        })
        .collect();
    write_solutions(&out_dir.join("solutions.jsonl"), &records)?;
    write_json(&out_dir.join("solve_report.json"), &outcome.report)?;
    timings.insert("solve".into(), t1.elapsed().as_secs_f64());

    // certify
    let t2 = Instant::now();
    let reps: Vec<Vec<C64>> = outcome
        .registry
        .solutions()
        .iter()
        .map(|s| s.coords.clone())
        .collect();
    let (certs, certify, patched) = certify_stage(&inst, &reps, config.digits)?;
    write_certificates(&out_dir.join("certificates.jsonl"), &certs)?;
    timings.insert("certify".into(), t2.elapsed().as_secs_f64());

    // trace
    let t3 = Instant::now();
    let trace = trace_stage(
        &inst,
        &patched,
        config.digits,
        seeds.pencil,
        seeds.chart,
        &TrackOptions::default(),
    )?;
    write_json(&out_dir.join("trace_report.json"), &trace)?;
    timings.insert("trace".into(), t3.elapsed().as_secs_f64());

    // degree
    let terminal_count = outcome.registry.len() as u64;
    let stab = inst.hypersurface.stabilizer_order;
    let cert_ok = certify.uncertified == 0 && certify.all_distinct;
    let status = if !cert_ok {
        RunStatus::CertificationFailed
    } else if !trace.pass {
        RunStatus::Incomplete
    } else {
        RunStatus::Complete
    };
    let degree = degree_report(terminal_count, stab)?;

    let report = RunReport {
        config: config.clone(),
        seeds,
        solve: outcome.report,
        certify,
        trace,
        terminal_count,
        stabilizer_order: stab,
        degree,
        status,
        timings,
    };
    write_json(&out_dir.join("run_report.json"), &report)?;
    Ok(DegreeRun {
        report,
        out_dir: out_dir.to_path_buf(),
    })
}

fn prepare_with_seeds(hypersurface: Hypersurface, seeds: &StageSeeds) -> Result<OrbitInstance> {
    use rand::SeedableRng;
    let start = crate::orbit::start_pair(&hypersurface, seeds.start_pair)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seeds.patch);
    let patch = crate::orbit::random_patch(hypersurface.matrix_dim(), &mut rng);
    Ok(OrbitInstance {
        hypersurface,
        start,
        patch: patch.coeffs,
    })
}

#[derive(Serialize)]
struct ResolvedProblem {
    n: usize,
    d: usize,
    form: HomogeneousForm,
    stabilizer_order: u64,
    provenance: Provenance,
    method: String,
}

impl ResolvedProblem {
    fn of(inst: &OrbitInstance, config: &RunConfig) -> Self {
        ResolvedProblem {
            n: inst.hypersurface.n(),
            d: inst.hypersurface.d(),
            form: inst.hypersurface.form.clone(),
            stabilizer_order: inst.hypersurface.stabilizer_order,
            provenance: inst.hypersurface.provenance.clone(),
            method: config.method.clone(),
        }
    }
}

/// Total-degree oracle run: count solutions by exhausting Bezout paths.
#[derive(Serialize)]
pub struct OracleReport {
    pub count: u64,
    pub stats: MethodReport,
    pub formulation: Formulation,
    pub seed: u64,
}

pub fn cmd_oracle(
    config: &RunConfig,
    formulation: Formulation,
    out_dir: &Path,
) -> Result<OracleReport> {
    std::fs::create_dir_all(out_dir)?;
    let seeds = config.stage_seeds();
    let hypersurface = config.problem.resolve()?;
    let inst = prepare_with_seeds(hypersurface, &seeds)?;
    let strat = strategy("total-degree")?;
    let opts = SolveOptions {
        seed: seeds.solve,
        tracker: TrackOptions::default(),
        stopping: config.stopping(),
        budget: config.budget,
        formulation,
    };
    let outcome = strat.solve(&inst, &opts)?;
    let records: Vec<SolutionRecord> = outcome
        .registry
        .solutions()
        .iter()
        .map(|s| SolutionRecord {
            coords: pairvec(&s.coords),
            residual: s.residual,
            abs_det: s.abs_det,
        })
        .collect();
    write_solutions(&out_dir.join("oracle_solutions.jsonl"), &records)?;
    write_json(
        &out_dir.join("instance.json"),
        &InstanceFile::from_instance(&inst, &seeds),
    )?;
    let report = OracleReport {
        count: outcome.registry.len() as u64,
        stats: outcome.report,
        formulation,
        seed: config.seed,
    };
    write_json(&out_dir.join("oracle_report.json"), &report)?;
    Ok(report)
}

/// Standalone re-certification of persisted solutions.
pub fn cmd_certify(
    instance_path: &Path,
    solutions_path: &Path,
    digits: u32,
    out_dir: &Path,
) -> Result<CertifySummary> {
    std::fs::create_dir_all(out_dir)?;
    let instance: InstanceFile = read_json(instance_path)?;
    let inst = instance.to_instance()?;
    let records = read_solutions(solutions_path)?;
    let reps: Vec<Vec<C64>> = records.iter().map(|r| unpair(&r.coords)).collect();
    let (certs, summary, _) = certify_stage(&inst, &reps, digits)?;
    write_certificates(&out_dir.join("certificates.jsonl"), &certs)?;
    write_json(&out_dir.join("certify_summary.json"), &summary)?;
    Ok(summary)
}

/// Standalone trace test of persisted solutions.
pub fn cmd_trace(
    instance_path: &Path,
    solutions_path: &Path,
    digits: u32,
    out_dir: &Path,
) -> Result<TraceReport> {
    std::fs::create_dir_all(out_dir)?;
    let instance: InstanceFile = read_json(instance_path)?;
    let inst = instance.to_instance()?;
    let records = read_solutions(solutions_path)?;
    let square = inst.point_square()?;
    let mut patched = Vec::with_capacity(records.len());
    for r in &records {
        let rep = unpair(&r.coords);
        patched.push(rescale_to_patch(&square, &rep).ok_or_else(|| {
            Error::DegenerateInput("solution lies on the patch hyperplane".into())
        })?);
    }
    let report = trace_stage(
        &inst,
        &patched,
        digits,
        instance.seeds.pencil,
        instance.seeds.chart,
        &TrackOptions::default(),
    )?;
    write_json(&out_dir.join("trace_report.json"), &report)?;
    Ok(report)
}

/// Sample a problem file.
pub fn cmd_sample(n: usize, d: usize, seed: u64, out_path: &Path) -> Result<ProblemSpec> {
    let spec = ProblemSpec {
        n,
        d,
        form: FormSpec::Seeded { seed },
        stabilizer_order: 1,
    };
    // validate by resolving
    spec.resolve()?;
    write_json(out_path, &spec)?;
    Ok(spec)
}

/// Solve-only run (persists solutions and the solve report).
pub fn cmd_solve(config: &RunConfig, out_dir: &Path) -> Result<u64> {
    std::fs::create_dir_all(out_dir)?;
    let seeds = config.stage_seeds();
    let hypersurface = config.problem.resolve()?;
    let inst = prepare_with_seeds(hypersurface, &seeds)?;
    write_json(
        &out_dir.join("instance.json"),
        &InstanceFile::from_instance(&inst, &seeds),
    )?;
    let strat = strategy(&config.method)?;
    let opts = SolveOptions {
        seed: seeds.solve,
        tracker: TrackOptions::default(),
        stopping: config.stopping(),
        budget: config.budget,
        formulation: Formulation::Points,
    };
    let outcome = strat.solve(&inst, &opts)?;
    let records: Vec<SolutionRecord> = outcome
        .registry
        .solutions()
        .iter()
        .map(|s| SolutionRecord {
            coords: pairvec(&s.coords),
            residual: s.residual,
            abs_det: s.abs_det,
        })
        .collect();
    write_solutions(&out_dir.join("solutions.jsonl"), &records)?;
    write_json(&out_dir.join("solve_report.json"), &outcome.report)?;
    Ok(records.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_spec_roundtrip_and_resolution() {
        let spec = ProblemSpec {
            n: 4,
            d: 3,
            form: FormSpec::Seeded { seed: 9 },
            stabilizer_order: 1,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: ProblemSpec = serde_json::from_str(&json).unwrap();
        let h = back.resolve().unwrap();
        assert_eq!(h.form.coeffs.len(), 20);

        let cayley: ProblemSpec = serde_json::from_str(
            r#"{"n":4,"d":3,"form":"cayley","stabilizer_order":24}"#,
        )
        .unwrap();
        let h = cayley.resolve().unwrap();
        assert_eq!(h.stabilizer_order, 24);

        let bad: ProblemSpec =
            serde_json::from_str(r#"{"n":3,"d":3,"form":"cayley"}"#).unwrap();
        assert!(bad.resolve().is_err());
    }

    #[test]
    fn solutions_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let records = vec![
            SolutionRecord {
                coords: vec![[1.0, -0.5], [0.25, 0.125]],
                residual: 1e-12,
                abs_det: 0.5,
            },
            SolutionRecord {
                coords: vec![[0.1, 0.2], [0.3, 0.4]],
                residual: 2e-12,
                abs_det: 0.25,
            },
        ];
        write_solutions(&path, &records).unwrap();
        let back = read_solutions(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].coords[0], [1.0, -0.5]);
        assert_eq!(back[1].residual, 2e-12);
    }

    #[test]
    fn schema_violation_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"nope\": 1}\n").unwrap();
        assert!(matches!(read_solutions(&path), Err(Error::Schema(_))));
    }
}
