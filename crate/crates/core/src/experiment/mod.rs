//! Experiment harness: full-order reference, POD, ROM construction, ROM
//! simulation and the comparison report, either in one pass or as
//! separately cached stages.

mod config;

pub use config::{ExperimentConfig, RomIntegrator, DEFAULT_RANK};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::deim::CompressedSnapshots;
use crate::error::{Error, Result};
use crate::integrators::{integrate, Scheme, Trajectory};
use crate::la::{read_matrix, write_matrix, ColumnVector, DenseMatrix};
use crate::pod::{assemble_snapshots, pod_basis, write_singular_values, PodBasis};
use crate::problems::{build_system, initial_profile};
use crate::rom::{reduce, reduced_energy, ReduceOptions, ReducedSystem, RomVariant};
use crate::skewgrad::SkewGradientSystem;

pub const FULL_STEM: &str = "full";
pub const ROM_STEM: &str = "rom";
pub const POD_BASIS_FILE: &str = "pod_basis.skm";
pub const SINGULAR_VALUES_FILE: &str = "singular_values.csv";
pub const S_SINGULAR_VALUES_FILE: &str = "s_singular_values.csv";
pub const ROM_DIR: &str = "rom";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const BASELINE_DIR: &str = "baseline";

/// Env var capping the number of concurrent ROM runs.
pub const THREADS_ENV: &str = "SKEWMOR_THREADS";

/// Discrete L² distance `√(Δx Σ (y - Vz)²)`.
pub fn l2_error(y_full: &[f64], z: &[f64], v: &DenseMatrix, dx: f64) -> Result<f64> {
    if v.rows() != y_full.len() || v.cols() != z.len() {
        return Err(Error::shape(format!(
            "basis {:?} with full state {} and reduced state {}",
            v.shape(),
            y_full.len(),
            z.len()
        )));
    }
    let lifted = v.matvec(z);
    let sum: f64 = y_full.iter().zip(lifted.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((dx * sum).sqrt())
}

/// `|H(Vz_k) - H(Vz_0)|` along a reduced trajectory.
pub fn energy_error(rs: &ReducedSystem, zs: &[ColumnVector]) -> Vec<f64> {
    let Some(z0) = zs.first() else {
        return Vec::new();
    };
    let h0 = reduced_energy(rs, z0);
    zs.iter().map(|z| (reduced_energy(rs, z) - h0).abs()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: f64,
    pub energy_error: f64,
    pub l2_error: f64,
    pub energy_full: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub variant: RomVariant,
    pub n: usize,
    pub r: usize,
    pub m: Option<usize>,
    pub steps: usize,
    pub dt: f64,
    pub max_energy_error: f64,
    pub final_l2_error: f64,
    pub sigma_1: Option<f64>,
    pub s_sigma_1: Option<f64>,
    pub full_seconds: Option<f64>,
    pub offline_seconds: Option<f64>,
    pub online_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub summary: Summary,
}

impl ComparisonReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "t,energy_error,l2_error,energy_full")?;
            for row in &self.rows {
                writeln!(w, "{:e},{:e},{:e},{:e}", row.t, row.energy_error, row.l2_error, row.energy_full)?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Full-order reference run.
pub struct FullRun {
    pub system: Arc<dyn SkewGradientSystem>,
    pub y0: ColumnVector,
    pub dx: f64,
    pub trajectory: Trajectory,
    pub seconds: f64,
}

pub fn full_system(cfg: &ExperimentConfig) -> Result<Arc<dyn SkewGradientSystem>> {
    let grid = cfg.grid()?;
    Ok(Arc::from(build_system(cfg.problem, &grid, cfg.d2_scaling)?))
}

pub fn run_full(cfg: &ExperimentConfig) -> Result<FullRun> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let system = full_system(cfg)?;
    let y0 = initial_profile(cfg.problem, &grid);
    let start = Instant::now();
    let trajectory = integrate(system.as_ref(), &y0, &Scheme::Midpoint(cfg.midpoint()), cfg.steps, cfg.record_every)?;
    Ok(FullRun {
        system,
        y0,
        dx: grid.dx,
        trajectory,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn build_basis(cfg: &ExperimentConfig, sys: &dyn SkewGradientSystem, traj: &Trajectory) -> Result<PodBasis> {
    let snaps = assemble_snapshots(traj, sys, cfg.augment, cfg.mu)?;
    pod_basis(&snaps, cfg.truncation()?)
}

pub fn build_rom(
    cfg: &ExperimentConfig,
    variant: RomVariant,
    sys: Arc<dyn SkewGradientSystem>,
    basis: PodBasis,
    traj: &Trajectory,
) -> Result<ReducedSystem> {
    let s_snapshots = match variant {
        RomVariant::SkewDeim => Some(CompressedSnapshots::from_system(sys.as_ref(), &traj.states)?),
        _ => None,
    };
    let opts = ReduceOptions {
        deim_m: cfg.deim_m,
        s_snapshots,
        ..Default::default()
    };
    reduce(sys, basis, variant, opts)
}

pub fn run_rom(cfg: &ExperimentConfig, rs: &ReducedSystem, y0: &[f64]) -> Result<Trajectory> {
    let z0 = rs.initial_condition(y0)?;
    let scheme = match cfg.rom_integrator {
        RomIntegrator::Midpoint => Scheme::Midpoint(cfg.midpoint()),
        RomIntegrator::Rk4 => Scheme::Rk4 { dt: cfg.dt() },
    };
    integrate(rs, &z0, &scheme, cfg.steps, cfg.record_every)
}

/// Row-by-row comparison of a reduced trajectory with the reference.
pub fn compare(
    cfg: &ExperimentConfig,
    rs: &ReducedSystem,
    full: &Trajectory,
    rom: &Trajectory,
    dx: f64,
) -> Result<ComparisonReport> {
    if full.len() != rom.len() {
        return Err(Error::shape(format!(
            "reference has {} recorded states, ROM has {}",
            full.len(),
            rom.len()
        )));
    }
    let energy = energy_error(rs, &rom.states);
    let sys = rs.full_system();
    let mut rows = Vec::with_capacity(full.len());
    for k in 0..full.len() {
        rows.push(ComparisonRow {
            t: full.times[k],
            energy_error: energy[k],
            l2_error: l2_error(&full.states[k], &rom.states[k], &rs.basis.v, dx)?,
            energy_full: sys.energy(&full.states[k]),
        });
    }
    let summary = Summary {
        problem: cfg.problem.name().into(),
        variant: rs.variant,
        n: rs.basis.n(),
        r: rs.r(),
        m: rs.deim_op.as_ref().map(|op| op.m()),
        steps: cfg.steps,
        dt: cfg.dt(),
        max_energy_error: energy.iter().copied().fold(0.0, f64::max),
        final_l2_error: rows.last().map_or(0.0, |r| r.l2_error),
        sigma_1: rs.basis.singular_values.first().copied(),
        s_sigma_1: rs.deim_op.as_ref().and_then(|op| op.snapshot_singular_values.first().copied()),
        full_seconds: None,
        offline_seconds: None,
        online_seconds: None,
    };
    Ok(ComparisonReport { rows, summary })
}

fn rom_manifest_extra(cfg: &ExperimentConfig) -> Result<BTreeMap<String, serde_json::Value>> {
    let grid = cfg.grid()?;
    let mut extra = BTreeMap::new();
    extra.insert("problem".into(), serde_json::json!(cfg.problem));
    extra.insert("L".into(), serde_json::json!(cfg.length));
    extra.insert("offset".into(), serde_json::json!(grid.offset));
    extra.insert("dx".into(), serde_json::json!(grid.dx));
    extra.insert("dt".into(), serde_json::json!(cfg.dt()));
    extra.insert("d2_scaling".into(), serde_json::json!(cfg.d2_scaling));
    Ok(extra)
}

/// Number of ROM runs allowed to proceed concurrently.
pub fn thread_cap() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Everything a pipeline run produced, besides the files.
pub struct PipelineOutcome {
    pub report: ComparisonReport,
    pub baseline: Option<ComparisonReport>,
    pub basis: PodBasis,
    pub rom: ReducedSystem,
}

fn prepare_out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let out = cfg.out_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}

/// All stages in one pass, writing every artifact to `cfg.out_dir`.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let out = prepare_out_dir(cfg)?;

    let full = run_full(cfg).map_err(|e| e.in_stage("simulate"))?;
    full.trajectory.export(&out, FULL_STEM).map_err(|e| e.in_stage("simulate"))?;

    let offline = Instant::now();
    let basis = build_basis(cfg, full.system.as_ref(), &full.trajectory).map_err(|e| e.in_stage("pod"))?;
    basis
        .write_singular_values(&out.join(SINGULAR_VALUES_FILE))
        .and_then(|_| write_matrix(out.join(POD_BASIS_FILE), &basis.v))
        .map_err(|e| e.in_stage("pod"))?;

    let rs = build_rom(cfg, cfg.variant, full.system.clone(), basis.clone(), &full.trajectory)
        .map_err(|e| e.in_stage("reduce"))?;
    let offline_seconds = offline.elapsed().as_secs_f64();
    write_rom(cfg, &rs, &out).map_err(|e| e.in_stage("reduce"))?;

    let want_baseline = cfg.baseline && cfg.variant != RomVariant::GalerkinGeneric;
    let baseline_rs = if want_baseline {
        Some(
            build_rom(cfg, RomVariant::GalerkinGeneric, full.system.clone(), basis.clone(), &full.trajectory)
                .map_err(|e| e.in_stage("reduce"))?,
        )
    } else {
        None
    };

    let timed = |rs: &ReducedSystem| -> Result<(Trajectory, f64)> {
        let start = Instant::now();
        let traj = run_rom(cfg, rs, &full.y0)?;
        Ok((traj, start.elapsed().as_secs_f64()))
    };
    let (main_run, baseline_run) = match &baseline_rs {
        Some(b) if thread_cap().map_err(|e| e.in_stage("rom-run"))? >= 2 => std::thread::scope(|s| {
            let handle = s.spawn(|| timed(b));
            let main = timed(&rs);
            let base = handle.join().expect("baseline ROM thread panicked");
            (main, Some(base))
        }),
        Some(b) => (timed(&rs), Some(timed(b))),
        None => (timed(&rs), None),
    };
    let (rom_traj, online_seconds) = main_run.map_err(|e| e.in_stage("rom-run"))?;
    rom_traj.export(&out, ROM_STEM).map_err(|e| e.in_stage("rom-run"))?;

    let mut report = compare(cfg, &rs, &full.trajectory, &rom_traj, full.dx).map_err(|e| e.in_stage("compare"))?;
    report.summary.full_seconds = Some(full.seconds);
    report.summary.offline_seconds = Some(offline_seconds);
    report.summary.online_seconds = Some(online_seconds);
    report
        .write_csv(&out.join(COMPARISON_FILE))
        .and_then(|_| report.write_summary(&out.join(SUMMARY_FILE)))
        .map_err(|e| e.in_stage("compare"))?;

    let baseline = match (baseline_rs, baseline_run) {
        (Some(b), Some(run)) => {
            let (traj, secs) = run.map_err(|e| e.in_stage("rom-run"))?;
            let dir = out.join(BASELINE_DIR);
            let mut rep = compare(cfg, &b, &full.trajectory, &traj, full.dx).map_err(|e| e.in_stage("compare"))?;
            rep.summary.online_seconds = Some(secs);
            std::fs::create_dir_all(&dir)
                .map_err(|e| Error::io(&dir, e))
                .and_then(|_| rep.write_csv(&dir.join(COMPARISON_FILE)))
                .and_then(|_| rep.write_summary(&dir.join(SUMMARY_FILE)))
                .map_err(|e| e.in_stage("compare"))?;
            Some(rep)
        }
        _ => None,
    };

    Ok(PipelineOutcome {
        report,
        baseline,
        basis,
        rom: rs,
    })
}

fn write_rom(cfg: &ExperimentConfig, rs: &ReducedSystem, out: &Path) -> Result<()> {
    rs.write(&out.join(ROM_DIR), rom_manifest_extra(cfg)?)?;
    if let Some(op) = &rs.deim_op {
        write_singular_values(&out.join(S_SINGULAR_VALUES_FILE), &op.snapshot_singular_values)?;
    }
    Ok(())
}

/// Rebuilds a trajectory from a stored state matrix, with times
/// `k·dt·record_every` and energies from `energy`.
fn load_trajectory(path: &Path, dt: f64, every: usize, energy: &dyn Fn(&ColumnVector) -> f64) -> Result<Trajectory> {
    let m = read_matrix(path)?;
    let states: Vec<ColumnVector> = (0..m.cols()).map(|j| m.column_vector(j)).collect();
    Ok(Trajectory {
        times: (0..states.len()).map(|k| (k * every) as f64 * dt).collect(),
        energies: states.iter().map(energy).collect(),
        states,
    })
}

fn load_full(cfg: &ExperimentConfig, sys: &dyn SkewGradientSystem) -> Result<Trajectory> {
    let path = cfg.out_dir.join(format!("{FULL_STEM}.skm"));
    let traj = load_trajectory(&path, cfg.dt(), cfg.record_every, &|y| sys.energy(y))?;
    if traj.states.first().is_some_and(|y| y.dim() != sys.dim()) {
        return Err(Error::shape(format!(
            "{} holds states of dimension {}, config has n = {}",
            path.display(),
            traj.states[0].dim(),
            sys.dim()
        )));
    }
    Ok(traj)
}

fn load_rom(cfg: &ExperimentConfig, sys: Arc<dyn SkewGradientSystem>) -> Result<ReducedSystem> {
    let (rs, manifest) = ReducedSystem::read(&cfg.out_dir.join(ROM_DIR), sys)?;
    let recorded = manifest.extra.get("problem").and_then(|v| v.as_str());
    if recorded != Some(cfg.problem.name()) {
        return Err(Error::Config(format!(
            "stored ROM was built for {:?}, config says {}",
            recorded,
            cfg.problem.name()
        )));
    }
    Ok(rs)
}

/// Stage `simulate`: full-order reference to `full.skm` / `full.csv`.
pub fn stage_simulate(cfg: &ExperimentConfig) -> Result<FullRun> {
    let out = prepare_out_dir(cfg)?;
    let full = run_full(cfg)?;
    full.trajectory.export(&out, FULL_STEM)?;
    Ok(full)
}

/// Stage `pod`: basis and spectrum from the stored reference.
pub fn stage_pod(cfg: &ExperimentConfig) -> Result<PodBasis> {
    cfg.validate()?;
    let sys = full_system(cfg)?;
    let traj = load_full(cfg, sys.as_ref())?;
    let basis = build_basis(cfg, sys.as_ref(), &traj)?;
    basis.write_singular_values(&cfg.out_dir.join(SINGULAR_VALUES_FILE))?;
    write_matrix(cfg.out_dir.join(POD_BASIS_FILE), &basis.v)?;
    Ok(basis)
}

/// Stage `reduce`: ROM from the stored basis and reference.
pub fn stage_reduce(cfg: &ExperimentConfig) -> Result<ReducedSystem> {
    cfg.validate()?;
    let sys = full_system(cfg)?;
    let traj = load_full(cfg, sys.as_ref())?;
    let basis = PodBasis::from_orthonormal(read_matrix(cfg.out_dir.join(POD_BASIS_FILE))?)?;
    let rs = build_rom(cfg, cfg.variant, sys, basis, &traj)?;
    write_rom(cfg, &rs, &cfg.out_dir)?;
    Ok(rs)
}

/// Stage `rom-run`: integrates the stored ROM to `rom.skm` / `rom.csv`.
pub fn stage_rom_run(cfg: &ExperimentConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let sys = full_system(cfg)?;
    let rs = load_rom(cfg, sys)?;
    let y0 = initial_profile(cfg.problem, &cfg.grid()?);
    let traj = run_rom(cfg, &rs, &y0)?;
    traj.export(&cfg.out_dir, ROM_STEM)?;
    Ok(traj)
}

/// Stage `compare`: comparison CSV and summary from stored trajectories.
pub fn stage_compare(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let sys = full_system(cfg)?;
    let full = load_full(cfg, sys.as_ref())?;
    let rs = load_rom(cfg, sys)?;
    let rom_path = cfg.out_dir.join(format!("{ROM_STEM}.skm"));
    let rom = load_trajectory(&rom_path, cfg.dt(), cfg.record_every, &|z| reduced_energy(&rs, z))?;
    let report = compare(cfg, &rs, &full, &rom, cfg.grid()?.dx)?;
    report.write_csv(&cfg.out_dir.join(COMPARISON_FILE))?;
    report.write_summary(&cfg.out_dir.join(SUMMARY_FILE))?;
    Ok(report)
}
