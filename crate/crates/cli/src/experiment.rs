//! Runs and k-sweeps: solve, evaluate diagnostics, write artifacts.
//!
//! Layout of an output directory:
//!
//! ```text
//! manifest.txt           inputs, versions, timings (re-runnable)
//! mesh.csv               cell_id,center,measure        (with --mesh-csv)
//! w_trajectory.csv       level,t,cell_id,x_K,w         (limit problem)
//! w_stats.csv            level,t,dt,newton_iterations,residual,used_fallback
//! closed_forms.txt       printed closed forms vs computed maps (dimerisation)
//! <job>/trajectory.csv   level,t,cell_id,x_K,u,v
//! <job>/stats.csv        solver statistics per step
//! <job>/diagnostics.csv  per-level functionals
//! <job>/translate.csv    field,kind,shift,value        (if requested)
//! <job>/summary.txt      human-readable summary
//! limit_table.csv        k,J_u,J_v                     (sweep)
//! sweep_summary.csv      k and the scalar diagnostics  (sweep)
//! ```
//!
//! A single run uses the output directory itself as `<job>`; a sweep uses one
//! subdirectory `k_<k>` per rate factor. Jobs run in parallel and write only
//! into their own directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use fastreact::diagnostics::{self, compare_to_limit, DiagnosticsReport, LimitComparison, TranslateKind};
use fastreact::limit::{self, WTrajectory};
use fastreact::{integrate, integrate_w, io, scheme, Mesh, OutputLevels, TimeGrid, Trajectory};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Also write `mesh.csv`.
    pub mesh_csv: bool,
    /// Command line echoed into the manifest.
    pub command: String,
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub k: f64,
    pub dir: PathBuf,
    pub report: DiagnosticsReport,
    pub steps: usize,
    pub max_newton_iterations: usize,
    pub fallback_steps: usize,
    pub elapsed: Duration,
}

impl JobResult {
    pub fn limit(&self) -> Option<&LimitComparison> {
        self.report.limit.as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub jobs: Vec<JobResult>,
    pub manifest: PathBuf,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Projects the configured initial data onto the mesh.
pub fn initial_state(cfg: &ExperimentConfig, mesh: &Mesh) -> CliResult<fastreact::State> {
    let init = &cfg.initial;
    Ok(scheme::project_initial(
        mesh,
        |x| init.eval(x[0]).0,
        |x| init.eval(x[0]).1,
        cfg.quadrature_order,
    )?)
}

/// Solves the limit problem if the config asks for it.
pub fn solve_limit(cfg: &ExperimentConfig, mesh: &Mesh) -> CliResult<Option<(TimeGrid, WTrajectory)>> {
    let Some(spec) = &cfg.limit_time else {
        return Ok(None);
    };
    let grid = spec.build()?;
    // w = u/alpha + v/beta does not depend on k
    let kin = cfg.kinetics.build(1.0)?;
    let init = &cfg.initial;
    let w0 = limit::project_initial_w(
        mesh,
        &kin,
        |x| init.eval(x[0]).0,
        |x| init.eval(x[0]).1,
        cfg.quadrature_order,
    )?;
    let traj = integrate_w(mesh, &kin, &grid, &w0, &cfg.solver, &OutputLevels::All)?;
    Ok(Some((grid, traj)))
}

fn kept<T: Clone>(items: &[T], levels: &OutputLevels, level_of: impl Fn(&T) -> usize) -> Vec<T> {
    let last = items.len().saturating_sub(1);
    items
        .iter()
        .filter(|s| levels.keeps(level_of(s), last))
        .cloned()
        .collect()
}

/// Integrates one `k`, evaluates diagnostics and writes the job artifacts into
/// `dir`.
pub fn run_job(
    cfg: &ExperimentConfig,
    k: f64,
    mesh: &Mesh,
    limit: Option<&WTrajectory>,
    dir: &Path,
) -> CliResult<JobResult> {
    let start = Instant::now();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let kin = cfg.kinetics.build(k)?;
    let grid = cfg.time.build()?;
    let s0 = initial_state(cfg, mesh)?;
    let traj = integrate(mesh, &kin, &grid, &s0, &cfg.solver, &OutputLevels::All)?;

    let mut report = DiagnosticsReport::build(mesh, &grid, &kin, &traj, None)?;
    if let Some(w) = limit {
        let closed = cfg.kinetics.dimerisation(k);
        report = report.with_limit(compare_to_limit(mesh, &kin, &traj, w, closed.as_ref())?);
    }

    let out = Trajectory {
        states: kept(&traj.states, &cfg.output.levels, |s| s.level),
        stats: Vec::new(),
    };
    let path = dir.join("trajectory.csv");
    let f = create(&path)?;
    io::write_trajectory(mesh, &out, f)?;
    let path = dir.join("stats.csv");
    io::write_stats(&traj.stats, create(&path)?)?;
    let path = dir.join("diagnostics.csv");
    report.write_csv(create(&path)?)?;

    let o = &cfg.output;
    if !o.translate_shifts.is_empty() || !o.translate_lags.is_empty() {
        let rows = diagnostics::translate_seminorms(mesh, &grid, &kin, &traj, &o.translate_shifts, &o.translate_lags)?;
        let path = dir.join("translate.csv");
        let mut w = create(&path)?;
        let mut text = String::from("field,kind,shift,value\n");
        for r in rows {
            let kind = match r.kind {
                TranslateKind::Space => "space",
                TranslateKind::Time => "time",
            };
            text.push_str(&format!("{},{kind},{:.17e},{:.17e}\n", r.field, r.shift, r.value));
        }
        w.write_all(text.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        finish(w, &path)?;
    }
    write_text(&dir.join("summary.txt"), &format!("{report}\n"))?;

    Ok(JobResult {
        k,
        dir: dir.to_path_buf(),
        steps: traj.stats.len(),
        max_newton_iterations: traj.stats.iter().map(|s| s.newton_iterations).max().unwrap_or(0),
        fallback_steps: traj.stats.iter().filter(|s| s.used_fallback).count(),
        report,
        elapsed: start.elapsed(),
    })
}

fn write_shared(
    cfg: &ExperimentConfig,
    mesh: &Mesh,
    out_dir: &Path,
    opts: &RunOptions,
    limit: Option<&WTrajectory>,
    manifest: &mut Manifest,
) -> CliResult<()> {
    if opts.mesh_csv {
        let path = out_dir.join("mesh.csv");
        mesh.write_summary_csv(create(&path)?)?;
        manifest.outputs.push("mesh.csv".into());
    }
    if let Some(w) = limit {
        let out = WTrajectory {
            states: kept(&w.states, &cfg.output.levels, |s| s.level),
            stats: Vec::new(),
        };
        io::write_w_trajectory(mesh, &out, create(&out_dir.join("w_trajectory.csv"))?)?;
        io::write_stats(&w.stats, create(&out_dir.join("w_stats.csv"))?)?;
        manifest.outputs.push("w_trajectory.csv".into());
        manifest.outputs.push("w_stats.csv".into());
    }
    if let Some(d) = cfg.kinetics.dimerisation(1.0) {
        let w_max = cfg.mesh.length.max(1.0);
        let samples: Vec<f64> = (0..=20).map(|i| w_max * i as f64 / 20.0).collect();
        let rep = d.discrepancy_report(&samples)?;
        write_text(&out_dir.join("closed_forms.txt"), &format!("{rep}\n"))?;
        manifest.outputs.push("closed_forms.txt".into());
        if !rep.is_consistent(1e-10) {
            manifest
                .notes
                .push("printed closed forms h, g disagree with the computed maps; see closed_forms.txt".into());
        }
    }
    Ok(())
}

fn prepare(out_dir: &Path, cfg: &ExperimentConfig) -> CliResult<Mesh> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    cfg.build_mesh()
}

/// A single run; the config must carry exactly one `k`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> CliResult<Outcome> {
    let ks = cfg.k.values();
    if ks.len() != 1 {
        return Err(CliError::Config(format!(
            "run takes a single k, the config lists {} (use sweep)",
            ks.len()
        )));
    }
    let mesh = prepare(out_dir, cfg)?;
    let mut manifest = Manifest {
        command: opts.command.clone(),
        config_json: cfg.to_json(),
        ..Default::default()
    };
    let t = Instant::now();
    let limit = solve_limit(cfg, &mesh)?;
    manifest.timings.push(("limit solve".into(), t.elapsed()));
    let w = limit.as_ref().map(|(_, w)| w);
    let job = run_job(cfg, ks[0], &mesh, w, out_dir)?;
    manifest.timings.push((format!("k = {:e}", job.k), job.elapsed));
    for f in ["trajectory.csv", "stats.csv", "diagnostics.csv", "summary.txt"] {
        manifest.outputs.push(f.into());
    }
    write_shared(cfg, &mesh, out_dir, opts, w, &mut manifest)?;
    let path = out_dir.join("manifest.txt");
    write_text(&path, &manifest.render())?;
    Ok(Outcome {
        jobs: vec![job],
        manifest: path,
    })
}

pub fn job_dir_name(k: f64) -> String {
    format!("k_{k:e}")
}

/// Runs every `k` of the config as an independent parallel job.
pub fn sweep(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> CliResult<Outcome> {
    let mesh = prepare(out_dir, cfg)?;
    let ks = cfg.k.values();
    let mut names: Vec<String> = ks.iter().map(|&k| job_dir_name(k)).collect();
    names.sort();
    names.dedup();
    if names.len() != ks.len() {
        return Err(CliError::Config("k sweep list contains duplicates".into()));
    }
    let mut manifest = Manifest {
        command: opts.command.clone(),
        config_json: cfg.to_json(),
        ..Default::default()
    };
    let t = Instant::now();
    let limit = solve_limit(cfg, &mesh)?;
    manifest.timings.push(("limit solve".into(), t.elapsed()));
    let w = limit.as_ref().map(|(_, w)| w);
    let jobs = ks
        .par_iter()
        .map(|&k| {
            let single = cfg.with_k(k);
            run_job(&single, k, &mesh, w, &out_dir.join(job_dir_name(k)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    for j in &jobs {
        manifest.timings.push((format!("k = {:e}", j.k), j.elapsed));
        manifest.outputs.push(format!("{}/", job_dir_name(j.k)));
    }
    write_shared(cfg, &mesh, out_dir, opts, w, &mut manifest)?;
    write_text(&out_dir.join("sweep_summary.csv"), &sweep_summary_csv(&jobs))?;
    manifest.outputs.push("sweep_summary.csv".into());
    if w.is_some() {
        write_text(&out_dir.join("limit_table.csv"), &limit_table_csv(&jobs))?;
        manifest.outputs.push("limit_table.csv".into());
    }
    let path = out_dir.join("manifest.txt");
    write_text(&path, &manifest.render())?;
    Ok(Outcome { jobs, manifest: path })
}

/// `k,J_u,J_v` rows in sweep order.
pub fn limit_table_csv(jobs: &[JobResult]) -> String {
    let mut s = String::from("k,J_u,J_v\n");
    for j in jobs {
        if let Some(c) = j.limit() {
            s.push_str(&format!("{:e},{:.6e},{:.6e}\n", j.k, c.j_u, c.j_v));
        }
    }
    s
}

pub fn sweep_summary_csv(jobs: &[JobResult]) -> String {
    let mut s = String::from(
        "k,gradient_energy_u,gradient_energy_v,reaction_defect,max_mass_drift,max_lyapunov_increase,J_u,J_v,J_u_printed,J_v_printed,steps,max_newton_iterations,fallback_steps\n",
    );
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6e}"));
    for j in jobs {
        let r = j.report.last();
        let c = j.limit();
        s.push_str(&format!(
            "{:e},{:.6e},{:.6e},{:.6e},{:.3e},{:.3e},{},{},{},{},{},{},{}\n",
            j.k,
            r.gradient_energy_u,
            r.gradient_energy_v,
            r.reaction_defect,
            j.report.max_mass_drift(),
            j.report.max_lyapunov_increase(),
            opt(c.map(|c| c.j_u)),
            opt(c.map(|c| c.j_v)),
            opt(c.and_then(|c| c.j_u_printed)),
            opt(c.and_then(|c| c.j_v_printed)),
            j.steps,
            j.max_newton_iterations,
            j.fallback_steps
        ));
    }
    s
}

/// Table of `k`, `J_u`, `J_v` for the terminal.
pub fn limit_table_text(jobs: &[JobResult]) -> String {
    let mut s = format!("{:>10}  {:>14}  {:>14}\n", "k", "J_u", "J_v");
    for j in jobs {
        if let Some(c) = j.limit() {
            s.push_str(&format!("{:>10.0e}  {:>14.4e}  {:>14.4e}\n", j.k, c.j_u, c.j_v));
        }
    }
    s
}
