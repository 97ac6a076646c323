//! Obstacle-oracle pipelines: single solves and parameter sweeps.
//!
//! `run_oracle_solve` resolves the flow past the configured body on its
//! truncated box and audits the three structural identities the solution
//! must satisfy — the energy identity `‖u‖²_D = d·Σ·e₁`, the a-priori bound
//! `‖u‖_D ≤ |Σ|^{1/2}`, and the agreement of the two independent force
//! routes (test-function coupling vs offset-contour stress integral). The
//! velocity and pressure are exported in the documented binary container for
//! downstream tooling.
//!
//! `run_oracle_sweep` drives either the ε-sweep (shrinking body, fixed box:
//! D-norms must decrease and the force must trend to zero) or the
//! invading-domain sweep (growing boxes at fixed body: successive D-norm
//! differences must shrink, Leray style).

use anyhow::{Context, Result};
use serde::Serialize;
use wallwake::grid::{WallNormalGrid, XGrid};
use wallwake::oracle::{
    self, ForceMethod, ObstacleConfig, ObstacleShape, OracleSolution, TruncatedDomain,
};

use crate::config::PipelineConfig;
use crate::report::{all_pass, write_json, Check};

/// Samples per direction of the exported uniform field window.
const EXPORT_NX: usize = 256;
const EXPORT_NY: usize = 257;

/// Fraction of the box kept by the export window (margin avoids asking the
/// spline for values at the outer boundary itself).
const EXPORT_SHRINK: f64 = 0.9;

/// Build the obstacle description from the pipeline configuration.
pub fn obstacle_from(cfg: &PipelineConfig) -> ObstacleConfig {
    ObstacleConfig {
        shape: ObstacleShape::Disk,
        epsilon: cfg.epsilon,
        wall_offset: cfg.wall_offset,
        direction: cfg.drift,
    }
}

/// Build the (possibly refined) truncated box from the configuration.
pub fn domain_from(cfg: &PipelineConfig, body: &ObstacleConfig) -> TruncatedDomain {
    let dom = TruncatedDomain::standard(body, cfg.box_index);
    if cfg.refine > 1.0 {
        dom.refined(cfg.refine)
    } else {
        dom
    }
}

/// Outcome of a single oracle solve.
#[derive(Debug, Serialize)]
pub struct OracleRunReport {
    pub config: PipelineConfig,
    /// Test-function force `Σ`.
    pub sigma: [f64; 2],
    /// Offset-contour stress force.
    pub sigma_stress: [f64; 2],
    /// Relative gap between the two force routes.
    pub force_gap: f64,
    /// Dirichlet seminorm `‖u‖_D`.
    pub d_norm: f64,
    /// `(‖u‖²_D, d·Σ·e₁, relative residual)`.
    pub energy: (f64, f64, f64),
    /// `‖u‖_D / |Σ|^{1/2}` (continuum value ≤ 1).
    pub apriori_ratio: f64,
    /// Largest cell-wise mass defect.
    pub divergence: f64,
    pub iterations: usize,
    pub contraction: Option<f64>,
    /// Mesh cells `(nx, ny)`.
    pub mesh: (usize, usize),
    /// File names (inside `out_dir`) of the exported fields.
    pub velocity_file: String,
    pub pressure_file: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Solve once and write `{name}-oracle.json` plus the two field containers.
pub fn run_oracle_solve(cfg: &PipelineConfig) -> Result<OracleRunReport> {
    cfg.validate().context("configuration stage")?;
    let body = obstacle_from(cfg);
    let dom = domain_from(cfg, &body);
    let sol = oracle::solve_truncated(&body, &dom, cfg.tolerances.solver_tol)
        .context("oracle stage")?;

    let sigma = oracle::compute_force(&sol, ForceMethod::TestFunction).context("force stage")?;
    let sigma_stress =
        oracle::compute_force(&sol, ForceMethod::StressIntegral).context("force stage")?;
    let mag = sigma[0].hypot(sigma[1]).max(1e-300);
    let force_gap = (sigma[0] - sigma_stress[0]).hypot(sigma[1] - sigma_stress[1]) / mag;

    let energy = sol.energy_identity();
    let apriori = sol.apriori_excess();

    let (velocity_file, pressure_file) = export_fields(cfg, &sol)?;

    let tol = &cfg.tolerances;
    let checks = vec![
        Check::at_most("energy identity relative residual", energy.2, tol.energy_identity_rel),
        Check::at_most("a-priori ratio ‖u‖_D / |Σ|^{1/2}", apriori, 1.0 + tol.apriori_margin),
        Check::at_most("force route relative gap", force_gap, tol.force_cross_gap),
    ];

    let report = OracleRunReport {
        config: cfg.clone(),
        sigma,
        sigma_stress,
        force_gap,
        d_norm: sol.d_norm(),
        energy,
        apriori_ratio: apriori,
        divergence: sol.divergence_residual(),
        iterations: sol.trace().iterations,
        contraction: sol.trace().contraction_factor(),
        mesh: (sol.mesh().nx(), sol.mesh().ny()),
        velocity_file,
        pressure_file,
        pass: all_pass(&checks),
        checks,
    };
    write_json(&cfg.artifact("oracle.json"), &report).context("report stage")?;
    Ok(report)
}

/// Export velocity and pressure on a uniform window inside the box.
fn export_fields(cfg: &PipelineConfig, sol: &OracleSolution) -> Result<(String, String)> {
    let half = sol.domain().half_width * EXPORT_SHRINK;
    let top = wallwake::grid::WALL_Y + sol.domain().height * EXPORT_SHRINK;
    let x = XGrid::centered(half, EXPORT_NX).context("export stage")?;
    let y = WallNormalGrid::uniform(top, EXPORT_NY).context("export stage")?;
    let vel = sol.velocity_on(&x, &y).context("export stage")?;
    let p = sol.pressure_on(&x, &y);

    let vpath = cfg.artifact("oracle-velocity.wwf");
    let ppath = cfg.artifact("oracle-pressure.wwf");
    if let Some(dir) = vpath.parent() {
        std::fs::create_dir_all(dir).context("export stage")?;
    }
    wallwake::io::write_vector_field(&vpath, &vel).context("export stage")?;
    wallwake::io::write_scalar_field(&ppath, &p).context("export stage")?;
    let name = |p: &std::path::Path| p.file_name().unwrap().to_string_lossy().into_owned();
    Ok((name(&vpath), name(&ppath)))
}

/// Which family the sweep runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepKind {
    /// Shrinking body at fixed box.
    Epsilon,
    /// Growing boxes at fixed body.
    Invading,
}

/// One solved member of a sweep.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    /// Box index (invading) — zero for ε rows.
    pub index: usize,
    pub epsilon: f64,
    pub d_norm: f64,
    pub sigma: [f64; 2],
    pub sigma_magnitude: f64,
    pub iterations: usize,
}

/// Outcome of a sweep run.
#[derive(Debug, Serialize)]
pub struct SweepRunReport {
    pub config: PipelineConfig,
    pub kind: SweepKind,
    pub rows: Vec<SweepRow>,
    /// Whether the family's monotonicity property holds (D-norms decreasing
    /// along ε, or successive D-differences decreasing along boxes).
    pub monotone: bool,
    /// Successive D-norm differences (invading sweeps only).
    pub cauchy: Vec<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Run the requested sweep and write `{name}-sweep.json`.
pub fn run_oracle_sweep(cfg: &PipelineConfig, kind: SweepKind) -> Result<SweepRunReport> {
    cfg.validate().context("configuration stage")?;
    let body = obstacle_from(cfg);
    let tol = &cfg.tolerances;

    let (entries, cauchy, monotone, checks) = match kind {
        SweepKind::Epsilon => {
            let eps: Vec<f64> =
                cfg.sweep_epsilons.iter().map(|&e| e * cfg.wall_offset).collect();
            let rep = oracle::epsilon_sweep(&body, &eps, cfg.box_index, tol.solver_tol)
                .context("sweep stage")?;
            let first = rep.entries.first().map_or(0.0, |e| e.d_norm);
            let last = rep.entries.last().map_or(0.0, |e| e.d_norm);
            let sig_first = rep.entries.first().map_or(0.0, |e| e.sigma[0].hypot(e.sigma[1]));
            let sig_last = rep.entries.last().map_or(0.0, |e| e.sigma[0].hypot(e.sigma[1]));
            let checks = vec![
                Check::at_most("final/initial D-norm", last / first.max(1e-300), 1.0),
                Check::at_most("final/initial |Σ|", sig_last / sig_first.max(1e-300), 1.0),
            ];
            let monotone = rep.d_norms_decreasing(tol.sweep_slack);
            (rep.entries, Vec::new(), monotone, checks)
        }
        SweepKind::Invading => {
            let rep = oracle::invading_sweep(&body, &cfg.sweep_boxes, tol.solver_tol)
                .context("sweep stage")?;
            let apriori = Check::at_most(
                "a-priori violations along the family",
                (!rep.apriori_ok) as u8 as f64,
                0.0,
            );
            let monotone = rep.cauchy_decreasing();
            (rep.entries, rep.cauchy, monotone, vec![apriori])
        }
    };

    let rows: Vec<SweepRow> = entries
        .iter()
        .map(|e| SweepRow {
            index: e.index,
            epsilon: e.epsilon,
            d_norm: e.d_norm,
            sigma: e.sigma,
            sigma_magnitude: e.sigma[0].hypot(e.sigma[1]),
            iterations: e.iterations,
        })
        .collect();

    let report = SweepRunReport {
        config: cfg.clone(),
        kind,
        rows,
        monotone,
        cauchy,
        pass: monotone && all_pass(&checks),
        checks,
    };
    write_json(&cfg.artifact("sweep.json"), &report).context("report stage")?;
    Ok(report)
}
