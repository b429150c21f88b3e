//! `solve-hj`, `solve-obstacle` and `measure`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use hjreg_core::grid::{Grid2D, ScalarField, VectorField2};
use hjreg_core::hamilton_jacobi::{
    solve_lower, solve_upper, solve_vanishing_viscosity, HjSolution, ShiftedEikonalProblem, Sign, SolveMeta, SweepConfig,
};
use hjreg_core::io::{self, Sidecar};
use hjreg_core::obstacle::{contact_sets, repair_order, solve_double_obstacle_traced, DoubleObstacleProblem};
use hjreg_core::oracles::{mueller_exact_solution, mueller_field, MuellerExample};
use hjreg_core::regularity::{
    anisotropic_oscillation, default_window, lattice_radii, lateral_modulus, local_plane_fit, normalize_at_point, onesided_modulus,
    regime_bound_q, select_q_block, theorem_bound, LateralReport, ModulusReport, Plane, QBound,
};
use hjreg_core::Error;

use crate::config::{BoundarySpec, CoefficientSpec, ExperimentConfig, FieldSource, MeasurementSettings, PlaneSpec};
use crate::error::CliError;

/// Grid, shift, boundary data and right-hand side built from a config.
pub struct Setup {
    pub grid: Arc<Grid2D<f64>>,
    pub a: VectorField2<f64>,
    pub f: ScalarField<f64>,
    pub rhs: ScalarField<f64>,
    pub mueller: Option<MuellerExample>,
}

fn config_err(what: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{what}: {e}"))
}

fn check_grid(grid: &Arc<Grid2D<f64>>, other: &Arc<Grid2D<f64>>, what: &str) -> Result<(), CliError> {
    if grid.n() != other.n() || grid.domain() != other.domain() {
        return Err(CliError::Config(format!("{what}: file grid does not match the configured domain and n")));
    }
    Ok(())
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let grid = Arc::new(Grid2D::new(cfg.domain.to_domain(), cfg.n).map_err(config_err("domain"))?);
        let mut mueller = None;
        let a = match &cfg.coefficient {
            CoefficientSpec::Mueller { alpha, scale } => {
                let ex = MuellerExample::with_scale(*alpha, *scale).map_err(config_err("coefficient.mueller"))?;
                mueller = Some(ex);
                mueller_field(&ex, &grid).map_err(config_err("coefficient.mueller"))?
            }
            CoefficientSpec::Constant { vector } => VectorField2::constant(grid.clone(), *vector),
            CoefficientSpec::File { path } => {
                let a = io::read_vector_field(path).map_err(config_err("coefficient.file"))?;
                check_grid(&grid, a.grid(), "coefficient.file")?;
                VectorField2::from_values(grid.clone(), a.values().to_vec())?
            }
        };
        let f = match &cfg.boundary {
            BoundarySpec::Zero => ScalarField::constant(grid.clone(), 0.0),
            BoundarySpec::MuellerTrace => {
                let ex = mueller.expect("validated: mueller_trace needs a mueller coefficient");
                mueller_exact_solution(&ex, &grid).map_err(config_err("boundary.mueller_trace"))?
            }
            BoundarySpec::File { path } => {
                let f = io::read_scalar_field(path).map_err(config_err("boundary.file"))?;
                check_grid(&grid, f.grid(), "boundary.file")?;
                ScalarField::from_values(grid.clone(), f.values().to_vec())?
            }
        };
        let rhs = ScalarField::constant(grid.clone(), cfg.rhs);
        Ok(Setup { grid, a, f, rhs, mueller })
    }

    pub fn problem(&self, sign: Sign) -> Result<ShiftedEikonalProblem<f64>, CliError> {
        let p = ShiftedEikonalProblem::new(self.a.clone(), self.f.clone(), sign).map_err(config_err("problem"))?;
        p.with_rhs(self.rhs.clone()).map_err(config_err("rhs"))
    }
}

pub fn sweep_config(cfg: &ExperimentConfig) -> SweepConfig {
    SweepConfig { tol: cfg.solver.tol, max_cycles: cfg.solver.max_cycles, scheme: cfg.solver.scheme, ..SweepConfig::default() }
}

fn config_value(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("configs serialize")
}

fn write_solution(out: &Path, stem: &str, sol: &HjSolution<f64>, cfg: &ExperimentConfig) -> Result<(), CliError> {
    io::write_scalar_field(&out.join(format!("{stem}.txt")), &sol.field)?;
    io::write_json(&out.join(format!("{stem}.json")), &Sidecar::new(&sol.meta, config_value(cfg)))?;
    Ok(())
}

/// Both extremal solutions of the configured problem.
pub fn solve_pair(setup: &Setup, cfg: &ExperimentConfig) -> Result<(HjSolution<f64>, HjSolution<f64>), CliError> {
    let sweep = sweep_config(cfg);
    let up = solve_upper(&setup.problem(Sign::Plus)?, &sweep)?;
    let low = solve_lower(&setup.problem(Sign::Minus)?, &sweep)?;
    Ok((up, low))
}

pub fn solve_hj(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let setup = Setup::build(cfg)?;
    let (up, low) = solve_pair(&setup, cfg)?;
    let mut viscous = Vec::new();
    for &eps in &cfg.solver.epsilon_schedule {
        viscous.push(solve_vanishing_viscosity(&setup.problem(Sign::Plus)?, eps, &sweep_config(cfg))?);
    }
    fs::create_dir_all(out).map_err(Error::from)?;
    write_solution(out, "h_plus", &up, cfg)?;
    write_solution(out, "h_minus", &low, cfg)?;
    for (i, sol) in viscous.iter().enumerate() {
        write_solution(out, &format!("h_eps{i}"), sol, cfg)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ContactSummary {
    count_plus: usize,
    count_minus: usize,
    tol_used: f64,
    repaired_nodes: usize,
}

/// Obstacle minimizer between the extremal solutions, with its contact sets.
pub fn obstacle_run(
    setup: &Setup,
    cfg: &ExperimentConfig,
) -> Result<(ScalarField<f64>, DoubleObstacleProblem<f64>, SolveMeta, usize), CliError> {
    let (up, low) = solve_pair(setup, cfg)?;
    let (lo, hi, repaired) = repair_order(&low.field, &up.field)?;
    let problem = DoubleObstacleProblem::new(lo, hi, setup.f.clone())?;
    let mut sweeps = 0usize;
    let u = solve_double_obstacle_traced(&problem, cfg.solver.obstacle_tol, cfg.solver.obstacle_max_iters, |_| sweeps += 1)?;
    let mut warnings = up.meta.warnings;
    warnings.extend(low.meta.warnings);
    if repaired > 0 {
        warnings.push(format!("obstacles crossed at {repaired} nodes and were set to their midpoint"));
    }
    let meta = SolveMeta { cycles: sweeps.saturating_sub(1), final_residual: cfg.solver.obstacle_tol, warnings };
    Ok((u, problem, meta, repaired))
}

pub fn solve_obstacle(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let setup = Setup::build(cfg)?;
    let (u, problem, meta, repaired) = obstacle_run(&setup, cfg)?;
    let sets = contact_sets(&u, &problem, None, cfg.solver.obstacle_tol);
    let (plus, minus) = sets.to_fields(&setup.grid)?;
    fs::create_dir_all(out).map_err(Error::from)?;
    io::write_scalar_field(&out.join("u.txt"), &u)?;
    io::write_json(&out.join("u.json"), &Sidecar::new(&meta, config_value(cfg)))?;
    io::write_scalar_field(&out.join("lambda_plus.txt"), &plus)?;
    io::write_scalar_field(&out.join("lambda_minus.txt"), &minus)?;
    let summary = ContactSummary { count_plus: sets.count_plus(), count_minus: sets.count_minus(), tol_used: sets.tol_used, repaired_nodes: repaired };
    io::write_json(&out.join("contact.json"), &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct LateralEntry {
    #[serde(flatten)]
    report: LateralReport,
    bound: QBound,
}

#[derive(Serialize)]
struct Diagnostics {
    center: [f64; 2],
    beta: f64,
    holder_a: f64,
    anisotropic_radii: Vec<f64>,
    anisotropic: Vec<f64>,
    lateral: Vec<LateralEntry>,
}

fn measured_field(setup: &Setup, cfg: &ExperimentConfig, m: &MeasurementSettings) -> Result<ScalarField<f64>, CliError> {
    Ok(match &m.field {
        FieldSource::Exact => mueller_exact_solution(&setup.mueller.expect("validated"), &setup.grid)?,
        FieldSource::Upper => solve_upper(&setup.problem(Sign::Plus)?, &sweep_config(cfg))?.field,
        FieldSource::Obstacle => obstacle_run(setup, cfg)?.0,
        FieldSource::File { path } => {
            let f = io::read_scalar_field(path).map_err(config_err("measurement.field.file"))?;
            check_grid(&setup.grid, f.grid(), "measurement.field.file")?;
            ScalarField::from_values(setup.grid.clone(), f.values().to_vec())?
        }
    })
}

pub fn measure(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let m = cfg.measurement.as_ref().ok_or_else(|| CliError::Config("measurement: section required".into()))?;
    let setup = Setup::build(cfg)?;
    let field = measured_field(&setup, cfg, m)?;
    let h = setup.grid.spacing();
    let mut files: Vec<(String, String)> = Vec::new();
    for (i, &c) in m.centers.iter().enumerate() {
        let depth = setup.grid.domain().depth(c);
        let plane = match &m.plane {
            PlaneSpec::Fit => local_plane_fit(&field, c, 3.0 * h)?,
            PlaneSpec::Given { value, gradient } => Plane { center: c, value: *value, gradient: *gradient },
        };
        let window = m.window.unwrap_or_else(|| default_window(h, depth));
        let radii = m.radii.clone().unwrap_or_else(|| lattice_radii(h, window[1], window[0], m.per_octave));
        let mut rep: ModulusReport = onesided_modulus(&field, c, &plane, &radii)?;
        // Too few radii in the window leaves the fit empty rather than failing the run.
        let _ = rep.fit(window);
        let bound = |r: f64| theorem_bound(r, m.holder_a, m.alpha, &m.constants).ok();
        rep.regime_switch_radius = bound(1.0).map(|b| b.switch_radius);
        files.push((format!("modulus_{i}.csv"), io::modulus_csv(&rep, bound)));
        files.push((format!("modulus_{i}.json"), json(&rep)?));

        if m.anisotropic_radii.is_empty() && (m.levels.is_empty() || m.deltas.is_empty()) {
            continue;
        }
        let beta = m.beta.unwrap_or(m.alpha / 2.0);
        let nd = normalize_at_point(&field, &setup.a, c, &plane)?;
        let anisotropic = anisotropic_oscillation(&nd, beta, m.holder_a, &m.anisotropic_radii)?;
        let block = select_q_block(m.holder_a, depth, beta);
        let mut lateral = Vec::new();
        for &level in &m.levels {
            for &delta in &m.deltas {
                let report = lateral_modulus(&nd, level, delta, beta, m.holder_a)?;
                let bound = regime_bound_q(delta, m.holder_a, depth, m.alpha, beta, block, &m.constants)?;
                lateral.push(LateralEntry { report, bound });
            }
        }
        let d = Diagnostics { center: c, beta, holder_a: m.holder_a, anisotropic_radii: m.anisotropic_radii.clone(), anisotropic, lateral };
        files.push((format!("diagnostics_{i}.json"), json(&d)?));
    }
    fs::create_dir_all(out).map_err(Error::from)?;
    for (name, text) in files {
        io::write_atomic(&out.join(name), text.as_bytes())?;
    }
    Ok(())
}

pub fn json<S: Serialize>(v: &S) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}
