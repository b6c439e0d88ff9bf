//! Command implementations behind the `slipfsi` binary. Each returns the
//! process exit code on success; errors map through [`Error::exit_code`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{FluidInitial, RunConfig};
use crate::coupled::CoupledOperator;
use crate::error::{Error, Result};
use crate::geometry::io::write_mesh;
use crate::output::{flowmap_csv, json_report, matrix_market, series_csv, snapshot_vtk, write_file};
use crate::picard::{ContractionLog, RunStatus, Simulation, Simulator};
use crate::spectral::{spectrum_with_sector, DecayFit, SectorGrid, SpectralReport};
use crate::stokes::assemble_stokes;
use crate::verify::{run_suites, Suite, VerifyReport};

pub const CONTRACTION_SCHEMA: &str = "slipfsi-contraction v1";
pub const SPECTRUM_SCHEMA: &str = "slipfsi-spectrum v1";
pub const FIELD_SCHEMA: &str = "slipfsi-field v1";

/// Command-line switches that extend the config's output section.
#[derive(Debug, Clone, Default)]
pub struct SimulateOverrides {
    pub out: Option<PathBuf>,
    pub dump_flowmap: bool,
    pub dump_state: bool,
    pub dump_operators: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ContractionReport<'a> {
    status: &'a str,
    log: &'a ContractionLog,
    beta: f64,
    min_distance: Option<f64>,
    contact_level: Option<usize>,
    decay: Option<DecayFit>,
    message: Option<String>,
}

/// Initial fluid velocity file: one `[x, y, z]` per mesh vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub schema: String,
    pub velocity: Vec<[f64; 3]>,
}

fn initial_state(cfg: &RunConfig, sim: &Simulator) -> Result<Vec<f64>> {
    let xi = cfg.rigid_initial();
    match &cfg.initial.u0 {
        FluidInitial::Lifting => sim.lifted_initial(&xi),
        FluidInitial::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let field: FieldFile = serde_json::from_str(&text)?;
            if field.schema != FIELD_SCHEMA {
                return Err(Error::config("initial.u0.path", format!("field file schema must be \"{FIELD_SCHEMA}\"")));
            }
            let dofs = &sim.op.blocks.dofs;
            if field.velocity.len() != dofs.n_vertices {
                return Err(Error::config(
                    "initial.u0.path",
                    format!("field has {} vertices, mesh has {}", field.velocity.len(), dofs.n_vertices),
                ));
            }
            let mut full = vec![0.0; dofs.n_full()];
            for (v, u) in field.velocity.iter().enumerate() {
                full[3 * v..3 * v + 3].copy_from_slice(u);
            }
            Ok(dofs.from_full(&full, &xi))
        }
    }
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Global => "GLOBAL",
        RunStatus::Contact => "CONTACT",
        RunStatus::BlowupNorm => "BLOWUP_NORM",
    }
}

/// Runs a configured simulation and writes `run.csv`, `contraction.json`,
/// `config.json` and the requested dumps into the output directory.
/// Exit code 0 for a converged global run, 1 for contact, blow-up or a
/// failed contraction (whose log is still written).
pub fn cmd_simulate(config: &Path, overrides: &SimulateOverrides) -> Result<i32> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(out) = &overrides.out {
        cfg.output.dir = out.clone();
    }
    cfg.output.dump_flowmap |= overrides.dump_flowmap;
    cfg.output.dump_state |= overrides.dump_state;
    cfg.output.dump_operators |= overrides.dump_operators;
    cfg.validate()?;
    let out = cfg.output.dir.clone();

    let domain = cfg.domain()?;
    let body = cfg.body(&domain)?;
    let sim = Simulator::new(domain, body, cfg.model())?;
    write_file(out.join("config.json"), &cfg.normalized())?;
    if cfg.output.dump_operators {
        write_operators(&sim.op, &out)?;
    }
    let z0 = initial_state(&cfg, &sim)?;
    let beta = sim.domain.beta;
    let run = match sim.run(&z0, cfg.grid()?, &cfg.fixed_point_options()) {
        Ok(run) => run,
        Err(Error::NonContraction { ratio, iterations, log }) => {
            let message = format!("not contractive: last ratio {ratio:.4} after {iterations} iterations");
            let report = ContractionReport {
                status: "NON_CONTRACTION",
                log: &log,
                beta,
                min_distance: None,
                contact_level: None,
                decay: None,
                message: Some(message.clone()),
            };
            write_file(out.join("contraction.json"), &json_report(CONTRACTION_SCHEMA, &report)?)?;
            eprintln!("slipfsi: {message}");
            return Ok(1);
        }
        Err(e) => return Err(e),
    };
    write_outputs(&cfg, &sim, &run, &out)?;
    println!(
        "status {} after {} iterations, max ratio {:.4}, min distance {:.6} (beta/2 = {:.6}); output in {}",
        status_name(run.status),
        run.log.iterations,
        run.log.max_ratio(),
        run.min_distance,
        0.5 * beta,
        out.display()
    );
    Ok(if run.status == RunStatus::Global { 0 } else { 1 })
}

fn write_outputs(cfg: &RunConfig, sim: &Simulator, run: &Simulation, out: &Path) -> Result<()> {
    write_file(out.join("run.csv"), &series_csv(&run.series))?;
    let report = ContractionReport {
        status: status_name(run.status),
        log: &run.log,
        beta: sim.domain.beta,
        min_distance: Some(run.min_distance),
        contact_level: run.contact_level,
        decay: run.decay,
        message: None,
    };
    write_file(out.join("contraction.json"), &json_report(CONTRACTION_SCHEMA, &report)?)?;
    if !(cfg.output.dump_state || cfg.output.dump_flowmap) {
        return Ok(());
    }
    let map = sim.vertex_map(&run.trajectory)?;
    if cfg.output.dump_state {
        let steps = run.trajectory.grid.steps;
        let every = cfg.output.snapshot_every;
        for n in (0..=steps).filter(|n| n % every == 0 || *n == steps) {
            let snap = sim.snapshot(&run.trajectory, &map, n);
            write_file(out.join("snapshots").join(format!("state_{n:05}.vtk")), &snapshot_vtk(&sim.domain.mesh, &snap))?;
        }
    }
    if cfg.output.dump_flowmap {
        write_file(out.join("flowmap.csv"), &flowmap_csv(&map, &sim.domain.solid_vertices()))?;
    }
    Ok(())
}

fn write_operators(op: &CoupledOperator, out: &Path) -> Result<()> {
    let b = &op.blocks;
    let dir = out.join("operators");
    write_file(dir.join("mass.mtx"), &matrix_market(&b.mass, "fluid mass"))?;
    write_file(dir.join("mass_total.mtx"), &matrix_market(&op.mass_total, "mass with body momentum"))?;
    write_file(dir.join("stiffness.mtx"), &matrix_market(&b.stiffness, "viscous plus slip"))?;
    write_file(dir.join("divergence.mtx"), &matrix_market(&b.div, "divergence"))?;
    Ok(())
}

/// Runs the named suite, prints one line per check and optionally writes
/// the JSON report. Exit code 1 if any check fails.
pub fn cmd_verify(suite: &str, json: Option<&Path>) -> Result<i32> {
    let suites = Suite::parse(suite).ok_or_else(|| Error::Input(format!("unknown suite `{suite}`, expected transform|operator|spectral|picard|nonnewtonian|all")))?;
    let report: VerifyReport = run_suites(&suites)?;
    for c in &report.checks {
        println!("{c}");
    }
    if let Some(path) = json {
        write_file(path, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

#[derive(Serialize)]
struct SpectrumFile<'a> {
    eigenvalues: &'a [crate::spectral::Eigenvalue],
    eta0: f64,
    sector_bound: Option<f64>,
    grid: &'a Option<SectorGrid>,
    abscissa: f64,
    residuals: &'a [f64],
    converged: bool,
}

/// Rightmost eigenvalues of the linear operator of a config (ν = μ₀/2).
pub fn spectrum_report(cfg: &RunConfig, count: usize) -> Result<SpectralReport> {
    let domain = cfg.domain()?;
    let body = cfg.body(&domain)?;
    let op = CoupledOperator::new(assemble_stokes(&domain, cfg.model().rest_viscosity())?, body)?;
    spectrum_with_sector(&op, count, SectorGrid::right_half_plane(cfg.spectral.grid_modes))
}

pub fn cmd_spectrum(config: Option<&Path>, count: Option<usize>, out: Option<&Path>) -> Result<i32> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let count = count.unwrap_or(cfg.spectral.count);
    if count == 0 {
        return Err(Error::Input("--count must be at least 1".into()));
    }
    let r = spectrum_report(&cfg, count)?;
    let file = SpectrumFile {
        eigenvalues: &r.eigenvalues,
        eta0: r.eta0,
        sector_bound: r.sector_bound,
        grid: &r.grid,
        abscissa: r.abscissa,
        residuals: &r.residuals,
        converged: r.converged,
    };
    let text = json_report(SPECTRUM_SCHEMA, &file)?;
    match out {
        Some(p) => write_file(p, &text)?,
        None => println!("{text}"),
    }
    Ok(if r.converged && r.eta0 > 0.0 { 0 } else { 1 })
}

pub fn cmd_mesh(geometry: &str, out: Option<&Path>) -> Result<i32> {
    let cfg = RunConfig {
        geometry: geometry.to_string(),
        ..Default::default()
    };
    cfg.validate()?;
    let text = write_mesh(&cfg.domain()?.mesh);
    match out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}
