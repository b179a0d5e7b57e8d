//! Single-geometry runs: hierarchy, solves for every model, and output files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use vnotch_core::adaptive::{build_hierarchy, solve_on_hierarchy, AdaptiveOptions, Hierarchy};
use vnotch_core::assembly::DiscreteField;
use vnotch_core::constitutive::MaterialModel;
use vnotch_core::geometry::{build_vc_boundary, BoundaryData, GeometryParams};
use vnotch_core::mesh::io::{read_vcmesh, write_vcmesh, write_vtk_p2};
use vnotch_core::mesh::Mesh;
use vnotch_core::postprocess::{
    cell_stress_strain, distances, line_profile, max_component, standard_profile_lines, Component, Distances, Extremum,
};
use vnotch_core::solver::SolveReport;

use crate::config::{ModelSpec, RunConfig, Settings};
use crate::error::{CliError, Result};
use crate::table::{ConvergenceTable, LevelRow};

pub const MAXIMA_HEADER: [&str; 7] = ["alpha", "rc", "model", "maxT23", "maxE23", "x1", "x2"];
pub const DISTANCES_HEADER: [&str; 6] = ["alpha", "rc", "model", "DT2", "DT3", "DE1"];
pub const STATUS_FILE: &str = "status.json";

/// Column label of a model in the convergence table.
pub fn column_label(spec: &ModelSpec) -> String {
    match spec.model {
        MaterialModel::Hooke { .. } => "LIN".to_string(),
        _ => spec.name.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct ModelResult {
    pub spec: ModelSpec,
    /// Relative `W^{1,2}` error of every level against the finest.
    pub errors: Vec<f64>,
    pub reports: Vec<SolveReport>,
    /// `(max T23, max E23)` on every level.
    pub level_maxima: Vec<[f64; 2]>,
    pub max_t23: Extremum,
    pub max_e23: Extremum,
    pub distances: Distances,
    /// Solution on the finest level.
    pub field: DiscreteField,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Failure {
    pub model: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct GeometryResult {
    pub alpha_deg: f64,
    pub rc: f64,
    pub hierarchy: Hierarchy,
    pub table: ConvergenceTable,
    pub models: Vec<ModelResult>,
    pub failures: Vec<Failure>,
}

impl GeometryResult {
    pub fn converged(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn model(&self, name: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.spec.name == name)
    }
}

fn solve_model(h: &Hierarchy, spec: &ModelSpec, settings: &Settings) -> Result<ModelResult> {
    let sol = solve_on_hierarchy(h, &spec.model, &settings.newton)?;
    let errors = sol.relative_errors()?;
    let level_maxima = sol
        .fields
        .iter()
        .map(|f| {
            [
                max_component(f, &spec.model, Component::T23).value,
                max_component(f, &spec.model, Component::E23).value,
            ]
        })
        .collect();
    let field = sol.fields.last().expect("nonempty hierarchy").clone();
    Ok(ModelResult {
        spec: spec.clone(),
        errors,
        reports: sol.reports,
        level_maxima,
        max_t23: max_component(&field, &spec.model, Component::T23),
        max_e23: max_component(&field, &spec.model, Component::E23),
        distances: distances(&field, &spec.model)?,
        field,
    })
}

/// Builds the hierarchy of one geometry and solves every configured model on
/// it. Model failures are collected rather than returned.
pub fn solve_geometry(alpha_deg: f64, rc: f64, settings: &Settings) -> Result<GeometryResult> {
    let boundary = Arc::new(build_vc_boundary(GeometryParams::from_degrees(alpha_deg, rc)?)?);
    let mut opts = AdaptiveOptions::new(settings.mesh_options(rc), settings.refinements);
    opts.theta = settings.theta;
    opts.data = BoundaryData::new(settings.traction);
    opts.exec = settings.execution();
    let hierarchy = build_hierarchy(boundary, &opts)?;
    let rows = hierarchy
        .meshes
        .iter()
        .enumerate()
        .map(|(k, m)| LevelRow::new(k, &m.stats()))
        .collect();
    let mut table = ConvergenceTable::new(rows);
    let mut models = Vec::new();
    let mut failures = Vec::new();
    for spec in &settings.models {
        match solve_model(&hierarchy, spec, settings) {
            Ok(r) => {
                table.add_column(&column_label(spec), r.errors.clone())?;
                models.push(r);
            }
            Err(e) => failures.push(Failure {
                model: spec.name.clone(),
                kind: e.kind().to_string(),
                message: e.to_string(),
            }),
        }
    }
    Ok(GeometryResult { alpha_deg, rc, hierarchy, table, models, failures })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelReport {
    pub model: String,
    pub material: MaterialModel,
    pub alpha_deg: f64,
    pub rc: f64,
    pub errors: Vec<f64>,
    pub levels: Vec<SolveReport>,
}

/// Completion marker of a run directory; sweeps use it to resume.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunStatus {
    pub alpha_deg: f64,
    pub rc: f64,
    pub refinements: usize,
    pub models: Vec<String>,
    pub converged: bool,
    pub failures: Vec<Failure>,
}

impl RunStatus {
    pub fn load(dir: &Path) -> Option<RunStatus> {
        let f = File::open(dir.join(STATUS_FILE)).ok()?;
        serde_json::from_reader(BufReader::new(f)).ok()
    }
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn mesh_file(level: usize) -> String {
    format!("mesh_level{level}.vcmesh")
}

pub fn field_file(model: &str) -> String {
    format!("field_{model}.csv")
}

fn write_maxima(g: &GeometryResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MAXIMA_HEADER)?;
    for m in &g.models {
        w.write_record([
            g.alpha_deg.to_string(),
            g.rc.to_string(),
            m.spec.name.clone(),
            m.max_t23.value.to_string(),
            m.max_e23.value.to_string(),
            m.max_t23.point[0].to_string(),
            m.max_t23.point[1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_distances(g: &GeometryResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DISTANCES_HEADER)?;
    for m in &g.models {
        let d = m.distances;
        w.write_record([
            g.alpha_deg.to_string(),
            g.rc.to_string(),
            m.spec.name.clone(),
            d.dt2.to_string(),
            d.dt3.to_string(),
            d.de1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_profiles(m: &ModelResult, samples: usize, dir: &Path) -> Result<()> {
    for (phi, start, end) in standard_profile_lines(m.field.mesh().boundary()) {
        let rows = line_profile(&m.field, &m.spec.model, start, end, samples)?;
        let mut w = csv::Writer::from_writer(create(dir.join(format!("profile_{}_{phi}.csv", m.spec.name)))?);
        w.write_record(["r", "T13", "T23", "E13", "E23"])?;
        for r in rows {
            w.write_record([r.r, r.t[0], r.t[1], r.e[0], r.e[1]].map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn write_field(field: &DiscreteField, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dof", "x1", "x2", "A"])?;
    for (i, (p, a)) in field.mesh().dof_points().iter().zip(field.coefficients()).enumerate() {
        w.write_record([i.to_string(), p[0].to_string(), p[1].to_string(), a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(mesh: Arc<Mesh>, path: &Path) -> Result<DiscreteField> {
    let mut r = csv::Reader::from_path(path)?;
    let mut coeffs = Vec::with_capacity(mesh.n_dofs());
    for rec in r.records() {
        let rec = rec?;
        let a = rec
            .get(3)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| CliError::Usage(format!("{}: bad row {:?}", path.display(), rec.position())))?;
        coeffs.push(a);
    }
    Ok(DiscreteField::new(mesh, coeffs)?)
}

/// Writes a P2 VTK file with nodal `A` and per-cell `T_v`, `E_v`.
pub fn write_field_vtk(field: &DiscreteField, model: &MaterialModel, out: impl Write) -> Result<()> {
    let (t, e) = cell_stress_strain(field, model);
    write_vtk_p2(field.mesh(), &[("A", field.coefficients())], &[("T_v", &t), ("E_v", &e)], out)?;
    Ok(())
}

/// Writes every artifact of a solved geometry into `dir`.
pub fn write_outputs(g: &GeometryResult, settings: &Settings, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, m) in g.hierarchy.meshes.iter().enumerate() {
        write_vcmesh(m, create(dir.join(mesh_file(k)))?)?;
    }
    g.table.write_csv(create(dir.join("convergence.csv"))?)?;
    fs::write(dir.join("convergence.txt"), g.table.render_text())?;
    write_maxima(g, create(dir.join("maxima.csv"))?)?;
    write_distances(g, create(dir.join("distances.csv"))?)?;
    for m in &g.models {
        write_profiles(m, settings.profile_samples, dir)?;
        write_field(&m.field, create(dir.join(field_file(&m.spec.name)))?)?;
        let report = ModelReport {
            model: m.spec.name.clone(),
            material: m.spec.model,
            alpha_deg: g.alpha_deg,
            rc: g.rc,
            errors: m.errors.clone(),
            levels: m.reports.clone(),
        };
        let mut f = create(dir.join(format!("report_{}.json", m.spec.name)))?;
        serde_json::to_writer_pretty(&mut f, &report)?;
        f.flush()?;
        if settings.vtk {
            write_field_vtk(&m.field, &m.spec.model, create(dir.join(format!("field_{}.vtk", m.spec.name)))?)?;
        }
    }
    let status = RunStatus {
        alpha_deg: g.alpha_deg,
        rc: g.rc,
        refinements: settings.refinements,
        models: settings.models.iter().map(|m| m.name.clone()).collect(),
        converged: g.converged(),
        failures: g.failures.clone(),
    };
    fs::write(dir.join(STATUS_FILE), serde_json::to_string_pretty(&status)?)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub result: GeometryResult,
}

/// Solves one geometry and writes its artifacts. Returns
/// [`CliError::NotConverged`] after writing when any model failed.
pub fn run_single(config: &RunConfig) -> Result<RunSummary> {
    let result = solve_geometry(config.alpha_deg, config.rc, &config.settings)?;
    write_outputs(&result, &config.settings, &config.output)?;
    if let Some(f) = result.failures.first() {
        return Err(CliError::NotConverged(format!(
            "{} of {} models failed; first: {}: {}",
            result.failures.len(),
            config.settings.models.len(),
            f.model,
            f.message
        )));
    }
    Ok(RunSummary { output: config.output.clone(), result })
}

/// Re-exports the finest-level field of `model` from a run directory as VTK.
pub fn export_vtk(dir: &Path, model: &str, out: &Path) -> Result<()> {
    let report: ModelReport = serde_json::from_reader(BufReader::new(
        File::open(dir.join(format!("report_{model}.json")))
            .map_err(|e| CliError::Usage(format!("{}: no report for model {model}: {e}", dir.display())))?,
    ))?;
    let level = report.levels.len().saturating_sub(1);
    let mesh = Arc::new(read_vcmesh(BufReader::new(File::open(dir.join(mesh_file(level)))?))?);
    let field = read_field(mesh, &dir.join(field_file(model)))?;
    write_field_vtk(&field, &report.material, create(out.to_path_buf())?)
}

/// Names of the models with a report in `dir`, sorted.
pub fn models_in(dir: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let n = e.file_name().into_string().ok()?;
            Some(n.strip_prefix("report_")?.strip_suffix(".json")?.to_string())
        })
        .collect();
    names.sort();
    Ok(names)
}
