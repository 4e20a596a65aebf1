//! Batch runs from a JSON config: parsing, task dispatch and report emission.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientSpec;
use crate::error::{LabError, Result};
use crate::geom::{mesh_load, mesh_shape, Surface};
use crate::ineq::{
    ball_volume_bounds, divergence_identity_check, iso_chain, poincare_einstein, poincare_einstein_region,
    poincare_spaceform, OperatorField, Report, SampledData, EQ_TOL,
};
use crate::measure::{intrinsic_ball, param_box, whole_surface, Quadrature, Region, WeightData};
use crate::measure::{DEFAULT_MAX_LEVEL, DEFAULT_REL_TOL};
use crate::rigidity::{
    decay_scan, default_radii, rigidity_checklist, Checklist, ChecklistParams, DecayScan, DecayWeight, Statement,
    Thresholds,
};
use crate::soliton::{
    reevaluated_residual, shoot, soliton_residual, hyperplane_check, Closure, Exponent, ResidualField, ShootOptions,
    ShootResult, SolitonCheck, SolitonCheckParams, SolitonSpec,
};
use crate::symfun::{norms_and_bounds, sym_all};

pub const SCHEMA: u32 = 1;

/// Exponent given as a number or as `"p/q"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentArg {
    Number(f64),
    Text(String),
}

impl ExponentArg {
    pub fn resolve(&self) -> Result<Exponent> {
        match self {
            ExponentArg::Number(v) => Exponent::real(*v),
            ExponentArg::Text(t) => parse_exponent(t),
        }
    }
}

/// `"p/q"` with odd `p`, `q` keeps the tag; anything else is read as a real.
pub fn parse_exponent(text: &str) -> Result<Exponent> {
    let bad = || LabError::Argument(format!("cannot read exponent {text:?}"));
    match text.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            if p % 2 != 0 && q % 2 != 0 {
                Exponent::odd_rational(p, q)
            } else {
                Exponent::real(p as f64 / q as f64)
            }
        }
        None => Exponent::real(text.trim().parse().map_err(|_| bad())?),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    #[default]
    Whole,
    /// Intrinsic ball about a chart parameter.
    Ball { center: Vec<f64>, radius: f64 },
    /// Parameter box of the global chart.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl RegionSpec {
    pub fn build(&self, surface: &Surface) -> Result<Region> {
        match self {
            RegionSpec::Whole => whole_surface(surface),
            RegionSpec::Ball { center, radius } => intrinsic_ball(surface, center, *radius),
            RegionSpec::Box { lo, hi } => param_box(surface, lo.clone(), hi.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rel_tol")]
    pub quad_rel_tol: f64,
    #[serde(default = "default_max_level")]
    pub quad_max_level: usize,
    /// Relative slack before a violated inequality counts as a failure.
    #[serde(default = "default_eq_tol")]
    pub eq_tol: f64,
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn default_max_level() -> usize {
    DEFAULT_MAX_LEVEL
}

fn default_eq_tol() -> f64 {
    EQ_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad_rel_tol: DEFAULT_REL_TOL,
            quad_max_level: DEFAULT_MAX_LEVEL,
            eq_tol: EQ_TOL,
        }
    }
}

impl Tolerances {
    pub fn quadrature(&self) -> Quadrature {
        Quadrature {
            rel_tol: self.quad_rel_tol,
            max_level: self.quad_max_level,
            ..Quadrature::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub csv: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, csv: true }
    }
}

/// One unit of work. Surface, region and weights fall back to the
/// config-level values when not given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    PoincareSpaceform {
        r: usize,
        #[serde(default)]
        surface: Option<Surface>,
        #[serde(default)]
        region: Option<RegionSpec>,
        #[serde(default)]
        weights: Option<WeightData>,
    },
    IsoChain {
        r: usize,
        #[serde(default)]
        surface: Option<Surface>,
        #[serde(default)]
        region: Option<RegionSpec>,
    },
    BallVolume {
        #[serde(default)]
        surface: Option<Surface>,
        center: Vec<f64>,
        radius: f64,
    },
    /// Sampled data when `data` is given, else the region of a space form.
    PoincareEinstein {
        #[serde(default)]
        ambient: Option<AmbientSpec>,
        #[serde(default)]
        data: Option<SampledData>,
        #[serde(default)]
        surface: Option<Surface>,
        #[serde(default)]
        region: Option<RegionSpec>,
        #[serde(default)]
        weights: Option<WeightData>,
    },
    DivergenceIdentity {
        #[serde(default)]
        surface: Option<Surface>,
        field: OperatorField,
        samples: Vec<Vec<f64>>,
    },
    DecayScan {
        #[serde(default)]
        surface: Option<Surface>,
        r: usize,
        weight: DecayWeight,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        #[serde(default)]
        thresholds: Thresholds,
    },
    Checklist {
        #[serde(default)]
        surface: Option<Surface>,
        statement: Statement,
        #[serde(default)]
        params: ChecklistParams,
    },
    SolitonShoot {
        r: usize,
        alpha: ExponentArg,
        delta: f64,
        m: usize,
        #[serde(default)]
        options: ShootOptions,
    },
    SolitonResidual {
        #[serde(default)]
        surface: Option<Surface>,
        r: usize,
        alpha: ExponentArg,
        delta: f64,
        #[serde(default)]
        c: f64,
        samples: Vec<Vec<f64>>,
    },
    SolitonCheck {
        #[serde(default)]
        surface: Option<Surface>,
        r: usize,
        alpha: ExponentArg,
        delta: f64,
        #[serde(default)]
        params: SolitonCheckParams,
    },
    /// Per-vertex curvature estimates of the config mesh.
    MeshSpectra {
        #[serde(default)]
        mesh: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    Verify,
    Scan,
    Soliton,
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::PoincareSpaceform { .. } => "poincare-spaceform",
            Task::IsoChain { .. } => "iso-chain",
            Task::BallVolume { .. } => "ball-volume",
            Task::PoincareEinstein { .. } => "poincare-einstein",
            Task::DivergenceIdentity { .. } => "divergence-identity",
            Task::DecayScan { .. } => "decay-scan",
            Task::Checklist { .. } => "checklist",
            Task::SolitonShoot { .. } => "soliton-shoot",
            Task::SolitonResidual { .. } => "soliton-residual",
            Task::SolitonCheck { .. } => "soliton-check",
            Task::MeshSpectra { .. } => "mesh-spectra",
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Task::DecayScan { .. } | Task::Checklist { .. } => Category::Scan,
            Task::SolitonShoot { .. } | Task::SolitonResidual { .. } | Task::SolitonCheck { .. } => Category::Soliton,
            _ => Category::Verify,
        }
    }

    fn surface_override(&self) -> Option<&Option<Surface>> {
        match self {
            Task::PoincareSpaceform { surface, .. }
            | Task::IsoChain { surface, .. }
            | Task::BallVolume { surface, .. }
            | Task::DivergenceIdentity { surface, .. }
            | Task::DecayScan { surface, .. }
            | Task::Checklist { surface, .. }
            | Task::SolitonResidual { surface, .. }
            | Task::SolitonCheck { surface, .. } => Some(surface),
            Task::PoincareEinstein { surface, data, .. } => data.is_none().then_some(surface),
            Task::SolitonShoot { .. } | Task::MeshSpectra { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub ambient: Option<AmbientSpec>,
    #[serde(default)]
    pub surface: Option<Surface>,
    #[serde(default)]
    pub mesh: Option<PathBuf>,
    #[serde(default)]
    pub region: RegionSpec,
    #[serde(default)]
    pub weights: WeightData,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

fn config_err(field: impl Into<String>, message: impl Into<String>) -> LabError {
    LabError::Config {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        // serde_json messages already end with the line and column.
        config_err(
            if path.is_empty() || path == "." { "<root>".to_string() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(config_err("schema", format!("unsupported schema {}, expected {SCHEMA}", self.schema)));
        }
        if self.tasks.is_empty() {
            return Err(config_err("tasks", "task list is empty"));
        }
        let t = &self.tolerances;
        if !(t.quad_rel_tol > 0.0) || !(t.eq_tol > 0.0) || t.quad_max_level == 0 {
            return Err(config_err("tolerances", "tolerances must be positive"));
        }
        if let Some(s) = &self.surface {
            s.validate().map_err(|e| config_err("surface", e.to_string()))?;
        }
        if let Some(a) = &self.ambient {
            a.validate().map_err(|e| config_err("ambient", e.to_string()))?;
        }
        for (i, task) in self.tasks.iter().enumerate() {
            let field = format!("tasks[{i}]");
            if let Some(over) = task.surface_override() {
                match over.as_ref().or(self.surface.as_ref()) {
                    None => return Err(config_err(field, format!("{} needs a surface", task.kind()))),
                    Some(s) => s.validate().map_err(|e| config_err(&field, e.to_string()))?,
                }
            }
            match task {
                Task::MeshSpectra { mesh } if mesh.is_none() && self.mesh.is_none() => {
                    return Err(config_err(field, "mesh-spectra needs a mesh path"));
                }
                Task::PoincareEinstein { ambient, .. } if ambient.is_none() && self.ambient.is_none() => {
                    return Err(config_err(field, "poincare-einstein needs an ambient"));
                }
                Task::SolitonShoot { alpha, .. }
                | Task::SolitonResidual { alpha, .. }
                | Task::SolitonCheck { alpha, .. } => {
                    alpha.resolve().map_err(|e| config_err(format!("{field}.alpha"), e.to_string()))?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn has_category(&self, category: Category) -> bool {
        self.tasks.iter().any(|t| t.category() == category)
    }
}

/// Shooting result without the tabulated profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShootSummary {
    pub m: usize,
    pub spec: SolitonSpec,
    pub closure: Closure,
    pub start_z: f64,
    pub event: f64,
    pub iterations: usize,
    pub radius: f64,
    pub richardson: f64,
    pub drift: f64,
    pub reevaluated_residual: Option<f64>,
    pub profile_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub spec: SolitonSpec,
    pub sup: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub underdetermined: usize,
    pub boundary: usize,
    /// Vertices where a coefficient or Newton bound fails.
    pub bound_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Body {
    Inequality(Report),
    Divergence { residual: f64 },
    Scan(DecayScan),
    Checklist(Checklist),
    Shoot(ShootSummary),
    Residual(ResidualSummary),
    SolitonCheck(SolitonCheck),
    Mesh(MeshSummary),
    Error { error: String },
}

/// One element of the report array.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub schema: u32,
    pub task: usize,
    pub kind: String,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub task: usize,
    pub kind: String,
    pub reason: String,
}

/// A CSV table produced by a task.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub entries: Vec<Entry>,
    pub tables: Vec<Table>,
    pub failures: Vec<Failure>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failures.is_empty())
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn table(name: String, header: &[&str], rows: Vec<Vec<String>>) -> Table {
    Table {
        name,
        header: header.iter().map(|h| h.to_string()).collect(),
        rows,
    }
}

fn num_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| fmt_f64(*v)).collect()
}

pub fn profile_table(name: String, res: &ShootResult) -> Table {
    let rows = res
        .profile
        .iter()
        .map(|p| num_row(&[p.s, p.x, p.z, p.theta, p.k_profile, p.k_rot, p.residual]))
        .collect();
    table(name, &["s", "x", "z", "theta", "kappa_1", "kappa_2", "residual"], rows)
}

struct Ctx<'a> {
    config: &'a RunConfig,
    quad: Quadrature,
}

impl Ctx<'_> {
    fn surface<'s>(&'s self, over: &'s Option<Surface>) -> Result<&'s Surface> {
        over.as_ref()
            .or(self.config.surface.as_ref())
            .ok_or_else(|| config_err("surface", "no surface given"))
    }

    fn region(&self, surface: &Surface, over: &Option<RegionSpec>) -> Result<Region> {
        over.as_ref().unwrap_or(&self.config.region).build(surface)
    }

    fn weights<'w>(&'w self, over: &'w Option<WeightData>) -> &'w WeightData {
        over.as_ref().unwrap_or(&self.config.weights)
    }

    fn ambient<'s>(&'s self, over: &'s Option<AmbientSpec>) -> Result<&'s AmbientSpec> {
        over.as_ref()
            .or(self.config.ambient.as_ref())
            .ok_or_else(|| config_err("ambient", "no ambient given"))
    }

    fn run(&self, index: usize, task: &Task) -> Result<(Vec<Body>, Vec<Table>)> {
        let quad = &self.quad;
        let name = |what: &str| format!("task-{index:03}-{what}");
        let reports = |v: Vec<Report>| v.into_iter().map(Body::Inequality).collect();
        Ok(match task {
            Task::PoincareSpaceform { r, surface, region, weights } => {
                let s = self.surface(surface)?;
                (reports(poincare_spaceform(&self.region(s, region)?, *r, self.weights(weights), quad)?), vec![])
            }
            Task::IsoChain { r, surface, region } => {
                let s = self.surface(surface)?;
                (reports(iso_chain(&self.region(s, region)?, *r, quad)?), vec![])
            }
            Task::BallVolume { surface, center, radius } => {
                (reports(ball_volume_bounds(self.surface(surface)?, center, *radius, quad)?), vec![])
            }
            Task::PoincareEinstein { ambient, data, surface, region, weights } => {
                let ambient = self.ambient(ambient)?;
                let out = match data {
                    Some(d) => poincare_einstein(d, ambient)?,
                    None => {
                        let s = self.surface(surface)?;
                        poincare_einstein_region(&self.region(s, region)?, ambient, self.weights(weights), quad)?
                    }
                };
                (reports(out), vec![])
            }
            Task::DivergenceIdentity { surface, field, samples } => {
                let chart = self.surface(surface)?.chart()?;
                let residual = divergence_identity_check(&chart, field, samples)?;
                (vec![Body::Divergence { residual }], vec![])
            }
            Task::DecayScan { surface, r, weight, center, radii, thresholds } => {
                let s = self.surface(surface)?;
                let center = match center {
                    Some(c) => c.clone(),
                    None => s.chart()?.domain.center(),
                };
                let scan = decay_scan(s, &center, *r, *weight, radii, quad, thresholds)?;
                let rows = (0..scan.radii.len())
                    .map(|i| num_row(&[scan.radii[i], scan.integrals[i], scan.weights[i], scan.values[i]]))
                    .collect();
                let t = table(name("decay-scan"), &["radius", "integral", "weight", "value"], rows);
                (vec![Body::Scan(scan)], vec![t])
            }
            Task::Checklist { surface, statement, params } => {
                let c = rigidity_checklist(self.surface(surface)?, *statement, params, quad)?;
                (vec![Body::Checklist(c)], vec![])
            }
            Task::SolitonShoot { r, alpha, delta, m, options } => {
                let spec = SolitonSpec::new(*r, alpha.resolve()?, *delta)?;
                let res = shoot(&spec, *m, options)?;
                let reevaluated = match res.closure {
                    Closure::Closed => Some(reevaluated_residual(&res, 400)?),
                    _ => None,
                };
                let summary = ShootSummary {
                    m: res.m,
                    spec: res.spec.clone(),
                    closure: res.closure,
                    start_z: res.start.z,
                    event: res.event,
                    iterations: res.iterations,
                    radius: res.radius,
                    richardson: res.richardson,
                    drift: res.drift,
                    reevaluated_residual: reevaluated,
                    profile_rows: res.profile.len(),
                };
                (vec![Body::Shoot(summary)], vec![profile_table(name("profile"), &res)])
            }
            Task::SolitonResidual { surface, r, alpha, delta, c, samples } => {
                let mut spec = SolitonSpec::new(*r, alpha.resolve()?, *delta)?;
                spec.c = *c;
                let field: ResidualField = soliton_residual(&self.surface(surface)?.chart()?, &spec, samples)?;
                let rows = field
                    .samples
                    .iter()
                    .map(|s| {
                        let mut row: Vec<String> = vec![s.u.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ")];
                        row.extend(num_row(&[s.s_next, s.support, s.residual]));
                        row
                    })
                    .collect();
                let t = table(name("residual"), &["u", "s_next", "support", "residual"], rows);
                let summary = ResidualSummary {
                    spec,
                    sup: field.sup,
                    samples: field.samples.len(),
                };
                (vec![Body::Residual(summary)], vec![t])
            }
            Task::SolitonCheck { surface, r, alpha, delta, params } => {
                let spec = SolitonSpec::new(*r, alpha.resolve()?, *delta)?;
                let check = hyperplane_check(self.surface(surface)?, &spec, params, quad)?;
                (vec![Body::SolitonCheck(check)], vec![])
            }
            Task::MeshSpectra { mesh } => {
                let path = mesh
                    .as_ref()
                    .or(self.config.mesh.as_ref())
                    .ok_or_else(|| config_err("mesh", "no mesh given"))?;
                let patch = mesh_load(path)?;
                let shapes: Vec<_> = (0..patch.len())
                    .into_par_iter()
                    .map(|v| mesh_shape(&patch, v))
                    .collect::<Result<_>>()?;
                let mut summary = MeshSummary {
                    vertices: shapes.len(),
                    underdetermined: 0,
                    boundary: 0,
                    bound_violations: 0,
                };
                let mut rows = Vec::with_capacity(shapes.len());
                for sh in &shapes {
                    let spec = &sh.point.spectrum;
                    let ok = (0..spec.m()).all(|r| {
                        norms_and_bounds(spec, r).is_ok_and(|b| b.s_bounds_hold && b.newton_bound_holds)
                    });
                    summary.underdetermined += usize::from(sh.underdetermined);
                    summary.boundary += usize::from(sh.boundary);
                    summary.bound_violations += usize::from(!ok);
                    let table = sym_all(spec);
                    let p = &patch.vertices[sh.vertex];
                    let mut row = vec![sh.vertex.to_string()];
                    row.extend(num_row(&[p.x, p.y, p.z]));
                    row.extend(num_row(spec.lambdas()));
                    row.extend(num_row(&[table.h(1), table.h(2)]));
                    row.push(sh.boundary.to_string());
                    row.push(sh.underdetermined.to_string());
                    rows.push(row);
                }
                let t = table(
                    name("mesh"),
                    &["vertex", "x", "y", "z", "kappa_1", "kappa_2", "h_1", "h_2", "boundary", "underdetermined"],
                    rows,
                );
                (vec![Body::Mesh(summary)], vec![t])
            }
        })
    }
}

fn is_hard_failure(body: &Body, eq_tol: f64) -> Option<String> {
    match body {
        Body::Inequality(r) if r.applicable && r.margin < -eq_tol * (r.lhs.abs() + r.rhs.abs()) => {
            Some(format!("{} violated: lhs {} > rhs {}", r.inequality_id, r.lhs, r.rhs))
        }
        Body::Inequality(r) if !(r.lhs.is_finite() && r.rhs.is_finite()) => {
            Some(format!("{} produced a non-finite value", r.inequality_id))
        }
        Body::Error { error } => Some(error.clone()),
        _ => None,
    }
}

/// Runs every task; entries come out in declaration order whatever the
/// completion order.
pub fn run_config(config: &RunConfig) -> RunOutput {
    run_selected(config, None)
}

/// Runs the tasks of one category, or all of them. Entries keep the
/// declaration index of their task.
pub fn run_selected(config: &RunConfig, category: Option<Category>) -> RunOutput {
    let ctx = Ctx {
        config,
        quad: config.tolerances.quadrature(),
    };
    let results: Vec<_> = config
        .tasks
        .par_iter()
        .enumerate()
        .filter(|(_, task)| category.is_none_or(|c| task.category() == c))
        .map(|(i, task)| (i, task.kind(), ctx.run(i, task)))
        .collect();
    let mut out = RunOutput::default();
    for (i, kind, res) in results {
        let (bodies, tables) = match res {
            Ok(v) => v,
            Err(e) => (vec![Body::Error { error: e.to_string() }], vec![]),
        };
        for body in bodies {
            if let Some(reason) = is_hard_failure(&body, config.tolerances.eq_tol) {
                out.failures.push(Failure {
                    task: i,
                    kind: kind.to_string(),
                    reason,
                });
            }
            out.entries.push(Entry {
                schema: SCHEMA,
                task: i,
                kind: kind.to_string(),
                body,
            });
        }
        out.tables.extend(tables);
    }
    out
}

/// Writes floats with 17 significant digits.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Compact JSON with fixed float formatting.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser).expect("report values serialize");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// JSON array with one entry per line.
pub fn render_reports<T: Serialize>(entries: &[T]) -> String {
    let mut s = String::from("[\n");
    for (i, e) in entries.iter().enumerate() {
        let sep = if i + 1 < entries.len() { "," } else { "" };
        let _ = writeln!(s, "{}{sep}", to_json(e));
    }
    s.push_str("]\n");
    s
}

pub fn render_table(t: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| LabError::Io(e.to_string());
    w.write_record(&t.header).map_err(io_err)?;
    for row in &t.rows {
        w.write_record(row).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Io(e.to_string()))
}

/// Writes `report.json`, CSV tables and, when anything failed,
/// `failures.json`. Returns the written paths.
pub fn write_outputs(dir: &Path, out: &RunOutput, csv: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("report.json".into(), render_reports(&out.entries))?;
    if csv {
        for t in &out.tables {
            put(format!("{}.csv", t.name), render_table(t)?)?;
        }
    }
    if !out.failures.is_empty() {
        put("failures.json".into(), render_reports(&out.failures))?;
    }
    Ok(written)
}
