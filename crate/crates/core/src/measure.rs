//! Regions, weighted quadrature, extrinsic diameters and intrinsic balls.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geom::chart::{ambient_distance, model_dot, Chart, SurfacePoint};
use crate::geom::Surface;

/// Gauss–Legendre nodes per cell and axis.
pub const NODES_PER_CELL: usize = 4;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_LEVEL: usize = 6;
/// Cap on the number of points used for diameters and enclosing balls.
pub const DIAMETER_BUDGET: usize = 6_000;
const ABS_FLOOR: f64 = 1e-13;

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Map from the reference cube `[0,1]^m` to chart parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionMap {
    Affine { lo: Vec<f64>, hi: Vec<f64> },
    /// Geodesic ball of radius `ball_radius > π·radius` on the cylinder
    /// `S¹(radius) × ℝ`, in the global `(θ, z)` chart: `θ` spans a full turn
    /// about `theta0` and `|z − z0| ≤ √(R² − radius²(θ − θ0)²)`.
    CylinderBand {
        radius: f64,
        ball_radius: f64,
        theta0: f64,
        z0: f64,
    },
}

impl RegionMap {
    /// Chart parameter and Jacobian `∂u/∂ξ`.
    pub fn eval(&self, xi: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        match self {
            RegionMap::Affine { lo, hi } => {
                let m = lo.len();
                let u = (0..m).map(|k| lo[k] + xi[k] * (hi[k] - lo[k])).collect();
                let jac = DMatrix::from_fn(m, m, |i, j| if i == j { hi[i] - lo[i] } else { 0.0 });
                (u, jac)
            }
            RegionMap::CylinderBand {
                radius,
                ball_radius,
                theta0,
                z0,
            } => {
                let half_arc = PI * radius;
                let a = half_arc * (2.0 * xi[0] - 1.0);
                let half = (ball_radius * ball_radius - a * a).max(0.0).sqrt();
                let t = 2.0 * xi[1] - 1.0;
                let u = vec![theta0 + a / radius, z0 + half * t];
                let dhalf = if half > 0.0 { -a / half } else { 0.0 };
                let jac = DMatrix::from_row_slice(
                    2,
                    2,
                    &[2.0 * half_arc / radius, 0.0, t * dhalf * 2.0 * half_arc, 2.0 * half],
                );
                (u, jac)
            }
        }
    }
}

/// A relatively compact domain in a chart.
#[derive(Clone, Debug)]
pub struct Region {
    pub chart: Chart,
    pub map: RegionMap,
    /// Faces `(axis, upper)` of the reference cube lying on `∂Ω`.
    pub boundary_faces: Vec<(usize, bool)>,
    /// Extra cell breaks per axis in reference coordinates.
    pub breakpoints: Vec<Vec<f64>>,
    /// Ball radius when axis 0 is the geodesic distance `R·ξ₀` to the center.
    pub radial: Option<f64>,
    /// The region is the whole compact surface.
    pub closed: bool,
    pub flags: BTreeMap<String, bool>,
    pub label: String,
}

/// One quadrature node with its weight (area element, Jacobian and rule weight).
#[derive(Clone, Debug)]
pub struct QuadSample {
    pub xi: Vec<f64>,
    pub point: SurfacePoint,
    pub weight: f64,
    /// Outward unit conormal for boundary samples (ambient vector).
    pub conormal: Option<DVector<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Interior,
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub min_level: usize,
    pub max_level: usize,
    /// Hard cap on nodes per level.
    pub max_points: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            min_level: 1,
            max_level: DEFAULT_MAX_LEVEL,
            max_points: 3_000_000,
        }
    }
}

/// Converged integrals of several integrands over the same samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Integration {
    pub values: Vec<f64>,
    pub level: usize,
    /// Largest `|I_L − I_{L−1}| / Σ w|g|` over components.
    pub achieved: f64,
    pub history: Vec<Vec<f64>>,
    /// The requested boundary was empty.
    pub empty: bool,
}

fn gl_rule() -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(NODES_PER_CELL).expect("nonzero"))
        .as_node_weight_pairs()
        .to_vec()
}

/// Composite rule on `[0,1]` with `2^level` cells refined at `breaks`.
fn composite_rule(level: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    let cells = 1usize << level;
    let mut edges: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    edges.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let rule = gl_rule();
    let mut out = Vec::with_capacity((edges.len() - 1) * rule.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        for &(x, wt) in &rule {
            out.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * wt));
        }
    }
    out
}

fn tensor(rules: &[Vec<(f64, f64)>]) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for rule in rules {
        let mut next = Vec::with_capacity(out.len() * rule.len());
        for (xi, w) in &out {
            for &(x, wx) in rule {
                let mut p = xi.clone();
                p.push(x);
                next.push((p, w * wx));
            }
        }
        out = next;
    }
    out
}

impl Region {
    pub fn m(&self) -> usize {
        self.chart.m()
    }

    pub fn ambient_c(&self) -> f64 {
        self.chart.ambient_c
    }

    pub fn flag(&self, name: &str) -> bool {
        self.flags.get(name).copied().unwrap_or(false)
    }

    /// Whole parameter box of a chart; faces on open, non-degenerate ends
    /// are boundary.
    pub fn from_chart(chart: Chart, label: &str) -> Self {
        let d = &chart.domain;
        let m = d.dim();
        let mut faces = Vec::new();
        for k in 0..m {
            if d.periodic[k] {
                continue;
            }
            if !d.degenerate_lo[k] {
                faces.push((k, false));
            }
            if !d.degenerate_hi[k] {
                faces.push((k, true));
            }
        }
        let closed = faces.is_empty();
        let map = RegionMap::Affine {
            lo: d.lo.clone(),
            hi: d.hi.clone(),
        };
        Self {
            chart,
            map,
            boundary_faces: faces,
            breakpoints: vec![Vec::new(); m],
            radial: None,
            closed,
            flags: BTreeMap::new(),
            label: label.to_string(),
        }
    }

    pub fn with_breakpoint(mut self, axis: usize, xi: f64) -> Self {
        self.breakpoints[axis].push(xi);
        self
    }

    /// Chart parameter of a reference point.
    pub fn param(&self, xi: &[f64]) -> Vec<f64> {
        self.map.eval(xi).0
    }

    pub fn position(&self, xi: &[f64]) -> DVector<f64> {
        self.chart.position(&self.param(xi))
    }

    fn rules(&self, level: usize, extra: &[Vec<f64>], skip: Option<usize>) -> Vec<Vec<(f64, f64)>> {
        (0..self.m())
            .filter(|&k| Some(k) != skip)
            .map(|k| {
                let mut b = self.breakpoints[k].clone();
                if let Some(e) = extra.get(k) {
                    b.extend(e);
                }
                composite_rule(level, &b)
            })
            .collect()
    }

    /// Number of quadrature nodes at `level`.
    pub fn node_count(&self, level: usize, part: Part, extra: &[Vec<f64>]) -> usize {
        match part {
            Part::Interior => self.rules(level, extra, None).iter().map(Vec::len).product(),
            Part::Boundary => self
                .boundary_faces
                .iter()
                .map(|&(axis, _)| self.rules(level, extra, Some(axis)).iter().map(Vec::len).product::<usize>())
                .sum(),
        }
    }

    /// Quadrature nodes, in a fixed order.
    pub fn samples(&self, level: usize, part: Part, extra: &[Vec<f64>]) -> Result<Vec<QuadSample>> {
        let m = self.m();
        let mut refs: Vec<(Vec<f64>, f64, Option<(usize, bool)>)> = Vec::new();
        match part {
            Part::Interior => {
                for (xi, w) in tensor(&self.rules(level, extra, None)) {
                    refs.push((xi, w, None));
                }
            }
            Part::Boundary => {
                for &(axis, upper) in &self.boundary_faces {
                    for (rest, w) in tensor(&self.rules(level, extra, Some(axis))) {
                        let mut xi = rest.clone();
                        xi.insert(axis, if upper { 1.0 } else { 0.0 });
                        refs.push((xi, w, Some((axis, upper))));
                    }
                }
            }
        }
        refs.into_par_iter()
            .map(|(xi, w, face)| {
                let (u, jac) = self.map.eval(&xi);
                let point = self.chart.shape_at(&u)?;
                match face {
                    None => {
                        let weight = w * point.area_element * jac.determinant().abs();
                        Ok(QuadSample {
                            xi,
                            point,
                            weight,
                            conormal: None,
                        })
                    }
                    Some((axis, upper)) => {
                        let jf = jac.clone().remove_column(axis);
                        let gram = jf.transpose() * &point.first * &jf;
                        let measure = gram.determinant().max(0.0).sqrt();
                        // Conormal: I-gradient of ξ_axis, pointing out of the cube.
                        let jinv = jac.clone().try_inverse().ok_or_else(|| LabError::DegenerateImmersion {
                            at: u.clone(),
                            gram_det: 0.0,
                        })?;
                        let dxi: Vec<f64> = (0..m).map(|k| jinv[(axis, k)]).collect();
                        let g = point.push_forward(&point.gradient_coords(&dxi));
                        let norm = model_dot(self.ambient_c(), &g, &g).max(0.0).sqrt();
                        let sign = if upper { 1.0 } else { -1.0 };
                        let conormal = if norm > 0.0 { Some(g * (sign / norm)) } else { None };
                        Ok(QuadSample {
                            xi,
                            point,
                            weight: w * measure,
                            conormal,
                        })
                    }
                }
            })
            .collect()
    }

    /// Uniform reference grid with `n` points per axis including both ends.
    pub fn reference_grid(&self, n: usize) -> Vec<Vec<f64>> {
        let rule: Vec<(f64, f64)> = (0..n).map(|i| (i as f64 / (n - 1) as f64, 1.0)).collect();
        tensor(&vec![rule; self.m()]).into_iter().map(|(xi, _)| xi).collect()
    }
}

/// Integrates several integrands at once, doubling cells per axis until
/// every component changes by less than `rel_tol · Σ w|g|`.
pub fn integrate_many<F>(region: &Region, part: Part, quad: &Quadrature, extra: &[Vec<f64>], g: F) -> Result<Integration>
where
    F: Fn(&QuadSample) -> Result<Vec<f64>> + Sync,
{
    if part == Part::Boundary && region.boundary_faces.is_empty() {
        return Ok(Integration {
            values: Vec::new(),
            level: 0,
            achieved: 0.0,
            history: Vec::new(),
            empty: true,
        });
    }
    let mut history: Vec<Vec<f64>> = Vec::new();
    for level in quad.min_level..=quad.max_level {
        if region.node_count(level, part, extra) > quad.max_points {
            break;
        }
        let samples = region.samples(level, part, extra)?;
        let evals: Vec<Vec<f64>> = samples.par_iter().map(&g).collect::<Result<_>>()?;
        let k = evals.first().map_or(0, Vec::len);
        let volume = compensated_sum(samples.iter().map(|s| s.weight.abs()));
        let mut values = Vec::with_capacity(k);
        let mut scales = Vec::with_capacity(k);
        for c in 0..k {
            values.push(compensated_sum(samples.iter().zip(&evals).map(|(s, e)| s.weight * e[c])));
            scales.push(compensated_sum(samples.iter().zip(&evals).map(|(s, e)| (s.weight * e[c]).abs())));
        }
        if let Some(prev) = history.last() {
            let achieved = values
                .iter()
                .zip(prev)
                .zip(&scales)
                .map(|((a, b), s)| {
                    // Integrands at roundoff level relative to the region volume count as zero.
                    if *s > ABS_FLOOR * volume {
                        (a - b).abs() / s
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max);
            if achieved <= quad.rel_tol {
                history.push(values.clone());
                return Ok(Integration {
                    values,
                    level,
                    achieved,
                    history,
                    empty: false,
                });
            }
        }
        history.push(values);
    }
    let n = history.len();
    let (previous, last) = match n {
        0 => (f64::NAN, f64::NAN),
        1 => (f64::NAN, history[0].first().copied().unwrap_or(f64::NAN)),
        _ => {
            // Report the component that moved most.
            let (a, b) = (&history[n - 2], &history[n - 1]);
            let worst = (0..b.len())
                .max_by(|&i, &j| (a[i] - b[i]).abs().total_cmp(&(a[j] - b[j]).abs()))
                .unwrap_or(0);
            (a.get(worst).copied().unwrap_or(f64::NAN), b.get(worst).copied().unwrap_or(f64::NAN))
        }
    };
    Err(LabError::Convergence {
        levels: n,
        previous,
        last,
    })
}

/// Scalar fields on the surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarField {
    Constant { value: f64 },
    /// Cutoff `min(1, dist(x, ∂ℬ_R)/eps)` on a geodesic ball.
    Ramp { eps: f64 },
    /// `⟨a, ψ⟩ + b` in ambient coordinates.
    AmbientLinear {
        coeffs: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    /// `k |ψ|² / 2`.
    AmbientQuadratic { k: f64 },
}

impl Default for ScalarField {
    fn default() -> Self {
        ScalarField::Constant { value: 1.0 }
    }
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::Constant { value: 0.0 }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant { .. })
    }

    /// Reference-coordinate breakpoints where the field has a kink.
    pub fn kinks(&self, region: &Region) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); region.m()];
        if let (ScalarField::Ramp { eps }, Some(r)) = (self, region.radial) {
            if *eps < r {
                out[0].push(1.0 - eps / r);
            }
        }
        out
    }

    pub fn validate_on(&self, region: &Region) -> Result<()> {
        match self {
            ScalarField::Ramp { eps } => {
                if !(*eps > 0.0) {
                    return Err(LabError::Argument(format!("ramp width must be positive, got {eps}")));
                }
                if region.radial.is_none() {
                    return Err(LabError::Argument(format!(
                        "ramp cutoff needs a geodesic ball region, got {}",
                        region.label
                    )));
                }
                Ok(())
            }
            ScalarField::AmbientLinear { coeffs, .. } => {
                let n = region.chart.position(&region.param(&vec![0.5; region.m()])).len();
                if coeffs.len() != n {
                    return Err(LabError::Argument(format!(
                        "linear field needs {n} coefficients, got {}",
                        coeffs.len()
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Value and coordinate differential at a sample.
    pub fn eval(&self, region: &Region, sample: &QuadSample) -> (f64, Vec<f64>) {
        let p = &sample.point;
        let m = p.m();
        match self {
            ScalarField::Constant { value } => (*value, vec![0.0; m]),
            ScalarField::Ramp { eps } => {
                let r = region.radial.unwrap_or(0.0);
                let to_boundary = r * (1.0 - sample.xi[0]);
                let mut du = vec![0.0; m];
                if to_boundary < *eps {
                    // Axis 0 of a polar ball chart is arc length from the center.
                    du[0] = -1.0 / eps;
                    (to_boundary / eps, du)
                } else {
                    (1.0, du)
                }
            }
            ScalarField::AmbientLinear { coeffs, constant } => {
                let a = DVector::from_column_slice(coeffs);
                let v = a.dot(&p.position) + constant;
                (v, p.tangents.iter().map(|t| a.dot(t)).collect())
            }
            ScalarField::AmbientQuadratic { k } => {
                let v = 0.5 * k * p.position.norm_squared();
                (v, p.tangents.iter().map(|t| k * p.position.dot(t)).collect())
            }
        }
    }
}

/// Test function `u` and weight exponent `f` of `e^{−f} dμ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct WeightData {
    #[serde(default)]
    pub u: ScalarField,
    #[serde(default = "ScalarField::zero")]
    pub f: ScalarField,
}

/// `u`, `f` and their gradients in the principal frame at a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightEval {
    pub u: f64,
    pub grad_u: Vec<f64>,
    pub f: f64,
    pub grad_f: Vec<f64>,
    /// `e^{−f}`.
    pub density: f64,
}

impl WeightData {
    pub fn constant() -> Self {
        Self {
            u: ScalarField::Constant { value: 1.0 },
            f: ScalarField::zero(),
        }
    }

    pub fn validate_on(&self, region: &Region) -> Result<()> {
        self.u.validate_on(region)?;
        self.f.validate_on(region)?;
        if let ScalarField::Constant { value } = self.u {
            if value < 0.0 {
                return Err(LabError::Argument("u must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn kinks(&self, region: &Region) -> Vec<Vec<f64>> {
        let mut k = self.u.kinks(region);
        for (a, b) in k.iter_mut().zip(self.f.kinks(region)) {
            a.extend(b);
        }
        k
    }

    pub fn eval(&self, region: &Region, sample: &QuadSample) -> WeightEval {
        let (u, du) = self.u.eval(region, sample);
        let (f, df) = self.f.eval(region, sample);
        WeightEval {
            u,
            grad_u: sample.point.gradient_components(&du),
            f,
            grad_f: sample.point.gradient_components(&df),
            density: (-f).exp(),
        }
    }
}

/// `∫_Ω g e^{−f} dμ`.
pub fn integrate<G>(region: &Region, g: G, f: &ScalarField, quad: &Quadrature) -> Result<Integration>
where
    G: Fn(&SurfacePoint) -> f64 + Sync,
{
    let kinks = f.kinks(region);
    integrate_many(region, Part::Interior, quad, &kinks, |s| {
        Ok(vec![g(&s.point) * (-f.eval(region, s).0).exp()])
    })
}

/// `∫_{∂Ω} g e^{−f} dS_μ`; closed regions give an empty result.
pub fn integrate_boundary<G>(region: &Region, g: G, f: &ScalarField, quad: &Quadrature) -> Result<Integration>
where
    G: Fn(&SurfacePoint) -> f64 + Sync,
{
    let kinks = f.kinks(region);
    let mut out = integrate_many(region, Part::Boundary, quad, &kinks, |s| {
        Ok(vec![g(&s.point) * (-f.eval(region, s).0).exp()])
    })?;
    if out.empty {
        out.values = vec![0.0];
    }
    Ok(out)
}

/// Sample positions for diameter and center searches: a uniform reference
/// grid with `2^p + 1` points per axis, the largest within `budget`.
fn diameter_grid(region: &Region, budget: usize) -> Vec<Vec<f64>> {
    let m = region.m() as u32;
    let mut p = 1;
    while ((1usize << (p + 1)) + 1).pow(m) <= budget.max(3usize.pow(m)) {
        p += 1;
    }
    region.reference_grid((1usize << p) + 1)
}

/// Increasing function of the ambient distance, cheap to evaluate.
fn separation_key(c: f64, a: &[f64], b: &[f64]) -> f64 {
    if c < 0.0 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() - 2.0 * a[0] * b[0];
        c * dot
    } else {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }
}

/// Result of an extrinsic diameter search.
#[derive(Clone, Debug, PartialEq)]
pub struct Diameter {
    /// Maximum over the sampled pairs.
    pub sampled: f64,
    /// After local ascent from the best pair; never below `sampled`.
    pub refined: f64,
    pub samples: usize,
    pub endpoints: (Vec<f64>, Vec<f64>),
}

pub fn extrinsic_diameter(region: &Region, budget: usize) -> Diameter {
    let c = region.ambient_c();
    let grid = diameter_grid(region, budget.min(DIAMETER_BUDGET));
    let pos: Vec<DVector<f64>> = grid.par_iter().map(|xi| region.position(xi)).collect();
    let n = pos.len();
    let dim = pos[0].len();
    let flat: Vec<f64> = pos.iter().flat_map(|p| p.iter().copied()).collect();
    let (key, i, j) = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &flat[i * dim..(i + 1) * dim];
            let mut best = (f64::NEG_INFINITY, i, i);
            for j in i + 1..n {
                let k = separation_key(c, a, &flat[j * dim..(j + 1) * dim]);
                if k > best.0 {
                    best = (k, i, j);
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, 0, 0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        );
    let best = if key.is_finite() { ambient_distance(c, &pos[i], &pos[j]) } else { 0.0 };
    let periodic: Vec<bool> = match &region.map {
        RegionMap::Affine { .. } => region.chart.domain.periodic.clone(),
        RegionMap::CylinderBand { .. } => vec![false; region.m()],
    };
    let mut a = grid[i].clone();
    let mut b = grid[j].clone();
    let mut refined = best;
    let per_axis = (n as f64).powf(1.0 / region.m() as f64);
    let mut delta = 1.0 / (per_axis - 1.0).max(1.0);
    let mut iterations = 0;
    while delta > 1e-9 && iterations < 20_000 {
        iterations += 1;
        let mut improved = false;
        for which in 0..2 {
            for k in 0..region.m() {
                for sign in [-1.0, 1.0] {
                    let mut cand = if which == 0 { a.clone() } else { b.clone() };
                    cand[k] += sign * delta;
                    if periodic[k] {
                        cand[k] = cand[k].rem_euclid(1.0);
                    } else {
                        cand[k] = cand[k].clamp(0.0, 1.0);
                    }
                    let (pa, pb) = if which == 0 {
                        (region.position(&cand), region.position(&b))
                    } else {
                        (region.position(&a), region.position(&cand))
                    };
                    let d = ambient_distance(c, &pa, &pb);
                    if d > refined {
                        refined = d;
                        if which == 0 {
                            a = cand;
                        } else {
                            b = cand;
                        }
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    Diameter {
        sampled: best,
        refined,
        samples: n,
        endpoints: (a, b),
    }
}

/// Approximate center of the smallest enclosing extrinsic ball.
#[derive(Clone, Debug, PartialEq)]
pub struct EnclosingBall {
    pub center: DVector<f64>,
    pub radius: f64,
}

fn onto_model(c: f64, x: DVector<f64>) -> DVector<f64> {
    if c == 0.0 {
        return x;
    }
    let q = model_dot(c, &x, &x);
    if q * c <= 0.0 {
        return x;
    }
    x * (1.0 / (c * q).sqrt())
}

/// Starts from the (projected) centroid and runs Bădoiu–Clarkson steps
/// toward the farthest sample, keeping the best center seen.
pub fn enclosing_center(region: &Region, budget: usize) -> EnclosingBall {
    let c = region.ambient_c();
    // Drop the duplicated end of periodic axes so symmetric regions have
    // their symmetry center as centroid.
    let periodic: Vec<bool> = match &region.map {
        RegionMap::Affine { .. } => region.chart.domain.periodic.clone(),
        RegionMap::CylinderBand { .. } => vec![false; region.m()],
    };
    let grid: Vec<Vec<f64>> = diameter_grid(region, budget.min(DIAMETER_BUDGET))
        .into_iter()
        .filter(|xi| !xi.iter().zip(&periodic).any(|(&x, &p)| p && x == 1.0))
        .collect();
    let pos: Vec<DVector<f64>> = grid.par_iter().map(|xi| region.position(xi)).collect();
    let n = pos.len() as f64;
    let mean = pos.iter().fold(DVector::zeros(pos[0].len()), |acc, p| acc + p) / n;
    let mut center = onto_model(c, mean);
    let dim = pos[0].len();
    let flat: Vec<f64> = pos.iter().flat_map(|p| p.iter().copied()).collect();
    let far = |ctr: &DVector<f64>| {
        let (_, i) = flat
            .par_chunks(dim)
            .enumerate()
            .map(|(i, p)| (separation_key(c, ctr.as_slice(), p), i))
            .reduce(
                || (f64::NEG_INFINITY, 0),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        (ambient_distance(c, ctr, &pos[i]), i)
    };
    let (mut best_r, mut idx) = far(&center);
    let mut best = center.clone();
    for k in 1..=2000 {
        let step = 1.0 / (k as f64 + 1.0);
        center = onto_model(c, &center + (&pos[idx] - &center) * step);
        let (r, i) = far(&center);
        idx = i;
        if r < best_r {
            best_r = r;
            best = center.clone();
        }
    }
    EnclosingBall {
        center: best,
        radius: best_r,
    }
}

/// Geodesic ball `ℬ_R` about the point with global parameter `u0`.
pub fn intrinsic_ball(surface: &Surface, u0: &[f64], radius: f64) -> Result<Region> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(LabError::Argument(format!("ball radius must be positive, got {radius}")));
    }
    if u0.len() != surface.m() {
        return Err(LabError::Argument(format!(
            "center needs {} parameters, got {}",
            surface.m(),
            u0.len()
        )));
    }
    let label = format!("{}-ball(R={radius})", surface.id());
    let mut flags = BTreeMap::new();
    let polar_region = |chart: Chart, r: f64, flags: BTreeMap<String, bool>| {
        let mut region = Region::from_chart(chart, &label);
        region.boundary_faces = vec![(0, true)];
        region.closed = false;
        region.radial = Some(r);
        region.flags = flags;
        if let RegionMap::Affine { hi, .. } = &mut region.map {
            hi[0] = r;
        }
        region
    };
    match *surface {
        Surface::Plane { .. } => {
            let chart = surface.polar_chart(u0, radius)?;
            let reach = u0.iter().map(|x| x.abs()).fold(0.0, f64::max) + radius;
            flags.insert("truncated".into(), reach > crate::geom::catalog::DEFAULT_EXTENT);
            Ok(polar_region(chart, radius, flags))
        }
        Surface::Sphere { radius: r0, .. } | Surface::GeodesicSphere { radius: r0, c: 0.0, .. } => {
            if radius >= PI * r0 {
                let chart = surface.polar_chart(u0, PI * r0)?;
                let mut region = Region::from_chart(chart, &label);
                region.flags.insert("truncated".into(), true);
                return Ok(region);
            }
            flags.insert("truncated".into(), false);
            Ok(polar_region(surface.polar_chart(u0, radius)?, radius, flags))
        }
        Surface::Cylinder { radius: r0, k: 1, m: 2 } => {
            flags.insert("truncated".into(), false);
            if radius <= PI * r0 {
                return Ok(polar_region(surface.polar_chart(u0, radius)?, radius, flags));
            }
            let chart = surface.chart()?;
            let map = RegionMap::CylinderBand {
                radius: r0,
                ball_radius: radius,
                theta0: u0[0],
                z0: u0[1],
            };
            Ok(Region {
                chart,
                map,
                boundary_faces: vec![(1, false), (1, true)],
                breakpoints: vec![Vec::new(); 2],
                radial: None,
                closed: false,
                flags,
                label,
            })
        }
        Surface::GeodesicSphere { radius: r0, c, m } => {
            if u0.iter().take(m - 1).any(|&a| a != 0.0) {
                return Err(LabError::Argument(
                    "balls on curved geodesic spheres are centered at the chart pole (leading angles 0)".into(),
                ));
            }
            let b = crate::ambient::s_c(c, r0);
            let chart = surface.chart()?;
            let mut region = Region::from_chart(chart, &label);
            if radius < PI * b {
                if let RegionMap::Affine { hi, .. } = &mut region.map {
                    hi[0] = radius / b;
                }
                region.boundary_faces = vec![(0, true)];
                region.closed = false;
                region.flags.insert("truncated".into(), false);
            } else {
                region.flags.insert("truncated".into(), true);
            }
            Ok(region)
        }
        _ => Err(LabError::Argument(format!(
            "intrinsic balls on {} need a closed-form geodesic polar chart",
            surface.id()
        ))),
    }
}

/// The compact surface itself, or its default parameter box otherwise.
pub fn whole_surface(surface: &Surface) -> Result<Region> {
    let chart = surface.chart()?;
    let mut region = Region::from_chart(chart, &format!("{}-whole", surface.id()));
    region.closed = surface.is_compact();
    if region.closed {
        region.boundary_faces.clear();
    }
    Ok(region)
}

/// Sub-box of the global chart.
pub fn param_box(surface: &Surface, lo: Vec<f64>, hi: Vec<f64>) -> Result<Region> {
    let chart = surface.chart()?;
    let m = chart.m();
    if lo.len() != m || hi.len() != m || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
        return Err(LabError::Argument("parameter box needs lo < hi on every axis".into()));
    }
    for k in 0..m {
        if !chart.domain.periodic[k] && (lo[k] < chart.domain.lo[k] || hi[k] > chart.domain.hi[k]) {
            return Err(LabError::Argument(format!("parameter box leaves the chart on axis {k}")));
        }
    }
    let mut region = Region::from_chart(chart, &format!("{}-box", surface.id()));
    region.boundary_faces = (0..m).flat_map(|k| [(k, false), (k, true)]).collect();
    region.closed = false;
    region.map = RegionMap::Affine { lo, hi };
    Ok(region)
}

/// `u_ε` on a geodesic ball.
pub fn u_ramp(region: &Region, eps: f64) -> Result<WeightData> {
    let w = WeightData {
        u: ScalarField::Ramp { eps },
        f: ScalarField::zero(),
    };
    w.validate_on(region)?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::HeightFn;

    fn area(region: &Region) -> f64 {
        integrate(region, |_| 1.0, &ScalarField::zero(), &Quadrature::default()).unwrap().values[0]
    }

    fn perimeter(region: &Region) -> Integration {
        integrate_boundary(region, |_| 1.0, &ScalarField::zero(), &Quadrature::default()).unwrap()
    }

    #[test]
    fn sphere_area_and_empty_boundary() {
        let s = Surface::Sphere { radius: 1.0, m: 2 };
        let region = whole_surface(&s).unwrap();
        assert!((area(&region) - 4.0 * PI).abs() < 1e-6);
        let b = perimeter(&region);
        assert!(b.empty && b.values == vec![0.0]);
    }

    #[test]
    fn hemisphere_area_mean_curvature_and_equator() {
        let s = Surface::Sphere { radius: 1.0, m: 2 };
        let region = intrinsic_ball(&s, &[0.0, 0.0], PI / 2.0).unwrap();
        let h1 = integrate(&region, |p| crate::symfun::sym_all(&p.spectrum).h(1), &ScalarField::zero(), &Quadrature::default())
            .unwrap();
        assert!((h1.values[0] - 2.0 * PI).abs() < 1e-6);
        assert!((perimeter(&region).values[0] - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn flat_disk_and_polynomial_exactness() {
        let plane = Surface::Plane { m: 2, offset: 0.0 };
        let disk = intrinsic_ball(&plane, &[0.0, 0.0], 1.5).unwrap();
        assert!((area(&disk) - PI * 2.25).abs() < 1e-9);
        assert!((perimeter(&disk).values[0] - 3.0 * PI).abs() < 1e-6);

        // Degree 7 in each variable is exact with four nodes per cell.
        let b = param_box(&plane, vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        let quad = Quadrature {
            min_level: 0,
            max_level: 1,
            ..Quadrature::default()
        };
        let got = integrate(&b, |p| p.position[0].powi(7) * p.position[1].powi(6), &ScalarField::zero(), &quad).unwrap();
        let exact = 2f64.powi(8) / 8.0 * (2.0 / 7.0);
        assert!((got.history[0][0] - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn zero_integrand() {
        let s = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
        let region = intrinsic_ball(&s, &[0.0, 0.0], 0.7).unwrap();
        let got = integrate(&region, |_| 0.0, &ScalarField::zero(), &Quadrature::default()).unwrap();
        assert_eq!(got.values[0], 0.0);
    }

    #[test]
    fn diameters() {
        let s = Surface::Sphere { radius: 2.0, m: 2 };
        let d = extrinsic_diameter(&whole_surface(&s).unwrap(), 4000);
        assert!((d.refined - 4.0).abs() < 1e-8);
        let hemi = intrinsic_ball(&Surface::Sphere { radius: 1.0, m: 2 }, &[0.0, 0.0], PI / 2.0).unwrap();
        assert!((extrinsic_diameter(&hemi, 4000).refined - 2.0).abs() < 1e-8);
        let disk = intrinsic_ball(&Surface::Plane { m: 2, offset: 0.0 }, &[0.3, 0.1], 0.8).unwrap();
        assert!((extrinsic_diameter(&disk, 4000).refined - 1.6).abs() < 1e-8);
    }

    #[test]
    fn diameter_is_monotone_under_refinement() {
        let g = Surface::Graph {
            height: HeightFn::Saddle { a: 0.3 },
            m: 2,
            extent: 2.0,
        };
        let region = param_box(&g, vec![-1.0, -0.5], vec![1.2, 0.9]).unwrap();
        let mut last = 0.0;
        for budget in [9, 25, 81, 289, 1089] {
            let d = extrinsic_diameter(&region, budget);
            assert!(d.sampled >= last - 1e-15 && d.refined >= d.sampled);
            last = d.sampled;
        }
    }

    #[test]
    fn ball_areas() {
        let cap = intrinsic_ball(&Surface::Sphere { radius: 1.0, m: 2 }, &[0.4, 1.0], 1.0).unwrap();
        assert!((area(&cap) - 2.0 * PI * (1.0 - 1f64.cos())).abs() < 1e-6);
        let cyl = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
        for r in [0.05, 0.5, 2.0] {
            let ball = intrinsic_ball(&cyl, &[0.0, 0.0], r).unwrap();
            assert!((area(&ball) - PI * r * r).abs() < 1e-6 * r * r, "{r}");
        }
        // Beyond the cut locus: disk in the unrolled strip of width 2π.
        let r: f64 = 5.0;
        let ball = intrinsic_ball(&cyl, &[0.0, 0.0], r).unwrap();
        let a = PI;
        let exact = 2.0 * (a * (r * r - a * a).sqrt() + r * r * (a / r).asin());
        assert!((area(&ball) - exact).abs() < 1e-6 * exact);
        let len = 4.0 * r * (a / r).asin();
        assert!((perimeter(&ball).values[0] - len).abs() < 1e-6 * len);
    }

    #[test]
    fn whole_sphere_beyond_its_diameter() {
        let s = Surface::Sphere { radius: 1.0, m: 2 };
        let ball = intrinsic_ball(&s, &[0.0, 0.0], 4.0).unwrap();
        assert!(ball.closed && ball.flag("truncated"));
        assert!(perimeter(&ball).empty);
    }

    #[test]
    fn enclosing_center_of_symmetric_regions() {
        let s = Surface::GeodesicSphere { radius: 1.0, c: -1.0, m: 2 };
        let ball = enclosing_center(&whole_surface(&s).unwrap(), 4000);
        assert!((ball.center[0] - 1.0).abs() < 1e-9 && ball.center.rows(1, 3).norm() < 1e-9);
        assert!((ball.radius - 1.0).abs() < 1e-9);
        let cap = intrinsic_ball(&Surface::Sphere { radius: 1.0, m: 2 }, &[0.0, 0.0], PI / 4.0).unwrap();
        let ball = enclosing_center(&cap, 4000);
        assert!((ball.radius / (PI / 4.0).sin() - 1.0).abs() < 2e-2, "{}", ball.radius);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
