//! Inequality evaluators.
//!
//! Each evaluator computes both sides of one integral inequality on a region
//! and returns a [`Report`]. Hypotheses are recorded as flags; evaluation
//! always proceeds so that failures are visible rather than skipped.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambient::{ds_c, s_c, AmbientSpec};
use crate::error::{LabError, Result};
use crate::geom::chart::{ambient_distance, model_dot};
use crate::geom::{Chart, Surface, SurfacePoint};
use crate::measure::{
    compensated_sum, enclosing_center, extrinsic_diameter, integrate_many, intrinsic_ball, Part, QuadSample,
    Quadrature, Region, WeightData, DIAMETER_BUDGET,
};
use crate::symfun::{binom, newton_eigenvalues, positivity_class, sym_all, ShapeSpectrum, ZERO_TOL};

/// Relative tolerance for declaring equality.
pub const EQ_TOL: f64 = 1e-3;

/// Highest level used when collecting spectra for hypothesis flags.
const FLAG_LEVEL: usize = 3;

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub inequality_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub relative_margin: f64,
    pub equality: bool,
    /// All hypotheses of the inequality hold on the samples.
    pub applicable: bool,
    pub flags: BTreeMap<String, bool>,
    pub details: BTreeMap<String, f64>,
    pub tolerance_achieved: f64,
    pub level: usize,
}

impl Report {
    pub fn new(id: &str, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        let scale = lhs.abs().max(rhs.abs());
        Self {
            inequality_id: id.to_string(),
            lhs,
            rhs,
            margin,
            relative_margin: if scale > 0.0 { margin / scale } else { 0.0 },
            equality: margin.abs() <= EQ_TOL * (lhs.abs() + rhs.abs()),
            applicable: true,
            flags: BTreeMap::new(),
            details: BTreeMap::new(),
            tolerance_achieved: 0.0,
            level: 0,
        }
    }

    fn flag(mut self, name: &str, value: bool) -> Self {
        self.flags.insert(name.to_string(), value);
        self
    }

    fn detail(mut self, name: &str, value: f64) -> Self {
        self.details.insert(name.to_string(), value);
        self
    }

    fn quadrature(mut self, achieved: f64, level: usize) -> Self {
        self.tolerance_achieved = achieved;
        self.level = level;
        self
    }

    fn applicable_if(mut self, value: bool) -> Self {
        self.applicable = value;
        self
    }

    /// An applicable inequality violated beyond the equality tolerance.
    pub fn hard_failure(&self) -> bool {
        self.applicable && self.margin < -EQ_TOL * (self.lhs.abs() + self.rhs.abs())
    }
}

fn check_order(m: usize, r: usize) -> Result<()> {
    if r >= m {
        return Err(LabError::Argument(format!("order r = {r} must be below m = {m}")));
    }
    Ok(())
}

/// Operator fields for the divergence identity, given in the principal frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorField {
    Identity,
    Newton { r: usize },
    Fixed { matrix: Vec<Vec<f64>> },
}

impl OperatorField {
    pub fn at(&self, point: &SurfacePoint) -> Result<DMatrix<f64>> {
        let m = point.m();
        match self {
            OperatorField::Identity => Ok(DMatrix::identity(m, m)),
            OperatorField::Newton { r } => {
                check_order(m + 1, *r)?;
                let t = sym_all(&point.spectrum);
                Ok(DMatrix::from_diagonal(&DVector::from_vec(newton_eigenvalues(
                    point.spectrum.lambdas(),
                    &t.s,
                    *r,
                ))))
            }
            OperatorField::Fixed { matrix } => {
                if matrix.len() != m || matrix.iter().any(|row| row.len() != m) {
                    return Err(LabError::Argument(format!("operator must be {m}×{m}")));
                }
                Ok(DMatrix::from_fn(m, m, |i, j| matrix[i][j]))
            }
        }
    }
}

/// Largest `|tr(E ↦ T((D_E X)^⊤)) − tr T|` over the parameter samples, with
/// `X` the position field of a flat ambient.
pub fn divergence_identity_check(chart: &Chart, field: &OperatorField, samples: &[Vec<f64>]) -> Result<f64> {
    if chart.ambient_c != 0.0 {
        return Err(LabError::UnsupportedAmbient(
            "divergence identity is checked in flat ambients only".into(),
        ));
    }
    let mut worst = 0.0f64;
    for u in samples {
        let point = chart.shape_at(u)?;
        let t = field.at(&point)?;
        let asym = (&t - t.transpose()).amax();
        if asym > 1e-8 * (1.0 + t.amax()) {
            return Err(LabError::Argument(format!("operator field is not symmetric ({asym:.3e})")));
        }
        let m = point.m();
        let e: Vec<DVector<f64>> = (0..m)
            .map(|j| point.push_forward(&point.frame.column(j).into_owned()))
            .collect();
        // D_{e_j} X = e_j; its tangential part in the principal frame.
        let mut trace = 0.0;
        for j in 0..m {
            let dx = &e[j];
            for i in 0..m {
                trace += t[(j, i)] * model_dot(0.0, &e[i], dx);
            }
        }
        worst = worst.max((trace - t.trace()).abs());
    }
    Ok(worst)
}

/// Spectra on a quadrature grid, for hypothesis flags.
fn region_points(region: &Region, part: Part, level: usize, extra: &[Vec<f64>]) -> Result<Vec<QuadSample>> {
    region.samples(level.clamp(1, FLAG_LEVEL), part, extra)
}

fn spectra(samples: &[QuadSample]) -> Vec<ShapeSpectrum> {
    samples.iter().map(|s| s.point.spectrum.clone()).collect()
}

fn a_norm(spec: &ShapeSpectrum) -> f64 {
    spec.lambdas().iter().map(|l| l * l).sum::<f64>().sqrt()
}

fn weakly_convex(spec: &ShapeSpectrum) -> bool {
    spec.lambdas().iter().all(|&l| l >= -ZERO_TOL)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Geometry {
    diameter: f64,
    center: DVector<f64>,
    center_radius: f64,
}

/// `u` vanishes on the boundary (or the region is closed).
fn supported_inside(region: &Region, weights: &WeightData) -> Result<bool> {
    if region.closed || region.boundary_faces.is_empty() {
        return Ok(true);
    }
    let pts = region.samples(2, Part::Boundary, &[])?;
    Ok(pts.iter().all(|s| weights.eval(region, s).u.abs() <= 1e-12))
}

fn geometry(region: &Region) -> Geometry {
    let d = extrinsic_diameter(region, DIAMETER_BUDGET);
    let ball = enclosing_center(region, DIAMETER_BUDGET);
    Geometry {
        diameter: d.refined,
        center: ball.center,
        center_radius: ball.radius,
    }
}

/// Poincaré-type inequality in a space form: the `S_r` form, and the `H_r`
/// form when `P_r` is semi-definite on the samples.
pub fn poincare_spaceform(region: &Region, r: usize, weights: &WeightData, quad: &Quadrature) -> Result<Vec<Report>> {
    let m = region.m();
    check_order(m, r)?;
    weights.validate_on(region)?;
    let c = region.ambient_c();
    let geo = geometry(region);
    let kinks = weights.kinks(region);
    let (cr, cr1) = (binom(m, r), binom(m, r + 1));

    let out = integrate_many(region, Part::Interior, quad, &kinks, |s| {
        let w = weights.eval(region, s);
        let t = sym_all(&s.point.spectrum);
        let mu = newton_eigenvalues(s.point.spectrum.lambdas(), &t.s, r);
        let v: Vec<f64> = w.grad_u.iter().zip(&w.grad_f).map(|(a, b)| a - w.u * b).collect();
        let rho = ambient_distance(c, &geo.center, &s.point.position);
        let dens = w.density;
        let p_v = mu.iter().zip(&v).map(|(m, x)| (m * x) * (m * x)).sum::<f64>().sqrt();
        let (sr, sr1) = (t.s(r), t.s(r + 1));
        Ok(vec![
            w.u * sr * ds_c(c, rho) * dens,
            p_v * dens,
            (r as f64 + 1.0) * sr1.abs() * w.u * dens,
            w.u * (sr / cr) * ds_c(c, rho) * dens,
            norm(&v) * (sr / cr) * dens,
            (sr1 / cr1).abs() * w.u * dens,
        ])
    })?;
    let v = &out.values;
    let c0 = s_c(c, geo.diameter / 2.0) / (m - r) as f64;
    let c1 = (m - r) as f64 * c0;

    let pts = region_points(region, Part::Interior, out.level, &kinks)?;
    let pos = positivity_class(&spectra(&pts), r)?;
    let hemisphere = c <= 0.0 || geo.center_radius < std::f64::consts::PI / (2.0 * c.sqrt());
    let supported = supported_inside(region, weights)?;

    let annotate = |rep: Report| {
        rep.flag("p-r-nonneg", pos.nonneg)
            .flag("p-r-sufficient-condition", pos.any_condition())
            .flag("open-hemisphere", hemisphere)
            .flag("center-approximate", c < 0.0)
            .flag("u-supported-inside", supported)
            .detail("diameter", geo.diameter)
            .detail("center-radius", geo.center_radius)
            .detail("r", r as f64)
            .quadrature(out.achieved, out.level)
            .applicable_if(hemisphere && supported)
    };
    let mut reports = vec![annotate(
        Report::new("poincare-sr", v[0], c0 * (v[1] + v[2])).detail("constant", c0),
    )];
    if pos.nonneg {
        reports.push(annotate(Report::new("poincare-hr", v[3], c1 * (v[4] + v[5])).detail("constant", c1)));
    }
    Ok(reports)
}

/// Isoperimetric chain in Euclidean space for order `r`, followed by the
/// `r = 0` and scalar-curvature (`r = 1`) specializations.
pub fn iso_chain(region: &Region, r: usize, quad: &Quadrature) -> Result<Vec<Report>> {
    let m = region.m();
    check_order(m, r)?;
    if region.ambient_c() != 0.0 {
        return Err(LabError::UnsupportedAmbient("isoperimetric chain needs a flat ambient".into()));
    }
    let top = r.max(1);
    let h = |spec: &ShapeSpectrum, k: usize| {
        if k > m {
            0.0
        } else {
            sym_all(spec).s(k) / binom(m, k)
        }
    };
    // Interior: H_0..=H_{top+1}. Boundary: H_0..=H_top.
    let inner = integrate_many(region, Part::Interior, quad, &[], |s| {
        Ok((0..=top + 1).map(|k| h(&s.point.spectrum, k)).collect())
    })?;
    let bdry = integrate_many(region, Part::Boundary, quad, &[], |s| {
        Ok((0..=top).map(|k| h(&s.point.spectrum, k)).collect())
    })?;
    let b = |k: usize| if bdry.empty { 0.0 } else { bdry.values[k] };
    let area = inner.values[0];
    let half = extrinsic_diameter(region, DIAMETER_BUDGET).refined / 2.0;

    let pts = region_points(region, Part::Interior, inner.level, &[])?;
    let convex_point = pts.iter().any(|s| weakly_convex(&s.point.spectrum));
    let positive = |k: usize| {
        pts.iter().all(|s| h(&s.point.spectrum, k) > ZERO_TOL * (1.0 + a_norm(&s.point.spectrum).powi(k as i32)))
    };
    let achieved = inner.achieved.max(bdry.achieved);
    let level = inner.level.max(bdry.level);

    let chain = |order: usize, id: &str| {
        let mut rhs = half.powi(order as i32 + 1) * inner.values[order + 1];
        for k in 0..=order {
            rhs += half.powi(k as i32 + 1) * b(k);
        }
        let next = positive(order + 1);
        Report::new(id, area, rhs)
            .flag("h-next-positive", next)
            .flag("convex-point", convex_point)
            .flag("empty-boundary", bdry.empty)
            .detail("diameter", 2.0 * half)
            .detail("r", order as f64)
            .quadrature(achieved, level)
            .applicable_if(next && convex_point)
    };
    let mut reports = vec![chain(r, "iso-chain")];
    reports.push(chain(0, "iso-area-mean"));
    if m >= 2 {
        // ∫ Scal/(m(m−1)) with Scal = 2S_2 equals ∫ H_2.
        let scal = inner.values[2];
        let rhs = half * b(0) + half * half * (b(1) + scal);
        let next = positive(2);
        reports.push(
            Report::new("iso-area-scal", area, rhs)
                .flag("h-next-positive", next)
                .flag("convex-point", convex_point)
                .flag("empty-boundary", bdry.empty)
                .detail("diameter", 2.0 * half)
                .detail("scal-integral", scal * (m * (m - 1)) as f64)
                .quadrature(achieved, level)
                .applicable_if(next && convex_point),
        );
    }
    Ok(reports)
}

/// Volume bounds for the intrinsic ball of radius `radius` about `u0`.
pub fn ball_volume_bounds(surface: &Surface, u0: &[f64], radius: f64, quad: &Quadrature) -> Result<Vec<Report>> {
    let region = intrinsic_ball(surface, u0, radius)?;
    ball_volume_bounds_on(&region, radius, quad)
}

/// Same as [`ball_volume_bounds`] on an already constructed ball region.
pub fn ball_volume_bounds_on(region: &Region, radius: f64, quad: &Quadrature) -> Result<Vec<Report>> {
    let m = region.m();
    let inner = integrate_many(region, Part::Interior, quad, &[], |s| {
        let hm = sym_all(&s.point.spectrum).s(m) / binom(m, m);
        Ok(vec![1.0, hm, hm.abs()])
    })?;
    let bdry = integrate_many(region, Part::Boundary, quad, &[], |_| Ok(vec![1.0]))?;
    let perimeter = if bdry.empty { 0.0 } else { bdry.values[0] };
    let max_a = if bdry.empty {
        0.0
    } else {
        region
            .samples(bdry.level, Part::Boundary, &[])?
            .iter()
            .map(|s| a_norm(&s.point.spectrum))
            .fold(0.0, f64::max)
    };
    let pts = region_points(region, Part::Interior, inner.level, &[])?;
    let convex = pts.iter().all(|s| weakly_convex(&s.point.spectrum));

    let alpha = radius * max_a;
    let mf = m as f64;
    let bracket = if (alpha - 1.0).abs() < 1e-12 {
        mf
    } else {
        (alpha.powi(m as i32) - 1.0) / (alpha - 1.0)
    };
    let lhs = inner.values[0] / radius.powi(m as i32);
    let per = perimeter / radius.powi(m as i32 - 1);
    let truncated = region.flag("truncated");
    let achieved = inner.achieved.max(bdry.achieved);
    let level = inner.level.max(bdry.level);
    let annotate = |rep: Report| {
        rep.flag("weakly-convex", convex)
            .flag("truncated", truncated)
            .detail("alpha", alpha)
            .detail("max-a", max_a)
            .detail("radius", radius)
            .quadrature(achieved, level)
    };

    let mut reports = vec![
        annotate(Report::new("ball-volume-convex", lhs, bracket * per + inner.values[1]))
            .applicable_if(convex && !truncated),
        annotate(Report::new(
            "ball-volume-general",
            lhs,
            (2f64.powi(m as i32) - 1.0) / mf * bracket * per + inner.values[2],
        ))
        .applicable_if(!truncated),
    ];
    if alpha < 1.0 {
        reports.push(
            annotate(Report::new("ball-volume-small-curvature", lhs, per / (1.0 - alpha)))
                .applicable_if(convex && !truncated),
        );
    }
    Ok(reports)
}

/// One sample of user-supplied hypersurface data in an Einstein ambient.
/// Gradients are components in the principal frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DataPoint {
    pub weight: f64,
    pub lambdas: Vec<f64>,
    pub rho: f64,
    #[serde(default = "one")]
    pub u: f64,
    #[serde(default)]
    pub grad_u: Vec<f64>,
    #[serde(default)]
    pub f: f64,
    #[serde(default)]
    pub grad_f: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

/// Weighted samples of a region together with its diameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SampledData {
    pub diameter: f64,
    pub points: Vec<DataPoint>,
}

impl SampledData {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.points.is_empty() {
            return Err(LabError::Input("sampled data has no points".into()));
        }
        if !(self.diameter >= 0.0) {
            return Err(LabError::Input("diameter must be non-negative".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            let bad_grad = |g: &Vec<f64>| !g.is_empty() && g.len() != m;
            if p.lambdas.len() != m || bad_grad(&p.grad_u) || bad_grad(&p.grad_f) {
                return Err(LabError::Input(format!("point {i}: expected {m} components")));
            }
            if !(p.weight >= 0.0) || !(p.rho >= 0.0) || p.u < 0.0 {
                return Err(LabError::Input(format!("point {i}: negative weight, distance or u")));
            }
        }
        Ok(())
    }
}

fn padded(g: &[f64], m: usize) -> Vec<f64> {
    if g.is_empty() {
        vec![0.0; m]
    } else {
        g.to_vec()
    }
}

/// Integrand components of the Einstein inequality at one sample.
fn einstein_terms(
    lambdas: &[f64],
    rho: f64,
    u: f64,
    grad_u: &[f64],
    grad_f: &[f64],
    density: f64,
    lambda: f64,
    dg: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let m = lambdas.len();
    let spec = ShapeSpectrum::new(lambdas.to_vec())?;
    let t = sym_all(&spec);
    let mu = newton_eigenvalues(lambdas, &t.s, 1);
    let v: Vec<f64> = grad_u.iter().zip(grad_f).map(|(a, b)| a - u * b).collect();
    let p_v = mu.iter().zip(&v).map(|(m, x)| (m * x) * (m * x)).sum::<f64>().sqrt();
    let mf = m as f64;
    let scal = (mf - 1.0) * lambda + 2.0 * t.s(2);
    let excess = scal - (mf - 1.0) * lambda;
    let _ = rho;
    Ok((
        vec![
            u * t.s(1) * dg * density,
            p_v * density,
            excess.abs() * u * density,
            norm(&v) * t.s(1) * density,
            (scal / (mf - 1.0) - lambda).abs() * u * density,
        ],
        excess,
        a_norm(&spec),
    ))
}

struct EinsteinSums {
    values: Vec<f64>,
    scal_matches: bool,
    flat_weights: bool,
    max_s1: f64,
}

fn einstein_reports(
    sums: EinsteinSums,
    diameter: f64,
    ambient: &AmbientSpec,
    nonneg: bool,
    supported: bool,
    achieved: f64,
    level: usize,
) -> Result<Vec<Report>> {
    let m = ambient.hypersurface_dim();
    let g = ambient.comparison_fn()?;
    let half = diameter / 2.0;
    if !g.in_domain(half) {
        return Err(LabError::Domain(format!(
            "half diameter {half} is outside the comparison domain [0, {}]",
            g.domain_end
        )));
    }
    let c0 = g.g(half) / (m as f64 - 1.0);
    let c1 = (m as f64 - 1.0) * c0;
    let inj = ambient.injectivity_radius();
    let v = &sums.values;
    let below_inj = diameter < 2.0 * inj;
    let annotate = |rep: Report| {
        rep.flag("diam-below-2inj", below_inj)
            .flag("p1-nonneg", nonneg)
            .flag("u-supported-inside", supported)
            .flag("scal-matches-einstein", sums.scal_matches)
            .flag("totally-geodesic-candidate", sums.scal_matches && sums.flat_weights)
            .detail("diameter", diameter)
            .detail("max-abs-s1", sums.max_s1)
            .quadrature(achieved, level)
            .applicable_if(below_inj && supported)
    };
    let mut out = vec![annotate(Report::new("poincare-einstein", v[0], c0 * (v[1] + v[2])).detail("constant", c0))];
    if nonneg {
        out.push(annotate(Report::new("poincare-einstein-s1", v[0], c1 * (v[3] + v[4])).detail("constant", c1)));
    }
    Ok(out)
}

fn einstein_prelude(ambient: &AmbientSpec) -> Result<f64> {
    ambient.validate()?;
    let lambda = ambient.einstein_constant().ok_or_else(|| {
        LabError::UnsupportedAmbient(format!("{} has no Einstein constant", ambient.label()))
    })?;
    if ambient.hypersurface_dim() < 2 {
        return Err(LabError::Argument("Einstein inequality needs m >= 2".into()));
    }
    Ok(lambda)
}

/// Poincaré-type inequality in an Einstein ambient from sampled data.
pub fn poincare_einstein(data: &SampledData, ambient: &AmbientSpec) -> Result<Vec<Report>> {
    let lambda = einstein_prelude(ambient)?;
    let m = ambient.hypersurface_dim();
    data.validate(m)?;
    let g = ambient.comparison_fn()?;
    let mut rows = Vec::with_capacity(data.points.len());
    let mut scal_matches = true;
    let mut flat_weights = true;
    let mut max_s1 = 0.0f64;
    let mut spectra = Vec::with_capacity(data.points.len());
    for p in &data.points {
        if !g.in_domain(p.rho) {
            return Err(LabError::Domain(format!("distance {} outside the comparison domain", p.rho)));
        }
        let (gu, gf) = (padded(&p.grad_u, m), padded(&p.grad_f, m));
        let (terms, excess, an) = einstein_terms(&p.lambdas, p.rho, p.u, &gu, &gf, (-p.f).exp(), lambda, g.dg(p.rho))?;
        scal_matches &= excess.abs() <= ZERO_TOL * (1.0 + an * an);
        flat_weights &= norm(&gu) <= ZERO_TOL && norm(&gf) <= ZERO_TOL;
        max_s1 = max_s1.max(p.lambdas.iter().sum::<f64>().abs());
        rows.push(terms.into_iter().map(|t| t * p.weight).collect::<Vec<f64>>());
        spectra.push(ShapeSpectrum::new(p.lambdas.clone())?);
    }
    let values = (0..5).map(|k| compensated_sum(rows.iter().map(|r| r[k]))).collect();
    let nonneg = positivity_class(&spectra, 1)?.nonneg;
    einstein_reports(
        EinsteinSums {
            values,
            scal_matches,
            flat_weights,
            max_s1,
        },
        data.diameter,
        ambient,
        nonneg,
        true,
        0.0,
        0,
    )
}

/// Same inequality on a region of a space form, integrated adaptively.
pub fn poincare_einstein_region(
    region: &Region,
    ambient: &AmbientSpec,
    weights: &WeightData,
    quad: &Quadrature,
) -> Result<Vec<Report>> {
    let lambda = einstein_prelude(ambient)?;
    let c = region.ambient_c();
    if ambient.space_form_c() != Some(c) || ambient.hypersurface_dim() != region.m() {
        return Err(LabError::UnsupportedAmbient(format!(
            "region lives in the space form c = {c}, not in {}",
            ambient.label()
        )));
    }
    weights.validate_on(region)?;
    let g = ambient.comparison_fn()?;
    let geo = geometry(region);
    let kinks = weights.kinks(region);
    let out = integrate_many(region, Part::Interior, quad, &kinks, |s| {
        let w = weights.eval(region, s);
        let rho = ambient_distance(c, &geo.center, &s.point.position);
        Ok(einstein_terms(s.point.spectrum.lambdas(), rho, w.u, &w.grad_u, &w.grad_f, w.density, lambda, g.dg(rho))?.0)
    })?;
    let pts = region_points(region, Part::Interior, out.level, &kinks)?;
    let mut scal_matches = true;
    let mut flat_weights = true;
    let mut max_s1 = 0.0f64;
    for s in &pts {
        let spec = &s.point.spectrum;
        let t = sym_all(spec);
        let an = a_norm(spec);
        scal_matches &= (2.0 * t.s(2)).abs() <= ZERO_TOL * (1.0 + an * an);
        let w = weights.eval(region, s);
        flat_weights &= norm(&w.grad_u) <= ZERO_TOL && norm(&w.grad_f) <= ZERO_TOL;
        max_s1 = max_s1.max(t.s(1).abs());
    }
    let nonneg = positivity_class(&spectra(&pts), 1)?.nonneg;
    einstein_reports(
        EinsteinSums {
            values: out.values,
            scal_matches,
            flat_weights,
            max_s1,
        },
        geo.diameter,
        ambient,
        nonneg,
        supported_inside(region, weights)?,
        out.achieved,
        out.level,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{param_box, u_ramp, whole_surface};
    use std::f64::consts::PI;

    fn geo_sphere(radius: f64, c: f64, m: usize) -> Region {
        whole_surface(&Surface::GeodesicSphere { radius, c, m }).unwrap()
    }

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn report_fields() {
        let r = Report::new("x", 1.0, 1.0005);
        assert!(r.equality && !r.hard_failure());
        let bad = Report::new("x", 2.0, 1.0);
        assert!(bad.hard_failure() && !bad.equality);
        assert!((bad.relative_margin + 0.5).abs() < 1e-15);
    }

    #[test]
    fn geodesic_sphere_equality_flat() {
        for r in 0..2 {
            let reps = poincare_spaceform(&geo_sphere(1.0, 0.0, 2), r, &WeightData::constant(), &q()).unwrap();
            let sr = &reps[0];
            assert!(sr.equality, "{sr:?}");
            assert!((sr.lhs - [4.0 * PI, 8.0 * PI][r]).abs() < 1e-8);
            let hr = reps.iter().find(|x| x.inequality_id == "poincare-hr").unwrap();
            assert!((hr.lhs - 4.0 * PI).abs() < 1e-8 && (hr.rhs - 4.0 * PI).abs() < 1e-6);
        }
    }

    #[test]
    fn geodesic_sphere_equality_hyperbolic() {
        let reps = poincare_spaceform(&geo_sphere(1.0, -1.0, 2), 0, &WeightData::constant(), &q()).unwrap();
        assert!((reps[0].lhs / reps[0].rhs - 1.0).abs() < 1e-3, "{:?}", reps[0]);
    }

    #[test]
    fn hemisphere_ramp_strict() {
        let s = Surface::Sphere { radius: 1.0, m: 2 };
        let ball = intrinsic_ball(&s, &[0.0, 0.0], PI / 2.0).unwrap();
        let w = u_ramp(&ball, 0.1).unwrap();
        let reps = poincare_spaceform(&ball, 0, &w, &q()).unwrap();
        assert!(reps[0].margin > 0.0 && !reps[0].equality, "{:?}", reps[0]);
    }

    #[test]
    fn iso_chain_examples() {
        let s = Surface::Sphere { radius: 1.0, m: 2 };
        let hemi = intrinsic_ball(&s, &[0.0, 0.0], PI / 2.0).unwrap();
        let reps = iso_chain(&hemi, 0, &q()).unwrap();
        assert!((reps[0].lhs - 2.0 * PI).abs() < 1e-6);
        assert!((reps[0].rhs - 4.0 * PI).abs() < 1e-4, "{:?}", reps[0]);

        let t = PI / 4.0;
        let cap = intrinsic_ball(&s, &[0.0, 0.0], t).unwrap();
        let reps = iso_chain(&cap, 0, &q()).unwrap();
        let rhs = t.sin() * (2.0 * PI * t.sin() + 2.0 * PI * (1.0 - t.cos()));
        assert!((reps[0].lhs - 1.8403).abs() < 1e-4 && (reps[0].rhs - rhs).abs() < 1e-4);
        assert!((rhs - 4.4429).abs() < 1e-4);

        let disk = intrinsic_ball(&Surface::Plane { m: 2, offset: 0.0 }, &[0.0, 0.0], 1.0).unwrap();
        let reps = iso_chain(&disk, 0, &q()).unwrap();
        assert!((reps[0].lhs - PI).abs() < 1e-8 && (reps[0].rhs - 2.0 * PI).abs() < 1e-6);
        assert!(!reps[0].applicable);
    }

    #[test]
    fn ball_bounds_examples() {
        let plane = Surface::Plane { m: 2, offset: 0.0 };
        for rep in ball_volume_bounds(&plane, &[0.0, 0.0], 2.0, &q()).unwrap() {
            assert!((rep.lhs - PI).abs() < 1e-8 && rep.margin > 0.0, "{rep:?}");
        }
        let sphere = Surface::Sphere { radius: 1.0, m: 2 };
        let reps = ball_volume_bounds(&sphere, &[0.0, 0.0], PI / 2.0, &q()).unwrap();
        assert!((reps[0].lhs - 2.0 * PI / (PI * PI / 4.0)).abs() < 1e-6);
        assert!(reps.iter().all(|r| r.margin > 0.0));
        let cyl = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
        let reps = ball_volume_bounds(&cyl, &[0.0, 0.0], 0.5, &q()).unwrap();
        let small = reps.iter().find(|r| r.inequality_id == "ball-volume-small-curvature").unwrap();
        assert!((small.details["alpha"] - 0.5).abs() < 1e-9);
        assert!(small.applicable && small.margin > 0.0);
        assert!((small.rhs - 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn divergence_identity() {
        let sphere = Surface::Sphere { radius: 1.0, m: 2 }.chart().unwrap();
        let pts = vec![vec![0.7, 0.3], vec![1.9, 4.0]];
        assert!(divergence_identity_check(&sphere, &OperatorField::Identity, &pts).unwrap() < 1e-8);
        assert!(divergence_identity_check(&sphere, &OperatorField::Newton { r: 1 }, &pts).unwrap() < 1e-8);
        let bad = OperatorField::Fixed {
            matrix: vec![vec![1.0, 2.0], vec![0.0, 1.0]],
        };
        assert!(divergence_identity_check(&sphere, &bad, &pts).is_err());
        let hyp = Surface::GeodesicSphere { radius: 1.0, c: -1.0, m: 2 }.chart().unwrap();
        assert!(divergence_identity_check(&hyp, &OperatorField::Identity, &pts).is_err());
    }

    #[test]
    fn einstein_reduces_to_spaceform() {
        let region = geo_sphere(1.0, 0.0, 2);
        let w = WeightData::constant();
        let a = poincare_spaceform(&region, 1, &w, &q()).unwrap();
        let b = poincare_einstein_region(&region, &AmbientSpec::space_form(0.0, 3), &w, &q()).unwrap();
        assert!((a[0].lhs - b[0].lhs).abs() <= 1e-10 * a[0].lhs.abs());
        assert!((a[0].rhs - b[0].rhs).abs() <= 1e-10 * a[0].rhs.abs());
        assert!(b[0].equality);
    }

    #[test]
    fn einstein_sampled_flat_scalar() {
        // Planar data: S_2 = 0, so Scal equals (m−1)λ.
        let data = SampledData {
            diameter: 1.0,
            points: (0..4)
                .map(|i| DataPoint {
                    weight: 0.25,
                    lambdas: vec![0.0, 0.0],
                    rho: 0.1 * i as f64,
                    u: 1.0,
                    grad_u: vec![],
                    f: 0.0,
                    grad_f: vec![],
                })
                .collect(),
        };
        let reps = poincare_einstein(&data, &AmbientSpec::space_form(0.0, 3)).unwrap();
        assert_eq!(reps[0].rhs, 0.0);
        assert!(reps[0].flags["totally-geodesic-candidate"]);
        assert!(poincare_einstein(&data, &AmbientSpec::product(1.0, 2, -1.0, 2)).is_err());
    }

    #[test]
    fn box_region_margin() {
        let s = Surface::Graph {
            height: crate::geom::HeightFn::Paraboloid { a: 1.0 },
            m: 2,
            extent: 50.0,
        };
        let region = param_box(&s, vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap();
        for r in 0..2 {
            for rep in poincare_spaceform(&region, r, &WeightData::constant(), &q()).unwrap() {
                assert!(!rep.flags["u-supported-inside"] && !rep.applicable);
            }
        }
    }
}
