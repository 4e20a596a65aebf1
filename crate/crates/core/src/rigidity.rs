//! Decay functionals on intrinsic balls and hypothesis checklists for the
//! rigidity statements.
//!
//! Nothing here proves a conclusion. A checklist reports which hypotheses
//! hold at tolerance on samples, and a label saying which conclusion those
//! hypotheses would give.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::{calligraphic_g, h_c, AmbientSpec};
use crate::error::{LabError, Result};
use crate::geom::Surface;
use crate::measure::{integrate_many, intrinsic_ball, whole_surface, Part, Quadrature};
use crate::symfun::{binom, is_zero, ricci_principal, sym_all, ShapeSpectrum, ZERO_TOL};

/// Weight multiplying the boundary integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayWeight {
    /// `h_c(R)` with integrand `H_r`.
    Hc,
    /// `𝒢(R)` with integrand `H_1`.
    CalG,
    /// `1` with integrand `H_r`.
    One,
    /// `h_c(R)` with integrand `|A|^r`.
    APower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    DecaysToZero,
    Bounded,
    Grows,
    Inconclusive,
    DegenerateCompact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Thresholds {
    /// `v_k < decay_factor · v_1` is required for decay.
    pub decay_factor: f64,
    pub decay_slope: f64,
    pub growth_slope: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            decay_factor: 0.1,
            decay_slope: -0.2,
            growth_slope: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayScan {
    pub r: usize,
    pub weight: DecayWeight,
    pub radii: Vec<f64>,
    /// `w(R_j)`.
    pub weights: Vec<f64>,
    /// Boundary integrals before weighting.
    pub integrals: Vec<f64>,
    /// `v_j = w(R_j) · integral_j`.
    pub values: Vec<f64>,
    /// Log-log slope of `|v|` over the last half of the window.
    pub slope: f64,
    pub classification: Trend,
    /// Some ball exhausted the surface.
    pub truncated: bool,
    pub thresholds: Thresholds,
}

fn h(spec: &ShapeSpectrum, k: usize) -> f64 {
    sym_all(spec).s(k) / binom(spec.m(), k)
}

fn a_norm(spec: &ShapeSpectrum) -> f64 {
    spec.lambdas().iter().map(|l| l * l).sum::<f64>().sqrt()
}

/// Least-squares slope of `ln|v|` against `ln R` over the nonzero values.
fn log_slope(radii: &[f64], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(_, v)| v.abs() > 0.0)
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn classify(radii: &[f64], values: &[f64], compact: bool, th: &Thresholds) -> (f64, Trend) {
    let half = radii.len() / 2;
    let slope = log_slope(&radii[half..], &values[half..]);
    if compact {
        return (slope, Trend::DegenerateCompact);
    }
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return (slope, Trend::DecaysToZero);
    }
    let (first, last) = (values[0].abs(), values[values.len() - 1].abs());
    if last < th.decay_factor * first && slope < th.decay_slope {
        (slope, Trend::DecaysToZero)
    } else if slope > th.growth_slope {
        (slope, Trend::Grows)
    } else if slope.abs() <= th.growth_slope.min(-th.decay_slope) {
        (slope, Trend::Bounded)
    } else {
        (slope, Trend::Inconclusive)
    }
}

/// Weighted boundary integrals `w(R) ∫_{∂ℬ_R} g` on balls about `u0`.
pub fn decay_scan(
    surface: &Surface,
    u0: &[f64],
    r: usize,
    weight: DecayWeight,
    radii: &[f64],
    quad: &Quadrature,
    thresholds: &Thresholds,
) -> Result<DecayScan> {
    let m = surface.m();
    if r > m {
        return Err(LabError::Argument(format!("order r = {r} exceeds m = {m}")));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(LabError::Argument("radii must be positive and strictly increasing".into()));
    }
    let c = surface.ambient_c();
    let cal_g = match weight {
        DecayWeight::CalG => Some(calligraphic_g(&AmbientSpec::space_form(c, m + 1))?),
        _ => None,
    };
    let rows: Vec<(f64, f64, bool)> = radii
        .par_iter()
        .map(|&big_r| -> Result<(f64, f64, bool)> {
            let w = match (&weight, &cal_g) {
                (DecayWeight::CalG, Some(g)) => g.eval(big_r),
                (DecayWeight::One, _) => 1.0,
                _ => h_c(c, big_r),
            };
            let ball = intrinsic_ball(surface, u0, big_r)?;
            let truncated = ball.flag("truncated");
            let out = integrate_many(&ball, Part::Boundary, quad, &[], |s| {
                let spec = &s.point.spectrum;
                Ok(vec![match weight {
                    DecayWeight::Hc | DecayWeight::One => h(spec, r),
                    DecayWeight::CalG => h(spec, 1),
                    DecayWeight::APower => a_norm(spec).powi(r as i32),
                }])
            })?;
            let integral = if out.empty { 0.0 } else { out.values[0] };
            Ok((w, integral, truncated || out.empty))
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let integrals: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.0 * r.1).collect();
    let (slope, classification) = classify(radii, &values, surface.is_compact(), thresholds);
    Ok(DecayScan {
        r,
        weight,
        radii: radii.to_vec(),
        weights,
        integrals,
        values,
        slope,
        classification,
        truncated: rows.iter().any(|r| r.2),
        thresholds: *thresholds,
    })
}

/// The rigidity statements with a checklist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statement {
    /// `(r+1)`-minimal with decaying `h_c ∫ H_r`: relative nullity foliation.
    RMinimalFoliation,
    /// Constant scalar curvature `(m−1)λ` in an Einstein ambient.
    EinsteinConstantScalar,
    /// Constant scalar curvature `m(m−1)c` in a space form.
    SpaceformConstantScalar,
    /// No bounded `(r+1)`-minimal hypersurface with decaying `∫ H_r`.
    RMinimalNonexistence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ChecklistParams {
    #[serde(default = "default_r")]
    pub r: usize,
    /// Ball center in chart parameters (chart center when absent).
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Einstein ambient; the surface's space form when absent.
    #[serde(default)]
    pub ambient: Option<AmbientSpec>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_r() -> usize {
    1
}

pub fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
}

impl Default for ChecklistParams {
    fn default() -> Self {
        Self {
            r: 1,
            center: None,
            radii: default_radii(),
            ambient: None,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub passed: bool,
    /// Worst sampled value behind the decision.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checklist {
    pub statement: Statement,
    pub hypotheses: Vec<Hypothesis>,
    /// Optional refinements of the conclusion (not gating).
    pub extras: Vec<Hypothesis>,
    pub all_passed: bool,
    pub label: String,
    /// Testable trace of the conclusion on samples, when hypotheses pass.
    pub consistency: Option<bool>,
    pub scan: Option<DecayScan>,
    pub note: String,
}

pub const NOT_MET: &str = "hypotheses not met; no conclusion";
const SAMPLE_NOTE: &str = "hypotheses verified at tolerance on samples only";

fn hyp(name: &str, passed: bool, value: f64) -> Hypothesis {
    Hypothesis {
        name: name.to_string(),
        passed,
        value,
    }
}

/// Number of principal curvatures above `1e−6·|A|`.
pub fn sampled_rank(spec: &ShapeSpectrum) -> usize {
    let n = a_norm(spec);
    spec.lambdas().iter().filter(|l| l.abs() > 1e-6 * n && n > 0.0).count()
}

fn surface_spectra(surface: &Surface) -> Result<Vec<ShapeSpectrum>> {
    let region = whole_surface(surface)?;
    Ok(region
        .samples(2, Part::Interior, &[])?
        .into_iter()
        .map(|s| s.point.spectrum)
        .collect())
}

fn max_abs<F: Fn(&ShapeSpectrum) -> f64>(spectra: &[ShapeSpectrum], f: F) -> f64 {
    spectra.iter().map(|s| f(s).abs()).fold(0.0, f64::max)
}

pub fn rigidity_checklist(
    surface: &Surface,
    statement: Statement,
    params: &ChecklistParams,
    quad: &Quadrature,
) -> Result<Checklist> {
    surface.validate()?;
    let m = surface.m();
    let c = surface.ambient_c();
    let r = params.r;
    let spectra = surface_spectra(surface)?;
    let center = match &params.center {
        Some(u) => u.clone(),
        None => surface.chart()?.domain.center(),
    };
    let scan = |r: usize, weight| decay_scan(surface, &center, r, weight, &params.radii, quad, &params.thresholds);

    let mut hyps = Vec::new();
    let mut extras = Vec::new();
    let scan_out;
    let rank_ok = |bound: usize| spectra.iter().all(|s| sampled_rank(s) <= bound);

    let (label, trace): (&str, Box<dyn Fn() -> bool>) = match statement {
        Statement::RMinimalFoliation | Statement::RMinimalNonexistence => {
            let in_range = r >= 1 && r < m;
            hyps.push(hyp("order-in-range", in_range, r as f64));
            if !in_range {
                return Err(LabError::Argument(format!("order r = {r} must satisfy 1 <= r <= m-1")));
            }
            let next = max_abs(&spectra, |s| sym_all(s).s(r + 1));
            let next_ok = spectra.iter().all(|s| is_zero(sym_all(s).s(r + 1), a_norm(s), r + 1));
            hyps.push(hyp("next-minimal", next_ok, next));
            let min_hr = spectra.iter().map(|s| h(s, r)).fold(f64::INFINITY, f64::min);
            let sign_ok = r % 2 == 1 || spectra.iter().all(|s| h(s, r) >= -ZERO_TOL * (1.0 + a_norm(s).powi(r as i32)));
            hyps.push(hyp("parity-or-sign", sign_ok, min_hr));
            if statement == Statement::RMinimalNonexistence {
                hyps.push(hyp("ambient-nonpositive", c <= 0.0, c));
                let bounded = surface.is_compact();
                hyps.push(hyp("contained-in-ball", bounded, if bounded { 1.0 } else { 0.0 }));
            }
            let weight = if statement == Statement::RMinimalFoliation {
                DecayWeight::Hc
            } else {
                DecayWeight::One
            };
            let s = scan(r, weight)?;
            hyps.push(hyp("decay", s.classification == Trend::DecaysToZero, s.slope));
            scan_out = Some(s);
            if statement == Statement::RMinimalFoliation {
                let ric_min = spectra
                    .iter()
                    .flat_map(|s| ricci_principal(s, c))
                    .fold(f64::INFINITY, f64::min);
                if c == 0.0 {
                    extras.push(hyp("ricci-nonnegative", ric_min >= -ZERO_TOL, ric_min));
                } else if c > 0.0 {
                    extras.push(hyp("ricci-at-least-c", ric_min >= c - ZERO_TOL, ric_min));
                }
                let label = match extras.first() {
                    Some(e) if e.passed && c == 0.0 => "foliated by totally geodesic leaves; product splitting N x R^(m-r+1)",
                    Some(e) if e.passed => "foliated by totally geodesic leaves; totally geodesic",
                    _ => "foliated by totally geodesic leaves of dimension m-r+1",
                };
                let bound = r - 1;
                (label, Box::new(move || rank_ok(bound)))
            } else {
                // The statement forbids this configuration outright.
                ("no such hypersurface", Box::new(|| false))
            }
        }
        Statement::EinsteinConstantScalar | Statement::SpaceformConstantScalar => {
            let ambient = match (&params.ambient, statement) {
                (Some(a), Statement::EinsteinConstantScalar) => a.clone(),
                _ => AmbientSpec::space_form(c, m + 1),
            };
            if ambient.hypersurface_dim() != m {
                return Err(LabError::Argument("ambient dimension does not match the surface".into()));
            }
            let lambda = ambient.einstein_constant().ok_or_else(|| {
                LabError::UnsupportedAmbient(format!("{} has no Einstein constant", ambient.label()))
            })?;
            // Scal − (m−1)λ = 2S_2 by the traced Gauss equation.
            let excess = max_abs(&spectra, |s| 2.0 * sym_all(s).s(2));
            let scal_ok = spectra.iter().all(|s| is_zero(2.0 * sym_all(s).s(2), a_norm(s), 2));
            hyps.push(hyp("constant-scalar", scal_ok, excess));
            let weight = if statement == Statement::EinsteinConstantScalar {
                DecayWeight::CalG
            } else {
                DecayWeight::Hc
            };
            let s = scan(1, weight)?;
            hyps.push(hyp("decay", s.classification == Trend::DecaysToZero, s.slope));
            extras.push(hyp("einstein-constant", true, lambda));
            scan_out = Some(s);
            ("totally geodesic", Box::new(|| rank_ok(0)))
        }
    };

    let all_passed = hyps.iter().all(|h| h.passed);
    Ok(Checklist {
        statement,
        hypotheses: hyps,
        extras,
        all_passed,
        label: if all_passed { label.to_string() } else { NOT_MET.to_string() },
        consistency: all_passed.then(trace),
        scan: scan_out,
        note: SAMPLE_NOTE.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn classification_rules() {
        let th = Thresholds::default();
        let radii = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(classify(&radii, &[0.0; 4], false, &th).1, Trend::DecaysToZero);
        assert_eq!(classify(&radii, &[1.0, 0.5, 0.25, 0.01], false, &th).1, Trend::DecaysToZero);
        assert_eq!(classify(&radii, &[1.0, 2.0, 4.0, 8.0], false, &th).1, Trend::Grows);
        assert_eq!(classify(&radii, &[1.0, 1.0, 1.0, 1.0], false, &th).1, Trend::Bounded);
        assert_eq!(classify(&radii, &[1.0, 2.0, 4.0, 8.0], true, &th).1, Trend::DegenerateCompact);
        let (s, _) = classify(&radii, &[1.0, 2.0, 4.0, 8.0], false, &th);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plane_decays() {
        let plane = Surface::Plane { m: 2, offset: 0.0 };
        let s = decay_scan(&plane, &[0.0, 0.0], 1, DecayWeight::Hc, &default_radii(), &q(), &Thresholds::default()).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
        assert_eq!(s.classification, Trend::DecaysToZero);
    }

    #[test]
    fn cylinder_grows() {
        let cyl = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
        let radii = [1.0, 2.0, 4.0, 8.0];
        let s = decay_scan(&cyl, &[0.0, 0.0], 1, DecayWeight::Hc, &radii, &q(), &Thresholds::default()).unwrap();
        assert_eq!(s.classification, Trend::Grows);
        // Below πR₀ the boundary is a flat circle: v = R · ½ · 2πR.
        assert!((s.values[0] - PI).abs() < 1e-8, "{:?}", s.values);
    }

    #[test]
    fn sphere_compact() {
        let sphere = Surface::Sphere { radius: 1.0, m: 2 };
        let radii = [0.5, 1.0, 2.0, 4.0];
        let s = decay_scan(&sphere, &[0.0, 0.0], 1, DecayWeight::Hc, &radii, &q(), &Thresholds::default()).unwrap();
        assert_eq!(s.classification, Trend::DegenerateCompact);
        assert!(s.truncated && s.values[3] == 0.0);
    }

    #[test]
    fn translation_invariance_on_cylinder() {
        let cyl = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
        let radii = [1.0, 2.0, 5.0];
        let th = Thresholds::default();
        let a = decay_scan(&cyl, &[0.0, 0.0], 1, DecayWeight::One, &radii, &q(), &th).unwrap();
        let b = decay_scan(&cyl, &[0.0, 3.0], 1, DecayWeight::One, &radii, &q(), &th).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn checklists() {
        let plane = Surface::Plane { m: 2, offset: 0.0 };
        let p = ChecklistParams::default();
        let c = rigidity_checklist(&plane, Statement::RMinimalFoliation, &p, &q()).unwrap();
        assert!(c.all_passed && c.consistency == Some(true));
        assert!(c.label.contains("product"));

        let cyl = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
        let p = ChecklistParams {
            radii: vec![1.0, 2.0, 4.0, 8.0],
            ..Default::default()
        };
        let c = rigidity_checklist(&cyl, Statement::RMinimalFoliation, &p, &q()).unwrap();
        let pass = |n: &str| c.hypotheses.iter().find(|h| h.name == n).unwrap().passed;
        assert!(pass("next-minimal") && pass("parity-or-sign") && !pass("decay"));
        assert_eq!(c.label, NOT_MET);

        let c = rigidity_checklist(&plane, Statement::RMinimalNonexistence, &ChecklistParams::default(), &q()).unwrap();
        assert!(!c.hypotheses.iter().find(|h| h.name == "contained-in-ball").unwrap().passed);
        assert_eq!(c.label, NOT_MET);

        let c = rigidity_checklist(&plane, Statement::SpaceformConstantScalar, &ChecklistParams::default(), &q()).unwrap();
        assert!(c.all_passed && c.consistency == Some(true));
    }
}
