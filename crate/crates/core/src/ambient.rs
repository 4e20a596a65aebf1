//! Ambient spaces and their comparison functions.
//!
//! A space form of curvature `c` carries the closed-form comparison function
//! `S_c` (`t`, `sinh`, `sin`, suitably scaled). The non-constant-curvature
//! Einstein examples carry an upper bound `F(t)` for the radial sectional
//! curvature, from which `G` is obtained by integrating `G'' + F G = 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ode::{hermite_uniform, rk4_step};

/// Default integration horizon for ODE-backed comparison functions.
pub const DEFAULT_G_HORIZON: f64 = 50.0;
/// Default step for ODE-backed comparison functions.
pub const DEFAULT_G_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmbientKind {
    SpaceForm {
        c: f64,
    },
    Product {
        c1: f64,
        p1: usize,
        c2: f64,
        p2: usize,
    },
    /// Model with constant radial curvature bound, e.g. the complex
    /// projective space with `F ≡ 1`.
    ConstantF {
        value: f64,
        #[serde(default)]
        einstein_constant: Option<f64>,
        #[serde(default)]
        injectivity_radius: Option<f64>,
    },
    Schwarzschild {
        beta: f64,
    },
}

/// An ambient manifold of dimension `m + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientSpec {
    #[serde(flatten)]
    pub kind: AmbientKind,
    /// Dimension of the ambient, `m + 1`.
    pub dim: usize,
}

impl AmbientSpec {
    pub fn space_form(c: f64, dim: usize) -> Self {
        Self {
            kind: AmbientKind::SpaceForm { c },
            dim,
        }
    }

    pub fn product(c1: f64, p1: usize, c2: f64, p2: usize) -> Self {
        Self {
            kind: AmbientKind::Product { c1, p1, c2, p2 },
            dim: p1 + p2,
        }
    }

    /// Compact model with `F ≡ value` and finite injectivity radius.
    pub fn constant_f(value: f64, dim: usize, einstein_constant: Option<f64>, injectivity_radius: f64) -> Self {
        Self {
            kind: AmbientKind::ConstantF {
                value,
                einstein_constant,
                injectivity_radius: Some(injectivity_radius),
            },
            dim,
        }
    }

    pub fn schwarzschild(beta: f64) -> Self {
        Self {
            kind: AmbientKind::Schwarzschild { beta },
            dim: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(LabError::Validation(format!(
                "ambient dimension must be at least 3, got {}",
                self.dim
            )));
        }
        match &self.kind {
            AmbientKind::SpaceForm { c } if !c.is_finite() => {
                Err(LabError::Validation("space-form curvature must be finite".into()))
            }
            AmbientKind::Product { p1, p2, .. } if p1 + p2 != self.dim || *p1 == 0 || *p2 == 0 => Err(
                LabError::Validation(format!("product factors {p1}+{p2} do not match dimension {}", self.dim)),
            ),
            AmbientKind::Schwarzschild { beta } if !(*beta > 0.0) => {
                Err(LabError::Validation(format!("Schwarzschild beta must be positive, got {beta}")))
            }
            AmbientKind::Schwarzschild { .. } if self.dim != 4 => {
                Err(LabError::Validation("Schwarzschild ambient is four-dimensional".into()))
            }
            AmbientKind::ConstantF {
                injectivity_radius: Some(i),
                ..
            } if !(*i > 0.0) => Err(LabError::Validation("injectivity radius must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Dimension `m` of hypersurfaces in this ambient.
    pub fn hypersurface_dim(&self) -> usize {
        self.dim - 1
    }

    pub fn label(&self) -> String {
        match &self.kind {
            AmbientKind::SpaceForm { c } => format!("space-form(c={c})"),
            AmbientKind::Product { c1, p1, c2, p2 } => format!("product(c1={c1},p1={p1},c2={c2},p2={p2})"),
            AmbientKind::ConstantF { value, .. } => format!("constant-F({value})"),
            AmbientKind::Schwarzschild { beta } => format!("schwarzschild(beta={beta})"),
        }
    }

    /// Space-form curvature, if this is a space form.
    pub fn space_form_c(&self) -> Option<f64> {
        match self.kind {
            AmbientKind::SpaceForm { c } => Some(c),
            _ => None,
        }
    }

    pub fn is_einstein(&self) -> bool {
        self.einstein_constant().is_some()
    }

    /// Einstein constant `λ` with `Ric = λ g`, when the ambient is Einstein.
    pub fn einstein_constant(&self) -> Option<f64> {
        let m = self.hypersurface_dim() as f64;
        match self.kind {
            AmbientKind::SpaceForm { c } => Some(m * c),
            AmbientKind::Product { c1, p1, c2, p2 } => {
                let r1 = (p1 as f64 - 1.0) * c1;
                let r2 = (p2 as f64 - 1.0) * c2;
                ((r1 - r2).abs() <= 1e-12 * (1.0 + r1.abs())).then_some(r1)
            }
            AmbientKind::ConstantF { einstein_constant, .. } => einstein_constant,
            AmbientKind::Schwarzschild { .. } => Some(0.0),
        }
    }

    /// Injectivity radius (`f64::INFINITY` when infinite).
    ///
    /// For the Schwarzschild metric the minimal two-sphere of radius `β` is
    /// totally geodesic, so `πβ` bounds the injectivity radius from above;
    /// that bound is used.
    pub fn injectivity_radius(&self) -> f64 {
        match self.kind {
            AmbientKind::SpaceForm { c } if c > 0.0 => PI / c.sqrt(),
            AmbientKind::SpaceForm { .. } => f64::INFINITY,
            AmbientKind::Product { c1, c2, .. } => {
                let c = c1.max(c2);
                if c > 0.0 {
                    PI / c.sqrt()
                } else {
                    f64::INFINITY
                }
            }
            AmbientKind::ConstantF { injectivity_radius, value, .. } => injectivity_radius.unwrap_or(
                if value > 0.0 { PI / value.sqrt() } else { f64::INFINITY },
            ),
            AmbientKind::Schwarzschild { beta } => PI * beta,
        }
    }

    /// The comparison function `G` of this ambient.
    pub fn comparison_fn(&self) -> Result<ComparisonFn> {
        self.validate()?;
        match self.kind {
            AmbientKind::SpaceForm { c } => Ok(ComparisonFn::closed_form(c)),
            _ => match einstein_f(self)? {
                FFunction::Constant(c) => Ok(ComparisonFn::closed_form(c)),
                f @ FFunction::Schwarzschild(_) => solve_g(&f, DEFAULT_G_HORIZON, DEFAULT_G_STEP),
            },
        }
    }
}

/// Values of `S_c(t)`, `S_c'(t)` and `h_c(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub s: f64,
    pub ds: f64,
    pub h: f64,
    /// `t ≥ π/(2√c)` for `c > 0`: past the hemisphere, `S_c` stops increasing.
    pub past_hemisphere: bool,
}

/// `S_c(t)` only.
pub fn s_c(c: f64, t: f64) -> f64 {
    if c == 0.0 {
        t
    } else if c < 0.0 {
        let k = (-c).sqrt();
        (k * t).sinh() / k
    } else {
        let k = c.sqrt();
        (k * t).sin() / k
    }
}

/// `S_c'(t)` only.
pub fn ds_c(c: f64, t: f64) -> f64 {
    if c == 0.0 {
        1.0
    } else if c < 0.0 {
        ((-c).sqrt() * t).cosh()
    } else {
        (c.sqrt() * t).cos()
    }
}

/// `h_c`: equal to `S_c` for `c ≤ 0` and identically one for `c > 0`.
pub fn h_c(c: f64, t: f64) -> f64 {
    if c > 0.0 {
        1.0
    } else {
        s_c(c, t)
    }
}

pub fn comparison(c: f64, t: f64) -> Result<Comparison> {
    if !(t >= 0.0) {
        return Err(LabError::Argument(format!("distance must be non-negative, got {t}")));
    }
    Ok(Comparison {
        s: s_c(c, t),
        ds: ds_c(c, t),
        h: h_c(c, t),
        past_hemisphere: c > 0.0 && t >= PI / (2.0 * c.sqrt()),
    })
}

/// Radial curvature bound `F(t)`.
#[derive(Clone, Debug)]
pub enum FFunction {
    Constant(f64),
    Schwarzschild(Arc<SchwarzschildProfile>),
}

impl FFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FFunction::Constant(c) => *c,
            FFunction::Schwarzschild(p) => p.f_at(t),
        }
    }
}

pub fn einstein_f(spec: &AmbientSpec) -> Result<FFunction> {
    spec.validate()?;
    match spec.kind {
        AmbientKind::SpaceForm { .. } => Err(LabError::Argument(
            "space forms use the closed-form comparison function directly".into(),
        )),
        AmbientKind::Product { c1, p1, c2, p2 } => {
            if spec.einstein_constant().is_none() {
                return Err(LabError::Validation(format!(
                    "product is not Einstein: (p1-1)c1 = {} but (p2-1)c2 = {}",
                    (p1 as f64 - 1.0) * c1,
                    (p2 as f64 - 1.0) * c2
                )));
            }
            Ok(FFunction::Constant(c1.max(c2)))
        }
        AmbientKind::ConstantF { value, .. } => Ok(FFunction::Constant(value)),
        AmbientKind::Schwarzschild { beta } => Ok(FFunction::Schwarzschild(Arc::new(schwarzschild_profile(
            beta,
            DEFAULT_G_HORIZON,
        )?))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    OdeIntegrated,
}

/// Nondecreasing comparison function `G` on `[0, b)` with `G(0) = 0`.
#[derive(Clone, Debug)]
pub struct ComparisonFn {
    repr: GRepr,
    /// Right end `b` of the domain (`∞` when unbounded).
    pub domain_end: f64,
    /// Whether the domain was cut where `G'` stopped being positive.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
enum GRepr {
    ClosedForm { c: f64 },
    Sampled { step: f64, g: Vec<f64>, dg: Vec<f64> },
}

impl ComparisonFn {
    pub fn closed_form(c: f64) -> Self {
        let (domain_end, truncated) = if c > 0.0 {
            (PI / (2.0 * c.sqrt()), true)
        } else {
            (f64::INFINITY, false)
        };
        Self {
            repr: GRepr::ClosedForm { c },
            domain_end,
            truncated,
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self.repr {
            GRepr::ClosedForm { .. } => Provenance::ClosedForm,
            GRepr::Sampled { .. } => Provenance::OdeIntegrated,
        }
    }

    /// Curvature of the closed form, if any.
    pub fn closed_form_c(&self) -> Option<f64> {
        match self.repr {
            GRepr::ClosedForm { c } => Some(c),
            GRepr::Sampled { .. } => None,
        }
    }

    pub fn in_domain(&self, t: f64) -> bool {
        t >= 0.0 && t <= self.domain_end
    }

    /// `(G(t), G'(t))`. Sampled functions are interpolated (cubic Hermite)
    /// and clamped at the domain end.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match &self.repr {
            GRepr::ClosedForm { c } => (s_c(*c, t), ds_c(*c, t)),
            GRepr::Sampled { step, g, dg } => hermite_uniform(*step, g, dg, t),
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn dg(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    pub fn is_bounded(&self) -> bool {
        match self.repr {
            GRepr::ClosedForm { c } => c > 0.0,
            GRepr::Sampled { .. } => self.truncated,
        }
    }
}

/// Integrates `G'' + F G = 0`, `G(0) = 0`, `G'(0) = 1` with RK4 at fixed
/// `step`, stopping at `t_max` or at the first grid point where `G' ≤ 0`.
pub fn solve_g(f: &FFunction, t_max: f64, step: f64) -> Result<ComparisonFn> {
    if !(step > 0.0) || !(t_max > 0.0) {
        return Err(LabError::Argument(format!("need step > 0 and t_max > 0, got {step}, {t_max}")));
    }
    let n = (t_max / step).round().max(1.0) as usize;
    let step = t_max / n as f64;
    let rhs = |t: f64, y: &[f64; 2]| [y[1], -f.eval(t) * y[0]];
    let mut g = Vec::with_capacity(n + 1);
    let mut dg = Vec::with_capacity(n + 1);
    let mut y = [0.0, 1.0];
    g.push(y[0]);
    dg.push(y[1]);
    let mut truncated = false;
    for i in 0..n {
        let t = i as f64 * step;
        for probe in [t, t + 0.5 * step, t + step] {
            if !f.eval(probe).is_finite() {
                return Err(LabError::Integration(format!("F is not finite at t = {probe}")));
            }
        }
        y = rk4_step(&rhs, t, &y, step);
        if y[1] <= 0.0 {
            truncated = true;
            break;
        }
        g.push(y[0]);
        dg.push(y[1]);
    }
    let domain_end = (g.len() - 1) as f64 * step;
    if g.len() < 2 {
        return Err(LabError::Integration("comparison function has empty domain".into()));
    }
    Ok(ComparisonFn {
        repr: GRepr::Sampled { step, g, dg },
        domain_end,
        truncated,
    })
}

/// `𝒢`: `G` when the injectivity radius is infinite, the constant one otherwise.
#[derive(Clone, Debug)]
pub enum CalligraphicG {
    Comparison(ComparisonFn),
    One,
}

impl CalligraphicG {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CalligraphicG::Comparison(g) => g.g(t),
            CalligraphicG::One => 1.0,
        }
    }
}

pub fn calligraphic_g(spec: &AmbientSpec) -> Result<CalligraphicG> {
    if spec.injectivity_radius().is_infinite() {
        Ok(CalligraphicG::Comparison(spec.comparison_fn()?))
    } else {
        Ok(CalligraphicG::One)
    }
}

/// Warping functions of the Schwarzschild metric
/// `dr² + φ(r)² ds₁² + ψ(r)² ds₂²`, sampled on a uniform grid.
///
/// `ψ` solves `ψ'' = (β/2) ψ⁻²` with `ψ(0) = β`, `ψ'(0) = 0`; its first
/// integral is `ψ'² = 1 − β/ψ`. `φ = 2β ψ'`.
#[derive(Clone, Debug)]
pub struct SchwarzschildProfile {
    pub beta: f64,
    pub step: f64,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
}

impl SchwarzschildProfile {
    pub fn r_max(&self) -> f64 {
        (self.psi.len() - 1) as f64 * self.step
    }

    pub fn psi_at(&self, r: f64) -> (f64, f64) {
        hermite_uniform(self.step, &self.psi, &self.dpsi, r)
    }

    pub fn ddpsi_of(&self, psi: f64) -> f64 {
        0.5 * self.beta / (psi * psi)
    }

    /// `φ(r) = 2β ψ'(r)`.
    pub fn phi_at(&self, r: f64) -> f64 {
        2.0 * self.beta * self.psi_at(r).1
    }

    /// `F = 2ψ''/ψ = β ψ⁻³`.
    pub fn f_at(&self, r: f64) -> f64 {
        let psi = self.psi_at(r).0;
        2.0 * self.ddpsi_of(psi) / psi
    }

    pub fn phi_samples(&self) -> Vec<f64> {
        self.dpsi.iter().map(|d| 2.0 * self.beta * d).collect()
    }
}

pub fn schwarzschild_profile(beta: f64, r_max: f64) -> Result<SchwarzschildProfile> {
    schwarzschild_profile_with_step(beta, r_max, DEFAULT_G_STEP)
}

pub fn schwarzschild_profile_with_step(beta: f64, r_max: f64, step: f64) -> Result<SchwarzschildProfile> {
    if !(beta > 0.0) {
        return Err(LabError::Argument(format!("beta must be positive, got {beta}")));
    }
    if !(r_max > 0.0) || !(step > 0.0) {
        return Err(LabError::Argument("need r_max > 0 and step > 0".into()));
    }
    let n = (r_max / step).round().max(1.0) as usize;
    let step = r_max / n as f64;
    let rhs = |_r: f64, y: &[f64; 2]| [y[1], 0.5 * beta / (y[0] * y[0])];
    let mut psi = Vec::with_capacity(n + 1);
    let mut dpsi = Vec::with_capacity(n + 1);
    let mut y = [beta, 0.0];
    psi.push(y[0]);
    dpsi.push(y[1]);
    for i in 0..n {
        y = rk4_step(&rhs, i as f64 * step, &y, step);
        if !(y[0] > 0.0) {
            return Err(LabError::Integration(format!(
                "psi became non-positive at r = {}",
                (i + 1) as f64 * step
            )));
        }
        psi.push(y[0]);
        dpsi.push(y[1]);
    }
    Ok(SchwarzschildProfile { beta, step, psi, dpsi })
}
