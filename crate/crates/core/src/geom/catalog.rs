//! Built-in closed-form hypersurfaces.
//!
//! Normals: spheres, cylinders and geodesic spheres use the inward normal,
//! graphs the upward one, revolution surfaces the left normal of the
//! profile `(−z′, x′)`; planes point along the last axis.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::chart::{frame_with_first, hyperspherical, model_dot, Chart, ChartMap, HeightFn, ParamDomain, ProfileFn};
use crate::ambient::s_c;
use crate::error::{LabError, Result};

/// Half-width of the parameter box used for unbounded surfaces.
pub const DEFAULT_EXTENT: f64 = 50.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Surface {
    /// Hyperplane `x_{m+1} = offset`.
    Plane {
        m: usize,
        #[serde(default)]
        offset: f64,
    },
    /// Round sphere of radius `radius` about the origin of `ℝ^{m+1}`.
    Sphere { radius: f64, m: usize },
    /// `S^k(radius) × ℝ^{m−k}`.
    Cylinder { radius: f64, k: usize, m: usize },
    Graph {
        height: HeightFn,
        m: usize,
        #[serde(default = "default_extent")]
        extent: f64,
    },
    Revolution {
        profile: ProfileFn,
        m: usize,
        #[serde(default = "default_extent")]
        extent: f64,
    },
    /// Geodesic sphere of radius `radius` in the space form of curvature `c`.
    GeodesicSphere { radius: f64, c: f64, m: usize },
}

fn default_extent() -> f64 {
    DEFAULT_EXTENT
}

/// Identifier and parameter documentation of every catalog entry.
pub fn catalog_listing() -> Vec<(&'static str, &'static str)> {
    vec![
        ("plane", "m: dimension, offset: height of the hyperplane (default 0)"),
        ("sphere", "radius > 0, m: dimension; inward normal, principal curvatures 1/radius"),
        ("cylinder", "radius > 0, k: sphere factor dimension (1 ≤ k ≤ m), m: dimension"),
        (
            "graph",
            "height: {kind: zero | paraboloid(a) | saddle(a) | bump(a, sigma)}, m, extent (default 50); upward normal",
        ),
        (
            "revolution",
            "profile: {kind: circle(radius) | line(radius) | catenary(a)}, m, extent (default 50)",
        ),
        (
            "geodesic-sphere",
            "radius > 0, c: ambient curvature, m; principal curvatures S_c'(radius)/S_c(radius)",
        ),
    ]
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// Domain of `n` hyperspherical angles: `(0, π)` except the last, which is periodic.
fn angle_domain(n: usize) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let lo = vec![0.0; n];
    let mut hi = vec![PI; n];
    let mut periodic = vec![false; n];
    if n > 0 {
        hi[n - 1] = 2.0 * PI;
        periodic[n - 1] = true;
    }
    (lo, hi, periodic)
}

/// Domain `(0, s_max) × angles(n)` of a polar chart.
pub(crate) fn polar_domain(s_lo: f64, s_max: f64, n: usize, axis_lo: bool) -> ParamDomain {
    let (alo, ahi, aper) = angle_domain(n);
    let mut lo = vec![s_lo];
    lo.extend(alo);
    let mut hi = vec![s_max];
    hi.extend(ahi);
    let mut periodic = vec![false];
    periodic.extend(aper);
    let m = n + 1;
    let mut degenerate_lo = vec![false; m];
    let mut degenerate_hi = vec![false; m];
    degenerate_lo[0] = axis_lo;
    for k in 1..m {
        if !periodic[k] {
            degenerate_lo[k] = true;
            degenerate_hi[k] = true;
        }
    }
    ParamDomain {
        lo,
        hi,
        periodic,
        degenerate_lo,
        degenerate_hi,
    }
}

impl Surface {
    pub fn m(&self) -> usize {
        match *self {
            Surface::Plane { m, .. }
            | Surface::Sphere { m, .. }
            | Surface::Cylinder { m, .. }
            | Surface::Graph { m, .. }
            | Surface::Revolution { m, .. }
            | Surface::GeodesicSphere { m, .. } => m,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Surface::Plane { .. } => "plane",
            Surface::Sphere { .. } => "sphere",
            Surface::Cylinder { .. } => "cylinder",
            Surface::Graph { .. } => "graph",
            Surface::Revolution { .. } => "revolution",
            Surface::GeodesicSphere { .. } => "geodesic-sphere",
        }
    }

    /// Curvature of the ambient space form the surface lives in.
    pub fn ambient_c(&self) -> f64 {
        match *self {
            Surface::GeodesicSphere { c, .. } => c,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if m < 2 {
            return Err(LabError::Argument(format!("{}: dimension m must be at least 2", self.id())));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(LabError::Argument(format!("{}: {name} must be positive, got {v}", self.id())))
            }
        };
        match self {
            Surface::Plane { offset, .. } => {
                if !offset.is_finite() {
                    return Err(LabError::Argument("plane: offset must be finite".into()));
                }
            }
            Surface::Sphere { radius, .. } => positive("radius", *radius)?,
            Surface::Cylinder { radius, k, .. } => {
                positive("radius", *radius)?;
                if *k == 0 || *k > m {
                    return Err(LabError::Argument(format!("cylinder: need 1 ≤ k ≤ m, got k = {k}")));
                }
            }
            Surface::Graph { height, extent, .. } => {
                positive("extent", *extent)?;
                if let HeightFn::Bump { sigma, .. } = height {
                    positive("sigma", *sigma)?;
                }
            }
            Surface::Revolution { profile, extent, .. } => {
                positive("extent", *extent)?;
                match profile {
                    ProfileFn::Circle { radius } | ProfileFn::Line { radius } => positive("radius", *radius)?,
                    ProfileFn::Catenary { a } => positive("a", *a)?,
                }
            }
            Surface::GeodesicSphere { radius, c, .. } => {
                positive("radius", *radius)?;
                if !c.is_finite() {
                    return Err(LabError::Argument("geodesic-sphere: c must be finite".into()));
                }
                if *c > 0.0 && *radius >= PI / (2.0 * c.sqrt()) {
                    return Err(LabError::Argument(format!(
                        "geodesic-sphere: radius {radius} leaves the open hemisphere of curvature {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_compact(&self) -> bool {
        matches!(
            self,
            Surface::Sphere { .. }
                | Surface::GeodesicSphere { .. }
                | Surface::Revolution {
                    profile: ProfileFn::Circle { .. },
                    ..
                }
        ) || matches!(self, Surface::Cylinder { k, m, .. } if k == m)
    }

    /// Intrinsic diameter when the surface is compact.
    pub fn intrinsic_diameter(&self) -> Option<f64> {
        match *self {
            Surface::Sphere { radius, .. } => Some(PI * radius),
            Surface::GeodesicSphere { radius, c, .. } => Some(PI * s_c(c, radius)),
            Surface::Revolution {
                profile: ProfileFn::Circle { radius },
                ..
            } => Some(PI * radius),
            Surface::Cylinder { radius, k, m } if k == m => Some(PI * radius),
            _ => None,
        }
    }

    /// Analytic principal curvatures where they are constant.
    pub fn constant_curvatures(&self) -> Option<Vec<f64>> {
        let m = self.m();
        match *self {
            Surface::Plane { .. } => Some(vec![0.0; m]),
            Surface::Sphere { radius, .. } => Some(vec![1.0 / radius; m]),
            Surface::Cylinder { radius, k, .. } => {
                let mut v = vec![1.0 / radius; k];
                v.extend(vec![0.0; m - k]);
                Some(v)
            }
            Surface::GeodesicSphere { radius, c, .. } => {
                Some(vec![crate::ambient::ds_c(c, radius) / s_c(c, radius); m])
            }
            Surface::Graph {
                height: HeightFn::Zero, ..
            } => Some(vec![0.0; m]),
            _ => None,
        }
    }

    /// Global chart with analytic jets.
    pub fn chart(&self) -> Result<Chart> {
        self.validate()?;
        let m = self.m();
        let n = m + 1;
        match self {
            Surface::Plane { offset, .. } => {
                let mut origin = vec![0.0; n];
                origin[m] = *offset;
                let basis = (0..m).map(|k| unit(n, k)).collect();
                let domain = ParamDomain::open_box(vec![-DEFAULT_EXTENT; m], vec![DEFAULT_EXTENT; m]);
                Chart::new(ChartMap::Affine { origin, basis }, domain, 0.0, &vec![0.0; m], &unit(n, m))
            }
            Surface::Sphere { radius, .. } => {
                let frame: Vec<Vec<f64>> = (0..n).map(|k| unit(n, (k + m) % n)).collect();
                self.sphere_polar(*radius, vec![0.0; n], frame, PI * radius)
            }
            Surface::GeodesicSphere { radius, c, .. } if *c == 0.0 => {
                let frame: Vec<Vec<f64>> = (0..n).map(|k| unit(n, (k + m) % n)).collect();
                self.sphere_polar(*radius, vec![0.0; n], frame, PI * radius)
            }
            Surface::GeodesicSphere { radius, c, .. } => {
                let (lo, hi, periodic) = angle_domain(m);
                let mut degenerate_lo = vec![true; m];
                let mut degenerate_hi = vec![true; m];
                degenerate_lo[m - 1] = false;
                degenerate_hi[m - 1] = false;
                let domain = ParamDomain {
                    lo,
                    hi,
                    periodic,
                    degenerate_lo,
                    degenerate_hi,
                };
                let map = ChartMap::ModelSphere {
                    radius: *radius,
                    c: *c,
                    m,
                };
                let u0 = domain.center();
                let x = DVector::from_vec(map.eval::<f64>(&u0));
                let mut p = DVector::zeros(n + 1);
                p[0] = 1.0 / c.abs().sqrt();
                let inward = &p - &x * (c * model_dot(*c, &p, &x));
                let inward: Vec<f64> = inward.iter().copied().collect();
                Chart::new(map, domain, *c, &u0, &inward)
            }
            Surface::Cylinder { radius, k, .. } => {
                let (alo, ahi, aper) = angle_domain(*k);
                let mut lo = alo;
                lo.extend(vec![-DEFAULT_EXTENT; m - k]);
                let mut hi = ahi;
                hi.extend(vec![DEFAULT_EXTENT; m - k]);
                let mut periodic = aper;
                periodic.extend(vec![false; m - k]);
                let mut degenerate_lo = vec![false; m];
                for d in degenerate_lo.iter_mut().take(k.saturating_sub(1)) {
                    *d = true;
                }
                let domain = ParamDomain {
                    lo,
                    hi,
                    periodic,
                    degenerate_hi: degenerate_lo.clone(),
                    degenerate_lo,
                };
                let map = ChartMap::Cylinder {
                    radius: *radius,
                    k: *k,
                    m,
                };
                let u0 = domain.center();
                let mut inward: Vec<f64> = map.eval::<f64>(&u0);
                for (i, v) in inward.iter_mut().enumerate() {
                    *v = if i <= *k { -*v } else { 0.0 };
                }
                Chart::new(map, domain, 0.0, &u0, &inward)
            }
            Surface::Graph { height, extent, .. } => {
                let domain = ParamDomain::open_box(vec![-extent; m], vec![*extent; m]);
                let map = ChartMap::Graph {
                    height: height.clone(),
                    m,
                };
                Chart::new(map, domain, 0.0, &vec![0.0; m], &unit(n, m))
            }
            Surface::Revolution { profile, extent, .. } => {
                let (s_lo, s_hi) = profile.range(*extent);
                let circle = matches!(profile, ProfileFn::Circle { .. });
                let mut domain = polar_domain(s_lo, s_hi, m - 1, circle);
                domain.degenerate_hi[0] = circle;
                let map = ChartMap::Revolution {
                    profile: profile.clone(),
                    m,
                };
                let u0 = domain.center();
                let reference = revolution_normal(&map, &u0);
                Chart::new(map, domain, 0.0, &u0, &reference)
            }
        }
    }

    fn sphere_polar(&self, radius: f64, center: Vec<f64>, frame: Vec<Vec<f64>>, s_max: f64) -> Result<Chart> {
        let m = self.m();
        let mut domain = polar_domain(0.0, s_max, m - 1, true);
        domain.degenerate_hi[0] = s_max >= PI * radius;
        let map = ChartMap::SpherePolar {
            radius,
            center: center.clone(),
            frame,
        };
        let u0 = domain.center();
        let x = map.eval::<f64>(&u0);
        let inward: Vec<f64> = x.iter().zip(&center).map(|(a, b)| b - a).collect();
        Chart::new(map, domain, 0.0, &u0, &inward)
    }

    /// Geodesic polar chart about the point with global parameter `u0`,
    /// covering the intrinsic ball of radius `s_max` (clipped to the cut locus).
    pub fn polar_chart(&self, u0: &[f64], s_max: f64) -> Result<Chart> {
        self.validate()?;
        let m = self.m();
        let n = m + 1;
        let base = self.chart()?;
        let p = base.position(u0);
        match self {
            Surface::Plane { offset, .. } => {
                let mut origin: Vec<f64> = p.iter().copied().collect();
                origin[m] = *offset;
                let basis = (0..m).map(|k| unit(n, k)).collect();
                let map = ChartMap::AffinePolar { origin, basis };
                let domain = polar_domain(0.0, s_max, m - 1, true);
                let uc = domain.center();
                Chart::new(map, domain, 0.0, &uc, &unit(n, m))
            }
            Surface::Sphere { radius, .. }
            | Surface::GeodesicSphere {
                radius, c: 0.0, ..
            } => {
                let frame = frame_with_first(p.as_slice());
                self.sphere_polar(*radius, vec![0.0; n], frame, s_max.min(PI * radius))
            }
            Surface::Cylinder { radius, k: 1, m: 2 } => {
                let theta0 = p[1].atan2(p[0]);
                let map = ChartMap::CylinderPolar {
                    radius: *radius,
                    theta0,
                    z0: p[2],
                };
                let domain = polar_domain(0.0, s_max.min(PI * radius), 1, true);
                let uc = domain.center();
                let x = map.eval::<f64>(&uc);
                let inward = vec![-x[0], -x[1], 0.0];
                Chart::new(map, domain, 0.0, &uc, &inward)
            }
            _ => Err(LabError::UnsupportedAmbient(format!(
                "no geodesic polar chart for {}; use a grid distance field",
                self.id()
            ))),
        }
    }

    /// Closed-form intrinsic distance between two global parameters.
    pub fn intrinsic_distance(&self, u: &[f64], v: &[f64]) -> Option<f64> {
        let chart = self.chart().ok()?;
        let (x, y) = (chart.position(u), chart.position(v));
        match *self {
            Surface::Plane { .. } => Some((x - y).norm()),
            Surface::Sphere { radius, .. } | Surface::GeodesicSphere { radius, c: 0.0, .. } => {
                Some(radius * angle_between(&x, &y))
            }
            Surface::GeodesicSphere { radius, c, m } => {
                let wx = x.rows(1, m + 1).into_owned();
                let wy = y.rows(1, m + 1).into_owned();
                Some(s_c(c, radius) * angle_between(&wx, &wy))
            }
            Surface::Cylinder { radius, k, .. } => {
                let a = angle_between(&x.rows(0, k + 1).into_owned(), &y.rows(0, k + 1).into_owned());
                let flat = (x.rows(k + 1, x.len() - k - 1) - y.rows(k + 1, y.len() - k - 1)).norm();
                Some((radius * a).hypot(flat))
            }
            _ => None,
        }
    }
}

fn angle_between(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    // atan2 form stays accurate near 0 and π.
    let cross = (a * nb - b * na).norm();
    let sum = (a * nb + b * na).norm();
    2.0 * cross.atan2(sum)
}

fn revolution_normal(map: &ChartMap, u: &[f64]) -> Vec<f64> {
    use super::jet::HyperDual;
    let ChartMap::Revolution { profile, .. } = map else {
        unreachable!("revolution chart expected")
    };
    let (x, z) = profile.eval(HyperDual::new(u[0], 1.0, 0.0));
    let omega = hyperspherical(&u[1..]);
    let mut out: Vec<f64> = omega.iter().map(|w| -z.d1 * w).collect();
    out.push(x.d1);
    out
}
