//! Parametric hypersurfaces and their fundamental forms.
//!
//! Positions live in the standard model of the ambient space form:
//! `ℝ^{m+1}` for `c = 0`, the sphere of radius `1/√c` in `ℝ^{m+2}` for
//! `c > 0` and the upper sheet of `⟨x,x⟩ = 1/c` in Minkowski space
//! `ℝ^{m+1,1}` for `c < 0`. Since the unit normal is tangent to the model,
//! `II_ij = ⟨η, ∂_i∂_j ψ⟩` is the second fundamental form for the ambient
//! connection in every case.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::jet::{HyperDual, Real};
use super::profile::SampledProfile;
use crate::error::{LabError, Result};
use crate::symfun::ShapeSpectrum;

/// Threshold on the normalized Gram determinant `det I / ∏ I_ii`.
pub const GRAM_TOL: f64 = 1e-12;

/// Height functions for graph surfaces `x_{m+1} = h(x_1..x_m)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HeightFn {
    Zero,
    /// `a |x|²`
    Paraboloid { a: f64 },
    /// `a (x_1² − x_2²)`
    Saddle { a: f64 },
    /// `a exp(−|x|²/σ²)`
    Bump { a: f64, sigma: f64 },
}

impl HeightFn {
    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        let r2 = x.iter().fold(T::cst(0.0), |acc, &v| acc + v * v);
        match *self {
            HeightFn::Zero => T::cst(0.0),
            HeightFn::Paraboloid { a } => r2.scale(a),
            HeightFn::Saddle { a } => {
                let y = if x.len() > 1 { x[1] } else { T::cst(0.0) };
                (x[0] * x[0] - y * y).scale(a)
            }
            HeightFn::Bump { a, sigma } => (-r2.scale(1.0 / (sigma * sigma))).exp().scale(a),
        }
    }
}

/// Profile curves `s ↦ (x(s), z(s))` parametrized by arc length, with
/// `x` the distance to the rotation axis.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileFn {
    /// Half circle from the south pole, giving the round sphere.
    Circle { radius: f64 },
    /// Vertical line `x = radius`, giving a cylinder.
    Line { radius: f64 },
    /// Catenary `x = √(a² + s²)`, `z = a asinh(s/a)`.
    Catenary { a: f64 },
}

impl ProfileFn {
    pub fn eval<T: Real>(&self, s: T) -> (T, T) {
        match *self {
            ProfileFn::Circle { radius } => {
                let t = s.scale(1.0 / radius);
                (t.sin().scale(radius), -t.cos().scale(radius))
            }
            ProfileFn::Line { radius } => (T::cst(radius), s),
            ProfileFn::Catenary { a } => ((s * s + T::cst(a * a)).sqrt(), s.scale(1.0 / a).asinh().scale(a)),
        }
    }

    /// Parameter range of the profile.
    pub fn range(&self, extent: f64) -> (f64, f64) {
        match *self {
            ProfileFn::Circle { radius } => (0.0, PI * radius),
            ProfileFn::Line { .. } | ProfileFn::Catenary { .. } => (-extent, extent),
        }
    }
}

/// Point of `S^n ⊂ ℝ^{n+1}` from `n` hyperspherical angles.
pub fn hyperspherical<T: Real>(angles: &[T]) -> Vec<T> {
    let n = angles.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut prod = T::cst(1.0);
    for (i, &a) in angles.iter().enumerate() {
        out.push(prod * a.cos());
        prod = prod * a.sin();
        if i == n - 1 {
            out.push(prod);
        }
    }
    out
}

/// A concrete immersion `U → model`.
#[derive(Clone, Debug)]
pub enum ChartMap {
    /// `o + Σ u_i b_i`.
    Affine { origin: Vec<f64>, basis: Vec<Vec<f64>> },
    /// `o + s Σ ω_k b_k` with `ω` on the unit sphere of the span; `u = (s, angles)`.
    AffinePolar { origin: Vec<f64>, basis: Vec<Vec<f64>> },
    /// Round sphere in geodesic polar coordinates about `frame[0]`:
    /// `center + R(cos(s/R) f_0 + sin(s/R) Σ ω_k f_{k+1})`.
    SpherePolar {
        radius: f64,
        center: Vec<f64>,
        frame: Vec<Vec<f64>>,
    },
    /// `S^k(R) × ℝ^{m−k}`: `u = (k angles, m−k flat coordinates)`.
    Cylinder { radius: f64, k: usize, m: usize },
    /// `S^1(R) × ℝ` in geodesic polar coordinates about `(θ₀, z₀)`.
    CylinderPolar { radius: f64, theta0: f64, z0: f64 },
    Graph { height: HeightFn, m: usize },
    /// `(x(s) ω, z(s))`, `u = (s, angles of S^{m−1})`.
    Revolution { profile: ProfileFn, m: usize },
    /// Geodesic sphere of radius `radius` about the model's base point, in
    /// a space form of curvature `c ≠ 0`; `u` are angles of `S^m`.
    ModelSphere { radius: f64, c: f64, m: usize },
    /// Hypersurface of revolution generated by a sampled profile.
    SampledRevolution { profile: Arc<SampledProfile>, m: usize },
}

impl ChartMap {
    pub fn eval<T: Real>(&self, u: &[T]) -> Vec<T> {
        match self {
            ChartMap::Affine { origin, basis } => {
                let mut out: Vec<T> = origin.iter().map(|&v| T::cst(v)).collect();
                for (ui, b) in u.iter().zip(basis) {
                    for (o, &bv) in out.iter_mut().zip(b) {
                        *o = *o + ui.scale(bv);
                    }
                }
                out
            }
            ChartMap::AffinePolar { origin, basis } => {
                let omega = hyperspherical(&u[1..]);
                let mut out: Vec<T> = origin.iter().map(|&v| T::cst(v)).collect();
                for (w, b) in omega.iter().zip(basis) {
                    let coef = u[0] * *w;
                    for (o, &bv) in out.iter_mut().zip(b) {
                        *o = *o + coef.scale(bv);
                    }
                }
                out
            }
            ChartMap::SpherePolar { radius, center, frame } => {
                let t = u[0].scale(1.0 / radius);
                let (cs, sn) = (t.cos().scale(*radius), t.sin().scale(*radius));
                let omega = hyperspherical(&u[1..]);
                let mut out: Vec<T> = center.iter().map(|&v| T::cst(v)).collect();
                for (o, &f0) in out.iter_mut().zip(&frame[0]) {
                    *o = *o + cs.scale(f0);
                }
                for (w, f) in omega.iter().zip(&frame[1..]) {
                    let coef = sn * *w;
                    for (o, &fv) in out.iter_mut().zip(f) {
                        *o = *o + coef.scale(fv);
                    }
                }
                out
            }
            ChartMap::Cylinder { radius, k, .. } => {
                let mut out: Vec<T> = hyperspherical(&u[..*k]).into_iter().map(|w| w.scale(*radius)).collect();
                out.extend_from_slice(&u[*k..]);
                out
            }
            ChartMap::CylinderPolar { radius, theta0, z0 } => {
                let a = u[0] * u[1].cos();
                let z = u[0] * u[1].sin() + T::cst(*z0);
                let theta = a.scale(1.0 / radius) + T::cst(*theta0);
                vec![theta.cos().scale(*radius), theta.sin().scale(*radius), z]
            }
            ChartMap::Graph { height, .. } => {
                let mut out = u.to_vec();
                out.push(height.eval(u));
                out
            }
            ChartMap::Revolution { profile, .. } => {
                let (x, z) = profile.eval(u[0]);
                let mut out: Vec<T> = hyperspherical(&u[1..]).into_iter().map(|w| x * w).collect();
                out.push(z);
                out
            }
            ChartMap::ModelSphere { radius, c, .. } => {
                let k = c.abs().sqrt();
                let (a, b) = if *c < 0.0 {
                    ((k * radius).cosh() / k, (k * radius).sinh() / k)
                } else {
                    ((k * radius).cos() / k, (k * radius).sin() / k)
                };
                let mut out = vec![T::cst(a)];
                out.extend(hyperspherical(u).into_iter().map(|w| w.scale(b)));
                out
            }
            ChartMap::SampledRevolution { profile, .. } => {
                let (x, z) = profile.eval(u[0]);
                let mut out: Vec<T> = hyperspherical(&u[1..]).into_iter().map(|w| x * w).collect();
                out.push(z);
                out
            }
        }
    }
}

/// How chart derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JetMode {
    /// Exact derivatives by hyper-dual evaluation.
    Analytic,
    /// Central differences with step `h`.
    FiniteDifference { h: f64 },
}

/// Parameter box with per-axis topology.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Axis wraps around with period `hi − lo`.
    pub periodic: Vec<bool>,
    /// The chart collapses (pole or axis) at the lower / upper end.
    pub degenerate_lo: Vec<bool>,
    pub degenerate_hi: Vec<bool>,
}

impl ParamDomain {
    pub fn open_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let m = lo.len();
        Self {
            lo,
            hi,
            periodic: vec![false; m],
            degenerate_lo: vec![false; m],
            degenerate_hi: vec![false; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn scale(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .filter(|w| w.is_finite())
            .fold(0.0, f64::max)
            .max(1e-300)
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .zip(&self.periodic)
            .all(|((&x, (&a, &b)), &p)| p || (x >= a && x <= b))
    }
}

/// Derivatives of the immersion at a parameter point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub position: DVector<f64>,
    pub first: Vec<DVector<f64>>,
    /// `second[i][j] = ∂_i ∂_j ψ`.
    pub second: Vec<Vec<DVector<f64>>>,
}

/// A chart of a hypersurface in a space form.
#[derive(Clone, Debug)]
pub struct Chart {
    pub map: ChartMap,
    pub domain: ParamDomain,
    /// Curvature of the ambient space form.
    pub ambient_c: f64,
    pub jet_mode: JetMode,
    orientation: f64,
}

/// Everything known about the hypersurface at one parameter.
#[derive(Clone, Debug)]
pub struct SurfacePoint {
    pub u: Vec<f64>,
    pub position: DVector<f64>,
    pub normal: DVector<f64>,
    pub tangents: Vec<DVector<f64>>,
    /// First fundamental form `I`.
    pub first: DMatrix<f64>,
    /// Second fundamental form `II` (symmetrized).
    pub second: DMatrix<f64>,
    /// Shape operator `A = I⁻¹ II` in coordinates.
    pub shape: DMatrix<f64>,
    pub spectrum: ShapeSpectrum,
    /// Principal directions as coordinate vectors, orthonormal for `I`,
    /// in the order of `spectrum`.
    pub frame: DMatrix<f64>,
    /// `|I A − (I A)ᵀ|_max / (1 + |II|_max)` before symmetrization.
    pub asymmetry: f64,
    /// `√det I`.
    pub area_element: f64,
}

impl SurfacePoint {
    pub fn m(&self) -> usize {
        self.u.len()
    }

    /// Components in the principal frame of the gradient of a function
    /// whose coordinate differential is `du`.
    pub fn gradient_components(&self, du: &[f64]) -> Vec<f64> {
        let d = DVector::from_column_slice(du);
        (self.frame.transpose() * d).iter().copied().collect()
    }

    /// Coordinate vector of the gradient of a function with differential `du`.
    pub fn gradient_coords(&self, du: &[f64]) -> DVector<f64> {
        let d = DVector::from_column_slice(du);
        self.first.clone().lu().solve(&d).unwrap_or_else(|| DVector::zeros(du.len()))
    }

    /// Ambient vector of a tangent vector given in coordinates.
    pub fn push_forward(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.position.len());
        for (t, c) in self.tangents.iter().zip(v.iter()) {
            out += t * *c;
        }
        out
    }
}

/// Bilinear form of the ambient model (Lorentzian in the first slot for `c < 0`).
pub fn model_dot(c: f64, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let mut s = a.dot(b);
    if c < 0.0 && !a.is_empty() {
        s -= 2.0 * a[0] * b[0];
    }
    s
}

/// Ambient geodesic distance between model points.
pub fn ambient_distance(c: f64, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    if c == 0.0 {
        (x - y).norm()
    } else {
        let k = c.abs().sqrt();
        let cos_like = c * model_dot(c, x, y);
        if c > 0.0 {
            // Chord form is better conditioned for nearby points.
            let chord = (x - y).norm() * k;
            2.0 * (0.5 * chord).clamp(-1.0, 1.0).asin() / k
        } else {
            cos_like.max(1.0).acosh() / k
        }
    }
}

impl Chart {
    /// Builds a chart and fixes its orientation so that the unit normal at
    /// `reference` has positive product with `reference_normal`.
    pub fn new(
        map: ChartMap,
        domain: ParamDomain,
        ambient_c: f64,
        reference: &[f64],
        reference_normal: &[f64],
    ) -> Result<Self> {
        let mut chart = Self {
            map,
            domain,
            ambient_c,
            jet_mode: JetMode::Analytic,
            orientation: 1.0,
        };
        let jet = chart.jet(reference);
        let w = chart.raw_normal(&jet)?;
        let s = model_dot(ambient_c, &w, &DVector::from_column_slice(reference_normal));
        if s == 0.0 || !s.is_finite() {
            return Err(LabError::Input("reference normal is tangent to the surface".into()));
        }
        chart.orientation = s.signum();
        Ok(chart)
    }

    pub fn m(&self) -> usize {
        self.domain.dim()
    }

    pub fn with_jet_mode(mut self, mode: JetMode) -> Self {
        self.jet_mode = mode;
        self
    }

    /// Finite-difference jets with the default step `1e−4 · domain scale`.
    pub fn with_finite_differences(self) -> Self {
        let h = 1e-4 * self.domain.scale().min(10.0);
        self.with_jet_mode(JetMode::FiniteDifference { h })
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Same chart with the opposite normal.
    pub fn flipped(&self) -> Self {
        let mut c = self.clone();
        c.orientation = -c.orientation;
        c
    }

    pub fn position(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.map.eval::<f64>(u))
    }

    /// First fundamental form only, from first derivatives.
    pub fn first_form(&self, u: &[f64]) -> DMatrix<f64> {
        let m = u.len();
        let tangents: Vec<DVector<f64>> = (0..m)
            .map(|i| {
                let args: Vec<HyperDual> = (0..m)
                    .map(|k| HyperDual::new(u[k], if k == i { 1.0 } else { 0.0 }, 0.0))
                    .collect();
                DVector::from_vec(self.map.eval(&args).iter().map(|v| v.d1).collect())
            })
            .collect();
        DMatrix::from_fn(m, m, |i, j| model_dot(self.ambient_c, &tangents[i], &tangents[j]))
    }

    pub fn jet(&self, u: &[f64]) -> Jet {
        match self.jet_mode {
            JetMode::Analytic => self.analytic_jet(u),
            JetMode::FiniteDifference { h } => self.fd_jet(u, h),
        }
    }

    fn analytic_jet(&self, u: &[f64]) -> Jet {
        let m = u.len();
        let position = self.position(u);
        let n = position.len();
        let mut first = vec![DVector::zeros(n); m];
        let mut second = vec![vec![DVector::zeros(n); m]; m];
        for i in 0..m {
            for j in i..m {
                let args: Vec<HyperDual> = (0..m)
                    .map(|k| {
                        HyperDual::new(u[k], if k == i { 1.0 } else { 0.0 }, if k == j { 1.0 } else { 0.0 })
                    })
                    .collect();
                let out = self.map.eval(&args);
                let d12 = DVector::from_iterator(n, out.iter().map(|v| v.d12));
                if i == j {
                    first[i] = DVector::from_iterator(n, out.iter().map(|v| v.d1));
                }
                second[i][j] = d12.clone();
                second[j][i] = d12;
            }
        }
        Jet {
            position,
            first,
            second,
        }
    }

    fn fd_jet(&self, u: &[f64], h: f64) -> Jet {
        let m = u.len();
        let at = |shifts: &[(usize, f64)]| {
            let mut v = u.to_vec();
            for &(k, d) in shifts {
                v[k] += d;
            }
            self.position(&v)
        };
        let position = self.position(u);
        let n = position.len();
        let mut first = vec![DVector::zeros(n); m];
        let mut second = vec![vec![DVector::zeros(n); m]; m];
        for i in 0..m {
            let p = at(&[(i, h)]);
            let q = at(&[(i, -h)]);
            first[i] = (&p - &q) / (2.0 * h);
            second[i][i] = (&p - &position * 2.0 + &q) / (h * h);
            for j in i + 1..m {
                let d = (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                    + at(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h);
                second[i][j] = d.clone();
                second[j][i] = d;
            }
        }
        Jet {
            position,
            first,
            second,
        }
    }

    /// Vector orthogonal (for the model form) to the tangents, and to the
    /// position when the ambient is curved. Not normalized or oriented.
    fn raw_normal(&self, jet: &Jet) -> Result<DVector<f64>> {
        let c = self.ambient_c;
        let n = jet.position.len();
        let mut rows: Vec<DVector<f64>> = jet.first.clone();
        if c != 0.0 {
            rows.push(jet.position.clone());
        }
        if rows.len() + 1 != n {
            return Err(LabError::Input(format!(
                "chart of dimension {} does not fit an ambient model of length {n}",
                jet.first.len()
            )));
        }
        // Lower the index so the Euclidean cofactor vector is g-orthogonal.
        let lowered = DMatrix::from_fn(n - 1, n, |r, col| {
            let v = rows[r][col];
            if c < 0.0 && col == 0 {
                -v
            } else {
                v
            }
        });
        let mut w = DVector::zeros(n);
        for j in 0..n {
            let minor = lowered.clone().remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            w[j] = sign * minor.determinant();
        }
        // Undo the lowering in the result (w was built as a covector).
        if c < 0.0 {
            w[0] = -w[0];
        }
        Ok(w)
    }

    pub fn shape_at(&self, u: &[f64]) -> Result<SurfacePoint> {
        let jet = self.jet(u);
        self.shape_from_jet(u, jet)
    }

    pub fn shape_from_jet(&self, u: &[f64], jet: Jet) -> Result<SurfacePoint> {
        let m = u.len();
        let c = self.ambient_c;
        let first = DMatrix::from_fn(m, m, |i, j| model_dot(c, &jet.first[i], &jet.first[j]));
        let diag_prod: f64 = (0..m).map(|i| first[(i, i)]).product();
        let det = first.determinant();
        let normalized = if diag_prod > 0.0 { det / diag_prod } else { 0.0 };
        if !(normalized > GRAM_TOL) {
            return Err(LabError::DegenerateImmersion {
                at: u.to_vec(),
                gram_det: normalized,
            });
        }

        let w = self.raw_normal(&jet)?;
        let w2 = model_dot(c, &w, &w);
        if !(w2 > 0.0) {
            return Err(LabError::DegenerateImmersion {
                at: u.to_vec(),
                gram_det: normalized,
            });
        }
        let normal = w * (self.orientation / w2.sqrt());

        let raw_second = DMatrix::from_fn(m, m, |i, j| model_dot(c, &normal, &jet.second[i][j]));
        assemble_point(u, jet.position, normal, jet.first, first, raw_second)
    }
}

/// Completes a [`SurfacePoint`] from the fundamental forms. `raw_second`
/// may be slightly asymmetric; the asymmetry is recorded.
pub fn assemble_point(
    u: &[f64],
    position: DVector<f64>,
    normal: DVector<f64>,
    tangents: Vec<DVector<f64>>,
    first: DMatrix<f64>,
    raw_second: DMatrix<f64>,
) -> Result<SurfacePoint> {
    let m = first.nrows();
    let det = first.determinant();
    let degenerate = || LabError::DegenerateImmersion {
        at: u.to_vec(),
        gram_det: det,
    };
    let second = (&raw_second + raw_second.transpose()) * 0.5;
    let first_inv = first.clone().try_inverse().ok_or_else(degenerate)?;
    let raw_shape = &first_inv * &raw_second;
    let ia = &first * &raw_shape;
    let asymmetry = (&ia - ia.transpose()).amax() / (1.0 + raw_second.amax());
    let shape = &first_inv * &second;

    // Generalized symmetric eigenproblem II v = λ I v via Cholesky of I.
    let chol = first.clone().cholesky().ok_or_else(degenerate)?;
    let l_inv = chol.l().try_inverse().ok_or_else(degenerate)?;
    let reduced = &l_inv * &second * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambdas: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let y = DMatrix::from_fn(m, m, |r, col| eig.eigenvectors[(r, order[col])]);
    let frame = l_inv.transpose() * y;

    Ok(SurfacePoint {
        u: u.to_vec(),
        position,
        normal,
        tangents,
        area_element: det.max(0.0).sqrt(),
        first,
        second,
        shape,
        spectrum: ShapeSpectrum::new(lambdas)?,
        frame,
        asymmetry,
    })
}

/// Orthonormal frame of `ℝ^n` whose first vector is `dir / |dir|`.
pub fn frame_with_first(dir: &[f64]) -> Vec<Vec<f64>> {
    let n = dir.len();
    let first = DVector::from_column_slice(dir).normalize();
    let mut basis = vec![first];
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        for b in &basis {
            e -= b * b.dot(&e);
        }
        let norm = e.norm();
        if norm > 1e-8 {
            basis.push(e / norm);
        }
    }
    basis.into_iter().map(|v| v.iter().copied().collect()).collect()
}
