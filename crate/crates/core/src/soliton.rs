//! Homothetic solitons `S_{r+1}^α = δ⟨ψ, η⟩` of the power curvature flows.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geom::catalog::polar_domain;
use crate::geom::chart::{hyperspherical, model_dot};
use crate::geom::profile::derivative_4th;
use crate::geom::{Chart, ChartMap, SampledProfile, Surface};
use crate::measure::{whole_surface, Part, Quadrature};
use crate::ode::rk4_step;
use crate::rigidity::{decay_scan, default_radii, DecayWeight, Hypothesis, Thresholds, Trend, NOT_MET};
use crate::symfun::{binom, is_zero, sym_all, ShapeSpectrum, ZERO_TOL};

/// Exponent `α ≠ 0`, optionally tagged as `p/q` with `p`, `q` odd.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Exponent {
    pub value: f64,
    #[serde(default)]
    pub odd_rational: Option<(i64, i64)>,
}

impl Exponent {
    pub fn real(value: f64) -> Result<Self> {
        if value == 0.0 || !value.is_finite() {
            return Err(LabError::Argument(format!("exponent must be finite and nonzero, got {value}")));
        }
        Ok(Self {
            value,
            odd_rational: None,
        })
    }

    pub fn odd_rational(p: i64, q: i64) -> Result<Self> {
        if p % 2 == 0 || q % 2 == 0 {
            return Err(LabError::Argument(format!("{p}/{q} is not a ratio of odd integers")));
        }
        Ok(Self {
            value: p as f64 / q as f64,
            odd_rational: Some((p, q)),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self.odd_rational {
            Some((p, q)) => {
                let e = Self::odd_rational(p, q)?;
                if (e.value - self.value).abs() > 1e-15 * self.value.abs() {
                    return Err(LabError::Argument("exponent value disagrees with its odd-rational tag".into()));
                }
                Ok(())
            }
            None => Self::real(self.value).map(|_| ()),
        }
    }

    /// `1/α`, keeping the tag.
    pub fn inverse(&self) -> Self {
        Self {
            value: 1.0 / self.value,
            odd_rational: self.odd_rational.map(|(p, q)| (q, p)),
        }
    }

    fn integer(&self) -> Option<i32> {
        (self.value.fract() == 0.0 && self.value.abs() < 1e6).then_some(self.value as i32)
    }
}

/// `S^α`: signed for odd-rational exponents, an ordinary power otherwise.
pub fn signed_power(s: f64, alpha: &Exponent) -> Result<f64> {
    if s == 0.0 && alpha.value < 0.0 {
        return Err(LabError::Singularity(format!("0 raised to negative power {}", alpha.value)));
    }
    if alpha.odd_rational.is_some() {
        return Ok(s.signum() * s.abs().powf(alpha.value));
    }
    if let Some(k) = alpha.integer() {
        return Ok(s.powi(k));
    }
    if s <= 0.0 {
        return Err(LabError::Domain(format!(
            "{s} raised to non-integer power {} without an odd-rational tag",
            alpha.value
        )));
    }
    Ok(s.powf(alpha.value))
}

/// Solves `S^α = y` for `S`, taking the positive branch for even powers.
pub fn solve_power(y: f64, alpha: &Exponent) -> Result<f64> {
    let inv = alpha.inverse();
    if alpha.odd_rational.is_some() || alpha.integer().is_some_and(|k| k % 2 != 0) {
        if y == 0.0 && inv.value < 0.0 {
            return Err(LabError::Singularity("inverting a negative power at 0".into()));
        }
        return Ok(y.signum() * y.abs().powf(inv.value));
    }
    if y < 0.0 || (y == 0.0 && inv.value < 0.0) {
        return Err(LabError::Domain(format!("no real root S with S^{} = {y}", alpha.value)));
    }
    Ok(y.powf(inv.value))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SolitonSpec {
    pub r: usize,
    pub alpha: Exponent,
    /// Expander when positive, shrinker when negative.
    pub delta: f64,
    /// Ambient curvature; the support term is `⟨G(ρ)∇̄ρ, η⟩` when nonzero.
    #[serde(default)]
    pub c: f64,
}

impl SolitonSpec {
    pub fn new(r: usize, alpha: Exponent, delta: f64) -> Result<Self> {
        let spec = Self { r, alpha, delta, c: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        if self.delta == 0.0 || !self.delta.is_finite() {
            return Err(LabError::Argument("delta must be finite and nonzero".into()));
        }
        Ok(())
    }
}

/// `⟨G(ρ)∇̄ρ, η⟩` about the model origin. In flat space this is `⟨ψ, η⟩`.
pub fn support(c: f64, position: &DVector<f64>, normal: &DVector<f64>) -> f64 {
    if c == 0.0 {
        return position.dot(normal);
    }
    // G(ρ)∇̄ρ = c⟨o,x⟩x − o, and ⟨x, η⟩ = 0.
    let mut o = DVector::zeros(position.len());
    o[0] = 1.0 / c.abs().sqrt();
    -model_dot(c, &o, normal)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSample {
    pub u: Vec<f64>,
    pub s_next: f64,
    pub support: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualField {
    pub samples: Vec<ResidualSample>,
    pub sup: f64,
}

/// `S_{r+1}^α − δ⟨ψ, η⟩` at each parameter sample.
pub fn soliton_residual(chart: &Chart, spec: &SolitonSpec, samples: &[Vec<f64>]) -> Result<ResidualField> {
    spec.validate()?;
    if chart.ambient_c != spec.c {
        return Err(LabError::UnsupportedAmbient(format!(
            "chart lives in c = {}, soliton spec in c = {}",
            chart.ambient_c, spec.c
        )));
    }
    let out: Vec<ResidualSample> = samples
        .par_iter()
        .map(|u| {
            let p = chart.shape_at(u)?;
            if spec.r + 1 > p.m() {
                return Err(LabError::Argument(format!("order r = {} exceeds m - 1", spec.r)));
            }
            let s_next = sym_all(&p.spectrum).s(spec.r + 1);
            let lhs = signed_power(s_next, &spec.alpha).map_err(|e| at_location(e, u))?;
            let sup = support(spec.c, &p.position, &p.normal);
            Ok(ResidualSample {
                u: u.clone(),
                s_next,
                support: sup,
                residual: lhs - spec.delta * sup,
            })
        })
        .collect::<Result<_>>()?;
    let sup = out.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
    Ok(ResidualField { samples: out, sup })
}

fn at_location(e: LabError, u: &[f64]) -> LabError {
    match e {
        LabError::Domain(m) => LabError::Domain(format!("{m} at {u:?}")),
        LabError::Singularity(m) => LabError::Singularity(format!("{m} at {u:?}")),
        other => other,
    }
}

/// Residuals for both orientations of the normal.
pub fn soliton_residual_both(
    chart: &Chart,
    spec: &SolitonSpec,
    samples: &[Vec<f64>],
) -> (Result<ResidualField>, Result<ResidualField>) {
    (
        soliton_residual(chart, spec, samples),
        soliton_residual(&chart.flipped(), spec, samples),
    )
}

/// Point of a profile curve with `(x′, z′) = (cos θ, sin θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileState {
    pub s: f64,
    pub x: f64,
    pub z: f64,
    pub theta: f64,
}

/// `(κ_profile, κ_rot)` given `θ′`; `κ_rot` has multiplicity `m − 1`.
pub fn revolution_curvatures(state: &ProfileState, dtheta: f64) -> Result<(f64, f64)> {
    if !(state.x > 0.0) {
        return Err(LabError::Domain(format!("profile reaches the axis at s = {}", state.s)));
    }
    Ok((dtheta, state.theta.sin() / state.x))
}

/// `S_k` of a hypersurface of revolution from its two distinct curvatures.
pub fn revolution_s(m: usize, k: usize, kp: f64, kr: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    binom(m - 1, k) * kr.powi(k as i32) + binom(m - 1, k - 1) * kp * kr.powi(k as i32 - 1)
}

/// Start of a shooting trajectory: on the axis at height `z`, heading
/// outward horizontally.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Start {
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// Returned symmetrically to the axis.
    Closed,
    /// Reached `s_max` without an event.
    Complete,
    /// Left the admissible region (hit the axis early or blew up).
    Escaped,
}

const AXIS_EPS: f64 = 1e-6;
pub const SHOOT_STEP: f64 = 1e-3;
const BISECT_ITERS: usize = 60;
const EVENT_TOL: f64 = 1e-6;

struct Flow<'a> {
    spec: &'a SolitonSpec,
    m: usize,
}

impl Flow<'_> {
    /// `θ′` from the soliton equation.
    fn dtheta(&self, x: f64, z: f64, theta: f64) -> Result<f64> {
        let (m, r) = (self.m, self.spec.r);
        let support = -x * theta.sin() + z * theta.cos();
        let target = solve_power(self.spec.delta * support, &self.spec.alpha)?;
        if x < AXIS_EPS {
            // Umbilic limit: S_{r+1} = C(m, r+1) κ^{r+1}.
            let y = target / binom(m, r + 1);
            let kappa = if r % 2 == 0 {
                y.signum() * y.abs().powf(1.0 / (r as f64 + 1.0))
            } else if y >= 0.0 {
                y.powf(1.0 / (r as f64 + 1.0))
            } else {
                return Err(LabError::Domain(format!("no umbilic axis curvature for S = {target}")));
            };
            return Ok(kappa);
        }
        let kr = theta.sin() / x;
        let denom = binom(m - 1, r) * kr.powi(r as i32);
        if r > 0 && denom.abs() < 1e-14 {
            return Err(LabError::Singularity(format!(
                "vanishing rotational curvature at x = {x}, z = {z}"
            )));
        }
        Ok((target - binom(m - 1, r + 1) * kr.powi(r as i32 + 1)) / denom)
    }

    fn step(&self, s: f64, y: &[f64; 3], h: f64) -> Result<[f64; 3]> {
        let err: RefCell<Option<LabError>> = RefCell::new(None);
        let f = |_t: f64, y: &[f64; 3]| -> [f64; 3] {
            match self.dtheta(y[0].max(0.0), y[1], y[2]) {
                Ok(d) => [y[2].cos(), y[2].sin(), d],
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    [f64::NAN; 3]
                }
            }
        };
        let out = rk4_step(&f, s, y, h);
        match err.into_inner() {
            Some(e) => Err(e),
            None if out.iter().any(|v| !v.is_finite()) => Err(LabError::Integration("non-finite profile state".into())),
            None => Ok(out),
        }
    }
}

struct Trajectory {
    states: Vec<ProfileState>,
    /// Event value; zero at a symmetric closed solution.
    event: Option<f64>,
    closure: Closure,
}

fn initial(start: Start) -> [f64; 3] {
    [0.0, start.z, 0.0]
}

/// Integrates until the first crossing of `z = 0`; the event is `θ − π/2`,
/// which vanishes on profiles symmetric about that plane.
fn integrate(flow: &Flow, start: Start, h: f64, s_max: f64) -> Trajectory {
    let mut y = initial(start);
    let mut s = 0.0;
    let mut states = vec![ProfileState {
        s,
        x: y[0],
        z: y[1],
        theta: y[2],
    }];
    let escaped = |states: Vec<ProfileState>| Trajectory {
        states,
        event: None,
        closure: Closure::Escaped,
    };
    while s < s_max {
        let Ok(next) = flow.step(s, &y, h) else {
            return escaped(states);
        };
        if next[0] < 0.0 {
            return escaped(states);
        }
        let (e0, e1) = (y[1], next[1]);
        if e0 < 0.0 && e1 >= 0.0 {
            // Newton on the partial step length, with z′ = sin θ.
            let mut dh = h * e0 / (e0 - e1);
            let mut end = next;
            for _ in 0..4 {
                let Ok(trial) = flow.step(s, &y, dh) else { break };
                let deriv = trial[2].sin();
                end = trial;
                if !(deriv.abs() > 1e-12) {
                    break;
                }
                dh -= trial[1] / deriv;
            }
            if let Ok(trial) = flow.step(s, &y, dh) {
                end = trial;
            }
            states.push(ProfileState {
                s: s + dh,
                x: end[0],
                z: end[1],
                theta: end[2],
            });
            let event = end[2] - FRAC_PI_2;
            return Trajectory {
                states,
                event: Some(event),
                closure: Closure::Closed,
            };
        }
        y = next;
        s += h;
        states.push(ProfileState {
            s,
            x: y[0],
            z: y[1],
            theta: y[2],
        });
    }
    Trajectory {
        states,
        event: None,
        closure: Closure::Complete,
    }
}

/// Search interval and budget for [`shoot`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ShootOptions {
    /// Range of the start depth `a` in `z = −a`.
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_points: usize,
    pub s_max: f64,
    pub step: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            scan_lo: 0.25,
            scan_hi: 6.0,
            scan_points: 48,
            s_max: 40.0,
            step: SHOOT_STEP,
        }
    }
}

impl ShootOptions {
    fn start(&self, depth: f64) -> Start {
        Start { z: -depth }
    }
}

/// Tabulated profile row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub s: f64,
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    pub k_profile: f64,
    pub k_rot: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShootResult {
    pub m: usize,
    pub spec: SolitonSpec,
    pub start: Start,
    pub closure: Closure,
    pub event: f64,
    pub iterations: usize,
    /// Mean `|ψ|` along the closed profile.
    pub radius: f64,
    /// `|radius(h) − radius(h/2)|`.
    pub richardson: f64,
    /// Largest `|x′² + z′² − 1|` from differenced samples, per unit length.
    pub drift: f64,
    /// Closed profile from axis to axis, on a uniform grid.
    pub profile: Vec<ProfileRow>,
}

/// Closed symmetric profile: integrate to the event with a step dividing
/// its arc length exactly, then mirror through `z = 0`.
fn closed_profile(flow: &Flow, start: Start, h: f64, s_max: f64) -> Result<Vec<ProfileState>> {
    let coarse = integrate(flow, start, h, s_max);
    let end = coarse
        .states
        .last()
        .filter(|_| coarse.closure == Closure::Closed)
        .ok_or_else(|| LabError::Integration("trajectory did not close".into()))?;
    let n = (end.s / h).ceil().max(1.0) as usize;
    let hh = end.s / n as f64;
    let mut y = initial(start);
    let mut half = vec![ProfileState {
        s: 0.0,
        x: y[0],
        z: y[1],
        theta: y[2],
    }];
    for i in 0..n {
        y = flow.step(i as f64 * hh, &y, hh)?;
        half.push(ProfileState {
            s: (i + 1) as f64 * hh,
            x: y[0],
            z: y[1],
            theta: y[2],
        });
    }
    let total = 2.0 * end.s;
    let mut full = half.clone();
    for p in half[..n].iter().rev() {
        full.push(ProfileState {
            s: total - p.s,
            x: p.x,
            z: -p.z,
            theta: PI - p.theta,
        });
    }
    Ok(full)
}

fn mean_radius(states: &[ProfileState]) -> f64 {
    let n = states.len() as f64;
    states.iter().map(|p| p.x.hypot(p.z)).sum::<f64>() / n
}

fn unit_speed_drift(states: &[ProfileState], h: f64) -> f64 {
    let xs: Vec<f64> = states.iter().map(|p| p.x).collect();
    let zs: Vec<f64> = states.iter().map(|p| p.z).collect();
    let dx = derivative_4th(&xs, h);
    let dz = derivative_4th(&zs, h);
    let total = states.last().map_or(0.0, |p| p.s).max(1.0);
    dx.iter()
        .zip(&dz)
        .map(|(a, b)| (a * a + b * b - 1.0).abs())
        .fold(0.0, f64::max)
        / total
}

/// Scans the start parameter, then bisects on the closure event.
pub fn shoot(spec: &SolitonSpec, m: usize, opts: &ShootOptions) -> Result<ShootResult> {
    spec.validate()?;
    if m < 2 || spec.r + 1 > m {
        return Err(LabError::Argument(format!("need m >= 2 and r + 1 <= m, got m = {m}, r = {}", spec.r)));
    }
    if spec.c != 0.0 {
        return Err(LabError::UnsupportedAmbient("shooting is implemented in flat space only".into()));
    }
    if !(opts.scan_lo > 0.0 && opts.scan_lo < opts.scan_hi) || opts.scan_points < 2 || !(opts.step > 0.0) {
        return Err(LabError::Argument("invalid shooting scan".into()));
    }
    let flow = Flow { spec, m };
    let grid: Vec<f64> = (0..opts.scan_points)
        .map(|i| opts.scan_lo + (opts.scan_hi - opts.scan_lo) * i as f64 / (opts.scan_points - 1) as f64)
        .collect();
    let events: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&p| integrate(&flow, opts.start(p), opts.step, opts.s_max).event)
        .collect();
    let bracket = grid
        .windows(2)
        .zip(events.windows(2))
        .find_map(|(g, e)| match (e[0], e[1]) {
            (Some(a), Some(b)) if a == 0.0 || a.signum() != b.signum() => Some((g[0], g[1], a)),
            _ => None,
        })
        .ok_or_else(|| LabError::Integration("no sign change of the closure event in the scan".into()))?;

    let (mut lo, mut hi, mut f_lo) = bracket;
    let mut best = (lo, f_lo);
    let mut iterations = 0;
    while iterations < BISECT_ITERS && best.1.abs() > EVENT_TOL * 1e-3 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let Some(f_mid) = integrate(&flow, opts.start(mid), opts.step, opts.s_max).event else {
            return Err(LabError::Integration(format!("closure event lost at start parameter {mid}")));
        };
        if f_mid.abs() < best.1.abs() {
            best = (mid, f_mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs() {
            break;
        }
    }
    if best.1.abs() > EVENT_TOL {
        return Err(LabError::Integration(format!("closure event {:.3e} above tolerance", best.1)));
    }
    let start = opts.start(best.0);
    let states = closed_profile(&flow, start, opts.step, opts.s_max)?;
    let fine = closed_profile(&flow, start, opts.step / 2.0, opts.s_max)?;
    let h = states[1].s - states[0].s;
    let radius = mean_radius(&states);
    let profile = states
        .iter()
        .map(|p| {
            let x = p.x.max(0.0);
            let k_profile = flow.dtheta(x, p.z, p.theta).unwrap_or(f64::NAN);
            let k_rot = if x < AXIS_EPS { k_profile } else { p.theta.sin() / x };
            let s_next = revolution_s(m, spec.r + 1, k_profile, k_rot);
            let supp = -x * p.theta.sin() + p.z * p.theta.cos();
            let residual = signed_power(s_next, &spec.alpha).map_or(f64::NAN, |v| v - spec.delta * supp);
            ProfileRow {
                s: p.s,
                x: p.x,
                z: p.z,
                theta: p.theta,
                k_profile,
                k_rot,
                residual,
            }
        })
        .collect();
    Ok(ShootResult {
        m,
        spec: spec.clone(),
        start,
        closure: Closure::Closed,
        event: best.1,
        iterations,
        radius,
        richardson: (radius - mean_radius(&fine)).abs(),
        drift: unit_speed_drift(&states, h),
        profile,
    })
}

/// Hypersurface of revolution generated by a tabulated profile.
pub fn profile_chart(rows: &[ProfileRow], m: usize) -> Result<Chart> {
    if rows.len() < 5 {
        return Err(LabError::Input("profile needs at least five samples".into()));
    }
    let h = rows[1].s - rows[0].s;
    let x: Vec<f64> = rows.iter().map(|p| p.x).collect();
    let z: Vec<f64> = rows.iter().map(|p| p.z).collect();
    let theta: Vec<f64> = rows.iter().map(|p| p.theta).collect();
    let profile = SampledProfile::from_samples(rows[0].s, h, &x, &z, &theta)?;
    let (s_lo, s_hi) = profile.range();
    let mut domain = polar_domain(s_lo, s_hi, m - 1, rows[0].x < AXIS_EPS);
    domain.degenerate_hi[0] = rows[rows.len() - 1].x < AXIS_EPS;
    let u0 = domain.center();
    let mid = &rows[rows.len() / 2];
    let omega = hyperspherical(&u0[1..]);
    let mut reference: Vec<f64> = omega.iter().map(|w| -mid.theta.sin() * w).collect();
    reference.push(mid.theta.cos());
    let map = ChartMap::SampledRevolution {
        profile: Arc::new(profile),
        m,
    };
    Chart::new(map, domain, 0.0, &u0, &reference)
}

/// Sup-norm residual of a shooting result re-evaluated on its surface of
/// revolution, at `n` arc-length samples away from the axis.
pub fn reevaluated_residual(result: &ShootResult, n: usize) -> Result<f64> {
    let chart = profile_chart(&result.profile, result.m)?;
    let (lo, hi) = (chart.domain.lo[0], chart.domain.hi[0]);
    let margin = 0.02 * (hi - lo);
    let center = chart.domain.center();
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut u = center.clone();
            // Midpoints between nodes exercise the interpolant.
            u[0] = lo + margin + (hi - lo - 2.0 * margin) * (i as f64 + 0.5) / n as f64;
            u
        })
        .collect();
    Ok(soliton_residual(&chart, &result.spec, &samples)?.sup)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SolitonCheckParams {
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl Default for SolitonCheckParams {
    fn default() -> Self {
        Self {
            center: None,
            radii: default_radii(),
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolitonCheck {
    pub hypotheses: Vec<Hypothesis>,
    pub all_passed: bool,
    pub label: String,
    /// Residual sup-norm when it could be evaluated.
    pub residual_sup: Option<f64>,
    pub is_solution: bool,
    /// Testable trace of the conclusion when hypotheses pass.
    pub consistency: Option<bool>,
    /// First sample where `S_{r+1} > 0` fails (negative exponents).
    pub violating_sample: Option<Vec<f64>>,
    pub decay: Option<Trend>,
}

fn hyp(name: &str, passed: bool, value: f64) -> Hypothesis {
    Hypothesis {
        name: name.to_string(),
        passed,
        value,
    }
}

/// Hypotheses and testable conclusion of the hyperplane/nonexistence statement.
pub fn hyperplane_check(
    surface: &Surface,
    spec: &SolitonSpec,
    params: &SolitonCheckParams,
    quad: &Quadrature,
) -> Result<SolitonCheck> {
    spec.validate()?;
    if surface.ambient_c() != 0.0 || spec.c != 0.0 {
        return Err(LabError::UnsupportedAmbient("the check is stated in Euclidean space".into()));
    }
    let m = surface.m();
    let r = spec.r;
    let chart = surface.chart()?;
    let region = whole_surface(surface)?;
    let samples: Vec<Vec<f64>> = region.samples(2, Part::Interior, &[])?.into_iter().map(|s| s.point.u).collect();
    let points = samples.iter().map(|u| chart.shape_at(u)).collect::<Result<Vec<_>>>()?;
    let spectra: Vec<&ShapeSpectrum> = points.iter().map(|p| &p.spectrum).collect();
    let norm = |s: &ShapeSpectrum| s.lambdas().iter().map(|l| l * l).sum::<f64>().sqrt();
    let s_of = |s: &ShapeSpectrum, k: usize| if k > m { 0.0 } else { sym_all(s).s(k) };

    let mut hyps = vec![hyp("order-in-range", r >= 1 && r < m, r as f64)];
    let min_next = spectra.iter().map(|s| s_of(s, r + 1)).fold(f64::INFINITY, f64::min);
    let alpha_ok = spec.alpha.odd_rational.is_some()
        || spectra.iter().all(|s| s_of(s, r + 1) >= -ZERO_TOL * (1.0 + norm(s).powi(r as i32 + 1)));
    hyps.push(hyp("exponent-condition", alpha_ok, min_next));
    let min_dsr = spectra.iter().map(|s| spec.delta * s_of(s, r)).fold(f64::INFINITY, f64::min);
    let dsr_ok = spectra
        .iter()
        .all(|s| spec.delta * s_of(s, r) >= -ZERO_TOL * (1.0 + norm(s).powi(r as i32)));
    hyps.push(hyp("delta-sr-nonneg", dsr_ok, min_dsr));
    let center = params.center.clone().unwrap_or_else(|| chart.domain.center());
    let scan = decay_scan(surface, &center, r, DecayWeight::APower, &params.radii, quad, &params.thresholds)?;
    hyps.push(hyp("decay", scan.classification == Trend::DecaysToZero, scan.slope));

    let residual = if r < m {
        soliton_residual(&chart, spec, &samples).ok().map(|f| f.sup)
    } else {
        None
    };
    let is_solution = residual.is_some_and(|v| v <= 1e-6);
    let all_passed = hyps.iter().all(|h| h.passed);

    let mut violating_sample = None;
    let (label, consistency) = if !all_passed {
        (NOT_MET.to_string(), None)
    } else if spec.alpha.value > 0.0 {
        let triple = points.iter().all(|p| {
            let a = norm(&p.spectrum);
            let supp = support(0.0, &p.position, &p.normal);
            is_zero(s_of(&p.spectrum, r), a, r)
                && is_zero(s_of(&p.spectrum, r + 1), a, r + 1)
                && supp.abs() <= ZERO_TOL * (1.0 + p.position.norm())
        });
        ("hyperplane".to_string(), Some(triple))
    } else {
        violating_sample = points
            .iter()
            .find(|p| s_of(&p.spectrum, r + 1) <= 0.0)
            .map(|p| p.u.clone());
        ("no such hypersurface".to_string(), Some(violating_sample.is_some()))
    };
    Ok(SolitonCheck {
        hypotheses: hyps,
        all_passed,
        label,
        residual_sup: residual,
        is_solution,
        consistency,
        violating_sample,
        decay: Some(scan.classification),
    })
}
