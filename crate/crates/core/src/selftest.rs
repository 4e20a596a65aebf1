//! Built-in acceptance checks behind the `selftest` subcommand.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ambient::{ds_c, s_c, solve_g, FFunction};
use crate::cli::{render_reports, run_config, ExponentArg, RegionSpec, RunConfig, Task, Tolerances, SCHEMA};
use crate::geom::{HeightFn, Surface};
use crate::ineq::{divergence_identity_check, iso_chain, poincare_spaceform, OperatorField};
use crate::measure::{intrinsic_ball, whole_surface, Quadrature, WeightData};
use crate::rigidity::{decay_scan, ChecklistParams, DecayWeight, Statement, Thresholds, Trend};
use crate::soliton::{reevaluated_residual, shoot, Exponent, ShootOptions, SolitonCheckParams, SolitonSpec};
use crate::symfun::{binom, norms_and_bounds, sym_all, trace_identities, ShapeSpectrum};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget: Option<f64>,
}

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: crate::LabError) -> String {
    e.to_string()
}

fn spectra(seed: u64, count: usize, m_lo: usize, m_hi: usize) -> Vec<ShapeSpectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let m = m_lo + i % (m_hi - m_lo + 1);
            ShapeSpectrum::new((0..m).map(|_| rng.random_range(-3.0..3.0)).collect()).expect("m >= 2")
        })
        .collect()
}

fn subset_sum(l: &[f64], k: usize) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..1 << l.len() {
        if mask.count_ones() as usize == k {
            total += (0..l.len()).filter(|i| mask >> i & 1 == 1).map(|i| l[i]).product::<f64>();
        }
    }
    total
}

fn trace_criterion() -> Outcome {
    let mut worst = 0.0f64;
    for spec in spectra(11, 1000, 2, 8) {
        for r in 0..spec.m() {
            worst = worst.max(trace_identities(&spec, r).map_err(err)?.relative());
        }
    }
    ensure(worst < 1e-10, || format!("residual {worst:.3e}"))?;
    Ok(format!("max relative residual {worst:.2e}"))
}

fn subset_criterion() -> Outcome {
    let mut worst = 0.0f64;
    for spec in spectra(12, 200, 2, 10) {
        let l = spec.lambdas();
        let table = sym_all(&spec);
        let top = l.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for k in 0..=l.len() {
            let scale = (binom(l.len(), k) * top.powi(k as i32)).max(1.0);
            worst = worst.max((table.s(k) - subset_sum(l, k)).abs() / scale);
        }
    }
    ensure(worst < 1e-10, || format!("disagreement {worst:.3e}"))?;
    Ok(format!("max relative disagreement {worst:.2e}"))
}

fn sphere_area(m: usize) -> f64 {
    // ω_m = 2π^{(m+1)/2} / Γ((m+1)/2) for m = 2, 3.
    if m == 2 {
        4.0 * PI
    } else {
        2.0 * PI * PI
    }
}

fn equality_criterion() -> Outcome {
    let quad = Quadrature::default();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for radius in [0.5, 1.0, 2.0] {
        for c in [0.0, -1.0] {
            for m in 2..=3 {
                let region = whole_surface(&Surface::GeodesicSphere { radius, c, m }).map_err(err)?;
                for r in 0..m {
                    let rep = poincare_spaceform(&region, r, &WeightData::constant(), &quad).map_err(err)?.remove(0);
                    let k = ds_c(c, radius) / s_c(c, radius);
                    let lhs = ds_c(c, radius) * binom(m, r) * k.powi(r as i32) * sphere_area(m) * s_c(c, radius).powi(m as i32);
                    worst = worst.max((rep.lhs / rep.rhs - 1.0).abs()).max((rep.lhs / lhs - 1.0).abs());
                    cases += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-3, || format!("|LHS/RHS - 1| = {worst:.3e}"))?;
    Ok(format!("{cases} cases, max deviation {worst:.2e}"))
}

fn iso_criterion() -> Outcome {
    let quad = Quadrature::default();
    let sphere = Surface::Sphere { radius: 1.0, m: 2 };
    let t = PI / 4.0;
    let cases = [
        (intrinsic_ball(&sphere, &[0.0, 0.0], PI / 2.0), 2.0 * PI, 4.0 * PI),
        (
            intrinsic_ball(&sphere, &[0.0, 0.0], t),
            2.0 * PI * (1.0 - t.cos()),
            t.sin() * 2.0 * PI * (t.sin() + 1.0 - t.cos()),
        ),
        (intrinsic_ball(&Surface::Plane { m: 2, offset: 0.0 }, &[0.0, 0.0], 1.0), PI, 2.0 * PI),
    ];
    for (region, lhs, rhs) in cases {
        let rep = iso_chain(&region.map_err(err)?, 0, &quad).map_err(err)?.remove(0);
        ensure((rep.lhs - lhs).abs() <= 1e-3 && (rep.rhs - rhs).abs() <= 1e-3, || {
            format!("got {}/{}, expected {lhs}/{rhs}", rep.lhs, rep.rhs)
        })?;
    }
    Ok("hemisphere, cap and disk match".into())
}

fn divergence_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let surfaces = [
        Surface::Sphere { radius: 1.3, m: 2 },
        Surface::Cylinder { radius: 0.8, k: 1, m: 3 },
        Surface::Graph {
            height: HeightFn::Bump { a: 0.5, sigma: 1.0 },
            m: 2,
            extent: 50.0,
        },
    ];
    let mut worst = 0.0f64;
    for s in &surfaces {
        let chart = s.chart().map_err(err)?;
        let m = s.m();
        let samples: Vec<Vec<f64>> = (0..16)
            .map(|_| {
                (0..m)
                    .map(|k| {
                        let lo = chart.domain.lo[k].max(-2.0);
                        let hi = chart.domain.hi[k].min(2.0);
                        lo + (hi - lo) * rng.random_range(0.05..0.95)
                    })
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = (0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let matrix = (0..m).map(|i| (0..m).map(|j| raw[i * m + j] + raw[j * m + i]).collect()).collect();
        worst = worst.max(divergence_identity_check(&chart, &OperatorField::Fixed { matrix }, &samples).map_err(err)?);
    }
    ensure(worst <= 1e-6, || format!("residual {worst:.3e}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn ode_criterion() -> Outcome {
    let mut worst = 0.0f64;
    let mut order = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let sup = |h: f64| -> std::result::Result<f64, String> {
            let g = solve_g(&FFunction::Constant(sign), 1.0, h).map_err(err)?;
            let n = (1.0 / h).round() as usize;
            Ok((0..=n)
                .map(|i| {
                    let t = i as f64 * h;
                    let exact = if sign > 0.0 { t.sin() } else { t.sinh() };
                    (g.g(t) - exact).abs()
                })
                .fold(0.0, f64::max))
        };
        worst = worst.max(sup(1e-3)?);
        order = order.min((sup(0.1)? / sup(0.05)?).log2());
    }
    ensure(worst <= 1e-8 && order >= 3.5, || format!("sup {worst:.3e}, order {order:.2}"))?;
    Ok(format!("sup error {worst:.2e}, order {order:.2}"))
}

fn shrinker_criterion() -> Outcome {
    let spec = SolitonSpec::new(0, Exponent::real(1.0).map_err(err)?, -0.5).map_err(err)?;
    let mut parts = Vec::new();
    for m in 2..=3 {
        let res = shoot(&spec, m, &ShootOptions::default()).map_err(err)?;
        let residual = reevaluated_residual(&res, 400).map_err(err)?;
        let target = (2.0 * m as f64).sqrt();
        ensure((res.radius - target).abs() <= 1e-4 && residual <= 1e-6, || {
            format!("m={m}: radius {} residual {residual:.3e}", res.radius)
        })?;
        parts.push(format!("m={m} radius {:.6}", res.radius));
    }
    Ok(parts.join(", "))
}

fn scan_criterion() -> Outcome {
    let quad = Quadrature::default();
    let th = Thresholds::default();
    let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
    let cases = [
        (Surface::Plane { m: 2, offset: 0.0 }, Trend::DecaysToZero),
        (Surface::Cylinder { radius: 1.0, k: 1, m: 2 }, Trend::Grows),
        (Surface::Sphere { radius: 1.0, m: 2 }, Trend::DegenerateCompact),
    ];
    for (s, want) in cases {
        let center = s.chart().map_err(err)?.domain.center();
        let scan = decay_scan(&s, &center, 1, DecayWeight::Hc, &radii, &quad, &th).map_err(err)?;
        ensure(scan.classification == want, || format!("{}: {:?}", s.id(), scan.classification))?;
        if want == Trend::DecaysToZero {
            ensure(scan.values.iter().all(|v| *v == 0.0), || "plane values not zero".into())?;
        }
    }
    Ok("plane, cylinder and sphere classified".into())
}

fn bound_criterion() -> Outcome {
    let mut violations = 0;
    for spec in spectra(19, 1000, 2, 8) {
        for r in 0..spec.m() {
            let b = norms_and_bounds(&spec, r).map_err(err)?;
            violations += usize::from(!b.s_bounds_hold) + usize::from(!b.newton_bound_holds);
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("zero violations".into())
}

fn determinism_criterion() -> Outcome {
    let config = selftest_config();
    let body = |threads: usize| -> std::result::Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        Ok(render_reports(&pool.install(|| run_config(&config)).entries))
    };
    let one = body(1)?;
    let four = body(4)?;
    ensure(one == four, || "report bodies differ between 1 and 4 threads".into())?;
    Ok(format!("{} identical bytes", one.len()))
}

/// Config exercising every task kind that needs no external files.
pub fn selftest_config() -> RunConfig {
    let sphere = Surface::Sphere { radius: 1.0, m: 2 };
    let cylinder = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
    let plane = Surface::Plane { m: 2, offset: 0.0 };
    let big_sphere = Surface::Sphere { radius: 2.0, m: 2 };
    let hyperbolic = Surface::GeodesicSphere { radius: 1.0, c: -1.0, m: 2 };
    let radii = vec![1.0, 2.0, 4.0, 8.0];
    let alpha = ExponentArg::Number(1.0);
    let tasks = vec![
        Task::PoincareSpaceform {
            r: 0,
            surface: None,
            region: None,
            weights: None,
        },
        Task::PoincareSpaceform {
            r: 1,
            surface: Some(hyperbolic.clone()),
            region: None,
            weights: None,
        },
        Task::IsoChain {
            r: 0,
            surface: None,
            region: Some(RegionSpec::Ball {
                center: vec![0.0, 0.0],
                radius: PI / 4.0,
            }),
        },
        Task::BallVolume {
            surface: Some(plane.clone()),
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        Task::PoincareEinstein {
            ambient: Some(crate::ambient::AmbientSpec::space_form(-1.0, 3)),
            data: None,
            surface: Some(hyperbolic),
            region: None,
            weights: None,
        },
        Task::DivergenceIdentity {
            surface: Some(Surface::Graph {
                height: HeightFn::Paraboloid { a: 0.5 },
                m: 2,
                extent: 50.0,
            }),
            field: OperatorField::Newton { r: 1 },
            samples: vec![vec![0.3, -0.2], vec![1.0, 0.5]],
        },
        Task::DecayScan {
            surface: Some(cylinder.clone()),
            r: 1,
            weight: DecayWeight::Hc,
            center: None,
            radii: radii.clone(),
            thresholds: Thresholds::default(),
        },
        Task::Checklist {
            surface: Some(plane.clone()),
            statement: Statement::RMinimalFoliation,
            params: ChecklistParams {
                radii: radii.clone(),
                ..ChecklistParams::default()
            },
        },
        Task::SolitonShoot {
            r: 0,
            alpha: alpha.clone(),
            delta: -0.5,
            m: 2,
            options: ShootOptions::default(),
        },
        Task::SolitonResidual {
            surface: Some(big_sphere.clone()),
            r: 0,
            alpha: alpha.clone(),
            delta: -0.5,
            c: 0.0,
            samples: vec![vec![0.5, 1.0], vec![1.2, 2.0]],
        },
        Task::SolitonCheck {
            surface: Some(plane),
            r: 1,
            alpha,
            delta: 1.0,
            params: SolitonCheckParams {
                radii,
                ..SolitonCheckParams::default()
            },
        },
    ];
    RunConfig {
        schema: SCHEMA,
        ambient: None,
        surface: Some(sphere),
        mesh: None,
        region: RegionSpec::Whole,
        weights: WeightData::constant(),
        tasks,
        tolerances: Tolerances::default(),
        output: Default::default(),
    }
}

/// Runs all checks in order.
pub fn run_selftest() -> Vec<CriterionResult> {
    type Check = (usize, &'static str, fn() -> Outcome, Option<f64>);
    let checks: [Check; 10] = [
        (1, "trace identities", trace_criterion, Some(1.0)),
        (2, "symmetric functions vs subsets", subset_criterion, Some(5.0)),
        (3, "geodesic-sphere equality", equality_criterion, Some(30.0)),
        (4, "isoperimetric chain", iso_criterion, Some(10.0)),
        (5, "flat divergence identity", divergence_criterion, Some(5.0)),
        (6, "comparison ODE", ode_criterion, Some(1.0)),
        (7, "shrinking sphere", shrinker_criterion, Some(30.0)),
        (8, "rigidity scans", scan_criterion, Some(30.0)),
        (9, "bound suite", bound_criterion, Some(1.0)),
        (10, "determinism", determinism_criterion, None),
    ];
    checks
        .into_iter()
        .map(|(id, name, check, budget)| {
            let start = Instant::now();
            let outcome = check();
            let seconds = start.elapsed().as_secs_f64();
            let late = budget.is_some_and(|b| seconds > b);
            let (passed, detail) = match outcome {
                Ok(d) if late => (false, format!("{d}; exceeded {:.0}s", budget.unwrap_or_default())),
                Ok(d) => (true, d),
                Err(e) => (false, e),
            };
            CriterionResult {
                id,
                name,
                passed,
                detail,
                seconds,
                budget,
            }
        })
        .collect()
}
