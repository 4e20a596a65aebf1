//! Acceptance suite, run without the test harness so the per-criterion
//! lines always reach the output. Criteria run sequentially so their
//! wall-clock times are meaningful; the process exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hyperlab::ambient::{ds_c, s_c, solve_g, FFunction};
use hyperlab::cli::{render_reports, run_config};
use hyperlab::selftest::selftest_config;
use hyperlab::geom::{HeightFn, Surface};
use hyperlab::ineq::{divergence_identity_check, iso_chain, poincare_spaceform, OperatorField};
use hyperlab::measure::{intrinsic_ball, whole_surface, Quadrature, WeightData};
use hyperlab::rigidity::{decay_scan, DecayWeight, Thresholds, Trend};
use hyperlab::soliton::{reevaluated_residual, shoot, Exponent, ShootOptions, SolitonSpec};
use hyperlab::symfun::{binom, norms_and_bounds, sym_all, trace_identities, ShapeSpectrum};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_spectrum(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-3.0..3.0)).collect()
}

/// `e_k` by summing products over all `k`-subsets.
fn subset_sum(l: &[f64], k: usize) -> f64 {
    (0u32..1 << l.len())
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..l.len()).filter(|i| mask & (1 << i) != 0).map(|i| l[i]).product::<f64>())
        .sum()
}

/// `P_r` by the operator recursion on a rotated symmetric matrix.
fn newton_by_recursion(a: &DMatrix<f64>, s: &[f64], r: usize) -> DMatrix<f64> {
    let m = a.nrows();
    let mut p = DMatrix::identity(m, m);
    for k in 1..=r {
        p = DMatrix::identity(m, m) * s[k] - a * &p;
    }
    p
}

fn rotated(l: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = l.len();
    let raw = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let q = raw.qr().q();
    &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(l)) * q.transpose()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for i in 0..1000 {
        let m = 2 + i % 7;
        let l = random_spectrum(&mut rng, m);
        let spec = ShapeSpectrum::new(l.clone()).unwrap();
        let s: Vec<f64> = (0..=m).map(|k| subset_sum(&l, k)).collect();
        let sk = |k: usize| if k <= m { s[k] } else { 0.0 };
        let a = rotated(&l, &mut rng);
        for r in 0..m {
            worst = worst.max(trace_identities(&spec, r).unwrap().relative());
            let p = newton_by_recursion(&a, &s, r);
            let scale = 1.0 + l.iter().fold(0.0f64, |x, v| x.max(v.abs())).powi(r as i32 + 2) * binom(m, r + 2).max(binom(m, r));
            let res = [
                (p.trace() - (m - r) as f64 * sk(r)).abs(),
                ((&a * &p).trace() - (r + 1) as f64 * sk(r + 1)).abs(),
                ((&a * &a * &p).trace() - (sk(1) * sk(r + 1) - (r + 2) as f64 * sk(r + 2))).abs(),
            ];
            worst_oracle = worst_oracle.max(res.iter().fold(0.0f64, |x, v| x.max(*v)) / scale);
        }
    }
    check(worst < 1e-10, || format!("library residual {worst:.3e}"))?;
    check(worst_oracle < 1e-10, || format!("matrix oracle residual {worst_oracle:.3e}"))?;
    Ok(format!("max relative residual {worst:.2e}, matrix oracle {worst_oracle:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let m = 2 + i % 9;
        let l = random_spectrum(&mut rng, m);
        let table = sym_all(&ShapeSpectrum::new(l.clone()).unwrap());
        for k in 0..=m {
            let want = subset_sum(&l, k);
            // Relative to the size of the largest term in the sum.
            let scale = binom(m, k) * l.iter().map(|x| x.abs()).fold(0.0, f64::max).powi(k as i32);
            worst = worst.max((table.s(k) - want).abs() / scale.max(1.0));
        }
    }
    check(worst < 1e-10, || format!("relative disagreement {worst:.3e}"))?;
    Ok(format!("max relative disagreement {worst:.2e}"))
}

fn unit_sphere_area(m: usize) -> f64 {
    match m {
        2 => 4.0 * PI,
        3 => 2.0 * PI * PI,
        _ => unreachable!(),
    }
}

fn criterion_3() -> Outcome {
    let quad = Quadrature::default();
    let mut worst = 0.0f64;
    let mut worst_lhs = 0.0f64;
    let mut cases = 0;
    for &radius in &[0.5, 1.0, 2.0] {
        for &c in &[0.0, -1.0] {
            for m in 2..=3 {
                let region = whole_surface(&Surface::GeodesicSphere { radius, c, m }).unwrap();
                for r in 0..m {
                    let reps = poincare_spaceform(&region, r, &WeightData::constant(), &quad).map_err(|e| e.to_string())?;
                    let rep = &reps[0];
                    worst = worst.max((rep.lhs / rep.rhs - 1.0).abs());
                    // Closed form: umbilic with κ = S_c'/S_c on a sphere of area ω_m S_c(R)^m.
                    let b = s_c(c, radius);
                    let kappa = ds_c(c, radius) / b;
                    let lhs = ds_c(c, radius) * binom(m, r) * kappa.powi(r as i32) * unit_sphere_area(m) * b.powi(m as i32);
                    worst_lhs = worst_lhs.max((rep.lhs / lhs - 1.0).abs());
                    check(rep.equality, || format!("equality flag unset for R={radius} c={c} m={m} r={r}"))?;
                    cases += 1;
                }
            }
        }
    }
    check(worst <= 1e-3, || format!("|LHS/RHS - 1| = {worst:.3e}"))?;
    check(worst_lhs <= 1e-6, || format!("LHS off closed form by {worst_lhs:.3e}"))?;
    Ok(format!("{cases} cases, max |LHS/RHS - 1| {worst:.2e}, LHS vs closed form {worst_lhs:.2e}"))
}

fn criterion_4() -> Outcome {
    let quad = Quadrature::default();
    let sphere = Surface::Sphere { radius: 1.0, m: 2 };
    let hemi = intrinsic_ball(&sphere, &[0.0, 0.0], PI / 2.0).unwrap();
    let rep = &iso_chain(&hemi, 0, &quad).map_err(|e| e.to_string())?[0];
    check((rep.lhs - 2.0 * PI).abs() <= 1e-3 && (rep.rhs - 4.0 * PI).abs() <= 1e-3, || {
        format!("hemisphere {} vs {}", rep.lhs, rep.rhs)
    })?;
    let t = PI / 4.0;
    let cap = intrinsic_ball(&sphere, &[0.0, 0.0], t).unwrap();
    let rep_cap = &iso_chain(&cap, 0, &quad).map_err(|e| e.to_string())?[0];
    let lhs = 2.0 * PI * (1.0 - t.cos());
    let rhs = t.sin() * (2.0 * PI * t.sin() + 2.0 * PI * (1.0 - t.cos()));
    check((rep_cap.lhs - lhs).abs() <= 1e-3 && (rep_cap.rhs - rhs).abs() <= 1e-3, || {
        format!("cap {} vs {}, {} vs {}", rep_cap.lhs, lhs, rep_cap.rhs, rhs)
    })?;
    check(rep_cap.margin > 0.0, || "cap inequality violated".into())?;
    let disk = intrinsic_ball(&Surface::Plane { m: 2, offset: 0.0 }, &[0.0, 0.0], 1.0).unwrap();
    let rep_disk = &iso_chain(&disk, 0, &quad).map_err(|e| e.to_string())?[0];
    check((rep_disk.lhs - PI).abs() <= 1e-3 && (rep_disk.rhs - 2.0 * PI).abs() <= 1e-3, || {
        format!("disk {} vs {}", rep_disk.lhs, rep_disk.rhs)
    })?;
    Ok(format!(
        "hemisphere {:.6}/{:.6}, cap {:.6}/{:.6}, disk {:.6}/{:.6}",
        rep.lhs, rep.rhs, rep_cap.lhs, rep_cap.rhs, rep_disk.lhs, rep_disk.rhs
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let surfaces = [
        Surface::Sphere { radius: 1.3, m: 2 },
        Surface::Sphere { radius: 0.7, m: 3 },
        Surface::Cylinder { radius: 0.8, k: 1, m: 2 },
        Surface::Graph {
            height: HeightFn::Paraboloid { a: 0.7 },
            m: 2,
            extent: 50.0,
        },
        Surface::Graph {
            height: HeightFn::Saddle { a: 1.1 },
            m: 2,
            extent: 50.0,
        },
    ];
    let mut worst = 0.0f64;
    for s in &surfaces {
        let chart = s.chart().unwrap();
        let m = s.m();
        let samples: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..m)
                    .map(|k| {
                        let (lo, hi) = (chart.domain.lo[k].max(-2.0), chart.domain.hi[k].min(2.0));
                        lo + (hi - lo) * rng.random_range(0.05..0.95)
                    })
                    .collect()
            })
            .collect();
        for _ in 0..5 {
            let raw: Vec<Vec<f64>> = (0..m).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let matrix = (0..m).map(|i| (0..m).map(|j| raw[i][j] + raw[j][i]).collect()).collect();
            let field = OperatorField::Fixed { matrix };
            worst = worst.max(divergence_identity_check(&chart, &field, &samples).map_err(|e| e.to_string())?);
        }
    }
    check(worst <= 1e-6, || format!("residual {worst:.3e}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    let mut order = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let exact = |t: f64| if sign > 0.0 { t.sin() } else { t.sinh() };
        let sup = |step: f64| -> Result<f64, String> {
            let g = solve_g(&FFunction::Constant(sign), 1.0, step).map_err(|e| e.to_string())?;
            let n = (1.0 / step).round() as usize;
            Ok((0..=n).map(|i| i as f64 * step).map(|t| (g.g(t) - exact(t)).abs()).fold(0.0, f64::max))
        };
        worst = worst.max(sup(1e-3)?);
        let (e1, e2) = (sup(0.1)?, sup(0.05)?);
        order = order.min((e1 / e2).log2());
    }
    check(worst <= 1e-8, || format!("sup error {worst:.3e}"))?;
    check(order >= 3.5, || format!("observed order {order:.2}"))?;
    Ok(format!("sup error {worst:.2e}, observed order {order:.2}"))
}

fn criterion_7() -> Outcome {
    let spec = SolitonSpec::new(0, Exponent::real(1.0).unwrap(), -0.5).unwrap();
    let mut parts = Vec::new();
    for m in 2..=3 {
        let res = shoot(&spec, m, &ShootOptions::default()).map_err(|e| e.to_string())?;
        let want = (2.0 * m as f64).sqrt();
        check((res.radius - want).abs() <= 1e-4, || format!("m={m}: radius {} vs {want}", res.radius))?;
        let resid = reevaluated_residual(&res, 400).map_err(|e| e.to_string())?;
        check(resid <= 1e-6, || format!("m={m}: residual {resid:.3e}"))?;
        parts.push(format!("m={m} radius {:.8} residual {resid:.1e}", res.radius));
    }
    Ok(parts.join(", "))
}

fn criterion_8() -> Outcome {
    let quad = Quadrature::default();
    let th = Thresholds::default();
    let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
    let plane = decay_scan(&Surface::Plane { m: 2, offset: 0.0 }, &[0.0, 0.0], 1, DecayWeight::Hc, &radii, &quad, &th)
        .map_err(|e| e.to_string())?;
    check(plane.classification == Trend::DecaysToZero && plane.values.iter().all(|v| *v == 0.0), || {
        format!("plane {:?} {:?}", plane.classification, plane.values)
    })?;
    let cyl = decay_scan(&Surface::Cylinder { radius: 1.0, k: 1, m: 2 }, &[0.0, 0.0], 1, DecayWeight::Hc, &radii, &quad, &th)
        .map_err(|e| e.to_string())?;
    check(cyl.classification == Trend::Grows, || format!("cylinder {:?}", cyl.classification))?;
    let sphere = decay_scan(&Surface::Sphere { radius: 1.0, m: 2 }, &[0.0, 0.0], 1, DecayWeight::Hc, &[0.5, 1.0, 2.0, 4.0], &quad, &th)
        .map_err(|e| e.to_string())?;
    check(sphere.classification == Trend::DegenerateCompact, || format!("sphere {:?}", sphere.classification))?;
    Ok(format!("cylinder slope {:.3}", cyl.slope))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut oracle_violations = 0;
    for i in 0..1000 {
        let m = 2 + i % 7;
        let l = random_spectrum(&mut rng, m);
        let spec = ShapeSpectrum::new(l.clone()).unwrap();
        let s: Vec<f64> = (0..=m).map(|k| subset_sum(&l, k)).collect();
        let a_norm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = rotated(&l, &mut rng);
        for r in 0..m {
            let rep = norms_and_bounds(&spec, r).unwrap();
            violations += usize::from(!rep.s_bounds_hold) + usize::from(!rep.newton_bound_holds);
            let p = newton_by_recursion(&a, &s, r);
            let norm = SymmetricEigen::new(p).eigenvalues.iter().fold(0.0f64, |x, v| x.max(v.abs()));
            let bound = (2f64.powi(m as i32) - 1.0) * a_norm.powi(r as i32);
            oracle_violations += usize::from(norm > bound * (1.0 + 1e-10));
        }
        for (k, sk) in s.iter().enumerate() {
            oracle_violations += usize::from(sk.abs() > binom(m, k) * a_norm.powi(k as i32) * (1.0 + 1e-10));
        }
    }
    check(violations == 0 && oracle_violations == 0, || {
        format!("{violations} library and {oracle_violations} oracle violations")
    })?;
    Ok("zero violations".into())
}

fn criterion_10() -> Outcome {
    let config = selftest_config();
    let run = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let out = pool.install(|| run_config(&config));
        Ok(render_reports(&out.entries))
    };
    let one = run(1)?;
    let four = run(4)?;
    let again = run(4)?;
    check(one == four && four == again, || "report bodies differ between runs".into())?;
    Ok(format!("{} bytes identical across 1 and 4 threads", one.len()))
}

fn main() {
    type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 10] = [
        (1, "trace identities", criterion_1, Some(Duration::from_secs(1))),
        (2, "symmetric functions vs subset enumeration", criterion_2, Some(Duration::from_secs(5))),
        (3, "geodesic-sphere equality", criterion_3, Some(Duration::from_secs(30))),
        (4, "isoperimetric chain", criterion_4, Some(Duration::from_secs(10))),
        (5, "flat divergence identity", criterion_5, Some(Duration::from_secs(5))),
        (6, "comparison ODE", criterion_6, Some(Duration::from_secs(1))),
        (7, "shrinking sphere", criterion_7, Some(Duration::from_secs(30))),
        (8, "rigidity scans", criterion_8, Some(Duration::from_secs(30))),
        (9, "bound suite", criterion_9, Some(Duration::from_secs(1))),
        (10, "determinism", criterion_10, None),
    ];
    let mut failed = Vec::new();
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > b);
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over time budget {:?}", budget.unwrap())),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        println!("[{status}] criterion {id:>2} {name}: {detail} ({:.2}s)", elapsed.as_secs_f64());
        if status == "FAIL" {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
