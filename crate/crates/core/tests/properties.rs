use hyperlab::geom::{HeightFn, Surface};
use hyperlab::ineq::{poincare_spaceform, Report};
use hyperlab::measure::{param_box, Quadrature, WeightData};
use hyperlab::soliton::{signed_power, soliton_residual_both, solve_power, Exponent, SolitonSpec};
use hyperlab::symfun::{binom, newton_eigenvalues, norms_and_bounds, sym_all, trace_identities, ShapeSpectrum};
use proptest::prelude::*;

fn spectrum(max_m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2..=max_m)
}

fn brute(l: &[f64], k: usize) -> f64 {
    (0u32..1 << l.len())
        .filter(|s| s.count_ones() as usize == k)
        .map(|s| (0..l.len()).filter(|i| s >> i & 1 == 1).map(|i| l[i]).product::<f64>())
        .sum()
}

fn scale(l: &[f64], k: usize) -> f64 {
    let top = l.iter().map(|x| x.abs()).fold(0.0, f64::max);
    (binom(l.len(), k) * top.powi(k as i32)).max(1.0)
}

proptest! {
    #[test]
    fn sym_all_matches_enumeration(l in spectrum(10)) {
        let t = sym_all(&ShapeSpectrum::new(l.clone()).unwrap());
        for k in 0..=l.len() {
            prop_assert!((t.s(k) - brute(&l, k)).abs() <= 1e-10 * scale(&l, k));
        }
    }

    #[test]
    fn sym_all_is_permutation_invariant(l in spectrum(8), shift in 0usize..8) {
        let mut rot = l.clone();
        rot.rotate_left(shift % l.len());
        let (a, b) = (sym_all(&ShapeSpectrum::new(l.clone()).unwrap()), sym_all(&ShapeSpectrum::new(rot).unwrap()));
        for k in 0..=l.len() {
            prop_assert!((a.s(k) - b.s(k)).abs() <= 1e-12 * scale(&l, k));
        }
    }

    #[test]
    fn sym_all_is_homogeneous(l in spectrum(8), t in -2.0f64..2.0) {
        let scaled: Vec<f64> = l.iter().map(|x| x * t).collect();
        let (a, b) = (sym_all(&ShapeSpectrum::new(l.clone()).unwrap()), sym_all(&ShapeSpectrum::new(scaled).unwrap()));
        for k in 0..=l.len() {
            prop_assert!((b.s(k) - t.powi(k as i32) * a.s(k)).abs() <= 1e-10 * scale(&l, k) * (1.0 + t.abs().powi(k as i32)));
        }
    }

    #[test]
    fn trace_identities_hold(l in spectrum(8)) {
        let spec = ShapeSpectrum::new(l.clone()).unwrap();
        for r in 0..l.len() {
            prop_assert!(trace_identities(&spec, r).unwrap().relative() < 1e-10);
        }
    }

    #[test]
    fn newton_eigenvalues_are_gradients(l in spectrum(7), r_seed in 0usize..7) {
        let m = l.len();
        let r = r_seed % m;
        let s = sym_all(&ShapeSpectrum::new(l.clone()).unwrap()).s.clone();
        let mu = newton_eigenvalues(&l, &s, r);
        let h = 1e-5;
        for i in 0..m {
            let mut up = l.clone();
            let mut dn = l.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (brute(&up, r + 1) - brute(&dn, r + 1)) / (2.0 * h);
            prop_assert!((fd - mu[i]).abs() <= 1e-6 * scale(&l, r).max(mu[i].abs()));
        }
    }

    #[test]
    fn umbilic_newton_is_scalar(m in 2usize..9, kappa in -3.0f64..3.0, r_seed in 0usize..8) {
        let r = r_seed % m;
        let l = vec![kappa; m];
        let s = sym_all(&ShapeSpectrum::new(l.clone()).unwrap()).s.clone();
        let want = binom(m - 1, r) * kappa.powi(r as i32);
        for mu in newton_eigenvalues(&l, &s, r) {
            prop_assert!((mu - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn coefficient_and_newton_bounds(l in spectrum(8)) {
        let spec = ShapeSpectrum::new(l.clone()).unwrap();
        for r in 0..l.len() {
            let b = norms_and_bounds(&spec, r).unwrap();
            prop_assert!(b.s_bounds_hold && b.newton_bound_holds);
        }
    }

    #[test]
    fn orientation_flip_negates_odd_functions(l in spectrum(8)) {
        let neg: Vec<f64> = l.iter().map(|x| -x).collect();
        let (a, b) = (sym_all(&ShapeSpectrum::new(l.clone()).unwrap()), sym_all(&ShapeSpectrum::new(neg).unwrap()));
        for k in 0..=l.len() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((b.s(k) - sign * a.s(k)).abs() <= 1e-12 * scale(&l, k));
        }
    }

    #[test]
    fn odd_rational_power_times_base_is_even(s in -5.0f64..5.0, p in -4i64..5, q in 0i64..4) {
        let (p, q) = (2 * p + 1, 2 * q + 1);
        let alpha = Exponent::odd_rational(p, q).unwrap();
        prop_assume!(s != 0.0 || alpha.value > 0.0);
        let lhs = signed_power(s, &alpha).unwrap() * signed_power(s, &Exponent::real(1.0).unwrap()).unwrap();
        let rhs = s.abs().powf(alpha.value + 1.0);
        prop_assert!(lhs >= 0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn solve_power_inverts_signed_power(s in -5.0f64..5.0, p in -4i64..5, q in 0i64..4) {
        let alpha = Exponent::odd_rational(2 * p + 1, 2 * q + 1).unwrap();
        prop_assume!(s.abs() > 1e-3);
        let back = solve_power(signed_power(s, &alpha).unwrap(), &alpha).unwrap();
        prop_assert!((back - s).abs() <= 1e-10 * s.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flipped_normal_negates_support(u in 0.2f64..2.9, v in -3.0f64..3.0, r in 0usize..2) {
        let chart = Surface::Sphere { radius: 2.0, m: 2 }.chart().unwrap();
        let spec = SolitonSpec::new(r, Exponent::real(1.0).unwrap(), -0.5).unwrap();
        let (a, b) = soliton_residual_both(&chart, &spec, &[vec![u, v]]);
        let (a, b) = (a.unwrap(), b.unwrap());
        let (a, b) = (&a.samples[0], &b.samples[0]);
        prop_assert!((a.support + b.support).abs() <= 1e-12);
        // S_{r+1} is odd in the normal exactly when r + 1 is odd.
        let sign = if (r + 1) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((b.s_next - sign * a.s_next).abs() <= 1e-10);
    }
}

fn box_report(a: f64, half: f64, r: usize) -> Report {
    let surface = Surface::Graph {
        height: HeightFn::Paraboloid { a },
        m: 2,
        extent: 50.0,
    };
    let region = param_box(&surface, vec![-half, -half], vec![half, half]).unwrap();
    poincare_spaceform(&region, r, &WeightData::constant(), &Quadrature::default())
        .unwrap()
        .remove(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn flat_ratio_is_scale_invariant(s in 0.5f64..3.0, r in 0usize..2) {
        let base = box_report(0.6, 1.0, r);
        let scaled = box_report(0.6 / s, s, r);
        let power = (2 - r) as i32;
        prop_assert!((scaled.lhs - s.powi(power) * base.lhs).abs() <= 1e-9 * scaled.lhs.abs().max(1e-12));
        prop_assert!((scaled.lhs / scaled.rhs - base.lhs / base.rhs).abs() <= 1e-9);
    }
}
