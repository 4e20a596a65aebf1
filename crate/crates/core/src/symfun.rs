//! Curvature algebra at a single point.
//!
//! Everything here works on the principal curvatures of a hypersurface:
//! elementary symmetric functions `S_r`, normalized mean curvatures
//! `H_r = S_r / C(m, r)`, the Newton transformations `P_r` (given by their
//! eigenvalues in the principal frame), trace identities, norm bounds and
//! the sufficient conditions under which `P_r` is semi-definite.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientSpec;
use crate::error::{LabError, Result};

/// Relative tolerance used when testing `S_k ≡ 0` on samples.
pub const ZERO_TOL: f64 = 1e-8;

/// Normal convention of a spectrum. Only one convention exists: geodesic
/// spheres have positive principal curvatures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    SphereInwardPositive,
}

/// Principal curvatures at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpectrum {
    lambdas: Vec<f64>,
    #[serde(default)]
    orientation: Orientation,
}

impl ShapeSpectrum {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(LabError::Input(format!(
                "spectrum needs m >= 2 principal curvatures, got {}",
                lambdas.len()
            )));
        }
        if let Some(bad) = lambdas.iter().find(|l| !l.is_finite()) {
            return Err(LabError::Input(format!("non-finite principal curvature {bad}")));
        }
        Ok(Self {
            lambdas,
            orientation: Orientation::SphereInwardPositive,
        })
    }

    /// Umbilic spectrum `(κ, …, κ)`.
    pub fn umbilic(m: usize, kappa: f64) -> Result<Self> {
        Self::new(vec![kappa; m])
    }

    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Spectrum of the opposite normal.
    pub fn flipped(&self) -> Self {
        Self {
            lambdas: self.lambdas.iter().map(|l| -l).collect(),
            orientation: self.orientation,
        }
    }
}

/// `S_0..S_m` and `H_0..H_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTable {
    pub s: Vec<f64>,
    pub h: Vec<f64>,
}

impl SymTable {
    pub fn m(&self) -> usize {
        self.s.len() - 1
    }

    /// `S_k`, with `S_k = 0` for `k > m`.
    pub fn s(&self, k: usize) -> f64 {
        self.s.get(k).copied().unwrap_or(0.0)
    }

    /// `H_k`, with `H_k = 0` for `k > m`.
    pub fn h(&self, k: usize) -> f64 {
        self.h.get(k).copied().unwrap_or(0.0)
    }
}

/// Newton transformation `P_r` in the principal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOp {
    pub r: usize,
    pub eigenvalues: Vec<f64>,
    /// Matrix form in a supplied orthonormal basis, when requested.
    pub matrix: Option<DMatrix<f64>>,
}

impl NewtonOp {
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, mu| acc.max(mu.abs()))
    }

    /// `|P_r v|` for `v` given by its components in the principal frame.
    pub fn apply_norm(&self, components: &[f64]) -> f64 {
        self.eigenvalues
            .iter()
            .zip(components)
            .map(|(mu, v)| (mu * v) * (mu * v))
            .sum::<f64>()
            .sqrt()
    }
}

/// Binomial coefficient as a float. Exact for the sizes used here.
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Coefficients of `∏(x + λ_i)` read from the top: `S_0..S_m`.
pub fn elementary_symmetric(lambdas: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; lambdas.len() + 1];
    s[0] = 1.0;
    for (i, &l) in lambdas.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            s[k] += l * s[k - 1];
        }
    }
    s
}

pub fn sym_all(spec: &ShapeSpectrum) -> SymTable {
    let m = spec.m();
    let s = elementary_symmetric(spec.lambdas());
    let h = s.iter().enumerate().map(|(r, v)| v / binom(m, r)).collect();
    SymTable { s, h }
}

fn check_order(m: usize, r: usize) -> Result<()> {
    if r >= m {
        return Err(LabError::Argument(format!(
            "Newton order r = {r} must satisfy 0 <= r <= m-1 = {}",
            m - 1
        )));
    }
    Ok(())
}

/// Eigenvalues of `P_r` via `μ_i^{(r)} = S_r − λ_i μ_i^{(r−1)}`.
pub fn newton_eigenvalues(lambdas: &[f64], s: &[f64], r: usize) -> Vec<f64> {
    lambdas
        .iter()
        .map(|&l| {
            let mut mu = 1.0;
            for k in 1..=r {
                mu = s[k] - l * mu;
            }
            mu
        })
        .collect()
}

pub fn newton(spec: &ShapeSpectrum, r: usize) -> Result<NewtonOp> {
    check_order(spec.m(), r)?;
    let table = sym_all(spec);
    Ok(NewtonOp {
        r,
        eigenvalues: newton_eigenvalues(spec.lambdas(), &table.s, r),
        matrix: None,
    })
}

/// `P_r` as a matrix, where `basis` holds orthonormal principal directions in
/// its columns (expressed in some orthonormal frame).
pub fn newton_in_basis(spec: &ShapeSpectrum, r: usize, basis: &DMatrix<f64>) -> Result<NewtonOp> {
    let m = spec.m();
    if basis.nrows() != m || basis.ncols() != m {
        return Err(LabError::Input(format!(
            "basis must be {m}x{m}, got {}x{}",
            basis.nrows(),
            basis.ncols()
        )));
    }
    let mut op = newton(spec, r)?;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(op.eigenvalues.clone()));
    op.matrix = Some(basis * diag * basis.transpose());
    Ok(op)
}

/// Runs the recursion `P_r = S_r I − A P_{r−1}` on a symmetric matrix `A`.
pub fn newton_matrix(a: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    check_order(m, r)?;
    let eig = a.clone().symmetric_eigen();
    let s = elementary_symmetric(eig.eigenvalues.as_slice());
    let mut p = DMatrix::identity(m, m);
    for k in 1..=r {
        p = DMatrix::identity(m, m) * s[k] - a * &p;
    }
    Ok(p)
}

/// Absolute residuals of the three trace identities together with the scale
/// they should be compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceResiduals {
    pub trace: f64,
    pub trace_a: f64,
    pub trace_a2: f64,
    pub scale: f64,
}

impl TraceResiduals {
    pub fn max(&self) -> f64 {
        self.trace.max(self.trace_a).max(self.trace_a2)
    }

    /// Largest residual relative to `1 + scale`.
    pub fn relative(&self) -> f64 {
        self.max() / (1.0 + self.scale)
    }
}

pub fn trace_identities(spec: &ShapeSpectrum, r: usize) -> Result<TraceResiduals> {
    let m = spec.m();
    check_order(m, r)?;
    let table = sym_all(spec);
    let lambdas = spec.lambdas();
    let mu = newton_eigenvalues(lambdas, &table.s, r);

    let tr: f64 = mu.iter().sum();
    let tr_a: f64 = mu.iter().zip(lambdas).map(|(p, l)| p * l).sum();
    let tr_a2: f64 = mu.iter().zip(lambdas).map(|(p, l)| p * l * l).sum();

    let want_tr = (m - r) as f64 * table.s(r);
    let want_tr_a = (r + 1) as f64 * table.s(r + 1);
    let want_tr_a2 = table.s(1) * table.s(r + 1) - (r + 2) as f64 * table.s(r + 2);

    let max_abs = lambdas.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    // Magnitude of the terms that enter the sums; residuals are round-off in these.
    let scale = (0..=m.min(r + 2))
        .map(|k| binom(m, k) * max_abs.powi(k as i32 + 2))
        .fold(0.0, f64::max)
        .max(want_tr.abs())
        .max(want_tr_a.abs())
        .max(want_tr_a2.abs());

    Ok(TraceResiduals {
        trace: (tr - want_tr).abs(),
        trace_a: (tr_a - want_tr_a).abs(),
        trace_a2: (tr_a2 - want_tr_a2).abs(),
        scale,
    })
}

/// Norms of `A` and `P_r` and the two bound checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    /// Frobenius norm `√(Σ λ_i²)`.
    pub a_norm: f64,
    /// Spectral norm of `P_r`.
    pub newton_norm: f64,
    /// `|S_k| / (C(m,k)|A|^k)` for `k = 0..=m` (0 when both sides vanish).
    pub s_ratios: Vec<f64>,
    pub s_bounds_hold: bool,
    pub newton_bound: f64,
    pub newton_bound_holds: bool,
}

fn bound_holds(value: f64, bound: f64) -> bool {
    value <= bound * (1.0 + 1e-12) + 1e-300
}

pub fn norms_and_bounds(spec: &ShapeSpectrum, r: usize) -> Result<BoundReport> {
    let m = spec.m();
    check_order(m, r)?;
    let table = sym_all(spec);
    let a_norm = spec.lambdas().iter().map(|l| l * l).sum::<f64>().sqrt();
    let mu = newton_eigenvalues(spec.lambdas(), &table.s, r);
    let newton_norm = mu.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    let mut s_bounds_hold = true;
    let s_ratios = (0..=m)
        .map(|k| {
            let bound = binom(m, k) * a_norm.powi(k as i32);
            let value = table.s[k].abs();
            s_bounds_hold &= bound_holds(value, bound);
            if bound == 0.0 {
                0.0
            } else {
                value / bound
            }
        })
        .collect();

    let newton_bound = (2f64.powi(m as i32) - 1.0) * a_norm.powi(r as i32);
    Ok(BoundReport {
        a_norm,
        newton_norm,
        s_ratios,
        s_bounds_hold,
        newton_bound,
        newton_bound_holds: bound_holds(newton_norm, newton_bound),
    })
}

/// Which sufficient conditions for semi-definiteness of `P_r` hold on a
/// sample of spectra.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PositivityFlags {
    /// `S_{r+1} ≡ 0` and `r` odd.
    pub a: bool,
    /// `S_{r+1} ≡ 0`, `r` even and `S_r ≥ 0`.
    pub b: bool,
    /// `r` odd, `S_{r+1} ≡ 0`, `S_{r+2} ≠ 0`.
    pub c: bool,
    /// `r` even, `S_{r+1} ≡ 0`, `S_{r+2} ≠ 0`, `S_r ≥ 0`.
    pub d: bool,
    /// `S_k > 0` everywhere for some `k > r` and a sample with all `λ_i ≥ 0`.
    pub e: bool,
    /// Every eigenvalue of `P_r` is `≥ −tol` at every sample.
    pub nonneg: bool,
    /// Same, after reversing the normal.
    pub nonneg_flipped: bool,
}

impl PositivityFlags {
    pub fn any_condition(&self) -> bool {
        self.a || self.b || self.c || self.d || self.e
    }
}

/// `|value| ≤ 1e−8·(1 + |A|^order)`.
pub fn is_zero(value: f64, a_norm: f64, order: usize) -> bool {
    value.abs() <= ZERO_TOL * (1.0 + a_norm.powi(order as i32))
}

fn a_norm(lambdas: &[f64]) -> f64 {
    lambdas.iter().map(|l| l * l).sum::<f64>().sqrt()
}

pub fn positivity_class(field: &[ShapeSpectrum], r: usize) -> Result<PositivityFlags> {
    let first = field
        .first()
        .ok_or_else(|| LabError::Argument("positivity_class needs a non-empty sample".into()))?;
    let m = first.m();
    check_order(m, r)?;
    if field.iter().any(|s| s.m() != m) {
        return Err(LabError::Input("mixed dimensions in spectrum sample".into()));
    }

    let mut next_zero = true;
    let mut sr_nonneg = true;
    let mut next2_nonzero = r + 2 <= m;
    let mut sk_positive: Vec<bool> = (0..=m).map(|k| k > r).collect();
    let mut some_convex_point = false;
    let mut nonneg = true;
    let mut nonneg_flipped = true;

    for spec in field {
        let t = sym_all(spec);
        let norm = a_norm(spec.lambdas());
        next_zero &= is_zero(t.s(r + 1), norm, r + 1);
        sr_nonneg &= t.s(r) >= -ZERO_TOL * (1.0 + norm.powi(r as i32));
        next2_nonzero &= !is_zero(t.s(r + 2), norm, r + 2);
        for (k, flag) in sk_positive.iter_mut().enumerate() {
            *flag &= t.s(k) > ZERO_TOL * (1.0 + norm.powi(k as i32));
        }
        some_convex_point |= spec.lambdas().iter().all(|&l| l >= -ZERO_TOL * (1.0 + norm));

        let mu = newton_eigenvalues(spec.lambdas(), &t.s, r);
        let tol = ZERO_TOL * (1.0 + norm.powi(r as i32));
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        nonneg &= mu.iter().all(|&v| v >= -tol);
        nonneg_flipped &= mu.iter().all(|&v| sign * v >= -tol);
    }

    let odd = r % 2 == 1;
    Ok(PositivityFlags {
        a: next_zero && odd,
        b: next_zero && !odd && sr_nonneg,
        c: odd && next_zero && next2_nonzero,
        d: !odd && next_zero && next2_nonzero && sr_nonneg,
        e: some_convex_point && sk_positive.iter().skip(1).any(|&p| p),
        nonneg,
        nonneg_flipped,
    })
}

/// Scalar curvature from the traced Gauss equation, `Scal = (m−1)λ + 2S_2`.
pub fn scal_from_s2(_s1: f64, s2: f64, ambient: &AmbientSpec) -> Result<f64> {
    let lambda = ambient.einstein_constant().ok_or_else(|| {
        LabError::UnsupportedAmbient(format!("{} has no Einstein constant", ambient.label()))
    })?;
    let m = ambient.hypersurface_dim() as f64;
    Ok((m - 1.0) * lambda + 2.0 * s2)
}

/// Intrinsic Ricci curvature in a principal direction of a hypersurface of a
/// space form of curvature `c`: `(m−1)c + λ_i(S_1 − λ_i)`.
pub fn ricci_principal(spec: &ShapeSpectrum, c: f64) -> Vec<f64> {
    let m = spec.m() as f64;
    let s1: f64 = spec.lambdas().iter().sum();
    spec.lambdas()
        .iter()
        .map(|l| (m - 1.0) * c + l * (s1 - l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(l: &[f64]) -> ShapeSpectrum {
        ShapeSpectrum::new(l.to_vec()).unwrap()
    }

    /// Sum over all r-subsets, by bitmask enumeration.
    fn brute_s(l: &[f64], r: usize) -> f64 {
        (0u32..1 << l.len())
            .filter(|mask| mask.count_ones() as usize == r)
            .map(|mask| {
                l.iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, v)| v)
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn all_ones_gives_binomials() {
        let t = sym_all(&spec(&[1.0; 4]));
        assert_eq!(t.s, vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        assert!(t.h.iter().all(|h| (h - 1.0).abs() < 1e-15));
    }

    #[test]
    fn one_two_three() {
        let t = sym_all(&spec(&[1.0, 2.0, 3.0]));
        let brute: Vec<f64> = (0..=3).map(|r| brute_s(&[1.0, 2.0, 3.0], r)).collect();
        assert_eq!(brute, vec![1.0, 6.0, 11.0, 6.0]);
        assert_eq!(t.s, brute);
    }

    #[test]
    fn zero_spectrum() {
        let t = sym_all(&spec(&[0.0; 5]));
        assert_eq!(t.s[0], 1.0);
        assert!(t.s[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_spectra() {
        assert!(ShapeSpectrum::new(vec![1.0, f64::NAN]).is_err());
        assert!(ShapeSpectrum::new(vec![1.0]).is_err());
    }

    #[test]
    fn newton_umbilic() {
        let op = newton(&spec(&[2.0, 2.0, 2.0]), 1).unwrap();
        assert_eq!(op.eigenvalues, vec![4.0, 4.0, 4.0]);
        // Direct route: the matrix recursion on diag(2,2,2).
        let a = DMatrix::from_diagonal_element(3, 3, 2.0);
        let p = newton_matrix(&a, 1).unwrap();
        assert!((p - DMatrix::from_diagonal_element(3, 3, 4.0)).norm() < 1e-14);
    }

    #[test]
    fn newton_one_two_three_order_two() {
        // P1 = 6I − A = diag(5,4,3); P2 = 11I − A·P1 = diag(6,3,2).
        let op = newton(&spec(&[1.0, 2.0, 3.0]), 2).unwrap();
        assert_eq!(op.eigenvalues, vec![6.0, 3.0, 2.0]);
        assert_eq!(op.trace(), 11.0);
    }

    #[test]
    fn newton_order_zero_is_identity() {
        let op = newton(&spec(&[0.3, -1.2, 7.0]), 0).unwrap();
        assert_eq!(op.eigenvalues, vec![1.0; 3]);
    }

    #[test]
    fn newton_order_out_of_range() {
        assert!(matches!(newton(&spec(&[1.0, 2.0]), 2), Err(LabError::Argument(_))));
    }

    #[test]
    fn newton_matrix_agrees_with_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = 4;
            let raw = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            let a = (&raw + raw.transpose()) * 0.5;
            let eig = a.clone().symmetric_eigen();
            let sp = spec(eig.eigenvalues.as_slice());
            for r in 0..m {
                let via_basis = newton_in_basis(&sp, r, &eig.eigenvectors).unwrap();
                let direct = newton_matrix(&a, r).unwrap();
                assert!((via_basis.matrix.unwrap() - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn newton_eigenvalues_are_partial_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..50 {
            let m = rng.random_range(2..7usize);
            let l: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            for r in 0..m {
                let mu = newton(&spec(&l), r).unwrap().eigenvalues;
                for i in 0..m {
                    let mut plus = l.clone();
                    let mut minus = l.clone();
                    plus[i] += h;
                    minus[i] -= h;
                    let d = (elementary_symmetric(&plus)[r + 1] - elementary_symmetric(&minus)[r + 1])
                        / (2.0 * h);
                    assert!((d - mu[i]).abs() <= 1e-6 * (1.0 + mu[i].abs()), "{d} vs {}", mu[i]);
                }
            }
        }
    }

    #[test]
    fn trace_identities_small_cases() {
        let res = trace_identities(&spec(&[1.0, 2.0, 3.0]), 1).unwrap();
        assert!(res.max() < 1e-12);
        let res = trace_identities(&spec(&[1.0, 1.0]), 0).unwrap();
        assert!(res.max() < 1e-15);
        // tr A P_0 = S_1 = 2
        let t = sym_all(&spec(&[1.0, 1.0]));
        assert_eq!(t.s(1), 2.0);
    }

    #[test]
    fn trace_identities_last_order_uses_zero_extension() {
        let res = trace_identities(&spec(&[0.5, -1.5, 2.0]), 2).unwrap();
        assert!(res.relative() < 1e-12);
    }

    #[test]
    fn bounds_single_curvature() {
        let rep = norms_and_bounds(&spec(&[1.0, 0.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!(rep.a_norm, 1.0);
        assert!(rep.newton_bound_holds);
        assert!(rep.newton_norm < rep.newton_bound / 4.0);
        assert!(rep.s_bounds_hold);
    }

    #[test]
    fn bounds_umbilic_ratio() {
        let m = 5;
        let k0 = 0.7;
        let rep = norms_and_bounds(&ShapeSpectrum::umbilic(m, k0).unwrap(), 1).unwrap();
        assert!((rep.a_norm - k0 * (m as f64).sqrt()).abs() < 1e-14);
        for (k, ratio) in rep.s_ratios.iter().enumerate() {
            let want = (m as f64).powf(-(k as f64) / 2.0);
            assert!((ratio - want).abs() < 1e-12, "k={k}: {ratio} vs {want}");
        }
    }

    #[test]
    fn bounds_zero_spectrum() {
        let rep = norms_and_bounds(&spec(&[0.0, 0.0, 0.0]), 1).unwrap();
        assert_eq!(rep.a_norm, 0.0);
        assert_eq!(rep.newton_norm, 0.0);
        assert!(rep.s_bounds_hold && rep.newton_bound_holds);
    }

    #[test]
    fn positivity_cylinder() {
        let field = vec![spec(&[1.0, 0.0]); 10];
        let flags = positivity_class(&field, 1).unwrap();
        assert!(flags.a);
        assert!(flags.nonneg);
    }

    #[test]
    fn positivity_round_sphere() {
        let field = vec![spec(&[0.5, 0.5, 0.5]); 4];
        for r in 0..3 {
            let flags = positivity_class(&field, r).unwrap();
            assert!(flags.e, "r={r}");
            assert!(flags.nonneg);
        }
    }

    #[test]
    fn positivity_mixed_signs() {
        let field = vec![spec(&[1.0, 1.0]), spec(&[-1.0, -1.0]), spec(&[1.0, -2.0])];
        let flags = positivity_class(&field, 0).unwrap();
        assert!(!flags.any_condition());
        let flags = positivity_class(&field, 1).unwrap();
        assert!(!flags.any_condition());
        assert!(!flags.nonneg);
    }

    #[test]
    fn positivity_empty_sample() {
        assert!(matches!(positivity_class(&[], 0), Err(LabError::Argument(_))));
    }

    #[test]
    fn ricci_on_round_sphere() {
        // Unit sphere in R^3: Gauss curvature 1, so Ric = 1 in every direction.
        let ric = ricci_principal(&spec(&[1.0, 1.0]), 0.0);
        assert_eq!(ric, vec![1.0, 1.0]);
        // Unit totally geodesic sphere in S^3(1): Ric = (m−1)c.
        let ric = ricci_principal(&spec(&[0.0, 0.0]), 1.0);
        assert_eq!(ric, vec![1.0, 1.0]);
    }
}
