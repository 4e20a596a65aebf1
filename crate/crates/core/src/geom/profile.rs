//! Sampled planar profile curves, interpolated by quintic Hermite splines.

use super::jet::Real;
use crate::error::{LabError, Result};

/// Arc-length parametrized curve `(x(s), z(s))` sampled on a uniform grid.
///
/// Nodes carry value, first and second derivative of both coordinates, so
/// the interpolant reproduces the sampled curvature at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProfile {
    pub s0: f64,
    pub step: f64,
    pub x: Vec<[f64; 3]>,
    pub z: Vec<[f64; 3]>,
    /// Tangent angle and its derivative at the nodes.
    pub theta: Vec<f64>,
    pub dtheta: Vec<f64>,
}

/// Fourth-order finite-difference derivative of uniformly sampled data.
pub fn derivative_4th(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    let v = |i: usize| values[i];
    (0..n)
        .map(|i| {
            if n < 5 {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                return (v(b) - v(a)) / ((b - a) as f64 * step);
            }
            if i >= 2 && i + 2 < n {
                (-v(i + 2) + 8.0 * v(i + 1) - 8.0 * v(i - 1) + v(i - 2)) / (12.0 * step)
            } else if i < 2 {
                (-25.0 * v(i) + 48.0 * v(i + 1) - 36.0 * v(i + 2) + 16.0 * v(i + 3) - 3.0 * v(i + 4))
                    / (12.0 * step)
            } else {
                (25.0 * v(i) - 48.0 * v(i - 1) + 36.0 * v(i - 2) - 16.0 * v(i - 3) + 3.0 * v(i - 4))
                    / (12.0 * step)
            }
        })
        .collect()
}

impl SampledProfile {
    /// Builds the interpolant from node positions and tangent angles; the
    /// curvature `θ′` is recovered by differencing the angles.
    pub fn from_samples(s0: f64, step: f64, x: &[f64], z: &[f64], theta: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || z.len() != n || theta.len() != n || !(step > 0.0) {
            return Err(LabError::Input("profile needs at least two consistent samples".into()));
        }
        let dtheta = derivative_4th(theta, step);
        let mut xs = Vec::with_capacity(n);
        let mut zs = Vec::with_capacity(n);
        for i in 0..n {
            let (sn, cs) = theta[i].sin_cos();
            xs.push([x[i], cs, -sn * dtheta[i]]);
            zs.push([z[i], sn, cs * dtheta[i]]);
        }
        Ok(Self {
            s0,
            step,
            x: xs,
            z: zs,
            theta: theta.to_vec(),
            dtheta,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.s0, self.s0 + self.step * (self.len() - 1) as f64)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.s0 + self.step * i as f64
    }

    pub fn eval<T: Real>(&self, s: T) -> (T, T) {
        let n = self.len();
        let pos = ((s.value() - self.s0) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let t = (s - T::cst(self.node(i))).scale(1.0 / self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let one = T::cst(1.0);
        let basis = [
            one - t3.scale(10.0) + t4.scale(15.0) - t5.scale(6.0),
            t - t3.scale(6.0) + t4.scale(8.0) - t5.scale(3.0),
            (t2 - t3.scale(3.0) + t4.scale(3.0) - t5).scale(0.5),
            (t3 - t4.scale(2.0) + t5).scale(0.5),
            -t3.scale(4.0) + t4.scale(7.0) - t5.scale(3.0),
            t3.scale(10.0) - t4.scale(15.0) + t5.scale(6.0),
        ];
        let h = self.step;
        let combine = |a: &[f64; 3], b: &[f64; 3]| {
            let w = [a[0], a[1] * h, a[2] * h * h, b[2] * h * h, b[1] * h, b[0]];
            basis
                .iter()
                .zip(w)
                .fold(T::cst(0.0), |acc, (&bv, wv)| acc + bv.scale(wv))
        };
        (combine(&self.x[i], &self.x[i + 1]), combine(&self.z[i], &self.z[i + 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::jet::HyperDual;

    #[test]
    fn circle_is_reproduced_with_curvature() {
        let r = 1.5;
        let step = 0.01;
        let n = 200;
        let s: Vec<f64> = (0..n).map(|i| 0.2 + i as f64 * step).collect();
        let x: Vec<f64> = s.iter().map(|&t| r * (t / r).sin()).collect();
        let z: Vec<f64> = s.iter().map(|&t| -r * (t / r).cos()).collect();
        let th: Vec<f64> = s.iter().map(|&t| t / r).collect();
        let p = SampledProfile::from_samples(0.2, step, &x, &z, &th).unwrap();
        assert!(p.dtheta.iter().all(|d| (d - 1.0 / r).abs() < 1e-9));
        for &t in &[0.25, 0.777, 1.5, 2.1] {
            let (xv, zv) = p.eval(HyperDual::new(t, 1.0, 1.0));
            assert!((xv.v - r * (t / r).sin()).abs() < 1e-12);
            assert!((zv.d1 - (t / r).sin()).abs() < 1e-10);
            // Curvature of the plane curve x′z″ − z′x″.
            let k = xv.d1 * zv.d12 - zv.d1 * xv.d12;
            assert!((k - 1.0 / r).abs() < 1e-5, "{k}");
        }
    }

    #[test]
    fn one_sided_derivatives_are_exact_on_quartics() {
        let step = 0.1;
        let v: Vec<f64> = (0..8).map(|i| (i as f64 * step).powi(4)).collect();
        let d = derivative_4th(&v, step);
        for (i, dv) in d.iter().enumerate() {
            let t = i as f64 * step;
            assert!((dv - 4.0 * t.powi(3)).abs() < 1e-11, "{i}");
        }
    }
}
