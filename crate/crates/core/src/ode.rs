//! Fixed-step classical Runge–Kutta for small autonomous-or-not systems.

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let add = |a: &[f64; N], b: &[f64; N], s: f64| {
        let mut out = *a;
        for i in 0..N {
            out[i] += s * b[i];
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Cubic Hermite interpolation on a uniform grid starting at 0.
///
/// Returns the interpolated value and derivative at `t`.
pub fn hermite_uniform(step: f64, values: &[f64], slopes: &[f64], t: f64) -> (f64, f64) {
    let n = values.len();
    debug_assert!(n >= 2 && slopes.len() == n);
    let pos = (t / step).clamp(0.0, (n - 1) as f64);
    let i = (pos.floor() as usize).min(n - 2);
    let s = pos - i as f64;
    let (y0, y1) = (values[i], values[i + 1]);
    let (d0, d1) = (slopes[i] * step, slopes[i + 1] * step);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
    let dh00 = 6.0 * s2 - 6.0 * s;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = -6.0 * s2 + 6.0 * s;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let deriv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / step;
    (value, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exponential() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let mut y = [1.0];
        let h = 0.01;
        for i in 0..100 {
            y = rk4_step(&f, i as f64 * h, &y, h);
        }
        assert!((y[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let step = 0.25;
        let ts: Vec<f64> = (0..9).map(|i| i as f64 * step).collect();
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let dp = |t: f64| -2.0 + 1.5 * t * t;
        let v: Vec<f64> = ts.iter().map(|&t| p(t)).collect();
        let d: Vec<f64> = ts.iter().map(|&t| dp(t)).collect();
        for t in [0.0, 0.1, 0.77, 1.3, 2.0] {
            let (a, b) = hermite_uniform(step, &v, &d, t);
            assert!((a - p(t)).abs() < 1e-13);
            assert!((b - dp(t)).abs() < 1e-12);
        }
    }
}
