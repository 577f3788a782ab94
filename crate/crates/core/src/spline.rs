//! Cubic interpolating spline with not-a-knot end conditions.

use crate::error::{KwError, Result};

/// Abscissa used for the knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplineAxis {
    Linear,
    /// Knots are placed in `ln y`; derivatives are still reported in `y`.
    Log,
}

#[derive(Debug, Clone)]
pub struct CubicSpline {
    axis: SplineAxis,
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots, in the knot variable
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn not_a_knot(xs: &[f64], ys: &[f64], axis: SplineAxis) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(KwError::ProfileData("abscissa/ordinate length mismatch".into()));
        }
        let n = xs.len();
        if n < 4 {
            return Err(KwError::ProfileData(format!("not-a-knot spline needs at least 4 knots, got {n}")));
        }
        let x: Vec<f64> = match axis {
            SplineAxis::Linear => xs.to_vec(),
            SplineAxis::Log => {
                if xs.iter().any(|&v| v <= 0.0) {
                    return Err(KwError::ProfileData("log-axis spline needs positive abscissae".into()));
                }
                xs.iter().map(|v| v.ln()).collect()
            }
        };
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KwError::ProfileData("knots must be strictly increasing".into()));
        }
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(KwError::ProfileData("non-finite ordinate".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let k = n - 2;
        let mut lower = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            lower[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            upper[r] = h[i];
            rhs[r] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        // Eliminate M_0 and M_{n-1} through continuity of the third derivative.
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 + h0 * h0 / h1;
        upper[0] -= h0 * h0 / h1;
        let (ha, hb) = (h[n - 3], h[n - 2]);
        diag[k - 1] += hb + hb * hb / ha;
        lower[k - 1] -= hb * hb / ha;

        let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let mut m = Vec::with_capacity(n);
        m.push(inner[0] * (1.0 + h0 / h1) - inner[1] * h0 / h1);
        m.extend_from_slice(&inner);
        m.push(inner[k - 1] * (1.0 + hb / ha) - inner[k - 2] * hb / ha);
        Ok(Self {
            axis,
            x,
            y: ys.to_vec(),
            m,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        let (a, b) = (self.x[0], self.x[self.x.len() - 1]);
        match self.axis {
            SplineAxis::Linear => (a, b),
            SplineAxis::Log => (a.exp(), b.exp()),
        }
    }

    /// Value and first two derivatives with respect to the original abscissa.
    pub fn eval(&self, at: f64) -> (f64, f64, f64) {
        let s = match self.axis {
            SplineAxis::Linear => at,
            SplineAxis::Log => at.ln(),
        };
        let (v, d1, d2) = self.eval_knot_variable(s);
        match self.axis {
            SplineAxis::Linear => (v, d1, d2),
            SplineAxis::Log => (v, d1 / at, (d2 - d1) / (at * at)),
        }
    }

    fn eval_knot_variable(&self, s: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        let i = self.x.partition_point(|&k| k <= s).clamp(1, n - 1) - 1;
        let (xa, xb) = (self.x[i], self.x[i + 1]);
        let h = xb - xa;
        let (ma, mb) = (self.m[i], self.m[i + 1]);
        let (ya, yb) = (self.y[i], self.y[i + 1]);
        let (l, r) = (xb - s, s - xa);
        let ca = ya / h - ma * h / 6.0;
        let cb = yb / h - mb * h / 6.0;
        let v = ma * l * l * l / (6.0 * h) + mb * r * r * r / (6.0 * h) + ca * l + cb * r;
        let d1 = -ma * l * l / (2.0 * h) + mb * r * r / (2.0 * h) - ca + cb;
        let d2 = (ma * l + mb * r) / h;
        (v, d1, d2)
    }
}

fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(KwError::ProfileData("singular spline system".into()));
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(KwError::ProfileData("singular spline system".into()));
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 2.0 - 3.0 * x + 0.5 * x * x - 0.25 * x * x * x;
        let xs = [0.0, 0.3, 1.1, 1.5, 2.7, 3.0, 4.2];
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let s = CubicSpline::not_a_knot(&xs, &ys, SplineAxis::Linear).unwrap();
        for &x in &[0.1, 0.9, 2.0, 3.9, 4.2] {
            let (v, d1, d2) = s.eval(x);
            assert!((v - f(x)).abs() < 1e-12);
            assert!((d1 - (-3.0 + x - 0.75 * x * x)).abs() < 1e-11);
            assert!((d2 - (1.0 - 1.5 * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn four_knots_minimum() {
        let s = CubicSpline::not_a_knot(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 8.0, 27.0], SplineAxis::Linear).unwrap();
        assert!((s.eval(1.5).0 - 3.375).abs() < 1e-12);
        assert!(CubicSpline::not_a_knot(&[0.0, 1.0, 2.0], &[0.0, 1.0, 8.0], SplineAxis::Linear).is_err());
    }

    #[test]
    fn log_axis_chain_rule() {
        let ys: Vec<f64> = (0..400).map(|k| 0.05 * (1.01f64).powi(k)).collect();
        let vals: Vec<f64> = ys.iter().map(|y| 1.0 / y).collect();
        let s = CubicSpline::not_a_knot(&ys, &vals, SplineAxis::Log).unwrap();
        let y = 0.31;
        let (v, d1, d2) = s.eval(y);
        assert!((v - 1.0 / y).abs() < 1e-9);
        assert!((d1 + 1.0 / (y * y)).abs() < 1e-6);
        assert!((d2 - 2.0 / (y * y * y)).abs() < 1e-3);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(CubicSpline::not_a_knot(&[0.0, 2.0, 1.0, 3.0], &[0.0; 4], SplineAxis::Linear).is_err());
    }
}
