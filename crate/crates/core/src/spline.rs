//! Natural cubic spline interpolation over strictly increasing knots.

use crate::error::{Error, Result};

/// Interpolating natural cubic spline: passes through every knot, has
/// continuous first and second derivatives, and zero second derivative at
/// both ends. Second derivatives at the knots come from the tridiagonal
/// system solved once at construction.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivative of the spline at each knot.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: &[f64], ys: &[f64]) -> Result<CubicSpline> {
        let n = xs.len();
        if n != ys.len() {
            return Err(Error::Shape(format!(
                "spline needs matching knot arrays, got {} xs and {} ys",
                n,
                ys.len()
            )));
        }
        if n < 2 {
            return Err(Error::Validation(format!(
                "spline needs at least 2 knots, got {n}"
            )));
        }
        for w in xs.windows(2) {
            if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Validation(format!(
                    "spline knots must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite spline knot".into()));
        }

        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas solve for interior second derivatives; natural ends fix
            // m[0] = m[n-1] = 0 so the system is (n-2) x (n-2).
            let k = n - 2;
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0
                    * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
            }
            // forward elimination: sub-diagonal h[i], super-diagonal h[i+1]
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }

        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    /// Evaluate at `x`, clamped to the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        // index of the segment [xs[i], xs[i+1]] containing x
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = self.xs[i + 1] - x;
        let b = x - self.xs[i];
        (self.m[i] * a * a * a + self.m[i + 1] * b * b * b) / (6.0 * h)
            + (self.ys[i] / h - self.m[i] * h / 6.0) * a
            + (self.ys[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }

    pub fn knot_count(&self) -> usize {
        self.xs.len()
    }
}
