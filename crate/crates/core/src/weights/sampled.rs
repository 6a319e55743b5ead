use crate::error::{Error, Result};

/// Natural cubic spline through `(x_i, y_i)`.
#[derive(Debug, Clone)]
pub(crate) struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub(crate) fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::config("a sampled fiducial needs at least 3 points and matching lengths"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || !(x[0] > 0.0) {
            return Err(Error::config("sample abscissae must be positive and strictly increasing"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite sample"));
        }
        // tridiagonal system for the second derivatives, m_0 = m_{n-1} = 0
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(CubicSpline { x, y, m })
    }

    pub(crate) fn first(&self) -> (f64, f64) {
        (self.x[0], self.y[0])
    }

    pub(crate) fn last_x(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Value and derivative inside `[x_0, x_last]`.
    pub(crate) fn eval(&self, t: f64) -> (f64, f64) {
        let x = &self.x;
        let i = match x.partition_point(|&v| v <= t) {
            0 => 0,
            k => (k - 1).min(x.len() - 2),
        };
        let h = x[i + 1] - x[i];
        let a = (x[i + 1] - t) / h;
        let b = (t - x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        (v, dv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let x: Vec<f64> = (1..=400).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|&t| t * (-t).exp()).collect();
        let s = CubicSpline::new(x, y).unwrap();
        let (v, dv) = s.eval(3.333);
        assert!((v - 3.333 * (-3.333f64).exp()).abs() < 1e-6);
        assert!((dv - (1.0 - 3.333) * (-3.333f64).exp()).abs() < 1e-4);
        assert!(CubicSpline::new(vec![1.0, 1.0, 2.0], vec![0.0; 3]).is_err());
    }
}
