use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::laguerre_functions_upto;

/// Truncated Laguerre basis `b_n(x) = e_n^(α)(x/s)/sqrt(s)`, `n = 0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub alpha: f64,
    pub n_max: usize,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl BasisSpec {
    pub fn new(alpha: f64, n_max: usize) -> Result<Self> {
        Self::scaled(alpha, n_max, 1.0)
    }

    pub fn scaled(alpha: f64, n_max: usize, scale: f64) -> Result<Self> {
        let b = BasisSpec { alpha, n_max, scale };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > -1.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!("basis parameter alpha = {} must exceed -1", self.alpha)));
        }
        if self.n_max < 1 {
            return Err(Error::domain("basis truncation n_max must be at least 1"));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::domain(format!("basis scale {} must be positive", self.scale)));
        }
        Ok(())
    }

    /// Matrix dimension `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        BasisSpec { n_max, ..*self }
    }

    /// All basis functions at `x >= 0`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        let norm = self.scale.sqrt().recip();
        laguerre_functions_upto(self.n_max, self.alpha, x / self.scale)
            .expect("validated basis")
            .into_iter()
            .map(|v| v * norm)
            .collect()
    }

    /// Basis functions and their derivatives at `x > 0`.
    pub fn eval_all_with_deriv(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let s = self.scale;
        let y = x / s;
        let a = self.alpha;
        let e = laguerre_functions_upto(self.n_max, a, y).expect("validated basis");
        // e_n' = (α/(2y) - 1/2) e_n - c_n Σ_{k<n} e_k / c_k, c_k = sqrt(k!/Γ(k+α+1))
        let mut d = Vec::with_capacity(e.len());
        let mut acc = 0.0; // Σ_{k<n} e_k / c_k, carried in units of c_n
        for (n, &en) in e.iter().enumerate() {
            if n > 0 {
                // rescale from c_{n-1} units to c_n units, then add e_{n-1}
                let ratio = (n as f64 / (n as f64 + a)).sqrt();
                acc = (acc + e[n - 1]) * ratio;
            }
            d.push((a / (2.0 * y) - 0.5) * en - acc);
        }
        let norm = s.sqrt().recip();
        (
            e.into_iter().map(|v| v * norm).collect(),
            d.into_iter().map(|v| v * norm / s).collect(),
        )
    }

    /// Basis functions with first and second derivatives at `x > 0`.
    pub fn eval_all_d2(&self, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (e, d) = self.eval_all_with_deriv(x);
        let s = self.scale;
        let y = x / s;
        let a = self.alpha;
        // y e'' + e' + (n + (α+1)/2 - y/4 - α²/(4y)) e = 0 in the variable y = x/s
        let d2 = e
            .iter()
            .zip(&d)
            .enumerate()
            .map(|(n, (&en, &dn))| {
                let c = n as f64 + 0.5 * (a + 1.0) - 0.25 * y - 0.25 * a * a / y;
                -(dn * s + c * en) / (y * s * s)
            })
            .collect();
        (e, d, d2)
    }
}
