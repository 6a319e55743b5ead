use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, Tolerance};
use crate::representation::matrix_element_raw;
use crate::specfun::{bessel_i_scaled, laguerre_functions_upto, ln_gamma};

/// Kernel of `ρ_t = (1-t) Σ t^n |e_n⟩⟨e_n|`:
/// `t^{-α/2} e^{-(1+t)(x+y)/(2(1-t))} I_α(2√(txy)/(1-t))`.
pub fn thermal_kernel(alpha: f64, t: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        let lg = ln_gamma(alpha + 1.0).unwrap_or(f64::INFINITY);
        return (0.5 * alpha * (x * y).ln() - 0.5 * (x + y) - lg).exp();
    }
    let z = 2.0 * (t * x * y).sqrt() / (1.0 - t);
    let Ok(i) = bessel_i_scaled(alpha, z) else {
        return f64::NAN;
    };
    let expo = -0.5 * alpha * t.ln() - (1.0 + t) * (x + y) / (2.0 * (1.0 - t)) + z;
    i * expo.exp()
}

/// Right side of the Laguerre Poisson-kernel identity:
/// `Σ n!/Γ(n+α+1) L_n(x) L_n(y) t^n = (xyt)^{-α/2}/(1-t) e^{-(x+y)t/(1-t)} I_α(2√(xyt)/(1-t))`.
pub fn poisson_kernel(alpha: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(0.0 < t && t < 1.0) || !(x > 0.0 && y > 0.0) {
        return Err(Error::domain("Poisson kernel needs 0 < t < 1 and x, y > 0"));
    }
    let z = 2.0 * (x * y * t).sqrt() / (1.0 - t);
    let i = bessel_i_scaled(alpha, z)?;
    let expo = -0.5 * alpha * (x * y * t).ln() - (x + y) * t / (1.0 - t) + z;
    Ok(i * expo.exp() / (1.0 - t))
}

/// `∫₀^∞ (dx/x) e^{-γx} I_α(μx)` by quadrature, `γ > μ > 0`, `α > 0`.
pub fn bessel_integral(alpha: f64, gamma: f64, mu: f64) -> Result<f64> {
    if !(alpha > 0.0 && mu > 0.0 && gamma > mu) {
        return Err(Error::divergence(format!(
            "∫ e^(-γx) I_α(μx) dx/x needs α > 0 and γ > μ > 0 (α={alpha}, γ={gamma}, μ={mu})"
        )));
    }
    let tol = Tolerance { rel: 1e-12, abs: 1e-15, max_subdiv: 4000 };
    let mut failure = None;
    let r = adaptive(
        |x: f64| match bessel_i_scaled(alpha, mu * x) {
            Ok(i) => i * (-(gamma - mu) * x).exp() / x,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        f64::INFINITY,
        tol,
    )?
    .into_result("Bessel integral")?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value)
}

/// `(1/α)[γ/μ - sqrt(γ²/μ² - 1)]^α`.
pub fn bessel_integral_closed_form(alpha: f64, gamma: f64, mu: f64) -> f64 {
    let r = gamma / mu;
    (r - (r * r - 1.0).sqrt()).powf(alpha) / alpha
}

/// Three independent evaluations of the resolution constant `c_ρ` of the thermal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalChain {
    /// `∫ ⟨e_0|ρ_t(q,p)|e_0⟩ dq dp` by two-dimensional quadrature.
    pub direct: f64,
    /// `2π(1-t) ∫ (dx/x) Σ t^n e_n(x)²` with the series summed under the integral.
    pub series: f64,
    /// `2π t^{-α/2} ∫ (dx/x) e^{-(1+t)x/(1-t)} I_α(2√t x/(1-t))`.
    pub bessel: f64,
    /// `2π/α`.
    pub exact: f64,
}

impl ThermalChain {
    pub fn max_deviation(&self) -> f64 {
        [self.direct, self.series, self.bessel].iter().map(|v| (v - self.exact).abs()).fold(0.0, f64::max)
    }
}

/// `|⟨e_0|U(q,p)|e_n⟩|²` is geometric in n: `|U_00|² (n+α choose n) ρ^n`.
fn ground_row_density(alpha: f64, t: f64, q: f64, p: f64) -> f64 {
    let u00 = matrix_element_raw(alpha, 0, 0, q, p).norm_sqr();
    if u00 == 0.0 {
        return 0.0;
    }
    let u01 = matrix_element_raw(alpha, 0, 1, q, p).norm_sqr();
    let rho = u01 / ((1.0 + alpha) * u00);
    (1.0 - t) * u00 * (1.0 - t * rho).powf(-alpha - 1.0)
}

/// Evaluates the chain of expressions for `c_ρ` at `(α, t)`.
pub fn thermal_resolution_chain(alpha: f64, t: f64) -> Result<ThermalChain> {
    if !(alpha > 0.0) {
        return Err(Error::divergence(format!("thermal resolution constant diverges for alpha = {alpha} <= 0")));
    }
    if !(0.0 < t && t < 1.0) {
        return Err(Error::domain(format!("thermal parameter t = {t} must lie in (0, 1)")));
    }
    let two_pi = 2.0 * PI;

    let inner_tol = Tolerance { rel: 1e-11, abs: 1e-15, max_subdiv: 2000 };
    let outer_tol = Tolerance { rel: 1e-9, abs: 1e-13, max_subdiv: 2000 };
    let mut failure = None;
    let direct = adaptive(
        |q: f64| {
            if q == 0.0 {
                return 0.0;
            }
            match adaptive(|p: f64| ground_row_density(alpha, t, q, p), f64::NEG_INFINITY, f64::INFINITY, inner_tol)
                .and_then(|r| r.into_result("thermal resolution, inner integral"))
            {
                Ok(r) => r.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        f64::INFINITY,
        outer_tol,
    )?
    .into_result("thermal resolution, outer integral")?
    .value;
    if let Some(e) = failure {
        return Err(e);
    }

    let n_terms = ((1e-18f64.ln() / t.ln()).ceil() as usize).max(2);
    let series = adaptive(
        |x: f64| {
            if x == 0.0 {
                return 0.0;
            }
            let e = laguerre_functions_upto(n_terms, alpha, x).unwrap_or_default();
            let mut tn = 1.0;
            let mut s = 0.0;
            for v in e {
                s += tn * v * v;
                tn *= t;
            }
            s / x
        },
        0.0,
        f64::INFINITY,
        Tolerance { rel: 1e-11, abs: 1e-15, max_subdiv: 4000 },
    )?
    .into_result("thermal resolution, series line")?
    .value
        * two_pi
        * (1.0 - t);

    let gamma = (1.0 + t) / (1.0 - t);
    let mu = 2.0 * t.sqrt() / (1.0 - t);
    let bessel = two_pi * t.powf(-alpha / 2.0) * bessel_integral(alpha, gamma, mu)?;

    Ok(ThermalChain { direct, series, bessel, exact: two_pi / alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::laguerre;

    #[test]
    fn poisson_kernel_partial_sums() {
        for &alpha in &[0.5, 2.0, 3.0] {
            for &t in &[0.1f64, 0.3, 0.5] {
                for &(x, y) in &[(0.4, 1.2), (2.0, 3.5), (5.0, 0.7)] {
                    let mut s = 0.0;
                    for n in 0..=80usize {
                        let c = (ln_gamma(n as f64 + 1.0).unwrap() - ln_gamma(n as f64 + alpha + 1.0).unwrap()).exp();
                        s += c * laguerre(n, alpha, x) * laguerre(n, alpha, y) * t.powi(n as i32);
                    }
                    let k = poisson_kernel(alpha, t, x, y).unwrap();
                    assert!(((s - k) / k).abs() < 1e-6, "α={alpha} t={t} x={x} y={y}: {s} vs {k}");
                }
            }
        }
    }

    #[test]
    fn thermal_kernel_is_weighted_poisson_kernel() {
        let (alpha, t, x, y) = (1.5, 0.4, 0.9, 2.2);
        let p = poisson_kernel(alpha, t, x, y).unwrap();
        let expect = (1.0 - t) * (x * y).powf(alpha / 2.0) * (-(x + y) / 2.0).exp() * p;
        assert!((thermal_kernel(alpha, t, x, y) - expect).abs() < 1e-14);
    }

    #[test]
    fn ground_row_is_geometric() {
        let (alpha, t, q, p) = (2.0, 0.5f64, 1.7, -0.4);
        let direct: f64 = (0..200)
            .map(|n| (1.0 - t) * t.powi(n as i32) * matrix_element_raw(alpha, 0, n, q, p).norm_sqr())
            .sum();
        assert!((ground_row_density(alpha, t, q, p) - direct).abs() < 1e-13);
    }

    #[test]
    fn bessel_integral_identity() {
        for &(a, g, m) in &[(1.0, 2.0, 1.0), (2.5, 3.0, 0.4), (0.7, 1.2, 1.1)] {
            let v = bessel_integral(a, g, m).unwrap();
            assert!((v - bessel_integral_closed_form(a, g, m)).abs() < 1e-8);
        }
    }

    #[test]
    fn resolution_chain_gives_two_pi_over_alpha() {
        for &(a, t) in &[(1.0, 0.2), (2.0, 0.5), (3.0, 0.8)] {
            let c = thermal_resolution_chain(a, t).unwrap();
            assert!(c.max_deviation() < 1e-6, "{c:?}");
        }
    }
}
