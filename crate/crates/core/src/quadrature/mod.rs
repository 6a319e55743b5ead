//! Half-line, oscillatory and principal-value quadrature.

mod gauss;
mod kronrod;
mod oscillatory;
mod pv;

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use gauss::{gauss_laguerre, gauss_legendre, GaussRule};
pub use kronrod::{adaptive, adaptive_finite};
pub use oscillatory::{integrate_oscillatory, oscillatory_tail, wynn_epsilon};
pub use pv::{integrate_with_tails, principal_value};

/// Values a quadrature can accumulate: real or complex scalars.
pub trait QuadValue<T: Real>:
    Copy + Debug + Send + Sync + Add<Output = Self> + Sub<Output = Self> + AddAssign + Mul<T, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> T;
    fn is_finite_value(self) -> bool;
    fn split(self) -> (T, T);
    fn join(re: T, im: T) -> Self;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(self) -> T {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    fn split(self) -> (T, T) {
        (self, T::zero())
    }
    fn join(re: T, _im: T) -> Self {
        re
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(self) -> T {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn split(self) -> (T, T) {
        (self.re, self.im)
    }
    fn join(re: T, im: T) -> Self {
        Complex::new(re, im)
    }
}

/// Stopping rule for adaptive schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub rel: T,
    pub abs: T,
    pub max_subdiv: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Tolerance { rel: T::lit(1e-9), abs: T::lit(1e-12), max_subdiv: 2000 }
    }
}

impl<T: Real> Tolerance<T> {
    pub fn new(rel: T, abs: T) -> Self {
        Tolerance { rel, abs, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel > T::zero() && self.abs > T::zero()) || self.max_subdiv == 0 {
            return Err(Error::config("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Result of a quadrature with an a posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T, V> {
    pub value: V,
    pub error: T,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T: Real, V: QuadValue<T>> Estimate<T, V> {
    pub fn exact(value: V) -> Self {
        Estimate { value, error: T::zero(), evaluations: 0, converged: true }
    }

    pub fn combine(self, other: Self) -> Self {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    /// Turns a non-converged estimate into an accuracy error carrying the best estimate.
    pub fn into_result(self, context: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Accuracy {
                estimate: self.value.magnitude().to_f64_lossy(),
                error: self.error.to_f64_lossy(),
                context: context.to_string(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme<T> {
    /// `absorb_weight = false`: the integrand is `g` in `∫ g(x) e^{-(x-lo)} dx`.
    /// `absorb_weight = true`: the integrand already contains the decay.
    GaussLaguerre { n_nodes: usize, absorb_weight: bool },
    Adaptive(Tolerance<T>),
    Oscillatory { freq_hint: T, tol: Tolerance<T> },
}

/// Integration scheme plus domain `(lo, hi)`, `hi` possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec<T> {
    pub scheme: Scheme<T>,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> QuadSpec<T> {
    pub fn half_line() -> Self {
        QuadSpec { scheme: Scheme::Adaptive(Tolerance::default()), lo: T::zero(), hi: T::infinity() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo >= T::zero()) || !(self.lo < self.hi) {
            return Err(Error::config(format!("invalid half-line domain ({}, {})", self.lo, self.hi)));
        }
        match self.scheme {
            Scheme::GaussLaguerre { n_nodes, .. } => {
                if n_nodes == 0 {
                    return Err(Error::config("Gauss-Laguerre needs at least one node"));
                }
                if self.hi.is_finite() {
                    return Err(Error::config("Gauss-Laguerre needs an infinite upper limit"));
                }
                Ok(())
            }
            Scheme::Adaptive(tol) | Scheme::Oscillatory { tol, .. } => tol.validate(),
        }
    }
}

/// Integrates over a sub-interval of the half line according to `spec`.
pub fn integrate_halfline<T: Real, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    spec: &QuadSpec<T>,
) -> Result<Estimate<T, V>> {
    spec.validate()?;
    match spec.scheme {
        Scheme::GaussLaguerre { n_nodes, absorb_weight } => {
            let lo = spec.lo;
            let mut run = |n: usize| -> Result<V> {
                let rule = gauss_laguerre(n, 0.0)?;
                let mut out = V::zero();
                for (i, &x) in rule.nodes.iter().enumerate() {
                    let w = if absorb_weight { rule.absorbed_weights[i] } else { rule.weights[i] };
                    let v = f(lo + T::lit(x));
                    if !v.is_finite_value() {
                        if w == 0.0 {
                            continue;
                        }
                        return Err(Error::Evaluation { at: (lo + T::lit(x)).to_f64_lossy() });
                    }
                    out += v * T::lit(w);
                }
                Ok(out)
            };
            let value = run(n_nodes)?;
            let check = run(n_nodes + n_nodes / 2 + 1)?;
            Ok(Estimate {
                value,
                error: (value - check).magnitude(),
                evaluations: 2 * n_nodes + n_nodes / 2 + 1,
                converged: true,
            })
        }
        Scheme::Adaptive(tol) => adaptive(f, spec.lo, spec.hi, tol)?.into_result("adaptive quadrature"),
        Scheme::Oscillatory { freq_hint, tol } => {
            let period = if freq_hint == T::zero() { None } else { Some(T::lit(2.0) * T::PI() / freq_hint.abs()) };
            integrate_with_tails(f, spec.lo, spec.hi, tol, period)?.into_result("oscillatory quadrature")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel, BesselKind};
    use approx::assert_relative_eq;

    #[test]
    fn spec_examples() {
        let spec = QuadSpec::<f64>::half_line();
        let r = integrate_halfline(|x: f64| (-x).exp(), &spec).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
        let r = integrate_halfline(|x: f64| (-x).exp() * x, &spec).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bessel_integral_closed_form() {
        // ∫ (1/x) e^{-γx} I_α(μx) dx = (1/α)[γ/μ - sqrt(γ²/μ² - 1)]^α
        let (g, mu, a) = (1.5_f64, 1.0_f64, 2.0_f64);
        let want = (g / mu - (g * g / (mu * mu) - 1.0).sqrt()).powf(a) / a;
        assert_relative_eq!(want, 0.072_949_016_875_157_97, max_relative = 1e-12);
        let f = |x: f64| {
            let (i, _) = crate::specfun::bessel_ik_scaled(a, mu * x).unwrap();
            // e^{-γx} I_α(μx) = e^{-(γ-μ)x} (e^{-μx} I_α(μx))
            (-(g - mu) * x).exp() * i / x
        };
        let r = integrate_halfline(f, &QuadSpec::half_line()).unwrap();
        assert!((r.value - want).abs() < 1e-8, "{}", r.value);
        assert!(bessel(BesselKind::I, a, 1.0).is_ok());
    }

    #[test]
    fn gauss_laguerre_and_adaptive_agree() {
        let gl = QuadSpec { scheme: Scheme::GaussLaguerre { n_nodes: 40, absorb_weight: false }, lo: 0.0, hi: f64::INFINITY };
        let g = |x: f64| 1.0 / (1.0 + x * x);
        let a = integrate_halfline(|x: f64| g(x) * (-x).exp(), &QuadSpec::half_line()).unwrap();
        let b = integrate_halfline(g, &gl).unwrap();
        assert!((a.value - b.value).abs() <= a.error + b.error + 1e-9);
        let absorbed = QuadSpec { scheme: Scheme::GaussLaguerre { n_nodes: 40, absorb_weight: true }, ..gl };
        let c = integrate_halfline(|x: f64| (-x).exp() * x.powi(3), &absorbed).unwrap();
        assert_relative_eq!(c.value, 6.0, max_relative = 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let bad = QuadSpec { scheme: Scheme::Adaptive(Tolerance::default()), lo: 2.0, hi: 1.0 };
        assert!(integrate_halfline(|x: f64| x, &bad).is_err());
        let bad = QuadSpec { scheme: Scheme::Adaptive(Tolerance::new(0.0, 1e-3)), lo: 0.0, hi: 1.0 };
        assert!(integrate_halfline(|x: f64| x, &bad).is_err());
        let bad = QuadSpec { scheme: Scheme::GaussLaguerre { n_nodes: 5, absorb_weight: false }, lo: 0.0, hi: 1.0 };
        assert!(integrate_halfline(|x: f64| x, &bad).is_err());
    }

    #[test]
    fn oscillatory_scheme() {
        let spec = QuadSpec { scheme: Scheme::Oscillatory { freq_hint: 1.0, tol: Tolerance::default() }, lo: 1.0, hi: f64::INFINITY };
        let r = integrate_halfline(|x: f64| x.cos() / x, &spec).unwrap();
        // -Ci(1)
        assert_relative_eq!(r.value, -0.337_403_922_900_968_1, max_relative = 1e-9);
    }
}
