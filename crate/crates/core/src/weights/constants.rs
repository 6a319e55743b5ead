use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::affine_group::GroupElement;
use crate::error::{Error, Result};
use crate::numdiff;
use crate::quadrature::{adaptive, principal_value, Tolerance};
use crate::representation::Moment;

use super::{Structure, Weight, SQRT_2PI};

const QUAD_TOL: Tolerance<f64> = Tolerance { rel: 1e-11, abs: 1e-14, max_subdiv: 4000 };

/// Outcome of [`check_symmetry`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub max_residual: f64,
    /// Sample `(q, p)` attaining the maximum.
    pub worst: (f64, f64),
    pub tol: f64,
    pub pass: bool,
}

/// `max |ϖ(q,p) − (1/q) conj(ϖ(1/q, −qp))|` over the samples.
pub fn check_symmetry(w: &Weight, samples: &[GroupElement<f64>], tol: f64) -> Result<SymmetryReport> {
    let mut worst = (f64::NAN, f64::NAN);
    let mut max_residual = 0.0;
    for g in samples {
        let (q, p) = (g.q(), g.p());
        let a = w.eval(q, p)?;
        let b = w.eval(1.0 / q, -q * p)?.conj() / q;
        let r = (a - b).norm();
        if !(r <= max_residual) {
            max_residual = r;
            worst = (q, p);
        }
    }
    Ok(SymmetryReport { max_residual, worst, tol, pass: max_residual <= tol })
}

/// Both evaluations of `Tr M^ϖ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceCondition {
    /// `(1/√2π) ∫₀^∞ ϖ̂_p(1, −x) dx`.
    pub fourier_route: Complex64,
    /// `ϖ(1,0)/2 + (i/2π) p.v.∫ ϖ(1,p)/p dp`.
    pub pv_route: Complex64,
    pub discrepancy: f64,
}

/// `Tr M^ϖ` by the Fourier route and, as a cross-check, by the principal-value route.
pub fn trace_condition(w: &Weight) -> Result<TraceCondition> {
    let mut fourier = Complex64::new(0.0, 0.0);
    for (x, a) in w.fourier.atoms_at(1.0) {
        if x < 0.0 {
            fourier += a / SQRT_2PI;
        }
    }
    if let Some(s) = &w.fourier.smooth {
        let r = adaptive(|x: f64| s(1.0, -x), 0.0, f64::INFINITY, QUAD_TOL)?
            .into_result("trace condition, Fourier route")?;
        fourier += r.value / SQRT_2PI;
    }

    let mut failure = None;
    let f = |p: f64| match w.eval(1.0, p) {
        Ok(v) => v / p,
        Err(e) => {
            failure.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    };
    let pv_tol = Tolerance { rel: 1e-8, abs: 1e-9, max_subdiv: 4000 };
    let pv = principal_value(f, 0.0, f64::NEG_INFINITY, f64::INFINITY, pv_tol, w.p_period(1.0))
        .map_err(|e| match e {
            Error::Accuracy { context, estimate, error } => {
                Error::divergence(format!("{context}: p.v. integral did not settle (|I|≈{estimate:e}, err {error:e})"))
            }
            other => other,
        })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let pv_route = w.eval(1.0, 0.0)? * 0.5 + Complex64::new(0.0, 1.0 / (2.0 * PI)) * pv.value;
    Ok(TraceCondition { fourier_route: fourier, pv_route, discrepancy: (fourier - pv_route).norm() })
}

/// Ω_β on the requested u-grid and `d_β = Ω_β(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaConstants {
    pub beta: f64,
    pub omega_beta: Vec<(f64, Result<Complex64>)>,
    pub d_beta: Result<Complex64>,
}

/// Constants derived from a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightConstants {
    pub label: String,
    /// `Ω(u) = ∫₀^∞ (dq/q) ϖ̂_p(u, −q)`.
    pub omega: Vec<(f64, Result<Complex64>)>,
    pub betas: Vec<BetaConstants>,
    /// `c_M = √2π d₀`.
    pub c_m: Result<f64>,
    /// Ω′(1) and Ω″(1) from registered closed forms, or high-order differences otherwise.
    pub omega_prime: Result<Complex64>,
    pub omega_second: Result<Complex64>,
    pub derivatives_closed_form: bool,
    /// Ω′(1) and Ω″(1) from 5-point central differences with step 1e-3.
    pub omega_prime_fd5: Result<Complex64>,
    pub omega_second_fd5: Result<Complex64>,
}

/// Ω, Ω_β, d_β, c_M and Ω′(1), Ω″(1). Divergent entries are reported individually.
pub fn compute_constants(w: &Weight, betas: &[f64], u_grid: &[f64]) -> WeightConstants {
    let omega = u_grid.iter().map(|&u| (u, w.omega_beta(0.0, u))).collect();
    let betas = betas
        .iter()
        .map(|&beta| BetaConstants {
            beta,
            omega_beta: u_grid.iter().map(|&u| (u, w.omega_beta(beta, u))).collect(),
            d_beta: w.d_beta(beta),
        })
        .collect();
    let (omega_prime, omega_second) = match w.omega_derivatives() {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let (omega_prime_fd5, omega_second_fd5) = match fd5_omega(w) {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    WeightConstants {
        label: w.label().to_string(),
        omega,
        betas,
        c_m: w.c_m(),
        omega_prime,
        omega_second,
        derivatives_closed_form: !matches!(w.structure, Structure::Generic),
        omega_prime_fd5,
        omega_second_fd5,
    }
}

fn fd5_omega(w: &Weight) -> Result<(Complex64, Complex64)> {
    let h = 1e-3;
    let v = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|&k| w.omega_beta(0.0, 1.0 + k * h))
        .collect::<Result<Vec<_>>>()?;
    let c = w.omega_beta(0.0, 1.0)?;
    let d1 = (v[0] - v[1] * 8.0 + v[2] * 8.0 - v[3]) / (12.0 * h);
    let d2 = (-v[0] + v[1] * 16.0 - c * 30.0 + v[2] * 16.0 - v[3]) / (12.0 * h * h);
    Ok((d1, d2))
}

fn falling(x: f64, j: usize) -> f64 {
    (0..j).map(|i| x - i as f64).product()
}

impl Weight {
    /// `Ω_β(u) = ∫₀^∞ (dq/q) q^{−β} ϖ̂_p(u, −q)`; atoms integrate exactly.
    pub fn omega_beta(&self, beta: f64, u: f64) -> Result<Complex64> {
        if !(u > 0.0) {
            return Err(Error::domain(format!("Ω_β needs u > 0, got {u}")));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (x, a) in self.fourier.atoms_at(u) {
            if x < 0.0 {
                total += a * (-x).powf(-1.0 - beta);
            } else if x == 0.0 && a != Complex64::new(0.0, 0.0) {
                return Err(Error::divergence(format!("Ω_β: atom at the origin makes β = {beta} divergent")));
            }
        }
        match &self.structure {
            Structure::Mixture { components, .. } => {
                let nu = components.iter().map(|(_, psi)| psi.small_x_exponent()).fold(f64::INFINITY, f64::min);
                if !(2.0 * nu - beta > 0.0) {
                    return Err(Error::divergence(format!(
                        "Ω_β diverges at q → 0 for β = {beta} (fiducial behaves like x^{nu})"
                    )));
                }
                if u == 1.0 {
                    for (wi, psi) in components {
                        total += psi.moment(-1.0 - beta, Moment::Density)? * (SQRT_2PI * wi);
                    }
                    return Ok(total);
                }
            }
            Structure::AffineWeyl { .. } => return Ok(total),
            Structure::Generic => {}
        }
        if let Some(s) = &self.fourier.smooth {
            let h = |q: f64| s(u, -q) * q.powf(-1.0 - beta);
            preflight(|q| h(q).norm() * q, beta)?;
            let r = adaptive(h, 0.0, f64::INFINITY, QUAD_TOL)?.into_result(&format!("Ω_β at β = {beta}, u = {u}"))?;
            total += r.value;
        }
        Ok(total)
    }

    /// `d_β = Ω_β(1)`.
    pub fn d_beta(&self, beta: f64) -> Result<Complex64> {
        self.omega_beta(beta, 1.0)
    }

    /// `c_M = √2π d₀`, required real and positive.
    pub fn c_m(&self) -> Result<f64> {
        let d0 = self.d_beta(0.0)?;
        if d0.im.abs() > 1e-8 * d0.re.abs().max(1e-300) || !(d0.re > 0.0) {
            return Err(Error::Validity(format!("d_0 = {d0} is not real positive; M^ϖ does not resolve the identity")));
        }
        Ok(SQRT_2PI * d0.re)
    }

    /// `G_β^{(j)}(1)`, `j = 0..=order`, with `G_β(s) = Ω_β(1/s)/s`.
    pub fn g_derivatives(&self, beta: f64, order: usize) -> Result<Vec<Complex64>> {
        match &self.structure {
            Structure::AffineWeyl { factor } => {
                Ok((0..=order).map(|j| Complex64::new(factor * SQRT_2PI * falling(beta / 2.0, j), 0.0)).collect())
            }
            Structure::Mixture { components, .. } if order <= 2 => {
                let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
                for (wi, psi) in components {
                    let c = SQRT_2PI * wi;
                    out[0] += psi.moment(-1.0 - beta, Moment::Density)? * c;
                    if order >= 1 {
                        out[1] += psi.moment(-beta, Moment::DerivCross)? * c;
                    }
                    if order >= 2 {
                        out[2] += psi.moment(1.0 - beta, Moment::SecondCross)? * c;
                    }
                }
                Ok(out)
            }
            _ => {
                // the stencil must stay inside u > 0: s in [1 - 6h, 1 + 6h]
                let failure = RefCell::new(None);
                let g = |s: f64| match self.omega_beta(beta, 1.0 / s) {
                    Ok(v) => v / s,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        Complex64::new(f64::NAN, 0.0)
                    }
                };
                let d = numdiff::derivatives(g, 1.0, 0.05, order, 6.max(order));
                if let Some(e) = failure.into_inner() {
                    return Err(e);
                }
                let mut out = d;
                out[0] = self.omega_beta(beta, 1.0)?;
                Ok(out)
            }
        }
    }

    /// `(Ω′(1), Ω″(1))` from the derivatives of `G_0`.
    pub fn omega_derivatives(&self) -> Result<(Complex64, Complex64)> {
        let g = self.g_derivatives(0.0, 2)?;
        Ok((-g[1] - g[0], g[0] * 2.0 + g[1] * 4.0 + g[2]))
    }
}

/// Rejects integrands `h(q) dq/q` with `h = q·|integrand|` not vanishing at 0 or ∞.
fn preflight(h: impl Fn(f64) -> f64, beta: f64) -> Result<()> {
    let slope = |a: f64, b: f64| {
        let (ha, hb) = (h(a), h(b));
        if ha == 0.0 && hb == 0.0 {
            None
        } else {
            Some((hb / ha).ln() / (b / a).ln())
        }
    };
    if let Some(s) = slope(1e-12, 1e-9) {
        if !(s > 1e-3) {
            return Err(Error::divergence(format!("Ω_β integrand not integrable at q → 0 for β = {beta}")));
        }
    }
    if let Some(s) = slope(1e5, 1e6) {
        if !(s < -1e-3) && h(1e6) > 1e-300 {
            return Err(Error::divergence(format!("Ω_β integrand not integrable at q → ∞ for β = {beta}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::{BasisSpec, WaveFunction};
    use crate::specfun::gamma;
    use crate::weights::{FourierWeight, Weight};
    use approx::assert_relative_eq;

    fn samples() -> Vec<GroupElement<f64>> {
        let mut v = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let q = 0.2 * 1.45f64.powi(i);
                let p = -4.0 + 0.85 * j as f64;
                v.push(GroupElement::new(q, p).unwrap());
            }
        }
        v
    }

    #[test]
    fn symmetry_of_builtins_and_counterexamples() {
        let ws = [
            Weight::affine_weyl(),
            Weight::diagonal(2.0, 1, 0.7).unwrap(),
            Weight::thermal(1.5, 0.3).unwrap(),
            Weight::acs(WaveFunction::basis_vector(BasisSpec::new(3.0, 2).unwrap(), 1).unwrap()).unwrap(),
        ];
        for w in &ws {
            let r = check_symmetry(w, &samples(), 1e-10).unwrap();
            assert!(r.pass, "{}: {}", w.label(), r.max_residual);
        }
        let trivial = Weight::custom("1/sqrt q", |q, _| Complex64::new(q.powf(-0.5), 0.0), FourierWeight::default());
        assert!(check_symmetry(&trivial, &samples(), 1e-14).unwrap().pass);
        let bad = Weight::custom("q", |q, _| Complex64::new(q, 0.0), FourierWeight::default());
        let r = check_symmetry(&bad, &[GroupElement::new(2.0, 0.3).unwrap()], 1e-10).unwrap();
        assert!(!r.pass);
        assert_relative_eq!(r.max_residual, 1.75, epsilon = 1e-15);
    }

    #[test]
    fn affine_weyl_constants() {
        let w = Weight::affine_weyl();
        let c = compute_constants(&w, &[0.0, 1.0, -0.5, 2.0], &[0.5, 1.0, 2.0]);
        for (u, v) in &c.omega {
            assert_relative_eq!(v.as_ref().unwrap().re, SQRT_2PI / u, epsilon = 1e-14);
        }
        for b in &c.betas {
            assert_relative_eq!(b.d_beta.as_ref().unwrap().re, SQRT_2PI, epsilon = 1e-14);
        }
        assert_relative_eq!(*c.c_m.as_ref().unwrap(), 2.0 * PI, epsilon = 1e-13);
        let (o1, o2) = (c.omega_prime.unwrap(), c.omega_second.unwrap());
        assert_relative_eq!(o1.re / SQRT_2PI, -1.0, epsilon = 1e-14);
        assert_relative_eq!(o2.re / SQRT_2PI, 2.0, epsilon = 1e-14);
        assert!((c.omega_prime_fd5.unwrap().re / SQRT_2PI + 1.0).abs() < 1e-10);
    }

    #[test]
    fn acs_ground_state_constants() {
        let w = Weight::diagonal(2.0, 0, 1.0).unwrap();
        for &beta in &[0.0, 0.5, 1.0, 1.5, -1.0] {
            let d = w.d_beta(beta).unwrap();
            let expect = SQRT_2PI * gamma(2.0 - beta).unwrap() / 2.0;
            assert_relative_eq!(d.re, expect, epsilon = 1e-12);
        }
        assert!(matches!(w.d_beta(2.0), Err(Error::Divergence(_))));
        assert_relative_eq!(w.c_m().unwrap(), PI, epsilon = 1e-12);
        // the smooth quadrature route off u = 1 agrees with the exact moment route at u = 1
        let near = w.omega_beta(0.5, 1.0 + 1e-9).unwrap();
        assert!((near - w.d_beta(0.5).unwrap()).norm() < 1e-7);
    }

    #[test]
    fn mixture_derivatives_match_differences() {
        let w = Weight::thermal(3.0, 0.2).unwrap();
        let exact = w.g_derivatives(0.5, 2).unwrap();
        let numeric = {
            let generic = Weight::custom("smooth only", |_, _| Complex64::new(0.0, 0.0), w.fourier().clone());
            generic.g_derivatives(0.5, 2).unwrap()
        };
        for j in 0..=2 {
            assert!((exact[j] - numeric[j]).norm() < 1e-7 * exact[j].norm().max(1.0), "j={j}: {} vs {}", exact[j], numeric[j]);
        }
    }

    #[test]
    fn trace_conditions() {
        let aw = trace_condition(&Weight::affine_weyl()).unwrap();
        assert!((aw.fourier_route - 1.0).norm() < 1e-12);
        assert!((aw.pv_route - 1.0).norm() < 1e-6, "{}", aw.pv_route);
        let twice = trace_condition(&Weight::affine_weyl().scaled(2.0)).unwrap();
        assert!((twice.fourier_route - 2.0).norm() < 1e-12);
        let acs = trace_condition(&Weight::diagonal(2.0, 1, 0.5).unwrap()).unwrap();
        assert!((acs.fourier_route - 1.0).norm() < 1e-9, "{}", acs.fourier_route);
        assert!((acs.pv_route - 1.0).norm() < 1e-6, "{}", acs.pv_route);
        let th = trace_condition(&Weight::thermal(2.0, 0.5).unwrap()).unwrap();
        assert!((th.fourier_route - 1.0).norm() < 1e-9, "{}", th.fourier_route);
        assert!(th.discrepancy < 1e-6, "{:?}", th);
    }
}
