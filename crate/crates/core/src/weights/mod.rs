//! Weight functions ϖ(q,p) on the half-plane, their partial Fourier transforms in p,
//! and the constants Ω, Ω_β, d_β, c_M derived from them.
//!
//! Convention: `M^ϖ = ∫ C⁻¹ U(q,p) C⁻¹ ϖ(q,p) dq dp` with `C = sqrt(Q/2π)`. The weight of a
//! rank-one operator `|ψ⟩⟨ψ|` is `conj(⟨ψ|U(q,p)ψ⟩)/√q`.

mod constants;
mod sampled;
mod thermal;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::affine_group::GroupElement;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_oscillatory, integrate_with_tails, Tolerance};
use crate::representation::{
    abel_trace_closed_form, admissibility_constant, matrix_element_raw, matrix_u, BasisSpec, WaveFunction,
};

pub use constants::{
    check_symmetry, compute_constants, trace_condition, BetaConstants, SymmetryReport, TraceCondition,
    WeightConstants,
};
pub use thermal::{
    bessel_integral, bessel_integral_closed_form, poisson_kernel, thermal_kernel, thermal_resolution_chain,
    ThermalChain,
};

pub(crate) const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

pub type EvalFn = Arc<dyn Fn(f64, f64) -> Result<Complex64> + Send + Sync>;
pub type SmoothFourierFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// Dirac component `amplitude(q) δ(x − location(q))` of ϖ̂_p(q, x).
#[derive(Clone)]
pub struct Atom {
    pub location: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub amplitude: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

/// Partial Fourier transform `ϖ̂_p(q,x) = (1/√2π)∫ e^{-ipx} ϖ(q,p) dp` split into a
/// smooth part and atoms.
#[derive(Clone, Default)]
pub struct FourierWeight {
    pub smooth: Option<SmoothFourierFn>,
    pub atoms: Vec<Atom>,
}

impl FourierWeight {
    /// `(location, amplitude)` of every atom at `q`.
    pub fn atoms_at(&self, q: f64) -> Vec<(f64, Complex64)> {
        self.atoms.iter().map(|a| ((a.location)(q), (a.amplitude)(q))).collect()
    }
}

/// Fiducial vector of an ACS weight in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiducialSpec {
    /// Laguerre function `e_n^(α)` (optionally scaled).
    Laguerre {
        alpha: f64,
        #[serde(default)]
        n: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Real samples on increasing positive abscissae, cubic-spline interpolated,
    /// continued by `x^ν` towards the origin and by zero beyond the last sample.
    Sampled {
        x: Vec<f64>,
        psi: Vec<f64>,
        #[serde(default = "one")]
        small_x_exponent: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Declarative description of a builtin weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Aw,
    Diag {
        alpha: f64,
        #[serde(default)]
        m: usize,
        #[serde(default = "one")]
        s: f64,
    },
    Thermal {
        alpha: f64,
        t: f64,
    },
    Acs {
        fiducial: FiducialSpec,
    },
}

impl WeightSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("weight config: {e}")))
    }

    pub fn build(&self) -> Result<Weight> {
        builtin(self)
    }
}

#[derive(Clone)]
pub(crate) enum Structure {
    /// `ϖ_aW` times a factor.
    AffineWeyl { factor: f64 },
    /// `Σ w_i |ψ_i⟩⟨ψ_i|`; `tail` bounds the omitted weight.
    Mixture { components: Vec<(f64, WaveFunction)>, tail: f64 },
    Generic,
}

/// A weight ϖ together with its partial Fourier data.
#[derive(Clone)]
pub struct Weight {
    label: String,
    eval: EvalFn,
    fourier: FourierWeight,
    structure: Structure,
    spec: Option<WeightSpec>,
    thermal: Option<(f64, f64)>,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("label", &self.label)
            .field("atoms", &self.fourier.atoms.len())
            .field("smooth_fourier", &self.fourier.smooth.is_some())
            .finish()
    }
}

impl Weight {
    /// User weight with an explicit evaluation and optional Fourier data.
    pub fn custom(
        label: impl Into<String>,
        eval: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
        fourier: FourierWeight,
    ) -> Self {
        Weight {
            label: label.into(),
            eval: Arc::new(move |q, p| Ok(eval(q, p))),
            fourier,
            structure: Structure::Generic,
            spec: None,
            thermal: None,
        }
    }

    /// `ϖ_aW(q,p) = e^{-i√q p}/√q`, the affine-Weyl weight.
    pub fn affine_weyl() -> Self {
        Self::affine_weyl_scaled(1.0)
    }

    fn affine_weyl_scaled(c: f64) -> Self {
        let atom = Atom {
            location: Arc::new(|q: f64| -q.sqrt()),
            amplitude: Arc::new(move |q: f64| Complex64::new(c * SQRT_2PI / q.sqrt(), 0.0)),
        };
        Weight {
            label: if c == 1.0 { "aw".into() } else { format!("{c}*aw") },
            eval: Arc::new(move |q, p| {
                check_q(q)?;
                Ok(Complex64::from_polar(c / q.sqrt(), -q.sqrt() * p))
            }),
            fourier: FourierWeight { smooth: None, atoms: vec![atom] },
            structure: Structure::AffineWeyl { factor: c },
            spec: (c == 1.0).then_some(WeightSpec::Aw),
            thermal: None,
        }
    }

    /// Weight of the rank-one operator `|b_m⟩⟨b_m|` with `b_m(x) = e_m^(α)(x/s)/√s`:
    /// `conj(U_mm(q, s p))/√q`.
    pub fn diagonal(alpha: f64, m: usize, s: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("diagonal weight needs alpha > 0, got {alpha}")));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain(format!("diagonal weight needs s > 0, got {s}")));
        }
        let basis = BasisSpec::scaled(alpha, m.max(1), s)?;
        let psi = WaveFunction::basis_vector(basis, m)?;
        let eval: EvalFn = Arc::new(move |q, p| {
            check_q(q)?;
            Ok(matrix_element_raw(alpha, m, m, q, s * p).conj() / q.sqrt())
        });
        let components = vec![(1.0, psi)];
        Ok(Weight {
            label: format!("diag(alpha={alpha}, m={m}, s={s})"),
            eval,
            fourier: mixture_fourier(&components),
            structure: Structure::Mixture { components, tail: 0.0 },
            spec: Some(WeightSpec::Diag { alpha, m, s }),
            thermal: None,
        })
    }

    /// Weight of the thermal state `ρ_t = (1-t) Σ t^n |e_n⟩⟨e_n|`.
    pub fn thermal(alpha: f64, t: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("thermal weight needs alpha > 0, got {alpha}")));
        }
        if !(0.0..1.0).contains(&t) {
            return Err(Error::domain(format!("thermal parameter t = {t} must lie in [0, 1)")));
        }
        let (components, tail) = thermal_components(alpha, t)?;
        let eval: EvalFn = Arc::new(move |q, p| {
            check_q(q)?;
            Ok(abel_trace_closed_form(alpha, q, p, t).conj() * ((1.0 - t) / q.sqrt()))
        });
        let smooth: SmoothFourierFn = Arc::new(move |u, k| {
            if k >= 0.0 || u <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let x = -k;
            Complex64::new(SQRT_2PI / u * thermal_kernel(alpha, t, x, x / u), 0.0)
        });
        Ok(Weight {
            label: format!("thermal(alpha={alpha}, t={t})"),
            eval,
            fourier: FourierWeight { smooth: Some(smooth), atoms: vec![] },
            structure: Structure::Mixture { components, tail },
            spec: Some(WeightSpec::Thermal { alpha, t }),
            thermal: Some((alpha, t)),
        })
    }

    /// ACS weight of an admissible fiducial: `M^ϖ = |ψ⟩⟨ψ|`.
    pub fn acs(fiducial: WaveFunction) -> Result<Self> {
        admissibility_constant(&fiducial)?;
        let psi = fiducial.clone();
        let eval: EvalFn = match fiducial.coefficients() {
            Some((basis, coeffs)) => {
                let basis = *basis;
                let c: DVector<Complex64> = coeffs.clone();
                Arc::new(move |q, p| {
                    let g = GroupElement::new(q, p)?;
                    let u = matrix_u(&basis, g);
                    let v = c.dotc(&(&u.entries * &c));
                    Ok(v.conj() / q.sqrt())
                })
            }
            None => Arc::new(move |q, p| {
                check_q(q)?;
                let f = psi.clone();
                let env = move |v: f64| f.eval(v) * f.eval(v / q).conj() / q;
                let tol = Tolerance { rel: 1e-10, abs: 1e-13, max_subdiv: 4000 };
                let r = integrate_oscillatory(env, |v| -p * v, 0.0, f64::INFINITY, p, tol)?
                    .into_result("ACS weight evaluation")?;
                Ok(r.value)
            }),
        };
        let components = vec![(1.0, fiducial)];
        Ok(Weight {
            label: "acs".into(),
            eval,
            fourier: mixture_fourier(&components),
            structure: Structure::Mixture { components, tail: 0.0 },
            spec: None,
            thermal: None,
        })
    }

    /// `c·ϖ`.
    pub fn scaled(&self, c: f64) -> Self {
        match &self.structure {
            Structure::AffineWeyl { factor } => Self::affine_weyl_scaled(factor * c),
            _ => {
                let eval = self.eval.clone();
                let smooth = self.fourier.smooth.clone().map(|s| -> SmoothFourierFn { Arc::new(move |q, x| s(q, x) * c) });
                let atoms = self
                    .fourier
                    .atoms
                    .iter()
                    .map(|a| {
                        let amp = a.amplitude.clone();
                        Atom { location: a.location.clone(), amplitude: Arc::new(move |q| amp(q) * c) }
                    })
                    .collect();
                let structure = match &self.structure {
                    Structure::Mixture { components, tail } => Structure::Mixture {
                        components: components.iter().map(|(w, psi)| (w * c, psi.clone())).collect(),
                        tail: tail * c.abs(),
                    },
                    other => other.clone(),
                };
                Weight {
                    label: format!("{c}*{}", self.label),
                    eval: Arc::new(move |q, p| Ok(eval(q, p)? * c)),
                    fourier: FourierWeight { smooth, atoms },
                    structure,
                    spec: None,
                    thermal: None,
                }
            }
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// ϖ(q,p).
    pub fn eval(&self, q: f64, p: f64) -> Result<Complex64> {
        (self.eval)(q, p)
    }

    pub fn fourier(&self) -> &FourierWeight {
        &self.fourier
    }

    /// The builtin description, when the weight is an unscaled builtin.
    pub fn spec(&self) -> Option<&WeightSpec> {
        self.spec.as_ref()
    }

    /// `Some(factor)` for multiples of `ϖ_aW`.
    pub fn affine_weyl_factor(&self) -> Option<f64> {
        match self.structure {
            Structure::AffineWeyl { factor } => Some(factor),
            _ => None,
        }
    }

    /// Components `(w_i, ψ_i)` of `M^ϖ = Σ w_i |ψ_i⟩⟨ψ_i|` and the bound on omitted weight.
    pub fn mixture(&self) -> Option<(&[(f64, WaveFunction)], f64)> {
        match &self.structure {
            Structure::Mixture { components, tail } => Some((components.as_slice(), *tail)),
            _ => None,
        }
    }

    /// `(α, t)` for thermal weights.
    pub fn thermal_parameters(&self) -> Option<(f64, f64)> {
        self.thermal
    }

    /// Period in p of `ϖ(q, ·)` when it is purely oscillatory.
    pub(crate) fn p_period(&self, q: f64) -> Option<f64> {
        match self.structure {
            Structure::AffineWeyl { .. } => Some(2.0 * PI / q.sqrt()),
            _ => None,
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::domain(format!("q = {q} is not in the half-plane")));
    }
    Ok(())
}

fn mixture_fourier(components: &[(f64, WaveFunction)]) -> FourierWeight {
    let comps: Vec<(f64, WaveFunction)> = components.to_vec();
    let smooth: SmoothFourierFn = Arc::new(move |u, k| {
        if k >= 0.0 || u <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let x = -k;
        let s: Complex64 = comps.iter().map(|(w, psi)| psi.eval(x) * psi.eval(x / u).conj() * *w).sum();
        s * (SQRT_2PI / u)
    });
    FourierWeight { smooth: Some(smooth), atoms: vec![] }
}

/// Largest number of thermal components kept explicitly.
const THERMAL_MAX_TERMS: usize = 600;

fn thermal_components(alpha: f64, t: f64) -> Result<(Vec<(f64, WaveFunction)>, f64)> {
    let n_terms = if t == 0.0 {
        1
    } else {
        ((1e-17f64.ln() / t.ln()).ceil() as usize + 1).clamp(1, THERMAL_MAX_TERMS)
    };
    let basis = BasisSpec::new(alpha, n_terms.max(2) - 1)?;
    let mut out = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        let b = basis.with_n_max(n.max(1));
        out.push(((1.0 - t) * t.powi(n as i32), WaveFunction::basis_vector(b, n)?));
    }
    Ok((out, t.powi(n_terms as i32)))
}

/// Builds a builtin weight from its description.
pub fn builtin(spec: &WeightSpec) -> Result<Weight> {
    match spec {
        WeightSpec::Aw => Ok(Weight::affine_weyl()),
        WeightSpec::Diag { alpha, m, s } => Weight::diagonal(*alpha, *m, *s),
        WeightSpec::Thermal { alpha, t } => Weight::thermal(*alpha, *t),
        WeightSpec::Acs { fiducial } => {
            let psi = fiducial_wave(fiducial)?;
            let mut w = Weight::acs(psi)?;
            w.label = match fiducial {
                FiducialSpec::Laguerre { alpha, n, .. } => format!("acs(e_{n}^({alpha}))"),
                FiducialSpec::Sampled { .. } => "acs(sampled)".into(),
            };
            w.spec = Some(spec.clone());
            Ok(w)
        }
    }
}

/// Wave function described by a fiducial spec.
pub fn fiducial_wave(spec: &FiducialSpec) -> Result<WaveFunction> {
    match spec {
        FiducialSpec::Laguerre { alpha, n, scale } => {
            let basis = BasisSpec::scaled(*alpha, (*n).max(1), *scale)?;
            WaveFunction::basis_vector(basis, *n)
        }
        FiducialSpec::Sampled { x, psi, small_x_exponent } => {
            let spline = Arc::new(sampled::CubicSpline::new(x.clone(), psi.clone())?);
            let nu = *small_x_exponent;
            let (x0, y0) = spline.first();
            let xl = spline.last_x();
            let s1 = spline.clone();
            let s2 = spline;
            let f = move |t: f64| {
                if t <= 0.0 || t > xl {
                    0.0
                } else if t < x0 {
                    y0 * (t / x0).powf(nu)
                } else {
                    s1.eval(t).0
                }
            };
            let df = move |t: f64| {
                if t <= 0.0 || t > xl {
                    0.0
                } else if t < x0 {
                    y0 * nu / x0 * (t / x0).powf(nu - 1.0)
                } else {
                    s2.eval(t).1
                }
            };
            WaveFunction::from_real_fn_with_deriv(f, df, nu)
        }
    }
}

/// Smooth part and atoms of ϖ̂_p(q, x).
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFourier {
    pub smooth: Complex64,
    pub smooth_error: f64,
    /// `(location, amplitude)` pairs.
    pub atoms: Vec<(f64, Complex64)>,
    pub closed_form: bool,
}

/// `ϖ̂_p(q,x)`: registered closed forms when available, otherwise quadrature of the smooth part.
pub fn partial_fourier(w: &Weight, q: f64, x: f64) -> Result<PartialFourier> {
    check_q(q)?;
    let atoms = w.fourier.atoms_at(q);
    if let Some(s) = &w.fourier.smooth {
        return Ok(PartialFourier { smooth: s(q, x), smooth_error: 0.0, atoms, closed_form: true });
    }
    if !atoms.is_empty() {
        return Ok(PartialFourier { smooth: Complex64::new(0.0, 0.0), smooth_error: 0.0, atoms, closed_form: true });
    }
    let (v, e) = partial_fourier_numeric(w, q, x)?;
    Ok(PartialFourier { smooth: v, smooth_error: e, atoms, closed_form: false })
}

/// `(1/√2π)∫ e^{-ipx} ϖ(q,p) dp` by quadrature, ignoring any registered Fourier data.
pub fn partial_fourier_numeric(w: &Weight, q: f64, x: f64) -> Result<(Complex64, f64)> {
    check_q(q)?;
    let mut failure = None;
    let f = |p: f64| match w.eval(q, p) {
        Ok(v) => v * Complex64::from_polar(1.0, -p * x),
        Err(e) => {
            failure.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    };
    let period = if x != 0.0 { Some(2.0 * PI / x.abs()) } else { None };
    let tol = Tolerance { rel: 1e-9, abs: 1e-12, max_subdiv: 4000 };
    let r = integrate_with_tails(f, f64::NEG_INFINITY, f64::INFINITY, tol, period)?
        .into_result("partial Fourier transform of the weight")?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((r.value / SQRT_2PI, r.error / SQRT_2PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_values() {
        let aw = Weight::affine_weyl();
        let v = aw.eval(4.0, PI).unwrap();
        assert_relative_eq!(v.re, 0.5, epsilon = 1e-15);
        assert!(v.im.abs() < 1e-15);
        let d = Weight::diagonal(2.0, 0, 1.0).unwrap();
        assert_relative_eq!(d.eval(1.0, 0.0).unwrap().re, 1.0, epsilon = 1e-14);
        assert!(Weight::thermal(2.0, 1.0).is_err());
        assert!(Weight::thermal(2.0, -0.1).is_err());
    }

    #[test]
    fn thermal_at_zero_is_ground_projector() {
        let alpha = 2.5;
        let w = Weight::thermal(alpha, 0.0).unwrap();
        for &(q, p) in &[(0.5f64, 0.3f64), (2.0, -1.0), (1.3, 4.0)] {
            let expect = Complex64::new(2f64.powf(alpha + 1.0) * q.powf(alpha / 2.0), 0.0)
                / Complex64::new(q + 1.0, 2.0 * q * p).powf(alpha + 1.0);
            assert!((w.eval(q, p).unwrap() - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn thermal_weight_matches_partial_sums() {
        let (alpha, t) = (1.5, 0.4);
        let w = Weight::thermal(alpha, t).unwrap();
        for &(q, p) in &[(0.7, 0.2), (1.8, -0.6)] {
            let d = crate::representation::diagonal_elements_raw(alpha, 80, q, p);
            let s: Complex64 = d.iter().enumerate().map(|(n, u)| u.conj() * t.powi(n as i32)).sum::<Complex64>()
                * ((1.0 - t) / q.sqrt());
            assert!((w.eval(q, p).unwrap() - s).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_fourier_forms_match_quadrature() {
        let w = Weight::diagonal(2.0, 1, 1.0).unwrap();
        for &(q, x) in &[(1.0, -0.8), (1.7, -2.0), (0.6, 0.5)] {
            let closed = partial_fourier(&w, q, x).unwrap().smooth;
            let (num, _) = partial_fourier_numeric(&w, q, x).unwrap();
            assert!((closed - num).norm() < 1e-7, "q={q} x={x}: {closed} vs {num}");
        }
        let th = Weight::thermal(2.0, 0.5).unwrap();
        for &(q, x) in &[(1.0, -1.1), (2.5, -0.4)] {
            let closed = partial_fourier(&th, q, x).unwrap().smooth;
            let (num, _) = partial_fourier_numeric(&th, q, x).unwrap();
            assert!((closed - num).norm() < 1e-7, "q={q} x={x}: {closed} vs {num}");
        }
    }

    #[test]
    fn aw_fourier_is_an_atom() {
        let pf = partial_fourier(&Weight::affine_weyl(), 4.0, 0.3).unwrap();
        assert_eq!(pf.smooth, Complex64::new(0.0, 0.0));
        assert_eq!(pf.atoms.len(), 1);
        assert_eq!(pf.atoms[0].0, -2.0);
        assert_relative_eq!(pf.atoms[0].1.re, SQRT_2PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn config_round_trip() {
        let s = WeightSpec::from_json(r#"{"kind":"thermal","alpha":2,"t":0.5}"#).unwrap();
        assert_eq!(s, WeightSpec::Thermal { alpha: 2.0, t: 0.5 });
        let a = WeightSpec::from_json(r#"{"kind":"acs","fiducial":{"laguerre":{"alpha":2}}}"#).unwrap();
        let w = a.build().unwrap();
        assert_eq!(w.spec(), Some(&a));
        assert!(WeightSpec::from_json(r#"{"kind":"bogus"}"#).is_err());
    }

    #[test]
    fn sampled_fiducial_matches_laguerre() {
        let x: Vec<f64> = (1..=3000).map(|i| i as f64 * 0.01).collect();
        let psi: Vec<f64> = x.iter().map(|&t| t * (-t / 2.0).exp() / 2f64.sqrt()).collect();
        let spec = FiducialSpec::Sampled { x, psi, small_x_exponent: 1.0 };
        let w = fiducial_wave(&spec).unwrap();
        assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-6);
        let acs = Weight::acs(w).unwrap();
        let lag = Weight::diagonal(2.0, 0, 1.0).unwrap();
        let a = acs.eval(1.5, 0.7).unwrap();
        let b = lag.eval(1.5, 0.7).unwrap();
        assert!((a - b).norm() < 1e-6, "{a} vs {b}");
    }
}
