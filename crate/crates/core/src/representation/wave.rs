use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, gauss_laguerre, Tolerance};
use crate::specfun::laguerre_functions_upto;

use super::BasisSpec;

type Func = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Laguerre { basis: BasisSpec, coeffs: DVector<Complex64> },
    Callable { f: Func, deriv: Option<Func> },
}

/// A vector of L²(ℝ₊*, dx): either a coefficient vector in a Laguerre basis or a callable.
#[derive(Clone)]
pub struct WaveFunction {
    repr: Repr,
    /// Exponent ν with |ψ(x)| ~ x^ν as x → 0⁺.
    small_x_exponent: f64,
    norm: f64,
    real: bool,
}

/// Integrand of [`WaveFunction::moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    /// `|ψ|²`
    Density,
    /// `ψ conj(ψ')`
    DerivCross,
    /// `|ψ'|²`
    DerivDensity,
    /// `ψ conj(ψ'')`
    SecondCross,
}

impl Moment {
    fn derivative_order(self) -> f64 {
        match self {
            Moment::Density => 0.0,
            Moment::DerivCross => 1.0,
            Moment::DerivDensity | Moment::SecondCross => 2.0,
        }
    }
}

impl fmt::Debug for WaveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Laguerre { basis, coeffs } => f
                .debug_struct("WaveFunction::Laguerre")
                .field("basis", basis)
                .field("coeffs", &coeffs.as_slice())
                .field("norm", &self.norm)
                .finish(),
            Repr::Callable { .. } => f
                .debug_struct("WaveFunction::Callable")
                .field("small_x_exponent", &self.small_x_exponent)
                .field("norm", &self.norm)
                .finish(),
        }
    }
}

const NORM_TOL: Tolerance<f64> = Tolerance { rel: 1e-11, abs: 1e-14, max_subdiv: 4000 };

impl WaveFunction {
    pub fn from_coeffs(basis: BasisSpec, coeffs: DVector<Complex64>) -> Result<Self> {
        basis.validate()?;
        if coeffs.len() != basis.dim() {
            return Err(Error::config(format!(
                "coefficient vector has length {}, basis needs {}",
                coeffs.len(),
                basis.dim()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("non-finite coefficient"));
        }
        let norm = coeffs.norm();
        let real = coeffs.iter().all(|c| c.im == 0.0);
        Ok(WaveFunction { repr: Repr::Laguerre { basis, coeffs }, small_x_exponent: basis.alpha / 2.0, norm, real })
    }

    /// The basis vector `b_n`.
    pub fn basis_vector(basis: BasisSpec, n: usize) -> Result<Self> {
        if n > basis.n_max {
            return Err(Error::domain(format!("index {n} exceeds basis truncation {}", basis.n_max)));
        }
        let mut c = DVector::zeros(basis.dim());
        c[n] = Complex64::new(1.0, 0.0);
        Self::from_coeffs(basis, c)
    }

    /// Wraps a callable. `small_x_exponent` declares the behaviour x^ν at the origin;
    /// the norm is computed by quadrature and must be finite.
    pub fn from_fn(
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        small_x_exponent: f64,
    ) -> Result<Self> {
        Self::build_callable(Arc::new(f), None, small_x_exponent)
    }

    /// Like [`from_fn`](Self::from_fn) with an exact derivative.
    pub fn from_fn_with_deriv(
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        small_x_exponent: f64,
    ) -> Result<Self> {
        Self::build_callable(Arc::new(f), Some(Arc::new(deriv)), small_x_exponent)
    }

    /// Real callable convenience constructor.
    pub fn from_real_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static, small_x_exponent: f64) -> Result<Self> {
        let mut w = Self::from_fn(move |x| Complex64::new(f(x), 0.0), small_x_exponent)?;
        w.real = true;
        Ok(w)
    }

    /// Real callable with an exact derivative.
    pub fn from_real_fn_with_deriv(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        small_x_exponent: f64,
    ) -> Result<Self> {
        let mut w = Self::from_fn_with_deriv(
            move |x| Complex64::new(f(x), 0.0),
            move |x| Complex64::new(deriv(x), 0.0),
            small_x_exponent,
        )?;
        w.real = true;
        Ok(w)
    }

    fn build_callable(f: Func, deriv: Option<Func>, small_x_exponent: f64) -> Result<Self> {
        if !(small_x_exponent > -0.5) {
            return Err(Error::divergence(format!(
                "behaviour x^{small_x_exponent} at the origin is not square integrable"
            )));
        }
        let g = f.clone();
        let n2 = adaptive(|x: f64| g(x).norm_sqr(), 0.0, f64::INFINITY, NORM_TOL)?
            .into_result("wave function norm")?;
        if !n2.value.is_finite() {
            return Err(Error::divergence("wave function norm is not finite"));
        }
        Ok(WaveFunction { repr: Repr::Callable { f, deriv }, small_x_exponent, norm: n2.value.sqrt(), real: false })
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn small_x_exponent(&self) -> f64 {
        self.small_x_exponent
    }

    /// True when ψ is known to be real valued.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Basis and coefficients when the function is stored as an expansion.
    pub fn coefficients(&self) -> Option<(&BasisSpec, &DVector<Complex64>)> {
        match &self.repr {
            Repr::Laguerre { basis, coeffs } => Some((basis, coeffs)),
            Repr::Callable { .. } => None,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if x <= 0.0 {
            return if x == 0.0 && self.small_x_exponent == 0.0 {
                match &self.repr {
                    Repr::Callable { f, .. } => f(0.0),
                    Repr::Laguerre { basis, coeffs } => dot(&basis.eval_all(0.0), coeffs),
                }
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        match &self.repr {
            Repr::Laguerre { basis, coeffs } => dot(&basis.eval_all(x), coeffs),
            Repr::Callable { f, .. } => f(x),
        }
    }

    pub fn eval_deriv(&self, x: f64) -> Complex64 {
        match &self.repr {
            Repr::Laguerre { basis, coeffs } => dot(&basis.eval_all_with_deriv(x).1, coeffs),
            Repr::Callable { deriv: Some(d), .. } => d(x),
            Repr::Callable { f, deriv: None } => {
                let h = 1e-4 * x.abs().max(1e-2).min(1.0);
                let h = h.min(0.5 * x);
                (f(x - 2.0 * h) - f(x + 2.0 * h) + (f(x + h) - f(x - h)) * 8.0) / (12.0 * h)
            }
        }
    }

    pub fn eval_deriv2(&self, x: f64) -> Complex64 {
        match &self.repr {
            Repr::Laguerre { basis, coeffs } => dot(&basis.eval_all_d2(x).2, coeffs),
            Repr::Callable { .. } => {
                let h = 1e-4 * x.abs().max(1e-2).min(1.0);
                let h = h.min(0.5 * x);
                let d = |t: f64| self.eval_deriv(t);
                (d(x - 2.0 * h) - d(x + 2.0 * h) + (d(x + h) - d(x - h)) * 8.0) / (12.0 * h)
            }
        }
    }

    /// `∫_0^∞ x^power g(x) dx` for the integrand `g` selected by `kind`.
    /// Coefficient-form functions are integrated exactly by Gauss-Laguerre.
    pub fn moment(&self, power: f64, kind: Moment) -> Result<Complex64> {
        let k = kind.derivative_order();
        let lead = 2.0 * self.small_x_exponent + power - k;
        if !(lead > -1.0) {
            return Err(Error::divergence(format!(
                "moment with x^{power} of {kind:?} behaves like x^{lead} at the origin"
            )));
        }
        if let Repr::Laguerre { basis, coeffs } = &self.repr {
            let s = basis.scale;
            let rule = gauss_laguerre(basis.dim() + 8, lead)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&y, &w) in rule.nodes.iter().zip(&rule.absorbed_weights) {
                let x = s * y;
                let (e, d, d2) = basis.eval_all_d2(x);
                let v = dot(&e, coeffs);
                let g = match kind {
                    Moment::Density => v * v.conj(),
                    Moment::DerivCross => v * dot(&d, coeffs).conj(),
                    Moment::DerivDensity => Complex64::new(dot(&d, coeffs).norm_sqr(), 0.0),
                    Moment::SecondCross => v * dot(&d2, coeffs).conj(),
                };
                acc += g * (w * x.powf(power));
            }
            return Ok(acc * s);
        }
        if kind == Moment::SecondCross {
            // by parts, avoiding a second numerical derivative
            let mut v = -self.moment(power, Moment::DerivDensity)?;
            if power != 0.0 {
                v -= self.moment(power - 1.0, Moment::DerivCross)? * power;
            }
            return Ok(v);
        }
        let g = |x: f64| -> Complex64 {
            let v = self.eval(x);
            let g = match kind {
                Moment::Density => Complex64::new(v.norm_sqr(), 0.0),
                Moment::DerivCross => v * self.eval_deriv(x).conj(),
                Moment::DerivDensity => Complex64::new(self.eval_deriv(x).norm_sqr(), 0.0),
                Moment::SecondCross => unreachable!(),
            };
            g * x.powf(power)
        };
        let tol = Tolerance { rel: 1e-11, abs: 1e-11 * self.norm * self.norm, max_subdiv: 4000 };
        let r = adaptive(g, 0.0, f64::INFINITY, tol)?.into_result(&format!("moment x^{power} of {kind:?}"))?;
        Ok(r.value)
    }

    /// Returns the unit vector `ψ/‖ψ‖`.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.norm > 0.0) {
            return Err(Error::domain("cannot normalize the zero vector"));
        }
        let s = 1.0 / self.norm;
        Ok(self.scaled(s))
    }

    pub(crate) fn scaled(&self, s: f64) -> Self {
        let repr = match &self.repr {
            Repr::Laguerre { basis, coeffs } => Repr::Laguerre { basis: *basis, coeffs: coeffs * Complex64::new(s, 0.0) },
            Repr::Callable { f, deriv } => {
                let f = f.clone();
                let deriv = deriv.clone().map(|d| -> Func { Arc::new(move |x| d(x) * s) });
                Repr::Callable { f: Arc::new(move |x| f(x) * s), deriv }
            }
        };
        WaveFunction { repr, small_x_exponent: self.small_x_exponent, norm: self.norm * s.abs(), real: self.real }
    }

    /// Pointwise map `x ↦ h(x, ψ)` producing a new callable. The norm is recomputed.
    pub(crate) fn map_pointwise(
        &self,
        small_x_exponent: f64,
        h: impl Fn(f64, Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let me = self.clone();
        Self::from_fn(move |x| h(x, me.eval(x)), small_x_exponent)
    }

    /// Same as [`map_pointwise`](Self::map_pointwise) with a known norm.
    pub(crate) fn map_pointwise_isometric(
        &self,
        h: impl Fn(f64, &WaveFunction) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let me = self.clone();
        WaveFunction {
            repr: Repr::Callable { f: Arc::new(move |x| h(x, &me)), deriv: None },
            small_x_exponent: self.small_x_exponent,
            norm: self.norm,
            real: false,
        }
    }

    /// `⟨self | other⟩` (antilinear in the first slot).
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        if let (Repr::Laguerre { basis: b1, coeffs: c1 }, Repr::Laguerre { basis: b2, coeffs: c2 }) =
            (&self.repr, &other.repr)
        {
            if b1 == b2 {
                return Ok(c1.dotc(c2));
            }
        }
        let r = adaptive(|x: f64| self.eval(x).conj() * other.eval(x), 0.0, f64::INFINITY, NORM_TOL)?;
        Ok(r.into_result("inner product")?.value)
    }

    /// Coefficients `⟨b_n | ψ⟩` in `basis`, by Gauss-Laguerre quadrature with
    /// the weight `y^{α/2+ν} e^{-y}` split off (ν the small-x exponent of ψ).
    pub fn project(&self, basis: &BasisSpec) -> Result<DVector<Complex64>> {
        basis.validate()?;
        if let Repr::Laguerre { basis: b, coeffs } = &self.repr {
            if b.alpha == basis.alpha && b.scale == basis.scale {
                let mut out = DVector::zeros(basis.dim());
                for i in 0..basis.dim().min(b.dim()) {
                    out[i] = coeffs[i];
                }
                return Ok(out);
            }
        }
        let s = basis.scale;
        let a = basis.alpha;
        let nodes = (2 * basis.dim() + 80).max(160);
        let rule = gauss_laguerre(nodes, a / 2.0 + self.small_x_exponent)?;
        let mut out = DVector::zeros(basis.dim());
        for (&y, &w) in rule.nodes.iter().zip(&rule.absorbed_weights) {
            // the integrand is e_n(y) ψ(s y) sqrt(s)
            let psi = self.eval(s * y);
            if psi == Complex64::new(0.0, 0.0) {
                continue;
            }
            let e = laguerre_functions_upto(basis.n_max, a, y)?;
            let fac = w * s.sqrt();
            for (n, en) in e.iter().enumerate() {
                out[n] += psi * (en * fac);
            }
        }
        Ok(out)
    }

    /// Expansion of `self` in `basis` as a new coefficient-form wave function.
    pub fn to_basis(&self, basis: &BasisSpec) -> Result<WaveFunction> {
        WaveFunction::from_coeffs(*basis, self.project(basis)?)
    }
}

fn dot(vals: &[f64], coeffs: &DVector<Complex64>) -> Complex64 {
    vals.iter().zip(coeffs.iter()).map(|(v, c)| c * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn callable_norm_and_inner_products() {
        // x e^{-x/2}/sqrt(2) is e_0^(2)
        let psi = WaveFunction::from_real_fn(|x| x * (-x / 2.0).exp() / 2f64.sqrt(), 1.0).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-10);
        let b = BasisSpec::new(2.0, 5).unwrap();
        let e0 = WaveFunction::basis_vector(b, 0).unwrap();
        assert!((psi.inner(&e0).unwrap() - 1.0).norm() < 1e-10);
        let c = psi.project(&b).unwrap();
        assert!((c[0] - 1.0).norm() < 1e-12);
        for n in 1..=5 {
            assert!(c[n].norm() < 1e-12);
        }
    }

    #[test]
    fn non_normalizable_is_rejected() {
        assert!(WaveFunction::from_real_fn(|x| 1.0 / x, -1.0).is_err());
    }

    #[test]
    fn projection_round_trip_with_scale() {
        let b = BasisSpec::scaled(1.0, 12, 0.5).unwrap();
        let mut c = DVector::zeros(13);
        c[3] = Complex64::new(0.6, 0.0);
        c[7] = Complex64::new(0.0, 0.8);
        let psi = WaveFunction::from_coeffs(b, c.clone()).unwrap();
        let as_fn = psi.map_pointwise_isometric(|x, w| w.eval(x));
        let back = as_fn.project(&b).unwrap();
        assert!((back - c).norm() < 1e-11);
    }

    #[test]
    fn moments_exact_and_numeric_agree() {
        let b = BasisSpec::scaled(2.0, 6, 0.8).unwrap();
        let mut c = DVector::zeros(7);
        c[0] = Complex64::new(0.6, 0.0);
        c[3] = Complex64::new(-0.8, 0.0);
        let lag = WaveFunction::from_coeffs(b, c).unwrap();
        let num = lag.map_pointwise_isometric(|x, w| w.eval(x));
        for kind in [Moment::Density, Moment::DerivCross, Moment::DerivDensity, Moment::SecondCross] {
            for &p in &[-1.0, 0.0, 1.0, 2.0] {
                if kind.derivative_order() - p >= 2.0 + 1.0 {
                    continue;
                }
                let a = lag.moment(p, kind).unwrap();
                let n = num.moment(p, kind).unwrap();
                assert!((a - n).norm() < 1e-6 * (1.0 + a.norm()), "{kind:?} {p}: {a} vs {n}");
            }
        }
        assert!((lag.moment(0.0, Moment::Density).unwrap().re - 1.0).abs() < 1e-13);
        assert!(lag.moment(-4.0, Moment::Density).is_err());
    }

    #[test]
    fn derivative_fallback() {
        let psi = WaveFunction::from_real_fn(|x| x * (-x * x / 2.0).exp(), 1.0).unwrap();
        let x: f64 = 0.9;
        let want = (1.0 - x * x) * (-x * x / 2.0).exp();
        assert!((psi.eval_deriv(x).re - want).abs() < 1e-9);
    }
}
