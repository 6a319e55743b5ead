use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistributionKind, PhaseSpaceGrid, QuasiDistribution};
use crate::affine_group::GroupElement;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, integrate_oscillatory, Tolerance};
use crate::quantize::{MomentumFactor, Observable};
use crate::representation::{matrix_u, BasisSpec, Moment, WaveFunction};
use crate::specfun::{bessel_k_scaled, gamma};
use crate::weights::Weight;

const TOL: Tolerance<f64> = Tolerance { rel: 1e-11, abs: 1e-14, max_subdiv: 4000 };
const OUTER: Tolerance<f64> = Tolerance { rel: 1e-9, abs: 1e-13, max_subdiv: 600 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Closed form when one is registered, otherwise the trace-kernel integral.
    #[default]
    Auto,
    ClosedForm,
    /// `(1/c_M) ∬ f(qq′, p′/q + p) Tr(M(q′,p′) M) dq′ dp′`.
    Generic,
}

/// Constant `c(ψ)` in `p² ↦ p² + c(ψ)/q²` for ACS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticConstant {
    /// `∫ψ′² + (c₀/c₋₁) ∫ x ψ′²`.
    #[default]
    Derived,
    /// `∫ ψ′² (1 + c₁ x)`.
    Verbatim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LowerSymbolOptions {
    pub route: Route,
    pub kinetic: KineticConstant,
}

/// `∫ s^k (2q/π) K₀(2q|s|) ds = Γ((k+1)/2)² / (π q^k)` for even `k`, zero for odd `k`.
pub fn aw_kernel_moment(k: usize, q: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let g = gamma((k as f64 + 1.0) / 2.0).unwrap_or(f64::NAN);
    g * g / (PI * q.powi(k as i32))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `c_γ = ∫ |ψ|² x^{-2-γ} dx`.
fn c_gamma(psi: &WaveFunction, gamma: f64) -> Result<f64> {
    Ok(psi.moment(-2.0 - gamma, Moment::Density)?.re)
}

/// Kinetic constant `c(ψ)` of the ACS lower symbol of `p²`.
pub fn acs_kinetic_constant(psi: &WaveFunction, kind: KineticConstant) -> Result<f64> {
    let d0 = psi.moment(0.0, Moment::DerivDensity)?.re;
    let d1 = psi.moment(1.0, Moment::DerivDensity)?.re;
    match kind {
        KineticConstant::Derived => Ok(d0 + c_gamma(psi, 0.0)? / c_gamma(psi, -1.0)? * d1),
        KineticConstant::Verbatim => Ok(d0 + c_gamma(psi, 1.0)? * d1),
    }
}

/// The rank-one fiducial of a unit-trace ACS weight with real `ψ`.
fn real_fiducial(w: &Weight) -> Option<&WaveFunction> {
    let (comps, tail) = w.mixture()?;
    if comps.len() != 1 || tail != 0.0 {
        return None;
    }
    let (wt, psi) = &comps[0];
    ((wt * psi.norm().powi(2) - 1.0).abs() < 1e-10 && psi.is_real()).then_some(psi)
}

fn closed_form(w: &Weight, obs: &Observable, q: f64, p: f64, kinetic: KineticConstant) -> Result<Option<f64>> {
    if w.affine_weyl_factor().is_some() {
        return aw_closed_form(obs, q, p).map(Some);
    }
    let Some(psi) = real_fiducial(w) else { return Ok(None) };
    let Some(ms) = obs.monomials() else { return Ok(None) };
    let cm1 = c_gamma(psi, -1.0)?;
    let mut total = 0.0;
    for m in &ms {
        let v = match (m.beta, m.n) {
            (b, 0) => c_gamma(psi, b - 1.0)? * c_gamma(psi, -b - 2.0)? / cm1 * q.powf(b),
            (b, 1) if b == 0.0 => p,
            (b, 2) if b == 0.0 => p * p + acs_kinetic_constant(psi, kinetic)? / (q * q),
            (b, 1) if b == 1.0 => c_gamma(psi, 0.0)? * c_gamma(psi, -3.0)? / cm1 * q * p,
            _ => return Ok(None),
        };
        total += m.coeff * v;
    }
    Ok(Some(total))
}

fn aw_closed_form(obs: &Observable, q: f64, p: f64) -> Result<f64> {
    let poly = |c: &[f64]| -> f64 {
        c.iter()
            .enumerate()
            .map(|(n, cn)| cn * (0..=n).step_by(2).map(|k| binomial(n, k) * p.powi((n - k) as i32) * aw_kernel_moment(k, q)).sum::<f64>())
            .sum()
    };
    if let Some(ms) = obs.monomials() {
        return Ok(ms
            .iter()
            .map(|m| {
                let n = m.n as usize;
                let mut c = vec![0.0; n + 1];
                c[n] = 1.0;
                m.coeff * q.powf(m.beta) * poly(&c)
            })
            .sum());
    }
    match obs {
        Observable::PositionFn(u) => Ok(u.eval(q)),
        Observable::Separable { u, v: MomentumFactor::Polynomial(c) } => Ok(u.eval(q) * poly(c)),
        Observable::Separable { u, v: MomentumFactor::Fourier { v_hat, label } } => {
            // (1/√2π) ∫ e^{ipk} v̂(k) / √(1 + k²/4q²) dk
            let env = |sign: f64| {
                let vh = v_hat.clone();
                move |k: f64| vh(sign * k) / (1.0 + k * k / (4.0 * q * q)).sqrt()
            };
            let ctx = format!("lower symbol of {label}");
            let right = integrate_oscillatory(env(1.0), |k: f64| p * k, 0.0, f64::INFINITY, p, TOL)?.into_result(&ctx)?;
            let left = integrate_oscillatory(env(-1.0), |k: f64| -p * k, 0.0, f64::INFINITY, p, TOL)?.into_result(&ctx)?;
            Ok(u.eval(q) * (right.value + left.value).re / (2.0 * PI).sqrt())
        }
        _ => unreachable!("monomial observables handled above"),
    }
}

/// `Tr(M^ϖ(q,p) M^ϖ)`. Multiples of `ϖ_aW` are rejected: their kernel is
/// `4 c² δ(q-1) K₀(2|p|)`, handled inside [`lower_symbol_with`].
pub fn trace_kernel(w: &Weight, q: f64, p: f64) -> Result<f64> {
    if w.affine_weyl_factor().is_some() {
        return Err(Error::Unsupported("the affine-Weyl trace kernel is concentrated on q = 1".into()));
    }
    let g = GroupElement::new(q, p)?;
    if let Some((alpha, t)) = w.thermal_parameters() {
        // (1-t)² Σ t^{i+j} |U_ij|²
        let n = if t == 0.0 { 0 } else { ((1e-16f64).ln() / t.ln()).ceil() as usize };
        let basis = BasisSpec::new(alpha, n.max(1))?;
        let u = matrix_u(&basis, g).entries;
        let d: Vec<f64> = (0..basis.dim()).map(|i| t.powi(i as i32)).collect();
        let mut s = 0.0;
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                s += d[i] * d[j] * u[(i, j)].norm_sqr();
            }
        }
        return Ok((1.0 - t) * (1.0 - t) * s);
    }
    if let Some((comps, _)) = w.mixture() {
        if comps.len() == 1 {
            // rank one: ϖ = w conj(⟨ψ|Uψ⟩)/√q
            return Ok(q * w.eval(q, p)?.norm_sqr());
        }
        let bases: Vec<_> = comps.iter().filter_map(|(_, psi)| psi.coefficients().map(|(b, _)| *b)).collect();
        if bases.len() == comps.len() && bases.windows(2).all(|b| b[0] == b[1]) {
            let basis = bases[0];
            let u = matrix_u(&basis, g).entries;
            let cols: Vec<_> = comps.iter().map(|(_, psi)| psi.coefficients().unwrap().1.clone()).collect();
            let mut s = 0.0;
            for (wi, ci) in comps.iter().map(|c| c.0).zip(&cols) {
                for (wj, cj) in comps.iter().map(|c| c.0).zip(&cols) {
                    s += wi * wj * ci.dotc(&(&u * cj)).norm_sqr();
                }
            }
            return Ok(s);
        }
    }
    trace_kernel_fourier(w, q, p)
}

/// `(1/2πq) ∬ e^{-ip(y-x)} ϖ̂_p(x/y, -x/q) ϖ̂_p(y/x, -y) dx dy` for weights with a smooth partial Fourier transform.
fn trace_kernel_fourier(w: &Weight, q: f64, p: f64) -> Result<f64> {
    let fw = w.fourier();
    if !fw.atoms.is_empty() {
        return Err(Error::Unsupported(format!("trace kernel of {} with Fourier atoms", w.label())));
    }
    let sm = fw
        .smooth
        .clone()
        .ok_or_else(|| Error::Unsupported(format!("weight {} has no partial Fourier transform", w.label())))?;
    let inner = |x: f64| -> Complex64 {
        if x == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        adaptive(
            |y: f64| {
                if y == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::from_polar(1.0, -p * (y - x)) * sm(x / y, -x / q) * sm(y / x, -y)
            },
            0.0,
            f64::INFINITY,
            OUTER,
        )
        .map(|r| r.value)
        .unwrap_or(Complex64::new(f64::NAN, 0.0))
    };
    let r = adaptive(inner, 0.0, f64::INFINITY, OUTER)?.into_result("trace kernel")?;
    if !r.value.re.is_finite() {
        return Err(Error::Accuracy { estimate: f64::NAN, error: f64::NAN, context: "trace kernel".into() });
    }
    Ok(r.value.re / (2.0 * PI * q))
}

fn generic(w: &Weight, obs: &Observable, q: f64, p: f64) -> Result<f64> {
    let f = |qq: f64, pp: f64| {
        obs.classical(qq, pp)
            .ok_or_else(|| Error::Unsupported(format!("{} has no pointwise classical value", obs.label())))
    };
    f(q, p)?;
    let c_m = w.c_m()?;
    let ctx = format!("lower symbol of {} at ({q}, {p})", obs.label());
    if let Some(c) = w.affine_weyl_factor() {
        // ∫ f(q, p + s/q) 4c² K₀(2|s|) ds / c_M
        let r = adaptive(
            |s: f64| {
                if s == 0.0 {
                    return 0.0;
                }
                let k0 = bessel_k_scaled(0.0, 2.0 * s).unwrap_or(f64::NAN) * (-2.0 * s).exp();
                (f(q, p + s / q).unwrap_or(f64::NAN) + f(q, p - s / q).unwrap_or(f64::NAN)) * k0
            },
            0.0,
            f64::INFINITY,
            TOL,
        )?
        .into_result(&ctx)?;
        return Ok(4.0 * c * c * r.value / c_m);
    }
    let inner = |qq: f64| -> f64 {
        if qq == 0.0 {
            return 0.0;
        }
        adaptive(
            |pp: f64| match trace_kernel(w, qq, pp) {
                Ok(t) => f(q * qq, pp / q + p).unwrap_or(f64::NAN) * t,
                Err(_) => f64::NAN,
            },
            f64::NEG_INFINITY,
            f64::INFINITY,
            OUTER,
        )
        .and_then(|r| r.into_result("lower symbol, p integral"))
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
    };
    let r = adaptive(inner, 0.0, f64::INFINITY, OUTER)?;
    if !r.value.is_finite() {
        return Err(Error::Accuracy { estimate: r.value, error: r.error, context: ctx });
    }
    Ok(r.into_result(&ctx)?.value / c_m)
}

/// `f̌(q,p) = Tr(A_f M^ϖ(q,p))` with the default options.
pub fn lower_symbol(w: &Weight, obs: &Observable, g: GroupElement<f64>) -> Result<f64> {
    lower_symbol_with(w, obs, g, LowerSymbolOptions::default())
}

pub fn lower_symbol_with(w: &Weight, obs: &Observable, g: GroupElement<f64>, opts: LowerSymbolOptions) -> Result<f64> {
    let (q, p) = (g.q(), g.p());
    match opts.route {
        Route::Generic => generic(w, obs, q, p),
        Route::ClosedForm => closed_form(w, obs, q, p, opts.kinetic)?
            .ok_or_else(|| Error::Unsupported(format!("no closed-form lower symbol of {} for {}", obs.label(), w.label()))),
        Route::Auto => match closed_form(w, obs, q, p, opts.kinetic)? {
            Some(v) => Ok(v),
            None => generic(w, obs, q, p),
        },
    }
}

/// `f̌` on `grid`.
pub fn lower_symbol_grid(
    w: &Weight,
    obs: &Observable,
    grid: &PhaseSpaceGrid,
    opts: LowerSymbolOptions,
) -> Result<QuasiDistribution> {
    let values: Result<Vec<f64>> = grid
        .points()
        .par_iter()
        .map(|&(q, p)| lower_symbol_with(w, obs, GroupElement::new(q, p)?, opts))
        .collect();
    Ok(QuasiDistribution::new(grid.clone(), values?, DistributionKind::LowerSymbol, obs.label())?
        .with_meta("weight", w.label())
        .with_meta("options", opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::PositionFn;

    fn ground(alpha: f64) -> Weight {
        Weight::acs(WaveFunction::basis_vector(BasisSpec::new(alpha, 1).unwrap(), 0).unwrap()).unwrap()
    }

    fn at(q: f64, p: f64) -> GroupElement<f64> {
        GroupElement::new(q, p).unwrap()
    }

    #[test]
    fn kernel_moments() {
        assert!((aw_kernel_moment(0, 0.7) - 1.0).abs() < 1e-15);
        assert!((aw_kernel_moment(2, 0.7) - 1.0 / (4.0 * 0.49)).abs() < 1e-14);
        assert_eq!(aw_kernel_moment(3, 0.7), 0.0);
    }

    #[test]
    fn affine_weyl_symbols() {
        let w = Weight::affine_weyl();
        let gen = LowerSymbolOptions { route: Route::Generic, ..Default::default() };
        for (q, p) in [(0.3, -1.2), (1.0, 0.0), (2.5, 3.1)] {
            let k = lower_symbol(&w, &Observable::Kinetic, at(q, p)).unwrap();
            assert!((k - (p * p + 0.25 / (q * q))).abs() < 1e-12);
            let kg = lower_symbol_with(&w, &Observable::Kinetic, at(q, p), gen).unwrap();
            assert!((kg - k).abs() < 1e-8 * k.abs().max(1.0), "{kg} vs {k}");
            let pg = lower_symbol_with(&w, &Observable::MomentumPower(1), at(q, p), gen).unwrap();
            assert!((pg - p).abs() < 1e-9);
            let u = Observable::PositionFn(PositionFn::power(1.5));
            let ug = lower_symbol_with(&w, &u, at(q, p), gen).unwrap();
            assert!((ug - q.powf(1.5)).abs() < 1e-10 * q.powf(1.5));
        }
    }

    #[test]
    fn ground_state_closed_forms_match_trace_path() {
        let w = ground(3.0);
        let gen = LowerSymbolOptions { route: Route::Generic, ..Default::default() };
        let g = at(1.3, 0.4);
        for obs in [Observable::PositionFn(PositionFn::power(1.0)), Observable::Kinetic, Observable::Dilation] {
            let c = lower_symbol(&w, &obs, g).unwrap();
            let n = lower_symbol_with(&w, &obs, g, gen).unwrap();
            assert!((c - n).abs() < 1e-6 * c.abs().max(1.0), "{}: {c} vs {n}", obs.label());
        }
    }

    #[test]
    fn kinetic_constant_variants() {
        // e_0^(3): ∫ψ′² = 1/8, c₀/c₋₁ = 1/2, ∫xψ′² = 1/4, c₁ = 1/6
        let psi = WaveFunction::basis_vector(BasisSpec::new(3.0, 1).unwrap(), 0).unwrap();
        let d = acs_kinetic_constant(&psi, KineticConstant::Derived).unwrap();
        assert!((d - 0.25).abs() < 1e-12, "{d}");
        let v = acs_kinetic_constant(&psi, KineticConstant::Verbatim).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-12, "{v}");
        let psi2 = WaveFunction::basis_vector(BasisSpec::new(2.0, 1).unwrap(), 0).unwrap();
        assert!(matches!(acs_kinetic_constant(&psi2, KineticConstant::Verbatim), Err(Error::Divergence(_))));
    }

    #[test]
    fn trace_kernel_routes_agree() {
        let w = ground(2.0);
        let direct = trace_kernel(&w, 1.4, 0.3).unwrap();
        let fourier = trace_kernel_fourier(&w, 1.4, 0.3).unwrap();
        assert!((direct - fourier).abs() < 1e-7, "{direct} vs {fourier}");
    }
}
