//! The quantization map `f ↦ A_f^ϖ` for the catalog of classical observables.
//!
//! Every monomial `q^β p^n` quantizes to a differential polynomial
//! `Σ_k C(n,k) (-i)^{n-k} [G_β^{(n-k)}(1)/Ω(1)] Q^{β-n+k} P^k` with `G_β(s) = Ω_β(1/s)/s`.

mod matrix;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numdiff;
use crate::quadrature::{adaptive, gauss_laguerre, Tolerance};
use crate::representation::{BasisSpec, Moment, OperatorMatrix, WaveFunction};
use crate::weights::Weight;

pub use matrix::{function_derivative_matrix, power_derivative_matrix};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const CONV_TOL: Tolerance<f64> = Tolerance { rel: 1e-11, abs: 1e-14, max_subdiv: 4000 };

/// A real function of position `u(q)`; `power = Some(β)` marks `u = q^β`.
#[derive(Clone)]
pub struct PositionFn {
    pub label: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub power: Option<f64>,
}

impl PositionFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PositionFn { label: label.into(), f: Arc::new(f), power: None }
    }

    /// `q^β`.
    pub fn power(beta: f64) -> Self {
        PositionFn { label: format!("q^{beta}"), f: Arc::new(move |q: f64| q.powf(beta)), power: Some(beta) }
    }

    pub fn eval(&self, q: f64) -> f64 {
        (self.f)(q)
    }
}

impl fmt::Debug for PositionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PositionFn({})", self.label)
    }
}

/// Momentum factor `v(p)` of a separable observable.
#[derive(Clone)]
pub enum MomentumFactor {
    /// `Σ c_n p^n`.
    Polynomial(Vec<f64>),
    /// Smooth `v̂(k) = (1/√2π)∫ e^{-ipk} v(p) dp`.
    Fourier { label: String, v_hat: Arc<dyn Fn(f64) -> Complex64 + Send + Sync> },
}

impl fmt::Debug for MomentumFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentumFactor::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            MomentumFactor::Fourier { label, .. } => write!(f, "Fourier({label})"),
        }
    }
}

/// `coeff · q^β · p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: f64,
    pub beta: f64,
    pub n: u32,
}

/// Classical observables with a closed-form quantization.
#[derive(Debug, Clone)]
pub enum Observable {
    PositionFn(PositionFn),
    MomentumPower(u32),
    Separable { u: PositionFn, v: MomentumFactor },
    /// `qp`
    Dilation,
    /// `p²`
    Kinetic,
    MonomialSum(Vec<Monomial>),
}

impl Observable {
    /// `f(q,p)` where it is defined pointwise.
    pub fn classical(&self, q: f64, p: f64) -> Option<f64> {
        match self {
            Observable::PositionFn(u) => Some(u.eval(q)),
            Observable::MomentumPower(n) => Some(p.powi(*n as i32)),
            Observable::Separable { u, v: MomentumFactor::Polynomial(c) } => {
                Some(u.eval(q) * c.iter().enumerate().map(|(n, c)| c * p.powi(n as i32)).sum::<f64>())
            }
            Observable::Separable { .. } => None,
            Observable::Dilation => Some(q * p),
            Observable::Kinetic => Some(p * p),
            Observable::MonomialSum(ms) => Some(ms.iter().map(|m| m.coeff * q.powf(m.beta) * p.powi(m.n as i32)).sum()),
        }
    }

    /// The observable as monomials, when it is one.
    pub fn monomials(&self) -> Option<Vec<Monomial>> {
        match self {
            Observable::PositionFn(PositionFn { power: Some(b), .. }) => {
                Some(vec![Monomial { coeff: 1.0, beta: *b, n: 0 }])
            }
            Observable::MomentumPower(n) => Some(vec![Monomial { coeff: 1.0, beta: 0.0, n: *n }]),
            Observable::Separable { u: PositionFn { power: Some(b), .. }, v: MomentumFactor::Polynomial(c) } => Some(
                c.iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(n, c)| Monomial { coeff: *c, beta: *b, n: n as u32 })
                    .collect(),
            ),
            Observable::Dilation => Some(vec![Monomial { coeff: 1.0, beta: 1.0, n: 1 }]),
            Observable::Kinetic => Some(vec![Monomial { coeff: 1.0, beta: 0.0, n: 2 }]),
            Observable::MonomialSum(ms) => Some(ms.clone()),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Observable::PositionFn(u) => u.label.clone(),
            Observable::MomentumPower(n) => format!("p^{n}"),
            Observable::Separable { u, v } => format!("{}*{v:?}", u.label),
            Observable::Dilation => "qp".into(),
            Observable::Kinetic => "p^2".into(),
            Observable::MonomialSum(ms) => ms
                .iter()
                .map(|m| format!("{}*q^{}*p^{}", m.coeff, m.beta, m.n))
                .collect::<Vec<_>>()
                .join(" + "),
        }
    }
}

/// Coefficient of a differential term.
#[derive(Clone)]
pub enum Coefficient {
    /// `c · x^γ`
    Power { coeff: Complex64, gamma: f64 },
    /// A sampled function `h(x)`.
    Function { label: String, h: Arc<dyn Fn(f64) -> Complex64 + Send + Sync> },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Power { coeff, gamma } => write!(f, "({coeff})*x^{gamma}"),
            Coefficient::Function { label, .. } => write!(f, "{label}"),
        }
    }
}

/// `coefficient(x) · P^order` with `P = -i d/dx`.
#[derive(Debug, Clone)]
pub struct DiffTerm {
    pub coefficient: Coefficient,
    pub order: usize,
}

/// Integral kernel `𝒜(x, x′)`.
pub type KernelFn = Arc<dyn Fn(f64, f64) -> Result<Complex64> + Send + Sync>;

/// Result of quantizing an observable.
#[derive(Clone)]
pub struct QuantizedOperator {
    pub label: String,
    pub weight: String,
    /// Differential-polynomial closed form (empty for integral operators).
    pub terms: Vec<DiffTerm>,
    pub kernel: Option<KernelFn>,
    pub matrix: OperatorMatrix,
}

impl fmt::Debug for QuantizedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantizedOperator")
            .field("label", &self.label)
            .field("weight", &self.weight)
            .field("closed_form", &self.describe())
            .field("dim", &self.matrix.dim())
            .finish()
    }
}

impl QuantizedOperator {
    /// Human-readable closed form, e.g. `P^2 + (0.25)*Q^-2`.
    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return if self.kernel.is_some() { "integral operator".into() } else { "0".into() };
        }
        self.terms
            .iter()
            .map(|t| {
                let c = match &t.coefficient {
                    Coefficient::Power { coeff, gamma } => {
                        let c = format_complex(*coeff);
                        if *gamma == 0.0 {
                            c
                        } else {
                            format!("{c}*Q^{gamma}")
                        }
                    }
                    Coefficient::Function { label, .. } => label.clone(),
                };
                match t.order {
                    0 => c,
                    1 => format!("{c}*P"),
                    k => format!("{c}*P^{k}"),
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// `(c, γ, k)` for every power-law term.
    pub fn power_terms(&self) -> Vec<(Complex64, f64, usize)> {
        self.terms
            .iter()
            .filter_map(|t| match t.coefficient {
                Coefficient::Power { coeff, gamma } => Some((coeff, gamma, t.order)),
                _ => None,
            })
            .collect()
    }

    /// Coefficient of `x^γ P^k` (zero when absent).
    pub fn coefficient_of(&self, gamma: f64, k: usize) -> Complex64 {
        self.power_terms()
            .into_iter()
            .filter(|(_, g, o)| (*g - gamma).abs() < 1e-12 && *o == k)
            .map(|(c, _, _)| c)
            .sum()
    }
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else {
        format!("({}{:+}i)", z.re, z.im)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Ω(1) = d₀`, required real and positive.
fn omega_one(w: &Weight) -> Result<f64> {
    Ok(w.c_m()? / SQRT_2PI)
}

/// Differential terms of `A_{q^β p^n}` (without the monomial coefficient).
pub fn monomial_terms(w: &Weight, beta: f64, n: usize) -> Result<Vec<DiffTerm>> {
    if n > 8 {
        return Err(Error::Unsupported(format!("p^{n}: powers above 8 are not supported")));
    }
    let omega = omega_one(w)?;
    let g = w.g_derivatives(beta, n).map_err(|e| match e {
        Error::Divergence(m) => Error::divergence(format!("q^{beta} p^{n}: {m}")),
        other => other,
    })?;
    let mut out = Vec::new();
    for k in 0..=n {
        let j = n - k;
        let c = Complex64::new(0.0, -1.0).powi(j as i32) * g[j] * (binomial(n, k) / omega);
        if c.norm() < 1e-15 * g[0].norm().max(1e-300) / omega {
            continue;
        }
        out.push(DiffTerm { coefficient: Coefficient::Power { coeff: c, gamma: beta - j as f64 }, order: k });
    }
    Ok(out)
}

/// Merges power terms with equal `(γ, k)`; drops zeros.
fn merge_terms(terms: Vec<DiffTerm>) -> Vec<DiffTerm> {
    let mut out: Vec<DiffTerm> = Vec::new();
    for t in terms {
        if let Coefficient::Power { coeff, gamma } = t.coefficient {
            if let Some(existing) = out.iter_mut().find(|e| {
                e.order == t.order && matches!(e.coefficient, Coefficient::Power { gamma: g, .. } if (g - gamma).abs() < 1e-14)
            }) {
                if let Coefficient::Power { coeff: c, .. } = &mut existing.coefficient {
                    *c += coeff;
                }
                continue;
            }
        }
        out.push(t);
    }
    out.retain(|t| !matches!(t.coefficient, Coefficient::Power { coeff, .. } if coeff == Complex64::new(0.0, 0.0)));
    out
}

/// Nodes used for terms with non-polynomial coefficients.
fn function_nodes(basis: &BasisSpec) -> usize {
    2 * basis.dim() + 40
}

/// Assembles the matrix of a differential polynomial.
pub fn assemble(terms: &[DiffTerm], basis: &BasisSpec) -> Result<OperatorMatrix> {
    let dim = basis.dim();
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for t in terms {
        match &t.coefficient {
            Coefficient::Power { coeff, gamma } => {
                acc += power_derivative_matrix(basis, *gamma, t.order)? * *coeff;
            }
            Coefficient::Function { h, .. } => {
                let hh = h.clone();
                let f = move |x: f64| hh(x);
                acc += function_derivative_matrix(basis, &f, t.order, function_nodes(basis))?;
            }
        }
    }
    OperatorMatrix::try_new(*basis, acc)
}

fn finish(
    label: String,
    w: &Weight,
    terms: Vec<DiffTerm>,
    kernel: Option<KernelFn>,
    matrix: OperatorMatrix,
) -> QuantizedOperator {
    // real observables quantize to symmetric operators
    let scale = matrix.entries.norm().max(1.0);
    let matrix = if matrix.hermitian_deviation() <= 1e-8 * scale {
        matrix.mark_hermitian(1e-8).unwrap_or_else(|e| unreachable!("{e}"))
    } else {
        matrix
    };
    QuantizedOperator { label, weight: w.label().to_string(), terms, kernel, matrix }
}

/// `A_f^ϖ` in `basis`.
pub fn quantize(w: &Weight, obs: &Observable, basis: &BasisSpec) -> Result<QuantizedOperator> {
    if let Some(ms) = obs.monomials() {
        let mut terms = Vec::new();
        for m in &ms {
            for mut t in monomial_terms(w, m.beta, m.n as usize)? {
                if let Coefficient::Power { coeff, .. } = &mut t.coefficient {
                    *coeff *= m.coeff;
                }
                terms.push(t);
            }
        }
        let terms = merge_terms(terms);
        let matrix = assemble(&terms, basis)?;
        return Ok(finish(obs.label(), w, terms, None, matrix));
    }
    match obs {
        Observable::PositionFn(u) => quantize_position_fn(w, u, basis),
        Observable::Separable { u, v } => quantize_separable(w, u, v, basis),
        _ => unreachable!("monomial observables handled above"),
    }
}

/// `A_{p^n}`.
pub fn quantize_p_power(w: &Weight, n: u32, basis: &BasisSpec) -> Result<QuantizedOperator> {
    quantize(w, &Observable::MomentumPower(n), basis)
}

/// `A_{qp} = (Ω₁(1)/Ω(1)) D + i[(3/2)Ω₁(1)/Ω(1) + Ω₁′(1)/Ω(1)]`.
pub fn quantize_dilation(w: &Weight, basis: &BasisSpec) -> Result<QuantizedOperator> {
    quantize(w, &Observable::Dilation, basis)
}

/// `(Ω₁(1)/Ω(1), i[(3/2)Ω₁(1) + Ω₁′(1)]/Ω(1))`: coefficient of D and the constant.
pub fn dilation_coefficients(w: &Weight) -> Result<(Complex64, Complex64)> {
    let omega = omega_one(w)?;
    let g = w.g_derivatives(1.0, 1)?;
    // Ω₁(1) = G₁(1), Ω₁′(1) = -G₁′(1) - G₁(1)
    let o1 = g[0];
    let o1p = -g[1] - g[0];
    Ok((o1 / omega, Complex64::new(0.0, 1.0) * (o1 * 1.5 + o1p) / omega))
}

/// `v(x) = (1/Ω(1)) ∫₀^∞ (dq/q) ϖ̂_p(1,−q) u(x/q)`.
pub fn position_convolution(w: &Weight, u: &PositionFn, x: f64) -> Result<f64> {
    let omega = omega_one(w)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (loc, a) in w.fourier().atoms_at(1.0) {
        if loc < 0.0 {
            total += a / (-loc) * u.eval(x / (-loc));
        } else if loc == 0.0 && a.norm() > 0.0 {
            return Err(Error::divergence("atom at the origin in ϖ̂_p(1, ·)"));
        }
    }
    if let Some(s) = &w.fourier().smooth {
        let mut bad = None;
        let r = adaptive(
            |q: f64| {
                if q == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let v = s(1.0, -q) * u.eval(x / q) / q;
                if !v.re.is_finite() || !v.im.is_finite() {
                    bad.get_or_insert(q);
                    return Complex64::new(0.0, 0.0);
                }
                v
            },
            0.0,
            f64::INFINITY,
            CONV_TOL,
        )?
        .into_result(&format!("convolution for {} at x = {x}", u.label))
        .map_err(|e| Error::divergence(format!("{}: {e}", u.label)))?;
        if let Some(q) = bad {
            return Err(Error::Evaluation { at: q });
        }
        total += r.value;
    }
    Ok(total.re / omega)
}

/// `A_{u(q)}`: multiplication by the convolution `v`; `u = q^β` gives `(d_β/d₀) Q^β` exactly.
pub fn quantize_position_fn(w: &Weight, u: &PositionFn, basis: &BasisSpec) -> Result<QuantizedOperator> {
    if u.power.is_some() {
        return quantize(w, &Observable::PositionFn(u.clone()), basis);
    }
    if let Some(c) = w.affine_weyl_factor() {
        let f = u.f.clone();
        let h: Arc<dyn Fn(f64) -> Complex64 + Send + Sync> = Arc::new(move |x| Complex64::new(c * f(x), 0.0));
        let terms = vec![DiffTerm { coefficient: Coefficient::Function { label: format!("{}(Q)", u.label), h }, order: 0 }];
        let matrix = assemble(&terms, basis)?;
        return Ok(finish(u.label.clone(), w, terms, None, matrix));
    }
    // tabulate v on the quadrature nodes; the closure keeps the weight for off-node use
    let ww = w.clone();
    let uu = u.clone();
    let h: Arc<dyn Fn(f64) -> Complex64 + Send + Sync> =
        Arc::new(move |x| Complex64::new(position_convolution(&ww, &uu, x).unwrap_or(f64::NAN), 0.0));
    // surface convolution errors before assembling
    position_convolution(w, u, basis.scale)?;
    let terms = vec![DiffTerm { coefficient: Coefficient::Function { label: format!("v_{}(Q)", u.label), h }, order: 0 }];
    let matrix = assemble(&terms, basis)?;
    Ok(finish(u.label.clone(), w, terms, None, matrix))
}

/// `h_j(x) = (1/Ω(1)) ∂^j_{x′}[(x/x′)∫(dq/q) ϖ̂_p(x/x′,−q) u(x/q)]` at `x′ = x`, `j = 0..=n`.
fn separable_coefficients(w: &Weight, u: &PositionFn, n: usize, x: f64) -> Result<Vec<f64>> {
    let omega = omega_one(w)?;
    // Φ(s) = F(x, x s); ∂^j_{x′} F = x^{-j} Φ^{(j)}(1)
    let phi: Vec<Complex64> = if let Some(c) = w.affine_weyl_factor() {
        let f = u.f.clone();
        numdiff::derivatives(|s| Complex64::new(c * SQRT_2PI * f(x * s.sqrt()), 0.0), 1.0, 0.05, n, 6.max(n))
    } else if let (Some((comps, _)), true) = (w.mixture(), n <= 2) {
        let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
        for (wi, psi) in comps {
            for (j, slot) in out.iter_mut().enumerate() {
                let r = adaptive(
                    |q: f64| {
                        if q == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        let d = match j {
                            0 => psi.eval(q),
                            1 => psi.eval_deriv(q),
                            _ => psi.eval_deriv2(q),
                        };
                        psi.eval(q) * d.conj() * q.powi(j as i32 - 1) * u.eval(x / q)
                    },
                    0.0,
                    f64::INFINITY,
                    CONV_TOL,
                )?
                .into_result("separable coefficient")?;
                *slot += r.value * (SQRT_2PI * wi);
            }
        }
        out
    } else {
        let smooth = w.fourier().smooth.clone();
        let atoms = w.fourier().clone();
        let failure = std::cell::RefCell::new(None);
        let vals = numdiff::derivatives(
            |s| {
                let uu = 1.0 / s;
                let mut tot = Complex64::new(0.0, 0.0);
                for (loc, a) in atoms.atoms_at(uu) {
                    if loc < 0.0 {
                        tot += a / (-loc) * u.eval(x / (-loc));
                    }
                }
                if let Some(sm) = &smooth {
                    match adaptive(|q: f64| if q == 0.0 { Complex64::new(0.0, 0.0) } else { sm(uu, -q) * u.eval(x / q) / q }, 0.0, f64::INFINITY, CONV_TOL)
                        .and_then(|r| r.into_result("separable kernel"))
                    {
                        Ok(r) => tot += r.value,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                        }
                    }
                }
                tot / s
            },
            1.0,
            0.05,
            n,
            6.max(n),
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        vals
    };
    Ok(phi.iter().enumerate().map(|(j, v)| v.re * x.powi(-(j as i32)) / omega).collect())
}

/// `A_{u(q)v(p)}`.
pub fn quantize_separable(
    w: &Weight,
    u: &PositionFn,
    v: &MomentumFactor,
    basis: &BasisSpec,
) -> Result<QuantizedOperator> {
    let label = Observable::Separable { u: u.clone(), v: v.clone() }.label();
    match v {
        MomentumFactor::Polynomial(c) if c.len() <= 1 => {
            let scale = c.first().copied().unwrap_or(0.0);
            let mut q = quantize_position_fn(w, u, basis)?;
            q.matrix = OperatorMatrix::new(*basis, &q.matrix.entries * Complex64::new(scale, 0.0));
            for t in &mut q.terms {
                let old = t.coefficient.clone();
                t.coefficient = match old {
                    Coefficient::Power { coeff, gamma } => Coefficient::Power { coeff: coeff * scale, gamma },
                    Coefficient::Function { label, h } => {
                        Coefficient::Function { label: format!("{scale}*{label}"), h: Arc::new(move |x| h(x) * scale) }
                    }
                };
            }
            q.label = label;
            Ok(q)
        }
        MomentumFactor::Polynomial(c) => {
            if u.power.is_some() {
                return quantize(w, &Observable::Separable { u: u.clone(), v: v.clone() }, basis);
            }
            let n_max = c.len() - 1;
            if n_max > 8 {
                return Err(Error::Unsupported(format!("p^{n_max}: powers above 8 are not supported")));
            }
            separable_coefficients(w, u, n_max, basis.scale)?;
            let mut terms = Vec::new();
            for (n, &cn) in c.iter().enumerate() {
                if cn == 0.0 {
                    continue;
                }
                for k in 0..=n {
                    let j = n - k;
                    let ww = w.clone();
                    let uu = u.clone();
                    let factor = Complex64::new(0.0, -1.0).powi(j as i32) * (binomial(n, k) * cn);
                    let h: Arc<dyn Fn(f64) -> Complex64 + Send + Sync> = Arc::new(move |x| {
                        separable_coefficients(&ww, &uu, j, x).map(|v| factor * v[j]).unwrap_or(Complex64::new(f64::NAN, 0.0))
                    });
                    terms.push(DiffTerm {
                        coefficient: Coefficient::Function { label: format!("h{j}[{}]", u.label), h },
                        order: k,
                    });
                }
            }
            let matrix = assemble(&terms, basis)?;
            Ok(finish(label, w, terms, None, matrix))
        }
        MomentumFactor::Fourier { v_hat, .. } => {
            let c_m = w.c_m()?;
            let ww = w.clone();
            let uu = u.clone();
            let vh = v_hat.clone();
            let kernel: KernelFn = Arc::new(move |x, xp| {
                let r = x / xp;
                let mut tot = Complex64::new(0.0, 0.0);
                for (loc, a) in ww.fourier().atoms_at(r) {
                    if loc < 0.0 {
                        tot += a / (-loc) * uu.eval(x / (-loc));
                    }
                }
                if let Some(sm) = &ww.fourier().smooth {
                    let rr = adaptive(
                        |q: f64| if q == 0.0 { Complex64::new(0.0, 0.0) } else { sm(r, -q) * uu.eval(x / q) / q },
                        0.0,
                        f64::INFINITY,
                        CONV_TOL,
                    )?
                    .into_result("separable kernel")?;
                    tot += rr.value;
                }
                Ok(vh(xp - x) * r * tot / c_m)
            });
            let matrix = kernel_matrix(&kernel, basis)?;
            Ok(finish(label, w, vec![], Some(kernel), matrix))
        }
    }
}

/// `∬ b_m(x) 𝒜(x,x′) b_n(x′) dx dx′` by tensor Gauss-Laguerre quadrature.
pub fn kernel_matrix(kernel: &KernelFn, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let nodes = basis.dim() + 30;
    let rule = gauss_laguerre(nodes, 0.0)?;
    let s = basis.scale;
    let pts: Vec<(f64, f64, Vec<f64>)> = rule
        .nodes
        .iter()
        .zip(&rule.absorbed_weights)
        .map(|(&y, &w)| (s * y, s * w, basis.eval_all(s * y)))
        .collect();
    let dim = basis.dim();
    let rows: Vec<Result<DMatrix<Complex64>>> = pts
        .par_iter()
        .map(|(x, wx, bx)| {
            let mut m = DMatrix::<Complex64>::zeros(dim, dim);
            for (xp, wxp, bxp) in &pts {
                let k = kernel(*x, *xp)? * (wx * wxp);
                for a in 0..dim {
                    let ka = k * bx[a];
                    for b in 0..dim {
                        m[(a, b)] += ka * bxp[b];
                    }
                }
            }
            Ok(m)
        })
        .collect();
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for r in rows {
        acc += r?;
    }
    OperatorMatrix::try_new(*basis, acc)
}

/// Outcome of [`commutator_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorReport {
    /// Best fit of `[A_q, A_p] ≈ iλ I` on the interior block.
    pub lambda: f64,
    /// `d₁/d₀`.
    pub expected: f64,
    pub interior_residual: f64,
    pub border_residual: f64,
    pub interior_dim: usize,
}

/// `[A_q, A_p]` against `iλI`. Rows and columns at the truncation border are excluded
/// from the fit and reported separately.
pub fn commutator_check(w: &Weight, basis: &BasisSpec) -> Result<CommutatorReport> {
    let aq = quantize(w, &Observable::PositionFn(PositionFn::power(1.0)), basis)?;
    let ap = quantize(w, &Observable::MomentumPower(1), basis)?;
    let c = aq.matrix.commutator(&ap.matrix)?;
    let k = basis.dim() - 1;
    let block = c.leading_block(k);
    let lambda = (0..k).map(|i| block[(i, i)].im).sum::<f64>() / k as f64;
    let target = DMatrix::<Complex64>::identity(k, k) * Complex64::new(0.0, lambda);
    let interior_residual = (&block - &target).norm();
    let full_target = DMatrix::<Complex64>::identity(k + 1, k + 1) * Complex64::new(0.0, lambda);
    let total = (&c.entries - &full_target).norm();
    let border_residual = (total * total - interior_residual * interior_residual).max(0.0).sqrt();
    let expected = (w.d_beta(1.0)? / w.d_beta(0.0)?).re;
    Ok(CommutatorReport { lambda, expected, interior_residual, border_residual, interior_dim: k })
}

/// Thermal quantization constants with their truncation bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalConstants {
    pub alpha: f64,
    pub t: f64,
    pub n_terms: usize,
    /// `(γ, c_γ(t))` for the requested γ.
    pub c_gamma: Vec<(f64, f64)>,
    /// `K(t) = α(1-t) Σ t^n ∫ (e_n′)² x dx`.
    pub kinetic: f64,
    /// `t^{n_terms+1}/(1-t) · max term`.
    pub tail_bound: f64,
}

/// `c_{γ;n} = ∫ e_n(x)² x^{-2-γ} dx`.
pub fn thermal_term_constant(alpha: f64, gamma: f64, n: usize) -> Result<f64> {
    let basis = BasisSpec::new(alpha, n.max(1))?;
    let e = WaveFunction::basis_vector(basis, n)?;
    e.moment(-2.0 - gamma, Moment::Density).map(|v| v.re).map_err(|err| match err {
        Error::Divergence(_) => Error::divergence(format!("c_(γ;n) diverges for γ = {gamma}, alpha = {alpha}")),
        other => other,
    })
}

/// The thermal series truncated at `n_terms`.
pub fn thermal_constants(alpha: f64, t: f64, gammas: &[f64], n_terms: usize) -> Result<ThermalConstants> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("thermal quantization needs alpha > 0, got {alpha}")));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::domain(format!("thermal parameter t = {t} must lie in [0, 1)")));
    }
    let n_terms = n_terms.max(1);
    let mut max_term: f64 = 0.0;
    let mut c_gamma = Vec::new();
    for &g in gammas {
        let mut s = 0.0;
        for n in 0..n_terms {
            let term = thermal_term_constant(alpha, g, n)?;
            max_term = max_term.max(term);
            s += t.powi(n as i32) * term;
        }
        c_gamma.push((g, alpha * (1.0 - t) * s));
    }
    let mut kin = 0.0;
    for n in 0..n_terms {
        let basis = BasisSpec::new(alpha, n.max(1))?;
        let e = WaveFunction::basis_vector(basis, n)?;
        let term = e.moment(1.0, Moment::DerivDensity)?.re;
        max_term = max_term.max(term);
        kin += t.powi(n as i32) * term;
    }
    let tail_bound = if t == 0.0 { 0.0 } else { t.powi(n_terms as i32 + 1) / (1.0 - t) * max_term * alpha };
    Ok(ThermalConstants { alpha, t, n_terms, c_gamma, kinetic: alpha * (1.0 - t) * kin, tail_bound })
}

/// `A_f` for the thermal state: `p → P`, `q^β → c_{β-1}(t) Q^β`, `qp → c_0(t) D`,
/// `p² → P² + K(t)/Q²`. Other observables are rejected.
pub fn thermal_quantize(
    alpha: f64,
    t: f64,
    obs: &Observable,
    n_terms: usize,
    basis: &BasisSpec,
) -> Result<(QuantizedOperator, ThermalConstants)> {
    let monomials = obs.monomials().ok_or_else(|| {
        Error::Unsupported(format!("thermal quantization covers p, q^β, qp and p² (got {})", obs.label()))
    })?;
    let mut gammas = Vec::new();
    for m in &monomials {
        match m.n {
            0 => gammas.push(m.beta - 1.0),
            1 if m.beta == 0.0 => {}
            1 if m.beta == 1.0 => gammas.push(0.0),
            2 if m.beta == 0.0 => {}
            _ => {
                return Err(Error::Unsupported(format!(
                    "thermal quantization covers p, q^β, qp and p² (got q^{} p^{})",
                    m.beta, m.n
                )))
            }
        }
    }
    let consts = thermal_constants(alpha, t, &gammas, n_terms)?;
    let lookup = |g: f64| consts.c_gamma.iter().find(|(x, _)| *x == g).map(|(_, v)| *v).unwrap();
    let mut terms = Vec::new();
    let re = |v: f64| Complex64::new(v, 0.0);
    for m in &monomials {
        let c = m.coeff;
        match (m.n, m.beta) {
            (0, b) => terms.push(DiffTerm { coefficient: Coefficient::Power { coeff: re(c * lookup(b - 1.0)), gamma: b }, order: 0 }),
            (1, b) if b == 0.0 => terms.push(DiffTerm { coefficient: Coefficient::Power { coeff: re(c), gamma: 0.0 }, order: 1 }),
            (1, _) => {
                // c_0 D = c_0 (x P - i/2)
                let c0 = lookup(0.0);
                terms.push(DiffTerm { coefficient: Coefficient::Power { coeff: re(c * c0), gamma: 1.0 }, order: 1 });
                terms.push(DiffTerm {
                    coefficient: Coefficient::Power { coeff: Complex64::new(0.0, -0.5 * c * c0), gamma: 0.0 },
                    order: 0,
                });
            }
            _ => {
                terms.push(DiffTerm { coefficient: Coefficient::Power { coeff: re(c), gamma: 0.0 }, order: 2 });
                terms.push(DiffTerm { coefficient: Coefficient::Power { coeff: re(c * consts.kinetic), gamma: -2.0 }, order: 0 });
            }
        }
    }
    let terms = merge_terms(terms);
    let matrix = assemble(&terms, basis)?;
    let label = format!("thermal(alpha={alpha}, t={t})");
    let scale = matrix.entries.norm().max(1.0);
    let matrix = if matrix.hermitian_deviation() <= 1e-8 * scale { matrix.mark_hermitian(1e-8)? } else { matrix };
    Ok((QuantizedOperator { label: obs.label(), weight: label, terms, kernel: None, matrix }, consts))
}

/// Outcome of [`covariance_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub q0: f64,
    pub p0: f64,
    /// Frobenius norm of `U A_f U† - A_{f∘g⁻¹}` on the leading block.
    pub residual: f64,
    pub relative: f64,
    /// Change of the leading block of `U A_f U†` when the basis is doubled.
    pub truncation: f64,
    pub block: usize,
    /// `residual ≤ 2 max(truncation, 1e-12 ‖A_{f∘g⁻¹}‖)`.
    pub pass: bool,
}

fn conjugated_block(w: &Weight, obs: &Observable, g: crate::affine_group::GroupElement<f64>, basis: &BasisSpec, k: usize) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let aq = || quantize(w, &Observable::PositionFn(PositionFn::power(1.0)), basis);
    let (a, transformed) = match obs {
        Observable::PositionFn(PositionFn { power: Some(b), .. }) if *b == 1.0 => {
            let a = aq()?;
            let t = &a.matrix.entries / Complex64::new(g.q(), 0.0);
            (a, t)
        }
        Observable::Dilation => {
            let a = quantize(w, &Observable::Dilation, basis)?;
            let t = &a.matrix.entries - &aq()?.matrix.entries * Complex64::new(g.p(), 0.0);
            (a, t)
        }
        other => {
            return Err(Error::Unsupported(format!("covariance check covers q and qp, got {}", other.label())))
        }
    };
    let u = crate::representation::matrix_u(basis, g).entries;
    let lhs = &u * &a.matrix.entries * u.adjoint();
    Ok((lhs.view((0, 0), (k, k)).into_owned(), transformed.view((0, 0), (k, k)).into_owned()))
}

/// `U(g) A_f U(g)† = A_{f∘g⁻¹}` for `f = q` or `f = qp`, on the leading `block × block`
/// corner of the truncated matrices.
pub fn covariance_check(
    w: &Weight,
    obs: &Observable,
    g: crate::affine_group::GroupElement<f64>,
    basis: &BasisSpec,
    block: usize,
) -> Result<CovarianceReport> {
    let k = block.min(basis.dim());
    let (lhs, rhs) = conjugated_block(w, obs, g, basis, k)?;
    let (lhs_big, _) = conjugated_block(w, obs, g, &basis.with_n_max(2 * basis.n_max + 1), k)?;
    let residual = (&lhs - &rhs).norm();
    let scale = rhs.norm().max(1e-300);
    let truncation = (&lhs - &lhs_big).norm();
    let pass = residual <= 2.0 * truncation.max(1e-12 * scale);
    Ok(CovarianceReport { q0: g.q(), p0: g.p(), residual, relative: residual / scale, truncation, block: k, pass })
}
