//! The UIR `U(q,p)ψ(x) = e^{ipx} ψ(x/q)/√q` on L²(ℝ₊*, dx) and its Laguerre-basis matrices.

mod basis;
mod matrix_element;
mod operator;
mod wave;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::affine_group::GroupElement;
use crate::error::{Error, Result};
use crate::specfun::jacobi_upto;

pub use basis::BasisSpec;
pub use matrix_element::{diagonal_elements_raw, matrix_element_raw};
pub use operator::OperatorMatrix;
pub use wave::{Moment, WaveFunction};

use matrix_element::{element_from_poly, ln_factorial_part, ZData};

/// `U(g)ψ`.
pub fn apply_u(g: GroupElement<f64>, psi: &WaveFunction) -> WaveFunction {
    let (q, p) = (g.q(), g.p());
    let rq = q.sqrt().recip();
    psi.map_pointwise_isometric(move |x, w| Complex64::from_polar(rq, p * x) * w.eval(x / q))
}

/// `⟨b_m | U(g) b_n⟩` in `basis`.
pub fn matrix_element(basis: &BasisSpec, m: usize, n: usize, g: GroupElement<f64>) -> Complex64 {
    matrix_element_raw(basis.alpha, m, n, g.q(), basis.scale * g.p())
}

/// Truncated matrix `[U_mn(g)]`, `0 <= m, n <= n_max`. The attached truncation
/// estimate is the Frobenius norm of the border row and column at index `n_max`.
pub fn matrix_u(basis: &BasisSpec, g: GroupElement<f64>) -> OperatorMatrix {
    let dim = basis.dim();
    let alpha = basis.alpha;
    let z = ZData::new(g.q(), basis.scale * g.p());
    // one Jacobi recurrence per diagonal offset d serves (m, m+d) and (m+d, m)
    let diagonals: Vec<(usize, Vec<(usize, Complex64, Complex64)>)> = (0..dim)
        .into_par_iter()
        .map(|d| {
            let count = dim - d;
            let polys = jacobi_upto(count - 1, d as f64, alpha, z.y);
            let entries = (0..count)
                .map(|m| {
                    let lf = ln_factorial_part(alpha, m, m + d);
                    let upper = element_from_poly(alpha, m, m + d, &z, polys[m], lf);
                    let lower = if d == 0 {
                        upper
                    } else {
                        element_from_poly(alpha, m + d, m, &z, polys[m], lf)
                    };
                    (m, upper, lower)
                })
                .collect();
            (d, entries)
        })
        .collect();
    let mut entries = DMatrix::zeros(dim, dim);
    for (d, row) in diagonals {
        for (m, upper, lower) in row {
            entries[(m, m + d)] = upper;
            entries[(m + d, m)] = lower;
        }
    }
    let n = dim - 1;
    let border: f64 = (0..dim).map(|j| entries[(n, j)].norm_sqr()).sum::<f64>()
        + (0..n).map(|i| entries[(i, n)].norm_sqr()).sum::<f64>();
    OperatorMatrix::new(*basis, entries).with_truncation(border.sqrt())
}

/// Summation method for the diagonal series of `U(g)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Summation {
    /// Partial sums up to `terms`, averaged over the second half.
    Direct { terms: usize },
    /// `lim_{t→1⁻} Σ t^m U_mm`, extrapolated in `1 - t` from the given grid.
    Abel { t_grid: Vec<f64> },
}

impl Default for Summation {
    fn default() -> Self {
        Summation::Abel { t_grid: vec![0.99, 0.995, 0.998, 0.999] }
    }
}

/// Value plus error estimate of a summed trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    pub value: Complex64,
    pub error: f64,
}

/// Trace of `U(g)` in the basis of parameter `alpha` (the scale is irrelevant).
pub fn trace_u(basis: &BasisSpec, g: GroupElement<f64>, summation: &Summation) -> Result<TraceEstimate> {
    basis.validate()?;
    let (q, p) = (g.q(), basis.scale * g.p());
    if q == 1.0 {
        return Err(Error::divergence("trace of U(q,p) diverges at q = 1"));
    }
    match summation {
        Summation::Direct { terms } => {
            if *terms < 4 {
                return Err(Error::config("direct summation needs at least 4 terms"));
            }
            let diag = diagonal_elements_raw(basis.alpha, *terms, q, p);
            let mut s = Complex64::new(0.0, 0.0);
            let mut partial = Vec::with_capacity(diag.len());
            for d in &diag {
                s += d;
                partial.push(s);
            }
            let tail = &partial[partial.len() / 2..];
            let mean = tail.iter().sum::<Complex64>() / tail.len() as f64;
            let spread = tail.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
            Ok(TraceEstimate { value: mean, error: spread })
        }
        Summation::Abel { t_grid } => {
            if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
                return Err(Error::config("Abel grid values must lie in (0, 1)"));
            }
            let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
            let terms = ((1e-17f64).ln() / t_max.ln()).ceil() as usize + 1;
            let diag = diagonal_elements_raw(basis.alpha, terms, q, p);
            let sums: Vec<Complex64> = t_grid
                .iter()
                .map(|&t| {
                    let mut w = 1.0;
                    let mut s = Complex64::new(0.0, 0.0);
                    for d in &diag {
                        s += d * w;
                        w *= t;
                        if w < 1e-18 {
                            break;
                        }
                    }
                    s
                })
                .collect();
            let hs: Vec<f64> = t_grid.iter().map(|t| 1.0 - t).collect();
            let (value, error) = neville_at_zero(&hs, &sums);
            Ok(TraceEstimate { value, error })
        }
    }
}

/// Polynomial extrapolation to `h = 0`; the error is the change from the
/// extrapolation that omits the first point.
fn neville_at_zero(h: &[f64], v: &[Complex64]) -> (Complex64, f64) {
    let extrap = |h: &[f64], v: &[Complex64]| -> Complex64 {
        let mut p = v.to_vec();
        let n = p.len();
        for k in 1..n {
            for i in 0..n - k {
                p[i] = (p[i + 1] * h[i] - p[i] * h[i + k]) / (h[i] - h[i + k]);
            }
        }
        p[0]
    };
    let full = extrap(h, v);
    if h.len() < 2 {
        return (full, f64::INFINITY);
    }
    let reduced = extrap(&h[1..], &v[1..]);
    (full, (full - reduced).norm())
}

/// Closed form of `Σ t^m U_mm(q,p)` (Jacobi generating function), `0 <= t < 1`.
pub fn abel_trace_closed_form(alpha: f64, q: f64, p: f64, t: f64) -> Complex64 {
    let zp = Complex64::new(q + 1.0, 2.0 * q * p);
    let zm = Complex64::new(q - 1.0, 2.0 * q * p);
    let y = 1.0 - 2.0 * (zm.norm() / zp.norm()).powi(2);
    let theta = y.clamp(-1.0, 1.0).acos();
    let z = zp / zp.conj() * t;
    // R' = sqrt(1 - 2Yz + z^2) as a product of two principal roots, each factor with Re > 0
    let one = Complex64::new(1.0, 0.0);
    let r1 = (one - z * Complex64::from_polar(1.0, theta)).sqrt() * (one - z * Complex64::from_polar(1.0, -theta)).sqrt();
    let zb = zp.conj();
    let front = 2f64.powf(2.0 * alpha + 1.0) * q.powf((alpha + 1.0) / 2.0);
    let r = zb * r1;
    front / r * (zb * (one + z + r1)).powf(-alpha)
}

/// `t → 1⁻` limit of the Abel-summed trace: `min(q, 1/q)^{α/2} √q / |q - 1|`.
pub fn trace_u_limit(alpha: f64, q: f64) -> Result<f64> {
    if q == 1.0 {
        return Err(Error::divergence("trace of U(q,p) diverges at q = 1"));
    }
    Ok(q.min(1.0 / q).powf(alpha / 2.0) * q.sqrt() / (q - 1.0).abs())
}

/// Multiplication by `(2π/x)^{power/2}`; `power = 1` is the Duflo-Moore operator.
pub fn duflo_moore_apply(power: f64, psi: &WaveFunction) -> Result<WaveFunction> {
    if power == 0.0 {
        return Ok(psi.clone());
    }
    let nu = psi.small_x_exponent() - power / 2.0;
    if !(nu > -0.5) {
        return Err(Error::Admissibility(format!(
            "(2π/x)^{} ψ is not square integrable at the origin (behaves like x^{nu})",
            power / 2.0
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    psi.map_pointwise(nu, move |x, v| v * (two_pi / x).powf(power / 2.0)).map_err(|e| match e {
        Error::Divergence(m) | Error::Accuracy { context: m, .. } => Error::Admissibility(m),
        other => other,
    })
}

/// `c_{-1} = ∫ |ψ|² / x dx`, finite iff ψ is admissible.
pub fn admissibility_constant(psi: &WaveFunction) -> Result<f64> {
    if !(psi.small_x_exponent() > 0.0) {
        return Err(Error::Admissibility(format!(
            "∫|ψ|²/x diverges for ψ ~ x^{} at the origin",
            psi.small_x_exponent()
        )));
    }
    let tol = crate::quadrature::Tolerance { rel: 1e-11, abs: 1e-14, max_subdiv: 4000 };
    let r = crate::quadrature::adaptive(|x: f64| psi.eval(x).norm_sqr() / x, 0.0, f64::INFINITY, tol)?;
    let r = r.into_result("admissibility integral").map_err(|e| Error::Admissibility(e.to_string()))?;
    Ok(r.value)
}

/// Affine coherent state `|q,p⟩ = U(q,p)|ψ⟩`.
pub fn make_acs(g: GroupElement<f64>, fiducial: &WaveFunction) -> Result<WaveFunction> {
    admissibility_constant(fiducial)?;
    Ok(apply_u(g, fiducial))
}
