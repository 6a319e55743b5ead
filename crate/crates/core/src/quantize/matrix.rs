//! Matrices of `h(x) P^k` in a scaled Laguerre basis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::gauss_laguerre;
use crate::representation::BasisSpec;
use crate::specfun::ln_gamma;

/// Unnormalized `L_n^(a)(y)`, `n = 0..=n_max`.
fn laguerre_table(n_max: usize, a: f64, y: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(1.0 + a - y);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + a - y) * out[n] - (nf + a) * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn falling(x: f64, j: usize) -> f64 {
    (0..j).map(|i| x - i as f64).product()
}

/// Reduced derivatives `e_n^{(k)}(y) / (y^{α/2-k} e^{-y/2})`, `n = 0..=n_max`, and the
/// reduced values `e_n(y) / (y^{α/2} e^{-y/2})`.
pub(crate) struct Reduced {
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

pub(crate) fn reduced_derivatives(n_max: usize, alpha: f64, y: f64, k: usize, norms: &[f64]) -> Reduced {
    let base = laguerre_table(n_max, alpha, y);
    let values: Vec<f64> = base.iter().zip(norms).map(|(l, c)| l * c).collect();
    let mut derivs = vec![0.0; n_max + 1];
    // Leibniz over y^{α/2}, e^{-y/2}, L_n^(α) with L_n^(α)(l) = (-1)^l L_{n-l}^(α+l)
    for l in 0..=k {
        let shifted = if l == 0 { base.clone() } else { laguerre_table(n_max, alpha + l as f64, y) };
        for i in 0..=(k - l) {
            let j = k - l - i;
            let c = binomial(k, l) * binomial(k - l, i) * falling(alpha / 2.0, i) * (-0.5f64).powi(j as i32)
                * if l % 2 == 0 { 1.0 } else { -1.0 }
                * y.powi((k - i) as i32);
            if c == 0.0 {
                continue;
            }
            for n in l..=n_max {
                derivs[n] += c * shifted[n - l] * norms[n];
            }
        }
    }
    Reduced { values, derivs }
}

pub(crate) fn norms(n_max: usize, alpha: f64) -> Vec<f64> {
    (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            (0.5 * (ln_gamma(nf + 1.0).unwrap() - ln_gamma(nf + alpha + 1.0).unwrap())).exp()
        })
        .collect()
}

/// `⟨b_m| x^γ P^k |b_n⟩`, exact by Gauss-Laguerre quadrature.
pub fn power_derivative_matrix(basis: &BasisSpec, gamma: f64, k: usize) -> Result<DMatrix<Complex64>> {
    let alpha = basis.alpha;
    let a = alpha + gamma - k as f64;
    if !(a > -1.0) {
        return Err(Error::divergence(format!(
            "x^{gamma} P^{k} has divergent basis matrix elements for alpha = {alpha} (needs alpha + gamma - k > -1)"
        )));
    }
    let n_max = basis.n_max;
    let rule = gauss_laguerre(n_max + k + 2, a)?;
    let c = norms(n_max, alpha);
    let dim = basis.dim();
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for (&y, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let r = reduced_derivatives(n_max, alpha, y, k, &c);
        for n in 0..dim {
            let dn = wt * r.derivs[n];
            for m in 0..dim {
                acc[(m, n)] += r.values[m] * dn;
            }
        }
    }
    let s = basis.scale;
    let phase = Complex64::new(0.0, -1.0).powi(k as i32) * s.powf(gamma - k as f64);
    Ok(acc.map(|v| phase * v))
}

/// `⟨b_m| h(x) P^k |b_n⟩` for a coefficient function `h`, by Gauss-Laguerre quadrature with
/// `nodes` points (exact only for polynomial `h`).
pub fn function_derivative_matrix(
    basis: &BasisSpec,
    h: &(dyn Fn(f64) -> Complex64 + Sync),
    k: usize,
    nodes: usize,
) -> Result<DMatrix<Complex64>> {
    let alpha = basis.alpha;
    let a = alpha - k as f64;
    if !(a > -1.0) {
        return Err(Error::divergence(format!(
            "h(x) P^{k} has divergent basis matrix elements for alpha = {alpha}"
        )));
    }
    let n_max = basis.n_max;
    let rule = gauss_laguerre(nodes, a)?;
    let c = norms(n_max, alpha);
    let s = basis.scale;
    let dim = basis.dim();
    let contributions: Vec<Result<DMatrix<Complex64>>> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&y, &wt)| {
            let hv = h(s * y);
            if !hv.re.is_finite() || !hv.im.is_finite() {
                return Err(Error::Evaluation { at: s * y });
            }
            let r = reduced_derivatives(n_max, alpha, y, k, &c);
            let mut m = DMatrix::<Complex64>::zeros(dim, dim);
            for n in 0..dim {
                let dn = hv * (wt * r.derivs[n]);
                for mm in 0..dim {
                    m[(mm, n)] = dn * r.values[mm];
                }
            }
            Ok(m)
        })
        .collect();
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for c in contributions {
        acc += c?;
    }
    let phase = Complex64::new(0.0, -1.0).powi(k as i32) * s.powf(-(k as f64));
    Ok(acc * phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_derivatives_match_basis_derivatives() {
        let b = BasisSpec::new(2.5, 6).unwrap();
        let c = norms(6, 2.5);
        let y = 1.7f64;
        let (e, d, d2) = b.eval_all_d2(y);
        let r1 = reduced_derivatives(6, 2.5, y, 1, &c);
        let r2 = reduced_derivatives(6, 2.5, y, 2, &c);
        let f0 = y.powf(1.25) * (-y / 2.0).exp();
        for n in 0..=6 {
            assert!((r1.values[n] * f0 - e[n]).abs() < 1e-14);
            assert!((r1.derivs[n] * f0 / y - d[n]).abs() < 1e-13, "n={n}");
            assert!((r2.derivs[n] * f0 / (y * y) - d2[n]).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn position_matrix_is_tridiagonal() {
        let b = BasisSpec::new(2.0, 5).unwrap();
        let q = power_derivative_matrix(&b, 1.0, 0).unwrap();
        // x e_n = -sqrt(n(n+α)) e_{n-1} + (2n+α+1) e_n - sqrt((n+1)(n+1+α)) e_{n+1}
        assert!((q[(2, 2)].re - 7.0).abs() < 1e-12);
        assert!((q[(2, 3)].re + 15f64.sqrt()).abs() < 1e-12);
        assert!(q[(0, 3)].norm() < 1e-12);
    }

    #[test]
    fn momentum_is_hermitian_and_squares() {
        let b = BasisSpec::scaled(2.0, 12, 0.7).unwrap();
        let p = power_derivative_matrix(&b, 0.0, 1).unwrap();
        assert!((&p - p.adjoint()).norm() < 1e-12);
        let p2 = power_derivative_matrix(&b, 0.0, 2).unwrap();
        assert!((&p2 - p2.adjoint()).norm() < 1e-10);
        let h = p2.map(|z| z.re);
        assert!(h.symmetric_eigenvalues().iter().all(|&v| v > 0.0));
        assert!(power_derivative_matrix(&b, -2.0, 2).is_err());
    }

    #[test]
    fn function_coefficient_reproduces_power() {
        let b = BasisSpec::scaled(3.0, 8, 1.3).unwrap();
        let exact = power_derivative_matrix(&b, 2.0, 1).unwrap();
        let f = |x: f64| Complex64::new(x * x, 0.0);
        let num = function_derivative_matrix(&b, &f, 1, 30).unwrap();
        assert!((exact - num).norm() < 1e-9);
    }
}
