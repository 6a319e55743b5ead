use num_complex::Complex;

use crate::scalar::Real;
use crate::specfun::{jacobi_upto, ln_gamma};

/// Shared pieces of the closed form at one group element.
pub(crate) struct ZData<T> {
    pub ln_abs_zp: T,
    pub ln_abs_zm: T,
    pub arg_zp: T,
    pub arg_zm: T,
    pub zm_is_zero: bool,
    pub y: T,
    pub ln_q: T,
}

impl<T: Real> ZData<T> {
    pub fn new(q: T, p: T) -> Self {
        let one = T::one();
        let two = T::lit(2.0);
        let zp = Complex::new(q + one, two * q * p);
        let zm = Complex::new(q - one, two * q * p);
        let ap = zp.norm();
        let am = zm.norm();
        let ratio = am / ap;
        ZData {
            ln_abs_zp: ap.ln(),
            ln_abs_zm: am.ln(),
            arg_zp: zp.arg(),
            arg_zm: zm.arg(),
            zm_is_zero: am == T::zero(),
            y: one - two * ratio * ratio,
            ln_q: q.ln(),
        }
    }
}

/// Common `ln 2^{α+1} q^{(α+1)/2}`.
fn ln_front<T: Real>(alpha: T, z: &ZData<T>) -> T {
    let a1 = alpha + T::one();
    a1 * T::LN_2() + a1 * T::lit(0.5) * z.ln_q
}

/// `U_mn` for the pair `lo = min(m, n)`, `d = |m - n|`, given `P_lo^{(d, α)}(Y)`.
pub(crate) fn element_from_poly<T: Real>(
    alpha: T,
    m: usize,
    n: usize,
    z: &ZData<T>,
    poly: T,
    ln_factorial_part: T,
) -> Complex<T> {
    if poly == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    let d = hi - lo;
    if d > 0 && z.zm_is_zero {
        return Complex::new(T::zero(), T::zero());
    }
    let df = T::from_usize_lossy(d);
    let lof = T::from_usize_lossy(lo);
    let top = T::from_usize_lossy(hi) + alpha + T::one();
    let mut ln_mag = ln_front(alpha, z) + ln_factorial_part + lof * z.ln_abs_zp - top * z.ln_abs_zp;
    if d > 0 {
        ln_mag += df * z.ln_abs_zm;
    }
    ln_mag += poly.abs().ln();
    let mut phase = lof * z.arg_zp + top * z.arg_zp;
    if m <= n {
        // conj(Z-)^{n-m}
        if d > 0 {
            phase -= df * z.arg_zm;
        }
    } else {
        // (-1)^{m-n} Z-^{m-n}
        phase += df * (z.arg_zm + T::PI());
    }
    if poly < T::zero() {
        phase += T::PI();
    }
    Complex::from_polar(ln_mag.exp(), phase)
}

/// `½ ln(Γ(hi+α+1) lo! / (Γ(lo+α+1) hi!))`.
pub(crate) fn ln_factorial_part<T: Real>(alpha: T, lo: usize, hi: usize) -> T {
    let one = T::one();
    let lof = T::from_usize_lossy(lo);
    let hif = T::from_usize_lossy(hi);
    let v = ln_gamma(hif + alpha + one).unwrap_or_else(|_| T::nan())
        + ln_gamma(lof + one).unwrap_or_else(|_| T::nan())
        - ln_gamma(lof + alpha + one).unwrap_or_else(|_| T::nan())
        - ln_gamma(hif + one).unwrap_or_else(|_| T::nan());
    T::lit(0.5) * v
}

/// Matrix element `⟨e_m | U(q,p) e_n⟩` of the UIR in the Laguerre basis of parameter `alpha`.
pub fn matrix_element_raw<T: Real>(alpha: T, m: usize, n: usize, q: T, p: T) -> Complex<T> {
    let z = ZData::new(q, p);
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    let poly = jacobi_upto(lo, T::from_usize_lossy(hi - lo), alpha, z.y)[lo];
    element_from_poly(alpha, m, n, &z, poly, ln_factorial_part(alpha, lo, hi))
}

/// Diagonal elements `U_00 .. U_kk` via one Jacobi recurrence.
pub fn diagonal_elements_raw<T: Real>(alpha: T, k: usize, q: T, p: T) -> Vec<Complex<T>> {
    let z = ZData::new(q, p);
    let polys = jacobi_upto(k, T::zero(), alpha, z.y);
    polys
        .iter()
        .enumerate()
        .map(|(m, &poly)| element_from_poly(alpha, m, m, &z, poly, T::zero()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive, Tolerance};
    use crate::specfun::laguerre_functions_upto;
    use num_complex::Complex64;
    use proptest::prelude::*;

    /// ⟨e_m|U(q,p)e_n⟩ = ∫ e_m(x) e^{ipx} e_n(x/q) / sqrt(q) dx
    fn integral_form(alpha: f64, m: usize, n: usize, q: f64, p: f64) -> Complex64 {
        let tol = Tolerance { rel: 1e-12, abs: 1e-14, max_subdiv: 5000 };
        let f = |x: f64| {
            let em = laguerre_functions_upto(m, alpha, x).unwrap()[m];
            let en = laguerre_functions_upto(n, alpha, x / q).unwrap()[n];
            Complex64::from_polar(em * en / q.sqrt(), p * x)
        };
        adaptive(f, 0.0, f64::INFINITY, tol).unwrap().value
    }

    #[test]
    fn ground_state_closed_form() {
        // α = 1, (q,p) = (2,0): 2^2 2^1 / 3^2 = 8/9
        let v = matrix_element_raw(1.0, 0, 0, 2.0, 0.0);
        assert!((v - Complex64::new(8.0 / 9.0, 0.0)).norm() < 1e-14);
        let v = matrix_element_raw(1.7, 0, 0, 1.0, 0.0);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_element() {
        for m in 0..6 {
            for n in 0..6 {
                let v = matrix_element_raw(2.5, m, n, 1.0, 0.0);
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((v - Complex64::new(want, 0.0)).norm() < 1e-13, "{m} {n} {v}");
            }
        }
    }

    #[test]
    fn closed_form_matches_integral_form() {
        for &(alpha, q, p) in &[(1.0, 2.0, 0.3), (2.5, 0.6, -1.1), (0.5, 1.3, 0.05), (3.0, 4.0, 0.7)] {
            for m in 0..5 {
                for n in 0..5 {
                    let a = matrix_element_raw(alpha, m, n, q, p);
                    let b = integral_form(alpha, m, n, q, p);
                    assert!((a - b).norm() < 1e-9, "α={alpha} q={q} p={p} m={m} n={n}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn diagonal_batch_matches_single() {
        let d = diagonal_elements_raw(1.5, 30, 0.7, 0.9);
        for (m, v) in d.iter().enumerate() {
            assert!((v - matrix_element_raw(1.5, m, m, 0.7, 0.9)).norm() < 1e-14);
        }
    }

    #[test]
    fn large_indices_stay_finite() {
        let v: Complex64 = matrix_element_raw(2.0, 180, 150, 3.0, 2.0);
        assert!(v.re.is_finite() && v.im.is_finite() && v.norm() <= 1.0);
    }

    proptest! {
        #[test]
        fn unitarity_identity(m in 0usize..25, n in 0usize..25, q in 0.1f64..10.0, p in -5.0f64..5.0, alpha in 0.2f64..4.0) {
            // U_mn(1/q, -qp) = conj(U_nm(q, p))
            let lhs = matrix_element_raw(alpha, m, n, 1.0 / q, -q * p);
            let rhs = matrix_element_raw(alpha, n, m, q, p).conj();
            prop_assert!((lhs - rhs).norm() <= 1e-10, "{} vs {}", lhs, rhs);
        }
    }
}
