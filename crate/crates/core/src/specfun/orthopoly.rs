use crate::error::{Error, Result};
use crate::scalar::Real;

use super::gamma::ln_gamma;

/// Classical orthogonal polynomial family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolyFamily<T> {
    Laguerre { alpha: T },
    Jacobi { a: T, b: T },
    Hermite,
}

impl<T: Real> PolyFamily<T> {
    pub fn validate(&self) -> Result<()> {
        let m1 = -T::one();
        match *self {
            PolyFamily::Laguerre { alpha } if !(alpha > m1) || !alpha.is_finite() => Err(
                Error::domain(format!("Laguerre parameter alpha = {alpha} must exceed -1")),
            ),
            PolyFamily::Jacobi { a, b }
                if !(a > m1 && b > m1) || !a.is_finite() || !b.is_finite() =>
            {
                Err(Error::domain(format!(
                    "Jacobi parameters (a, b) = ({a}, {b}) must both exceed -1"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Evaluates `L_n^(alpha)`, `P_n^(a,b)` or `H_n` at `x` by forward recurrence.
pub fn orthopoly_eval<T: Real>(family: PolyFamily<T>, n: usize, x: T) -> Result<T> {
    family.validate()?;
    if !x.is_finite() {
        return Err(Error::domain("polynomial argument must be finite"));
    }
    Ok(match family {
        PolyFamily::Laguerre { alpha } => laguerre(n, alpha, x),
        PolyFamily::Jacobi { a, b } => jacobi(n, a, b, x),
        PolyFamily::Hermite => hermite(n, x),
    })
}

/// Generalized Laguerre polynomial, no parameter validation.
pub fn laguerre<T: Real>(n: usize, alpha: T, x: T) -> T {
    let one = T::one();
    if n == 0 {
        return one;
    }
    let mut prev = one;
    let mut cur = one + alpha - x;
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let next = ((kf + kf + one + alpha - x) * cur - (kf + alpha) * prev) / (kf + one);
        prev = cur;
        cur = next;
    }
    cur
}

/// Jacobi polynomial, no parameter validation.
pub fn jacobi<T: Real>(n: usize, a: T, b: T, x: T) -> T {
    jacobi_upto(n, a, b, x)[n]
}

/// `P_0 .. P_n` at `x`.
pub fn jacobi_upto<T: Real>(n: usize, a: T, b: T, x: T) -> Vec<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(one);
    if n == 0 {
        return out;
    }
    out.push((a - b) / two + (a + b + two) * x / two);
    let ab = a + b;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let c = two * kf + ab;
        let a1 = two * kf * (kf + ab) * (c - two);
        let a2 = (c - one) * (a * a - b * b);
        let a3 = (c - two) * (c - one) * c;
        let a4 = two * (kf + a - one) * (kf + b - one) * c;
        let next = ((a2 + a3 * x) * out[k - 1] - a4 * out[k - 2]) / a1;
        out.push(next);
    }
    out
}

/// Physicists' Hermite polynomial.
pub fn hermite<T: Real>(n: usize, x: T) -> T {
    let two = T::lit(2.0);
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = two * x;
    for k in 1..n {
        let next = two * x * cur - two * T::from_usize_lossy(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal Hermite functions `psi_0 .. psi_n` at `x`.
pub fn hermite_functions_upto<T: Real>(n: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    let psi0 = T::PI().powf(T::lit(-0.25)) * (-x * x / T::lit(2.0)).exp();
    out.push(psi0);
    if n == 0 {
        return out;
    }
    out.push(T::lit(2.0).sqrt() * x * psi0);
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let next = (T::lit(2.0) / (kf + T::one())).sqrt() * x * out[k]
            - (kf / (kf + T::one())).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Orthonormal Hermite function `psi_n(x) = H_n(x) e^{-x^2/2} / sqrt(2^n n! sqrt(pi))`.
pub fn hermite_function<T: Real>(n: usize, x: T) -> T {
    hermite_functions_upto(n, x)[n]
}

/// Derivative of the orthonormal Hermite function.
pub fn hermite_function_deriv<T: Real>(n: usize, x: T) -> T {
    let psi = hermite_functions_upto(n + 1, x);
    let up = (T::from_usize_lossy(n + 1) / T::lit(2.0)).sqrt() * psi[n + 1];
    if n == 0 {
        -up
    } else {
        (T::from_usize_lossy(n) / T::lit(2.0)).sqrt() * psi[n - 1] - up
    }
}

/// Orthonormal Laguerre functions
/// `e_k(x) = sqrt(k!/Γ(k+α+1)) e^{-x/2} x^{α/2} L_k^(α)(x)`, `k = 0..=n`.
pub fn laguerre_functions_upto<T: Real>(n: usize, alpha: T, x: T) -> Result<Vec<T>> {
    PolyFamily::Laguerre { alpha }.validate()?;
    if !(x >= T::zero()) {
        return Err(Error::domain("Laguerre functions live on x >= 0"));
    }
    let one = T::one();
    let e0 = if x == T::zero() {
        if alpha == T::zero() {
            one
        } else if alpha > T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        let half = T::lit(0.5);
        (alpha * half * x.ln() - half * x - half * ln_gamma(alpha + one)?).exp()
    };
    let mut out = Vec::with_capacity(n + 1);
    out.push(e0);
    if n == 0 {
        return Ok(out);
    }
    out.push((one + alpha - x) * e0 / (one + alpha).sqrt());
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let next = ((kf + kf + one + alpha - x) * out[k]
            - (kf * (kf + alpha)).sqrt() * out[k - 1])
            / ((kf + one) * (kf + one + alpha)).sqrt();
        out.push(next);
    }
    Ok(out)
}

/// Single orthonormal Laguerre function.
pub fn laguerre_function<T: Real>(n: usize, alpha: T, x: T) -> Result<T> {
    Ok(laguerre_functions_upto(n, alpha, x)?[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        let lag0 = PolyFamily::Laguerre { alpha: 0.0 };
        assert_eq!(orthopoly_eval(lag0, 0, 3.7).unwrap(), 1.0);
        let lag1 = PolyFamily::Laguerre { alpha: 1.0 };
        assert_eq!(orthopoly_eval(lag1, 1, 0.0).unwrap(), 2.0);
        assert_eq!(orthopoly_eval(PolyFamily::Hermite, 1, 2.0).unwrap(), 4.0);
        let jac = PolyFamily::Jacobi { a: 0.0, b: 2.5 };
        assert_eq!(orthopoly_eval(jac, 0, -0.3).unwrap(), 1.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(orthopoly_eval(PolyFamily::Laguerre { alpha: -1.0 }, 2, 1.0).is_err());
        assert!(orthopoly_eval(PolyFamily::Jacobi { a: 0.0, b: -2.0 }, 2, 0.1).is_err());
        assert!(orthopoly_eval(PolyFamily::Hermite, 2, f64::NAN).is_err());
    }

    #[test]
    fn explicit_low_degree_polynomials() {
        let x = 0.37_f64;
        let a = 1.7;
        // L_2^(a) = ((a+1)(a+2) - 2(a+2)x + x^2) / 2
        let l2 = ((a + 1.0) * (a + 2.0) - 2.0 * (a + 2.0) * x + x * x) / 2.0;
        assert_relative_eq!(laguerre(2, a, x), l2, max_relative = 1e-14);
        assert_relative_eq!(hermite(3, x), 8.0 * x.powi(3) - 12.0 * x, max_relative = 1e-14);
        // P_1^(a,b) and Legendre P_3
        assert_relative_eq!(jacobi(1, 0.5, 2.0, x), (0.5 - 2.0) / 2.0 + 4.5 * x / 2.0, max_relative = 1e-14);
        assert_relative_eq!(jacobi(3, 0.0, 0.0, x), 0.5 * (5.0 * x.powi(3) - 3.0 * x), max_relative = 1e-13);
    }

    #[test]
    fn high_degree_values() {
        // reference values from arbitrary precision evaluation
        assert_relative_eq!(laguerre(200, 0.5, 50.0_f64), laguerre_ref_200(), max_relative = 1e-11);
        assert_relative_eq!(hermite(30, 1.5_f64), -3.807_852_160_312_072_7e20, max_relative = 1e-12);
    }

    fn laguerre_ref_200() -> f64 {
        // L_200^(0.5)(50)
        -2_029_816_437.848_223_5
    }

    #[test]
    fn hermite_functions_match_polynomials() {
        let x = 0.8_f64;
        let fns = hermite_functions_upto(7, x);
        let mut fact = 1.0;
        for (n, &f) in fns.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let norm = (2f64.powi(n as i32) * fact * std::f64::consts::PI.sqrt()).sqrt();
            assert_relative_eq!(f, hermite(n, x) * (-x * x / 2.0).exp() / norm, max_relative = 1e-13);
        }
        let h = 1e-5;
        let fd = (hermite_function(3, x + h) - hermite_function(3, x - h)) / (2.0 * h);
        assert_relative_eq!(hermite_function_deriv(3, x), fd, max_relative = 1e-8);
    }

    #[test]
    fn laguerre_functions_match_definition() {
        let (alpha, x) = (2.3_f64, 1.9);
        let fns = laguerre_functions_upto(6, alpha, x).unwrap();
        for (k, &f) in fns.iter().enumerate() {
            let kf = k as f64;
            let c = (ln_gamma(kf + 1.0).unwrap() - ln_gamma(kf + alpha + 1.0).unwrap()).exp().sqrt();
            let want = c * (-x / 2.0).exp() * x.powf(alpha / 2.0) * laguerre(k, alpha, x);
            assert_relative_eq!(f, want, max_relative = 1e-12);
        }
        assert_eq!(laguerre_function(3, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_precision_recurrences() {
        assert!((laguerre(3, 1.0_f32, 0.5) - laguerre(3, 1.0_f64, 0.5) as f32).abs() < 1e-5);
    }

    /// Explicit sum with generalized binomials; exact zeros for negative integer parameters.
    fn jacobi_explicit(n: usize, a: f64, b: f64, x: f64) -> f64 {
        jacobi_explicit_terms(n, a, b, x).iter().sum()
    }

    fn jacobi_explicit_terms(n: usize, a: f64, b: f64, x: f64) -> Vec<f64> {
        let binom = |top: f64, k: usize| (0..k).fold(1.0, |acc, j| acc * (top - j as f64) / (j + 1) as f64);
        (0..=n)
            .map(|s| {
                binom(n as f64 + a, n - s)
                    * binom(n as f64 + b, s)
                    * ((x - 1.0) / 2.0).powi(s as i32)
                    * ((x + 1.0) / 2.0).powi((n - s) as i32)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn jacobi_symmetry_identity(m in 0usize..=10, n in 0usize..=10, x in -0.99f64..0.99, alpha in 0.1f64..4.0) {
            // P_m^(n-m,α)(X) = (m+α)! n! / ((n+α)! m!) ((X-1)/2)^(m-n) P_n^(m-n,α)(X)
            let a1 = n as f64 - m as f64;
            let lhs = if m <= n { jacobi(m, a1, alpha, x) } else { jacobi_explicit(m, a1, alpha, x) };
            let other = if m <= n { jacobi_explicit(n, -a1, alpha, x) } else { jacobi(n, -a1, alpha, x) };
            let lr = ln_gamma(m as f64 + alpha + 1.0).unwrap() + ln_gamma(n as f64 + 1.0).unwrap()
                - ln_gamma(n as f64 + alpha + 1.0).unwrap() - ln_gamma(m as f64 + 1.0).unwrap();
            let rhs = other * lr.exp() * ((x - 1.0) / 2.0).powi(m as i32 - n as i32);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "lhs {} rhs {}", lhs, rhs);
        }

        #[test]
        fn jacobi_recurrence_matches_explicit_sum(n in 0usize..=25, a in 0.0f64..12.0, b in 0.05f64..4.0, x in -1.0f64..1.0) {
            let r = jacobi(n, a, b, x);
            let terms = jacobi_explicit_terms(n, a, b, x);
            let e: f64 = terms.iter().sum();
            let mag: f64 = terms.iter().map(|t| t.abs()).sum();
            prop_assert!((r - e).abs() <= 1e-12 * mag.max(1.0), "rec {} sum {}", r, e);
        }
    }
}
