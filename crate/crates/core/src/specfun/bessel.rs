use crate::error::{Error, Result};
use crate::scalar::Real;

use super::gamma::temme_gammas;

/// Modified Bessel function kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    I,
    K,
}

const MAXIT: usize = 200_000;

fn check_args<T: Real>(nu: T, x: T) -> Result<()> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::domain(format!("Bessel argument x = {x} must be positive")));
    }
    if !(nu >= T::zero()) || !nu.is_finite() {
        return Err(Error::domain(format!("Bessel order {nu} must be non-negative")));
    }
    Ok(())
}

fn no_convergence(what: &str, x: f64) -> Error {
    Error::Accuracy {
        estimate: f64::NAN,
        error: f64::NAN,
        context: format!("{what} did not converge at x = {x}"),
    }
}

/// Large-argument expansions of `e^{-x} I_nu(x)` and `e^{x} K_nu(x)`.
fn asymptotic<T: Real>(nu: T, x: T) -> (T, T) {
    let mu4 = T::lit(4.0) * nu * nu;
    let eight_x = T::lit(8.0) * x;
    let mut term = T::one();
    let mut sum_k = T::one();
    let mut sum_i = T::one();
    for k in 1..60 {
        let odd = T::from_usize_lossy(2 * k - 1);
        let next = term * (mu4 - odd * odd) / (T::from_usize_lossy(k) * eight_x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum_k += term;
        sum_i += if k % 2 == 1 { -term } else { term };
        if term.abs() < T::epsilon() * T::lit(0.1) {
            break;
        }
    }
    let two_pi_x = T::lit(2.0) * T::PI() * x;
    (sum_i / two_pi_x.sqrt(), sum_k * (T::PI() / (T::lit(2.0) * x)).sqrt())
}

/// `e^{-x} I_nu(x)` from the power series, for small `x`.
fn i_series<T: Real>(nu: T, x: T) -> Result<T> {
    let y = T::lit(0.25) * x * x;
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..40 {
        let kf = T::from_usize_lossy(k);
        term = term * y / (kf * (kf + nu));
        sum += term;
        if term < T::epsilon() * sum {
            break;
        }
    }
    let ln_front = nu * (T::lit(0.5) * x).ln() - super::gamma::ln_gamma(nu + T::one())? - x;
    Ok(sum * ln_front.exp())
}

/// `(e^{-x} I_nu(x), e^{x} K_nu(x))` for `nu >= 0`, `x > 0`.
pub fn bessel_ik_scaled<T: Real>(nu: T, x: T) -> Result<(T, T)> {
    check_args(nu, x)?;
    if x > T::lit(5000.0) && x > T::lit(20.0) * nu * nu {
        return Ok(asymptotic(nu, x));
    }
    let eps = T::epsilon();
    let fpmin = T::min_positive_value().sqrt();
    let big = T::one() / fpmin;
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);

    let nl = (nu + half).floor().to_f64_lossy() as usize;
    let xmu = nu - T::from_usize_lossy(nl);
    let xmu2 = xmu * xmu;
    let xi = one / x;
    let xi2 = two * xi;

    // CF1 for I'_nu / I_nu
    let mut h = nu * xi;
    if h < fpmin {
        h = fpmin;
    }
    let mut b = xi2 * nu;
    let mut d = T::zero();
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = one / (b + d);
        c = b + one / c;
        let del = c * d;
        h = del * h;
        if (del - one).abs() < eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(no_convergence("Bessel continued fraction CF1", x.to_f64_lossy()));
    }

    // downward recurrence to the order mu in [-1/2, 1/2)
    let mut ril = fpmin;
    let mut ripl = h * ril;
    let mut ril1 = ril;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
        if ril.abs() > big {
            ril *= fpmin;
            ripl *= fpmin;
            ril1 *= fpmin;
        }
    }
    let f = ripl / ril;

    let (mut rkmu, mut rk1);
    if x < two {
        // Temme series, scaled by e^x afterwards
        let x2 = half * x;
        let pimu = T::PI() * xmu;
        let fact = if pimu.abs() < eps { one } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < eps { one } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = half * ee / gampl;
        let mut q = half / (ee * gammi);
        let mut cc = one;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut done = false;
        for i in 1..MAXIT {
            let fi = T::from_usize_lossy(i);
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            cc *= dd / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = cc * ff;
            sum += del;
            let del1 = cc * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * eps {
                done = true;
                break;
            }
        }
        if !done {
            return Err(no_convergence("Bessel K series", x.to_f64_lossy()));
        }
        let ex = x.exp();
        rkmu = sum * ex;
        rk1 = sum1 * xi2 * ex;
    } else {
        // Steed's CF2
        let mut b = two * (one + x);
        let mut d = one / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = T::zero();
        let mut q2 = one;
        let a1 = T::lit(0.25) - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = one + q * delh;
        let mut done = false;
        for i in 2..MAXIT {
            let fi = T::from_usize_lossy(i);
            a -= two * (fi - one);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += two;
            d = one / (b + a * d);
            delh = (b * d - one) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < eps {
                done = true;
                break;
            }
        }
        if !done {
            return Err(no_convergence("Bessel continued fraction CF2", x.to_f64_lossy()));
        }
        h = a1 * h;
        rkmu = (T::PI() / (two * x)).sqrt() / s;
        rk1 = rkmu * (xmu + x + half - h) * xi;
    }
    let rkmup = xmu * xi * rkmu - rk1;
    let rimu = xi / (f * rkmu - rkmup);
    let ri = if x < T::lit(1e-3) { i_series(nu, x)? } else { (rimu * ril1) / ril };
    for i in 1..=nl {
        let rktemp = (xmu + T::from_usize_lossy(i)) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = rktemp;
    }
    Ok((ri, rkmu))
}

/// `e^{-x} I_nu(x)`.
pub fn bessel_i_scaled<T: Real>(nu: T, x: T) -> Result<T> {
    Ok(bessel_ik_scaled(nu, x)?.0)
}

/// `e^{x} K_nu(x)`.
pub fn bessel_k_scaled<T: Real>(nu: T, x: T) -> Result<T> {
    Ok(bessel_ik_scaled(nu, x)?.1)
}

/// Unscaled `I_nu(x)` or `K_nu(x)`; may overflow/underflow for large `x`.
pub fn bessel<T: Real>(kind: BesselKind, order: T, x: T) -> Result<T> {
    let (i, k) = bessel_ik_scaled(order, x)?;
    Ok(match kind {
        BesselKind::I => i * x.exp(),
        BesselKind::K => k * (-x).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_relative_eq!(bessel(BesselKind::K, 0.0, 1.0).unwrap(), 0.421_024_438_240_708_33, max_relative = 1e-12);
        assert_relative_eq!(bessel(BesselKind::I, 2.0, 1.0).unwrap(), 0.135_747_669_767_038_28, max_relative = 1e-12);
        assert_relative_eq!(bessel(BesselKind::I, 0.5, 3.0).unwrap(), 4.614_822_903_407_601, max_relative = 1e-12);
        assert_relative_eq!(bessel(BesselKind::K, 0.0, 10.0).unwrap(), 1.778_006_231_616_765_2e-5, max_relative = 1e-12);
        assert_relative_eq!(bessel(BesselKind::I, 2.5, 700.0).unwrap(), 1.522_775_169_493_898_6e302, max_relative = 1e-10);
        assert_relative_eq!(bessel(BesselKind::K, 2.3, 0.7).unwrap(), 5.975_961_761_210_581, max_relative = 1e-11);
        assert_relative_eq!(bessel(BesselKind::I, 2.3, 0.7).unwrap(), 0.034_571_452_711_820_26, max_relative = 1e-11);
        assert_relative_eq!(bessel(BesselKind::K, 1.5, 25.0).unwrap(), 3.620_438_927_914_323e-12, max_relative = 1e-11);
        assert_relative_eq!(bessel(BesselKind::I, 3.7, 25.0).unwrap(), 4_368_830_730.834_168_5, max_relative = 1e-11);
    }

    #[test]
    fn small_and_large_arguments() {
        assert_relative_eq!(bessel(BesselKind::I, 0.0, 1e-10).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(bessel_k_scaled(0.5, 2000.0).unwrap(), 0.028_024_956_081_989_644, max_relative = 1e-12);
        assert_relative_eq!(bessel_i_scaled(1.5, 2000.0).unwrap(), 0.008_916_160_270_473_474, max_relative = 1e-12);
        // asymptotic branch agrees with the continued fractions at the switch
        let (i1, k1) = bessel_ik_scaled(1.0, 5000.0).unwrap();
        let (i2, k2) = bessel_ik_scaled(1.0, 5000.0 + 1e-9).unwrap();
        assert_relative_eq!(i1, i2, max_relative = 1e-12);
        assert_relative_eq!(k1, k2, max_relative = 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel(BesselKind::I, 1.0, 0.0).is_err());
        assert!(bessel(BesselKind::K, 0.0, -1.0).is_err());
        assert!(bessel(BesselKind::K, -0.5, 1.0).is_err());
    }

    #[test]
    fn ode_residuals() {
        // x^2 y'' + x y' - (x^2 + nu^2) y = 0 with derivatives from the order recurrences
        for &nu in &[0.0, 0.5, 1.0, 2.0, 3.3] {
            for &x in &[0.05, 0.7, 1.9, 2.1, 6.0, 30.0] {
                let iv = |n: f64| bessel(BesselKind::I, n, x).unwrap();
                let kv = |n: f64| bessel(BesselKind::K, n, x).unwrap();
                let di = |n: f64| iv(n + 1.0) + n / x * iv(n);
                let ddi = (iv(nu + 2.0) + (nu + 1.0) / x * iv(nu + 1.0)) - nu / (x * x) * iv(nu) + nu / x * di(nu);
                let res = x * x * ddi + x * di(nu) - (x * x + nu * nu) * iv(nu);
                assert!(res.abs() <= 1e-8 * (x * x + nu * nu) * iv(nu), "I nu={nu} x={x} res={res}");
                let dk = |n: f64| -kv(n + 1.0) + n / x * kv(n);
                let ddk = (kv(nu + 2.0) - (nu + 1.0) / x * kv(nu + 1.0)) - nu / (x * x) * kv(nu) + nu / x * dk(nu);
                let res = x * x * ddk + x * dk(nu) - (x * x + nu * nu) * kv(nu);
                assert!(res.abs() <= 1e-8 * (x * x + nu * nu) * kv(nu), "K nu={nu} x={x} res={res}");
            }
        }
    }

    #[test]
    fn wronskian() {
        // I_nu K_{nu+1} + I_{nu+1} K_nu = 1/x
        for &nu in &[0.0, 0.25, 1.0, 4.5] {
            for &x in &[0.01, 1.0, 3.0, 150.0] {
                let (i0, k0) = bessel_ik_scaled(nu, x).unwrap();
                let (i1, k1) = bessel_ik_scaled(nu + 1.0, x).unwrap();
                assert_relative_eq!(i0 * k1 + i1 * k0, 1.0 / x, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn single_precision() {
        let k = bessel(BesselKind::K, 0.0_f32, 1.0).unwrap();
        assert!((k - 0.421_024_4).abs() < 1e-5);
    }

    #[test]
    fn tiny_argument_uses_series() {
        for nu in [0.5f64, 1.0, 2.5] {
            let x = 3e-17f64;
            let want = (0.5 * x).powf(nu) / crate::specfun::gamma(nu + 1.0).unwrap();
            let got = bessel_i_scaled(nu, x).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12, "{nu}: {got} vs {want}");
        }
    }
}
