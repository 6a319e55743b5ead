use crate::error::{Error, Result};
use crate::scalar::Real;

use super::kronrod::adaptive;
use super::oscillatory::oscillatory_tail;
use super::{Estimate, QuadValue, Tolerance};

/// Plain integral over `[lo, hi]`; infinite ends use period chunking when a
/// period is known.
pub fn integrate_with_tails<T: Real, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    lo: T,
    hi: T,
    tol: Tolerance<T>,
    period: Option<T>,
) -> Result<Estimate<T, V>> {
    let Some(period) = period else {
        return adaptive(f, lo, hi, tol);
    };
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive(f, lo, hi, tol),
        (true, false) => oscillatory_tail(f, lo, period, tol),
        (false, true) => {
            let r = oscillatory_tail(|x: T| f(-x), -hi, period, tol)?;
            Ok(r)
        }
        (false, false) => {
            let right = oscillatory_tail(&mut f, T::zero(), period, tol)?;
            let left = oscillatory_tail(|x: T| f(-x), T::zero(), period, tol)?;
            Ok(right.combine(left))
        }
    }
}

/// Cauchy principal value of `∫_lo^hi f` with a simple pole at `singularity`.
///
/// The neighbourhood `|x - c| < δ` is folded onto `g(s) = f(c+s) + f(c-s)`,
/// integrated over `[ε, δ]` for ε = δ·10^-2, 10^-3, 10^-4, and extrapolated to ε → 0.
pub fn principal_value<T: Real, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    singularity: T,
    lo: T,
    hi: T,
    tol: Tolerance<T>,
    period: Option<T>,
) -> Result<Estimate<T, V>> {
    let c = singularity;
    if !(lo < c && c < hi) {
        return Err(Error::domain("principal value needs the singularity strictly inside the interval"));
    }
    let reach = (c - lo).min(hi - c);
    let delta = if reach.is_finite() { reach * T::lit(0.5) } else { T::one() }.min(T::one());
    let left = integrate_with_tails(&mut f, lo, c - delta, tol, period)?;
    let right = integrate_with_tails(&mut f, c + delta, hi, tol, period)?;
    let scale = left.value.magnitude() + right.value.magnitude();
    let outer = left.combine(right);

    let inner_tol = Tolerance { rel: tol.rel * T::lit(0.01), abs: tol.abs * T::lit(0.01), ..tol };
    let mut folded = |eps: T| adaptive(|s: T| f(c + s) + f(c - s), eps, delta, inner_tol);
    let i1 = folded(delta * T::lit(1e-2))?;
    let i2 = folded(delta * T::lit(1e-3))?;
    let i3 = folded(delta * T::lit(1e-4))?;
    // I(ε) = I0 - a ε - b ε^2 - ...
    let r1 = i2.value + (i2.value - i1.value) * T::lit(1.0 / 9.0);
    let r2 = i3.value + (i3.value - i2.value) * T::lit(1.0 / 9.0);
    let rr = r2 + (r2 - r1) * T::lit(1.0 / 99.0);
    let extrap_err = (rr - r2).magnitude();
    let value = outer.value + rr;
    let error = outer.error + extrap_err + i3.error;
    let converged = outer.converged
        && i1.converged
        && i2.converged
        && i3.converged
        && extrap_err <= tol.abs.max(tol.rel * (scale + rr.magnitude() + i3.value.magnitude())) * T::lit(10.0);
    let est = Estimate { value, error, evaluations: outer.evaluations + i1.evaluations + i2.evaluations + i3.evaluations, converged };
    if !converged {
        return Err(Error::Accuracy {
            estimate: value.magnitude().to_f64_lossy(),
            error: error.to_f64_lossy(),
            context: "principal value extrapolation".into(),
        });
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn exp_over_p_on_the_real_line() {
        // p.v. ∫ e^{-ip}/p dp = -iπ
        let r = principal_value(
            |p: f64| Complex64::new(0.0, -p).exp() / p,
            0.0,
            f64::NEG_INFINITY,
            f64::INFINITY,
            Tolerance::default(),
            Some(2.0 * std::f64::consts::PI),
        )
        .unwrap();
        assert!((r.value - Complex64::new(0.0, -std::f64::consts::PI)).norm() < 1e-8, "{}", r.value);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let r = principal_value(|p: f64| 1.0 / p, 0.0, -3.0, 3.0, Tolerance::default(), None).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn asymmetric_interval() {
        // p.v. ∫_{-1}^{2} dx/x = ln 2
        let r = principal_value(|x: f64| 1.0 / x, 0.0, -1.0, 2.0, Tolerance::default(), None).unwrap();
        assert!((r.value - std::f64::consts::LN_2).abs() < 1e-10);
    }

    #[test]
    fn singularity_outside_is_rejected() {
        assert!(principal_value(|x: f64| 1.0 / x, 5.0, -1.0, 2.0, Tolerance::default(), None).is_err());
    }
}
