use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::kronrod::adaptive;
use super::{Estimate, QuadValue, Tolerance};

const MAX_CHUNKS: usize = 4000;

/// Wynn's epsilon algorithm; returns the last entry of the highest even column
/// and the change from the previous such entry.
pub fn wynn_epsilon<T: Real>(seq: &[T]) -> (T, T) {
    let n = seq.len();
    if n < 3 {
        let last = seq.last().copied().unwrap_or_else(T::zero);
        let prev = if n >= 2 { seq[n - 2] } else { last };
        return (last, (last - prev).abs());
    }
    // columns e_{-1} = 0, e_0 = seq
    let mut prev: Vec<T> = vec![T::zero(); n + 1];
    let mut cur: Vec<T> = seq.to_vec();
    let mut best = cur[n - 1];
    let mut best_prev = cur[n - 2];
    let mut k = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let diff = cur[j + 1] - cur[j];
            if diff == T::zero() || !diff.is_finite() {
                // sequence has converged to working precision
                return (cur[j + 1], T::zero());
            }
            next.push(prev[j + 1] + T::one() / diff);
        }
        k += 1;
        prev = cur;
        cur = next;
        if k % 2 == 0 && !cur.is_empty() {
            let l = cur.len();
            if cur[l - 1].is_finite() {
                best = cur[l - 1];
                best_prev = if l >= 2 { cur[l - 2] } else { prev[prev.len() - 1] };
            }
        }
    }
    (best, (best - best_prev).abs())
}

fn wynn_value<T: Real, V: QuadValue<T>>(partials: &[V]) -> (V, T) {
    let re: Vec<T> = partials.iter().map(|v| v.split().0).collect();
    let im: Vec<T> = partials.iter().map(|v| v.split().1).collect();
    let (r, er) = wynn_epsilon(&re);
    let (i, ei) = wynn_epsilon(&im);
    (V::join(r, i), er + ei)
}

/// `∫_a^∞ f` for an integrand oscillating with (asymptotic) period `period`,
/// summed chunk by chunk with epsilon-algorithm acceleration.
pub fn oscillatory_tail<T: Real, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    a: T,
    period: T,
    tol: Tolerance<T>,
) -> Result<Estimate<T, V>> {
    if !(period > T::zero()) || !period.is_finite() {
        return Err(Error::domain("oscillation period must be positive and finite"));
    }
    let half = period * T::lit(0.5);
    chunked_tail(|lo, hi| adaptive(&mut f, lo, hi, tol), |k| a + half * T::from_usize_lossy(k), tol)
}

fn chunked_tail<T: Real, V: QuadValue<T>>(
    mut piece: impl FnMut(T, T) -> Result<Estimate<T, V>>,
    mut boundary: impl FnMut(usize) -> T,
    tol: Tolerance<T>,
) -> Result<Estimate<T, V>> {
    let mut partials: Vec<V> = Vec::new();
    let mut sum = V::zero();
    let mut quad_err = T::zero();
    let mut evaluations = 0;
    let mut last_est: Option<V> = None;
    let mut stable = 0;
    let mut lo = boundary(0);
    for k in 1..=MAX_CHUNKS {
        let hi = boundary(k);
        let r = piece(lo, hi)?;
        lo = hi;
        evaluations += r.evaluations;
        quad_err += r.error;
        sum += r.value;
        partials.push(sum);
        let target = tol.abs.max(tol.rel * sum.magnitude());
        // fast decay: plain partial sums have converged
        if k >= 4 && r.value.magnitude() <= T::lit(1e-3) * target {
            return Ok(Estimate { value: sum, error: quad_err + r.value.magnitude(), evaluations, converged: true });
        }
        if k >= 8 {
            let window = &partials[partials.len().saturating_sub(40)..];
            let (est, delta) = wynn_value(window);
            if let Some(prev) = last_est {
                let change = (est - prev).magnitude().max(delta);
                if change <= target {
                    stable += 1;
                    if stable >= 2 {
                        return Ok(Estimate { value: est, error: change + quad_err, evaluations, converged: true });
                    }
                } else {
                    stable = 0;
                }
            }
            last_est = Some(est);
        }
    }
    let value = last_est.unwrap_or(sum);
    Ok(Estimate { value, error: T::infinity(), evaluations, converged: false })
}

/// `∫_lo^hi envelope(x) e^{i phase(x)} dx` with `phase` monotone on the domain.
/// For an infinite upper limit the domain is cut where the phase advances by π,
/// located by marching with step π/|freq_hint| and bisection.
pub fn integrate_oscillatory<T: Real>(
    envelope: impl Fn(T) -> Complex<T>,
    phase: impl Fn(T) -> T,
    lo: T,
    hi: T,
    freq_hint: T,
    tol: Tolerance<T>,
) -> Result<Estimate<T, Complex<T>>> {
    let integrand = |x: T| envelope(x) * Complex::from_polar(T::one(), phase(x));
    if hi.is_finite() || freq_hint == T::zero() {
        return adaptive(integrand, lo, hi, tol);
    }
    let pi = T::PI();
    let step = pi / freq_hint.abs();
    let phi0 = phase(lo);
    let mut marker = lo;
    let mut boundaries = vec![lo];
    let mut boundary = |k: usize| -> T {
        while boundaries.len() <= k {
            let target = T::from_usize_lossy(boundaries.len()) * pi;
            let reached = |x: T| (phase(x) - phi0).abs() >= target;
            let mut a = marker;
            let mut b = a + step;
            let mut guard = 0;
            while !reached(b) && guard < 10_000 {
                a = b;
                b = b + step;
                guard += 1;
            }
            for _ in 0..60 {
                let m = T::lit(0.5) * (a + b);
                if reached(m) {
                    b = m;
                } else {
                    a = m;
                }
            }
            marker = b;
            boundaries.push(b);
        }
        boundaries[k]
    };
    chunked_tail(|a, b| adaptive(integrand, a, b, tol), |k| boundary(k), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let seq: Vec<f64> = (1..=14)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        let (v, _) = wynn_epsilon(&seq);
        assert_relative_eq!(v, std::f64::consts::LN_2, max_relative = 1e-10);
    }

    #[test]
    fn sine_integral_tail() {
        // ∫_1^∞ sin x / x dx = π/2 - Si(1)
        let si1 = 0.946_083_070_367_183_0;
        let r = oscillatory_tail(|x: f64| x.sin() / x, 1.0, 2.0 * std::f64::consts::PI, Tolerance::default())
            .unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, std::f64::consts::FRAC_PI_2 - si1, max_relative = 1e-9);
    }

    #[test]
    fn spec_examples() {
        let tol = Tolerance::default();
        let r = integrate_oscillatory(|x: f64| Complex64::new((-x * x).exp(), 0.0), |_| 0.0, 0.0, f64::INFINITY, 0.0, tol)
            .unwrap();
        assert_relative_eq!(r.value.re, std::f64::consts::PI.sqrt() / 2.0, max_relative = 1e-12);
        let r = integrate_oscillatory(|x: f64| Complex64::new((-x).exp(), 0.0), |x| x, 0.0, f64::INFINITY, 1.0, tol)
            .unwrap();
        let want = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -1.0);
        assert!((r.value - want).norm() < 1e-10);
    }

    #[test]
    fn nonlinear_phase_with_slow_decay() {
        // ∫_0^∞ cos(x^2) dx = sqrt(π/8), phase x^2 marched from a unit hint
        let r = integrate_oscillatory(|_x: f64| Complex64::new(1.0, 0.0), |x| x * x, 0.0, f64::INFINITY, 1.0, Tolerance::default())
            .unwrap();
        let want = (std::f64::consts::PI / 8.0).sqrt();
        assert!((r.value.re - want).abs() < 1e-7, "{}", r.value);
        assert!((r.value.im - want).abs() < 1e-7);
    }
}
