use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::ln_gamma;

use super::QuadValue;

/// A Gauss rule. For Laguerre rules `weights` integrate against `x^α e^{-x}`;
/// `absorbed_weights` integrate plain functions (`w_i x_i^{-α} e^{x_i}`).
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub absorbed_weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum w_i f(x_i)`.
    pub fn apply<T: Real, V: QuadValue<T>>(&self, mut f: impl FnMut(T) -> V) -> V {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(V::zero(), |acc, (&x, &w)| acc + f(T::lit(x)) * T::lit(w))
    }

    /// `sum w~_i f(x_i)` with the weight function absorbed into `f`.
    pub fn apply_absorbed<T: Real, V: QuadValue<T>>(&self, mut f: impl FnMut(T) -> V) -> V {
        self.nodes
            .iter()
            .zip(&self.absorbed_weights)
            .fold(V::zero(), |acc, (&x, &w)| acc + f(T::lit(x)) * T::lit(w))
    }
}

#[derive(Hash, PartialEq, Eq, Clone, Copy)]
enum RuleKey {
    Laguerre(usize, u64),
    Legendre(usize),
}

fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<GaussRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: RuleKey, build: impl FnOnce() -> Result<GaussRule>) -> Result<Arc<GaussRule>> {
    if let Some(rule) = cache().lock().expect("rule cache poisoned").get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(build()?);
    cache()
        .lock()
        .expect("rule cache poisoned")
        .entry(key)
        .or_insert_with(|| rule.clone());
    Ok(rule)
}

/// Eigenvalues of a symmetric tridiagonal matrix and the first component of
/// each normalized eigenvector (implicit QL with Wilkinson shifts).
pub(crate) fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Accuracy {
                    estimate: d[l],
                    error: e[l].abs(),
                    context: "tridiagonal QL iteration did not converge".into(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    Ok((idx.iter().map(|&i| d[i]).collect(), idx.iter().map(|&i| z[i]).collect()))
}

fn build_laguerre(n: usize, alpha: f64) -> Result<GaussRule> {
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
    let (mut nodes, _) = tridiagonal_eigen(&diag, &off)?;
    let lg = ln_gamma(alpha + 1.0)?;
    let mut weights = Vec::with_capacity(n);
    let mut absorbed = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        // Newton polish on the orthonormal polynomial p_n
        for _ in 0..3 {
            let (pn, dpn) = orthonormal_laguerre(n, alpha, *x, lg);
            let step = pn / dpn;
            if !step.is_finite() {
                break;
            }
            *x -= step;
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
        // Christoffel numbers 1 / sum_k p_k(x)^2, accumulated in a rescaled form
        let ln_inv = ln_christoffel_sum(n, alpha, *x, lg);
        absorbed.push((-ln_inv).exp());
        weights.push((alpha * x.ln() - *x - ln_inv).exp());
    }
    Ok(GaussRule { nodes, weights, absorbed_weights: absorbed })
}

/// `(p_n(x), p_n'(x))` up to a common positive factor, for the orthonormal Laguerre polynomial.
fn orthonormal_laguerre(n: usize, alpha: f64, x: f64, lg: f64) -> (f64, f64) {
    let mut p0 = (-0.5 * lg).exp();
    let mut d0 = 0.0;
    if n == 0 {
        return (p0, d0);
    }
    let s1 = (1.0 + alpha).sqrt();
    let mut p1 = (1.0 + alpha - x) * p0 / s1;
    let mut d1 = -p0 / s1;
    for k in 1..n {
        let kf = k as f64;
        let den = ((kf + 1.0) * (kf + 1.0 + alpha)).sqrt();
        let back = (kf * (kf + alpha)).sqrt();
        let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - back * p0) / den;
        let d2 = ((2.0 * kf + 1.0 + alpha - x) * d1 - p1 - back * d0) / den;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        if p1.abs() > 1e200 {
            p0 *= 1e-200;
            p1 *= 1e-200;
            d0 *= 1e-200;
            d1 *= 1e-200;
        }
    }
    (p1, d1)
}

/// `ln(e^{-x} x^α sum_{k<n} p_k(x)^2)`, i.e. the log of the sum of squared Laguerre functions.
fn ln_christoffel_sum(n: usize, alpha: f64, x: f64, lg: f64) -> f64 {
    // recurrence on p_k / p_0 with running rescaling; ln p_0² e^{-x} x^α restored at the end
    let mut shift = 0.0;
    let mut e0 = 1.0;
    let mut sum = 1.0;
    if n > 1 {
        let mut e1 = (1.0 + alpha - x) / (1.0 + alpha).sqrt();
        sum += e1 * e1;
        for k in 1..n - 1 {
            let kf = k as f64;
            let e2 = ((2.0 * kf + 1.0 + alpha - x) * e1 - (kf * (kf + alpha)).sqrt() * e0)
                / ((kf + 1.0) * (kf + 1.0 + alpha)).sqrt();
            sum += e2 * e2;
            e0 = e1;
            e1 = e2;
            if sum > 1e200 {
                e0 *= 1e-100;
                e1 *= 1e-100;
                sum *= 1e-200;
                shift += 200.0 * std::f64::consts::LN_10;
            }
        }
    }
    sum.ln() + shift + alpha * x.ln() - x - lg
}

/// Generalized Gauss-Laguerre rule for `∫_0^∞ x^α e^{-x} f(x) dx`, cached.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Result<Arc<GaussRule>> {
    if n == 0 {
        return Err(Error::config("Gauss rule needs at least one node"));
    }
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("Gauss-Laguerre alpha = {alpha} must exceed -1")));
    }
    cached(RuleKey::Laguerre(n, alpha.to_bits()), || build_laguerre(n, alpha))
}

fn build_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { absorbed_weights: weights.clone(), nodes, weights }
}

/// Gauss-Legendre rule on [-1, 1], cached.
pub fn gauss_legendre(n: usize) -> Result<Arc<GaussRule>> {
    if n == 0 {
        return Err(Error::config("Gauss rule needs at least one node"));
    }
    cached(RuleKey::Legendre(n), || Ok(build_legendre(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma;
    use approx::assert_relative_eq;

    #[test]
    fn laguerre_exact_for_polynomials() {
        for &(n, alpha) in &[(1, 0.0), (5, 0.0), (12, 1.5), (30, 2.0), (60, 0.5)] {
            let rule = gauss_laguerre(n, alpha).unwrap();
            for deg in 0..(2 * n) {
                let got: f64 = rule.apply(|x: f64| x.powi(deg as i32));
                let want = gamma(alpha + deg as f64 + 1.0).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn absorbed_weights_integrate_plain_functions() {
        let rule = gauss_laguerre(40, 0.0).unwrap();
        let v: f64 = rule.apply_absorbed(|x: f64| x * x * (-x).exp());
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn legendre_exact_for_polynomials() {
        for n in [1, 2, 7, 20, 64] {
            let rule = gauss_legendre(n).unwrap();
            for deg in 0..(2 * n) {
                let got: f64 = rule.apply(|x: f64| x.powi(deg as i32));
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn rules_are_cached() {
        let a = gauss_laguerre(17, 0.25).unwrap();
        let b = gauss_laguerre(17, 0.25).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn bad_parameters() {
        assert!(gauss_laguerre(0, 0.0).is_err());
        assert!(gauss_laguerre(4, -1.5).is_err());
    }

    #[test]
    fn tridiagonal_against_known_spectrum() {
        // second difference matrix: eigenvalues 2 - 2 cos(k pi / (n+1))
        let n = 9;
        let (vals, first) = tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_relative_eq!(*v, want, max_relative = 1e-13);
        }
        let norm: f64 = first.iter().map(|z| z * z).sum();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn large_laguerre_rule_stays_finite() {
        let rule = gauss_laguerre(400, 2.0).unwrap();
        assert!(rule.absorbed_weights.iter().chain(&rule.weights).all(|w| w.is_finite()));
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-10);
    }
}
