use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{DistributionKind, PhaseSpaceGrid, Profile, QuasiDistribution};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, gauss_legendre, integrate_oscillatory, Tolerance};
use crate::representation::WaveFunction;

const TOL: Tolerance<f64> = Tolerance { rel: 1e-11, abs: 1e-14, max_subdiv: 4000 };
const OUTER: Tolerance<f64> = Tolerance { rel: 1e-10, abs: 1e-11, max_subdiv: 400 };

/// Smallest `U` past which `|φ(q e^u) φ(q e^{-u})|` stays negligible.
fn envelope_cutoff(phi: &WaveFunction, q: f64) -> f64 {
    let env = |u: f64| phi.eval(q * u.exp()).norm() * phi.eval(q * (-u).exp()).norm();
    let mut peak: f64 = 0.0;
    let mut quiet = 0;
    let mut u = 0.0;
    let step = 0.125;
    while u < 60.0 {
        let e = env(u);
        peak = peak.max(e);
        if e <= 1e-18 * peak.max(1e-300) {
            quiet += 1;
            if quiet >= 6 {
                return u;
            }
        } else {
            quiet = 0;
        }
        u += step;
    }
    u
}

/// `𝒜𝒲_φ(q,p)` and the imaginary residual of the unreduced integral.
pub fn wigner_value(phi: &WaveFunction, q: f64, p: f64) -> Result<(f64, f64)> {
    if !(q > 0.0) {
        return Err(Error::domain(format!("q = {q} must be positive")));
    }
    let cut = envelope_cutoff(phi, q);
    let ctx = || format!("affine Wigner function at (q, p) = ({q}, {p})");
    let full = adaptive(
        |u: f64| {
            phi.eval(q * u.exp()).conj()
                * phi.eval(q * (-u).exp())
                * Complex64::from_polar(1.0, 2.0 * p * q * u.sinh())
        },
        -cut,
        cut,
        TOL,
    )?
    .into_result(&ctx())?;
    let full = full.value * (2.0 * q);
    if phi.is_real() {
        // cosine form over the half range
        let half = adaptive(
            |u: f64| {
                phi.eval(q * u.exp()).re * phi.eval(q * (-u).exp()).re * (2.0 * p * q * u.sinh()).cos()
            },
            0.0,
            cut,
            TOL,
        )?
        .into_result(&ctx())?;
        Ok((4.0 * q * half.value, full.im.abs()))
    } else {
        Ok((full.re, full.im.abs()))
    }
}

/// Real part of `𝒜𝒲_φ` along a line of fixed `q`, with the cutoff and integrand scale cached.
struct Slice<'a> {
    phi: &'a WaveFunction,
    q: f64,
    cut: f64,
    tol: Tolerance<f64>,
}

impl<'a> Slice<'a> {
    fn plain(phi: &'a WaveFunction, q: f64) -> Self {
        Slice { phi, q, cut: envelope_cutoff(phi, q), tol: TOL }
    }

    fn new(phi: &'a WaveFunction, q: f64) -> Result<Self> {
        let cut = envelope_cutoff(phi, q);
        let mass = adaptive(|u: f64| (phi.eval(q * u.exp()) * phi.eval(q * (-u).exp())).norm(), -cut, cut, TOL)?
            .into_result("affine Wigner envelope")?
            .value;
        Ok(Slice { phi, q, cut, tol: Tolerance { abs: 1e-10 * mass, ..TOL } })
    }

    /// Absolute accuracy of [`value`](Self::value).
    fn noise(&self) -> f64 {
        4.0 * self.q * self.tol.abs
    }

    fn value(&self, p: f64) -> Result<f64> {
        let (phi, q) = (self.phi, self.q);
        let ctx = || format!("affine Wigner function at (q, p) = ({q}, {p})");
        if phi.is_real() {
            let r = adaptive(
                |u: f64| phi.eval(q * u.exp()).re * phi.eval(q * (-u).exp()).re * (2.0 * p * q * u.sinh()).cos(),
                0.0,
                self.cut,
                self.tol,
            )?
            .into_result(&ctx())?;
            Ok(4.0 * q * r.value)
        } else {
            let r = adaptive(
                |u: f64| {
                    (phi.eval(q * u.exp()).conj() * phi.eval(q * (-u).exp()) * Complex64::from_polar(1.0, 2.0 * p * q * u.sinh()))
                        .re
                },
                -self.cut,
                self.cut,
                self.tol,
            )?
            .into_result(&ctx())?;
            Ok(2.0 * q * r.value)
        }
    }
}

fn check_normalized(phi: &WaveFunction) -> Result<()> {
    if (phi.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::domain(format!("state must be normalized (norm = {})", phi.norm())));
    }
    Ok(())
}

/// `𝒜𝒲_φ` on `grid`; the sidecar records the largest imaginary residual.
pub fn wigner_aw(phi: &WaveFunction, grid: &PhaseSpaceGrid, label: &str) -> Result<QuasiDistribution> {
    check_normalized(phi)?;
    let pts = grid.points();
    let vals: Vec<Result<(f64, f64)>> = pts.par_iter().map(|&(q, p)| wigner_value(phi, q, p)).collect();
    let mut values = Vec::with_capacity(vals.len());
    let mut resid: f64 = 0.0;
    for v in vals {
        let (a, r) = v?;
        values.push(a);
        resid = resid.max(r);
    }
    Ok(QuasiDistribution::new(grid.clone(), values, DistributionKind::WignerAw, label)?
        .with_meta("imag_residual", resid)
        .with_meta("tolerance", json_tol(TOL)))
}

fn json_tol(t: Tolerance<f64>) -> serde_json::Value {
    serde_json::json!({ "rel": t.rel, "abs": t.abs })
}

/// `∫_a^∞ f` in doubling chunks starting at `[a, a + first]`, stopped once two chunks are negligible.
/// `noise` is the pointwise accuracy of `f`.
fn doubling_tail(mut f: impl FnMut(f64) -> Result<f64>, a: f64, first: f64, noise: f64, ctx: &str) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = a;
    let mut width = first;
    let mut quiet = 0;
    let mut failure = None;
    for _ in 0..40 {
        let hi = lo + width;
        let tol = Tolerance { abs: OUTER.abs.max(10.0 * width * noise), ..OUTER };
        let r = adaptive(
            |x: f64| match f(x) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            tol,
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let r = r.into_result(ctx)?;
        total += r.value;
        if r.value.abs() <= 1e-10 * total.abs().max(1e-2) + tol.abs {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Accuracy { estimate: total, error: f64::NAN, context: format!("{ctx}: tail did not decay") })
}

/// `(1/2π) ∫ 𝒜𝒲_φ(q,p) dp`.
pub fn p_marginal(phi: &WaveFunction, q: f64) -> Result<f64> {
    let ctx = format!("p-marginal at q = {q}");
    let slice = Slice::new(phi, q)?;
    let w = |p: f64| slice.value(p);
    let right = doubling_tail(w, 0.0, 4.0, slice.noise(), &ctx)?;
    let left = if phi.is_real() { right } else { doubling_tail(|p| w(-p), 0.0, 4.0, slice.noise(), &ctx)? };
    Ok((left + right) / (2.0 * PI))
}

/// `(1/2π) ∫ 𝒜𝒲_φ(q,p) dq`.
pub fn q_marginal(phi: &WaveFunction, p: f64) -> Result<f64> {
    let ctx = format!("q-marginal at p = {p}");
    let w = |q: f64| Slice::plain(phi, q).value(p);
    let head = adaptive(|q: f64| if q == 0.0 { 0.0 } else { w(q).unwrap_or(f64::NAN) }, 0.0, 1.0, OUTER)?
        .into_result(&ctx)?;
    if !head.value.is_finite() {
        return Err(Error::Accuracy { estimate: head.value, error: f64::NAN, context: ctx });
    }
    let tail = doubling_tail(w, 1.0, 1.0, 0.0, &ctx)?;
    Ok((head.value + tail) / (2.0 * PI))
}

/// Point past which `|φ|²` stays below `1e-16` of its peak.
fn support_edge(phi: &WaveFunction) -> f64 {
    let mut peak: f64 = 0.0;
    let mut last = 0.0;
    let mut x = 0.0;
    while x < 2000.0 {
        x += 0.125;
        let d = phi.eval(x).norm_sqr();
        peak = peak.max(d);
        if d > 1e-16 * peak {
            last = x;
        } else if x > 2.0 * last + 10.0 {
            break;
        }
    }
    last + 1.0
}

/// `(1/2π) ∬ 𝒜𝒲_φ dq dp`: Gauss-Legendre panels in `q` over the support of `φ`, each node a p-marginal.
pub fn wigner_mass(phi: &WaveFunction) -> Result<f64> {
    let x = support_edge(phi);
    let head = x / 16.0;
    let mut panels = vec![(0.0, head, gauss_legendre(6)?)];
    let body = gauss_legendre(12)?;
    let width = (x - head) / 8.0;
    panels.extend((0..8).map(|k| (head + k as f64 * width, head + (k + 1) as f64 * width, body.clone())));
    let mut nodes = Vec::new();
    for (a, b, rule) in &panels {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        nodes.extend(rule.nodes.iter().zip(&rule.weights).map(|(t, w)| (mid + half * t, half * w)));
    }
    let parts: Vec<Result<f64>> = nodes.par_iter().map(|&(q, w)| p_marginal(phi, q).map(|m| w * m)).collect();
    parts.into_iter().sum()
}

/// `φ̂(p) = (1/√2π) ∫_0^∞ φ(x) e^{-ipx} dx`.
pub fn momentum_amplitude(phi: &WaveFunction, p: f64) -> Result<Complex64> {
    let r = integrate_oscillatory(|x: f64| phi.eval(x), |x: f64| -p * x, 0.0, f64::INFINITY, p, TOL)?
        .into_result(&format!("momentum amplitude at p = {p}"))?;
    Ok(r.value / (2.0 * PI).sqrt())
}

pub fn momentum_density(phi: &WaveFunction, p: f64) -> Result<f64> {
    Ok(momentum_amplitude(phi, p)?.norm_sqr())
}

/// Marginal identities of `𝒜𝒲_φ` evaluated at the grid nodes.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalReport {
    pub label: String,
    /// `(1/2π)∫𝒜𝒲 dp` at the `q` nodes.
    pub p_marginal: Profile,
    /// `(1/2π)∫𝒜𝒲 dq` at the `p` nodes.
    pub q_marginal: Profile,
    pub density: Profile,
    pub momentum_density: Profile,
    pub p_marginal_l1: f64,
    pub q_marginal_l1: f64,
}

impl MarginalReport {
    pub fn compute(phi: &WaveFunction, grid: &PhaseSpaceGrid, label: &str) -> Result<Self> {
        check_normalized(phi)?;
        let pm: Vec<Result<f64>> = grid.q_nodes.par_iter().map(|&q| p_marginal(phi, q)).collect();
        let qm: Vec<Result<f64>> = grid.p_nodes.par_iter().map(|&p| q_marginal(phi, p)).collect();
        let mom: Vec<Result<f64>> = grid.p_nodes.par_iter().map(|&p| momentum_density(phi, p)).collect();
        let collect = |v: Vec<Result<f64>>| v.into_iter().collect::<Result<Vec<f64>>>();
        let profile = |axis: &str, name: &str, nodes: &[f64], values: Vec<f64>| Profile {
            axis: axis.into(),
            label: format!("{label}:{name}"),
            nodes: nodes.to_vec(),
            values,
        };
        let density: Vec<f64> = grid.q_nodes.iter().map(|&q| phi.eval(q).norm_sqr()).collect();
        let p_marginal = profile("q", "p_marginal", &grid.q_nodes, collect(pm)?);
        let q_marginal = profile("p", "q_marginal", &grid.p_nodes, collect(qm)?);
        let momentum_density = profile("p", "momentum_density", &grid.p_nodes, collect(mom)?);
        let p_marginal_l1 = p_marginal.l1_distance(&density);
        let q_marginal_l1 = q_marginal.l1_distance(&momentum_density.values);
        Ok(MarginalReport {
            label: label.into(),
            density: profile("q", "density", &grid.q_nodes, density),
            p_marginal,
            q_marginal,
            momentum_density,
            p_marginal_l1,
            q_marginal_l1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::hermite_function;

    fn phi1() -> WaveFunction {
        // √2 ψ_1 restricted to the half-line
        WaveFunction::from_real_fn(|x| 2f64.sqrt() * hermite_function(1, x), 1.0).unwrap()
    }

    #[test]
    fn marginal_in_p_reproduces_density() {
        let phi = phi1();
        for q in [0.05, 0.4, 1.0, 2.3] {
            let m = p_marginal(&phi, q).unwrap();
            let d = phi.eval(q).norm_sqr();
            assert!((m - d).abs() < 1e-8, "q={q}: {m} vs {d}");
        }
    }

    #[test]
    fn marginal_in_q_reproduces_momentum_density() {
        let phi = phi1();
        for p in [-3.0, 0.0, 0.7, 5.0] {
            let m = q_marginal(&phi, p).unwrap();
            let d = momentum_density(&phi, p).unwrap();
            assert!((m - d).abs() < 1e-8, "p={p}: {m} vs {d}");
        }
    }

    #[test]
    fn complex_state_is_real_and_matches_reduced_form() {
        let phi = phi1();
        let tilted = WaveFunction::from_fn(move |x| phi1().eval(x) * Complex64::from_polar(1.0, 0.3 * x), 1.0).unwrap();
        let (v, r) = wigner_value(&tilted, 0.9, 0.4).unwrap();
        assert!(r < 1e-9);
        // a phase e^{ikx} shifts the distribution by k in p
        let (shifted, _) = wigner_value(&phi, 0.9, 0.4 - 0.3).unwrap();
        assert!((v - shifted).abs() < 1e-9);
    }
}
