use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{geometric_halfline, DistributionKind, PhaseSpaceGrid, QuasiDistribution};
use crate::affine_group::GroupElement;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_oscillatory, Tolerance};
use crate::representation::{Moment, OperatorMatrix, WaveFunction};

const TOL: Tolerance<f64> = Tolerance { rel: 1e-11, abs: 1e-14, max_subdiv: 4000 };
const OUTER: Tolerance<f64> = Tolerance { rel: 1e-9, abs: 1e-12, max_subdiv: 400 };

/// `c₋₁ = ∫ |ψ|² / x dx`.
fn c_minus_one(fiducial: &WaveFunction) -> Result<f64> {
    let c = fiducial
        .moment(-1.0, Moment::Density)
        .map_err(|e| match e {
            Error::Divergence(m) => Error::Admissibility(m),
            other => other,
        })?
        .re;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Admissibility(format!("∫|ψ|²/x = {c}")));
    }
    Ok(c)
}

/// `W_φ(q,p) = ⟨q,p|φ⟩ = ∫ e^{-ipx} conj(ψ(x/q)) φ(x) / √q dx`.
pub fn acs_symbol(phi: &WaveFunction, fiducial: &WaveFunction, g: GroupElement<f64>) -> Result<Complex64> {
    let (q, p) = (g.q(), g.p());
    let s = 1.0 / q.sqrt();
    let r = integrate_oscillatory(
        |x: f64| fiducial.eval(x / q).conj() * phi.eval(x) * s,
        |x: f64| -p * x,
        0.0,
        f64::INFINITY,
        p,
        TOL,
    )?
    .into_result(&format!("wavelet transform at (q, p) = ({q}, {p})"))?;
    Ok(r.value)
}

/// `ρ_φ(q,p) = |W_φ(q,p)|² / (2π c₋₁)`.
pub fn acs_density(phi: &WaveFunction, fiducial: &WaveFunction, g: GroupElement<f64>) -> Result<f64> {
    let c = c_minus_one(fiducial)?;
    Ok(acs_symbol(phi, fiducial, g)?.norm_sqr() / (2.0 * PI * c))
}

fn symbols_on(phi: &WaveFunction, fiducial: &WaveFunction, grid: &PhaseSpaceGrid) -> Result<Vec<Complex64>> {
    grid.points()
        .par_iter()
        .map(|&(q, p)| acs_symbol(phi, fiducial, GroupElement::new(q, p)?))
        .collect()
}

/// Real and imaginary parts of `W_φ` on `grid`.
pub fn acs_symbol_grid(
    phi: &WaveFunction,
    fiducial: &WaveFunction,
    grid: &PhaseSpaceGrid,
    label: &str,
) -> Result<(QuasiDistribution, QuasiDistribution)> {
    let w = symbols_on(phi, fiducial, grid)?;
    let re = QuasiDistribution::new(grid.clone(), w.iter().map(|z| z.re).collect(), DistributionKind::WaveletRe, label)?;
    let im = QuasiDistribution::new(grid.clone(), w.iter().map(|z| z.im).collect(), DistributionKind::WaveletIm, label)?;
    Ok((re, im))
}

/// `ρ_φ` on `grid`.
pub fn acs_density_grid(
    phi: &WaveFunction,
    fiducial: &WaveFunction,
    grid: &PhaseSpaceGrid,
    label: &str,
) -> Result<QuasiDistribution> {
    let c = c_minus_one(fiducial)?;
    let w = symbols_on(phi, fiducial, grid)?;
    let values = w.iter().map(|z| z.norm_sqr() / (2.0 * PI * c)).collect();
    Ok(QuasiDistribution::new(grid.clone(), values, DistributionKind::AcsDensity, label)?
        .with_meta("c_minus_1", c)
        .with_meta("tolerance", serde_json::json!({ "rel": TOL.rel, "abs": TOL.abs })))
}

/// `∬ ρ_φ dq dp` by nested adaptive quadrature.
pub fn acs_density_mass(phi: &WaveFunction, fiducial: &WaveFunction) -> Result<f64> {
    let c = c_minus_one(fiducial)?;
    let inner = |q: f64| -> f64 {
        if q == 0.0 {
            return 0.0;
        }
        let f = |p: f64| match GroupElement::new(q, p).and_then(|g| acs_symbol(phi, fiducial, g)) {
            Ok(w) => w.norm_sqr(),
            Err(_) => f64::NAN,
        };
        let scale = 1f64.max(1.0 / q);
        let right = geometric_halfline(|p| f(p), scale, OUTER, "ACS density, p integral");
        let left = geometric_halfline(|p| f(-p), scale, OUTER, "ACS density, p integral");
        match (right, left) {
            (Ok(a), Ok(b)) => a + b,
            _ => f64::NAN,
        }
    };
    let total = geometric_halfline(inner, 1.0, OUTER, "ACS density, q integral")?;
    Ok(total / (2.0 * PI * c))
}

/// `ρ_φ(t)` for `φ(t) = e^{-iHt} φ₀`, using the spectral decomposition of the truncated `H`.
/// `φ₀` must lie in the basis of `H` up to `containment_tol` in norm.
pub fn evolve_density(
    phi0: &WaveFunction,
    h: &OperatorMatrix,
    times: &[f64],
    fiducial: &WaveFunction,
    grid: &PhaseSpaceGrid,
    containment_tol: f64,
) -> Result<Vec<QuasiDistribution>> {
    let scale = h.entries.norm().max(1.0);
    let dev = h.hermitian_deviation();
    if dev > 1e-8 * scale {
        return Err(Error::Validity(format!("hamiltonian is not hermitian (deviation {dev:e})")));
    }
    let basis = h.basis;
    let c0 = phi0.project(&basis)?;
    let outside = (phi0.norm().powi(2) - c0.norm_squared()).max(0.0).sqrt();
    if outside > containment_tol {
        return Err(Error::Validity(format!(
            "initial state leaves the basis (residual norm {outside:e} > {containment_tol:e})"
        )));
    }
    let sym = (&h.entries + h.entries.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let v = eig.eigenvectors;
    let a = v.adjoint() * &c0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let phased = DVector::from_iterator(
            a.len(),
            a.iter().zip(eig.eigenvalues.iter()).map(|(c, &l)| c * Complex64::from_polar(1.0, -l * t)),
        );
        let coeffs = &v * phased;
        let state = WaveFunction::from_coeffs(basis, coeffs)?;
        out.push(acs_density_grid(&state, fiducial, grid, &format!("t={t}"))?.with_meta("time", t));
    }
    Ok(out)
}

/// `max |ρ(t) - ρ(0)|` over all times and nodes.
pub fn stationary_deviation(frames: &[QuasiDistribution]) -> f64 {
    let Some(first) = frames.first() else { return 0.0 };
    frames
        .iter()
        .flat_map(|f| f.values.iter().zip(&first.values).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::BasisSpec;

    fn ground(alpha: f64) -> WaveFunction {
        WaveFunction::basis_vector(BasisSpec::new(alpha, 2).unwrap(), 0).unwrap()
    }

    #[test]
    fn fiducial_symbol_at_identity() {
        let psi = ground(1.0);
        let w = acs_symbol(&psi, &psi, GroupElement::identity()).unwrap();
        assert!((w - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn symbol_matches_matrix_element() {
        // ⟨q,p|e_1⟩ = conj(⟨e_1|U e_0⟩) for the Laguerre fiducial
        let b = BasisSpec::new(1.0, 3).unwrap();
        let psi = ground(1.0);
        let phi = WaveFunction::basis_vector(b, 1).unwrap();
        let g = GroupElement::new(1.7, -0.6).unwrap();
        let w = acs_symbol(&phi, &psi, g).unwrap();
        let m = crate::representation::matrix_element(&b, 1, 0, g);
        assert!((w - m.conj()).norm() < 1e-10, "{w} vs {m}");
        assert!(w.norm() <= 1.0);
    }

    #[test]
    fn density_has_unit_mass() {
        let psi = ground(1.0);
        let phi = WaveFunction::from_real_fn(|x| 2f64.sqrt() * crate::specfun::hermite_function(1, x), 1.0).unwrap();
        let m = acs_density_mass(&phi, &psi).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }
}
