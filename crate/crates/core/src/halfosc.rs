//! Harmonic oscillator on the half-line with a Dirichlet wall at the origin.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase_space::{
    acs_density_grid, acs_symbol_grid, evolve_density, stationary_deviation, wigner_aw, MarginalReport, PhaseSpaceGrid, Profile, QuasiDistribution,
};
use crate::quantize::{quantize, Monomial, Observable};
use crate::representation::{BasisSpec, OperatorMatrix, WaveFunction};
use crate::specfun::{hermite_function, hermite_function_deriv};
use crate::weights::Weight;

/// Eigenstate `φ_n ∝ H_{2n-1}(x) e^{-x²/2}` restricted to `x > 0`.
#[derive(Debug, Clone)]
pub struct HalfOscState {
    pub n: usize,
    pub energy: f64,
    pub wave: WaveFunction,
}

impl HalfOscState {
    pub fn eval(&self, x: f64) -> f64 {
        self.wave.eval(x).re
    }
}

pub fn energy(n: usize) -> f64 {
    2.0 * n as f64 - 0.5
}

/// `φ_n`, renormalized by quadrature to unit norm on the half-line.
pub fn eigenstate_analytic(n: usize) -> Result<HalfOscState> {
    if n < 1 {
        return Err(Error::domain("half-oscillator levels start at n = 1"));
    }
    let k = 2 * n - 1;
    let raw = WaveFunction::from_real_fn_with_deriv(
        move |x| hermite_function(k, x),
        move |x| hermite_function_deriv(k, x),
        1.0,
    )?;
    Ok(HalfOscState { n, energy: energy(n), wave: raw.normalized()? })
}

/// One finite-difference level on the interior nodes `x_i = i h`.
#[derive(Debug, Clone, Serialize)]
pub struct FdLevel {
    pub energy: f64,
    /// `(E_h - E_{2h}) / 3`.
    pub richardson_error: f64,
    pub extrapolated: f64,
    pub x: Vec<f64>,
    /// Unit grid norm `Σ v² h = 1`, positive next to the wall.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdSolution {
    pub x_max: f64,
    pub n_points: usize,
    pub h: f64,
    pub levels: Vec<FdLevel>,
    pub warnings: Vec<String>,
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    fn oscillator(x_max: f64, n_points: usize) -> (Self, f64) {
        let h = x_max / (n_points + 1) as f64;
        let diag = (1..=n_points).map(|i| 1.0 / (h * h) + 0.5 * (i as f64 * h).powi(2)).collect();
        (Tridiagonal { diag, off: -0.5 / (h * h) }, h)
    }

    /// Number of eigenvalues below `lambda`.
    fn sturm_count(&self, lambda: f64) -> usize {
        let e2 = self.off * self.off;
        let mut count = 0;
        let mut d = 1.0;
        for (i, &a) in self.diag.iter().enumerate() {
            d = a - lambda - if i == 0 { 0.0 } else { e2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (a.abs() + lambda.abs());
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `k`-th smallest eigenvalue by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let r = 2.0 * self.off.abs();
        let mut lo = self.diag.iter().fold(f64::INFINITY, |m, &a| m.min(a - r));
        let mut hi = self.diag.iter().fold(f64::NEG_INFINITY, |m, &a| m.max(a + r));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0] - shift;
        c[0] = self.off / piv;
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - shift - self.off * c[i - 1];
            if piv == 0.0 {
                piv = f64::EPSILON * self.diag[i].abs();
            }
            c[i] = self.off / piv;
            d[i] = (rhs[i] - self.off * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }

    fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let shift = lambda + 1e-10 * lambda.abs().max(1.0);
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * ((i * 7919) % 101) as f64).collect();
        for _ in 0..4 {
            v = self.solve_shifted(shift, &v);
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        v
    }
}

/// Lowest `n_levels` eigenpairs of `-½ d²/dx² + x²/2` with `φ(0) = φ(x_max) = 0`
/// on `n_points` interior nodes.
pub fn eigensolve_fd(n_levels: usize, x_max: f64, n_points: usize) -> Result<FdSolution> {
    if n_levels == 0 || n_levels > n_points / 4 {
        return Err(Error::domain(format!("cannot resolve {n_levels} levels on {n_points} nodes")));
    }
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::domain(format!("x_max = {x_max} must be positive")));
    }
    let mut warnings = Vec::new();
    if x_max < 12.0 || n_points < 2000 {
        warnings.push(format!(
            "x_max = {x_max}, n_points = {n_points} is below the resolution (x_max >= 12, n_points >= 2000) for 1e-4 accuracy"
        ));
    }
    let (fine, h) = Tridiagonal::oscillator(x_max, n_points);
    let (coarse, _) = Tridiagonal::oscillator(x_max, (n_points + 1) / 2 - 1);
    let mut levels = Vec::with_capacity(n_levels);
    for k in 0..n_levels {
        let e = fine.eigenvalue(k);
        let ec = coarse.eigenvalue(k);
        let richardson_error = (e - ec) / 3.0;
        if richardson_error.abs() > 1e-4 {
            warnings.push(format!("level {}: Richardson error estimate {richardson_error:.3e} exceeds 1e-4", k + 1));
        }
        let mut v = fine.eigenvector(e);
        let scale = 1.0 / h.sqrt();
        let sign = if v.iter().find(|a| a.abs() > 1e-8).copied().unwrap_or(1.0) < 0.0 { -scale } else { scale };
        v.iter_mut().for_each(|a| *a *= sign);
        levels.push(FdLevel {
            energy: e,
            richardson_error,
            extrapolated: e - richardson_error,
            x: (1..=n_points).map(|i| i as f64 * h).collect(),
            values: v,
        });
    }
    Ok(FdSolution { x_max, n_points, h, levels, warnings })
}

/// `√(Σ (v_i - φ(x_i))² h)` on the solver grid.
pub fn grid_l2_distance(level: &FdLevel, h: f64, phi: impl Fn(f64) -> f64) -> f64 {
    level.x.iter().zip(&level.values).map(|(&x, v)| (v - phi(x)).powi(2)).sum::<f64>().sqrt() * h.sqrt()
}

/// `(P² + Q²)/2` quantized with the affine-Weyl weight.
pub fn hamiltonian(basis: &BasisSpec) -> Result<OperatorMatrix> {
    let obs = Observable::MonomialSum(vec![
        Monomial { coeff: 0.5, beta: 0.0, n: 2 },
        Monomial { coeff: 0.5, beta: 2.0, n: 0 },
    ]);
    Ok(quantize(&Weight::affine_weyl(), &obs, basis)?.matrix)
}

/// Lowest `n_levels` eigenvalues of the truncated hamiltonian.
pub fn spectrum(basis: &BasisSpec, n_levels: usize) -> Result<Vec<f64>> {
    let mut ev = hamiltonian(basis)?.eigenvalues();
    ev.sort_by(f64::total_cmp);
    ev.truncate(n_levels);
    Ok(ev)
}

/// `max_t |ρ_{φ_n}(t) - ρ_{φ_n}(0)|` under the truncated hamiltonian in `basis`.
pub fn stationary_check(n: usize, basis: &BasisSpec, times: &[f64], grid: &PhaseSpaceGrid) -> Result<f64> {
    let state = eigenstate_analytic(n)?;
    let frames = evolve_density(&state.wave, &hamiltonian(basis)?, times, &figure_fiducial()?, grid, 1e-4)?;
    Ok(stationary_deviation(&frames))
}

/// ACS fiducial of the figures: the `t = 0` thermal state at `α = 1`.
pub fn figure_fiducial() -> Result<WaveFunction> {
    WaveFunction::basis_vector(BasisSpec::new(1.0, 1)?, 0)
}

/// Everything plotted for one level.
#[derive(Debug, Clone)]
pub struct FigureBundle {
    pub n: usize,
    pub density: Profile,
    pub wigner: QuasiDistribution,
    pub wavelet_re: QuasiDistribution,
    pub wavelet_im: QuasiDistribution,
    pub acs_density: QuasiDistribution,
    /// `(1/2π)∫𝒜𝒲 dp`.
    pub reconstructed_density: Profile,
    pub momentum_density: Profile,
    /// `(1/2π)∫𝒜𝒲 dq`.
    pub q_marginal: Profile,
    pub p_marginal_l1: f64,
    pub q_marginal_l1: f64,
}

impl FigureBundle {
    pub fn distributions(&self) -> [(&'static str, &QuasiDistribution); 4] {
        [
            ("wigner", &self.wigner),
            ("wavelet_re", &self.wavelet_re),
            ("wavelet_im", &self.wavelet_im),
            ("acs_density", &self.acs_density),
        ]
    }

    pub fn profiles(&self) -> [(&'static str, &Profile); 4] {
        [
            ("density", &self.density),
            ("reconstructed_density", &self.reconstructed_density),
            ("momentum_density", &self.momentum_density),
            ("q_marginal", &self.q_marginal),
        ]
    }
}

pub fn figure_data(n: usize, grid: &PhaseSpaceGrid) -> Result<FigureBundle> {
    let state = eigenstate_analytic(n)?;
    let label = format!("phi_{n}");
    let fiducial = figure_fiducial()?;
    let wigner = wigner_aw(&state.wave, grid, &label)?;
    let (wavelet_re, wavelet_im) = acs_symbol_grid(&state.wave, &fiducial, grid, &label)?;
    let acs_density = acs_density_grid(&state.wave, &fiducial, grid, &label)?;
    let m = MarginalReport::compute(&state.wave, grid, &label)?;
    Ok(FigureBundle {
        n,
        density: m.density,
        wigner,
        wavelet_re,
        wavelet_im,
        acs_density,
        reconstructed_density: m.p_marginal,
        momentum_density: m.momentum_density,
        q_marginal: m.q_marginal,
        p_marginal_l1: m.p_marginal_l1,
        q_marginal_l1: m.q_marginal_l1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ground_level_closed_form() {
        let s = eigenstate_analytic(1).unwrap();
        // ∫₀^∞ x² e^{-x²} = √π/4, so 2π^{-1/4} x e^{-x²/2} has unit norm
        for x in [0.1, 0.8, 2.5] {
            let exact = 2.0 * PI.powf(-0.25) * x * (-x * x / 2.0).exp();
            assert!((s.eval(x) - exact).abs() < 1e-12);
        }
        assert_eq!(s.energy, 1.5);
        assert!(eigenstate_analytic(0).is_err());
    }

    #[test]
    fn states_vanish_at_wall_and_are_orthonormal() {
        let states: Vec<_> = (1..=4).map(|n| eigenstate_analytic(n).unwrap()).collect();
        for a in &states {
            assert_eq!(a.eval(0.0), 0.0);
            for b in &states {
                let ip = a.wave.inner(&b.wave).unwrap();
                let want = if a.n == b.n { 1.0 } else { 0.0 };
                assert!((ip.re - want).abs() < 1e-10 && ip.im.abs() < 1e-12, "{} {}: {ip}", a.n, b.n);
            }
        }
    }

    #[test]
    fn finite_differences_reproduce_spectrum() {
        let sol = eigensolve_fd(4, 12.0, 4000).unwrap();
        assert!(sol.warnings.is_empty(), "{:?}", sol.warnings);
        for (k, l) in sol.levels.iter().enumerate() {
            assert!((l.energy - energy(k + 1)).abs() < 1e-4, "{}: {}", k + 1, l.energy);
        }
        let phi1 = eigenstate_analytic(1).unwrap();
        assert!(grid_l2_distance(&sol.levels[0], sol.h, |x| phi1.eval(x)) < 1e-4);
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        let e = |n| eigensolve_fd(2, 12.0, n).unwrap().levels[1].energy - 3.5;
        let ratio = e(999) / e(1999);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
        assert!(!eigensolve_fd(1, 12.0, 200).unwrap().warnings.is_empty());
    }

    #[test]
    fn ground_level_density_is_stationary() {
        let b = BasisSpec::scaled(2.0, 60, 0.5).unwrap();
        let grid = PhaseSpaceGrid::from_spec(&crate::phase_space::GridSpec { nq: 12, np: 12, ..Default::default() }).unwrap();
        let dev = stationary_check(1, &b, &[0.0, 0.7, 1.9, 3.1], &grid).unwrap();
        assert!(dev < 1e-6, "{dev}");
    }

    #[test]
    fn laguerre_spectrum() {
        let b = BasisSpec::scaled(2.0, 60, 0.5).unwrap();
        let ev = spectrum(&b, 4).unwrap();
        for (k, e) in ev.iter().enumerate() {
            assert!((e - energy(k + 1)).abs() < 1e-3, "{}: {e}", k + 1);
        }
    }
}


