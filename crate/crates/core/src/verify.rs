//! Invariant suite: closed-form identities and structural properties checked numerically.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::affine_group::GroupElement;
use crate::error::Result;
use crate::halfosc;
use crate::phase_space::{
    lower_symbol_with, wigner_aw, wigner_mass, GridSpec, LowerSymbolOptions,
    MarginalReport, PhaseSpaceGrid, Route,
};
use crate::quantize::{
    covariance_check, function_derivative_matrix, power_derivative_matrix, quantize, quantize_position_fn, Observable,
    PositionFn,
};
use crate::representation::{matrix_element_raw, matrix_u, trace_u, BasisSpec, Moment, Summation, WaveFunction};
use crate::specfun::gamma;
use crate::weights::{
    bessel_integral, bessel_integral_closed_form, thermal_resolution_chain, trace_condition, Weight,
};

pub const DEFAULT_SEED: u64 = 20_240_917;

pub const CHECKS: [&str; 10] = [
    "unitarity and homomorphism",
    "trace formula",
    "thermal resolution constant",
    "unit trace of weights",
    "canonical limit of affine-Weyl quantization",
    "ACS constants",
    "affine Wigner marginals",
    "lower symbols",
    "half-oscillator",
    "covariance",
];

/// One measured quantity against its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Measurement {
    pub what: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub measurements: Vec<Measurement>,
    pub error: Option<String>,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
}

impl CheckOutcome {
    /// Measurement with the largest value/tolerance ratio.
    pub fn worst(&self) -> Option<&Measurement> {
        self.measurements.iter().max_by(|a, b| (a.value / a.tolerance).total_cmp(&(b.value / b.tolerance)))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(e) = &self.error {
            let _ = write!(s, "error: {e}");
        } else if let Some(m) = self.measurements.iter().find(|m| !m.pass).or(self.worst()) {
            let _ = write!(s, "{}: {:.3e} (tol {:.1e})", m.what, m.value, m.tolerance);
        }
        let _ = write!(s, "; {:.1}s", self.seconds);
        if let Some(b) = self.budget_seconds {
            let _ = write!(s, " (budget {b:.0}s)");
        }
        s
    }
}

#[derive(Default)]
struct Tally(Vec<Measurement>);

impl Tally {
    fn le(&mut self, what: impl Into<String>, value: f64, tolerance: f64) {
        self.0.push(Measurement { what: what.into(), value, tolerance, pass: value <= tolerance });
    }
}

fn budget(id: usize) -> Option<f64> {
    match id {
        1 => Some(10.0),
        2 => Some(30.0),
        3 => Some(20.0),
        7 => Some(120.0),
        _ => None,
    }
}

/// Runs check `id` (1-based).
pub fn run_check(id: usize, seed: u64) -> CheckOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(id as u64));
    let mut t = Tally::default();
    let res = match id {
        1 => unitarity(&mut t, &mut rng),
        2 => trace_formula(&mut t),
        3 => thermal_constant(&mut t),
        4 => unit_trace(&mut t),
        5 => canonical_limit(&mut t),
        6 => acs_constants(&mut t),
        7 => wigner_marginals(&mut t),
        8 => lower_symbols(&mut t, &mut rng),
        9 => half_oscillator(&mut t),
        10 => covariance(&mut t, &mut rng),
        _ => Err(crate::Error::config(format!("no check {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let budget_seconds = budget(id);
    let error = res.err().map(|e| e.to_string());
    let in_time = budget_seconds.is_none_or(|b| seconds <= b);
    let pass = error.is_none() && !t.0.is_empty() && t.0.iter().all(|m| m.pass) && in_time;
    CheckOutcome {
        id,
        name: CHECKS.get(id.wrapping_sub(1)).copied().unwrap_or("unknown").to_string(),
        pass,
        measurements: t.0,
        error,
        seconds,
        budget_seconds,
    }
}

pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    (1..=CHECKS.len()).map(|id| run_check(id, seed)).collect()
}

/// Plain-text pass/fail table.
pub fn table(outcomes: &[CheckOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        let _ = writeln!(s, "{:>2}  {:<4}  {:<44}  {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.name, o.summary());
    }
    s
}

fn random_g(rng: &mut ChaCha8Rng, q_range: (f64, f64), p_max: f64) -> Result<GroupElement<f64>> {
    let q = rng.random_range(q_range.0.ln()..q_range.1.ln()).exp();
    GroupElement::new(q, rng.random_range(-p_max..p_max))
}

fn unitarity(t: &mut Tally, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let alpha = [1.0, 2.0, 3.0][k % 3];
        let (m, n) = (rng.random_range(0..=10), rng.random_range(0..=10));
        let g = random_g(rng, (0.2, 5.0), 3.0)?;
        let (q, p) = (g.q(), g.p());
        let lhs = matrix_element_raw(alpha, m, n, 1.0 / q, -q * p);
        let rhs = matrix_element_raw(alpha, n, m, q, p).conj();
        worst = worst.max((lhs - rhs).norm());
    }
    t.le("max |U_mn(1/q,-qp) - conj U_nm(q,p)|", worst, 1e-10);

    let basis = BasisSpec::new(2.0, 30)?;
    let block = 16;
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let g1 = random_g(rng, (0.8, 1.25), 0.25)?;
        let g2 = random_g(rng, (0.8, 1.25), 0.25)?;
        let prod = matrix_u(&basis, g1).entries * matrix_u(&basis, g2).entries;
        let direct = matrix_u(&basis, g1.compose(&g2)).entries;
        let diff = (prod - direct).view((0, 0), (block, block)).norm();
        worst = worst.max(diff);
    }
    t.le(format!("‖U(g1)U(g2) - U(g1g2)‖_F, N=30, leading {block}x{block}"), worst, 1e-4);
    Ok(())
}

fn trace_formula(t: &mut Tally) -> Result<()> {
    let b0 = BasisSpec::new(0.0, 4)?;
    for q in [0.5f64, 2.0, 4.0] {
        let exact = q.sqrt() / (q - 1.0).abs();
        let mut vals = Vec::new();
        for p in [0.0, 1.3] {
            let tr = trace_u(&b0, GroupElement::new(q, p)?, &Summation::default())?;
            t.le(format!("|Tr U({q},{p}) - √q/|q-1||"), (tr.value - Complex64::new(exact, 0.0)).norm(), 1e-4);
            vals.push(tr.value);
        }
        t.le(format!("p-dependence of Tr U at q={q}"), (vals[0] - vals[1]).norm(), 1e-4);
    }
    Ok(())
}

fn thermal_constant(t: &mut Tally) -> Result<()> {
    let mut worst: f64 = 0.0;
    for alpha in [1.0, 2.0, 3.0] {
        for tt in [0.2, 0.5, 0.8] {
            worst = worst.max(thermal_resolution_chain(alpha, tt)?.max_deviation());
        }
    }
    t.le("max |c_ρ - 2π/α| over the chain", worst, 1e-6);
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 1.0, 2.0, 3.0] {
        for (g, mu) in [(1.5, 1.0), (3.0, 0.4), (1.05, 1.0)] {
            let num = bessel_integral(alpha, g, mu)?;
            let exact = bessel_integral_closed_form(alpha, g, mu);
            worst = worst.max((num - exact).abs() / exact.abs().max(1e-300));
        }
    }
    t.le("Bessel integral identity, relative", worst, 1e-8);
    Ok(())
}

fn fiducials() -> Result<Vec<(String, WaveFunction)>> {
    let mut out = Vec::new();
    for alpha in [1.0, 2.0, 3.0] {
        out.push((format!("e_0^({alpha})"), WaveFunction::basis_vector(BasisSpec::new(alpha, 2)?, 0)?));
    }
    let b = BasisSpec::new(1.5, 3)?;
    let mut c = nalgebra::DVector::zeros(4);
    c[0] = Complex64::new(0.6, 0.0);
    c[2] = Complex64::new(0.0, 0.8);
    out.push(("0.6 e_0 + 0.8i e_2 (α=1.5)".into(), WaveFunction::from_coeffs(b, c)?));
    let gauss = WaveFunction::from_real_fn(|x: f64| x * (-(x - 2.0).powi(2)).exp(), 1.0)?.normalized()?;
    out.push(("x e^{-(x-2)²}".into(), gauss));
    Ok(out)
}

fn unit_trace(t: &mut Tally) -> Result<()> {
    let tc = trace_condition(&Weight::affine_weyl())?;
    t.le("affine-Weyl |Tr - 1|, Fourier route", (tc.fourier_route - 1.0).norm(), 1e-6);
    t.le("affine-Weyl |Tr - 1|, principal-value route", (tc.pv_route - 1.0).norm(), 1e-6);
    for (label, psi) in fiducials()? {
        let tc = trace_condition(&Weight::acs(psi)?)?;
        t.le(format!("ACS {label} |Tr - 1|, Fourier route"), (tc.fourier_route - 1.0).norm(), 1e-6);
        t.le(format!("ACS {label} |Tr - 1|, principal-value route"), (tc.pv_route - 1.0).norm(), 1e-6);
    }
    Ok(())
}

fn canonical_limit(t: &mut Tally) -> Result<()> {
    let w = Weight::affine_weyl();
    let b = BasisSpec::new(2.0, 40)?;
    let k = 20;
    let corner = |m: &nalgebra::DMatrix<Complex64>| m.view((0, 0), (k, k)).into_owned();
    for beta in [1.0, 2.0, 0.5] {
        let a = quantize(&w, &Observable::PositionFn(PositionFn::power(beta)), &b)?;
        let exact = power_derivative_matrix(&b, beta, 0)?;
        t.le(format!("A_(q^{beta}) - Q^{beta}"), (corner(&a.matrix.entries) - corner(&exact)).norm(), 1e-8);
    }
    let u = PositionFn::new("q/(1+q)", |q| q / (1.0 + q));
    let a = quantize_position_fn(&w, &u, &b)?;
    let exact = function_derivative_matrix(&b, &|x: f64| Complex64::new(x / (1.0 + x), 0.0), 0, 300)?;
    t.le("A_(q/(1+q)) - Q/(1+Q)", (corner(&a.matrix.entries) - corner(&exact)).norm(), 1e-8);
    let a = quantize(&w, &Observable::MomentumPower(2), &b)?;
    let exact = power_derivative_matrix(&b, 0.0, 2)?;
    t.le("A_(p²) - P², interior block", (corner(&a.matrix.entries) - corner(&exact)).norm(), 1e-8);
    let a = quantize(&w, &Observable::Dilation, &b)?;
    let mut d = power_derivative_matrix(&b, 1.0, 1)?;
    for i in 0..d.nrows() {
        d[(i, i)] -= Complex64::new(0.0, 0.5);
    }
    t.le("A_(qp) - D", (corner(&a.matrix.entries) - corner(&d)).norm(), 1e-8);
    Ok(())
}

fn acs_constants(t: &mut Tally) -> Result<()> {
    for alpha in [1.0, 2.0, 3.0] {
        let psi = WaveFunction::basis_vector(BasisSpec::new(alpha, 2)?, 0)?;
        let mut worst: f64 = 0.0;
        for g in [-3.0, -2.0, -1.0, alpha - 1.5] {
            let c = psi.moment(-2.0 - g, Moment::Density)?.re;
            let exact = gamma(alpha - 1.0 - g)? / gamma(alpha + 1.0)?;
            worst = worst.max((c - exact).abs() / exact);
        }
        t.le(format!("α={alpha}: c_γ vs Γ(α-1-γ)/Γ(α+1), relative"), worst, 1e-10);
        let k = psi.moment(1.0, Moment::DerivDensity)?.re / psi.moment(-1.0, Moment::Density)?.re;
        t.le(format!("α={alpha}: |K - α/4|"), (k - alpha / 4.0).abs(), 1e-10);
        let op = quantize(&Weight::acs(psi)?, &Observable::Kinetic, &BasisSpec::new(3.0, 4)?)?;
        t.le(format!("α={alpha}: Q^(-2) coefficient of A_(p²) - α/4"), (op.coefficient_of(-2.0, 0) - alpha / 4.0).norm(), 1e-7);
        if alpha == 3.0 {
            t.le("α=3: |K - 3/4| (self-adjointness threshold)", (k - 0.75).abs(), 1e-10);
        }
    }
    Ok(())
}

fn wigner_marginals(t: &mut Tally) -> Result<()> {
    let grid = PhaseSpaceGrid::from_spec(&GridSpec::default())?;
    for n in 1..=4 {
        let s = halfosc::eigenstate_analytic(n)?;
        let m = MarginalReport::compute(&s.wave, &grid, &format!("phi_{n}"))?;
        t.le(format!("φ{n}: L¹ of p-marginal - |φ(q)|²"), m.p_marginal_l1, 1e-5);
        t.le(format!("φ{n}: L¹ of q-marginal - |φ̂(p)|²"), m.q_marginal_l1, 1e-5);
        t.le(format!("φ{n}: |mass - 1|"), (wigner_mass(&s.wave)? - 1.0).abs(), 1e-6);
        let w = wigner_aw(&s.wave, &grid, "")?;
        let resid = w.metadata.get("imag_residual").and_then(|v| v.as_f64()).unwrap_or(f64::INFINITY);
        t.le(format!("φ{n}: imaginary residual"), resid, 1e-8);
    }
    Ok(())
}

fn lower_symbols(t: &mut Tally, rng: &mut ChaCha8Rng) -> Result<()> {
    let w = Weight::affine_weyl();
    let generic = LowerSymbolOptions { route: Route::Generic, ..Default::default() };
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let g = random_g(rng, (0.2, 5.0), 3.0)?;
        let v = lower_symbol_with(&w, &Observable::MomentumPower(2), g, generic)?;
        let exact = g.p() * g.p() + 0.25 / (g.q() * g.q());
        worst = worst.max((v - exact).abs() / exact.max(1.0));
    }
    t.le("p̌² - (p² + 1/4q²), generic route, 10 points", worst, 1e-4);
    for beta in [-1.0, 0.5, 1.0, 2.0] {
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let g = random_g(rng, (0.2, 5.0), 3.0)?;
            let v = lower_symbol_with(&w, &Observable::PositionFn(PositionFn::power(beta)), g, generic)?;
            worst = worst.max((v / g.q().powf(beta) - 1.0).abs());
        }
        t.le(format!("ǔ/u - 1 for u = q^{beta}, K₀ route"), worst, 1e-10);
    }
    Ok(())
}

fn half_oscillator(t: &mut Tally) -> Result<()> {
    let fd = halfosc::eigensolve_fd(4, 12.0, 4000)?;
    for (k, l) in fd.levels.iter().enumerate() {
        t.le(format!("finite differences |E_{} - {}|", k + 1, halfosc::energy(k + 1)), (l.energy - halfosc::energy(k + 1)).abs(), 1e-4);
    }
    let b = BasisSpec::scaled(2.0, 60, 0.5)?;
    for (k, e) in halfosc::spectrum(&b, 4)?.iter().enumerate() {
        t.le(format!("Laguerre N=60 |E_{} - {}|", k + 1, halfosc::energy(k + 1)), (e - halfosc::energy(k + 1)).abs(), 1e-3);
    }
    let grid = PhaseSpaceGrid::from_spec(&GridSpec { nq: 24, np: 24, ..GridSpec::default() })?;
    let dev = halfosc::stationary_check(1, &b, &[0.0, 0.5, 1.3, 2.9, 2.0 * PI], &grid)?;
    t.le("max_t |ρ_φ1(t) - ρ_φ1(0)|", dev, 1e-6);
    Ok(())
}

fn covariance(t: &mut Tally, rng: &mut ChaCha8Rng) -> Result<()> {
    let b = BasisSpec::new(2.0, 30)?;
    let ground = Weight::acs(WaveFunction::basis_vector(BasisSpec::new(2.0, 1)?, 0)?)?;
    for w in [Weight::affine_weyl(), ground] {
        for obs in [Observable::PositionFn(PositionFn::power(1.0)), Observable::Dilation] {
            let g = random_g(rng, (0.7, 1.4), 0.5)?;
            let r = covariance_check(&w, &obs, g, &b, 15)?;
            let bound = 2.0 * r.truncation.max(1e-12 * r.residual / r.relative.max(1e-300));
            t.le(
                format!("{} {} at ({:.3}, {:.3}): residual / (2 × truncation)", w.label(), obs.label(), r.q0, r.p0),
                r.residual / bound,
                1.0,
            );
        }
    }
    Ok(())
}

