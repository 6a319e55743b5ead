//! Semi-classical portraits on the half-plane: affine Wigner function, ACS symbols and
//! densities, lower symbols, density evolution and the Fubini-Study metric.

mod acs;
mod fubini;
mod lower;
mod wigner;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub use acs::{acs_density, acs_density_grid, acs_density_mass, acs_symbol, acs_symbol_grid, evolve_density, stationary_deviation};
pub use fubini::{fubini_study, FubiniStudy};
pub use lower::{
    acs_kinetic_constant, aw_kernel_moment, lower_symbol, lower_symbol_grid, lower_symbol_with, trace_kernel, KineticConstant,
    LowerSymbolOptions, Route,
};
pub use wigner::{
    momentum_amplitude, momentum_density, p_marginal, q_marginal, wigner_aw, wigner_mass, wigner_value, MarginalReport,
};

/// Axis parameters of the default grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub qmin: f64,
    pub qmax: f64,
    pub nq: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { qmin: 0.05, qmax: 8.0, nq: 120, pmin: -8.0, pmax: 8.0, np: 160 }
    }
}

/// Tensor grid on the half-plane; `q` geometric or custom, `p` uniform or custom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub q_nodes: Vec<f64>,
    pub p_nodes: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite())
}

impl PhaseSpaceGrid {
    pub fn new(q_nodes: Vec<f64>, p_nodes: Vec<f64>) -> Result<Self> {
        if q_nodes.is_empty() || p_nodes.is_empty() {
            return Err(Error::config("grid axes must be non-empty"));
        }
        if !strictly_increasing(&q_nodes) || !strictly_increasing(&p_nodes) {
            return Err(Error::config("grid nodes must be finite and strictly increasing"));
        }
        if q_nodes[0] <= 0.0 {
            return Err(Error::domain(format!("q nodes must be positive, got {}", q_nodes[0])));
        }
        Ok(PhaseSpaceGrid { q_nodes, p_nodes })
    }

    /// Geometric `q` nodes and uniform `p` nodes.
    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        if !(spec.qmin > 0.0 && spec.qmax > spec.qmin) || spec.nq < 2 {
            return Err(Error::config(format!(
                "q axis needs 0 < qmin < qmax and nq >= 2 (got {}, {}, {})",
                spec.qmin, spec.qmax, spec.nq
            )));
        }
        if !(spec.pmax > spec.pmin) || spec.np < 2 {
            return Err(Error::config(format!(
                "p axis needs pmin < pmax and np >= 2 (got {}, {}, {})",
                spec.pmin, spec.pmax, spec.np
            )));
        }
        let ratio = (spec.qmax / spec.qmin).ln() / (spec.nq - 1) as f64;
        let mut q: Vec<f64> = (0..spec.nq).map(|i| spec.qmin * (ratio * i as f64).exp()).collect();
        q[spec.nq - 1] = spec.qmax;
        let dp = (spec.pmax - spec.pmin) / (spec.np - 1) as f64;
        let mut p: Vec<f64> = (0..spec.np).map(|j| spec.pmin + dp * j as f64).collect();
        p[spec.np - 1] = spec.pmax;
        Self::new(q, p)
    }

    pub fn len(&self) -> usize {
        self.q_nodes.len() * self.p_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major node list (`q` outer, `p` inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.q_nodes.iter().flat_map(|&q| self.p_nodes.iter().map(move |&p| (q, p))).collect()
    }

    pub fn describe(&self) -> Value {
        let axis = |v: &[f64]| json!({ "min": v[0], "max": v[v.len() - 1], "n": v.len() });
        json!({ "q": axis(&self.q_nodes), "p": axis(&self.p_nodes) })
    }
}

/// `∫_0^∞ f` over panels `[0, a], [a, 4a], [4a, 16a], …` with a mapped tail past `4^10 a`.
pub(crate) fn geometric_halfline(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    tol: crate::quadrature::Tolerance<f64>,
    ctx: &str,
) -> Result<f64> {
    use crate::quadrature::adaptive;
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = a;
    for _ in 0..=10 {
        total += adaptive(&mut f, lo, hi, tol)?.into_result(ctx)?.value;
        lo = hi;
        hi *= 4.0;
    }
    total += adaptive(&mut f, lo, f64::INFINITY, tol)?.into_result(ctx)?.value;
    if !total.is_finite() {
        return Err(Error::Accuracy { estimate: total, error: f64::NAN, context: ctx.to_string() });
    }
    Ok(total)
}

/// Trapezoid weights for a sorted node list.
pub fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    WignerAw,
    AcsDensity,
    LowerSymbol,
    WaveletRe,
    WaveletIm,
}

impl DistributionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistributionKind::WignerAw => "wigner_aw",
            DistributionKind::AcsDensity => "acs_density",
            DistributionKind::LowerSymbol => "lower_symbol",
            DistributionKind::WaveletRe => "wavelet_re",
            DistributionKind::WaveletIm => "wavelet_im",
        }
    }
}

/// Real values on a [`PhaseSpaceGrid`], row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiDistribution {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
    pub kind: DistributionKind,
    pub label: String,
    /// Free-form tolerances and residuals recorded in the sidecar.
    pub metadata: serde_json::Map<String, Value>,
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl QuasiDistribution {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<f64>, kind: DistributionKind, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(QuasiDistribution { grid, values, kind, label: label.into(), metadata: Default::default() })
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn at(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.grid.p_nodes.len() + ip]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∬ value dq dp` by the tensor trapezoid rule.
    pub fn integrate(&self) -> f64 {
        let wq = trapezoid_weights(&self.grid.q_nodes);
        let wp = trapezoid_weights(&self.grid.p_nodes);
        let np = wp.len();
        wq.iter()
            .enumerate()
            .map(|(i, a)| a * (0..np).map(|j| wp[j] * self.values[i * np + j]).sum::<f64>())
            .sum()
    }

    /// `(1/2π) Σ_p` with trapezoid weights, one value per `q` node.
    pub fn grid_p_marginal(&self) -> Vec<f64> {
        let wp = trapezoid_weights(&self.grid.p_nodes);
        let np = wp.len();
        (0..self.grid.q_nodes.len())
            .map(|i| (0..np).map(|j| wp[j] * self.values[i * np + j]).sum::<f64>() / (2.0 * std::f64::consts::PI))
            .collect()
    }

    /// CSV with header `q,p,value`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 72 + 16);
        out.push_str("q,p,value\n");
        for (k, (q, p)) in self.grid.points().into_iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt17(q), fmt17(p), fmt17(self.values[k]));
        }
        out
    }

    pub fn sidecar(&self) -> Value {
        json!({
            "kind": self.kind.as_str(),
            "state": self.label,
            "grid": self.grid.describe(),
            "metadata": Value::Object(self.metadata.clone()),
        })
    }
}

/// Values along one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub axis: String,
    pub label: String,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},value\n", self.axis);
        for (x, v) in self.nodes.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", fmt17(*x), fmt17(*v));
        }
        out
    }

    /// `Σ w_i |a_i - b_i|` with trapezoid weights.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        trapezoid_weights(&self.nodes)
            .iter()
            .zip(self.values.iter().zip(other))
            .map(|(w, (a, b))| w * (a - b).abs())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = PhaseSpaceGrid::from_spec(&GridSpec::default()).unwrap();
        assert_eq!(g.q_nodes.len(), 120);
        assert_eq!(g.p_nodes.len(), 160);
        assert_eq!(g.q_nodes[0], 0.05);
        assert_eq!(g.q_nodes[119], 8.0);
        let r0 = g.q_nodes[1] / g.q_nodes[0];
        let r1 = g.q_nodes[60] / g.q_nodes[59];
        assert!((r0 - r1).abs() < 1e-12);
        assert!(PhaseSpaceGrid::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(PhaseSpaceGrid::new(vec![1.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = PhaseSpaceGrid::new(vec![1.0, 2.0], vec![-1.0, 0.5]).unwrap();
        let d = QuasiDistribution::new(g, vec![0.1, 0.2, 0.3, 0.4], DistributionKind::AcsDensity, "x").unwrap();
        let csv = d.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "q,p,value");
        assert_eq!(lines.len(), 5);
        let row: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row, vec![1.0, 0.5, 0.2]);
        assert_eq!(d.sidecar()["kind"], "acs_density");
        // 17 significant digits survive a round trip
        let x = std::f64::consts::PI / 7.0;
        assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let nodes = vec![0.0, 0.3, 1.0, 2.5];
        let w = trapezoid_weights(&nodes);
        let s: f64 = w.iter().zip(&nodes).map(|(w, x)| w * (2.0 * x + 1.0)).sum();
        assert!((s - (2.5 * 2.5 + 2.5)).abs() < 1e-14);
    }
}
