//! Run configuration: JSON file values overridden by command-line flags.
//!
//! Schema (every key optional):
//!
//! ```json
//! {
//!   "weight": { "kind": "thermal", "alpha": 1.0, "t": 0.5 },
//!   "alpha": 1.0, "n_max": 40, "scale": 1.0,
//!   "observable": "0.5*p^2 + 0.5*q^2",
//!   "grid": { "qmin": 0.05, "qmax": 8.0, "nq": 120, "pmin": -8.0, "pmax": 8.0, "np": 160 },
//!   "tol": 1e-6,
//!   "out": "results",
//!   "emit": ["wigner", "acs_density"],
//!   "state": "halfosc:1",
//!   "q": 2.0, "p": 0.0,
//!   "seed": 20240917
//! }
//! ```
//!
//! `weight` takes the library's weight description (`aw`, `diag`, `thermal`, `acs`
//! with a Laguerre or sampled fiducial).

use std::path::{Path, PathBuf};

use affquant::phase_space::{GridSpec, PhaseSpaceGrid};
use affquant::representation::{BasisSpec, WaveFunction};
use affquant::weights::{FiducialSpec, Weight, WeightSpec};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weight: Option<WeightSpec>,
    pub alpha: f64,
    pub n_max: usize,
    pub scale: f64,
    pub observable: Option<String>,
    pub grid: GridSpec,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub emit: Vec<String>,
    pub state: Option<String>,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weight: None,
            alpha: 1.0,
            n_max: 40,
            scale: 1.0,
            observable: None,
            grid: GridSpec::default(),
            tol: DEFAULT_TOL,
            out: None,
            emit: Vec::new(),
            state: None,
            q: None,
            p: None,
            seed: None,
        }
    }
}

/// Builtin weight names accepted by `--weight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WeightKind {
    Aw,
    Acs,
    Thermal,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON configuration file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Laguerre basis parameter α (> -1)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Highest basis index N
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<usize>,
    /// Basis scale s: functions e_n(x/s)/√s
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub weight: Option<WeightKind>,
    /// Thermal parameter t in [0, 1)
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Observable expression, e.g. "0.5*p^2 + 0.5*q^2"
    #[arg(long = "f", global = true, value_name = "EXPR", allow_hyphen_values = true)]
    pub observable: Option<String>,
    #[arg(long, global = true)]
    pub qmin: Option<f64>,
    #[arg(long, global = true)]
    pub qmax: Option<f64>,
    #[arg(long, global = true)]
    pub nq: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub pmin: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub pmax: Option<f64>,
    #[arg(long, global = true)]
    pub np: Option<usize>,
    /// Accuracy target; error indicators above it are reported
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated list of datasets to write
    #[arg(long, global = true, value_delimiter = ',')]
    pub emit: Option<Vec<String>>,
    /// State: halfosc:N or laguerre:N
    #[arg(long, global = true)]
    pub state: Option<String>,
    /// Half-oscillator level (shorthand for --state halfosc:N)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Group element q > 0
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Group element p
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Seed for randomized checks
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    /// File values (if any) with flags applied on top.
    pub fn resolve(o: &Overrides) -> Result<Self, Failure> {
        let mut c = match &o.config {
            Some(path) => Self::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:expr),*) => {$(
                if let Some(v) = o.$field.clone() { $target = v; }
            )*};
        }
        set!(alpha => c.alpha, n_max => c.n_max, scale => c.scale, tol => c.tol,
             qmin => c.grid.qmin, qmax => c.grid.qmax, nq => c.grid.nq,
             pmin => c.grid.pmin, pmax => c.grid.pmax, np => c.grid.np, emit => c.emit);
        if o.observable.is_some() {
            c.observable = o.observable.clone();
        }
        if o.out.is_some() {
            c.out = o.out.clone();
        }
        if o.state.is_some() {
            c.state = o.state.clone();
        }
        if let Some(n) = o.n {
            c.state = Some(format!("halfosc:{n}"));
        }
        c.q = o.q.or(c.q);
        c.p = o.p.or(c.p);
        c.seed = o.seed.or(c.seed);
        let file_t = match &c.weight {
            Some(WeightSpec::Thermal { t, .. }) => Some(*t),
            _ => None,
        };
        match o.weight {
            Some(WeightKind::Aw) => c.weight = Some(WeightSpec::Aw),
            Some(WeightKind::Acs) => {
                c.weight = Some(WeightSpec::Acs { fiducial: FiducialSpec::Laguerre { alpha: c.alpha, n: 0, scale: 1.0 } })
            }
            Some(WeightKind::Thermal) => {
                let t = o.t.or(file_t).ok_or_else(|| usage("--weight thermal needs --t"))?;
                c.weight = Some(WeightSpec::Thermal { alpha: c.alpha, t });
            }
            None => {
                if let (Some(t), Some(WeightSpec::Thermal { t: ft, .. })) = (o.t, c.weight.as_mut()) {
                    *ft = t;
                } else if o.t.is_some() {
                    return Err(usage("--t only applies to the thermal weight"));
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(usage(format!("--tol must be positive, got {}", self.tol)));
        }
        self.basis()?;
        if let Some(q) = self.q {
            if !(q > 0.0 && q.is_finite()) {
                return Err(usage(format!("q must be positive, got {q}")));
            }
        }
        if let Some(p) = self.p {
            if !p.is_finite() {
                return Err(usage(format!("p must be finite, got {p}")));
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<BasisSpec, Failure> {
        BasisSpec::scaled(self.alpha, self.n_max, self.scale).map_err(|e| usage(e.to_string()))
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid, Failure> {
        PhaseSpaceGrid::from_spec(&self.grid).map_err(|e| usage(e.to_string()))
    }

    /// The configured weight, `default` when none is given.
    pub fn weight_or(&self, default: WeightSpec) -> Result<(WeightSpec, Weight), Failure> {
        let spec = self.weight.clone().unwrap_or(default);
        let w = spec.build().map_err(|e| usage(format!("weight: {e}")))?;
        Ok((spec, w))
    }

    pub fn state(&self) -> Result<State, Failure> {
        State::parse(self.state.as_deref().unwrap_or("halfosc:1"), self.alpha)
    }
}

/// A normalized state on the half-line.
pub struct State {
    pub label: String,
    pub wave: WaveFunction,
}

impl State {
    fn parse(text: &str, alpha: f64) -> Result<Self, Failure> {
        let bad = || usage(format!("state must be halfosc:N or laguerre:N, got '{text}'"));
        let (kind, n) = text.split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "halfosc" => {
                let s = affquant::halfosc::eigenstate_analytic(n).map_err(|e| usage(e.to_string()))?;
                Ok(State { label: format!("phi_{n}"), wave: s.wave })
            }
            "laguerre" => {
                let basis = BasisSpec::new(alpha, n.max(1)).map_err(|e| usage(e.to_string()))?;
                let wave = WaveFunction::basis_vector(basis, n).map_err(|e| usage(e.to_string()))?;
                Ok(State { label: format!("e_{n}^({alpha})"), wave })
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("affquant-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(&path, r#"{"alpha": 2.0, "n_max": 12, "weight": {"kind": "thermal", "alpha": 2.0, "t": 0.3}, "grid": {"nq": 5}}"#)
            .unwrap();
        let o = Overrides { config: Some(path.clone()), n_max: Some(20), t: Some(0.6), ..Default::default() };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.alpha, 2.0);
        assert_eq!(c.n_max, 20);
        assert_eq!(c.grid.nq, 5);
        assert_eq!(c.grid.np, 160);
        assert_eq!(c.weight, Some(WeightSpec::Thermal { alpha: 2.0, t: 0.6 }));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let o = Overrides { alpha: Some(-2.0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&o), Err(Failure::Usage(_))));
        let o = Overrides { weight: Some(WeightKind::Thermal), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&o), Err(Failure::Usage(_))));
        let o = Overrides { tol: Some(0.0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&o), Err(Failure::Usage(_))));
        let c = RunConfig { state: Some("box:1".into()), ..Default::default() };
        assert!(c.state().is_err());
    }
}
