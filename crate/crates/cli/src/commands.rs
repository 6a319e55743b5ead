//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;

use affquant::affine_group::GroupElement;
use affquant::halfosc;
use affquant::phase_space::{
    acs_density_grid, acs_symbol_grid, lower_symbol_grid, wigner_aw, LowerSymbolOptions, MarginalReport,
};
use affquant::representation::{matrix_u, trace_u, trace_u_limit, BasisSpec, OperatorMatrix, Summation};
use affquant::verify;
use affquant::weights::{compute_constants, fiducial_wave, trace_condition, WeightSpec};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{Overrides, RunConfig};
use crate::emit::Bundle;
use crate::expr::parse_observable;
use crate::{Command, Failure};

/// Directory used by dataset commands when `--out` is absent.
const DEFAULT_OUT: &str = "affquant-out";

const HALFOSC_DATASETS: [&str; 8] = [
    "wigner",
    "wavelet",
    "acs_density",
    "density",
    "reconstructed_density",
    "momentum_density",
    "q_marginal",
    "spectrum",
];

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn or_error<T>(r: affquant::Result<T>, f: impl FnOnce(T) -> Value) -> Value {
    match r {
        Ok(v) => f(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Manifest skeleton plus warnings collected during a run.
struct Run {
    command: &'static str,
    config: RunConfig,
    tolerances: Map<String, Value>,
    results: Map<String, Value>,
    warnings: Vec<String>,
}

impl Run {
    fn new(command: &'static str, config: RunConfig) -> Self {
        let mut tolerances = Map::new();
        tolerances.insert("requested".into(), json!(config.tol));
        Run { command, config, tolerances, results: Map::new(), warnings: Vec::new() }
    }

    fn tolerance(&mut self, key: &str, v: Value) {
        self.tolerances.insert(key.into(), v);
    }

    fn result(&mut self, key: &str, v: Value) {
        self.results.insert(key.into(), v);
    }

    /// Records `value` and warns when it exceeds the requested tolerance.
    fn indicator(&mut self, key: &str, value: f64) {
        self.result(key, json!(value));
        if !(value <= self.config.tol) {
            let msg = format!("{key} = {value:.3e} exceeds --tol {:.1e}", self.config.tol);
            eprintln!("warning: {msg}");
            self.warnings.push(msg);
        }
    }

    fn out_dir(&self, default: Option<&str>) -> Option<PathBuf> {
        self.config.out.clone().or_else(|| default.map(PathBuf::from))
    }

    fn manifest(self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), json!("affquant"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), serde_json::to_value(&self.config).expect("config serializes"));
        m.insert("tolerances".into(), Value::Object(self.tolerances));
        m.insert("results".into(), Value::Object(self.results));
        m.insert("warnings".into(), json!(self.warnings));
        m
    }

    /// Writes the manifest into `bundle` and reports its location.
    fn finish(self, bundle: Bundle) -> Result<(), Failure> {
        let path = bundle.finish(self.manifest())?;
        println!("manifest: {}", path.display());
        Ok(())
    }

    /// Manifest only when `--out` was given.
    fn finish_optional(self, write: impl FnOnce(&mut Bundle) -> Result<(), Failure>) -> Result<(), Failure> {
        match self.out_dir(None) {
            Some(dir) => {
                let mut b = Bundle::create(&dir)?;
                write(&mut b)?;
                self.finish(b)
            }
            None => Ok(()),
        }
    }
}

pub fn run(command: Command, opts: &Overrides) -> Result<(), Failure> {
    let config = RunConfig::resolve(opts)?;
    let name = command.name();
    let run = Run::new(name, config);
    match command {
        Command::Repr => repr(run),
        Command::TraceU => trace(run),
        Command::Constants => constants(run),
        Command::Quantize => quantize(run),
        Command::Wigner => wigner(run),
        Command::AcsDensity => acs(run),
        Command::LowerSymbol => lower(run),
        Command::Halfosc => half_oscillator(run),
        Command::Verify { only } => verify_suite(run, &only),
    }
}

fn group_element(c: &RunConfig) -> Result<GroupElement<f64>, Failure> {
    let q = c.q.ok_or_else(|| Failure::Usage("this command needs --q".into()))?;
    GroupElement::new(q, c.p.unwrap_or(0.0)).map_err(|e| Failure::Usage(e.to_string()))
}

fn matrix_csv(m: &OperatorMatrix) -> String {
    let mut s = String::from("m,n,re,im\n");
    let e = &m.entries;
    for i in 0..e.nrows() {
        for j in 0..e.ncols() {
            let _ = writeln!(s, "{i},{j},{},{}", fmt17(e[(i, j)].re), fmt17(e[(i, j)].im));
        }
    }
    s
}

fn repr(mut run: Run) -> Result<(), Failure> {
    let basis = run.config.basis()?;
    let g = group_element(&run.config)?;
    let u = matrix_u(&basis, g);
    let k = basis.dim() / 2;
    let cols = u.entries.columns(0, k);
    let gram = cols.adjoint() * cols;
    let unitarity = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max);
    println!("U(q = {}, p = {}) in the basis alpha = {}, N = {}, scale = {}", g.q(), g.p(), basis.alpha, basis.n_max, basis.scale);
    println!("dimension                 {}", basis.dim());
    println!("trace of the block        {}", fmt17(u.trace().re));
    let truncation = u.truncation_estimate().unwrap_or(0.0);
    println!("truncation estimate       {truncation:.3e}");
    println!("first {k} columns, U*U - I  {unitarity:.3e}");
    run.result("dimension", json!(basis.dim()));
    run.result("truncation_estimate", json!(truncation));
    run.indicator("leading_columns_unitarity_defect", unitarity);
    run.finish_optional(|b| b.write("repr.csv", &matrix_csv(&u)))
}

fn trace(mut run: Run) -> Result<(), Failure> {
    let c = run.config.clone();
    let g = group_element(&c)?;
    let basis = BasisSpec::new(c.alpha, 1).map_err(|e| Failure::Usage(e.to_string()))?;
    let summation = Summation::default();
    let est = trace_u(&basis, g, &summation)?;
    let (q, p, alpha) = (g.q(), g.p(), c.alpha);
    let limit = trace_u_limit(alpha, q)?;
    let plain = q.sqrt() / (q - 1.0).abs();
    println!("trace U(q = {q}, p = {p}), alpha = {alpha}");
    println!("abel sum                              {} {:+.3e}i  (error {:.1e})", fmt17(est.value.re), est.value.im, est.error);
    println!("min(q,1/q)^(alpha/2) sqrt(q)/|q-1|    {}", fmt17(limit));
    println!("sqrt(q)/|q-1|                         {}", fmt17(plain));
    if let Summation::Abel { t_grid } = &summation {
        run.tolerance("abel_t_grid", json!(t_grid));
    }
    run.result("abel_sum", complex(est.value));
    run.result("closed_form", json!(limit));
    run.result("sqrt_q_over_abs_q_minus_1", json!(plain));
    run.indicator("error_estimate", est.error);
    run.indicator("closed_form_discrepancy", (est.value - Complex64::new(limit, 0.0)).norm());
    run.finish_optional(|_| Ok(()))
}

fn constants(mut run: Run) -> Result<(), Failure> {
    let (spec, w) = run.config.weight_or(WeightSpec::Aw)?;
    let betas = [-1.0, 0.0, 1.0, 2.0];
    let k = compute_constants(&w, &betas, &[0.5, 1.0, 2.0]);
    let tc = trace_condition(&w);
    println!("weight {}", w.label());
    let line = |name: &str, r: &affquant::Result<Complex64>| match r {
        Ok(z) => println!("{name:<16}{} {:+.6e}i", fmt17(z.re), z.im),
        Err(e) => println!("{name:<16}{e}"),
    };
    match &k.c_m {
        Ok(v) => println!("{:<16}{}", "c_M", fmt17(*v)),
        Err(e) => println!("{:<16}{e}", "c_M"),
    }
    for b in &k.betas {
        line(&format!("d_{}", b.beta), &b.d_beta);
    }
    line("Omega'(1)", &k.omega_prime);
    line("Omega''(1)", &k.omega_second);
    let mut d = Map::new();
    for b in &k.betas {
        d.insert(format!("{}", b.beta), or_error(b.d_beta.clone(), complex));
    }
    run.result("weight", serde_json::to_value(&spec).expect("weight spec serializes"));
    run.result("c_m", or_error(k.c_m.clone(), |v| json!(v)));
    run.result("d_beta", Value::Object(d));
    run.result("omega_prime", or_error(k.omega_prime.clone(), complex));
    run.result("omega_second", or_error(k.omega_second.clone(), complex));
    run.result("derivatives_closed_form", json!(k.derivatives_closed_form));
    match tc {
        Ok(t) => {
            println!("trace (Fourier)  {}", fmt17(t.fourier_route.re));
            println!("trace (p.v.)     {}", fmt17(t.pv_route.re));
            run.result("trace_fourier_route", complex(t.fourier_route));
            run.result("trace_pv_route", complex(t.pv_route));
            run.indicator("trace_route_discrepancy", t.discrepancy);
        }
        Err(e) => {
            println!("trace            {e}");
            run.result("trace_condition", json!({ "error": e.to_string() }));
        }
    }
    let text = crate::emit::pretty(&Value::Object(run.results.clone()));
    run.finish_optional(|b| b.write("constants.json", &text))
}

fn quantize(mut run: Run) -> Result<(), Failure> {
    let text = run.config.observable.clone().ok_or_else(|| Failure::Usage("quantize needs --f <expr>".into()))?;
    let obs = parse_observable(&text)?;
    let basis = run.config.basis()?;
    let (_, w) = run.config.weight_or(WeightSpec::Aw)?;
    let op = affquant::quantize::quantize(&w, &obs, &basis)?;
    let hermitian = op.matrix.hermitian_deviation();
    let eigen = op.matrix.eigenvalues();
    let shown: Vec<f64> = eigen.iter().copied().take(6).collect();
    println!("A[{}] with weight {}", op.label, op.weight);
    println!("closed form        {}", op.describe());
    println!("matrix dimension   {}", op.matrix.dim());
    println!("hermitian defect   {hermitian:.3e}");
    println!("lowest eigenvalues {}", shown.iter().map(|v| format!("{v:.10}")).collect::<Vec<_>>().join(" "));
    run.result("observable", json!(op.label));
    run.result("weight", json!(op.weight));
    run.result("closed_form", json!(op.describe()));
    run.result("lowest_eigenvalues", json!(shown));
    run.indicator("hermitian_defect", hermitian);
    let csv = matrix_csv(&op.matrix);
    run.finish_optional(|b| b.write("operator.csv", &csv))
}

fn wigner(mut run: Run) -> Result<(), Failure> {
    let grid = run.config.grid()?;
    let state = run.config.state()?;
    let d = wigner_aw(&state.wave, &grid, &state.label)?;
    let resid = d.metadata.get("imag_residual").and_then(Value::as_f64).unwrap_or(0.0);
    run.tolerance("quadrature", d.metadata.get("tolerance").cloned().unwrap_or(Value::Null));
    run.indicator("imag_residual", resid);
    println!("wigner {} on {}x{} nodes: min {:.6e}, max {:.6e}", state.label, grid.q_nodes.len(), grid.p_nodes.len(), d.min(), d.max());
    let mut b = Bundle::create(&run.out_dir(Some(DEFAULT_OUT)).expect("default directory"))?;
    b.distribution("wigner", &d, run.config.tol)?;
    run.finish(b)
}

fn acs(mut run: Run) -> Result<(), Failure> {
    let grid = run.config.grid()?;
    let state = run.config.state()?;
    let fiducial = match &run.config.weight {
        None => halfosc::figure_fiducial()?,
        Some(WeightSpec::Acs { fiducial }) => fiducial_wave(fiducial).map_err(|e| Failure::Usage(e.to_string()))?,
        Some(_) => return Err(Failure::Usage("acs-density needs an acs weight".into())),
    };
    let d = acs_density_grid(&state.wave, &fiducial, &grid, &state.label)?;
    run.tolerance("quadrature", d.metadata.get("tolerance").cloned().unwrap_or(Value::Null));
    run.result("c_minus_1", d.metadata.get("c_minus_1").cloned().unwrap_or(Value::Null));
    println!("acs density {} on {}x{} nodes: max {:.6e}", state.label, grid.q_nodes.len(), grid.p_nodes.len(), d.max());
    let mut b = Bundle::create(&run.out_dir(Some(DEFAULT_OUT)).expect("default directory"))?;
    b.distribution("acs_density", &d, run.config.tol)?;
    if run.config.emit.iter().any(|e| e == "wavelet") {
        let (re, im) = acs_symbol_grid(&state.wave, &fiducial, &grid, &state.label)?;
        b.distribution("wavelet_re", &re, run.config.tol)?;
        b.distribution("wavelet_im", &im, run.config.tol)?;
    }
    run.finish(b)
}

fn lower(mut run: Run) -> Result<(), Failure> {
    let text = run.config.observable.clone().ok_or_else(|| Failure::Usage("lower-symbol needs --f <expr>".into()))?;
    let obs = parse_observable(&text)?;
    let grid = run.config.grid()?;
    let (_, w) = run.config.weight_or(WeightSpec::Aw)?;
    let opts = LowerSymbolOptions::default();
    let d = lower_symbol_grid(&w, &obs, &grid, opts)?;
    run.tolerance("options", serde_json::to_value(opts).expect("options serialize"));
    println!("lower symbol of {} for {} on {}x{} nodes", obs.label(), w.label(), grid.q_nodes.len(), grid.p_nodes.len());
    let mut b = Bundle::create(&run.out_dir(Some(DEFAULT_OUT)).expect("default directory"))?;
    b.distribution("lower_symbol", &d, run.config.tol)?;
    run.finish(b)
}

fn half_oscillator(mut run: Run) -> Result<(), Failure> {
    let n = match run.config.state.as_deref() {
        None => 1,
        Some(s) => s
            .strip_prefix("halfosc:")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Failure::Usage(format!("halfosc needs --n, got state '{s}'")))?,
    };
    let emit: Vec<String> = if run.config.emit.is_empty() || run.config.emit.iter().any(|e| e == "all") {
        HALFOSC_DATASETS.iter().map(|s| s.to_string()).collect()
    } else {
        run.config.emit.clone()
    };
    if let Some(bad) = emit.iter().find(|e| !HALFOSC_DATASETS.contains(&e.as_str())) {
        return Err(Failure::Usage(format!("unknown dataset '{bad}' (expected one of {})", HALFOSC_DATASETS.join(", "))));
    }
    let wants = |name: &str| emit.iter().any(|e| e == name);
    let state = halfosc::eigenstate_analytic(n).map_err(|e| Failure::Usage(e.to_string()))?;
    let label = format!("phi_{n}");
    let grid = run.config.grid()?;
    println!("half-oscillator level {n}: E = {}", state.energy);
    run.result("level", json!(n));
    run.result("energy", json!(state.energy));
    let mut b = Bundle::create(&run.out_dir(Some(DEFAULT_OUT)).expect("default directory"))?;
    let tol = run.config.tol;
    if wants("wigner") {
        let d = wigner_aw(&state.wave, &grid, &label)?;
        run.tolerance("wigner_quadrature", d.metadata.get("tolerance").cloned().unwrap_or(Value::Null));
        run.indicator("wigner_imag_residual", d.metadata.get("imag_residual").and_then(Value::as_f64).unwrap_or(0.0));
        b.distribution("wigner", &d, tol)?;
    }
    if wants("wavelet") || wants("acs_density") {
        let fiducial = halfosc::figure_fiducial()?;
        if wants("wavelet") {
            let (re, im) = acs_symbol_grid(&state.wave, &fiducial, &grid, &label)?;
            b.distribution("wavelet_re", &re, tol)?;
            b.distribution("wavelet_im", &im, tol)?;
        }
        if wants("acs_density") {
            let d = acs_density_grid(&state.wave, &fiducial, &grid, &label)?;
            b.distribution("acs_density", &d, tol)?;
        }
    }
    let profiles = ["density", "reconstructed_density", "momentum_density", "q_marginal"];
    if profiles.iter().any(|p| wants(p)) {
        let m = MarginalReport::compute(&state.wave, &grid, &label)?;
        for (name, p) in [
            ("density", &m.density),
            ("reconstructed_density", &m.p_marginal),
            ("momentum_density", &m.momentum_density),
            ("q_marginal", &m.q_marginal),
        ] {
            if wants(name) {
                b.profile(name, p)?;
            }
        }
        println!("marginal L1 errors: p {:.3e}, q {:.3e}", m.p_marginal_l1, m.q_marginal_l1);
        run.indicator("p_marginal_l1", m.p_marginal_l1);
        run.indicator("q_marginal_l1", m.q_marginal_l1);
    }
    if wants("spectrum") {
        let (x_max, n_points) = (12.0, 4000);
        let fd = halfosc::eigensolve_fd(n.max(4), x_max, n_points)?;
        for w in &fd.warnings {
            eprintln!("warning: {w}");
            run.warnings.push(w.clone());
        }
        let basis = BasisSpec::scaled(2.0, 60, 0.5)?;
        let lag = halfosc::spectrum(&basis, n.max(4))?;
        let exact: Vec<f64> = (1..=n.max(4)).map(halfosc::energy).collect();
        let fd_e: Vec<f64> = fd.levels.iter().map(|l| l.energy).collect();
        let fd_err: Vec<f64> = fd.levels.iter().map(|l| l.richardson_error).collect();
        let worst_fd = fd_e.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let worst_lag = lag.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("finite-difference levels {}", fd_e.iter().map(|v| format!("{v:.8}")).collect::<Vec<_>>().join(" "));
        println!("laguerre-basis levels    {}", lag.iter().map(|v| format!("{v:.8}")).collect::<Vec<_>>().join(" "));
        run.tolerance("finite_difference", json!({ "x_max": x_max, "n_points": n_points }));
        run.tolerance("laguerre_basis", json!({ "alpha": basis.alpha, "n_max": basis.n_max, "scale": basis.scale }));
        run.result("spectrum_fd_max_error", json!(worst_fd));
        run.result("spectrum_laguerre_max_error", json!(worst_lag));
        b.write_json(
            "spectrum.json",
            &json!({
                "exact": exact,
                "finite_difference": { "energies": fd_e, "richardson_error": fd_err, "x_max": x_max, "n_points": n_points },
                "laguerre": { "energies": lag, "alpha": basis.alpha, "n_max": basis.n_max, "scale": basis.scale },
            }),
        )?;
    }
    run.finish(b)
}

fn verify_suite(mut run: Run, only: &[usize]) -> Result<(), Failure> {
    let seed = run.config.seed.unwrap_or(verify::DEFAULT_SEED);
    let ids: Vec<usize> = if only.is_empty() { (1..=verify::CHECKS.len()).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > verify::CHECKS.len()) {
        return Err(Failure::Usage(format!("no check {bad}; checks are numbered 1 to {}", verify::CHECKS.len())));
    }
    let outcomes: Vec<_> = ids.iter().map(|&id| verify::run_check(id, seed)).collect();
    print!("{}", verify::table(&outcomes));
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("{} of {} checks passed", outcomes.len() - failed.len(), outcomes.len());
    run.tolerance("pinned", json!("per measurement, see results"));
    run.result("seed", json!(seed));
    run.result("checks", serde_json::to_value(&outcomes).expect("outcomes serialize"));
    run.finish_optional(|_| Ok(()))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(format!("checks failed: {failed:?}")))
    }
}
