use affquant::verify::{run_check, CHECKS, DEFAULT_SEED};

fn check(id: usize) {
    let o = run_check(id, DEFAULT_SEED);
    println!("[{}] criterion {id:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.summary());
    for m in &o.measurements {
        println!("        {} {} = {:.3e} (tol {:.1e})", if m.pass { "ok  " } else { "FAIL" }, m.what, m.value, m.tolerance);
    }
    assert!(o.pass, "criterion {id} ({}) failed: {}", CHECKS[id - 1], o.summary());
}

#[test]
fn c01_unitarity_and_homomorphism() {
    check(1);
}

#[test]
fn c02_trace_formula() {
    check(2);
}

#[test]
fn c03_thermal_constant() {
    check(3);
}

#[test]
fn c04_unit_trace_of_weights() {
    check(4);
}

#[test]
fn c05_canonical_limit() {
    check(5);
}

#[test]
fn c06_acs_constants() {
    check(6);
}

#[test]
fn c07_wigner_marginals() {
    check(7);
}

#[test]
fn c08_lower_symbols() {
    check(8);
}

#[test]
fn c09_half_oscillator() {
    check(9);
}

#[test]
fn c10_covariance() {
    check(10);
}
