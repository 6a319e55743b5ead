use affquant::halfosc::figure_data;
use affquant::phase_space::{GridSpec, PhaseSpaceGrid};

fn small_grid() -> PhaseSpaceGrid {
    PhaseSpaceGrid::from_spec(&GridSpec { qmin: 0.05, qmax: 6.0, nq: 16, pmin: -6.0, pmax: 6.0, np: 17 }).unwrap()
}

#[test]
fn bundle_for_second_level() {
    let b = figure_data(2, &small_grid()).unwrap();
    assert!(b.p_marginal_l1 < 1e-5, "{}", b.p_marginal_l1);
    assert!(b.q_marginal_l1 < 1e-5, "{}", b.q_marginal_l1);
    assert!(b.wigner.min() < -0.1);
    assert!(b.acs_density.min() >= 0.0);
    for (name, d) in b.distributions() {
        let csv = d.to_csv();
        assert!(csv.starts_with("q,p,value\n"), "{name}");
        assert_eq!(csv.lines().count(), 1 + 16 * 17, "{name}");
    }
    for (_, p) in b.profiles() {
        assert_eq!(p.values.len(), p.nodes.len());
    }
}

#[test]
fn ground_level_wigner_is_real_and_bounded() {
    let b = figure_data(1, &small_grid()).unwrap();
    let resid = b.wigner.metadata["imag_residual"].as_f64().unwrap();
    assert!(resid < 1e-8);
    // |𝒜𝒲| ≤ 2 for a normalized state
    assert!(b.wigner.max() <= 2.0 + 1e-9 && b.wigner.min() >= -2.0 - 1e-9);
}
