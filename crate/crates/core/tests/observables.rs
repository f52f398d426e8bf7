use duffing_core::fock::{ladder, unit_vec, SqueezePair};
use duffing_core::linalg::{c, re};
use duffing_core::liouville::{populations, steady_state, LevelBasis, StationaryDistribution};
use duffing_core::model::rwa_hamiltonian;
use duffing_core::observables::{
    a_matrix_element, a_matrix_element_states, bose_ratio, effective_occupation, extract_ntilde, well_levels,
};
use duffing_core::perturb::expand_attractor;
use duffing_core::{Branch, DephasingModel, Error, ModelParams, RenormalizedFrame};

fn fig() -> ModelParams {
    ModelParams::scaled(0.016, 4.0 / 75.0).unwrap()
}

fn full_distribution(frame: &RenormalizedFrame, dim: usize, levels: usize) -> StationaryDistribution {
    let l = frame.liouvillian(dim, DephasingModel::Exact).unwrap();
    let st = steady_state(&l).unwrap();
    let h = frame.hamiltonian(dim).unwrap();
    let w = well_levels(h.matrix(), None, levels, levels + 6).unwrap();
    populations(&st.rho, &w.states, LevelBasis::Perturbed)
}

#[test]
fn third_order_orbital_displacement_matches_exact_states() {
    let p = fig();
    let frame = RenormalizedFrame::new(&p, Branch::Has).unwrap();
    let alpha = frame.alpha();
    let (res, _) = expand_attractor(&p, Branch::Has, 7, 4).unwrap();
    let a_frame = ladder(res.xi[0][0].len()).unwrap();

    let dim = 300;
    let u = frame.unitary(dim).unwrap();
    let h = rwa_hamiltonian(&p, dim).unwrap();
    let exact = well_levels(h.matrix(), Some(&u), 7, 27).unwrap();
    let a_lab = ladder(dim).unwrap();

    let mut err2 = 0.0f64;
    let mut err3 = 0.0f64;
    for n in 0..=6 {
        let s = &exact.states[n];
        let ex = s.dotc(&(a_lab.matrix() * s));
        let third = a_matrix_element(&res, n, n, 3, a_frame.matrix(), alpha, &frame.pair).unwrap();
        let second = a_matrix_element(&res, n, n, 2, a_frame.matrix(), alpha, &frame.pair).unwrap();
        err3 = err3.max((third - ex).norm());
        err2 = err2.max((second - ex).norm());
        assert!((third - ex).norm() < 1e-3 * alpha.norm(), "N={n}: {third} vs {ex}");
    }
    assert!(err3 < err2);
}

#[test]
fn harmonic_matrix_elements() {
    let d = 12;
    let a = ladder(d).unwrap().into_matrix();
    let alpha = c(1.5, -0.3);
    let id = SqueezePair::identity();
    for n in 0..d - 1 {
        let e = unit_vec(d, n);
        assert_eq!(a_matrix_element_states(&e, &e, &a, alpha, &id), alpha);
        let up = unit_vec(d, n + 1);
        assert!((a_matrix_element_states(&e, &up, &a, alpha, &id) - re(((n + 1) as f64).sqrt())).norm() < 1e-14);
    }
}

/// For an unsqueezed frame, `sum_M |<N|a|M>|^2 = |alpha|^2 + (N+1)|v|^2 + N|u|^2`.
#[test]
fn ladder_completeness() {
    let d = 30;
    let a = ladder(d).unwrap().into_matrix();
    let alpha = c(0.7, 0.4);
    let id = SqueezePair::identity();
    for n in 0..10 {
        let e = unit_vec(d, n);
        let total: f64 = (0..d)
            .map(|m| a_matrix_element_states(&e, &unit_vec(d, m), &a, alpha, &id).norm_sqr())
            .sum();
        assert!((total - (alpha.norm_sqr() + (n + 1) as f64)).abs() < 1e-10);
    }
}

#[test]
fn thermal_extraction() {
    let r: f64 = 0.4;
    let dist = StationaryDistribution {
        p: (0..6).map(|k| (1.0 - r) * r.powi(k)).collect(),
        source: duffing_core::liouville::DistributionSource::Balance,
        basis: LevelBasis::Bare,
    };
    assert!((extract_ntilde(&dist).unwrap() - r / (1.0 - r)).abs() < 1e-14);
    let flat = StationaryDistribution { p: vec![0.5, 0.5], ..dist };
    assert_eq!(extract_ntilde(&flat), Err(Error::UndefinedExtraction));
}

#[test]
fn log_ratio_follows_bose_law() {
    for nbar in [0.25, 1.0, 2.0] {
        let p = fig().with_kappa(0.005).unwrap().with_nbar(nbar).unwrap();
        let frame = RenormalizedFrame::new(&p, Branch::Has).unwrap();
        let dist = full_distribution(&frame, 40, 3);
        let lhs = (dist.p[0] / dist.p[1]).ln();
        let rhs = -bose_ratio(&frame.pair, nbar).ln();
        assert!(((lhs - rhs) / rhs).abs() < 0.03, "nbar={nbar}: {lhs} vs {rhs}");
    }
}

/// With a thermal bath the level-dependent occupation rises away from the
/// well bottom; at `nbar = 0` the trend is reversed and much weaker.
#[test]
fn second_order_neff_grows_with_level() {
    let p = fig().with_kappa(0.005).unwrap().with_nbar(0.5).unwrap();
    let frame = RenormalizedFrame::new(&p, Branch::Has).unwrap();
    let (res, _) = expand_attractor(&p, Branch::Has, 12, 4).unwrap();
    let a = ladder(res.xi[0][0].len()).unwrap();
    let table = duffing_core::liouville::LadderTable::from_perturbation(&res, a.matrix(), 12, 2).unwrap();
    let w = duffing_core::liouville::balance_rates(&table, &frame.coeffs.bath);
    let dist = duffing_core::liouville::balance_steady(&w.w).unwrap();
    let neff: Vec<f64> = effective_occupation(&dist).iter().take(5).map(|x| x.unwrap()).collect();
    assert!(neff.windows(2).all(|x| x[1] > x[0]), "{neff:?}");
}

#[test]
fn ntilde_without_dephasing_is_nbar() {
    for (branch, lambda) in [(Branch::Las, 0.005), (Branch::Has, 0.016)] {
        let p = ModelParams::scaled(lambda, 4.0 / 75.0).unwrap().with_kappa(0.01).unwrap();
        let frame = RenormalizedFrame::new(&p, branch).unwrap();
        let nt = extract_ntilde(&full_distribution(&frame, 36, 3)).unwrap();
        let nb = frame.coeffs.bath.nbar_eff;
        assert!(((nt - nb) / nb).abs() < 0.05, "{branch:?}: {nt} vs {nb}");
    }
}
