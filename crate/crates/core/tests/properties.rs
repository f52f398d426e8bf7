use duffing_core::fock::{displacement, squeeze, SqueezePair};
use duffing_core::linalg::{max_abs, BandLu, Csr};
use duffing_core::liouville::{build_liouvillian, Channel};
use duffing_core::perturb::PowerSeries;
use duffing_core::{CMat, FockOperator, C64};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn unitarity_defect(u: &CMat) -> f64 {
    let k = u.nrows() / 2;
    let p = u.adjoint() * u;
    max_abs(&(p.view((0, 0), (k, k)) - CMat::identity(k, k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pair_from_xi_is_canonical(r in 0.0f64..1.5, phi in -3.1f64..3.1) {
        let xi = C64::from_polar(r, phi);
        let pair = SqueezePair::from_xi(xi);
        prop_assert!(pair.defect() < 1e-12);
        prop_assert!(SqueezePair::new(pair.u, pair.v).is_ok());
        if r > 1e-6 {
            prop_assert!((pair.xi() - xi).norm() < 1e-10);
        }
    }

    #[test]
    fn displacement_and_squeeze_are_unitary(re_a in -2.0f64..2.0, im_a in -2.0f64..2.0, r in 0.0f64..0.8, phi in -3.0f64..3.0) {
        let d = displacement(C64::new(re_a, im_a), 60).unwrap().into_matrix();
        prop_assert!(unitarity_defect(&d) < 1e-8);
        let s = squeeze(C64::from_polar(r, phi), 60).unwrap().into_matrix();
        prop_assert!(unitarity_defect(&s) < 1e-8);
    }

    #[test]
    fn inverse_square_root_series(c in prop::collection::vec(-0.5f64..0.5, 4)) {
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        coeffs.extend(c.iter().map(|&x| C64::new(x, 0.3 * x)));
        let x = PowerSeries(coeffs);
        let y = x.inv_sqrt();
        let one = y.mul(&y).mul(&x);
        prop_assert!((one.0[0] - C64::new(1.0, 0.0)).norm() < 1e-13);
        for k in 1..=4 {
            prop_assert!(one.0[k].norm() < 1e-12);
        }
    }

    #[test]
    fn sparse_triplets_sum(entries in prop::collection::vec((0usize..6, 0usize..6, -1.0f64..1.0), 0..40)) {
        let trip: Vec<(usize, usize, C64)> = entries.iter().map(|&(i, j, v)| (i, j, C64::new(v, -v))).collect();
        let mut dense = CMat::zeros(6, 6);
        for &(i, j, v) in &trip {
            dense[(i, j)] += v;
        }
        let csr = Csr::from_triplets(6, trip);
        prop_assert!(max_abs(&(csr.to_dense() - dense)) < 1e-14);
    }

    #[test]
    fn banded_solve(seed in 0u64..1000) {
        let n: usize = 40;
        let mut trip = vec![];
        let mut rng = StdRng::seed_from_u64(seed);
        let mut next = || rng.gen_range(-0.5..0.5);
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 5).min(n) {
                trip.push((i, j, C64::new(next(), next())));
            }
        }
        let a = Csr::from_triplets(n, trip);
        let x: Vec<C64> = (0..n).map(|k| C64::new(k as f64, 1.0)).collect();
        let mut b = vec![C64::new(0.0, 0.0); n];
        a.matvec(&x, &mut b);
        let lu = BandLu::factor(&a);
        if lu.pivot_ratio() > 1e-8 {
            lu.solve_in_place(&mut b);
            let err = b.iter().zip(&x).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-6 * (1.0 / lu.pivot_ratio()).max(1.0));
        }
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity(w in 0.1f64..2.0, k in 0.0f64..1.0, n in 0.0f64..2.0, z in -1.0f64..1.0) {
        let d = 8;
        let a = duffing_core::fock::ladder(d).unwrap();
        let h = FockOperator::from_matrix(
            FockOperator::number(d).into_matrix() * C64::new(w, 0.0) + (a.matrix() + a.matrix().adjoint()) * C64::new(z, 0.0),
        ).unwrap();
        let l = build_liouvillian(&h, &[
            Channel::dissipator("down", a.clone(), k * (1.0 + n)),
            Channel::dissipator("up", a.adjoint(), k * n),
            Channel::AnomalousPair { label: "pair".into(), op: a.clone(), weight: C64::new(0.3 * z, 0.1) * k },
        ]).unwrap();
        prop_assert!(l.trace_defect() < 1e-12);
        prop_assert!(l.hermiticity_defect(2, 5) < 1e-12);
    }
}
