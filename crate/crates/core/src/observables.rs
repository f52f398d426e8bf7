//! Physical outputs: orbital matrix elements, Bose ratios, effective
//! occupations, and identification of the levels of an attractor well.

use crate::error::{Error, Result};
use crate::fock::SqueezePair;
use crate::linalg::{eigh, CMat, CVec, C64};
use crate::liouville::StationaryDistribution;
use crate::perturb::{matrix_element_series, PerturbationResult};

/// Per-level summary used by reports.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelObservables {
    pub n: usize,
    pub a_diag: C64,
    pub spacing: Vec<f64>,
    pub p: f64,
    pub n_eff: Option<f64>,
}

/// `<N|a|M> = v <n'|a|m'> + u <m'|a|n'>^* + alpha <n'|m'>`, with the perturbed
/// states expanded consistently to `order` in `gamma`. `a` is the frame ladder
/// on the perturbation basis.
pub fn a_matrix_element(
    result: &PerturbationResult,
    n: usize,
    m: usize,
    order: usize,
    a: &CMat,
    alpha: C64,
    pair: &SqueezePair,
) -> Result<C64> {
    let d = a.nrows();
    let x = matrix_element_series(result, n, m, a, order)?;
    let y = matrix_element_series(result, m, n, a, order)?;
    let id = CMat::identity(d, d);
    let o = matrix_element_series(result, n, m, &id, order)?;
    let total = x.scale(pair.v).add(&y.conj().scale(pair.u)).add(&o.scale(alpha));
    Ok(total.eval(result.gamma))
}

/// The same quantity for explicit normalized frame states.
pub fn a_matrix_element_states(bra: &CVec, ket: &CVec, a: &CMat, alpha: C64, pair: &SqueezePair) -> C64 {
    pair.v * bra.dotc(&(a * ket)) + pair.u * ket.dotc(&(a * bra)).conj() + alpha * bra.dotc(ket)
}

/// Harmonic-approximation ratio `p_{n+1}/p_n = N/(1+N)`.
pub fn bose_ratio(pair: &SqueezePair, nbar: f64) -> f64 {
    let n = nbar * pair.v.norm_sqr() + (1.0 + nbar) * pair.u.norm_sqr();
    n / (1.0 + n)
}

/// `N_eff(n) = p_{n+1}/(p_n - p_{n+1})`; `None` where `p_n <= p_{n+1}`.
pub fn effective_occupation(dist: &StationaryDistribution) -> Vec<Option<f64>> {
    dist.p
        .windows(2)
        .map(|w| if w[0] > w[1] && w[1] >= 0.0 { Some(w[1] / (w[0] - w[1])) } else { None })
        .collect()
}

/// Two-level occupation `p_2/(p_1 - p_2)` from the two lowest levels.
pub fn extract_ntilde(dist: &StationaryDistribution) -> Result<f64> {
    match dist.p.as_slice() {
        [p1, p2, ..] if p1 > p2 && *p2 >= 0.0 => Ok(p2 / (p1 - p2)),
        _ => Err(Error::UndefinedExtraction),
    }
}

/// Eigenstates of a well, ordered outward from its bottom.
#[derive(Clone, Debug)]
pub struct WellLevels {
    pub energies: Vec<f64>,
    pub states: Vec<CVec>,
    /// Weight of each state inside the low reference subspace.
    pub weights: Vec<f64>,
}

/// Identifies the lowest `count` levels of the well described by a set of
/// reference states (columns of `reference`, e.g. `D S |k>`; identity when
/// `None`).
///
/// The ground level is the eigenstate with the largest overlap with the
/// first reference state. Subsequent levels follow in energy, in the
/// direction in which the well opens (upward for a minimum, downward for a
/// maximum of the quasienergy), keeping only eigenstates whose weight in the
/// span of the first `window` reference states exceeds 1/2.
pub fn well_levels(h: &CMat, reference: Option<&CMat>, count: usize, window: usize) -> Result<WellLevels> {
    let d = h.nrows();
    let window = window.min(d).max(2);
    let (vals, vecs) = eigh(h);
    let proj = match reference {
        Some(r) => {
            if r.nrows() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.nrows() });
            }
            r.columns(0, window).adjoint() * &vecs
        }
        None => vecs.rows(0, window).into_owned(),
    };
    let weights: Vec<f64> = (0..d).map(|j| proj.column(j).norm_squared()).collect();
    let ground = (0..d)
        .max_by(|&a, &b| proj[(0, a)].norm_sqr().total_cmp(&proj[(0, b)].norm_sqr()))
        .expect("non-empty");
    if proj[(0, ground)].norm_sqr() < 0.5 {
        return Err(Error::InvalidInput(
            "no eigenstate overlaps the reference ground state by more than 1/2".into(),
        ));
    }
    let r0 = reference.map_or_else(|| crate::fock::unit_vec(d, 0), |r| r.column(0).into_owned());
    let r1 = reference.map_or_else(|| crate::fock::unit_vec(d, 1), |r| r.column(1).into_owned());
    let upward = r1.dotc(&(h * &r1)).re > r0.dotc(&(h * &r0)).re;

    let order: Vec<usize> = if upward { (ground..d).collect() } else { (0..=ground).rev().collect() };
    let mut out = WellLevels { energies: vec![], states: vec![], weights: vec![] };
    for j in order {
        if out.energies.len() == count {
            break;
        }
        if weights[j] > 0.5 {
            out.energies.push(vals[j]);
            out.states.push(vecs.column(j).into_owned());
            out.weights.push(weights[j]);
        }
    }
    if out.energies.len() < count {
        return Err(Error::InvalidInput(format!(
            "only {} well levels identified, {count} requested",
            out.energies.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re};
    use crate::liouville::{DistributionSource, LevelBasis};

    fn dist(p: Vec<f64>) -> StationaryDistribution {
        StationaryDistribution { p, source: DistributionSource::Balance, basis: LevelBasis::Perturbed }
    }

    #[test]
    fn geometric_distribution_has_constant_neff() {
        let q: f64 = 0.3;
        let p: Vec<f64> = (0..8).map(|k| (1.0 - q) * q.powi(k)).collect();
        let neff = effective_occupation(&dist(p.clone()));
        for x in neff {
            assert!((x.unwrap() - q / (1.0 - q)).abs() < 1e-14);
        }
        assert!((extract_ntilde(&dist(p)).unwrap() - q / (1.0 - q)).abs() < 1e-14);
    }

    #[test]
    fn undefined_entries_flagged() {
        let neff = effective_occupation(&dist(vec![0.5, 0.2, 0.3]));
        assert!(neff[0].is_some() && neff[1].is_none());
        assert_eq!(extract_ntilde(&dist(vec![0.3, 0.4])), Err(Error::UndefinedExtraction));
    }

    #[test]
    fn bose_ratio_limits() {
        let id = SqueezePair::identity();
        assert_eq!(bose_ratio(&id, 0.0), 0.0);
        assert!((bose_ratio(&id, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unsqueezed_ladder_element() {
        let d = 10;
        let a = crate::fock::ladder(d).unwrap().into_matrix();
        let e = |k: usize| CVec::from_fn(d, |i, _| if i == k { re(1.0) } else { re(0.0) });
        let alpha = c(0.4, -1.0);
        let id = SqueezePair::identity();
        assert_eq!(a_matrix_element_states(&e(3), &e(3), &a, alpha, &id), alpha);
        assert!((a_matrix_element_states(&e(2), &e(3), &a, alpha, &id) - re(3f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn harmonic_well_levels() {
        let d = 12;
        let h = CMat::from_fn(d, d, |i, j| if i == j { re(-(i as f64)) } else { re(0.0) });
        let w = well_levels(&h, None, 4, 8).unwrap();
        assert_eq!(w.energies, vec![0.0, -1.0, -2.0, -3.0]);
    }
}
