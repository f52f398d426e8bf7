//! Displaced/squeezed frame: renormalized Hamiltonian, ordered perturbative
//! splittings and effective bath coefficients.

use crate::error::{Error, Result};
use crate::fock::{self, FockOperator, SqueezePair};
use crate::linalg::{re, CMat, C64, I};
use crate::model::{alpha_residual, pair_residual, Branch, ModelParams, SteadyForm, RESIDUAL_TOL};

/// Extra Fock states used when forming products, so that every retained
/// matrix element equals its untruncated value.
const PAD: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathCoefficients {
    /// Effective Bose occupation `nbar |v|^2 + (1 + nbar) |u|^2`.
    pub nbar_eff: f64,
    /// Squeezing number `u v^* (2 nbar + 1)`.
    pub squeeze_number: C64,
}

impl BathCoefficients {
    /// Whether `|M|^2 <= N (N + 1) + 1/4` holds (Gaussian-bath physicality).
    pub fn is_physical(&self) -> bool {
        let n = self.nbar_eff;
        self.squeeze_number.norm_sqr() <= n * (n + 1.0) + 0.25 + 1e-12
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormCoefficients {
    pub bath: BathCoefficients,
    /// Dephasing-renormalized occupation `N + (eta/kappa) |alpha^* u + alpha v^*|^2`.
    pub ntilde: f64,
    /// `alpha^* u + alpha v^*`, the displacement weight of the dephasing operator.
    pub dephasing_shift: C64,
    /// Pure-dephasing weight `eta (|v|^2 + |u|^2)^2`.
    pub number_dephasing: f64,
    /// Two-photon dephasing weight `eta |u v|^2`.
    pub two_photon_dephasing: f64,
    /// Renormalized detuning.
    pub delta_omega_bar: f64,
    /// Renormalized nonlinearity.
    pub chi_bar: f64,
}

pub fn bath_coefficients(params: &ModelParams, pair: &SqueezePair) -> BathCoefficients {
    let nb = params.nbar;
    BathCoefficients {
        nbar_eff: nb * pair.v.norm_sqr() + (1.0 + nb) * pair.u.norm_sqr(),
        squeeze_number: pair.u * pair.v.conj() * (2.0 * nb + 1.0),
    }
}

/// Renormalized detuning for an arbitrary frame.
pub fn renormalized_detuning(params: &ModelParams, alpha: C64, pair: &SqueezePair) -> f64 {
    let l = params.lambda();
    let (u, v) = (pair.u, pair.v);
    let (uu, vv) = (u.norm_sqr(), v.norm_sqr());
    let cross = alpha.conj().powi(2) * u * v + alpha.powi(2) * (u * v).conj();
    params.delta_omega
        * ((1.0 - 4.0 * l * alpha.norm_sqr()) * (vv + uu) - 2.0 * l * (2.0 * uu * vv + uu * uu + cross.re))
}

/// Renormalized nonlinearity `-dw lambda (|u|^4 + |v|^4 + 4|uv|^2)`.
pub fn renormalized_kerr(params: &ModelParams, pair: &SqueezePair) -> f64 {
    let (uu, vv) = (pair.u.norm_sqr(), pair.v.norm_sqr());
    -params.delta_omega * params.lambda() * (uu * uu + vv * vv + 4.0 * uu * vv)
}

/// Coefficient of `a^dag a` in the high-amplitude zeroth-order term.
pub fn has_linear_coefficient(params: &ModelParams, alpha: C64, pair: &SqueezePair) -> f64 {
    let l = params.lambda();
    let (u, v) = (pair.u, pair.v);
    let cross = alpha.conj().powi(2) * u * v + alpha.powi(2) * (u * v).conj();
    (1.0 - 4.0 * l * alpha.norm_sqr()) * (v.norm_sqr() + u.norm_sqr()) - 2.0 * l * cross.re
}

pub fn dephasing_shift(alpha: C64, pair: &SqueezePair) -> C64 {
    alpha.conj() * pair.u + alpha * pair.v.conj()
}

pub fn renorm_coefficients(params: &ModelParams, alpha: C64, pair: &SqueezePair) -> Result<RenormCoefficients> {
    let bath = bath_coefficients(params, pair);
    let eta = params.eta_ph;
    let shift = dephasing_shift(alpha, pair);
    let ntilde = if eta == 0.0 {
        bath.nbar_eff
    } else {
        if params.kappa <= 0.0 {
            return Err(Error::DegenerateLimit);
        }
        bath.nbar_eff + eta / params.kappa * shift.norm_sqr()
    };
    let (uu, vv) = (pair.u.norm_sqr(), pair.v.norm_sqr());
    Ok(RenormCoefficients {
        bath,
        ntilde,
        dephasing_shift: shift,
        number_dephasing: eta * (uu + vv).powi(2),
        two_photon_dephasing: eta * uu * vv,
        delta_omega_bar: renormalized_detuning(params, alpha, pair),
        chi_bar: renormalized_kerr(params, pair),
    })
}

/// Alias kept for callers that only need the dephasing entries.
pub fn dephasing_coefficients(params: &ModelParams, alpha: C64, pair: &SqueezePair) -> Result<RenormCoefficients> {
    renorm_coefficients(params, alpha, pair)
}

struct Padded {
    a: CMat,
    ad: CMat,
    n: CMat,
    b: CMat,
    bd: CMat,
}

impl Padded {
    fn new(dim: usize, pair: &SqueezePair) -> Self {
        let a = fock::ladder_matrix(dim + PAD);
        let ad = a.adjoint();
        let n = &ad * &a;
        let b = &a * pair.v + &ad * pair.u;
        let bd = b.adjoint();
        Padded { a, ad, n, b, bd }
    }

    /// `S^dag (alpha a^dag^2 a + alpha^* a^dag a^2) S`
    fn cubic(&self, alpha: C64) -> CMat {
        let bdb = &self.bd * &self.b;
        (&self.bd * &bdb) * alpha + (&bdb * &self.b) * alpha.conj()
    }

    /// Normal-ordered quartic remainder of `S^dag a^dag^2 a^2 S`.
    fn quartic_f(&self, pair: &SqueezePair) -> CMat {
        let (u, v) = (pair.u, pair.v);
        let s = u.norm_sqr() + v.norm_sqr();
        let ad2 = &self.ad * &self.ad;
        let a2 = &self.a * &self.a;
        let ad3a = &ad2 * &self.ad * &self.a;
        let ada3 = &self.ad * &a2 * &self.a;
        (ad3a * (v.conj() * u) + ada3 * (v * u.conj())) * re(2.0 * s)
            + (&ad2 * &ad2) * (v.conj() * u).powi(2)
            + (&a2 * &a2) * (u.conj() * v).powi(2)
    }

    fn cut(&self, m: CMat, dim: usize) -> CMat {
        m.view((0, 0), (dim, dim)).into_owned()
    }
}

/// The transformed Hamiltonian `S^dag D^dag H D S` up to a c-number, for an
/// arbitrary frame. Residual linear and anomalous terms are kept, so the
/// result is exact whichever steady conditions `(alpha, pair)` satisfy.
pub fn frame_hamiltonian(params: &ModelParams, alpha: C64, pair: &SqueezePair, dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, reason: "at least two Fock states are required" });
    }
    let dw = params.delta_omega;
    let chi = params.chi;
    let (u, v) = (pair.u, pair.v);
    let (uu, vv) = (u.norm_sqr(), v.norm_sqr());
    let r = alpha.norm_sqr();
    let p = Padded::new(dim, pair);

    let dwb = renormalized_detuning(params, alpha, pair);
    let chib = renormalized_kerr(params, pair);
    let xib = (dw + 4.0 * chi * r + 2.0 * chi * (2.0 * uu + vv)) * v.conj() * u
        + (alpha.conj().powi(2) * u * u + alpha.powi(2) * v.conj().powi(2)) * chi;
    let at = (re(params.kappa / 2.0) + I * (dw + chi + 2.0 * chi * r)) * alpha + I * params.epsilon;

    let mut h = &p.n * re(dwb) + (&p.n * &p.n) * re(chib);
    h += p.cubic(alpha) * re(2.0 * chi);
    h += p.quartic_f(pair) * re(chi);
    h += (&p.ad * &p.ad) * xib + (&p.a * &p.a) * xib.conj();
    h += (&p.b * at.conj() - &p.bd * at) * I;
    FockOperator::from_matrix(p.cut(h, dim))
}

fn check_frame(params: &ModelParams, alpha: C64, pair: &SqueezePair, form: SteadyForm) -> Result<()> {
    if pair.defect() > fock::PAIR_TOLERANCE * (1.0 + pair.u.norm_sqr()) * 1e3 {
        return Err(Error::InvalidPair { defect: pair.defect() });
    }
    let res = alpha_residual(params, alpha, form) + pair_residual(params, alpha, pair, form);
    if res > RESIDUAL_TOL * (1.0 + alpha.norm_sqr()) {
        return Err(Error::InconsistentFrame { residual: res });
    }
    Ok(())
}

/// `dw_bar N + chi_bar N^2 + 2 chi S^dag(alpha a^dag^2 a + h.c.)S + chi F`,
/// valid when `(alpha, pair)` solve the exact steady conditions.
pub fn renormalized_hamiltonian(
    params: &ModelParams,
    alpha: C64,
    pair: &SqueezePair,
    dim: usize,
) -> Result<FockOperator> {
    check_frame(params, alpha, pair, SteadyForm::Exact)?;
    frame_hamiltonian(params, alpha, pair, dim)
}

#[derive(Clone, Debug)]
pub struct OrderedTerm {
    pub label: &'static str,
    pub op: FockOperator,
    pub weight: f64,
}

/// `H / dw = sum weight * term`, grouped by perturbative order.
#[derive(Clone, Debug)]
pub struct OrderedHamiltonian {
    pub branch: Branch,
    pub terms: Vec<OrderedTerm>,
}

impl OrderedHamiltonian {
    pub fn term(&self, label: &str) -> Option<&OrderedTerm> {
        self.terms.iter().find(|t| t.label == label)
    }

    pub fn reconstruct(&self) -> CMat {
        let d = self.terms[0].op.dim();
        self.terms
            .iter()
            .fold(CMat::zeros(d, d), |acc, t| acc + t.op.matrix() * re(t.weight))
    }
}

/// Ordered splitting of the renormalized Hamiltonian.
///
/// LAS (exact steady conditions): `h0 + lambda h_l + beta h_b + sqrt(lambda beta) h_lb`.
/// HAS (reordered conditions): `h0 + gamma h1 + gamma^2 h2`, `gamma = sqrt(lambda)`.
pub fn ordered_hamiltonian(
    params: &ModelParams,
    alpha: C64,
    pair: &SqueezePair,
    branch: Branch,
    dim: usize,
) -> Result<OrderedHamiltonian> {
    let l = params.lambda();
    let beta = params.beta();
    let (u, v) = (pair.u, pair.v);
    let (uu, vv) = (u.norm_sqr(), v.norm_sqr());
    let p = Padded::new(dim, pair);
    let diag_n = |coef: f64| FockOperator::number(dim).into_matrix() * re(coef);
    let n2 = p.cut(&p.n * &p.n, dim);
    let f = p.cut(p.quartic_f(pair), dim);
    let cubic = p.cut(p.cubic(alpha), dim);
    let cross = (alpha.conj().powi(2) * u * v + alpha.powi(2) * (u * v).conj()).re;
    let kerr_like = diag_n(-2.0 * (2.0 * uu * vv + uu * uu)) - n2 * re(uu * uu + vv * vv + 4.0 * uu * vv) - f;

    let terms = match branch {
        Branch::Saddle => return Err(Error::UnsupportedBranch),
        Branch::Las => {
            check_frame(params, alpha, pair, SteadyForm::Exact)?;
            let hb_total = diag_n(-(4.0 * l * alpha.norm_sqr() * (uu + vv) + 2.0 * l * cross));
            let hb = if beta > 0.0 { hb_total / re(beta) } else { CMat::zeros(dim, dim) };
            let hlb = if beta > 0.0 {
                cubic * re(-2.0 * (l / beta).sqrt())
            } else {
                CMat::zeros(dim, dim)
            };
            vec![
                OrderedTerm { label: "h0", op: FockOperator::from_matrix(diag_n(uu + vv))?, weight: 1.0 },
                OrderedTerm { label: "h_lambda", op: FockOperator::from_matrix(kerr_like)?, weight: l },
                OrderedTerm { label: "h_beta", op: FockOperator::from_matrix(hb)?, weight: beta },
                OrderedTerm { label: "h_lambda_beta", op: FockOperator::from_matrix(hlb)?, weight: (l * beta).sqrt() },
            ]
        }
        Branch::Has => {
            check_frame(params, alpha, pair, SteadyForm::Reordered)?;
            let g = l.sqrt();
            let c0 = has_linear_coefficient(params, alpha, pair);
            let lin = p.cut(&p.bd * alpha + &p.b * alpha.conj(), dim);
            let h1 = (cubic * re(2.0) + lin) * re(-g);
            let ad2 = p.cut(&p.ad * &p.ad, dim);
            let a2 = p.cut(&p.a * &p.a, dim);
            let anomalous = (ad2 * (v.conj() * u) + a2 * (u.conj() * v)) * re(-2.0 * (2.0 * uu + vv));
            let h2 = kerr_like + anomalous;
            vec![
                OrderedTerm { label: "h0", op: FockOperator::from_matrix(diag_n(c0))?, weight: 1.0 },
                OrderedTerm { label: "h1", op: FockOperator::from_matrix(h1)?, weight: g },
                OrderedTerm { label: "h2", op: FockOperator::from_matrix(h2)?, weight: l },
            ]
        }
    };
    Ok(OrderedHamiltonian { branch, terms })
}
