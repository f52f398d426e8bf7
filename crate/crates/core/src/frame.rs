//! One-stop construction of the displaced/squeezed frame around an attractor:
//! Hamiltonian, bath channels and Liouvillian.

use crate::error::Result;
use crate::fock::{self, FockOperator, SqueezePair};
use crate::linalg::{CMat, C64};
use crate::liouville::{build_liouvillian, Channel, Superoperator};
use crate::model::{attractor, AttractorSolution, Branch, ModelParams, SteadyForm};
use crate::renorm::{frame_hamiltonian, renorm_coefficients, RenormCoefficients};

/// How the dephasing channel is represented in the squeezed frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DephasingModel {
    /// Secular channels: number dephasing, the displacement-induced `|c|^2`
    /// heating/cooling pair and two-photon dephasing; cross terms dropped.
    Secular,
    /// The transformed operator `b^dag b + c^* a + c a^dag` kept intact.
    Exact,
}

#[derive(Clone, Debug)]
pub struct RenormalizedFrame {
    pub params: ModelParams,
    pub branch: Branch,
    pub solution: AttractorSolution,
    pub pair: SqueezePair,
    pub coeffs: RenormCoefficients,
}

impl RenormalizedFrame {
    pub fn new(params: &ModelParams, branch: Branch) -> Result<Self> {
        Self::with_form(params, branch, SteadyForm::natural_for(branch))
    }

    pub fn with_form(params: &ModelParams, branch: Branch, form: SteadyForm) -> Result<Self> {
        let solution = attractor(params, branch, Some(form))?;
        let pair = solution.pair.expect("attractor sets the pair");
        let coeffs = renorm_coefficients(params, solution.alpha, &pair)?;
        Ok(RenormalizedFrame { params: *params, branch, solution, pair, coeffs })
    }

    pub fn alpha(&self) -> C64 {
        self.solution.alpha
    }

    pub fn hamiltonian(&self, dim: usize) -> Result<FockOperator> {
        frame_hamiltonian(&self.params, self.solution.alpha, &self.pair, dim)
    }

    /// Bath and dephasing channels. Every dissipator carries the same 1/2
    /// prefactor: `kappa/2 {...} + eta/2 {...}`, where in the lab frame the
    /// dephasing term is `eta/2 D[a^dag a]`.
    pub fn channels(&self, dim: usize, model: DephasingModel) -> Result<Vec<Channel>> {
        let a = fock::ladder(dim)?;
        let ad = a.adjoint();
        let k2 = self.params.kappa / 2.0;
        let bath = self.coeffs.bath;
        let mut out = vec![
            Channel::dissipator("damping", a.clone(), k2 * (1.0 + bath.nbar_eff)),
            Channel::dissipator("excitation", ad.clone(), k2 * bath.nbar_eff),
            Channel::AnomalousPair { label: "squeezed-bath".into(), op: a.clone(), weight: bath.squeeze_number * k2 },
        ];
        let eta2 = self.params.eta_ph / 2.0;
        if eta2 > 0.0 {
            let (u, v) = (self.pair.u, self.pair.v);
            let c = self.coeffs.dephasing_shift;
            match model {
                DephasingModel::Exact => {
                    let am = a.matrix();
                    let b = am * v + am.adjoint() * u;
                    let x: CMat = b.adjoint() * &b + am * c.conj() + am.adjoint() * c;
                    out.push(Channel::dissipator("dephasing", FockOperator::from_matrix(x)?, eta2));
                }
                DephasingModel::Secular => {
                    let s = u.norm_sqr() + v.norm_sqr();
                    let am = a.matrix();
                    let a2 = FockOperator::from_matrix(am * am)?;
                    out.push(Channel::dissipator("number-dephasing", FockOperator::number(dim), eta2 * s * s));
                    out.push(Channel::dissipator("dephasing-down", a.clone(), eta2 * c.norm_sqr()));
                    out.push(Channel::dissipator("dephasing-up", ad.clone(), eta2 * c.norm_sqr()));
                    let w2 = eta2 * (u * v).norm_sqr();
                    out.push(Channel::dissipator("two-photon-down", a2.clone(), w2));
                    out.push(Channel::dissipator("two-photon-up", a2.adjoint(), w2));
                }
            }
        }
        Ok(out)
    }

    pub fn liouvillian(&self, dim: usize, model: DephasingModel) -> Result<Superoperator> {
        let h = self.hamiltonian(dim)?;
        let mut l = build_liouvillian(&h, &self.channels(dim, model)?)?;
        if !self.coeffs.bath.is_physical() {
            let msg = format!(
                "squeezing number |M|^2 = {:e} exceeds N(N+1)+1/4 = {:e}",
                self.coeffs.bath.squeeze_number.norm_sqr(),
                self.coeffs.bath.nbar_eff * (self.coeffs.bath.nbar_eff + 1.0) + 0.25
            );
            log::warn!("{msg}");
            l.warnings.push(msg);
        }
        Ok(l)
    }

    /// Frame ladder operator, i.e. the lab-frame `S^dag D^dag a D S - alpha`.
    pub fn ladder(&self, dim: usize) -> Result<FockOperator> {
        fock::ladder(dim)
    }

    /// `D(alpha) S(xi)` in a lab-frame basis of dimension `dim`.
    pub fn unitary(&self, dim: usize) -> Result<CMat> {
        let d = fock::displacement(self.solution.alpha, dim)?.into_matrix();
        let s = fock::squeeze(self.pair.xi(), dim)?.into_matrix();
        Ok(d * s)
    }
}
