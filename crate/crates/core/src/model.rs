//! Model parameters, the rotating-frame Hamiltonian and the attractor solvers.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::fock::{self, FockOperator, SqueezePair};
use crate::linalg::{re, CMat, C64, I};

/// Physical parameters in energy units (`delta_omega` sets the scale).
///
/// The Hamiltonian is `(dw + chi) a^dag a + chi a^dag^2 a^2 + eps (a + a^dag)`,
/// i.e. `dw N + chi N^2 + eps (a + a^dag)`, with `lambda = -chi/dw` and
/// `beta = 2 lambda (eps/dw)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub delta_omega: f64,
    pub chi: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub nbar: f64,
    pub eta_ph: f64,
    pub dim: usize,
}

impl ModelParams {
    pub fn new(
        delta_omega: f64,
        chi: f64,
        epsilon: f64,
        kappa: f64,
        nbar: f64,
        eta_ph: f64,
        dim: usize,
    ) -> Result<Self> {
        let p = ModelParams { delta_omega, chi, epsilon, kappa, nbar, eta_ph, dim };
        p.validate()?;
        Ok(p)
    }

    /// Scaled parameters with `delta_omega = 1`; the drive takes the sign
    /// `eps = -sqrt(beta/(2 lambda))` so the displacement equation reads
    /// `[k + i(1 - lambda - 2 lambda |alpha|^2)] alpha - i sqrt(beta/(2 lambda)) = 0`.
    pub fn scaled(lambda: f64, beta: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be non-negative, got {beta}")));
        }
        Self::new(1.0, -lambda, -(beta / (2.0 * lambda)).sqrt(), 0.0, 0.0, 0.0, 120)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_nbar(mut self, nbar: f64) -> Result<Self> {
        self.nbar = nbar;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta_ph(mut self, eta_ph: f64) -> Result<Self> {
        self.eta_ph = eta_ph;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        self.dim = dim;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.delta_omega, self.chi, self.epsilon, self.kappa, self.nbar, self.eta_ph]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        if self.delta_omega == 0.0 {
            return Err(Error::Domain("delta_omega must be non-zero".into()));
        }
        if !(self.lambda() > 0.0) {
            return Err(Error::Domain(format!(
                "lambda = -chi/delta_omega must be positive, got {}",
                self.lambda()
            )));
        }
        if self.kappa < 0.0 || self.nbar < 0.0 || self.eta_ph < 0.0 {
            return Err(Error::Domain("kappa, nbar and eta_ph must be non-negative".into()));
        }
        if self.dim < 2 {
            return Err(Error::InvalidDimension { dim: self.dim, reason: "at least two Fock states are required" });
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        -self.chi / self.delta_omega
    }

    pub fn beta(&self) -> f64 {
        2.0 * self.lambda() * (self.epsilon / self.delta_omega).powi(2)
    }

    /// `kappa / (2 delta_omega)`
    pub fn damping_ratio(&self) -> f64 {
        self.kappa / (2.0 * self.delta_omega)
    }

    /// `eps / delta_omega`
    pub fn drive_ratio(&self) -> f64 {
        self.epsilon / self.delta_omega
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Low-amplitude attractor.
    Las,
    /// High-amplitude attractor.
    Has,
    /// Unstable middle solution.
    Saddle,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Las => "las",
            Branch::Has => "has",
            Branch::Saddle => "saddle",
        }
    }
}

/// Which steady conditions define the frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteadyForm {
    /// Conditions that remove every linear and anomalous-quadratic term of
    /// the transformed Hamiltonian (natural for the low-amplitude state).
    Exact,
    /// Conditions with the O(lambda) shifts moved into the Hamiltonian; used
    /// by the high-amplitude ordering.
    Reordered,
}

impl SteadyForm {
    fn shift(&self, lambda: f64) -> f64 {
        match self {
            SteadyForm::Exact => lambda,
            SteadyForm::Reordered => 0.0,
        }
    }

    pub fn natural_for(branch: Branch) -> SteadyForm {
        match branch {
            Branch::Has => SteadyForm::Reordered,
            _ => SteadyForm::Exact,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttractorSolution {
    pub branch: Branch,
    pub form: SteadyForm,
    pub alpha: C64,
    pub pair: Option<SqueezePair>,
    /// Residual of the displacement condition.
    pub alpha_residual: f64,
    /// Residual of the squeeze condition (zero when `pair` is unset).
    pub pair_residual: f64,
}

pub(crate) const RESIDUAL_TOL: f64 = 1e-8;

/// Residual of the displacement condition for an arbitrary `alpha`.
pub fn alpha_residual(params: &ModelParams, alpha: C64, form: SteadyForm) -> f64 {
    let l = params.lambda();
    let cshift = form.shift(l);
    let lhs = (re(params.damping_ratio()) + I * (1.0 - cshift - 2.0 * l * alpha.norm_sqr())) * alpha
        + I * params.drive_ratio();
    lhs.norm()
}

/// Residual of the squeeze condition for an arbitrary `(alpha, pair)`.
pub fn pair_residual(params: &ModelParams, alpha: C64, pair: &SqueezePair, form: SteadyForm) -> f64 {
    let l = params.lambda();
    let (u, v) = (pair.u, pair.v);
    let mut a = 1.0 - 4.0 * l * alpha.norm_sqr();
    if form == SteadyForm::Exact {
        a -= l * (4.0 * u.norm_sqr() + 2.0 * v.norm_sqr());
    }
    let r = v.conj() * u * a - (alpha.conj().powi(2) * u * u + alpha * alpha * v.conj().powi(2)) * l;
    r.norm()
}

/// Solves the displacement condition. Solutions are returned in order of
/// increasing `|alpha|`; bistable parameters yield LAS, saddle, HAS.
pub fn classical_attractors(params: &ModelParams, form: SteadyForm) -> Result<Vec<AttractorSolution>> {
    let l = params.lambda();
    let cs = form.shift(l);
    let k = params.damping_ratio();
    let d = params.drive_ratio();
    let g = 1.0 - cs;
    // 4 l^2 r^3 - 4 l g r^2 + (g^2 + k^2) r - d^2 = 0
    let coeffs = [4.0 * l * l, -4.0 * l * g, g * g + k * k, -d * d];
    let mut roots: Vec<f64> = if d == 0.0 {
        vec![0.0]
    } else {
        cubic_real_roots(coeffs)?.into_iter().filter(|&r| r >= 0.0).collect()
    };
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));

    let branches: Vec<Branch> = match roots.len() {
        3 => vec![Branch::Las, Branch::Saddle, Branch::Has],
        // tangent (bifurcation) point: the merged pair is marginal
        2 => vec![Branch::Las, Branch::Has],
        1 => {
            let r = roots[0];
            vec![if g - 2.0 * l * r >= 0.0 { Branch::Las } else { Branch::Has }]
        }
        _ => return Err(Error::NonConvergence { what: "attractor cubic", residual: f64::NAN }),
    };

    let mut out = Vec::with_capacity(roots.len());
    for (r, branch) in roots.into_iter().zip(branches) {
        let alpha = -I * d / (re(k) + I * (g - 2.0 * l * r));
        let res = alpha_residual(params, alpha, form);
        if res > RESIDUAL_TOL {
            return Err(Error::NonConvergence { what: "attractor displacement", residual: res });
        }
        out.push(AttractorSolution {
            branch,
            form,
            alpha,
            pair: None,
            alpha_residual: res,
            pair_residual: 0.0,
        });
    }
    Ok(out)
}

/// Real roots of `c0 x^3 + c1 x^2 + c2 x + c3` from the companion matrix,
/// polished by Newton steps.
fn cubic_real_roots(coeffs: [f64; 4]) -> Result<Vec<f64>> {
    let [a, b, cc, d] = coeffs;
    if a == 0.0 {
        return Err(Error::Domain("degenerate cubic".into()));
    }
    let comp = Matrix3::new(-b / a, -cc / a, -d / a, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eig = comp.complex_eigenvalues();
    let scale = eig.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    let mut out = Vec::new();
    for z in eig.iter() {
        if z.im.abs() > 1e-7 * scale {
            continue;
        }
        let mut x = z.re;
        for _ in 0..50 {
            let f = ((a * x + b) * x + cc) * x + d;
            let fp = (3.0 * a * x + 2.0 * b) * x + cc;
            if fp == 0.0 {
                break;
            }
            let step = f / fp;
            x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        out.push(x);
    }
    Ok(out)
}

fn pair_equation(s: f64, r: f64, l: f64, form: SteadyForm) -> f64 {
    let (sh, ch) = (s.sinh(), s.cosh());
    let mut a = 1.0 - 4.0 * l * r;
    if form == SteadyForm::Exact {
        a -= l * (4.0 * sh * sh + 2.0 * ch * ch);
    }
    -(a / 2.0) * (2.0 * s).sinh() - l * r * (2.0 * s).cosh()
}

/// Solves the squeeze condition for a given displacement.
///
/// With `theta = arg(alpha)` the pair is `u = -e^{2 i theta} sinh s`,
/// `v = cosh s`, which reduces the condition to one real equation in `s`;
/// the root of smallest `|s|` (continuous with `s = 0` at `lambda = 0`) is
/// selected. No root exists at the saddle.
pub fn squeeze_params(params: &ModelParams, alpha: C64, form: SteadyForm) -> Result<SqueezePair> {
    let l = params.lambda();
    let r = alpha.norm_sqr();
    let s = match form {
        SteadyForm::Reordered => {
            let x = -2.0 * l * r / (1.0 - 4.0 * l * r);
            if !(x.abs() < 1.0) {
                return Err(Error::UnsupportedBranch);
            }
            0.5 * x.atanh()
        }
        SteadyForm::Exact => {
            let f = |s: f64| pair_equation(s, r, l, form);
            let limit = 3.0;
            let steps = 6000;
            let h = limit / steps as f64;
            let mut best: Option<f64> = None;
            if f(0.0) == 0.0 {
                best = Some(0.0);
            }
            'scan: for i in 0..steps {
                for sign in [1.0, -1.0] {
                    let (x0, x1) = (sign * i as f64 * h, sign * (i + 1) as f64 * h);
                    let (f0, f1) = (f(x0), f(x1));
                    if f0 == 0.0 || f0.signum() != f1.signum() {
                        best = Some(bisect(&f, x0, x1));
                        break 'scan;
                    }
                }
            }
            best.ok_or(Error::UnsupportedBranch)?
        }
    };
    let phase = if r == 0.0 { re(1.0) } else { (alpha / alpha.norm()).powi(2) };
    let pair = SqueezePair { u: -phase * s.sinh(), v: re(s.cosh()) };
    let res = pair_residual(params, alpha, &pair, form);
    if res > RESIDUAL_TOL * (1.0 + r) {
        return Err(Error::NonConvergence { what: "squeeze condition", residual: res });
    }
    Ok(pair)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() < 1e-16 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Displacement and squeeze pair of one attractor, using the steady form
/// natural to that branch unless overridden.
pub fn attractor(params: &ModelParams, branch: Branch, form: Option<SteadyForm>) -> Result<AttractorSolution> {
    if branch == Branch::Saddle {
        return Err(Error::UnsupportedBranch);
    }
    let form = form.unwrap_or_else(|| SteadyForm::natural_for(branch));
    let sols = classical_attractors(params, form)?;
    let mut sol = *sols
        .iter()
        .find(|s| s.branch == branch)
        .ok_or_else(|| Error::Domain(format!("no {} solution at these parameters", branch.name())))?;
    let pair = squeeze_params(params, sol.alpha, form)?;
    sol.pair_residual = pair_residual(params, sol.alpha, &pair, form);
    sol.pair = Some(pair);
    Ok(sol)
}

/// `(dw + chi) a^dag a + chi a^dag^2 a^2 + eps (a + a^dag)` on the truncated basis.
pub fn rwa_hamiltonian(params: &ModelParams, dim: usize) -> Result<FockOperator> {
    let a = fock::ladder(dim)?.into_matrix();
    let ad = a.adjoint();
    let mut h = CMat::zeros(dim, dim);
    for k in 0..dim {
        let kf = k as f64;
        h[(k, k)] = re((params.delta_omega + params.chi) * kf + params.chi * kf * (kf - 1.0).max(0.0));
    }
    h += (a + ad) * re(params.epsilon);
    FockOperator::from_matrix(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonlinearity {
    Soft,
    Hard,
}

/// Classical quasienergy surface in rotating-frame quadratures.
pub fn quasienergy(q: f64, p: f64, beta: f64, nonlinearity: Nonlinearity) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be non-negative, got {beta}")));
    }
    let w = q * q + p * p - 1.0;
    Ok(match nonlinearity {
        Nonlinearity::Soft => -w * w / 4.0 + beta.sqrt() * q,
        Nonlinearity::Hard => w * w / 4.0 - beta.sqrt() * q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn fig_params() -> ModelParams {
        ModelParams::scaled(0.016, 4.0 / 75.0).unwrap()
    }

    #[test]
    fn derived_ratios() {
        let p = fig_params();
        assert!((p.lambda() - 0.016).abs() < 1e-15);
        assert!((p.beta() - 4.0 / 75.0).abs() < 1e-15);
        assert!(ModelParams::new(1.0, 0.1, 0.0, 0.0, 0.0, 0.0, 10).is_err());
        assert!(ModelParams::scaled(0.01, 0.0).unwrap().with_kappa(-1.0).is_err());
    }

    #[test]
    fn bistable_roots() {
        let sols = classical_attractors(&fig_params(), SteadyForm::Exact).unwrap();
        assert_eq!(sols.len(), 3);
        let expect = [1.40151, 4.71005, 6.11156];
        for (s, e) in sols.iter().zip(expect) {
            assert!((s.alpha.norm() - e).abs() < 1e-4, "{} vs {e}", s.alpha.norm());
            assert!(s.alpha_residual < 1e-10);
        }
        assert_eq!(sols[2].branch, Branch::Has);
    }

    #[test]
    fn zero_drive_is_origin() {
        let p = ModelParams::scaled(0.01, 0.0).unwrap();
        let sols = classical_attractors(&p, SteadyForm::Exact).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].alpha, c(0.0, 0.0));
        assert_eq!(sols[0].branch, Branch::Las);
        let pair = squeeze_params(&p, sols[0].alpha, SteadyForm::Exact).unwrap();
        assert!(pair.u.norm() < 1e-12);
    }

    #[test]
    fn reordered_squeeze_closed_form() {
        let p = fig_params();
        let sol = attractor(&p, Branch::Has, None).unwrap();
        let pair = sol.pair.unwrap();
        assert!((pair.u.norm().asinh() - 0.63195).abs() < 1e-4);
        assert!(pair.defect() < 1e-12);
    }

    #[test]
    fn saddle_has_no_squeeze() {
        assert_eq!(attractor(&fig_params(), Branch::Saddle, None), Err(Error::UnsupportedBranch));
        let sols = classical_attractors(&fig_params(), SteadyForm::Reordered).unwrap();
        assert_eq!(
            squeeze_params(&fig_params(), sols[1].alpha, SteadyForm::Reordered),
            Err(Error::UnsupportedBranch)
        );
    }

    #[test]
    fn quasienergy_values() {
        assert_eq!(quasienergy(0.0, 0.0, 0.0, Nonlinearity::Soft).unwrap(), -0.25);
        assert_eq!(quasienergy(1.0, 0.0, 0.0, Nonlinearity::Soft).unwrap(), 0.0);
        assert!(quasienergy(0.0, 0.0, -1.0, Nonlinearity::Soft).is_err());
    }

    #[test]
    fn rwa_diagonal_without_drive() {
        let p = ModelParams::new(1.0, -0.1, 0.0, 0.0, 0.0, 0.0, 10).unwrap();
        let h = rwa_hamiltonian(&p, 10).unwrap();
        for n in 0..10 {
            let nf = n as f64;
            assert!((h.matrix()[(n, n)].re - (nf - 0.1 * nf * nf)).abs() < 1e-14);
        }
    }
}
