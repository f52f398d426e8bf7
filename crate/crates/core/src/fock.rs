//! Truncated Fock-space operators: ladder, displacement and squeeze.

use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, C64};

/// Dense operator on the truncated basis `|0>..|dim-1>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator(CMat);

impl FockOperator {
    pub fn from_matrix(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidDimension { dim: 0, reason: "empty basis" });
        }
        Ok(FockOperator(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        FockOperator(self.0.adjoint())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.0)
    }

    /// Upper-left `dim x dim` block.
    pub fn truncate(&self, dim: usize) -> Self {
        FockOperator(self.0.view((0, 0), (dim, dim)).into_owned())
    }

    pub fn identity(dim: usize) -> Self {
        FockOperator(CMat::identity(dim, dim))
    }

    pub fn number(dim: usize) -> Self {
        FockOperator(CMat::from_fn(dim, dim, |i, j| if i == j { re(i as f64) } else { C64::new(0.0, 0.0) }))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, reason: "at least two Fock states are required" });
    }
    Ok(())
}

/// Annihilation operator with `<n-1|a|n> = sqrt(n)`.
pub fn ladder(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    Ok(FockOperator(ladder_matrix(dim)))
}

pub(crate) fn ladder_matrix(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { C64::new(0.0, 0.0) })
}

/// Smallest basis the displacement is trusted in: `|alpha|^2 + 6|alpha|`.
pub fn displacement_min_dim(alpha: C64) -> usize {
    let r = alpha.norm();
    (r * r + 6.0 * r).ceil() as usize
}

/// D(alpha) = exp(alpha a^dag - alpha^* a), rejecting bases that are too small.
pub fn displacement(alpha: C64, dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let need = displacement_min_dim(alpha);
    if dim < need {
        return Err(Error::Truncation { dim, recommended: need });
    }
    displacement_unchecked(alpha, dim)
}

/// As [`displacement`] without the truncation guard.
pub fn displacement_unchecked(alpha: C64, dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let a = ladder_matrix(dim);
    let g = a.adjoint() * alpha - &a * alpha.conj();
    Ok(FockOperator(linalg::expm_anti_hermitian(&g)))
}

/// Smallest basis the squeeze operator is trusted in: `4 cosh(2|xi|)`.
pub fn squeeze_min_dim(xi: C64) -> usize {
    (4.0 * (2.0 * xi.norm()).cosh()).ceil() as usize
}

/// S(xi) = exp((xi^* a^2 - xi a^dag^2)/2).
pub fn squeeze(xi: C64, dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let need = squeeze_min_dim(xi);
    if dim < need {
        return Err(Error::Truncation { dim, recommended: need });
    }
    squeeze_unchecked(xi, dim)
}

pub fn squeeze_unchecked(xi: C64, dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let a = ladder_matrix(dim);
    let a2 = &a * &a;
    let g = (&a2 * xi.conj() - a2.adjoint() * xi) * re(0.5);
    Ok(FockOperator(linalg::expm_anti_hermitian(&g)))
}

/// Bogoliubov coefficients with `S^dag a S = v a + u a^dag`.
///
/// Pairs are taken modulo a common phase; the canonical representative has
/// `v` real and positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezePair {
    pub u: C64,
    pub v: C64,
}

pub const PAIR_TOLERANCE: f64 = 1e-12;

impl SqueezePair {
    pub fn new(u: C64, v: C64) -> Result<Self> {
        let p = SqueezePair { u, v };
        let defect = p.defect();
        if !(defect <= PAIR_TOLERANCE * (1.0 + u.norm_sqr())) {
            return Err(Error::InvalidPair { defect });
        }
        Ok(p)
    }

    pub fn identity() -> Self {
        SqueezePair { u: C64::new(0.0, 0.0), v: re(1.0) }
    }

    pub fn from_xi(xi: C64) -> Self {
        let r = xi.norm();
        if r == 0.0 {
            return Self::identity();
        }
        SqueezePair { u: -(xi / r) * r.sinh(), v: re(r.cosh()) }
    }

    /// `| |v|^2 - |u|^2 - 1 |`
    pub fn defect(&self) -> f64 {
        (self.v.norm_sqr() - self.u.norm_sqr() - 1.0).abs()
    }

    /// Squeeze parameter reproducing the pair (up to the common phase).
    pub fn xi(&self) -> C64 {
        let r = self.u.norm().asinh();
        let w = -self.u * self.v.conj();
        if w.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        w / w.norm() * r
    }

    pub fn transformed_ladder(&self, dim: usize) -> Result<FockOperator> {
        let a = ladder(dim)?.into_matrix();
        Ok(FockOperator(&a * self.v + a.adjoint() * self.u))
    }
}

/// Analytic coherent-state overlap `<beta|alpha>`.
pub fn coherent_overlap(beta: C64, alpha: C64) -> C64 {
    (-(beta.norm_sqr() + alpha.norm_sqr()) / 2.0 + beta.conj() * alpha).exp()
}

/// Fock amplitudes of the coherent state `|alpha>`, computed by recursion.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut amp = re((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..dim {
        out.push(amp);
        amp = amp * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

/// Vacuum amplitudes of the squeezed vacuum `S(xi)|0>` on even Fock states.
pub fn squeezed_vacuum_amplitudes(xi: C64, dim: usize) -> Vec<C64> {
    let r = xi.norm();
    let phase = if r == 0.0 { re(1.0) } else { xi / r };
    let t = -phase * r.tanh();
    let mut out = vec![C64::new(0.0, 0.0); dim];
    let mut amp = re(1.0 / r.cosh().sqrt());
    let mut m = 0usize;
    while 2 * m < dim {
        out[2 * m] = amp;
        // c_{m+1} = c_m * t/2 * sqrt((2m+1)(2m+2))/(m+1)
        amp = amp * t * 0.5 * (((2 * m + 1) * (2 * m + 2)) as f64).sqrt() / (m + 1) as f64;
        m += 1;
    }
    out
}

/// Fock basis vector `|k>`.
pub fn unit_vec(dim: usize, k: usize) -> crate::linalg::CVec {
    crate::linalg::CVec::from_fn(dim, |i, _| if i == k { re(1.0) } else { C64::new(0.0, 0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs};

    #[test]
    fn ladder_has_sqrt_entries() {
        let a = ladder(5).unwrap();
        assert_eq!(a.matrix()[(2, 3)], re(3f64.sqrt()));
        assert_eq!(a.matrix()[(3, 2)], re(0.0));
    }

    #[test]
    fn rejects_tiny_basis() {
        assert!(matches!(ladder(1), Err(Error::InvalidDimension { .. })));
        assert!(matches!(displacement(c(5.0, 0.0), 20), Err(Error::Truncation { .. })));
        assert!(displacement_unchecked(c(5.0, 0.0), 20).is_ok());
    }

    #[test]
    fn displacement_vacuum_column_is_coherent_state() {
        let alpha = c(0.7, -0.4);
        let d = displacement(alpha, 40).unwrap();
        let coh = coherent_amplitudes(alpha, 40);
        for k in 0..20 {
            assert!((d.matrix()[(k, 0)] - coh[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn squeeze_convention_matches_pair() {
        let xi = c(0.3, 0.2);
        let dim = 140;
        let s = squeeze(xi, dim).unwrap().into_matrix();
        let a = ladder_matrix(dim);
        let pair = SqueezePair::from_xi(xi);
        let lhs = s.adjoint() * &a * &s;
        let rhs = &a * pair.v + a.adjoint() * pair.u;
        let k = 25;
        let block = (lhs - rhs).view((0, 0), (k, k)).into_owned();
        assert!(max_abs(&block) < 1e-10);
        let sv = squeezed_vacuum_amplitudes(xi, dim);
        for n in 0..k {
            assert!((s[(n, 0)] - sv[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn pair_validation() {
        assert!(SqueezePair::new(re(1.0), re(1.0)).is_err());
        let p = SqueezePair::from_xi(c(0.5, -0.1));
        assert!(SqueezePair::new(p.u, p.v).is_ok());
        assert!((p.xi() - c(0.5, -0.1)).norm() < 1e-14);
    }
}
