//! Double perturbation theory for `H = H0 + gamma H1 + gamma^2 H2` up to
//! fourth order, with consistent power-series bookkeeping for observables.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::SqueezePair;
use crate::linalg::{hermiticity_defect, max_abs, re, CMat, CVec, C64};
use crate::model::{attractor, Branch, ModelParams};
use crate::renorm::{ordered_hamiltonian, OrderedHamiltonian};

pub const MAX_ORDER: usize = 4;

#[derive(Clone, Debug)]
pub struct PerturbationInput {
    pub h0: Vec<f64>,
    pub h1: CMat,
    pub h2: CMat,
    pub gamma: f64,
    pub max_order: usize,
    /// Levels `0..levels` are expanded; defaults to all.
    pub levels: Option<usize>,
    /// Minimum allowed unperturbed gap; defaults to `1e-6` times the largest
    /// adjacent gap.
    pub min_gap: Option<f64>,
}

impl PerturbationInput {
    pub fn new(h0: Vec<f64>, h1: CMat, h2: CMat, gamma: f64, max_order: usize) -> Self {
        PerturbationInput { h0, h1, h2, gamma, max_order, levels: None, min_gap: None }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = Some(levels);
        self
    }

    /// Splits an ordered Hamiltonian into `(H0, H1, H2)` with `gamma = sqrt(lambda)`.
    ///
    /// HAS: `H0 = h0`, `H1 = h1`, `H2 = h2`.
    /// LAS: `H0 = h0 + beta h_b` (both proportional to `a^dag a`),
    /// `H1 = sqrt(beta) h_lb`, `H2 = h_l`.
    pub fn from_ordered(ord: &OrderedHamiltonian, lambda: f64, max_order: usize) -> Result<Self> {
        let get = |label: &str| {
            ord.term(label)
                .ok_or_else(|| Error::InvalidInput(format!("ordered Hamiltonian lacks term {label}")))
        };
        let h0t = get("h0")?;
        let d = h0t.op.dim();
        let mut h0: Vec<f64> = (0..d).map(|k| h0t.op.matrix()[(k, k)].re * h0t.weight).collect();
        let (h1, h2) = match ord.branch {
            Branch::Has => {
                let g = lambda.sqrt();
                let t1 = get("h1")?;
                let t2 = get("h2")?;
                (t1.op.matrix() * re(t1.weight / g), t2.op.matrix() * re(t2.weight / lambda))
            }
            Branch::Las => {
                let tb = get("h_beta")?;
                for (k, e) in h0.iter_mut().enumerate() {
                    *e += tb.weight * tb.op.matrix()[(k, k)].re;
                }
                let tlb = get("h_lambda_beta")?;
                let tl = get("h_lambda")?;
                (
                    tlb.op.matrix() * re(tlb.weight / lambda.sqrt()),
                    tl.op.matrix() * re(tl.weight / lambda),
                )
            }
            Branch::Saddle => return Err(Error::UnsupportedBranch),
        };
        Ok(PerturbationInput::new(h0, h1, h2, lambda.sqrt(), max_order))
    }
}

#[derive(Clone, Debug)]
pub struct PerturbationResult {
    pub gamma: f64,
    pub max_order: usize,
    /// `eps[n][j]`, j = 0..=max_order.
    pub eps: Vec<Vec<f64>>,
    /// `xi[n][j]` over the unperturbed basis; `xi[n][0] = e_n`.
    pub xi: Vec<Vec<CVec>>,
}

impl PerturbationResult {
    pub fn levels(&self) -> usize {
        self.eps.len()
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order > self.max_order {
            return Err(Error::MissingOrder { requested: order, available: self.max_order });
        }
        Ok(())
    }

    /// `sum_{j <= order} gamma^j eps_n^(j)`
    pub fn energy(&self, n: usize, order: usize) -> Result<f64> {
        self.check_order(order)?;
        Ok((0..=order).map(|j| self.gamma.powi(j as i32) * self.eps[n][j]).sum())
    }

    /// Non-zero components `(k, xi^(j)_k)` of one correction vector.
    pub fn correction_entries(&self, n: usize, order: usize) -> Vec<(usize, C64)> {
        self.xi[n][order]
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() != 0.0)
            .map(|(k, z)| (k, *z))
            .collect()
    }
}

fn check_hermitian(m: &CMat, name: &str) -> Result<()> {
    let scale = 1.0 + max_abs(m);
    if hermiticity_defect(m) > 1e-12 * scale {
        return Err(Error::InvalidInput(format!("{name} is not Hermitian")));
    }
    Ok(())
}

pub fn double_perturbation(input: &PerturbationInput) -> Result<PerturbationResult> {
    let d = input.h0.len();
    for m in [&input.h1, &input.h2] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
        }
    }
    if input.max_order > MAX_ORDER {
        return Err(Error::MissingOrder { requested: input.max_order, available: MAX_ORDER });
    }
    check_hermitian(&input.h1, "H1")?;
    check_hermitian(&input.h2, "H2")?;
    let levels = input.levels.unwrap_or(d).min(d);

    let min_gap = input.min_gap.unwrap_or_else(|| {
        let mut sorted = input.h0.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let widest = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max);
        1e-6 * widest
    });
    for n in 0..levels {
        for k in 0..d {
            if k != n && (input.h0[n] - input.h0[k]).abs() < min_gap {
                return Err(Error::Degenerate { a: n.min(k), b: n.max(k), gap: (input.h0[n] - input.h0[k]).abs() });
            }
        }
    }

    let per_level: Vec<Result<(Vec<f64>, Vec<CVec>)>> =
        (0..levels).into_par_iter().map(|n| expand_level(input, n)).collect();
    let mut eps = Vec::with_capacity(levels);
    let mut xi = Vec::with_capacity(levels);
    for r in per_level {
        let (e, x) = r?;
        eps.push(e);
        xi.push(x);
    }
    Ok(PerturbationResult { gamma: input.gamma, max_order: input.max_order, eps, xi })
}

fn expand_level(input: &PerturbationInput, n: usize) -> Result<(Vec<f64>, Vec<CVec>)> {
    let d = input.h0.len();
    let mut xi: Vec<CVec> = Vec::with_capacity(input.max_order + 1);
    let mut e0 = CVec::zeros(d);
    e0[n] = re(1.0);
    xi.push(e0);
    let mut eps = vec![C64::new(input.h0[n], 0.0)];
    for j in 1..=input.max_order {
        let mut rhs = &input.h1 * &xi[j - 1];
        if j >= 2 {
            rhs += &input.h2 * &xi[j - 2];
        }
        let ej = rhs[n];
        eps.push(ej);
        for i in 1..j {
            rhs -= &xi[j - i] * eps[i];
        }
        let mut next = CVec::zeros(d);
        for m in 0..d {
            if m != n {
                next[m] = rhs[m] / (input.h0[n] - input.h0[m]);
            }
        }
        xi.push(next);
    }
    let scale = 1.0 + eps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(bad) = eps.iter().find(|z| z.im.abs() > 1e-10 * scale) {
        return Err(Error::NonConvergence { what: "real perturbative eigenvalue", residual: bad.im.abs() });
    }
    Ok((eps.into_iter().map(|z| z.re).collect(), xi))
}

/// Un-normalized `|psi_n> = sum_j gamma^j xi^(j)` and its norm.
#[derive(Clone, Debug)]
pub struct PerturbedState {
    pub coeffs: CVec,
    pub norm: f64,
}

impl PerturbedState {
    pub fn normalized(&self) -> CVec {
        &self.coeffs / re(self.norm)
    }
}

pub fn perturbed_state(result: &PerturbationResult, n: usize, gamma: f64, order: usize) -> Result<PerturbedState> {
    result.check_order(order)?;
    let xi = &result.xi[n];
    let mut coeffs = xi[0].clone();
    for (j, x) in xi.iter().enumerate().take(order + 1).skip(1) {
        coeffs += x * re(gamma.powi(j as i32));
    }
    let norm = coeffs.norm();
    Ok(PerturbedState { coeffs, norm })
}

/// Truncated power series in `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries(pub Vec<C64>);

impl PowerSeries {
    pub fn constant(x: C64, order: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        c[0] = x;
        PowerSeries(c)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut out = vec![C64::new(0.0, 0.0); k + 1];
        for i in 0..=k {
            for j in 0..=(k - i) {
                out[i + j] += self.0[i] * other.0[j];
            }
        }
        PowerSeries(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        PowerSeries((0..=k).map(|i| self.0[i] + other.0[i]).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        PowerSeries(self.0.iter().map(|z| z * s).collect())
    }

    pub fn conj(&self) -> Self {
        PowerSeries(self.0.iter().map(|z| z.conj()).collect())
    }

    /// `1/sqrt(x)` for a series with positive real leading term.
    pub fn inv_sqrt(&self) -> Self {
        let k = self.order();
        let mut y = vec![C64::new(0.0, 0.0); k + 1];
        y[0] = C64::new(1.0, 0.0) / self.0[0].sqrt();
        for m in 1..=k {
            // coefficient m of y*y*x must vanish; it is linear in y[m]
            let ys = PowerSeries(y.clone());
            let t = ys.mul(&ys).mul(self).0[m];
            y[m] = -t / (y[0] * self.0[0] * 2.0);
        }
        PowerSeries(y)
    }

    pub fn eval(&self, gamma: f64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, z| acc * gamma + z)
    }
}

/// Series of `<n'|A|m'> / sqrt(<n'|n'><m'|m'>)` truncated at `order`.
pub fn matrix_element_series(
    result: &PerturbationResult,
    n: usize,
    m: usize,
    op: &CMat,
    order: usize,
) -> Result<PowerSeries> {
    result.check_order(order)?;
    let z = C64::new(0.0, 0.0);
    let (mut num, mut nn, mut mm) = (vec![z; order + 1], vec![z; order + 1], vec![z; order + 1]);
    let xn = &result.xi[n];
    let xm = &result.xi[m];
    let a_xm: Vec<CVec> = xm.iter().take(order + 1).map(|x| op * x).collect();
    for i in 0..=order {
        for j in 0..=(order - i) {
            num[i + j] += xn[i].dotc(&a_xm[j]);
            nn[i + j] += xn[i].dotc(&xn[j]);
            mm[i + j] += xm[i].dotc(&xm[j]);
        }
    }
    let norm = PowerSeries(nn).inv_sqrt().mul(&PowerSeries(mm).inv_sqrt());
    Ok(PowerSeries(num).mul(&norm))
}

fn apply_word(word: &[bool], k: usize) -> Option<(usize, f64)> {
    // word is applied right-to-left; true = a^dag, false = a
    let mut state = k;
    let mut amp = 1.0;
    for &raise in word.iter().rev() {
        if raise {
            state += 1;
            amp *= (state as f64).sqrt();
        } else {
            if state == 0 {
                return None;
            }
            amp *= (state as f64).sqrt();
            state -= 1;
        }
    }
    Some((state, amp))
}

/// `<l| product of (c_i a + d_i a^dag) |k>` by expanding into words.
fn linear_product_element(factors: &[(C64, C64)], l: usize, k: usize) -> C64 {
    let n = factors.len();
    let mut total = C64::new(0.0, 0.0);
    for mask in 0..(1usize << n) {
        let word: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let coef = factors
            .iter()
            .zip(&word)
            .fold(C64::new(1.0, 0.0), |acc, (&(ca, cd), &raise)| acc * if raise { cd } else { ca });
        if coef.norm() == 0.0 {
            continue;
        }
        if let Some((s, amp)) = apply_word(&word, k) {
            if s == l {
                total += coef * amp;
            }
        }
    }
    total
}

fn word_element(word: &[bool], l: usize, k: usize) -> f64 {
    match apply_word(word, k) {
        Some((s, amp)) if s == l => amp,
        _ => 0.0,
    }
}

/// Closed-form `(<l|h1|k>, <l|h2|k>)` of the high-amplitude ordering.
pub fn has_matrix_elements(k: usize, l: usize, alpha: C64, pair: &SqueezePair, lambda: f64) -> (C64, C64) {
    let (u, v) = (pair.u, pair.v);
    let (uu, vv) = (u.norm_sqr(), v.norm_sqr());
    let b = (v, u); // b = v a + u a^dag
    let bd = (u.conj(), v.conj());
    let g = lambda.sqrt();

    let mut h1 = C64::new(0.0, 0.0);
    if l + 1 == k || k + 1 == l || l + 3 == k || k + 3 == l {
        let cubic = linear_product_element(&[bd, bd, b], l, k) * alpha
            + linear_product_element(&[bd, b, b], l, k) * alpha.conj();
        let lin = linear_product_element(&[bd], l, k) * alpha + linear_product_element(&[b], l, k) * alpha.conj();
        h1 = -(cubic * 2.0 + lin) * g;
    }

    let kf = k as f64;
    let mut h2 = C64::new(0.0, 0.0);
    if l == k {
        h2 = re(-(2.0 * (2.0 * uu * vv + uu * uu) * kf + (uu * uu + vv * vv + 4.0 * uu * vv) * kf * kf));
    } else if l == k + 2 || k == l + 2 {
        let s = uu + vv;
        let ad3a = word_element(&[true, true, true, false], l, k);
        let ada3 = word_element(&[true, false, false, false], l, k);
        let ad2 = word_element(&[true, true], l, k);
        let a2 = word_element(&[false, false], l, k);
        h2 = -(v.conj() * u * ad3a + v * u.conj() * ada3) * (2.0 * s)
            - (v.conj() * u * ad2 + u.conj() * v * a2) * (2.0 * (2.0 * uu + vv));
    } else if l == k + 4 || k == l + 4 {
        let ad4 = word_element(&[true; 4], l, k);
        let a4 = word_element(&[false; 4], l, k);
        h2 = -((v.conj() * u).powi(2) * ad4 + (u.conj() * v).powi(2) * a4);
    }
    (h1, h2)
}

/// Level spacings `|E_{n+1} - E_n|` (units of `delta_omega`) per order.
#[derive(Clone, Debug)]
pub struct LevelSpacings {
    pub orders: Vec<usize>,
    /// `spacings[i][n]` for `orders[i]`.
    pub spacings: Vec<Vec<f64>>,
}

/// Runs the ordered expansion around one attractor.
pub fn expand_attractor(
    params: &ModelParams,
    branch: Branch,
    levels: usize,
    max_order: usize,
) -> Result<(PerturbationResult, crate::model::AttractorSolution)> {
    let sol = attractor(params, branch, None)?;
    let pair = sol.pair.expect("attractor sets the pair");
    // couplings reach +-4 per application; four applications for the states
    let dim = levels + 4 * MAX_ORDER + 4;
    let ord = ordered_hamiltonian(params, sol.alpha, &pair, branch, dim)?;
    let input = PerturbationInput::from_ordered(&ord, params.lambda(), max_order)?.with_levels(levels);
    Ok((double_perturbation(&input)?, sol))
}

pub fn level_spacings(params: &ModelParams, branch: Branch, n_max: usize, orders: &[usize]) -> Result<LevelSpacings> {
    let top = orders.iter().copied().max().unwrap_or(0);
    if top > MAX_ORDER {
        return Err(Error::MissingOrder { requested: top, available: MAX_ORDER });
    }
    let (res, _) = expand_attractor(params, branch, n_max + 2, top)?;
    let mut spacings = Vec::with_capacity(orders.len());
    for &o in orders {
        let e: Vec<f64> = (0..=n_max + 1).map(|n| res.energy(n, o)).collect::<Result<_>>()?;
        spacings.push(e.windows(2).map(|w| (w[1] - w[0]).abs()).collect());
    }
    Ok(LevelSpacings { orders: orders.to_vec(), spacings })
}
