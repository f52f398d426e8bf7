//! Superoperators on column-stacked density matrices, steady states, time
//! evolution, emission spectra and the balance (rate) equation.
//!
//! `rho[(i, j)]` lives at index `i + dim * j`, so `vec(X rho Y) = (Y^T (x) X) vec(rho)`.

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FockOperator;
use crate::linalg::{BandLu, CMat, CVec, Csr, C64, I};
use crate::perturb::{matrix_element_series, PerturbationResult, PowerSeries};
use crate::renorm::BathCoefficients;

#[derive(Clone, Debug)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: Csr,
    /// `(label, weight)` of every included channel.
    pub channels: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

fn nonzeros(m: &CMat) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                out.push((i, j, z));
            }
        }
    }
    out
}

/// Accumulates `sum coef * X rho Y` as sparse triplets.
struct Builder {
    dim: usize,
    trip: Vec<(usize, usize, C64)>,
}

impl Builder {
    fn new(dim: usize) -> Self {
        Builder { dim, trip: Vec::new() }
    }

    fn sandwich(&mut self, x: &CMat, y: &CMat, coef: C64) {
        let d = self.dim;
        let xs = nonzeros(x);
        let ys = nonzeros(y);
        for &(i, k, xv) in &xs {
            for &(l, j, yv) in &ys {
                self.trip.push((i + d * j, k + d * l, coef * xv * yv));
            }
        }
    }

    fn left(&mut self, x: &CMat, coef: C64) {
        let d = self.dim;
        for (i, k, xv) in nonzeros(x) {
            for j in 0..d {
                self.trip.push((i + d * j, k + d * j, coef * xv));
            }
        }
    }

    fn right(&mut self, y: &CMat, coef: C64) {
        let d = self.dim;
        for (l, j, yv) in nonzeros(y) {
            for i in 0..d {
                self.trip.push((i + d * j, i + d * l, coef * yv));
            }
        }
    }

    /// `coef * (2 A rho B - B A rho - rho B A)`
    fn generalized(&mut self, a: &CMat, b: &CMat, coef: C64) {
        self.sandwich(a, b, coef * 2.0);
        self.left(&(b * a), -coef);
        self.right(&(b * a), -coef);
    }

    fn commutator(&mut self, h: &CMat) {
        self.left(h, -I);
        self.right(h, I);
    }

    fn finish(self) -> Csr {
        Csr::from_triplets(self.dim * self.dim, self.trip)
    }
}

#[derive(Clone, Debug)]
pub enum Channel {
    /// `weight * D[op]`
    Dissipator { label: String, op: FockOperator, weight: f64 },
    /// `weight * L[op^dag; op^dag] + weight^* * L[op; op]`
    AnomalousPair { label: String, op: FockOperator, weight: C64 },
    /// `weight * L[a; b]`
    Generalized { label: String, a: FockOperator, b: FockOperator, weight: C64 },
}

impl Channel {
    pub fn dissipator(label: &str, op: FockOperator, weight: f64) -> Self {
        Channel::Dissipator { label: label.to_string(), op, weight }
    }

    fn label(&self) -> &str {
        match self {
            Channel::Dissipator { label, .. }
            | Channel::AnomalousPair { label, .. }
            | Channel::Generalized { label, .. } => label,
        }
    }

    fn weight_abs(&self) -> f64 {
        match self {
            Channel::Dissipator { weight, .. } => *weight,
            Channel::AnomalousPair { weight, .. } | Channel::Generalized { weight, .. } => weight.norm(),
        }
    }
}

impl Superoperator {
    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.dim;
        let x: Vec<C64> = rho.as_slice().to_vec();
        let mut y = vec![C64::new(0.0, 0.0); d * d];
        self.matrix.matvec(&x, &mut y);
        CMat::from_vec(d, d, y)
    }

    /// `max_{kl} |Tr L[E_kl]|`
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut col = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            let r = i + d * i;
            for k in self.matrix.indptr[r]..self.matrix.indptr[r + 1] {
                col[self.matrix.indices[k]] += self.matrix.data[k];
            }
        }
        col.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |L(rho^dag)^dag - L(rho)|` over pseudo-random `rho`.
    pub fn hermiticity_defect(&self, samples: usize, seed: u64) -> f64 {
        let d = self.dim;
        let mut rng = StdRng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let rho = CMat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
            let lhs = self.apply(&rho.adjoint()).adjoint();
            let rhs = self.apply(&rho);
            worst = worst.max(crate::linalg::max_abs(&(lhs - rhs)));
        }
        worst
    }
}

fn same_dim(d: usize, ops: &[&FockOperator]) -> Result<()> {
    for op in ops {
        if op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
        }
    }
    Ok(())
}

/// `L[A; B] rho = 2 A rho B - B A rho - rho B A`, so that `D[A] = L[A; A^dag]`.
pub fn generalized_lindblad(a: &FockOperator, b: &FockOperator) -> Result<Superoperator> {
    let d = a.dim();
    same_dim(d, &[b])?;
    let mut bl = Builder::new(d);
    bl.generalized(a.matrix(), b.matrix(), C64::new(1.0, 0.0));
    Ok(Superoperator { dim: d, matrix: bl.finish(), channels: vec![("generalized".into(), 1.0)], warnings: vec![] })
}

/// `-i[H, .] + sum channels`
pub fn build_liouvillian(h: &FockOperator, channels: &[Channel]) -> Result<Superoperator> {
    let d = h.dim();
    let mut bl = Builder::new(d);
    bl.commutator(h.matrix());
    let mut manifest = vec![("hamiltonian".to_string(), 1.0)];
    for ch in channels {
        match ch {
            Channel::Dissipator { op, weight, .. } => {
                same_dim(d, &[op])?;
                if !weight.is_finite() {
                    return Err(Error::InvalidInput(format!("channel {} has non-finite weight", ch.label())));
                }
                if *weight != 0.0 {
                    bl.generalized(op.matrix(), &op.matrix().adjoint(), C64::new(*weight, 0.0));
                }
            }
            Channel::AnomalousPair { op, weight, .. } => {
                same_dim(d, &[op])?;
                if *weight != C64::new(0.0, 0.0) {
                    let ad = op.matrix().adjoint();
                    bl.generalized(&ad, &ad, *weight);
                    bl.generalized(op.matrix(), op.matrix(), weight.conj());
                }
            }
            Channel::Generalized { a, b, weight, .. } => {
                same_dim(d, &[a, b])?;
                bl.generalized(a.matrix(), b.matrix(), *weight);
            }
        }
        manifest.push((ch.label().to_string(), ch.weight_abs()));
    }
    Ok(Superoperator { dim: d, matrix: bl.finish(), channels: manifest, warnings: vec![] })
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: CMat,
    /// `max |L rho|`
    pub residual: f64,
}

/// Kernel of `L` normalized to unit trace. One equation of `L rho = 0` is
/// replaced by a fixed diagonal element; the result is then rescaled.
pub fn steady_state(l: &Superoperator) -> Result<SteadyState> {
    let d = l.dim;
    let n = d * d;
    let scale = l.matrix.max_abs().max(1e-300);
    let mut last_ratio = 0.0;
    for k in 0..d.min(4) {
        let pin = k + d * k;
        let lu = BandLu::factor_with(
            &l.matrix,
            C64::new(1.0 / scale, 0.0),
            C64::new(0.0, 0.0),
            &[(pin, vec![(pin, C64::new(1.0, 0.0))])],
        );
        last_ratio = lu.pivot_ratio();
        if last_ratio < 1e-13 {
            continue;
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        x[pin] = C64::new(1.0, 0.0);
        lu.solve_in_place(&mut x);
        let mut rho = CMat::from_vec(d, d, x);
        let tr = rho.trace();
        if tr.norm() == 0.0 || !tr.re.is_finite() {
            continue;
        }
        rho /= tr;
        let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let lr = l.apply(&rho);
        let residual = crate::linalg::max_abs(&lr);
        if residual > 1e-8 * scale.max(1.0) {
            return Err(Error::NonConvergence { what: "steady state", residual });
        }
        return Ok(SteadyState { rho, residual });
    }
    log::debug!("steady state pivot ratio {last_ratio:e}");
    Err(Error::NonUniqueSteadyState)
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { rtol: 1e-10, atol: 1e-12, max_steps: 10_000_000 }
    }
}

/// Adaptive Dormand-Prince 5(4) integrator for `dy/dt = L y`.
struct Stepper<'a> {
    l: &'a Csr,
    opts: EvolveOptions,
    h: f64,
    k: Vec<Vec<C64>>,
    tmp: Vec<C64>,
}

const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

impl<'a> Stepper<'a> {
    fn new(l: &'a Csr, opts: EvolveOptions, span: f64) -> Self {
        let n = l.n;
        let rate = l.max_abs().max(1e-12);
        Stepper {
            l,
            opts,
            h: (0.1 / rate).min(span.max(1e-12)),
            k: vec![vec![C64::new(0.0, 0.0); n]; 7],
            tmp: vec![C64::new(0.0, 0.0); n],
        }
    }

    fn advance(&mut self, y: &mut [C64], t0: f64, t1: f64) -> Result<()> {
        let n = y.len();
        let mut t = t0;
        let mut steps = 0usize;
        self.l.matvec(y, &mut self.k[0]);
        while t < t1 {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::NonConvergence { what: "time evolution step budget", residual: t1 - t });
            }
            let h = self.h.min(t1 - t);
            if h < 1e-14 * t.abs().max(1.0) && t1 - t > h {
                return Err(Error::Stiff { t });
            }
            for s in 0..6 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in DP_A[s].iter().enumerate().take(s + 1) {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    self.tmp[i] = acc;
                }
                let (head, tail) = self.k.split_at_mut(s + 1);
                let _ = head;
                self.l.matvec(&self.tmp, &mut tail[0]);
            }
            // tmp holds the 5th-order solution, k[6] = f(tmp)
            let mut err = 0.0;
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for j in 0..7 {
                    if DP_E[j] != 0.0 {
                        e += self.k[j][i] * (h * DP_E[j]);
                    }
                }
                let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(self.tmp[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if err <= 1.0 {
                t = if h == t1 - t { t1 } else { t + h };
                y.copy_from_slice(&self.tmp);
                let (first, rest) = self.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let proposed = h * fac;
            if err <= 1.0 && h < self.h {
                // truncated final step: keep the previous step size
                self.h = self.h.max(proposed);
            } else {
                self.h = proposed;
            }
            if self.h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Stiff { t });
            }
        }
        Ok(())
    }
}

/// `e^{L t} rho0`
pub fn evolve(l: &Superoperator, rho0: &CMat, t: f64, opts: EvolveOptions) -> Result<CMat> {
    let d = l.dim;
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.nrows() });
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput("evolution time must be non-negative".into()));
    }
    let mut y: Vec<C64> = rho0.as_slice().to_vec();
    if t > 0.0 {
        Stepper::new(&l.matrix, opts, t).advance(&mut y, 0.0, t)?;
    }
    Ok(CMat::from_vec(d, d, y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectrumMode {
    /// `(i w - L)^{-1}` per frequency.
    Resolvent,
    /// Correlation sampled to `t_max` and transformed by trapezoidal quadrature.
    TimeDomain { t_max: f64, samples: usize },
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub s: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Spectrum {
    /// Grid point of the maximum, refined by a parabola through its neighbours.
    pub fn peak(&self) -> (f64, f64) {
        let (k, &smax) = self
            .s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        if k == 0 || k + 1 == self.s.len() {
            return (self.omega[k], smax);
        }
        let (y0, y1, y2) = (self.s[k - 1], smax, self.s[k + 1]);
        let h = self.omega[k + 1] - self.omega[k];
        let denom = y0 - 2.0 * y1 + y2;
        if denom == 0.0 {
            return (self.omega[k], smax);
        }
        let off = 0.5 * (y0 - y2) / denom;
        (self.omega[k] + off * h, y1 - 0.25 * (y0 - y2) * off)
    }

    /// `int S dw / 2pi` by the trapezoidal rule.
    pub fn integral(&self) -> f64 {
        self.omega
            .windows(2)
            .zip(self.s.windows(2))
            .map(|(w, s)| 0.5 * (w[1] - w[0]) * (s[0] + s[1]))
            .sum::<f64>()
            / (2.0 * std::f64::consts::PI)
    }
}

/// `S(w) = 2 Re int_0^inf e^{-i w t} Tr[op^dag e^{L t}(op rho)] dt`
pub fn emission_spectrum(
    l: &Superoperator,
    rho_st: &CMat,
    op: &FockOperator,
    omega: &[f64],
    mode: SpectrumMode,
) -> Result<Spectrum> {
    let d = l.dim;
    if op.dim() != d || rho_st.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
    }
    let x0 = op.matrix() * rho_st;
    let opm = op.matrix();
    let overlap = |x: &[C64]| -> C64 {
        opm.as_slice().iter().zip(x).fold(C64::new(0.0, 0.0), |acc, (o, v)| acc + o.conj() * v)
    };
    match mode {
        SpectrumMode::Resolvent => {
            let s: Vec<f64> = omega
                .par_iter()
                .map(|&w| {
                    let lu = BandLu::factor_with(&l.matrix, C64::new(-1.0, 0.0), I * w, &[]);
                    let mut x: Vec<C64> = x0.as_slice().to_vec();
                    lu.solve_in_place(&mut x);
                    2.0 * overlap(&x).re
                })
                .collect();
            Ok(Spectrum { omega: omega.to_vec(), s, warnings: vec![] })
        }
        SpectrumMode::TimeDomain { t_max, samples } => {
            if samples < 2 || !(t_max > 0.0) {
                return Err(Error::InvalidInput("time-domain spectrum needs t_max > 0 and >= 2 samples".into()));
            }
            let dt = t_max / samples as f64;
            let mut y: Vec<C64> = x0.as_slice().to_vec();
            let mut corr = Vec::with_capacity(samples + 1);
            corr.push(overlap(&y));
            let mut stepper = Stepper::new(&l.matrix, EvolveOptions::default(), dt);
            for k in 0..samples {
                stepper.advance(&mut y, k as f64 * dt, (k + 1) as f64 * dt)?;
                corr.push(overlap(&y));
            }
            let mut warnings = vec![];
            let tail = corr[samples].norm();
            if tail > 1e-6 * corr[0].norm() {
                warnings.push(format!("correlation not decayed at t_max: |C(T)|/|C(0)| = {:e}", tail / corr[0].norm()));
            }
            let s = omega
                .par_iter()
                .map(|&w| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, c) in corr.iter().enumerate() {
                        let wt = if k == 0 || k == samples { 0.5 } else { 1.0 };
                        acc += (-I * (w * k as f64 * dt)).exp() * c * wt;
                    }
                    2.0 * (acc * dt).re
                })
                .collect();
            Ok(Spectrum { omega: omega.to_vec(), s, warnings })
        }
    }
}

/// `entries[i][j] = <i'|a|j'>` as a power series in `gamma`.
#[derive(Clone, Debug)]
pub struct LadderTable {
    pub gamma: f64,
    pub order: usize,
    pub entries: Vec<Vec<PowerSeries>>,
}

impl LadderTable {
    /// Exact (normalized) states; entries are constants.
    pub fn from_states(states: &[CVec], a: &CMat) -> Self {
        let entries = states
            .iter()
            .map(|si| states.iter().map(|sj| PowerSeries::constant(si.dotc(&(a * sj)), 0)).collect())
            .collect();
        LadderTable { gamma: 0.0, order: 0, entries }
    }

    /// Perturbed states expanded consistently to `order` in `gamma`.
    pub fn from_perturbation(result: &PerturbationResult, a: &CMat, levels: usize, order: usize) -> Result<Self> {
        if levels > result.levels() {
            return Err(Error::InvalidInput(format!(
                "{levels} levels requested, {} expanded",
                result.levels()
            )));
        }
        let rows: Vec<Result<Vec<PowerSeries>>> = (0..levels)
            .into_par_iter()
            .map(|i| (0..levels).map(|j| matrix_element_series(result, i, j, a, order)).collect())
            .collect();
        let entries = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(LadderTable { gamma: result.gamma, order, entries })
    }

    pub fn levels(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Clone, Debug)]
pub struct BalanceRates {
    /// `w[(n, m)]`: rate (in units of kappa) from level m to level n.
    pub w: DMatrix<f64>,
    /// Entries below zero that were clipped.
    pub clipped: usize,
}

/// Negative rates below `-RATE_CLIP` are counted as clipped; all negative rates are zeroed.
pub const RATE_CLIP: f64 = 1e-10;

/// Transition rates between renormalized levels, expanded to the table's order.
pub fn balance_rates(table: &LadderTable, bath: &BathCoefficients) -> BalanceRates {
    let n = table.levels();
    let nb = bath.nbar_eff;
    let m = bath.squeeze_number;
    let mut w = DMatrix::zeros(n, n);
    let mut clipped = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let x = &table.entries[i][j];
            let y = &table.entries[j][i];
            let (cx, cy) = (x.conj(), y.conj());
            let series = cy
                .mul(&cx)
                .scale(m)
                .add(&y.mul(x).scale(m.conj()))
                .add(&x.mul(&cx).scale(C64::new(1.0 + nb, 0.0)))
                .add(&y.mul(&cy).scale(C64::new(nb, 0.0)));
            let val = series.eval(table.gamma).re;
            w[(i, j)] = if val < 0.0 {
                if val < -RATE_CLIP {
                    clipped += 1;
                }
                0.0
            } else {
                val
            };
        }
    }
    BalanceRates { w, clipped }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistributionSource {
    Balance,
    FullLiouvillian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelBasis {
    Perturbed,
    Bare,
}

#[derive(Clone, Debug)]
pub struct StationaryDistribution {
    pub p: Vec<f64>,
    pub source: DistributionSource,
    pub basis: LevelBasis,
}

/// Stationary solution of `dp_n/dt = sum_m (W_nm p_m - W_mn p_n)`.
pub fn balance_steady(w: &DMatrix<f64>) -> Result<StationaryDistribution> {
    let n = w.nrows();
    if n == 0 || w.ncols() != n {
        return Err(Error::InvalidInput("rate matrix must be square and non-empty".into()));
    }
    // every level must be able to reach level 0, which leaves a single
    // closed class and hence a unique stationary vector
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(k) = stack.pop() {
        for j in 0..n {
            if j != k && !seen[j] && w[(k, j)] > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if let Some(lost) = seen.iter().position(|s| !s) {
        return Err(Error::Reducible(lost));
    }
    let mut g = w.clone();
    for j in 0..n {
        g[(j, j)] = 0.0;
        let out: f64 = (0..n).filter(|&i| i != j).map(|i| w[(i, j)]).sum();
        g[(j, j)] = -out;
    }
    for j in 0..n {
        g[(0, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[0] = 1.0;
    let p = g
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonConvergence { what: "balance equation", residual: f64::NAN })?;
    Ok(StationaryDistribution {
        p: p.iter().copied().collect(),
        source: DistributionSource::Balance,
        basis: LevelBasis::Perturbed,
    })
}

/// `p_n = <psi_n|rho|psi_n>` for the given states.
pub fn populations(rho: &CMat, states: &[CVec], basis: LevelBasis) -> StationaryDistribution {
    let p = states.iter().map(|s| s.dotc(&(rho * s)).re).collect();
    StationaryDistribution { p, source: DistributionSource::FullLiouvillian, basis }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ladder;
    use crate::linalg::{c, max_abs, re};

    fn thermal_l(dim: usize, nbar: f64, kappa: f64) -> Superoperator {
        let a = ladder(dim).unwrap();
        let h = FockOperator::number(dim);
        build_liouvillian(
            &h,
            &[
                Channel::dissipator("down", a.clone(), kappa / 2.0 * (1.0 + nbar)),
                Channel::dissipator("up", a.adjoint(), kappa / 2.0 * nbar),
            ],
        )
        .unwrap()
    }

    #[test]
    fn thermal_steady_state() {
        let nbar = 0.5;
        let l = thermal_l(30, nbar, 0.1);
        assert!(l.trace_defect() < 1e-12);
        assert!(l.hermiticity_defect(3, 1) < 1e-12);
        let st = steady_state(&l).unwrap();
        let mean: f64 = (0..30).map(|k| k as f64 * st.rho[(k, k)].re).sum();
        assert!((mean - nbar).abs() < 1e-8);
        let q = nbar / (1.0 + nbar);
        assert!((st.rho[(1, 1)].re / st.rho[(0, 0)].re - q).abs() < 1e-10);
    }

    #[test]
    fn vacuum_is_dark() {
        let l = thermal_l(10, 0.0, 0.3);
        let st = steady_state(&l).unwrap();
        assert!((st.rho[(0, 0)] - re(1.0)).norm() < 1e-10);
    }

    #[test]
    fn closed_system_is_not_unique() {
        let h = FockOperator::number(4);
        let l = build_liouvillian(&h, &[]).unwrap();
        assert!(matches!(steady_state(&l), Err(Error::NonUniqueSteadyState)));
    }

    #[test]
    fn generalized_with_adjoint_is_dissipator() {
        let a = ladder(5).unwrap();
        let g = generalized_lindblad(&a, &a.adjoint()).unwrap();
        let d = build_liouvillian(&FockOperator::from_matrix(CMat::zeros(5, 5)).unwrap(), &[Channel::dissipator("d", a, 1.0)])
            .unwrap();
        assert!(max_abs(&(g.matrix.to_dense() - d.matrix.to_dense())) < 1e-14);
    }

    #[test]
    fn coherent_decay() {
        let dim = 30;
        let l = thermal_l(dim, 0.0, 0.2);
        let alpha0 = c(1.2, 0.0);
        let amps = crate::fock::coherent_amplitudes(alpha0, dim);
        let psi = CVec::from_vec(amps);
        let rho0 = &psi * psi.adjoint();
        let t = 3.0;
        let rho = evolve(&l, &rho0, t, EvolveOptions::default()).unwrap();
        let a = ladder(dim).unwrap().into_matrix();
        let mean = (&a * &rho).trace();
        let expect = alpha0 * (c(-0.1 * t, -t)).exp();
        assert!((mean - expect).norm() < 1e-6);
        assert!((rho.trace() - re(1.0)).norm() < 1e-8);
    }

    #[test]
    fn thermal_ladder_balance() {
        let n = 8;
        let nbar = 0.3;
        let w = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j {
                j as f64 * (1.0 + nbar)
            } else if j + 1 == i {
                i as f64 * nbar
            } else {
                0.0
            }
        });
        let p = balance_steady(&w).unwrap();
        for k in 0..n - 1 {
            assert!((p.p[k + 1] / p.p[k] - nbar / (1.0 + nbar)).abs() < 1e-12);
        }
        let mut broken = w.clone();
        broken[(3, 4)] = 0.0;
        broken[(4, 3)] = 0.0;
        assert!(matches!(balance_steady(&broken), Err(Error::Reducible(_))));
    }
}
