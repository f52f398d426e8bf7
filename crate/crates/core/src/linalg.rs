//! Dense and banded complex linear algebra used throughout the crate.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let sym = (m + m.adjoint()) * re(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// exp(G) for anti-Hermitian G, via the eigenbasis of the Hermitian iG.
pub fn expm_anti_hermitian(g: &CMat) -> CMat {
    let h = g * I;
    let (vals, vecs) = eigh(&h);
    let phases = CVec::from_iterator(vals.len(), vals.iter().map(|&l| (-I * l).exp()));
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * vecs.adjoint()
}

/// Compressed sparse rows.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<C64>,
}

impl Csr {
    /// Builds from unsorted triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_unstable_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, col, v) in trip {
            if last == Some((r, col)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(col);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, col));
            }
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Csr { n, indptr, indices, data };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.n + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.data[k] != C64::new(0.0, 0.0) {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&col) {
            Ok(k) => self.data[self.indptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// (lower, upper) bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let col = self.indices[k];
                if col < r {
                    kl = kl.max(r - col);
                } else {
                    ku = ku.max(col - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] += self.data[k];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
    }
}

/// Banded LU with partial pivoting. Row `i` keeps columns `i-kl ..= i+kl+ku`
/// so that fill from row exchanges stays inside the window.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<C64>,
    lower: Vec<C64>,
    piv: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandLu {
    #[inline]
    fn idx(&self, r: usize, col: usize) -> usize {
        r * self.width + (col + self.kl - r)
    }

    /// Factors `shift·I + scale·A` where A is given in CSR form; rows listed in
    /// `replace` are overwritten by the supplied dense-in-band rows.
    pub fn factor_with(
        a: &Csr,
        scale: C64,
        shift: C64,
        replace: &[(usize, Vec<(usize, C64)>)],
    ) -> Self {
        let n = a.n;
        let (mut kl, mut ku) = a.bandwidths();
        for (r, entries) in replace {
            for &(col, _) in entries {
                if col < *r {
                    kl = kl.max(r - col);
                } else {
                    ku = ku.max(col - r);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            width,
            rows: vec![C64::new(0.0, 0.0); n * width],
            lower: vec![C64::new(0.0, 0.0); n * kl.max(1)],
            piv: vec![0; n],
            min_pivot: f64::INFINITY,
            max_pivot: 0.0,
        };
        for r in 0..n {
            if let Some((_, entries)) = replace.iter().find(|(rr, _)| *rr == r) {
                for &(col, v) in entries {
                    let k = lu.idx(r, col);
                    lu.rows[k] += v;
                }
                continue;
            }
            for k in a.indptr[r]..a.indptr[r + 1] {
                let col = a.indices[k];
                let i = lu.idx(r, col);
                lu.rows[i] += scale * a.data[k];
            }
            let i = lu.idx(r, r);
            lu.rows[i] += shift;
        }
        lu.eliminate();
        lu
    }

    pub fn factor(a: &Csr) -> Self {
        Self::factor_with(a, C64::new(1.0, 0.0), C64::new(0.0, 0.0), &[])
    }

    fn eliminate(&mut self) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.rows[self.idx(k, k)].norm();
            for r in k + 1..=last_row {
                let v = self.rows[self.idx(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            self.piv[k] = p;
            if p != k {
                for col in k..=last_col {
                    let (i, j) = (self.idx(k, col), self.idx(p, col));
                    self.rows.swap(i, j);
                }
            }
            let pivot = self.rows[self.idx(k, k)];
            self.min_pivot = self.min_pivot.min(pivot.norm());
            self.max_pivot = self.max_pivot.max(pivot.norm());
            if pivot.norm() == 0.0 {
                continue;
            }
            let inv = pivot.inv();
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let l = self.rows[ir] * inv;
                self.rows[ir] = C64::new(0.0, 0.0);
                self.lower[k * kl.max(1) + (r - k - 1)] = l;
                if l.norm() == 0.0 {
                    continue;
                }
                let base_k = self.idx(k, k);
                let base_r = self.idx(r, k);
                for off in 1..=(last_col - k) {
                    let u = self.rows[base_k + off];
                    self.rows[base_r + off] -= l * u;
                }
            }
        }
    }

    /// Ratio of smallest to largest pivot magnitude.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            let last_row = (k + kl).min(n - 1);
            for r in k + 1..=last_row {
                b[r] -= self.lower[k * kl.max(1) + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let base = self.idx(k, k);
            let mut acc = b[k];
            for off in 1..=(last_col - k) {
                acc -= self.rows[base + off] * b[k + off];
            }
            b[k] = acc / self.rows[base];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &CMat, b: &CVec) -> CVec {
        a.clone().lu().solve(b).unwrap()
    }

    #[test]
    fn band_lu_matches_dense_solve() {
        let n: usize = 30;
        let mut trip = Vec::new();
        let mut seed = 7u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for r in 0..n {
            for col in r.saturating_sub(3)..(r + 5).min(n) {
                // zero diagonal forces pivoting
                if col != r {
                    trip.push((r, col, c(rnd(), rnd())));
                }
            }
        }
        let a = Csr::from_triplets(n, trip);
        let dense = a.to_dense();
        let b = CVec::from_fn(n, |i, _| c(i as f64, 1.0));
        let lu = BandLu::factor(&a);
        let mut x: Vec<C64> = b.iter().cloned().collect();
        lu.solve_in_place(&mut x);
        let reference = dense_solve(&dense, &b);
        for i in 0..n {
            assert!((x[i] - reference[i]).norm() < 1e-9 * (1.0 + reference[i].norm()));
        }
    }

    #[test]
    fn expm_is_unitary() {
        let n = 6;
        let h = CMat::from_fn(n, n, |i, j| c((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let h = &h + h.adjoint();
        let u = expm_anti_hermitian(&(h * (-I)));
        let defect = max_abs(&(u.adjoint() * &u - CMat::identity(n, n)));
        assert!(defect < 1e-12);
    }

    #[test]
    fn csr_sums_duplicates() {
        let a = Csr::from_triplets(2, vec![(0, 1, re(1.0)), (0, 1, re(2.0)), (1, 0, re(0.0))]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 1), re(3.0));
    }
}
