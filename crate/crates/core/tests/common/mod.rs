//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use duffing_core::{CMat, CVec, C64};
use rand::rngs::StdRng;
use rand::Rng;

pub fn random_hermitian(rng: &mut StdRng, d: usize, scale: f64) -> CMat {
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::new(scale * rng.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..d {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Textbook Rayleigh-Schroedinger sums for `diag(e) + g V`, intermediate
/// normalization. Returns `E^(0..=4)` for level `n`.
pub fn rs_energies(e: &[f64], v: &CMat, n: usize) -> [f64; 5] {
    let d = e.len();
    let den = |k: usize| e[n] - e[k];
    let others: Vec<usize> = (0..d).filter(|&k| k != n).collect();
    let vnn = v[(n, n)].re;

    let e2: f64 = others.iter().map(|&k| v[(n, k)].norm_sqr() / den(k)).sum();
    let s2: f64 = others.iter().map(|&k| v[(n, k)].norm_sqr() / den(k).powi(2)).sum();
    let s3: f64 = others.iter().map(|&k| v[(n, k)].norm_sqr() / den(k).powi(3)).sum();

    let mut t3 = C64::new(0.0, 0.0);
    let mut t3b = C64::new(0.0, 0.0);
    for &k in &others {
        for &m in &others {
            let w = v[(n, k)] * v[(k, m)] * v[(m, n)];
            t3 += w / (den(k) * den(m));
            t3b += w / (den(k) * den(m)) * (1.0 / den(k) + 1.0 / den(m));
        }
    }
    let e3 = t3.re - vnn * s2;

    let mut t4 = C64::new(0.0, 0.0);
    for &k in &others {
        for &m in &others {
            for &l in &others {
                t4 += v[(n, k)] * v[(k, m)] * v[(m, l)] * v[(l, n)] / (den(k) * den(m) * den(l));
            }
        }
    }
    let e4 = t4.re - e2 * s2 - vnn * t3b.re + vnn * vnn * s3;
    [e[n], vnn, e2, e3, e4]
}

/// First- and second-order state corrections for the same problem.
pub fn rs_states(e: &[f64], v: &CMat, n: usize) -> (CVec, CVec) {
    let d = e.len();
    let den = |k: usize| e[n] - e[k];
    let mut x1 = CVec::zeros(d);
    let mut x2 = CVec::zeros(d);
    for k in (0..d).filter(|&k| k != n) {
        x1[k] = v[(k, n)] / den(k);
        let mut s = C64::new(0.0, 0.0);
        for m in (0..d).filter(|&m| m != n) {
            s += v[(k, m)] * v[(m, n)] / (den(k) * den(m));
        }
        x2[k] = s - v[(n, n)] * v[(k, n)] / den(k).powi(2);
    }
    (x1, x2)
}

/// Quantum-regression spectrum of a damped linear oscillator with frequency
/// `w0`, amplitude decay `kappa/2` and thermal occupation `nbar`.
pub fn thermal_lorentzian(w: f64, w0: f64, kappa: f64, nbar: f64) -> f64 {
    nbar * kappa / ((kappa / 2.0).powi(2) + (w - w0).powi(2))
}

/// Full width at half maximum by linear interpolation of the crossings.
pub fn fwhm(omega: &[f64], s: &[f64]) -> f64 {
    let (k, &smax) = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let half = smax / 2.0;
    let cross = |i: usize, j: usize| omega[i] + (half - s[i]) * (omega[j] - omega[i]) / (s[j] - s[i]);
    let mut lo = k;
    while lo > 0 && s[lo] > half {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < s.len() && s[hi] > half {
        hi += 1;
    }
    cross(hi - 1, hi) - cross(lo, lo + 1)
}

/// Least-squares line `y = a + b x`; returns `(a, b, R^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|yi| (yi - my).powi(2)).sum();
    (a, b, 1.0 - ss_res / ss_tot)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
