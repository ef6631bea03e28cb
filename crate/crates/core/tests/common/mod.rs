#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use radcom::wmmse::WmmseState;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<C>;
pub type CVec = DVector<C>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut impl Rng) -> C {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

pub fn cvec(rng: &mut impl Rng, n: usize) -> CVec {
    DVector::from_fn(n, |_, _| cn(rng))
}

pub fn cmat(rng: &mut impl Rng, r: usize, c: usize) -> CMat {
    DMatrix::from_fn(r, c, |_, _| cn(rng))
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    let a = cmat(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

/// `xᴴ M y` by explicit loops.
pub fn bilinear(x: &CVec, m: &CMat, y: &CVec) -> C {
    let mut acc = C::new(0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..y.len() {
            acc += x[i].conj() * m[(i, j)] * y[j];
        }
    }
    acc
}

/// `xᴴ y` by explicit loop.
pub fn inner(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Largest eigenvalue of a Hermitian matrix by cyclic Jacobi rotations on its
/// real symmetric embedding `[[Re, -Im], [Im, Re]]`.
pub fn jacobi_max_eigenvalue(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut a = vec![vec![0.0f64; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    let size = 2 * n;
    for _sweep in 0..100 {
        let off: f64 = (0..size).flat_map(|i| (0..size).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..size {
            for q in p + 1..size {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..size {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..size {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..size).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

/// Log-sum rate of one user from raw channel/precoder entries: `log2(1 + S/(I + radar + 1))`.
pub fn rate_direct(h: &[C], p: &CMat, k: usize, radar: f64) -> f64 {
    let col = |j: usize| -> Vec<C> { (0..p.nrows()).map(|i| p[(i, j)]).collect() };
    let signal = inner(h, &col(k)).norm_sqr();
    let interference: f64 = (0..p.ncols()).filter(|&j| j != k).map(|j| inner(h, &col(j)).norm_sqr()).sum();
    (1.0 + signal / (interference + radar + 1.0)).log2()
}

/// Hessian and linear terms of the precoder block, assembled entry by entry.
pub fn precoder_terms(state: &WmmseState, h: &[CVec], z: &CMat, rho: f64, mu: &[f64]) -> (CMat, Vec<CVec>) {
    let n = z.nrows();
    let mut g = z.clone();
    let mut b = Vec::new();
    for k in 0..h.len() {
        let c = rho * mu[k] * state.weights[k];
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] += h[k][i] * h[k][j].conj() * (c * state.equalizers[k].norm_sqr());
            }
        }
        b.push(h[k].map(|x| x * c * state.equalizers[k].conj()));
    }
    (g, b)
}

/// Dual function `d(λ) = −Σ bᴴ(G+λI)⁻¹b − λP`, solved by LU.
pub fn dual_value(g: &CMat, b: &[CVec], budget: f64, lambda: f64) -> f64 {
    let n = g.nrows();
    let m = g + CMat::identity(n, n).scale(lambda);
    let lu = m.lu();
    let mut acc = 0.0;
    for bk in b {
        let x = lu.solve(bk).expect("G + λI invertible");
        acc += inner(bk.as_slice(), x.as_slice()).re;
    }
    -acc - lambda * budget
}

pub fn maximize_dual(g: &CMat, b: &[CVec], budget: f64) -> f64 {
    let grid: Vec<f64> = std::iter::once(0.0).chain((0..4001).map(|i| 10f64.powf(-9.0 + 15.0 * i as f64 / 4000.0))).collect();
    let vals: Vec<f64> = grid.iter().map(|&l| dual_value(g, b, budget, l)).collect();
    let best = (0..grid.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if dual_value(g, b, budget, m1) < dual_value(g, b, budget, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    dual_value(g, b, budget, 0.5 * (lo + hi)).max(vals[best])
}


/// Minimum of `tr(B R)` over `R = d [[1, r], [r̄, 1]]`, `|r| ≤ 1`, on a polar grid.
pub fn disc_grid_min(b: &CMat, d: f64) -> f64 {
    let base = d * (b[(0, 0)].re + b[(1, 1)].re);
    let mut best = f64::INFINITY;
    for ir in 0..=200 {
        let rad = ir as f64 / 200.0;
        for ia in 0..3600 {
            let ang = ia as f64 * std::f64::consts::TAU / 3600.0;
            let r = C::from_polar(rad, ang);
            best = best.min(base + 2.0 * d * (b[(1, 0)] * r).re);
        }
    }
    best
}


/// Point on the per-antenna constraint set with the given phases (K = 1).
pub fn phased(power: f64, phases: &[f64]) -> CVec {
    let amp = (power / phases.len() as f64).sqrt();
    DVector::from_iterator(phases.len(), phases.iter().map(|&p| C::from_polar(amp, p)))
}


pub fn phase_grid_min(n: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let step = std::f64::consts::TAU / n as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 * step, j as f64 * step);
            let v = f(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    // Local refinement around the best cell.
    let (mut v, mut x, mut y) = best;
    let mut h = step;
    while h > 1e-9 {
        let mut moved = false;
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let cand = f(x + dx, y + dy);
            if cand < v {
                v = cand;
                x += dx;
                y += dy;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    v
}

