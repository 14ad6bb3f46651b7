//! Small complex linear-algebra helpers shared across the library:
//! DFT matrices, Hermitian eigendecomposition with a deterministic
//! ordering/phase convention, right pseudo-inverses, and adaptive
//! Gauss-Legendre quadrature.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{JsdmError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Unitary m-point DFT matrix, entry (j, k) = exp(-i 2 pi j k / m) / sqrt(m).
pub fn dft_matrix(m: usize) -> CMat {
    let scale = 1.0 / (m as f64).sqrt();
    CMat::from_fn(m, m, |j, k| {
        let phase = -2.0 * std::f64::consts::PI * (j as f64) * (k as f64) / (m as f64);
        Complex64::from_polar(scale, phase)
    })
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian deviation `max |R - R^H|`.
pub fn hermitian_residual(r: &CMat) -> f64 {
    max_abs(&(r - r.adjoint()))
}

/// Normalizes each column so that its largest-magnitude entry is real
/// positive. Ties in magnitude within 1e-12 resolve to the lowest index.
/// This makes eigenvector output deterministic across platforms.
pub fn normalize_column_phases(u: &mut CMat) {
    for mut col in u.column_iter_mut() {
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for (i, z) in col.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag + 1e-12 {
                best_mag = mag;
                best = i;
            }
        }
        let pivot = col[best];
        if pivot.norm() > 0.0 {
            let rot = pivot.conj() / Complex64::new(pivot.norm(), 0.0);
            for z in col.iter_mut() {
                *z *= rot;
            }
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues in
/// descending order, eigenvector phases normalized.
pub fn hermitian_eig_desc(r: &CMat) -> Result<(CMat, Vec<f64>)> {
    if r.nrows() != r.ncols() {
        return Err(JsdmError::InvalidSpec("matrix not square".into()));
    }
    let herm_res = hermitian_residual(r);
    if herm_res > 1e-9 * (1.0 + max_abs(r)) {
        return Err(JsdmError::Inconsistent(format!(
            "matrix not Hermitian, residual {herm_res:.3e}"
        )));
    }
    // Symmetrize to suppress roundoff before factorizing.
    let sym = (r + r.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let n = r.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut u = CMat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &eig.eigenvectors.column(src));
        vals.push(eig.eigenvalues[src]);
    }
    normalize_column_phases(&mut u);
    Ok((u, vals))
}

/// Right pseudo-inverse `W = G^H (G G^H)^{-1}` of a full-row-rank s x n
/// matrix (s <= n), computed from a Householder QR of `G^H` and polished
/// with one Newton step. Returns an error naming the offending rows when
/// the rows are numerically dependent (condition estimate >= `cond_limit`).
pub fn right_pseudo_inverse(g: &CMat, cond_limit: f64) -> Result<CMat> {
    let s = g.nrows();
    let n = g.ncols();
    if s == 0 || s > n {
        return Err(JsdmError::InvalidSpec(format!(
            "right_pseudo_inverse expects 1 <= rows <= cols, got {s}x{n}"
        )));
    }
    let qr = g.adjoint().qr();
    let q = qr.q(); // n x s, orthonormal columns
    let r = qr.r(); // s x s, upper triangular
    let diags: Vec<f64> = (0..s).map(|i| r[(i, i)].norm()).collect();
    let dmax = diags.iter().cloned().fold(0.0, f64::max);
    let dmin = diags.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
    if cond >= cond_limit {
        let rows = diags
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= dmax / cond_limit)
            .map(|(i, _)| i)
            .collect();
        return Err(JsdmError::RankDeficient { rows, cond });
    }
    // W = Q (R^H)^{-1}; R^H is lower triangular.
    let eye = CMat::identity(s, s);
    let rinv_h = r
        .adjoint()
        .solve_lower_triangular(&eye)
        .ok_or_else(|| JsdmError::Inconsistent("triangular solve failed".into()))?;
    let mut w = q * rinv_h;
    // One Newton polish step: W <- W (2I - G W).
    let gw = g * &w;
    let correction = eye.scale(2.0) - gw;
    w *= correction;
    Ok(w)
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and its derivative by recurrence.
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let q2 = ((2.0 * kf - 1.0) * x * q1 - (kf - 1.0) * q0) / kf;
                    q0 = q1;
                    q1 = q2;
                }
                let dpn = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                weights[i] = 2.0 / ((1.0 - x * x) * dpn * dpn);
                break;
            }
        }
        nodes[i] = x;
    }
    (nodes, weights)
}

fn gl_segment<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    nodes: &[f64],
    weights: &[f64],
) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        acc += f(mid + half * x) * *w;
    }
    acc * Complex64::new(half, 0.0)
}

fn adaptive_gl_rec<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    depth: usize,
    nodes: &[f64],
    weights: &[f64],
) -> Complex64 {
    let mid = 0.5 * (a + b);
    let left = gl_segment(f, a, mid, nodes, weights);
    let right = gl_segment(f, mid, b, nodes, weights);
    let refined = left + right;
    if (refined - whole).norm() <= tol || depth >= 30 {
        refined
    } else {
        adaptive_gl_rec(f, a, mid, left, tol * 0.5, depth + 1, nodes, weights)
            + adaptive_gl_rec(f, mid, b, right, tol * 0.5, depth + 1, nodes, weights)
    }
}

/// Adaptive Gauss-Legendre quadrature of a complex-valued integrand to
/// absolute tolerance `tol`.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    let (nodes, weights) = gauss_legendre(16);
    let whole = gl_segment(&f, a, b, &nodes, &weights);
    adaptive_gl_rec(&f, a, b, whole, tol, 0, &nodes, &weights)
}
