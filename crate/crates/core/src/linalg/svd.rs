use super::tol::{JACOBI_TOL, MAX_JACOBI_SWEEPS};
use super::{dotc, norm2, CMatrix, LinalgError, C64};

/// Singular value decomposition `A = U · diag(S) · Vᴴ`.
///
/// Singular values are sorted in descending order and the columns of `u`
/// and `v` follow that order. Phases of the singular vectors are whatever
/// the Jacobi sweep produced; callers must not rely on them.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl SvdResult {
    /// `U · diag(S) · Vᴴ`, using only the first `s.len()` singular triplets.
    pub fn reconstruct(&self) -> CMatrix {
        let p = self.s.len();
        let mut us = self.u.columns(0, p);
        for (j, &sj) in self.s.iter().enumerate() {
            for z in us.column_mut(j) {
                *z *= sj;
            }
        }
        let vp = self.v.columns(0, p);
        &us * &vp.adjoint()
    }
}

/// Full SVD: `u` is `m × m` and `v` is `n × n`.
pub fn svd(a: &CMatrix) -> Result<SvdResult, LinalgError> {
    let mut r = svd_thin(a)?;
    r.u = complete_basis(&r.u);
    r.v = complete_basis(&r.v);
    Ok(r)
}

/// Thin SVD: with `p = min(m, n)`, `u` is `m × p` and `v` is `n × p`.
pub fn svd_thin(a: &CMatrix) -> Result<SvdResult, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { op: "svd" });
    }
    if a.rows() >= a.cols() {
        one_sided_jacobi(a)
    } else {
        let r = one_sided_jacobi(&a.adjoint())?;
        Ok(SvdResult {
            u: r.v,
            s: r.s,
            v: r.u,
        })
    }
}

/// Hestenes one-sided Jacobi for `m ≥ n`. Orthogonalizes the columns of a
/// working copy of `A` by plane rotations accumulated into `V`.
fn one_sided_jacobi(a: &CMatrix) -> Result<SvdResult, LinalgError> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut w = a.clone();
    let mut v = CMatrix::identity(n);
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).iter().map(|z| z.norm_sqr()).sum()).collect();

    let mut converged = n < 2;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dotc(w.column(p), w.column(q));
                let g = gamma.norm();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s, phase);
                rotate_columns(&mut v, p, q, c, s, phase);
                norms[p] = w.column(p).iter().map(|z| z.norm_sqr()).sum();
                norms[q] = w.column(q).iter().map(|z| z.norm_sqr()).sum();
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            op: "svd",
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigma: Vec<f64> = (0..n).map(|j| norm2(w.column(j))).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut filled = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sj = sigma[src];
        s.push(sj);
        vs.set_column(dst, v.column(src));
        if sj > f64::MIN_POSITIVE {
            let col: Vec<C64> = w.column(src).iter().map(|z| z / sj).collect();
            u.set_column(dst, &col);
            filled.push(true);
        } else {
            filled.push(false);
        }
    }
    if filled.iter().any(|f| !f) {
        fill_missing_columns(&mut u, &filled);
    }
    Ok(SvdResult { u, s, v: vs })
}

/// `[w_p, w_q] ← [w_p, e^{-iφ} w_q] · [[c, s], [-s, c]]`.
#[inline]
fn rotate_columns(w: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let rows = w.rows();
    let ph = phase.conj();
    for i in 0..rows {
        let xp = w[(i, p)];
        let xq = w[(i, q)] * ph;
        w[(i, p)] = xp * c - xq * s;
        w[(i, q)] = xp * s + xq * c;
    }
}

/// Replaces the columns flagged `false` with unit vectors orthogonal to all
/// flagged `true` columns (and to each other).
fn fill_missing_columns(u: &mut CMatrix, filled: &[bool]) {
    let m = u.rows();
    let mut basis: Vec<Vec<C64>> = filled
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(j, _)| u.column(j).to_vec())
        .collect();
    for (j, _) in filled.iter().enumerate().filter(|(_, &f)| !f) {
        let col = next_orthogonal(&basis, m);
        u.set_column(j, &col);
        basis.push(col);
    }
}

/// Extends orthonormal columns `q` (m × p) to a unitary `m × m` matrix.
pub(crate) fn complete_basis(q: &CMatrix) -> CMatrix {
    let (m, p) = q.shape();
    if p >= m {
        return q.clone();
    }
    let mut basis: Vec<Vec<C64>> = (0..p).map(|j| q.column(j).to_vec()).collect();
    let mut out = CMatrix::zeros(m, m);
    out.set_block(0, 0, q);
    for j in p..m {
        let col = next_orthogonal(&basis, m);
        out.set_column(j, &col);
        basis.push(col);
    }
    out
}

/// Picks the canonical basis vector with the largest residual against
/// `basis`, orthogonalizes it twice (classical Gram–Schmidt) and normalizes.
fn next_orthogonal(basis: &[Vec<C64>], m: usize) -> Vec<C64> {
    let residual = |e: usize| -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); m];
        x[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis {
                let proj = dotc(b, &x);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= proj * bi;
                }
            }
        }
        x
    };
    // Squared residual of e_i is 1 - Σ_b |b_i|², cheap to rank.
    let best = (0..m)
        .map(|i| {
            let r = 1.0 - basis.iter().map(|b| b[i].norm_sqr()).sum::<f64>();
            (i, r)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut x = residual(best);
    let nx = norm2(&x);
    for z in &mut x {
        *z /= nx;
    }
    x
}
