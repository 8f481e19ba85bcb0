use super::tol::{HERMITIAN_TOL, JACOBI_TOL, MAX_JACOBI_SWEEPS};
use super::{CMatrix, LinalgError, C64};

/// Eigendecomposition `A = U · diag(values) · Uᴴ` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigh {
    /// Real eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn reconstruct(&self) -> CMatrix {
        let mut ul = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            for z in ul.column_mut(j) {
                *z *= l;
            }
        }
        &ul * &self.vectors.adjoint()
    }
}

/// Cyclic two-sided Jacobi eigensolver for Hermitian matrices.
pub fn eigh(a: &CMatrix) -> Result<Eigh, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            op: "eigh",
            detail: format!("{}x{} is not square", a.rows(), a.cols()),
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { op: "eigh" });
    }
    let residual = a.hermitian_residual();
    if residual > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian { residual });
    }

    let n = a.rows();
    let mut h = a.hermitian_part();
    let mut u = CMatrix::identity(n);
    let scale = h.norm_fro();

    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (i, j)))
            .map(|(i, j)| h[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale || scale == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = h[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = apq / g;
                let theta = (h[(q, q)].re - h[(p, p)].re) / (2.0 * g);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                apply_rotation(&mut h, &mut u, p, q, c, s, phase);
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            op: "eigh",
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let diag: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, u.column(src));
    }
    Ok(Eigh { values, vectors })
}

/// `H ← Gᴴ H G`, `U ← U G` with `G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]`
/// acting on the `(p, q)` plane.
fn apply_rotation(h: &mut CMatrix, u: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let n = h.rows();
    let ph = phase.conj();
    for i in 0..n {
        let xp = h[(i, p)];
        let xq = h[(i, q)] * ph;
        h[(i, p)] = xp * c - xq * s;
        h[(i, q)] = xp * s + xq * c;
    }
    for j in 0..n {
        let xp = h[(p, j)];
        let xq = h[(q, j)] * phase;
        h[(p, j)] = xp * c - xq * s;
        h[(q, j)] = xp * s + xq * c;
    }
    h[(p, q)] = C64::new(0.0, 0.0);
    h[(q, p)] = C64::new(0.0, 0.0);
    h[(p, p)].im = 0.0;
    h[(q, q)].im = 0.0;
    for i in 0..u.rows() {
        let xp = u[(i, p)];
        let xq = u[(i, q)] * ph;
        u[(i, p)] = xp * c - xq * s;
        u[(i, q)] = xp * s + xq * c;
    }
}
