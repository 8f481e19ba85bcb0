use super::{CMatrix, LinalgError, C64};

/// Kronecker product `A ⊗ B`, shape `(r_A r_B) × (c_A c_B)`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    CMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Stacks the columns of `a` into one vector.
pub fn vec(a: &CMatrix) -> Vec<C64> {
    // Storage is column-major, so this is a straight copy.
    a.as_slice().to_vec()
}

/// Inverse of [`vec`]: fills a `rows × cols` matrix column by column.
pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Result<CMatrix, LinalgError> {
    if v.len() != rows * cols {
        return Err(LinalgError::DimensionMismatch {
            op: "unvec",
            detail: format!("{} entries for {rows}x{cols}", v.len()),
        });
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| v[j * rows + i]))
}
