#![allow(dead_code)]

use hbd_relay::linalg::{CMatrix, C64};
use hbd_relay::model::{complex_normal, stream_rng};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0xA11CE)
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_hpd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    let mut k = &a * &a.adjoint();
    for i in 0..n {
        k[(i, i)] += C64::new(0.1, 0.0);
    }
    k.hermitian_part()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let d = a - b;
    let mut worst = 0.0f64;
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            worst = worst.max(d[(i, j)].norm());
        }
    }
    worst
}

/// `‖a − b‖_F / max(‖b‖_F, tiny)`.
pub fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm_fro() / b.norm_fro().max(1e-300)
}
