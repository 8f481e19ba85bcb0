//! Spectral efficiency.
//!
//! For receiver `k'` with partner `k`,
//! `γ_k' = ½ log₂ |I + (p_k/N_U) R⁻¹ Q H_k'ᵀ W H_k D_k D_kᴴ H_kᴴ Wᴴ H_k'* Qᴴ|`
//! where `R` collects the inter-pair interference, the forwarded relay noise
//! and the receiver noise after the decoder `Q`. The ½ accounts for the two
//! half-duplex phases. The determinant ratio is evaluated as
//! `log|R + S| − log|R|` with both arguments Hermitian positive definite.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::linalg::{log_det_hpd, CMatrix, C64, LinalgError};
use crate::model::{partner, ChannelSet, SystemConfig};
use crate::terminal_design::{RelayCascade, UserCodecs};
use crate::{Error, Result};

/// Largest Hermitian residual tolerated before symmetrizing.
const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSe {
    /// bps/Hz.
    pub value: f64,
    /// `R` was singular and had `ε I` added.
    pub regularized: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest `‖B_rm F_r H_j‖_F / ‖H_j‖_F` over users outside pair `m`.
    pub leakage: f64,
    pub regularized_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub realization_index: u64,
    pub per_user_se: Vec<f64>,
    pub sum_se: f64,
    pub diagnostics: Diagnostics,
}

/// One signal path into the receiver: `H_rxᵀ W H_i D_i` and its power `p_i`.
struct Arrival {
    user: usize,
    gain: CMatrix,
    power: f64,
}

/// Core log-det evaluation shared by the direct and cascaded paths.
fn rate(
    decoder: &CMatrix,
    arrivals: &[Arrival],
    desired: usize,
    relay_gram: &CMatrix,
    cfg: &SystemConfig,
    include_interpair: bool,
) -> Result<UserSe> {
    let n_u = cfg.user_antennas as f64;
    let q = decoder;
    let qh = q.adjoint();
    let m_d = q.rows();
    let mut r = (&(q * relay_gram) * &qh).scale_re(cfg.relay_noise_var);
    r = &r + &q.matmul(&qh)?.scale_re(cfg.user_noise_var);
    let mut s = CMatrix::zeros(m_d, m_d);
    for a in arrivals {
        let qg = q.matmul(&a.gain)?;
        let term = qg.matmul(&qg.adjoint())?.scale_re(a.power / n_u);
        if a.user == desired {
            s = &s + &term;
        } else if include_interpair {
            r = &r + &term;
        }
    }
    let total = &r + &s;
    for m in [&r, &total] {
        let res = m.hermitian_residual();
        if res > SYMMETRY_TOL {
            return Err(Error::Linalg(LinalgError::NotHermitian { residual: res }));
        }
    }
    let r = r.hermitian_part();
    let total = total.hermitian_part();
    let (ld_r, ld_total, regularized) = match (log_det_hpd(&r), log_det_hpd(&total)) {
        (Ok(a), Ok(b)) => (a, b, false),
        _ => {
            let eps = 1e-12 * r.trace().re / m_d as f64;
            let reg = CMatrix::identity(m_d).scale(C64::new(eps, 0.0));
            (log_det_hpd(&(&r + &reg))?, log_det_hpd(&(&total + &reg))?, true)
        }
    };
    Ok(UserSe {
        value: (0.5 * (ld_total - ld_r) / LN_2).max(0.0),
        regularized,
    })
}

/// `γ_rx` for relay matrix `w` (already scaled by `α`), computed from the
/// raw channels. `tx` is the partner whose data `rx` decodes.
#[allow(clippy::too_many_arguments)]
pub fn user_se(
    rx: usize,
    tx: usize,
    w: &CMatrix,
    channels: &ChannelSet,
    precoders: &[CMatrix],
    decoders: &[CMatrix],
    cfg: &SystemConfig,
    include_interpair: bool,
) -> Result<UserSe> {
    let a = channels.user(rx).transpose().matmul(w)?;
    let gram = a.matmul(&a.adjoint())?;
    let arrivals = (0..channels.user_count())
        .filter(|&i| i != rx)
        .map(|i| {
            Ok(Arrival {
                user: i,
                gain: a.matmul(&channels.user(i).matmul(&precoders[i])?)?,
                power: cfg.power(i),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rate(&decoders[rx], &arrivals, tx, &gram, cfg, include_interpair)
}

/// Same as [`user_se`] using the per-realization cascade of `W̃` and `α`.
pub fn user_se_cascade(
    rx: usize,
    cascade: &RelayCascade,
    alpha: f64,
    codecs: &UserCodecs,
    cfg: &SystemConfig,
    include_interpair: bool,
) -> Result<UserSe> {
    let arrivals = (0..cascade.users())
        .filter(|&i| i != rx)
        .map(|i| {
            Ok(Arrival {
                user: i,
                gain: cascade.link(rx, i).matmul(&codecs.precoders[i])?.scale_re(alpha),
                power: cfg.power(i),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gram = cascade.downlink_gram(rx).scale_re(alpha * alpha);
    rate(&codecs.decoders[rx], &arrivals, partner(rx), &gram, cfg, include_interpair)
}

/// Per-user SE of every user through the cascade.
pub fn all_users_se(cascade: &RelayCascade, alpha: f64, codecs: &UserCodecs, cfg: &SystemConfig) -> Result<Vec<UserSe>> {
    (0..cascade.users())
        .map(|rx| user_se_cascade(rx, cascade, alpha, codecs, cfg, true))
        .collect()
}

pub fn sum_se(per_user: &[f64]) -> f64 {
    per_user.iter().sum()
}
