//! Symbol-level simulation of both relay phases.
//!
//! Transmit vectors, relay forwarding and reception are simulated with the
//! assembled `W`. Each receiver removes its own echo using the self channel
//! `α H_{k',k'}` built from the per-pair chain, independently of `W`, and the
//! remainder is compared with the partner's signal through the same per-pair
//! chain.

use rand::Rng;

use crate::linalg::{norm2, CMatrix, C64};
use crate::model::{complex_normal, partner, ChannelSet, SystemConfig};
use crate::relay_design::{effective_pair_channel, RelayDesign};
use crate::terminal_design::UserCodecs;
use crate::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserSignal {
    /// Mean `‖α H_{k',k} x_k‖²`.
    pub desired: f64,
    /// Mean echo left after self-interference cancellation.
    pub self_residual: f64,
    /// Mean power arriving from users of other pairs.
    pub interpair: f64,
    /// Mean `‖ỹ − α H_{k',k} x_k‖²` (everything that is not the partner's signal).
    pub residual: f64,
    /// Mean `‖ỹ‖²`.
    pub received: f64,
    /// Predicted `E‖ỹ‖²`: desired power plus `tr K_z`.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalReport {
    pub users: Vec<UserSignal>,
}

impl SignalReport {
    fn worst(&self, f: impl Fn(&UserSignal) -> f64) -> f64 {
        self.users
            .iter()
            .map(|u| if u.desired > 0.0 { f(u) / u.desired } else { f(u) })
            .fold(0.0, f64::max)
    }

    pub fn max_self_ratio(&self) -> f64 {
        self.worst(|u| u.self_residual)
    }

    pub fn max_interpair_ratio(&self) -> f64 {
        self.worst(|u| u.interpair)
    }

    pub fn max_residual_ratio(&self) -> f64 {
        self.worst(|u| u.residual)
    }

    /// Largest `|received / predicted − 1|`.
    pub fn max_power_mismatch(&self) -> f64 {
        self.users
            .iter()
            .map(|u| (u.received / u.predicted - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalOptions {
    pub symbols: usize,
    pub noise: bool,
    /// Replace every data symbol with zero.
    pub silent: bool,
}

/// Per-pair end-to-end channel `α H̃_rxᵀ B_tm T_m B_rm H̃_tx` (rx and tx in
/// pair `m`).
fn pair_channel(relay: &RelayDesign, channels: &ChannelSet, rx: usize, tx: usize) -> Result<CMatrix> {
    let m = rx / 2;
    let b_rm = relay.b_rm(m);
    let h_rx = relay.f_r.matmul(channels.user(rx))?;
    let h_tx = relay.f_r.matmul(channels.user(tx))?;
    Ok(effective_pair_channel(&h_rx, &h_tx, &b_rm.transpose(), &relay.t_m(m), &b_rm)?.scale_re(relay.alpha))
}

/// Simulates `opts.symbols` channel uses. `relay.alpha` must be the final
/// amplification factor and `codecs` the matching user codecs.
pub fn signal_path_check<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    relay: &RelayDesign,
    codecs: &UserCodecs,
    opts: SignalOptions,
    rng: &mut R,
) -> Result<SignalReport> {
    let users = channels.user_count();
    let n_u = cfg.user_antennas as f64;
    let w = relay.w();
    let h_t: Vec<CMatrix> = channels.users().iter().map(CMatrix::transpose).collect();
    // H_kᵀ W, the downlink seen by each user.
    let down: Vec<CMatrix> = h_t.iter().map(|h| h.matmul(&w)).collect::<Result<_, _>>()?;
    let self_ch: Vec<CMatrix> = (0..users)
        .map(|k| pair_channel(relay, channels, k, k))
        .collect::<Result<_>>()?;
    let cross_ch: Vec<CMatrix> = (0..users)
        .map(|k| pair_channel(relay, channels, k, partner(k)))
        .collect::<Result<_>>()?;

    let mut acc = vec![UserSignal::default(); users];
    for k in 0..users {
        let noise_cov = &(&down[k] * &down[k].adjoint()).scale_re(cfg.relay_noise_var);
        let sig = &cross_ch[k] * &codecs.precoders[partner(k)];
        acc[k].predicted = cfg.power(partner(k)) / n_u * sig.norm_fro_sq()
            + noise_cov.trace().re
            + cfg.user_noise_var * n_u;
    }

    for _ in 0..opts.symbols {
        let x: Vec<Vec<C64>> = (0..users)
            .map(|k| {
                let s: Vec<C64> = (0..cfg.streams)
                    .map(|_| if opts.silent { C64::new(0.0, 0.0) } else { complex_normal(rng) })
                    .collect();
                let scale = (cfg.power(k) / n_u).sqrt();
                codecs.precoders[k]
                    .mul_vec(&s)
                    .map(|v| v.into_iter().map(|z| z * scale).collect())
            })
            .collect::<Result<_, _>>()?;

        // Multiple-access phase, kept per transmitter so that each user's
        // contribution can be tracked through the relay.
        let per_user_rx: Vec<Vec<C64>> = (0..users)
            .map(|k| channels.user(k).mul_vec(&x[k]))
            .collect::<Result<_, _>>()?;
        let mut y_r = vec![C64::new(0.0, 0.0); channels.relay_antennas()];
        for v in &per_user_rx {
            for (a, b) in y_r.iter_mut().zip(v) {
                *a += b;
            }
        }
        let relay_noise: Vec<C64> = (0..y_r.len())
            .map(|_| {
                if opts.noise {
                    complex_normal(rng) * cfg.relay_noise_var.sqrt()
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        for (a, n) in y_r.iter_mut().zip(&relay_noise) {
            *a += n;
        }
        // Broadcast phase.
        let x_r = w.mul_vec(&y_r)?;

        for k in 0..users {
            let p = partner(k);
            let mut y = h_t[k].mul_vec(&x_r)?;
            if opts.noise {
                for z in &mut y {
                    *z += complex_normal(rng) * cfg.user_noise_var.sqrt();
                }
            }
            let echo = self_ch[k].mul_vec(&x[k])?;
            let y_tilde: Vec<C64> = y.iter().zip(&echo).map(|(a, b)| a - b).collect();
            let desired = cross_ch[k].mul_vec(&x[p])?;

            let through_relay = |i: usize| down[k].mul_vec(&per_user_rx[i]);
            let own = through_relay(k)?;
            let self_residual: Vec<C64> = own.iter().zip(&echo).map(|(a, b)| a - b).collect();
            let mut interpair = 0.0;
            for i in (0..users).filter(|&i| i != k && i != p) {
                interpair += norm2(&through_relay(i)?).powi(2);
            }
            let residual: Vec<C64> = y_tilde.iter().zip(&desired).map(|(a, b)| a - b).collect();

            let u = &mut acc[k];
            u.desired += norm2(&desired).powi(2);
            u.self_residual += norm2(&self_residual).powi(2);
            u.interpair += interpair;
            u.residual += norm2(&residual).powi(2);
            u.received += norm2(&y_tilde).powi(2);
        }
    }
    let n = opts.symbols.max(1) as f64;
    for u in &mut acc {
        u.desired /= n;
        u.self_residual /= n;
        u.interpair /= n;
        u.residual /= n;
        u.received /= n;
    }
    Ok(SignalReport { users: acc })
}
