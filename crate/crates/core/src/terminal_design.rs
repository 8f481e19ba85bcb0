//! User-side baseband processing and the amplification-factor iteration.
//!
//! Receiver `k'` whitens its equivalent noise `ñ = H_{k'}ᵀ W n_R + n_{k'}`,
//! takes the SVD of the whitened end-to-end channel from its partner `k`,
//! and the partner precodes along the right singular vectors with a
//! water-filling power split. The relay amplification factor `α` depends on
//! the precoders and the precoders depend on `α` through the noise
//! covariance, so both are iterated jointly starting from `α = 1`.
//!
//! The relay input power uses the transmit covariance `(p_k/N_U) D_k D_kᴴ`
//! implied by `x_k = √(p_k/N_U) D_k s_k`.

use crate::linalg::{eigh, svd_thin, CMatrix, C64};
use crate::model::{partner, ChannelSet, SystemConfig};
use crate::relay_design::RelayDesign;
use crate::{Error, Result};

/// Stop threshold on `|α̃ − 1|`.
pub const ALPHA_TOL: f64 = 1e-6;

/// Precoder/decoder pair for one direction of a user pair.
#[derive(Debug, Clone)]
pub struct Codec {
    /// `D`, `N_U × M_D`, used by the transmitter.
    pub precoder: CMatrix,
    /// `Q`, `M_D × N_U`, used by the receiver.
    pub decoder: CMatrix,
    /// Water-filling powers `Σ̄`, one per stream.
    pub powers: Vec<f64>,
    /// Singular values of the whitened channel `α K_w H_{k',k}`.
    pub singular_values: Vec<f64>,
}

/// Codecs of every user. Index `k` holds the precoder user `k` transmits
/// with and the decoder/whitening filter user `k` receives with.
#[derive(Debug, Clone)]
pub struct UserCodecs {
    pub precoders: Vec<CMatrix>,
    pub decoders: Vec<CMatrix>,
    pub whitening: Vec<CMatrix>,
    pub powers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaState {
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `α̃` of every iteration.
    pub history: Vec<f64>,
}

/// `K_z = σ_R² H_kᵀ W Wᴴ H_k* + σ_k² I`.
pub fn noise_covariance(h_k: &CMatrix, w: &CMatrix, relay_noise_var: f64, user_noise_var: f64) -> Result<CMatrix> {
    let a = h_k.transpose().matmul(w)?;
    Ok(covariance_from_downlink(&a, 1.0, relay_noise_var, user_noise_var))
}

/// `σ_R² α² A Aᴴ + σ_k² I` for `A = H_kᵀ W̃`.
fn covariance_from_downlink(a: &CMatrix, alpha: f64, relay_noise_var: f64, user_noise_var: f64) -> CMatrix {
    let gram = a.matmul(&a.adjoint()).expect("A Aᴴ is square");
    covariance_from_gram(&gram, alpha, relay_noise_var, user_noise_var)
}

fn covariance_from_gram(gram: &CMatrix, alpha: f64, relay_noise_var: f64, user_noise_var: f64) -> CMatrix {
    let n = gram.rows();
    let mut k = gram.scale_re(alpha * alpha * relay_noise_var);
    for i in 0..n {
        k[(i, i)] += C64::new(user_noise_var, 0.0);
    }
    k.hermitian_part()
}

/// `K_w = Σ_z^{-1/2} U_zᴴ` from `K_z = U_z Σ_z U_zᴴ`, so `K_w K_z K_wᴴ = I`.
pub fn whitening_filter(k_z: &CMatrix) -> Result<CMatrix> {
    let e = eigh(k_z)?;
    let max = e.values.first().copied().unwrap_or(0.0);
    let min = e.values.last().copied().unwrap_or(0.0);
    if !(min > max * f64::EPSILON * k_z.rows() as f64) {
        return Err(Error::IllConditioned {
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    let mut k_w = e.vectors.adjoint();
    for (i, &l) in e.values.iter().enumerate() {
        let s = 1.0 / l.sqrt();
        for j in 0..k_w.cols() {
            k_w[(i, j)] *= s;
        }
    }
    Ok(k_w)
}

/// Water-filling: `p_i = max(μ − 1/g_i, 0)` with `Σ p_i = budget`.
///
/// Exact active-set solution: gains are sorted and the largest active set
/// whose water level clears every member's floor is selected.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<Vec<f64>> {
    if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::Scenario("water-filling gains must be finite and nonnegative".into()));
    }
    if !(budget > 0.0) {
        return Err(Error::Scenario("water-filling budget must be positive".into()));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::Degenerate("all water-filling gains are zero"));
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));

    let mut level = 0.0;
    let mut active = 0;
    let mut inv_sum = 0.0;
    for (n, &i) in order.iter().enumerate() {
        inv_sum += 1.0 / gains[i];
        let mu = (budget + inv_sum) / (n + 1) as f64;
        if mu > 1.0 / gains[i] {
            level = mu;
            active = n + 1;
        } else {
            break;
        }
    }
    let mut powers = vec![0.0; gains.len()];
    for &i in &order[..active] {
        powers[i] = level - 1.0 / gains[i];
    }
    Ok(powers)
}

/// Precoder and decoder for one direction.
///
/// `pair_channel` is the self-interference-free channel `H_{k',k}` at unit
/// amplification. The whitened channel `Ĥ = α K_w H_{k',k} = Û Σ̂ V̂ᴴ` gives
/// `D = V̂ Σ̄^{1/2}`, `Q = Ûᴴ K_w` on the first `M_D` streams; `Σ̄` water-fills
/// the gains `(p/N_U) σ̂_i²` under `Σ Σ̄_i = N_U`. Streams beyond the rank
/// of `Ĥ` get zero power.
pub fn design_codecs(pair_channel: &CMatrix, k_w: &CMatrix, alpha: f64, tx_power: f64, streams: usize) -> Result<Codec> {
    let n_u = pair_channel.cols();
    if streams == 0 || streams > n_u {
        return Err(Error::Scenario(format!("{streams} streams for {n_u} antennas")));
    }
    let h_hat = k_w.matmul(pair_channel)?.scale_re(alpha);
    let dec = svd_thin(&h_hat)?;
    let gains: Vec<f64> = dec.s[..streams]
        .iter()
        .map(|s| tx_power / n_u as f64 * s * s)
        .collect();
    let powers = waterfill(&gains, n_u as f64)?;
    let mut precoder = dec.v.columns(0, streams);
    for (j, p) in powers.iter().enumerate() {
        let a = p.sqrt();
        for z in precoder.column_mut(j) {
            *z *= a;
        }
    }
    let decoder = dec.u.columns(0, streams).adjoint().matmul(k_w)?;
    Ok(Codec {
        precoder,
        decoder,
        powers,
        singular_values: dec.s[..streams].to_vec(),
    })
}

/// Relay transmit power `Tr E[x_R x_Rᴴ] = Σ (p_k/N_U) ‖W H_k D_k‖_F² + σ_R² ‖W‖_F²`.
pub fn relay_transmit_power(w: &CMatrix, channels: &ChannelSet, precoders: &[CMatrix], cfg: &SystemConfig) -> Result<f64> {
    let n_u = cfg.user_antennas as f64;
    let mut total = cfg.relay_noise_var * w.norm_fro_sq();
    for (k, d) in precoders.iter().enumerate() {
        let x = w.matmul(&channels.user(k).matmul(d)?)?;
        total += cfg.power(k) / n_u * x.norm_fro_sq();
    }
    Ok(total)
}

/// `α̃ = sqrt(P_R / Tr E[x_R x_Rᴴ])` for relay matrix `w`.
pub fn amplification_factor(w: &CMatrix, channels: &ChannelSet, precoders: &[CMatrix], cfg: &SystemConfig) -> Result<f64> {
    alpha_from_power(cfg.relay_power, relay_transmit_power(w, channels, precoders, cfg)?)
}

fn alpha_from_power(budget: f64, power: f64) -> Result<f64> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::Degenerate("relay transmit power is zero"));
    }
    Ok((budget / power).sqrt())
}

/// `ŝ = Q ỹ`.
pub fn decode(decoder: &CMatrix, received: &[C64]) -> Result<Vec<C64>> {
    Ok(decoder.mul_vec(received)?)
}

/// Products of the unscaled relay matrix `W̃` with every channel, computed
/// once per realization so the iteration only touches `N_U`-sized matrices.
#[derive(Debug, Clone)]
pub struct RelayCascade {
    /// `H_kᵀ W̃ (H_kᵀ W̃)ᴴ`.
    downlink_gram: Vec<CMatrix>,
    /// `W̃ H_k`.
    uplink: Vec<CMatrix>,
    /// `[rx][tx] = H_rxᵀ W̃ H_tx`.
    end_to_end: Vec<Vec<CMatrix>>,
    relay_fro_sq: f64,
}

impl RelayCascade {
    pub fn new(relay: &RelayDesign, channels: &ChannelSet) -> Result<Self> {
        let w = &relay.w_tilde;
        let users = channels.user_count();
        let mut downlink_gram = Vec::with_capacity(users);
        let mut uplink = Vec::with_capacity(users);
        let mut end_to_end = Vec::with_capacity(users);
        for k in 0..users {
            let a = channels.user(k).transpose().matmul(w)?;
            downlink_gram.push(a.matmul(&a.adjoint())?);
            uplink.push(w.matmul(channels.user(k))?);
            end_to_end.push(
                (0..users)
                    .map(|i| a.matmul(channels.user(i)))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        Ok(Self {
            downlink_gram,
            uplink,
            end_to_end,
            relay_fro_sq: w.norm_fro_sq(),
        })
    }

    pub fn users(&self) -> usize {
        self.uplink.len()
    }

    /// `H_rxᵀ W̃ H_tx`.
    pub fn link(&self, rx: usize, tx: usize) -> &CMatrix {
        &self.end_to_end[rx][tx]
    }

    /// `H_kᵀ W̃ W̃ᴴ H_k*`.
    pub fn downlink_gram(&self, k: usize) -> &CMatrix {
        &self.downlink_gram[k]
    }

    pub fn noise_covariance(&self, k: usize, alpha: f64, cfg: &SystemConfig) -> CMatrix {
        covariance_from_gram(&self.downlink_gram[k], alpha, cfg.relay_noise_var, cfg.user_noise_var)
    }

    /// Relay transmit power with `W = α W̃`.
    pub fn relay_power(&self, alpha: f64, precoders: &[CMatrix], cfg: &SystemConfig) -> Result<f64> {
        let n_u = cfg.user_antennas as f64;
        let mut total = cfg.relay_noise_var * self.relay_fro_sq;
        for (k, d) in precoders.iter().enumerate() {
            total += cfg.power(k) / n_u * self.uplink[k].matmul(d)?.norm_fro_sq();
        }
        Ok(alpha * alpha * total)
    }
}

/// Designs every user's codec for relay matrix `α W̃`.
pub fn design_user_codecs(cascade: &RelayCascade, alpha: f64, cfg: &SystemConfig) -> Result<UserCodecs> {
    let users = cascade.users();
    let mut precoders = vec![CMatrix::zeros(0, 0); users];
    let mut decoders = vec![CMatrix::zeros(0, 0); users];
    let mut whitening = vec![CMatrix::zeros(0, 0); users];
    let mut powers = vec![Vec::new(); users];
    for rx in 0..users {
        let tx = partner(rx);
        let k_w = whitening_filter(&cascade.noise_covariance(rx, alpha, cfg))?;
        let codec = design_codecs(cascade.link(rx, tx), &k_w, alpha, cfg.power(tx), cfg.streams)?;
        precoders[tx] = codec.precoder;
        powers[tx] = codec.powers;
        decoders[rx] = codec.decoder;
        whitening[rx] = k_w;
    }
    Ok(UserCodecs {
        precoders,
        decoders,
        whitening,
        powers,
    })
}

/// Joint computation of `α` and the user codecs.
///
/// Iteration `n` designs the codecs for `W^{(n-1)} = α^{(n-1)} W̃`, computes
/// `α̃^{(n)}` from the relay power those codecs induce under `W^{(n-1)}`, and
/// sets `α^{(n)} = α^{(n-1)} α̃^{(n)}`. Stops after `max_iterations` or once
/// `|α̃ − 1| < ALPHA_TOL`. Hitting the cap is reported through
/// `AlphaState::converged`, not as an error.
pub fn algorithm1(cfg: &SystemConfig, channels: &ChannelSet, relay: &RelayDesign) -> Result<(AlphaState, UserCodecs)> {
    let cascade = RelayCascade::new(relay, channels)?;
    iterate_alpha(cfg, &cascade, relay.alpha)
}

/// [`algorithm1`] on a precomputed cascade, starting from `alpha0`.
pub fn iterate_alpha(cfg: &SystemConfig, cascade: &RelayCascade, alpha0: f64) -> Result<(AlphaState, UserCodecs)> {
    let mut alpha = alpha0;
    let mut history = Vec::with_capacity(cfg.max_iterations);
    let mut converged = false;
    let mut codecs = None;
    for _ in 0..cfg.max_iterations {
        let next = design_user_codecs(cascade, alpha, cfg)?;
        let power = cascade.relay_power(alpha, &next.precoders, cfg)?;
        let step = alpha_from_power(cfg.relay_power, power)?;
        alpha *= step;
        history.push(step);
        codecs = Some(next);
        if (step - 1.0).abs() < ALPHA_TOL {
            converged = true;
            break;
        }
    }
    let codecs = codecs.ok_or(Error::Degenerate("max_iterations is zero"))?;
    Ok((
        AlphaState {
            alpha,
            iterations: history.len(),
            converged,
            history,
        },
        codecs,
    ))
}
