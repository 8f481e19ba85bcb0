//! Relay beamforming chain `W = α F_t B_t T B_r F_r`.
//!
//! The hybrid relay has `M_R = 2KN_U` RF chains. Its analog stage is an
//! equal-gain combiner, its digital stage block-diagonalizes the composite
//! channel so that each pair only sees its own channels, and the
//! block-diagonal `T` picks each pair's amplification matrix with ANOMAX.
//!
//! The full-RF-chain baseline (`RelayMode::FullRf`) uses `F_r = I_{N_R}`. Its
//! per-pair null space is larger than `2N_U`, so the digital rows are the
//! dominant directions of the pair's own channels inside that null space.
//! This construction of the baseline is our own choice; the literature the
//! design comes from does not pin it down.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::{kron, svd, svd_thin, tol, unvec, CMatrix, C64};
use crate::model::{ChannelSet, SystemConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayMode {
    Hybrid,
    FullRf,
}

impl RelayMode {
    pub const ALL: [RelayMode; 2] = [RelayMode::Hybrid, RelayMode::FullRf];

    pub fn as_str(self) -> &'static str {
        match self {
            RelayMode::Hybrid => "hybrid",
            RelayMode::FullRf => "full_rf",
        }
    }
}

impl fmt::Display for RelayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelayMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "hybrid" | "hpr" => Ok(RelayMode::Hybrid),
            "full_rf" | "frr" => Ok(RelayMode::FullRf),
            other => Err(format!("unknown relay mode `{other}` (expected hybrid or full_rf)")),
        }
    }
}

/// Assembled relay processing chain. `alpha` is the amplification factor the
/// chain was assembled with; [`RelayDesign::w`] applies it.
#[derive(Debug, Clone)]
pub struct RelayDesign {
    pub mode: RelayMode,
    /// `M_R × N_R` receive analog beamformer (`I_{N_R}` for the baseline).
    pub f_r: CMatrix,
    /// `F_rᵀ`.
    pub f_t: CMatrix,
    /// `2KN_U × M_R`, row-stacked per-pair blocks `B_rm`.
    pub b_r: CMatrix,
    /// `B_rᵀ`.
    pub b_t: CMatrix,
    /// Block-diagonal `2KN_U × 2KN_U` amplification matrix.
    pub t: CMatrix,
    pub alpha: f64,
    /// `F_t B_t T B_r F_r`.
    pub w_tilde: CMatrix,
    pair_size: usize,
}

impl RelayDesign {
    /// `α · W̃`.
    pub fn w(&self) -> CMatrix {
        self.w_tilde.scale_re(self.alpha)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn pairs(&self) -> usize {
        self.b_r.rows() / self.pair_size
    }

    /// `B_rm` of pair `m`.
    pub fn b_rm(&self, m: usize) -> CMatrix {
        self.b_r.row_block(m * self.pair_size, self.pair_size)
    }

    /// `T_m` of pair `m`.
    pub fn t_m(&self, m: usize) -> CMatrix {
        let s = self.pair_size;
        self.t.block(m * s, m * s, s, s)
    }
}

/// Equal-gain-combining analog beamformer: `[F_r]_{i,j} = e^{jψ_{i,j}}/√N_R`
/// with `ψ_{i,j}` the phase of `[Hᴴ]_{i,j}`. A zero entry gets phase 0.
pub fn egc_receive_beamformer(h: &CMatrix) -> CMatrix {
    let (n_r, m_r) = h.shape();
    let amp = 1.0 / (n_r as f64).sqrt();
    CMatrix::from_fn(m_r, n_r, |i, j| {
        let z = h[(j, i)].conj();
        let phase = if z.re == 0.0 && z.im == 0.0 { 0.0 } else { z.arg() };
        C64::from_polar(amp, phase)
    })
}

/// `H_E = F_r H` and the per-user column blocks `H̃_k = F_r H_k`.
pub fn composite_channel(f_r: &CMatrix, channels: &ChannelSet) -> Result<(CMatrix, Vec<CMatrix>)> {
    let h_e = f_r.matmul(channels.stacked())?;
    let n_u = channels.user_antennas();
    let per_user = (0..channels.user_count())
        .map(|k| h_e.columns(k * n_u, n_u))
        .collect();
    Ok((h_e, per_user))
}

/// `H̄_m`: the composite channel with pair `m`'s columns removed.
fn other_pairs(h_e: &CMatrix, pair: usize, user_antennas: usize) -> Result<CMatrix> {
    let width = 2 * user_antennas;
    let pairs = h_e.cols() / width;
    let before = h_e.columns(0, pair * width);
    let after = h_e.columns((pair + 1) * width, (pairs - pair - 1) * width);
    Ok(CMatrix::hcat(&[&before, &after])?)
}

/// Block-diagonalizing receive precoder of pair `m` for the hybrid relay.
///
/// The rows are the conjugated trailing `2N_U` left singular vectors of
/// `H̄_m` taken from a full SVD, i.e. an orthonormal basis of its left null
/// space. Requires `rows(H_E) == cols(H_E) == 2KN_U`.
pub fn bd_receive_precoder(h_e: &CMatrix, pair: usize, user_antennas: usize) -> Result<CMatrix> {
    let width = 2 * user_antennas;
    let m_r = h_e.rows();
    if !h_e.cols().is_multiple_of(width) || pair >= h_e.cols() / width {
        return Err(Error::Scenario(format!(
            "pair {pair} out of range for a composite channel with {} columns",
            h_e.cols()
        )));
    }
    if h_e.cols() == width {
        // Single pair: nothing to null.
        return Ok(CMatrix::identity(m_r).row_block(0, width.min(m_r)));
    }
    let h_bar = other_pairs(h_e, pair, user_antennas)?;
    let dec = svd(&h_bar)?;
    let rank = numerical_rank(&dec.s, h_bar.rows(), h_bar.cols());
    let null_dim = m_r - rank;
    if null_dim != width {
        return Err(Error::DegenerateChannel {
            pair,
            null_dim,
            expected: width,
        });
    }
    Ok(dec.u.columns(m_r - width, width).adjoint())
}

/// Receive precoder of pair `m` for the full-RF-chain baseline.
///
/// With `N` an orthonormal basis of the left null space of `H̄_m`, the rows
/// are `(N U_top)ᴴ` where `U_top` are the `2N_U` dominant left singular
/// vectors of `Nᴴ [H_{2m-1}, H_{2m}]`. Since `N Nᴴ` is the projector onto the
/// null space, `N U_top` equals the dominant left singular vectors of
/// `(I - Ū Ūᴴ)[H_{2m-1}, H_{2m}]`, which is what is computed here (`Ū` spans
/// the column space of `H̄_m`).
pub fn bd_receive_precoder_full_rf(h_e: &CMatrix, pair: usize, user_antennas: usize) -> Result<CMatrix> {
    let width = 2 * user_antennas;
    let n = h_e.rows();
    let pair_cols = h_e.columns(pair * width, width);
    let projected = if h_e.cols() == width {
        pair_cols
    } else {
        let h_bar = other_pairs(h_e, pair, user_antennas)?;
        let dec = svd_thin(&h_bar)?;
        let rank = numerical_rank(&dec.s, h_bar.rows(), h_bar.cols());
        let null_dim = n - rank;
        if rank < h_bar.cols() || null_dim < width {
            return Err(Error::DegenerateChannel {
                pair,
                null_dim,
                expected: width,
            });
        }
        let u_bar = dec.u.columns(0, rank);
        // Two projection passes keep the result orthogonal to Ū to working precision.
        let mut p = pair_cols;
        for _ in 0..2 {
            let coeff = u_bar.adjoint_mul(&p)?;
            p = &p - &(&u_bar * &coeff);
        }
        p
    };
    let dec = svd_thin(&projected)?;
    if numerical_rank(&dec.s, projected.rows(), projected.cols()) < width {
        return Err(Error::DegenerateChannel {
            pair,
            null_dim: n - (h_e.cols() - width),
            expected: width,
        });
    }
    Ok(dec.u.columns(0, width).adjoint())
}

fn numerical_rank(s: &[f64], rows: usize, cols: usize) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    let t = tol::rank_tol(rows, cols, smax);
    s.iter().filter(|&&x| x > t).count()
}

/// Row-stacks the per-pair blocks into `B_r` and returns `(B_r, B_rᵀ)`.
pub fn assemble_digital(blocks: &[CMatrix]) -> Result<(CMatrix, CMatrix)> {
    let refs: Vec<&CMatrix> = blocks.iter().collect();
    let b_r = CMatrix::vcat(&refs)?;
    let b_t = b_r.transpose();
    Ok((b_r, b_t))
}

/// `L_βm = [β (B_rm H̃_b) ⊗ (B_tmᵀ H̃_a), (1-β) (B_rm H̃_a) ⊗ (B_tmᵀ H̃_b)]`
/// for the pair `(a, b) = (2m-1, 2m)`.
pub fn anomax_matrix(b_rm: &CMatrix, b_tm: &CMatrix, h_a: &CMatrix, h_b: &CMatrix, beta: f64) -> Result<CMatrix> {
    let b_tm_t = b_tm.transpose();
    let rx_b = b_rm.matmul(h_b)?;
    let tx_a = b_tm_t.matmul(h_a)?;
    let rx_a = b_rm.matmul(h_a)?;
    let tx_b = b_tm_t.matmul(h_b)?;
    let left = kron(&rx_b, &tx_a).scale_re(beta);
    let right = kron(&rx_a, &tx_b).scale_re(1.0 - beta);
    Ok(CMatrix::hcat(&[&left, &right])?)
}

/// ANOMAX amplification matrix of one pair: the unvectorized conjugate of the
/// dominant left singular vector of [`anomax_matrix`]. Has unit Frobenius norm.
pub fn anomax_pair_matrix(b_rm: &CMatrix, b_tm: &CMatrix, h_a: &CMatrix, h_b: &CMatrix, beta: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Scenario(format!("beta {beta} outside [0, 1]")));
    }
    let l = anomax_matrix(b_rm, b_tm, h_a, h_b, beta)?;
    let dec = svd_thin(&l)?;
    if dec.s.first().is_none_or(|&s| s == 0.0) {
        return Err(Error::Degenerate("ANOMAX matrix is zero"));
    }
    let side = b_rm.rows();
    let t: Vec<C64> = dec.u.column(0).iter().map(|z| z.conj()).collect();
    Ok(unvec(&t, side, side)?)
}

/// ANOMAX objective `sqrt(β²‖H_{a,b}‖_F² + (1-β)²‖H_{b,a}‖_F²)` at `T_m`,
/// where `H_{a,b} = H̃_aᵀ B_tm T_m B_rm H̃_b`.
pub fn anomax_objective(
    b_rm: &CMatrix,
    b_tm: &CMatrix,
    t_m: &CMatrix,
    h_a: &CMatrix,
    h_b: &CMatrix,
    beta: f64,
) -> Result<f64> {
    let ab = effective_pair_channel(h_a, h_b, b_tm, t_m, b_rm)?;
    let ba = effective_pair_channel(h_b, h_a, b_tm, t_m, b_rm)?;
    Ok((beta * beta * ab.norm_fro_sq() + (1.0 - beta) * (1.0 - beta) * ba.norm_fro_sq()).sqrt())
}

/// `H̃_aᵀ B_tm T_m B_rm H̃_b`: channel from user `b` to user `a` through the
/// pair's digital chain.
pub fn effective_pair_channel(h_a: &CMatrix, h_b: &CMatrix, b_tm: &CMatrix, t_m: &CMatrix, b_rm: &CMatrix) -> Result<CMatrix> {
    let right = t_m.matmul(&b_rm.matmul(h_b)?)?;
    let left = h_a.transpose().matmul(b_tm)?;
    Ok(left.matmul(&right)?)
}

/// `W̃ = F_rᵀ B_rᵀ T B_r F_r` with `α = 1`.
pub fn assemble_relay(f_r: CMatrix, b_r: CMatrix, t: CMatrix, mode: RelayMode, user_antennas: usize) -> Result<RelayDesign> {
    let f_t = f_r.transpose();
    let b_t = b_r.transpose();
    // Right to left keeps the products narrow: B_r F_r is 2KN_U × N_R.
    let bf = b_r.matmul(&f_r)?;
    let core = t.matmul(&bf)?;
    let w_tilde = bf.transpose().matmul(&core)?;
    Ok(RelayDesign {
        mode,
        f_r,
        f_t,
        b_r,
        b_t,
        t,
        alpha: 1.0,
        w_tilde,
        pair_size: 2 * user_antennas,
    })
}

/// Full relay construction for one channel realization.
pub fn design_relay(cfg: &SystemConfig, channels: &ChannelSet, mode: RelayMode) -> Result<RelayDesign> {
    let n_u = cfg.user_antennas;
    let f_r = match mode {
        RelayMode::Hybrid => egc_receive_beamformer(channels.stacked()),
        RelayMode::FullRf => CMatrix::identity(channels.relay_antennas()),
    };
    let (h_e, composite) = composite_channel(&f_r, channels)?;
    let blocks = (0..cfg.pairs)
        .map(|m| match mode {
            RelayMode::Hybrid => bd_receive_precoder(&h_e, m, n_u),
            RelayMode::FullRf => bd_receive_precoder_full_rf(&h_e, m, n_u),
        })
        .collect::<Result<Vec<_>>>()?;
    let t_blocks = blocks
        .iter()
        .enumerate()
        .map(|(m, b_rm)| {
            let b_tm = b_rm.transpose();
            anomax_pair_matrix(b_rm, &b_tm, &composite[2 * m], &composite[2 * m + 1], cfg.beta)
        })
        .collect::<Result<Vec<_>>>()?;
    let (b_r, _) = assemble_digital(&blocks)?;
    assemble_relay(f_r, b_r, CMatrix::block_diag(&t_blocks), mode, n_u)
}

/// Largest `‖B_rm F_r H_j‖_F / ‖H_j‖_F` over pairs `m` and users `j` outside
/// pair `m`.
pub fn max_interpair_leakage(design: &RelayDesign, channels: &ChannelSet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for m in 0..design.pairs() {
        let bf = design.b_rm(m).matmul(&design.f_r)?;
        for j in (0..channels.user_count()).filter(|&j| j / 2 != m) {
            let h = channels.user(j);
            let leak = bf.matmul(h)?.norm_fro() / h.norm_fro();
            worst = worst.max(leak);
        }
    }
    Ok(worst)
}
