//! Scenario configuration and i.i.d. Rayleigh channel generation.
//!
//! Users are indexed `0..2K`; pair `m` (0-based) is users `(2m, 2m + 1)`.
//! Channels are reciprocal: only the uplink `H_k` (`N_R × N_U`) is stored and
//! the downlink of user `k` is `H_kᵀ`.
//!
//! Data symbols are assumed to have unit covariance, `E[s_k s_kᴴ] = I`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

/// Transmit power of the users: one value shared by all, or one per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UserPower {
    Shared(f64),
    PerUser(Vec<f64>),
}

impl UserPower {
    pub fn of(&self, user: usize) -> f64 {
        match self {
            UserPower::Shared(p) => *p,
            UserPower::PerUser(p) => p[user],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of user pairs `K`.
    pub pairs: usize,
    /// Antennas per user `N_U`.
    pub user_antennas: usize,
    /// Data streams per user `M_D`.
    pub streams: usize,
    /// Relay antennas `N_R`.
    pub relay_antennas: usize,
    /// Relay RF chains `M_R` of the hybrid relay.
    pub rf_chains: usize,
    /// Linear transmit power `p_k`.
    pub user_power: UserPower,
    /// Linear relay power budget `P_R`.
    pub relay_power: f64,
    /// Relay noise variance `σ_R²`.
    pub relay_noise_var: f64,
    /// User noise variance `σ_k²`.
    pub user_noise_var: f64,
    /// ANOMAX weight `β`.
    pub beta: f64,
    /// Iteration cap of the amplification-factor loop.
    pub max_iterations: usize,
    pub seed: u64,
}

impl SystemConfig {
    /// Reference setup: unit noise variances, `P_R = p_k = 10^(snr_db/10)`,
    /// `β = 0.5`, `M_R = 2KN_U`, 20 iterations, seed 0.
    pub fn from_snr_db(
        snr_db: f64,
        pairs: usize,
        user_antennas: usize,
        streams: usize,
        relay_antennas: usize,
    ) -> Self {
        let p = db_to_linear(snr_db);
        Self {
            pairs,
            user_antennas,
            streams,
            relay_antennas,
            rf_chains: 2 * pairs * user_antennas,
            user_power: UserPower::Shared(p),
            relay_power: p,
            relay_noise_var: 1.0,
            user_noise_var: 1.0,
            beta: 0.5,
            max_iterations: 20,
            seed: 0,
        }
    }

    /// Sets `P_R = p_k = 10^(snr_db/10)`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        let p = db_to_linear(snr_db);
        self.user_power = UserPower::Shared(p);
        self.relay_power = p;
        self
    }

    pub fn users(&self) -> usize {
        2 * self.pairs
    }

    /// Total user antennas `2KN_U`.
    pub fn total_user_antennas(&self) -> usize {
        2 * self.pairs * self.user_antennas
    }

    pub fn power(&self, user: usize) -> f64 {
        self.user_power.of(user)
    }

    /// Every violated invariant, in a fixed order.
    pub fn validate(&self) -> std::result::Result<(), Vec<ConfigIssue>> {
        let mut issues = Vec::new();
        if self.pairs == 0 {
            issues.push(ConfigIssue::NoPairs);
        }
        if self.user_antennas == 0 {
            issues.push(ConfigIssue::NoUserAntennas);
        }
        if self.streams == 0 {
            issues.push(ConfigIssue::NoStreams);
        }
        if self.streams > self.user_antennas {
            issues.push(ConfigIssue::StreamsExceedAntennas {
                streams: self.streams,
                user_antennas: self.user_antennas,
            });
        }
        let required = self.total_user_antennas();
        if self.rf_chains != required {
            issues.push(ConfigIssue::RfChainMismatch {
                rf_chains: self.rf_chains,
                required,
            });
        }
        if self.relay_antennas < self.rf_chains.max(required) {
            issues.push(ConfigIssue::TooFewRelayAntennas {
                relay_antennas: self.relay_antennas,
                rf_chains: self.rf_chains.max(required),
            });
        }
        match &self.user_power {
            UserPower::Shared(p) => check_positive(&mut issues, "user_power", *p),
            UserPower::PerUser(ps) => {
                if ps.len() != self.users() {
                    issues.push(ConfigIssue::PowerCount {
                        given: ps.len(),
                        users: self.users(),
                    });
                }
                for p in ps {
                    check_positive(&mut issues, "user_power", *p);
                }
            }
        }
        check_positive(&mut issues, "relay_power", self.relay_power);
        check_positive(&mut issues, "relay_noise_var", self.relay_noise_var);
        check_positive(&mut issues, "user_noise_var", self.user_noise_var);
        if !(0.0..=1.0).contains(&self.beta) {
            issues.push(ConfigIssue::BetaOutOfRange(self.beta));
        }
        if self.max_iterations == 0 {
            issues.push(ConfigIssue::NoIterations);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn validated(self) -> Result<Self> {
        self.validate().map_err(Error::Config)?;
        Ok(self)
    }
}

fn check_positive(issues: &mut Vec<ConfigIssue>, field: &'static str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        issues.push(ConfigIssue::NotPositive { field, value });
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigIssue {
    NoPairs,
    NoUserAntennas,
    NoStreams,
    StreamsExceedAntennas { streams: usize, user_antennas: usize },
    RfChainMismatch { rf_chains: usize, required: usize },
    TooFewRelayAntennas { relay_antennas: usize, rf_chains: usize },
    PowerCount { given: usize, users: usize },
    NotPositive { field: &'static str, value: f64 },
    BetaOutOfRange(f64),
    NoIterations,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigIssue::NoPairs => write!(f, "K must be at least 1"),
            ConfigIssue::NoUserAntennas => write!(f, "N_U must be at least 1"),
            ConfigIssue::NoStreams => write!(f, "M_D must be at least 1"),
            ConfigIssue::StreamsExceedAntennas { streams, user_antennas } => {
                write!(f, "M_D exceeds N_U ({streams} > {user_antennas})")
            }
            ConfigIssue::RfChainMismatch { rf_chains, required } => write!(
                f,
                "M_R must equal 2KN_U={required} for hybrid mode (got {rf_chains})"
            ),
            ConfigIssue::TooFewRelayAntennas { relay_antennas, rf_chains } => {
                write!(f, "N_R={relay_antennas} is below M_R={rf_chains}")
            }
            ConfigIssue::PowerCount { given, users } => {
                write!(f, "{given} user powers given for {users} users")
            }
            ConfigIssue::NotPositive { field, value } => {
                write!(f, "{field} must be positive and finite (got {value})")
            }
            ConfigIssue::BetaOutOfRange(b) => write!(f, "beta must lie in [0, 1] (got {b})"),
            ConfigIssue::NoIterations => write!(f, "max_iterations must be at least 1"),
        }
    }
}

/// Uplink channels `H_k` of all users and their concatenation `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    users: Vec<CMatrix>,
    stacked: CMatrix,
}

impl ChannelSet {
    pub fn from_users(users: Vec<CMatrix>) -> Result<Self> {
        let refs: Vec<&CMatrix> = users.iter().collect();
        let shape = users.first().map(CMatrix::shape);
        if users.is_empty() || !users.len().is_multiple_of(2) || users.iter().any(|h| Some(h.shape()) != shape) {
            return Err(Error::Scenario(
                "channel set needs an even, non-zero number of equally shaped matrices".into(),
            ));
        }
        let stacked = CMatrix::hcat(&refs)?;
        Ok(Self { users, stacked })
    }

    /// `H_k`, `N_R × N_U`.
    pub fn user(&self, k: usize) -> &CMatrix {
        &self.users[k]
    }

    pub fn users(&self) -> &[CMatrix] {
        &self.users
    }

    /// `H = [H_1, …, H_2K]`.
    pub fn stacked(&self) -> &CMatrix {
        &self.stacked
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn relay_antennas(&self) -> usize {
        self.stacked.rows()
    }

    pub fn user_antennas(&self) -> usize {
        self.users[0].cols()
    }

    /// SHA-256 over the raw bits of every entry.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for j in 0..self.stacked.cols() {
            for z in self.stacked.column(j) {
                hasher.update(z.re.to_bits().to_le_bytes());
                hasher.update(z.im.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// Partner of user `k` within its pair.
#[inline]
pub fn partner(k: usize) -> usize {
    k ^ 1
}

/// Random stream for `(seed, stream)`. Streams are independent ChaCha
/// keystreams, so any stream can be generated without touching the others.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One `CN(0, 1)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// i.i.d. `CN(0, 1)` channels for realization `realization` of `cfg.seed`.
pub fn draw_channels(cfg: &SystemConfig, realization: u64) -> ChannelSet {
    let mut rng = stream_rng(cfg.seed, realization);
    draw_channels_with(cfg, &mut rng)
}

pub fn draw_channels_with<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelSet {
    let (nr, nu) = (cfg.relay_antennas, cfg.user_antennas);
    let users: Vec<CMatrix> = (0..cfg.users())
        .map(|_| CMatrix::from_fn(nr, nu, |_, _| complex_normal(rng)))
        .collect();
    ChannelSet::from_users(users).expect("generated channels have consistent shapes")
}
