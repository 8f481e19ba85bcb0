//! Runtime invariant suite behind `relaysim check --invariants`.

use crate::linalg::{svd_thin, CMatrix};
use crate::model::{draw_channels, partner, stream_rng, SystemConfig};
use crate::relay_design::{anomax_matrix, anomax_objective, design_relay, max_interpair_leakage, RelayMode};
use crate::terminal_design::{iterate_alpha, RelayCascade};
use crate::metrics::all_users_se;
use crate::Result;

use super::signal::{signal_path_check, SignalOptions};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub limit: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst <= self.limit
    }
}

struct Tracker(Vec<CheckOutcome>);

impl Tracker {
    fn record(&mut self, name: &'static str, limit: f64, value: f64) {
        match self.0.iter_mut().find(|c| c.name == name) {
            Some(c) => c.worst = c.worst.max(if value.is_nan() { f64::INFINITY } else { value }),
            None => self.0.push(CheckOutcome {
                name,
                worst: if value.is_nan() { f64::INFINITY } else { value },
                limit,
            }),
        }
    }
}

/// Runs every structural invariant on `realizations` channel draws of `cfg`
/// in both relay modes and returns the worst observed value per check.
pub fn run_invariant_suite(cfg: &SystemConfig, realizations: u64) -> Result<Vec<CheckOutcome>> {
    let mut t = Tracker(Vec::new());
    let n_u = cfg.user_antennas;
    for r in 0..realizations {
        let channels = draw_channels(cfg, r);
        for mode in RelayMode::ALL {
            let relay = design_relay(cfg, &channels, mode)?;
            if mode == RelayMode::Hybrid {
                let target = 1.0 / (cfg.relay_antennas as f64).sqrt();
                let dev = (0..relay.f_r.rows())
                    .flat_map(|i| (0..relay.f_r.cols()).map(move |j| (i, j)))
                    .map(|(i, j)| (relay.f_r[(i, j)].norm() - target).abs())
                    .fold(0.0, f64::max);
                t.record("constant modulus |F_r| = 1/sqrt(N_R)", 1e-15, dev);
            }
            t.record("inter-pair leakage", 1e-9, max_interpair_leakage(&relay, &channels)?);

            for m in 0..cfg.pairs {
                let b_rm = relay.b_rm(m);
                let b_tm = b_rm.transpose();
                let h_a = relay.f_r.matmul(channels.user(2 * m))?;
                let h_b = relay.f_r.matmul(channels.user(2 * m + 1))?;
                let l = anomax_matrix(&b_rm, &b_tm, &h_a, &h_b, cfg.beta)?;
                let smax = svd_thin(&l)?.s[0];
                let obj = anomax_objective(&b_rm, &b_tm, &relay.t_m(m), &h_a, &h_b, cfg.beta)?;
                t.record("ANOMAX objective = sigma_max(L)", 1e-9, (obj - smax).abs() / smax);
                t.record("||T_m||_F = 1", 1e-12, (relay.t_m(m).norm_fro() - 1.0).abs());
            }

            let cascade = RelayCascade::new(&relay, &channels)?;
            let (state, codecs) = iterate_alpha(cfg, &cascade, relay.alpha)?;
            let power = cascade.relay_power(state.alpha, &codecs.precoders, cfg)?;
            t.record("relay power = P_R", 1e-5, (power / cfg.relay_power - 1.0).abs());
            for k in 0..channels.user_count() {
                let trace = codecs.precoders[k].norm_fro_sq();
                t.record("user power trace(D D^H) <= N_U", 1e-9, trace - n_u as f64);

                // Whitening was designed with the previous iterate; check it
                // against the covariance it was built from.
                let alpha_prev = state.alpha / state.history.last().copied().unwrap_or(1.0);
                let k_z = cascade.noise_covariance(k, alpha_prev, cfg);
                let k_w = &codecs.whitening[k];
                let white = &(k_w * &k_z) * &k_w.adjoint();
                t.record("whitening K_w K_z K_w^H = I", 1e-8, (&white - &CMatrix::identity(n_u)).norm_fro());

                let eff = &(&codecs.decoders[k] * cascade.link(k, partner(k))) * &codecs.precoders[partner(k)];
                let (mut diag, mut off) = (0.0, 0.0);
                for i in 0..eff.rows() {
                    for j in 0..eff.cols() {
                        if i == j {
                            diag += eff[(i, j)].norm_sqr();
                        } else {
                            off += eff[(i, j)].norm_sqr();
                        }
                    }
                }
                t.record("post-codec off-diagonal leakage", 1e-8, if diag > 0.0 { (off / diag).sqrt() } else { 0.0 });
            }
            let rates = all_users_se(&cascade, state.alpha, &codecs, cfg)?;
            let negative = rates.iter().map(|r| -r.value).fold(0.0, f64::max);
            t.record("per-user SE >= 0", 0.0, negative);

            let final_relay = relay.clone().with_alpha(state.alpha);
            let mut rng = stream_rng(cfg.seed ^ 0x5157_4e41_4c00, r);
            let opts = SignalOptions {
                symbols: 4,
                noise: false,
                silent: false,
            };
            let report = signal_path_check(cfg, &channels, &final_relay, &codecs, opts, &mut rng)?;
            t.record("noiseless self-interference residual", 1e-8, report.max_self_ratio());
            t.record("noiseless inter-pair interference", 1e-8, report.max_interpair_ratio());
        }
    }
    Ok(t.0)
}
