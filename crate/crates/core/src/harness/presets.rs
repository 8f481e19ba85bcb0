//! Built-in scenario grids.
//!
//! Each preset is a list of single-sweep scenarios, one per curve:
//!
//! * `fig2`: SE vs SNR, `K = 4`, `N_U = M_D = 2`, one curve per
//!   `N_R ∈ {32, 64, 128}`.
//! * `fig3`: SE vs `N_R`, `K = 4`, 20 dB, one curve per `N_U = M_D ∈ {2, 4, 8}`.
//! * `fig4`: SE vs `K ∈ 2..=8`, `N_R = 64`, `N_U = M_D = 2`, one curve per
//!   SNR `∈ {10, 20}` dB.
//! * `fig5`: SE vs SNR, `N_R = 64`, `K = 4`, `N_U = 4`, one curve per
//!   `M_D ∈ {1, 2, 4}`.
//!
//! The relay-antenna counts of `fig2`/`fig3` and all SNR grids are our own
//! reconstruction of the described experiments, not published values.

use super::{Scenario, Sweep, SweepVar, DEFAULT_REALIZATIONS};
use crate::model::SystemConfig;
use crate::relay_design::RelayMode;

pub const PRESETS: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];
pub const SNR_GRID_DB: [f64; 4] = [0.0, 10.0, 20.0, 30.0];

fn scenario(name: String, base: SystemConfig, var: SweepVar, values: Vec<f64>) -> Scenario {
    Scenario {
        name,
        base,
        sweep: Sweep { var, values },
        realizations: DEFAULT_REALIZATIONS,
        modes: RelayMode::ALL.to_vec(),
    }
}

pub fn fig2() -> Vec<Scenario> {
    [32, 64, 128]
        .into_iter()
        .map(|n_r| {
            scenario(
                format!("fig2_nr{n_r}"),
                SystemConfig::from_snr_db(0.0, 4, 2, 2, n_r),
                SweepVar::SnrDb,
                SNR_GRID_DB.to_vec(),
            )
        })
        .collect()
}

pub fn fig3() -> Vec<Scenario> {
    [2, 4, 8]
        .into_iter()
        .map(|n_u| {
            scenario(
                format!("fig3_nu{n_u}"),
                SystemConfig::from_snr_db(20.0, 4, n_u, n_u, 128),
                SweepVar::RelayAntennas,
                vec![64.0, 96.0, 128.0, 192.0, 256.0],
            )
        })
        .collect()
}

pub fn fig4() -> Vec<Scenario> {
    [10.0, 20.0]
        .into_iter()
        .map(|snr| {
            scenario(
                format!("fig4_snr{snr}"),
                SystemConfig::from_snr_db(snr, 2, 2, 2, 64),
                SweepVar::Pairs,
                (2..=8).map(f64::from).collect(),
            )
        })
        .collect()
}

pub fn fig5() -> Vec<Scenario> {
    [1, 2, 4]
        .into_iter()
        .map(|m_d| {
            scenario(
                format!("fig5_md{m_d}"),
                SystemConfig::from_snr_db(0.0, 4, 4, m_d, 64),
                SweepVar::SnrDb,
                SNR_GRID_DB.to_vec(),
            )
        })
        .collect()
}

pub fn preset(name: &str) -> Option<Vec<Scenario>> {
    match name {
        "fig2" => Some(fig2()),
        "fig3" => Some(fig3()),
        "fig4" => Some(fig4()),
        "fig5" => Some(fig5()),
        _ => None,
    }
}
