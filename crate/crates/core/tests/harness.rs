use std::process::Command;

use hbd_relay::harness::output::{emit_results, load_manifest, load_scenarios, read_csv, CSV_HEADER};
use hbd_relay::harness::signal::{signal_path_check, SignalOptions};
use hbd_relay::harness::*;
use hbd_relay::model::{draw_channels, stream_rng, SystemConfig};
use hbd_relay::relay_design::{design_relay, RelayMode};
use hbd_relay::terminal_design::algorithm1;

fn small(name: &str) -> Scenario {
    Scenario {
        name: name.into(),
        base: SystemConfig::from_snr_db(10.0, 2, 2, 2, 16),
        sweep: Sweep {
            var: SweepVar::SnrDb,
            values: vec![0.0, 10.0, 20.0],
        },
        realizations: 12,
        modes: RelayMode::ALL.to_vec(),
    }
}

#[test]
fn realizations_are_deterministic() {
    let cfg = SystemConfig::from_snr_db(10.0, 2, 2, 2, 16);
    let a = run_realization(&cfg, RelayMode::Hybrid, 7).unwrap();
    let b = run_realization(&cfg, RelayMode::Hybrid, 7).unwrap();
    assert_eq!(a, b);
    let c = run_realization(&cfg, RelayMode::Hybrid, 8).unwrap();
    assert_ne!(a.sum_se, c.sum_se);
}

#[test]
fn modes_share_channel_draws() {
    let cfg = SystemConfig::from_snr_db(10.0, 4, 2, 2, 64);
    for r in 0..5 {
        let a = draw_channels(&cfg, realization_stream(r, 0));
        let b = draw_channels(&cfg, r);
        assert_eq!(a.fingerprint(), b.fingerprint());
        // A different SNR point reuses the same fading.
        let c = draw_channels(&cfg.clone().with_snr_db(30.0), r);
        assert_eq!(a.fingerprint(), c.fingerprint());
    }
    assert_ne!(
        draw_channels(&cfg, realization_stream(0, 1)).fingerprint(),
        draw_channels(&cfg, 0).fingerprint()
    );
}

#[test]
fn sweep_is_identical_for_any_worker_count() {
    let s = small("w");
    let one = run_sweep_with_workers(&s, 1).unwrap();
    let three = run_sweep_with_workers(&s, 3).unwrap();
    assert_eq!(one, three);
    let row = one.row(10.0, RelayMode::FullRf).unwrap();
    assert_eq!(row.n, 12);
    assert!(row.stderr > 0.0 && row.mean_leakage < 1e-9);
}

#[test]
fn full_rf_wins_most_paired_comparisons() {
    let cfg = SystemConfig::from_snr_db(20.0, 4, 2, 2, 64);
    let n = 200;
    let mut wins = 0;
    for r in 0..n {
        let ch = draw_channels(&cfg, r);
        let h = run_on_channels(&cfg, &ch, RelayMode::Hybrid, r).unwrap();
        let f = run_on_channels(&cfg, &ch, RelayMode::FullRf, r).unwrap();
        wins += (f.sum_se >= h.sum_se) as usize;
    }
    assert!(wins as f64 >= 0.9 * n as f64, "{wins}/{n}");
}

fn signal_report(cfg: &SystemConfig, mode: RelayMode, opts: SignalOptions) -> hbd_relay::harness::signal::SignalReport {
    let ch = draw_channels(cfg, 2);
    let relay = design_relay(cfg, &ch, mode).unwrap();
    let (state, codecs) = algorithm1(cfg, &ch, &relay).unwrap();
    let relay = relay.with_alpha(state.alpha);
    signal_path_check(cfg, &ch, &relay, &codecs, opts, &mut stream_rng(1, 1)).unwrap()
}

#[test]
fn noiseless_signal_is_interference_free() {
    let cfg = SystemConfig::from_snr_db(20.0, 4, 2, 2, 64);
    for mode in RelayMode::ALL {
        let opts = SignalOptions { symbols: 16, noise: false, silent: false };
        let rep = signal_report(&cfg, mode, opts);
        assert!(rep.max_self_ratio() <= 1e-8);
        assert!(rep.max_interpair_ratio() <= 1e-8);
        assert!(rep.max_residual_ratio() <= 1e-8);
    }
}

#[test]
fn noisy_received_power_matches_prediction() {
    let cfg = SystemConfig::from_snr_db(10.0, 2, 2, 2, 16);
    let opts = SignalOptions { symbols: 20_000, noise: true, silent: false };
    let rep = signal_report(&cfg, RelayMode::Hybrid, opts);
    assert!(rep.max_power_mismatch() < 0.05, "{}", rep.max_power_mismatch());
}

#[test]
fn silent_users_receive_nothing_without_noise() {
    let cfg = SystemConfig::from_snr_db(10.0, 2, 2, 2, 16);
    let opts = SignalOptions { symbols: 4, noise: false, silent: true };
    let rep = signal_report(&cfg, RelayMode::FullRf, opts);
    assert!(rep.users.iter().all(|u| u.received == 0.0 && u.desired == 0.0));
}

#[test]
fn csv_manifest_and_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = small("files");
    let res = run_sweep(&s).unwrap();
    let files = emit_results(&s, &res, dir.path()).unwrap();
    let text = std::fs::read_to_string(&files.csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(read_csv(&files.csv).unwrap().rows, res.rows);
    let m = load_manifest(&files.manifest).unwrap();
    assert_eq!(m.scenario, s);
    assert_eq!(m.seed, 0);
    assert_eq!(m.library_version, env!("CARGO_PKG_VERSION"));

    // A tampered scenario no longer matches its hash.
    let manifest_text = std::fs::read_to_string(&files.manifest).unwrap();
    let tampered = dir.path().join("bad.manifest.toml");
    std::fs::write(&tampered, manifest_text.replace("realizations = 12", "realizations = 13")).unwrap();
    assert!(load_manifest(&tampered).is_err());

    let single = dir.path().join("one.toml");
    std::fs::write(&single, toml::to_string(&s).unwrap()).unwrap();
    assert_eq!(load_scenarios(&single).unwrap(), vec![s]);
}

fn relaysim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relaysim"))
}

#[test]
fn cli_simulate_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("s.toml");
    std::fs::write(&scenario_path, toml::to_string(&small("cli")).unwrap()).unwrap();
    let out = relaysim()
        .args(["simulate", "--scenario"])
        .arg(&scenario_path)
        .args(["--seed", "5", "--realizations", "6", "--modes", "hybrid,full_rf", "--workers", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = dir.path().join("cli.manifest.toml");
    assert_eq!(load_manifest(&manifest).unwrap().seed, 5);
    for workers in ["1", "4"] {
        let out = relaysim()
            .args(["replay", "--workers", workers, "--manifest"])
            .arg(&manifest)
            .output()
            .unwrap();
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("MATCH csv sha256"));
        let a = std::fs::read(dir.path().join("cli.csv")).unwrap();
        let b = std::fs::read(dir.path().join("cli.replay.csv")).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn cli_rejects_bad_input() {
    let out = relaysim().args(["simulate", "--scenario", "fig9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig9"));

    let dir = tempfile::tempdir().unwrap();
    let mut s = small("bad");
    s.base.streams = 3;
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, toml::to_string(&s).unwrap()).unwrap();
    let out = relaysim().args(["simulate", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("M_D exceeds N_U"));
}

#[test]
fn cli_invariant_check() {
    let out = relaysim().args(["check", "--invariants", "--realizations", "3"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 10 && text.lines().all(|l| l.starts_with("PASS")));
}
