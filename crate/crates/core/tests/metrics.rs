use hbd_relay::linalg::{CMatrix, C64};
use hbd_relay::metrics::*;
use hbd_relay::model::{draw_channels, partner, ChannelSet, SystemConfig, UserPower};
use hbd_relay::relay_design::{design_relay, RelayMode};
use hbd_relay::terminal_design::{iterate_alpha, RelayCascade};
use proptest::prelude::*;

fn scalar_setup(a: C64, b: C64) -> (CMatrix, ChannelSet) {
    // Two single-antenna users on orthogonal relay antennas; W swaps them.
    let h1 = CMatrix::from_real_rows(&[&[1.0], &[0.0]]).unwrap();
    let h2 = CMatrix::from_real_rows(&[&[0.0], &[1.0]]).unwrap();
    let mut w = CMatrix::zeros(2, 2);
    w[(0, 1)] = a;
    w[(1, 0)] = b;
    (w, ChannelSet::from_users(vec![h1, h2]).unwrap())
}

proptest! {
    #[test]
    fn scalar_closed_form(re in -3.0f64..3.0, im in -3.0f64..3.0, p_db in -10.0f64..30.0, s_r in 0.1f64..2.0, s_k in 0.1f64..2.0) {
        let a = C64::new(re, im);
        let (w, ch) = scalar_setup(a, C64::new(0.5, -0.25));
        let p = 10f64.powf(p_db / 10.0);
        let cfg = SystemConfig {
            user_power: UserPower::Shared(p),
            relay_noise_var: s_r,
            user_noise_var: s_k,
            ..SystemConfig::from_snr_db(0.0, 1, 1, 1, 2)
        };
        let one = vec![CMatrix::identity(1); 2];
        let g = user_se(0, 1, &w, &ch, &one, &one, &cfg, true).unwrap();
        let a2 = a.norm_sqr();
        let want = 0.5 * (1.0 + p * a2 / (s_r * a2 + s_k)).log2();
        prop_assert!((g.value - want).abs() <= 1e-12 * (1.0 + want));
    }

    #[test]
    fn decoder_and_precoder_phases_do_not_matter(seed in 0u64..10_000, phi in 0.0f64..std::f64::consts::TAU, psi in 0.0f64..std::f64::consts::TAU) {
        let cfg = SystemConfig { seed, ..SystemConfig::from_snr_db(15.0, 2, 2, 2, 16) };
        let ch = draw_channels(&cfg, 0);
        let relay = design_relay(&cfg, &ch, RelayMode::Hybrid).unwrap();
        let cascade = RelayCascade::new(&relay, &ch).unwrap();
        let (state, codecs) = iterate_alpha(&cfg, &cascade, 1.0).unwrap();
        let base = all_users_se(&cascade, state.alpha, &codecs, &cfg).unwrap();
        let mut rotated = codecs.clone();
        let dq = CMatrix::from_diag(&[C64::from_polar(1.0, phi), C64::from_polar(1.0, psi)]);
        for k in 0..4 {
            rotated.decoders[k] = &dq * &codecs.decoders[k];
            rotated.precoders[k] = &codecs.precoders[k] * &dq.adjoint();
        }
        let rot = all_users_se(&cascade, state.alpha, &rotated, &cfg).unwrap();
        for (x, y) in base.iter().zip(&rot) {
            prop_assert!((x.value - y.value).abs() < 1e-10);
        }
    }
}

#[test]
fn se_grows_with_user_power() {
    let cfg = SystemConfig::from_snr_db(10.0, 2, 2, 2, 16);
    let ch = draw_channels(&cfg, 3);
    let relay = design_relay(&cfg, &ch, RelayMode::Hybrid).unwrap();
    let cascade = RelayCascade::new(&relay, &ch).unwrap();
    let (state, codecs) = iterate_alpha(&cfg, &cascade, 1.0).unwrap();
    let mut last = [-1.0; 4];
    for p_db in [-10.0, 0.0, 10.0, 20.0, 30.0] {
        let c = SystemConfig {
            user_power: UserPower::Shared(10f64.powf(p_db / 10.0)),
            ..cfg.clone()
        };
        let se = all_users_se(&cascade, state.alpha, &codecs, &c).unwrap();
        for (k, s) in se.iter().enumerate() {
            assert!(s.value > last[k]);
            last[k] = s.value;
        }
    }
}

#[test]
fn global_relay_phase_and_desired_gain() {
    let cfg = SystemConfig::from_snr_db(10.0, 2, 2, 2, 16);
    let ch = draw_channels(&cfg, 6);
    let relay = design_relay(&cfg, &ch, RelayMode::Hybrid).unwrap();
    let cascade = RelayCascade::new(&relay, &ch).unwrap();
    let (state, codecs) = iterate_alpha(&cfg, &cascade, 1.0).unwrap();
    let w = relay.clone().with_alpha(state.alpha).w();
    let w_rot = w.scale(C64::from_polar(1.0, 0.7));
    for rx in 0..4 {
        let tx = partner(rx);
        let a = user_se(rx, tx, &w, &ch, &codecs.precoders, &codecs.decoders, &cfg, true).unwrap();
        let b = user_se(rx, tx, &w_rot, &ch, &codecs.precoders, &codecs.decoders, &cfg, true).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
        // Boosting only the partner's precoder raises the desired term and
        // leaves R untouched.
        let mut louder = codecs.precoders.clone();
        louder[tx] = louder[tx].scale_re(1.5);
        let c = user_se(rx, tx, &w, &ch, &louder, &codecs.decoders, &cfg, true).unwrap();
        assert!(c.value >= a.value);
    }
}

#[test]
fn interpair_terms_are_negligible_after_nulling() {
    for mode in RelayMode::ALL {
        let cfg = SystemConfig::from_snr_db(20.0, 4, 2, 2, 64);
        for r in 0..10 {
            let ch = draw_channels(&cfg, r);
            let relay = design_relay(&cfg, &ch, mode).unwrap();
            let cascade = RelayCascade::new(&relay, &ch).unwrap();
            let (state, codecs) = iterate_alpha(&cfg, &cascade, 1.0).unwrap();
            for rx in 0..8 {
                let on = user_se_cascade(rx, &cascade, state.alpha, &codecs, &cfg, true).unwrap();
                let off = user_se_cascade(rx, &cascade, state.alpha, &codecs, &cfg, false).unwrap();
                assert!((on.value - off.value).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn cascade_matches_direct_evaluation() {
    let cfg = SystemConfig::from_snr_db(20.0, 3, 2, 2, 24);
    let ch = draw_channels(&cfg, 1);
    for mode in RelayMode::ALL {
        let relay = design_relay(&cfg, &ch, mode).unwrap();
        let cascade = RelayCascade::new(&relay, &ch).unwrap();
        let (state, codecs) = iterate_alpha(&cfg, &cascade, 1.0).unwrap();
        let w = relay.clone().with_alpha(state.alpha).w();
        for rx in 0..6 {
            let direct = user_se(rx, partner(rx), &w, &ch, &codecs.precoders, &codecs.decoders, &cfg, true).unwrap();
            let fast = user_se_cascade(rx, &cascade, state.alpha, &codecs, &cfg, true).unwrap();
            assert!((direct.value - fast.value).abs() < 1e-9 * (1.0 + direct.value));
        }
    }
}

#[test]
fn rates_are_nonnegative_and_sum() {
    let cfg = SystemConfig::from_snr_db(0.0, 2, 2, 2, 16);
    let ch = draw_channels(&cfg, 9);
    let relay = design_relay(&cfg, &ch, RelayMode::FullRf).unwrap();
    let cascade = RelayCascade::new(&relay, &ch).unwrap();
    let (state, codecs) = iterate_alpha(&cfg, &cascade, 1.0).unwrap();
    let se = all_users_se(&cascade, state.alpha, &codecs, &cfg).unwrap();
    assert!(se.iter().all(|s| s.value >= 0.0 && !s.regularized));
    let v: Vec<f64> = se.iter().map(|s| s.value).collect();
    assert_eq!(sum_se(&v), v.iter().sum::<f64>());
}
