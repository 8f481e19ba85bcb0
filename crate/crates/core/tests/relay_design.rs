mod common;

use common::{max_abs_diff, random_matrix, rel_err, rng};
use hbd_relay::linalg::{svd_thin, CMatrix, C64};
use hbd_relay::model::{draw_channels, ChannelSet, SystemConfig};
use hbd_relay::relay_design::*;
use proptest::prelude::*;
use rand::Rng;

fn cfg(k: usize, n_u: usize, n_r: usize) -> SystemConfig {
    SystemConfig::from_snr_db(10.0, k, n_u, n_u, n_r)
}

fn pair_inputs(relay: &RelayDesign, ch: &ChannelSet, m: usize) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    let b_rm = relay.b_rm(m);
    let b_tm = b_rm.transpose();
    let h_a = &relay.f_r * ch.user(2 * m);
    let h_b = &relay.f_r * ch.user(2 * m + 1);
    (b_rm, b_tm, h_a, h_b)
}

fn random_unit<R: Rng>(g: &mut R, n: usize) -> CMatrix {
    let t = random_matrix(g, n, n);
    t.scale_re(1.0 / t.norm_fro())
}

#[test]
fn egc_single_entry_phase() {
    // H (N_R=6 × 6) with h = -2i at row 5, column 3 (1-based).
    let mut h = CMatrix::from_fn(6, 6, |_, _| C64::new(1.0, 0.0));
    h[(4, 2)] = C64::new(0.0, -2.0);
    let f = egc_receive_beamformer(&h);
    let expect = C64::from_polar(1.0 / 6f64.sqrt(), std::f64::consts::FRAC_PI_2);
    assert!((f[(2, 4)] - expect).norm() < 1e-15);
    assert!((f[(0, 0)] - C64::new(1.0 / 6f64.sqrt(), 0.0)).norm() < 1e-15);
}

#[test]
fn egc_coherent_gain() {
    let h = CMatrix::from_real_rows(&[&[1.0], &[1.0]]).unwrap();
    let ch = ChannelSet::from_users(vec![h.clone(), h.clone()]).unwrap();
    let stacked = ch.stacked().clone();
    let f = egc_receive_beamformer(&stacked);
    let (_, per_user) = composite_channel(&f, &ch).unwrap();
    assert!((per_user[0][(0, 0)] - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
}

#[test]
fn composite_channel_blocks() {
    let c = cfg(3, 2, 24);
    let ch = draw_channels(&c, 4);
    let f = egc_receive_beamformer(ch.stacked());
    let (h_e, per_user) = composite_channel(&f, &ch).unwrap();
    assert!(max_abs_diff(&h_e, &(&f * ch.stacked())) < 1e-13);
    for (k, hk) in per_user.iter().enumerate() {
        assert_eq!(hk, &h_e.columns(2 * k, 2));
    }
    let (h_id, _) = composite_channel(&CMatrix::identity(24), &ch).unwrap();
    assert_eq!(&h_id, ch.stacked());
}

#[test]
fn single_pair_digital_is_identity() {
    let c = cfg(1, 2, 8);
    let relay = design_relay(&c, &draw_channels(&c, 0), RelayMode::Hybrid).unwrap();
    assert_eq!(relay.b_r, CMatrix::identity(4));
}

#[test]
fn block_diagonal_equivalent_channel() {
    let c = cfg(4, 2, 64);
    let ch = draw_channels(&c, 11);
    let relay = design_relay(&c, &ch, RelayMode::Hybrid).unwrap();
    assert_eq!(relay.b_r.shape(), (16, 16));
    assert_eq!(relay.w_tilde.shape(), (64, 64));
    let h_be = &(&relay.b_r * &relay.f_r) * ch.stacked();
    let total = h_be.norm_fro();
    for m in 0..4 {
        for j in 0..4 {
            if j != m {
                let blk = h_be.block(4 * m, 4 * j, 4, 4);
                assert!(blk.norm_fro() < 1e-9 * total, "pair {m} block {j}");
            }
        }
    }
}

#[test]
fn full_chain_two_ways() {
    // Ĥ = H_Eᵀ B_t T B_r H_E built from W̃ and from per-pair blocks.
    for mode in RelayMode::ALL {
        let c = cfg(3, 2, 32);
        let ch = draw_channels(&c, 5);
        let relay = design_relay(&c, &ch, mode).unwrap();
        let via_w = &(&ch.stacked().transpose() * &relay.w_tilde) * ch.stacked();
        let mut via_blocks = CMatrix::zeros(12, 12);
        for m in 0..3 {
            let (b_rm, b_tm, _, _) = pair_inputs(&relay, &ch, m);
            for a in [2 * m, 2 * m + 1] {
                for b in [2 * m, 2 * m + 1] {
                    let h_a = &relay.f_r * ch.user(a);
                    let h_b = &relay.f_r * ch.user(b);
                    let blk = effective_pair_channel(&h_a, &h_b, &b_tm, &relay.t_m(m), &b_rm).unwrap();
                    via_blocks.set_block(2 * a, 2 * b, &blk);
                }
            }
        }
        assert!(rel_err(&via_w, &via_blocks) < 1e-9, "{mode}");
    }
}

#[test]
fn anomax_beats_random_candidates() {
    let c = cfg(2, 2, 16);
    let mut g = rng(99);
    for r in 0..20 {
        let ch = draw_channels(&c, r);
        let relay = design_relay(&c, &ch, RelayMode::Hybrid).unwrap();
        let (b_rm, b_tm, h_a, h_b) = pair_inputs(&relay, &ch, 0);
        let best = anomax_objective(&b_rm, &b_tm, &relay.t_m(0), &h_a, &h_b, 0.5).unwrap();
        for _ in 0..200 {
            let t = random_unit(&mut g, 4);
            assert!(anomax_objective(&b_rm, &b_tm, &t, &h_a, &h_b, 0.5).unwrap() <= best * (1.0 + 1e-12));
        }
    }
}

#[test]
fn anomax_rejects_bad_beta() {
    let c = cfg(1, 1, 4);
    let ch = draw_channels(&c, 0);
    let relay = design_relay(&c, &ch, RelayMode::Hybrid).unwrap();
    let (b_rm, b_tm, h_a, h_b) = pair_inputs(&relay, &ch, 0);
    assert!(anomax_pair_matrix(&b_rm, &b_tm, &h_a, &h_b, 1.5).is_err());
}

#[test]
fn degenerate_pair_channel() {
    // Two users of different pairs share a channel, so the stacked channel
    // of the other pairs loses rank and the null space grows.
    let c = cfg(2, 1, 4);
    let mut users = draw_channels(&c, 0).users().to_vec();
    users[3] = users[2].clone();
    let ch = ChannelSet::from_users(users).unwrap();
    assert!(matches!(
        design_relay(&c, &ch, RelayMode::Hybrid),
        Err(hbd_relay::Error::DegenerateChannel { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interpair_leakage_vanishes(seed in 0u64..1_000_000, k in 2usize..6, n_u in 1usize..4, extra in 0usize..24) {
        let n_r = 2 * k * n_u + extra;
        let c = cfg(k, n_u, n_r);
        let ch = draw_channels(&SystemConfig { seed, ..c.clone() }, 0);
        for mode in RelayMode::ALL {
            let relay = design_relay(&c, &ch, mode).unwrap();
            prop_assert!(max_interpair_leakage(&relay, &ch).unwrap() <= 1e-9);
            for m in 0..k {
                let b = relay.b_rm(m);
                prop_assert!(max_abs_diff(&(&b * &b.adjoint()), &CMatrix::identity(2 * n_u)) < 1e-10);
            }
            prop_assert_eq!(&relay.f_t, &relay.f_r.transpose());
            prop_assert_eq!(&relay.b_t, &relay.b_r.transpose());
        }
    }

    #[test]
    fn constant_modulus_and_phase_alignment(seed in 0u64..1_000_000, k in 1usize..5, n_r in 8usize..40) {
        let c = cfg(k, 2, n_r.max(4 * k));
        let ch = draw_channels(&SystemConfig { seed, ..c.clone() }, 0);
        let f = egc_receive_beamformer(ch.stacked());
        let h = ch.stacked();
        let target = 1.0 / (h.rows() as f64).sqrt();
        for i in 0..f.rows() {
            for j in 0..f.cols() {
                prop_assert!((f[(i, j)].norm() - target).abs() <= 1e-15);
                // Each term of F_r H combines coherently: [F_r]_ij H_ji >= 0.
                let z = f[(i, j)] * h[(j, i)];
                prop_assert!(z.im.abs() < 1e-12 && z.re >= 0.0);
            }
        }
    }

    #[test]
    fn anomax_certificate(seed in 0u64..1_000_000, n_u in 1usize..4, beta in 0.0f64..=1.0) {
        let c = SystemConfig { beta, ..cfg(2, n_u, 4 * n_u + 8) };
        let ch = draw_channels(&SystemConfig { seed, ..c.clone() }, 0);
        for mode in RelayMode::ALL {
            let relay = design_relay(&c, &ch, mode).unwrap();
            for m in 0..2 {
                let (b_rm, b_tm, h_a, h_b) = pair_inputs(&relay, &ch, m);
                let t = relay.t_m(m);
                prop_assert!((t.norm_fro() - 1.0).abs() < 1e-12);
                let smax = svd_thin(&anomax_matrix(&b_rm, &b_tm, &h_a, &h_b, beta).unwrap()).unwrap().s[0];
                let obj = anomax_objective(&b_rm, &b_tm, &t, &h_a, &h_b, beta).unwrap();
                prop_assert!((obj - smax).abs() <= 1e-9 * smax);
            }
        }
    }

    #[test]
    fn beta_symmetry(seed in 0u64..1_000_000, beta in 0.0f64..=1.0) {
        let c = cfg(2, 2, 16);
        let ch = draw_channels(&SystemConfig { seed, ..c.clone() }, 0);
        let relay = design_relay(&c, &ch, RelayMode::Hybrid).unwrap();
        let (b_rm, b_tm, h_a, h_b) = pair_inputs(&relay, &ch, 0);
        let t1 = anomax_pair_matrix(&b_rm, &b_tm, &h_a, &h_b, beta).unwrap();
        let t2 = anomax_pair_matrix(&b_rm, &b_tm, &h_b, &h_a, 1.0 - beta).unwrap();
        let j1 = anomax_objective(&b_rm, &b_tm, &t1, &h_a, &h_b, beta).unwrap();
        let j2 = anomax_objective(&b_rm, &b_tm, &t2, &h_b, &h_a, 1.0 - beta).unwrap();
        prop_assert!((j1 - j2).abs() <= 1e-9 * j1.max(1e-300));
    }

    #[test]
    fn interpair_effective_channel_is_null(seed in 0u64..1_000_000) {
        let c = cfg(3, 2, 24);
        let ch = draw_channels(&SystemConfig { seed, ..c.clone() }, 0);
        let relay = design_relay(&c, &ch, RelayMode::Hybrid).unwrap();
        let (b_rm, b_tm, h_a, _) = pair_inputs(&relay, &ch, 0);
        let h_other = &relay.f_r * ch.user(4);
        let cross = effective_pair_channel(&h_a, &h_other, &b_tm, &relay.t_m(0), &b_rm).unwrap();
        let scale = h_a.norm_fro() * h_other.norm_fro();
        prop_assert!(cross.norm_fro() < 1e-9 * scale);
    }
}
