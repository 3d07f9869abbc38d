use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::nn::{Adam, Tape, Tensor2};

fn small_shape() -> NetShape {
    NetShape {
        obs_len: 5,
        cond_len: 4,
        num_actions: 10,
        config: NetConfig {
            hidden: vec![6],
            hyper_hidden: 4,
            head_gain: 1.0,
        },
    }
}

fn group(seed: u64) -> PolicyGroup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PolicyGroup::new(0, vec![small_shape(), small_shape()], &mut rng)
}

#[test]
fn uniform_logits_sample_uniformly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let logits = [0.0; 10];
    let mask = [true; 10];
    let mut counts = [0usize; 10];
    for _ in 0..10_000 {
        counts[choose_action(&logits, &mask, &mut rng, ActMode::Sample).unwrap().0] += 1;
    }
    for c in counts {
        assert!((c as f64 / 10_000.0 - 0.1).abs() <= 0.02, "{counts:?}");
    }
}

#[test]
fn single_legal_action_has_zero_log_prob() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mask = [false; 4];
    mask[2] = true;
    for mode in [ActMode::Sample, ActMode::Greedy] {
        let (a, lp) = choose_action(&[5.0, 1.0, -3.0, 9.0], &mask, &mut rng, mode).unwrap();
        assert_eq!((a, lp), (2, 0.0));
    }
}

#[test]
fn greedy_takes_argmax_lowest_on_tie() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(choose_action(&[1.0, 5.0, 3.0], &[true; 3], &mut rng, ActMode::Greedy).unwrap().0, 1);
    assert_eq!(choose_action(&[4.0, 4.0, 3.0], &[true; 3], &mut rng, ActMode::Greedy).unwrap().0, 0);
    assert_eq!(choose_action(&[1.0, 5.0, 3.0], &[true, false, true], &mut rng, ActMode::Greedy).unwrap().0, 2);
}

#[test]
fn fully_masked_is_contract_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert!(matches!(
        choose_action(&[1.0, 2.0], &[false, false], &mut rng, ActMode::Sample),
        Err(crate::Error::Contract(_))
    ));
}

#[test]
fn masked_probabilities_sum_to_one() {
    let g = group(5);
    let net = g.policy(0).unwrap();
    let heads = net.head_cache(&[1.0, 0.3, 1.0, 0.0]).unwrap();
    let obs = Tensor2::row(&[0.2, -0.4, 0.9, 0.0, 1.0]);
    let (logits, _) = net.forward(&obs, &heads).unwrap();
    let mask: Vec<bool> = (0..10).map(|i| i % 3 != 1).collect();
    let lp = crate::nn::masked_log_softmax(&logits, &mask).unwrap();
    let total: f64 = (0..10).filter(|&i| mask[i]).map(|i| lp.get(0, i).exp()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn freeze_then_train_leaves_snapshot() {
    let mut frontier = group(6);
    let snap = frontier.freeze(1);
    let before = snap.checksum();
    assert!(snap.is_frozen() && !frontier.is_frozen());
    let net = frontier.policy_mut(0).unwrap();
    let mut opt = Adam::new(0.01, &net.actor.params);
    for _ in 0..100 {
        let grads: Vec<Tensor2> = net.actor.params.iter().map(|p| Tensor2::filled(p.rows(), p.cols(), 0.5)).collect();
        opt.step(&mut net.actor.params, &grads).unwrap();
    }
    assert_ne!(frontier.checksum(), before);
    assert_eq!(snap.checksum(), before);
    let mut snap = snap;
    assert!(snap.policy_mut(0).is_err());
}

#[test]
fn freezing_twice_gives_distinct_snapshots() {
    let f = group(7);
    let (a, b) = (f.freeze(10), f.freeze(11));
    assert_ne!(a.group_id, b.group_id);
    assert_eq!(a.checksum(), b.checksum());
    assert_eq!(a.perf, WinRecord::default());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut snap = group(8).freeze(3);
    snap.perf.record(true);
    snap.perf.record(false);
    snap.save(dir.path()).unwrap();
    let back = PolicyGroup::load(dir.path()).unwrap();
    assert_eq!(back, snap);
    assert_eq!(back.checksum(), snap.checksum());
    assert!(PolicyGroup::load(&dir.path().join("missing")).is_err());
}

#[test]
fn frozen_group_is_repeatable() {
    let g = group(9).freeze(1);
    let id = build_identity(1, 2, Some(0), 0.4).unwrap();
    let obs = [0.1, 0.2, 0.3, 0.4, 0.5];
    let mask = [true; 10];
    let mut r1 = ChaCha8Rng::seed_from_u64(0);
    let mut r2 = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let a = g.act(1, &obs, &id, &mask, &mut r1, ActMode::Sample).unwrap();
        let b = g.act(1, &obs, &id, &mask, &mut r2, ActMode::Sample).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn log_prob_depends_on_identity() {
    // Finite-difference derivative of log pi(a) with respect to one identity slot.
    let g = group(10);
    let net = g.policy(0).unwrap();
    let obs = Tensor2::row(&[0.3, -0.2, 0.8, 0.1, -0.5]);
    let mask = vec![true; 10];
    let logp = |cond: &[f64]| {
        let (logits, _) = net.forward(&obs, &net.head_cache(cond).unwrap()).unwrap();
        crate::nn::masked_log_softmax(&logits, &mask).unwrap().get(0, 4)
    };
    let h = 1e-5;
    let d = (logp(&[1.0, 0.5 + h, 1.0, 0.0]) - logp(&[1.0, 0.5 - h, 1.0, 0.0])) / (2.0 * h);
    assert!(d.abs() > 1e-8, "derivative {d}");

    // The taped path agrees.
    let mut tape = Tape::new();
    let bound = net.actor.bind(&mut tape);
    let o = tape.constant(obs.clone());
    let c = tape.constant(Tensor2::row(&[1.0, 0.5, 1.0, 0.0]));
    let logits = net.actor.record(&mut tape, &bound, o, c).unwrap();
    let lp = tape.masked_log_softmax(logits, &mask).unwrap();
    let pick = tape.pick_column(lp, &[4]).unwrap();
    let l = tape.sum(pick);
    let grads = tape.backward(l).unwrap();
    let dc = grads.wrt(c).unwrap().data()[1];
    assert!((dc - d).abs() <= 1e-4 * d.abs().max(1e-6), "{dc} vs {d}");
}
