use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pool::tests::Stub;
use super::*;

/// Smallest |β_p − β_q| over all unordered pairs.
fn brute_min_gap(betas: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..betas.len() {
        for j in i + 1..betas.len() {
            best = best.min((betas[i] - betas[j]).abs());
        }
    }
    best
}

#[derive(Clone, Debug)]
enum Op {
    Offer { wins: u8, games: u8 },
    Record { slot: usize, won: bool },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..=20, 1u8..=20).prop_map(|(w, g)| Op::Offer { wins: w.min(g), games: g }),
        (0usize..16, any::<bool>()).prop_map(|(slot, won)| Op::Record { slot, won }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn league_laws_hold(capacity in 1usize..8, ops in proptest::collection::vec(op(), 1..60)) {
        let mut league = League::new(capacity).unwrap();
        let mut next_id = 0;
        for op in ops {
            match op {
                Op::Offer { wins, games } => {
                    next_id += 1;
                    let cand = Stub::new(next_id, wins as f64, games as f64);
                    let gate = league.passes_gate(&cand);
                    let mut pool: Vec<Stub> = league.members().to_vec();
                    pool.push(cand.clone());
                    let (report, evicted) = league.offer(cand);
                    prop_assert_eq!(report.admitted, gate);
                    if let Some(ev) = evicted {
                        prop_assert_eq!(pool.len(), capacity + 1);
                        pool.sort_by(|a, b| b.beta().total_cmp(&a.beta()).then(a.id.cmp(&b.id)));
                        let betas: Vec<f64> = pool.iter().map(|s| s.beta()).collect();
                        let (p, q) = closest_adjacent_pair(&betas).unwrap();
                        prop_assert_eq!((betas[p] - betas[q]).abs(), brute_min_gap(&betas));
                        prop_assert_eq!(ev.id, pool[p].id.max(pool[q].id));
                    }
                }
                Op::Record { slot, won } => {
                    if !league.is_empty() {
                        let id = league.members()[slot % league.len()].id;
                        let before = league.get(id).unwrap().rec.games;
                        league.record_member(id, won).unwrap();
                        prop_assert!(league.get(id).unwrap().rec.games > before);
                    }
                }
            }
            prop_assert!(league.len() <= capacity);
            let betas = league.betas();
            prop_assert!(betas.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(betas.iter().all(|b| (0.0..=1.0).contains(b)));
        }
    }
}

#[test]
fn candidate_in_closest_pair_is_evicted() {
    let mut league = League::new(3).unwrap();
    for s in [Stub::new(1, 1.0, 10.0), Stub::new(2, 5.0, 10.0), Stub::new(3, 9.0, 10.0)] {
        league.insert(s);
    }
    let before: Vec<_> = league.members().iter().map(|m| m.id).collect();
    let (r, _) = league.offer(Stub::new(4, 51.0, 100.0));
    assert!(r.admitted && !r.retained());
    assert_eq!(r.evicted, Some(4));
    assert_eq!(league.members().iter().map(|m| m.id).collect::<Vec<_>>(), before);
}

#[test]
fn sampler_cells_are_uniform() {
    let mut league = League::new(10).unwrap();
    for id in 0..5 {
        league.insert(Stub::new(id, id as f64, 10.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [[0usize; 3]; 5];
    let n = 100_000;
    for _ in 0..n {
        let c = league.sample_combination(3, &mut rng, 0.0);
        counts[c.league_index.unwrap()][c.replaced_type.unwrap()] += 1;
    }
    for row in counts {
        for c in row {
            assert!((c as f64 / n as f64 - 1.0 / 15.0).abs() <= 0.01);
        }
    }
}

#[test]
fn pure_fraction_matches_probability() {
    let mut league = League::new(4).unwrap();
    league.insert(Stub::new(1, 1.0, 2.0));
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pure = (0..20_000).filter(|_| league.sample_combination(3, &mut rng, 0.1).is_pure()).count();
    assert!((pure as f64 / 20_000.0 - 0.1).abs() < 0.01);
}
