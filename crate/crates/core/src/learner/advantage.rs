use crate::error::{Error, Result};
use crate::league::BetaStats;

/// Generalized advantage estimation by backward recursion.
///
/// `values` carries one more entry than `rewards`: the bootstrap value of
/// the state after the last step (0 at a terminal). Returns
/// `(advantages, returns)` with `returns = advantages + values`.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() != rewards.len() + 1 {
        return Err(Error::Contract(format!(
            "gae needs {} values for {} rewards, got {}",
            rewards.len() + 1,
            rewards.len(),
            values.len()
        )));
    }
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

/// `(ψ + β^[Δ]) / (ψ + β^[d])`.
pub fn priority_from_rates(psi: f64, overall: f64, type_rate: f64) -> f64 {
    (psi + overall) / (psi + type_rate)
}

/// Advantage prioritization factor for samples of an episode whose
/// replaced type is `replaced`. Pure-frontier episodes, and any episode
/// whose rates are not yet defined, get 1.
pub fn priority_factor(stats: &BetaStats, replaced: Option<usize>, psi: f64) -> f64 {
    let Some(d) = replaced else { return 1.0 };
    match (stats.overall_rate(), stats.type_rate(d)) {
        (Some(all), Some(td)) => priority_from_rates(psi, all, td),
        _ => 1.0,
    }
}

/// Standardizes in place: zero mean, unit variance. A zero-variance input
/// only has its mean removed.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a -= mean;
        if std > 1e-12 {
            *a /= std;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::league::MixedCombination;
    use crate::policy::WinRecord;

    #[test]
    fn one_step_advantage_is_reward() {
        let (a, r) = gae(&[1.0], &[0.0, 0.0], 0.9, 0.7).unwrap();
        assert_eq!(a, vec![1.0]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn two_step_hand_recursion() {
        let (a, _) = gae(&[0.0, 1.0], &[0.5, 0.5, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(a, vec![0.5, 0.5]);
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        assert!(matches!(gae(&[1.0, 2.0], &[0.0, 0.0], 1.0, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn equal_rates_give_unit_priority() {
        assert_eq!(priority_from_rates(0.5, 0.3, 0.3), 1.0);
    }

    #[test]
    fn depressed_type_is_boosted() {
        let p = priority_from_rates(0.5, 0.6, 0.2);
        assert!((p - 1.1 / 0.7).abs() < 1e-12);
        assert!((p - 1.5714).abs() < 1e-4);
    }

    #[test]
    fn pure_or_undefined_priority_is_one() {
        let mut s = BetaStats::new(3);
        assert_eq!(priority_factor(&s, None, 0.5), 1.0);
        assert_eq!(priority_factor(&s, Some(1), 0.5), 1.0);
        s.record_outcome(&MixedCombination::mixed(0, 1, 0), true);
        assert_eq!(priority_factor(&s, Some(1), 0.5), 1.0);
        s.set_cell(1, 1, WinRecord { wins: 0.0, games: 4.0 });
        // β^[0] = 1, β^[1] = 0, β^[Δ] = 0.5.
        assert!((priority_factor(&s, Some(1), 0.5) - 2.0).abs() < 1e-12);
        assert!((priority_factor(&s, Some(0), 0.5) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_standardization() {
        let mut a = [1.0, 3.0];
        normalize_advantages(&mut a);
        assert_eq!(a, [-1.0, 1.0]);
    }

    #[test]
    fn constant_batch_goes_to_zero() {
        let mut a = [2.0, 2.0, 2.0];
        normalize_advantages(&mut a);
        assert_eq!(a, [0.0, 0.0, 0.0]);
    }
}
