//! Rank-normalized split R-hat and bulk effective sample size.

use super::PosteriorDraws;
use crate::model::density::std_normal_quantile;

/// A convergence diagnostic, or a flag that the draws have no variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnostic {
    Value(f64),
    Degenerate,
}

impl Diagnostic {
    pub fn value(self) -> Option<f64> {
        match self {
            Diagnostic::Value(v) => Some(v),
            Diagnostic::Degenerate => None,
        }
    }

    /// Degenerate parameters pass: a constant parameter is trivially mixed.
    pub fn passes_rhat_gate(self, gate: f64) -> bool {
        match self {
            Diagnostic::Value(v) => v <= gate,
            Diagnostic::Degenerate => true,
        }
    }

    /// Value used when reporting a maximum; degenerate counts as 1.
    pub fn as_report_value(self) -> f64 {
        self.value().unwrap_or(1.0)
    }
}

/// Rank-normalized split R-hat per parameter (max of bulk and folded).
///
/// Needs at least 2 chains and 4 draws per chain; returns an empty vector
/// otherwise.
pub fn split_rhat(draws: &PosteriorDraws) -> Vec<Diagnostic> {
    (0..draws.n_params())
        .map(|p| rhat_chains(&draws.chains_for(p)))
        .collect()
}

/// Bulk effective sample size per parameter.
pub fn ess(draws: &PosteriorDraws) -> Vec<Diagnostic> {
    (0..draws.n_params())
        .map(|p| ess_chains(&draws.chains_for(p)))
        .collect()
}

/// R-hat for one parameter given per-chain traces.
pub fn rhat_chains(chains: &[Vec<f64>]) -> Diagnostic {
    if chains.len() < 2 || chains.iter().any(|c| c.len() < 4) {
        return Diagnostic::Degenerate;
    }
    let split = split_chains(chains);
    let bulk = rhat_basic(&rank_normalize(&split));
    let median = {
        let mut all: Vec<f64> = split.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        let n = all.len();
        if n % 2 == 1 {
            all[n / 2]
        } else {
            0.5 * (all[n / 2 - 1] + all[n / 2])
        }
    };
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|v| (v - median).abs()).collect())
        .collect();
    let tail = rhat_basic(&rank_normalize(&folded));
    match (bulk, tail) {
        (Diagnostic::Degenerate, Diagnostic::Degenerate) => Diagnostic::Degenerate,
        (Diagnostic::Value(a), Diagnostic::Degenerate) => Diagnostic::Value(a),
        (Diagnostic::Degenerate, Diagnostic::Value(b)) => Diagnostic::Value(b),
        (Diagnostic::Value(a), Diagnostic::Value(b)) => Diagnostic::Value(a.max(b)),
    }
}

/// Bulk ESS for one parameter given per-chain traces.
pub fn ess_chains(chains: &[Vec<f64>]) -> Diagnostic {
    if chains.len() < 2 || chains.iter().any(|c| c.len() < 4) {
        return Diagnostic::Degenerate;
    }
    let split = split_chains(chains);
    ess_basic(&rank_normalize(&split))
}

fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    let half = n / 2;
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        // An odd middle draw is dropped so both halves have equal length.
        out.push(c[..half].to_vec());
        out.push(c[n - half..n].to_vec());
    }
    out
}

fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = chains.iter().map(Vec::len).sum();
    let mut flat: Vec<(f64, usize)> = chains
        .iter()
        .flatten()
        .copied()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    flat.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && flat[j + 1].0 == flat[i].0 {
            j += 1;
        }
        let avg = 0.5 * ((i + 1) + (j + 1)) as f64;
        for item in &flat[i..=j] {
            ranks[item.1] = avg;
        }
        i = j + 1;
    }
    let s = total as f64;
    let mut out = Vec::with_capacity(chains.len());
    let mut k = 0;
    for c in chains {
        out.push(
            (0..c.len())
                .map(|_| {
                    let r = ranks[k];
                    k += 1;
                    std_normal_quantile((r - 0.375) / (s + 0.25))
                })
                .collect(),
        );
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn rhat_basic(chains: &[Vec<f64>]) -> Diagnostic {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = chains.iter().map(|c| variance(c)).sum::<f64>() / m;
    let between = n * variance(&means);
    let scale = 1e-14 * means.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if within <= scale * scale && between <= scale * scale {
        return Diagnostic::Degenerate;
    }
    if within <= 0.0 {
        return Diagnostic::Value(f64::INFINITY);
    }
    let var_plus = (n - 1.0) / n * within + between / n;
    Diagnostic::Value((var_plus / within).sqrt())
}

fn autocovariance(c: &[f64], lag: usize, m: f64) -> f64 {
    let n = c.len();
    (0..n - lag)
        .map(|t| (c[t] - m) * (c[t + lag] - m))
        .sum::<f64>()
        / n as f64
}

fn ess_basic(chains: &[Vec<f64>]) -> Diagnostic {
    let m = chains.len();
    let n = chains[0].len();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = chains.iter().map(|c| variance(c)).sum::<f64>() / m as f64;
    let between = n as f64 * variance(&means);
    if within <= 0.0 {
        return Diagnostic::Degenerate;
    }
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * within + between / nf;
    let acov0: Vec<f64> = chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| autocovariance(c, 0, mu))
        .collect();
    let rho = |lag: usize| -> f64 {
        if lag == 0 {
            return 1.0;
        }
        let mean_acov = chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocovariance(c, lag, mu))
            .sum::<f64>()
            / m as f64;
        // Scale the biased per-chain variance to match `within`.
        let mean_var = acov0.iter().sum::<f64>() / m as f64 * nf / (nf - 1.0);
        1.0 - (mean_var - mean_acov) / var_plus
    };

    // Geyer's initial positive and monotone sequence on paired lags.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let mut pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        if pair > prev_pair {
            pair = prev_pair;
        }
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    let total = (m * n) as f64;
    let tau = tau.max(1.0 / total.log10());
    Diagnostic::Value(total / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::StageTag;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn draws_from(chains: Vec<Vec<f64>>) -> PosteriorDraws {
        let samples = chains
            .into_iter()
            .map(|c| c.into_iter().map(|v| vec![v]).collect())
            .collect();
        PosteriorDraws::new(vec!["theta".into()], samples, StageTag::Generic).unwrap()
    }

    fn iid(seed: u64, chains: usize, n: usize) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..chains)
            .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn iid_rhat_near_one() {
        for seed in 0..5 {
            let d = draws_from(iid(seed, 4, 500));
            let r = split_rhat(&d)[0].value().unwrap();
            assert!((0.99..=1.02).contains(&r), "seed {seed}: {r}");
        }
    }

    #[test]
    fn disjoint_constant_chains_fail() {
        let d = draws_from(vec![vec![0.0; 100], vec![10.0; 100]]);
        match split_rhat(&d)[0] {
            Diagnostic::Value(v) => assert!(v > 1.05),
            Diagnostic::Degenerate => {}
        }
        assert!(
            !split_rhat(&d)[0].passes_rhat_gate(1.05)
                || split_rhat(&d)[0] == Diagnostic::Degenerate
        );
    }

    #[test]
    fn constant_draws_are_degenerate() {
        let d = draws_from(vec![vec![3.0; 50]; 4]);
        assert_eq!(split_rhat(&d)[0], Diagnostic::Degenerate);
        assert_eq!(ess(&d)[0], Diagnostic::Degenerate);
    }

    #[test]
    fn iid_ess_close_to_draw_count() {
        let d = draws_from(iid(7, 4, 250));
        let e = ess(&d)[0].value().unwrap();
        assert!((800.0..=1200.0).contains(&e), "{e}");
    }

    #[test]
    fn ar1_ess_matches_analytic() {
        let phi: f64 = 0.9;
        let n = 5000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x: f64 = StandardNormal.sample(&mut rng);
                x /= (1.0 - phi * phi).sqrt();
                (0..n)
                    .map(|_| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x = phi * x + e;
                        x
                    })
                    .collect()
            })
            .collect();
        let d = draws_from(chains);
        let e = ess(&d)[0].value().unwrap();
        let expected = 4.0 * n as f64 * (1.0 - phi) / (1.0 + phi);
        assert!(
            e > expected / 1.5 && e < expected * 1.5,
            "{e} vs {expected}"
        );
    }

    #[test]
    fn chain_order_does_not_matter() {
        let mut chains = iid(9, 4, 100);
        for c in chains.iter_mut().take(2) {
            for v in c.iter_mut() {
                *v += 0.3;
            }
        }
        let a = draws_from(chains.clone());
        chains.reverse();
        chains.swap(0, 2);
        let b = draws_from(chains);
        let (ra, rb) = (
            split_rhat(&a)[0].value().unwrap(),
            split_rhat(&b)[0].value().unwrap(),
        );
        let (ea, eb) = (ess(&a)[0].value().unwrap(), ess(&b)[0].value().unwrap());
        assert!((ra - rb).abs() < 1e-12);
        assert!((ea - eb).abs() < 1e-9);
    }
}
