use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::adapt::{in_estimation_half, window_ends, window_start, Metric, Welford};
use super::{Adaptation, ChainConfig, ChainOutput, ChainStats, LogDensity};
use crate::error::{Error, Result};

pub(crate) const TARGET_ACCEPT: f64 = 0.234;

pub(crate) fn run<T: LogDensity + ?Sized>(
    target: &T,
    config: &ChainConfig,
    chain: usize,
    start: Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<ChainOutput> {
    let dim = target.dim();
    let mut metric = Metric::identity(dim);
    let mut x = start;
    let mut lp = target.log_density(&x);
    if !lp.is_finite() {
        return Err(Error::Initialization { chain, attempts: 1 });
    }

    let ends = window_ends(config.warmup, config.adaptation);
    let first = window_start(config.warmup);
    let mut estimator = Welford::new(dim, config.adaptation == Adaptation::DenseCovariance);
    let mut next_end = 0;
    let mut log_scale = (2.38 / (dim as f64).sqrt()).ln();
    let mut adapt_t = 0.0_f64;

    let total = config.warmup + config.draws_per_chain;
    let mut draws = Vec::with_capacity(config.draws_per_chain);
    let mut accepted = 0usize;
    let mut z = vec![0.0; dim];
    let mut step = vec![0.0; dim];
    let mut proposal = vec![0.0; dim];
    for it in 0..total {
        let warm = it < config.warmup;
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        metric.forward(&z, &mut step);
        let scale = log_scale.exp();
        for i in 0..dim {
            proposal[i] = x[i] + scale * step[i];
        }
        let lp_new = target.log_density(&proposal);
        if lp_new.is_nan() {
            return Err(Error::NanLogDensity {
                chain,
                iteration: it + 1,
            });
        }
        let accept = if lp_new.is_finite() {
            (lp_new - lp).exp().min(1.0)
        } else {
            0.0
        };
        let took = rng.random::<f64>() < accept;
        if took {
            x.copy_from_slice(&proposal);
            lp = lp_new;
        }
        if warm {
            // Robbins-Monro on the log proposal scale.
            adapt_t += 1.0;
            log_scale += (accept - TARGET_ACCEPT) / adapt_t.powf(0.6);
            if in_estimation_half(it, first, &ends, next_end) {
                estimator.push(&x);
                if it + 1 == ends[next_end] {
                    if let Some(m) = estimator.metric() {
                        metric = m;
                        log_scale = (2.38 / (dim as f64).sqrt()).ln();
                        adapt_t = 0.0;
                    }
                    estimator.reset();
                    next_end += 1;
                }
            }
        } else {
            if took {
                accepted += 1;
            }
            draws.push(target.constrain(&x));
        }
    }

    Ok(ChainOutput {
        draws,
        stats: ChainStats {
            acceptance_rate: accepted as f64 / config.draws_per_chain as f64,
            step_size: log_scale.exp(),
            divergences: 0,
            final_position: x,
        },
    })
}
