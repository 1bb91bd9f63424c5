use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::adapt::{in_estimation_half, window_ends, window_start, DualAveraging, Metric, Welford};
use super::{Adaptation, ChainConfig, ChainOutput, ChainStats, LogDensity};
use crate::error::{Error, Result};

pub(crate) const TARGET_ACCEPT: f64 = 0.65;
const MAX_ENERGY_ERROR: f64 = 1000.0;

struct State {
    x: Vec<f64>,
    lp: f64,
    grad: Vec<f64>,
}

struct Integrator<'a, T: ?Sized> {
    target: &'a T,
    metric: Metric,
    chain: usize,
    scratch: Vec<f64>,
    gw: Vec<f64>,
}

enum Outcome {
    Finished(State, Vec<f64>),
    Divergent,
}

impl<T: LogDensity + ?Sized> Integrator<'_, T> {
    fn eval(&self, x: Vec<f64>, iteration: usize) -> Result<State> {
        let mut grad = vec![0.0; x.len()];
        let lp = self.target.log_density_gradient(&x, &mut grad);
        if lp.is_nan() {
            return Err(Error::NanLogDensity {
                chain: self.chain,
                iteration,
            });
        }
        Ok(State { x, lp, grad })
    }

    /// Leapfrog in whitened momentum coordinates.
    fn trajectory(
        &mut self,
        start: &State,
        mut p: Vec<f64>,
        eps: f64,
        steps: usize,
        iteration: usize,
    ) -> Result<Outcome> {
        self.metric.transpose(&start.grad, &mut self.gw);
        for (pi, g) in p.iter_mut().zip(&self.gw) {
            *pi += 0.5 * eps * g;
        }
        let mut x = start.x.clone();
        let mut state;
        let mut s = 1;
        loop {
            self.metric.forward(&p, &mut self.scratch);
            for (xi, d) in x.iter_mut().zip(&self.scratch) {
                *xi += eps * d;
            }
            state = self.eval(x, iteration)?;
            if !state.lp.is_finite() || state.grad.iter().any(|g| !g.is_finite()) {
                return Ok(Outcome::Divergent);
            }
            self.metric.transpose(&state.grad, &mut self.gw);
            let w = if s == steps { 0.5 } else { 1.0 };
            for (pi, g) in p.iter_mut().zip(&self.gw) {
                *pi += w * eps * g;
            }
            if s == steps {
                break;
            }
            x = state.x.clone();
            s += 1;
        }
        Ok(Outcome::Finished(state, p))
    }

    /// Returns the acceptance probability and the proposal if it did not diverge.
    fn propose(
        &mut self,
        current: &State,
        eps: f64,
        steps: usize,
        rng: &mut ChaCha8Rng,
        iteration: usize,
    ) -> Result<(f64, Option<State>)> {
        let p: Vec<f64> = (0..current.x.len())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let h0 = -current.lp + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        match self.trajectory(current, p, eps, steps, iteration)? {
            Outcome::Divergent => Ok((0.0, None)),
            Outcome::Finished(state, p) => {
                let h1 = -state.lp + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
                let delta = h0 - h1;
                if !delta.is_finite() || delta < -MAX_ENERGY_ERROR {
                    return Ok((0.0, None));
                }
                Ok((delta.exp().min(1.0), Some(state)))
            }
        }
    }

    fn reasonable_step(&mut self, current: &State, rng: &mut ChaCha8Rng) -> Result<f64> {
        let mut eps = 0.1_f64;
        let (a0, _) = self.propose(current, eps, 1, rng, 0)?;
        let dir: f64 = if a0 > 0.5 { 1.0 } else { -1.0 };
        for _ in 0..60 {
            let next = eps * 2f64.powf(dir);
            let (a, _) = self.propose(current, next, 1, rng, 0)?;
            if (dir > 0.0 && a <= 0.5) || (dir < 0.0 && a > 0.5) {
                return Ok(if dir > 0.0 { eps } else { next });
            }
            eps = next;
        }
        Ok(eps)
    }
}

pub(crate) fn run<T: LogDensity + ?Sized>(
    target: &T,
    config: &ChainConfig,
    chain: usize,
    start: Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<ChainOutput> {
    let dim = target.dim();
    let mut integ = Integrator {
        target,
        metric: Metric::identity(dim),
        chain,
        scratch: vec![0.0; dim],
        gw: vec![0.0; dim],
    };
    let mut current = integ.eval(start, 0)?;
    if !current.lp.is_finite() {
        return Err(Error::Initialization { chain, attempts: 1 });
    }

    let ends = window_ends(config.warmup, config.adaptation);
    let first = window_start(config.warmup);
    let mut estimator = Welford::new(dim, config.adaptation == Adaptation::DenseCovariance);
    let mut eps = integ.reasonable_step(&current, rng)?;
    let mut dual = DualAveraging::new(TARGET_ACCEPT, eps);
    let mut next_end = 0;

    let steps_for = |eps: f64, rng: &mut ChaCha8Rng| -> usize {
        let jitter: f64 = rng.random_range(0.5..1.5);
        ((jitter * config.integration_time / eps).round() as usize).clamp(1, config.max_leapfrog)
    };

    let total = config.warmup + config.draws_per_chain;
    let mut draws = Vec::with_capacity(config.draws_per_chain);
    let mut accept_sum = 0.0;
    let mut divergences = 0;
    for it in 0..total {
        let warm = it < config.warmup;
        if it == config.warmup {
            eps = dual.final_step();
        }
        let steps = steps_for(eps, rng);
        let (accept, proposal) = integ.propose(&current, eps, steps, rng, it + 1)?;
        if proposal.is_none() && !warm {
            divergences += 1;
        }
        if let Some(state) = proposal {
            if rng.random::<f64>() < accept {
                current = state;
            }
        }
        if warm {
            eps = dual.update(accept);
            if in_estimation_half(it, first, &ends, next_end) {
                estimator.push(&current.x);
                if it + 1 == ends[next_end] {
                    if let Some(m) = estimator.metric() {
                        integ.metric = m;
                    }
                    estimator.reset();
                    next_end += 1;
                    eps = integ.reasonable_step(&current, rng)?;
                    dual = DualAveraging::new(TARGET_ACCEPT, eps);
                }
            }
        } else {
            accept_sum += accept;
            draws.push(target.constrain(&current.x));
        }
    }

    Ok(ChainOutput {
        draws,
        stats: ChainStats {
            acceptance_rate: accept_sum / config.draws_per_chain as f64,
            step_size: eps,
            divergences,
            final_position: current.x,
        },
    })
}
