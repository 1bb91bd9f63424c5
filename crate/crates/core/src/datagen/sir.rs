//! SIR compartmental model integrated with classical RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the internal step.
pub const DEFAULT_MAX_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirConfig {
    /// Contact rate.
    pub xi: f64,
    /// Recovery rate.
    pub gamma: f64,
    pub population: f64,
    pub s0: f64,
    pub i0: f64,
    pub r0: f64,
    /// Time at which the initial values hold.
    pub t0: f64,
    /// Output times, strictly increasing and not before `t0`.
    pub t_grid: Vec<f64>,
    pub max_step: f64,
}

impl SirConfig {
    /// Starts with `i0` infected, nobody recovered, at `t0 = 0`.
    pub fn new(xi: f64, gamma: f64, population: f64, i0: f64, t_grid: Vec<f64>) -> Self {
        Self {
            xi,
            gamma,
            population,
            s0: population - i0,
            i0,
            r0: 0.0,
            t0: 0.0,
            t_grid,
            max_step: DEFAULT_MAX_STEP,
        }
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("SIR config: {m}")));
        if !(self.xi >= 0.0) || !(self.gamma > 0.0) {
            return bad("contact rate must be >= 0 and recovery rate > 0");
        }
        if !(self.population > 0.0) || self.s0 < 0.0 || self.i0 < 0.0 || self.r0 < 0.0 {
            return bad("population must be positive and compartments non-negative");
        }
        let total = self.s0 + self.i0 + self.r0;
        if (total - self.population).abs() > 1e-9 * self.population {
            return bad("s0 + i0 + r0 must equal the population");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        if self.t_grid.first().is_some_and(|&t| t < self.t0)
            || self.t_grid.windows(2).any(|w| !(w[1] > w[0]))
        {
            return bad("t_grid must be strictly increasing and start at or after t0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirTrajectory {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

fn rhs(y: [f64; 3], xi: f64, gamma: f64, p: f64) -> [f64; 3] {
    let infection = xi * y[0] * y[1] / p;
    let recovery = gamma * y[1];
    [-infection, infection - recovery, recovery]
}

fn rk4_step(y: [f64; 3], h: f64, xi: f64, gamma: f64, p: f64) -> [f64; 3] {
    let add =
        |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = rhs(y, xi, gamma, p);
    let k2 = rhs(add(y, k1, 0.5 * h), xi, gamma, p);
    let k3 = rhs(add(y, k2, 0.5 * h), xi, gamma, p);
    let k4 = rhs(add(y, k3, h), xi, gamma, p);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Solves the SIR equations and reports the state at each grid time.
///
/// Each interval between output times is split into equal steps no longer
/// than `max_step`, so the grid is hit exactly.
pub fn sir_solve(cfg: &SirConfig) -> Result<SirTrajectory> {
    cfg.validate()?;
    let mut y = [cfg.s0, cfg.i0, cfg.r0];
    let mut t = cfg.t0;
    let n = cfg.t_grid.len();
    let mut out = SirTrajectory {
        t: cfg.t_grid.clone(),
        s: Vec::with_capacity(n),
        i: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
    };
    for &target in &cfg.t_grid {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / cfg.max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for k in 0..steps {
                y = rk4_step(y, h, cfg.xi, cfg.gamma, cfg.population);
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Solver {
                        time: t + (k + 1) as f64 * h,
                    });
                }
            }
        }
        t = target;
        out.s.push(y[0]);
        out.i.push(y[1]);
        out.r.push(y[2]);
    }
    Ok(out)
}

/// Infected count at a single time.
pub fn infected_at(xi: f64, gamma: f64, population: f64, i0: f64, t0: f64, t: f64) -> Result<f64> {
    let cfg = SirConfig::new(xi, gamma, population, i0, vec![t]).with_t0(t0);
    Ok(sir_solve(&cfg)?.i[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(end: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|k| end * k as f64 / n as f64).collect()
    }

    #[test]
    fn no_contact_decays_exponentially() {
        let cfg = SirConfig::new(0.0, 0.5, 1000.0, 100.0, vec![0.5, 2.0]);
        let sol = sir_solve(&cfg).unwrap();
        let exact = 100.0 * (-1.0f64).exp();
        assert!((sol.i[1] - 36.7879).abs() < 1e-4);
        assert!((sol.i[1] - exact).abs() / exact < 1e-4);
    }

    #[test]
    fn step_halving_shows_fourth_order() {
        let end = |h: f64| {
            let cfg = SirConfig::new(1.6, 0.7, 1000.0, 10.0, vec![14.0]).with_max_step(h);
            sir_solve(&cfg).unwrap().i[0]
        };
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let first = (a - b).abs();
        let second = (b - c).abs();
        assert!(second < first / 15.0, "{first} then {second}");
    }

    #[test]
    fn grid_points_are_hit_exactly() {
        let cfg = SirConfig::new(2.0, 0.5, 1000.0, 10.0, vec![0.003, 0.5, 0.5001, 1.0]);
        let sol = sir_solve(&cfg).unwrap();
        let coarse = SirConfig::new(2.0, 0.5, 1000.0, 10.0, vec![1.0]);
        let direct = sir_solve(&coarse).unwrap();
        assert!((sol.i[3] - direct.i[0]).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(sir_solve(&SirConfig::new(1.0, 0.0, 100.0, 1.0, vec![1.0])).is_err());
        assert!(sir_solve(&SirConfig::new(1.0, 0.5, 100.0, 1.0, vec![1.0, 0.5])).is_err());
        let mut c = SirConfig::new(1.0, 0.5, 100.0, 1.0, vec![1.0]);
        c.r0 = 5.0;
        assert!(sir_solve(&c).is_err());
    }

    proptest! {
        #[test]
        fn conservation_and_monotonicity(
            xi in 0.0f64..3.0,
            gamma in 0.05f64..1.5,
            i0 in 1.0f64..50.0,
            end in 0.5f64..14.0,
        ) {
            let p = 1000.0;
            let cfg = SirConfig::new(xi, gamma, p, i0, grid(end, 60));
            let sol = sir_solve(&cfg).unwrap();
            let mut prev_s = cfg.s0;
            let mut prev_r = cfg.r0;
            for k in 0..sol.t.len() {
                let total = sol.s[k] + sol.i[k] + sol.r[k];
                prop_assert!((total - p).abs() <= 1e-8 * p);
                prop_assert!(sol.s[k] >= 0.0 && sol.i[k] >= 0.0 && sol.r[k] >= 0.0);
                prop_assert!(sol.i[k] <= p);
                prop_assert!(sol.s[k] <= prev_s + 1e-10);
                prop_assert!(sol.r[k] >= prev_r - 1e-10);
                prev_s = sol.s[k];
                prev_r = sol.r[k];
            }
        }
    }
}
