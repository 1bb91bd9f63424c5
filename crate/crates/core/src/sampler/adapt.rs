use super::Adaptation;

/// Linear preconditioner `L` with `L L^T` approximating the posterior covariance.
#[derive(Debug, Clone)]
pub(crate) struct Metric {
    n: usize,
    /// Lower-triangular factor, row-major.
    chol: Vec<f64>,
}

impl Metric {
    pub fn identity(n: usize) -> Self {
        let mut chol = vec![0.0; n * n];
        for i in 0..n {
            chol[i * n + i] = 1.0;
        }
        Self { n, chol }
    }

    /// `out = L p`
    pub fn forward(&self, p: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i + 1];
            out[i] = row.iter().zip(p).map(|(a, b)| a * b).sum();
        }
    }

    /// `out = L^T g`
    pub fn transpose(&self, g: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let gi = g[i];
            for j in 0..=i {
                out[j] += self.chol[i * n + j] * gi;
            }
        }
    }

    fn from_covariance(cov: &[f64], n: usize) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = cov[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, chol: l })
    }

    fn diagonal(var: &[f64]) -> Self {
        let n = var.len();
        let mut chol = vec![0.0; n * n];
        for i in 0..n {
            chol[i * n + i] = var[i].sqrt();
        }
        Self { n, chol }
    }
}

/// Streaming mean and covariance.
#[derive(Debug, Clone)]
pub(crate) struct Welford {
    n: usize,
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    dense: bool,
}

impl Welford {
    pub fn new(n: usize, dense: bool) -> Self {
        Self {
            n,
            count: 0,
            mean: vec![0.0; n],
            m2: vec![0.0; if dense { n * n } else { n }],
            dense,
        }
    }

    pub fn reset(&mut self) {
        self.count = 0;
        self.mean.iter_mut().for_each(|v| *v = 0.0);
        self.m2.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let c = self.count as f64;
        let n = self.n;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for i in 0..n {
            self.mean[i] += delta[i] / c;
        }
        if self.dense {
            for i in 0..n {
                let di = x[i] - self.mean[i];
                for j in 0..n {
                    self.m2[i * n + j] += delta[j] * di;
                }
            }
        } else {
            for i in 0..n {
                self.m2[i] += delta[i] * (x[i] - self.mean[i]);
            }
        }
    }

    /// Regularized estimate shrunk towards a small multiple of the identity.
    pub fn metric(&self) -> Option<Metric> {
        if self.count < 3 {
            return None;
        }
        let c = self.count as f64;
        let shrink = c / (c + 5.0);
        let ridge = 1e-3 * 5.0 / (c + 5.0);
        let n = self.n;
        if self.dense {
            let mut cov: Vec<f64> = self.m2.iter().map(|v| shrink * v / (c - 1.0)).collect();
            for i in 0..n {
                cov[i * n + i] += ridge;
            }
            Metric::from_covariance(&cov, n).or_else(|| {
                let var: Vec<f64> = (0..n).map(|i| cov[i * n + i]).collect();
                Some(Metric::diagonal(&var))
            })
        } else {
            let var: Vec<f64> = self
                .m2
                .iter()
                .map(|v| shrink * v / (c - 1.0) + ridge)
                .collect();
            Some(Metric::diagonal(&var))
        }
    }
}

/// Nesterov dual averaging on the log step size.
#[derive(Debug, Clone)]
pub(crate) struct DualAveraging {
    target: f64,
    mu: f64,
    log_eps_bar: f64,
    h_bar: f64,
    t: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    pub fn new(target: f64, eps: f64) -> Self {
        Self {
            target,
            mu: (10.0 * eps).ln(),
            log_eps_bar: eps.ln(),
            h_bar: 0.0,
            t: 0.0,
        }
    }

    /// Feeds one acceptance statistic, returns the next step size.
    pub fn update(&mut self, accept: f64) -> f64 {
        self.t += 1.0;
        let eta = 1.0 / (self.t + Self::T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept);
        let log_eps = self.mu - self.t.sqrt() / Self::GAMMA * self.h_bar;
        let w = self.t.powf(-Self::KAPPA);
        self.log_eps_bar = w * log_eps + (1.0 - w) * self.log_eps_bar;
        log_eps.exp()
    }

    pub fn final_step(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Warmup iterations after which the metric is re-estimated.
///
/// Windows start after a 10% fast buffer, double in length, and end at 75% of
/// warmup; the last quarter adapts the step size only.
pub(crate) fn window_ends(warmup: usize, adaptation: Adaptation) -> Vec<usize> {
    if adaptation == Adaptation::None || warmup < 40 {
        return Vec::new();
    }
    let start = warmup / 10;
    let end = warmup * 3 / 4;
    let mut size = 25.min(end - start);
    let mut ends = Vec::new();
    let mut pos = start;
    while pos < end {
        let mut next = pos + size;
        if next + 2 * size > end {
            next = end;
        }
        ends.push(next);
        pos = next;
        size *= 2;
    }
    ends
}

pub(crate) fn window_start(warmup: usize) -> usize {
    warmup / 10
}

/// Whether warmup iteration `it` feeds the estimate of window `window`.
///
/// Only the second half of each window is used, so the drift of a chain
/// that is still approaching the typical set does not inflate the metric.
pub(crate) fn in_estimation_half(it: usize, first: usize, ends: &[usize], window: usize) -> bool {
    let Some(&end) = ends.get(window) else {
        return false;
    };
    let start = if window == 0 { first } else { ends[window - 1] };
    it >= start + (end - start) / 2 && it < end
}
