//! Streaming moments and autocorrelation-corrected standard errors.

use serde::Serialize;

/// Count, mean and sum of squared deviations, updated one value at a time
/// and mergeable across chains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        xs.iter().copied().collect()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan's pairwise update.
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / count as f64;
        RunningStats { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased variance; zero with fewer than two values.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean assuming independent values.
    pub fn naive_stderr(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.sample_variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Window constant of the self-consistent truncation rule.
pub const IAT_WINDOW: f64 = 5.0;

/// Integrated autocorrelation time `1 + 2 sum_{t=1}^{M} rho(t)`, equal to 1
/// for independent values. `M` is the first lag with `M >= 5 tau(M)`.
pub fn integrated_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 1.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let c0 = centred.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for t in 1..n {
        let ct = centred[..n - t].iter().zip(&centred[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * ct / c0;
        if t as f64 >= IAT_WINDOW * tau {
            break;
        }
    }
    tau.max(1.0 / n as f64)
}

/// Mean of one chain's series with its autocorrelation-corrected error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub stats: RunningStats,
    pub iat: f64,
}

impl SeriesSummary {
    pub fn of(xs: &[f64]) -> Self {
        SeriesSummary { stats: RunningStats::from_slice(xs), iat: integrated_autocorrelation(xs) }
    }

    /// Variance of the mean, `s^2 tau / n`.
    pub fn mean_variance(&self) -> f64 {
        let n = self.stats.count();
        if n == 0 {
            return f64::NAN;
        }
        self.stats.sample_variance() * self.iat / n as f64
    }
}

/// Pooled mean over independent chains and its standard error, each chain
/// weighted by its sample count.
pub fn pooled(series: &[SeriesSummary]) -> (RunningStats, f64) {
    let total = series.iter().fold(RunningStats::new(), |acc, s| acc.merge(&s.stats));
    let n = total.count() as f64;
    let var = series
        .iter()
        .map(|s| {
            let w = s.stats.count() as f64 / n;
            w * w * s.mean_variance()
        })
        .sum::<f64>();
    (total, var.sqrt())
}
