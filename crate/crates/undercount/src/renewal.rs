//! Gamma renewal-process simulation.
//!
//! Events arrive with iid Gamma(α, β) interarrival times starting at t = 0
//! (an ordinary, non-equilibrium renewal process). Counting events in a
//! window of width T then follows the Gamma-count distribution exactly for
//! the first window of each independent realization, which is what the
//! Monte-Carlo oracle uses; the multi-window mode bins one long realization
//! into consecutive windows for display-style output.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Simulation settings. `mean_interarrival` is α/β, so β = α/mean_interarrival.
#[derive(Debug, Clone, Copy)]
pub struct RenewalConfig {
    pub alpha: f64,
    pub mean_interarrival: f64,
    pub horizon: f64,
    pub window_width: f64,
    pub seed: u64,
}

impl RenewalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("mean_interarrival", self.mean_interarrival),
            ("horizon", self.horizon),
            ("window_width", self.window_width),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.window_width > self.horizon {
            return Err(Error::domain("window_width must not exceed horizon"));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.alpha / self.mean_interarrival
    }
}

/// One realization: the event times and the per-window counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub event_times: Vec<f64>,
    pub window_counts: Vec<u64>,
}

/// The RNG used throughout: seedable, counter-based, with independent
/// streams per replicate (stream r of seed s never overlaps stream r').
pub type SimRng = ChaCha8Rng;

pub fn rng_for_replicate(seed: u64, replicate: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// One standard normal draw, Marsaglia polar method.
fn normal_deviate<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// One Gamma(α, β) draw with mean α/β.
///
/// Marsaglia–Tsang squeeze rejection for α ≥ 1; for α < 1 a draw at α + 1
/// is boosted by U^{1/α}.
pub fn gamma_deviate<R: Rng>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    debug_assert!(alpha > 0.0 && beta > 0.0);
    if alpha < 1.0 {
        let boost = rng.random::<f64>().powf(1.0 / alpha);
        return gamma_deviate(alpha + 1.0, beta, rng) * boost;
    }
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (3.0 * d.sqrt());
    loop {
        let x = normal_deviate(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.random::<f64>();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v / beta;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v / beta;
        }
    }
}

/// Run one realization of the renewal process and bin its events into
/// consecutive windows of `window_width` starting at 0.
pub fn simulate_events<R: Rng>(cfg: &RenewalConfig, rng: &mut R) -> Result<SimResult> {
    cfg.validate()?;
    let beta = cfg.beta();
    let mut event_times = Vec::new();
    let mut t = gamma_deviate(cfg.alpha, beta, rng);
    while t < cfg.horizon {
        event_times.push(t);
        t += gamma_deviate(cfg.alpha, beta, rng);
    }
    let n_windows = (cfg.horizon / cfg.window_width).floor() as usize;
    let mut window_counts = vec![0u64; n_windows];
    for &et in &event_times {
        let w = (et / cfg.window_width).floor() as usize;
        if w < n_windows {
            window_counts[w] += 1;
        }
    }
    Ok(SimResult { event_times, window_counts })
}

/// Count events in [0, t) of a fresh realization — the exact construction
/// behind the analytic count PMF.
pub fn first_window_count<R: Rng>(alpha: f64, beta: f64, t: f64, rng: &mut R) -> u64 {
    let mut n = 0u64;
    let mut acc = gamma_deviate(alpha, beta, rng);
    while acc < t {
        n += 1;
        acc += gamma_deviate(alpha, beta, rng);
    }
    n
}

/// First-window counts over `n_replicates` independent realizations, each on
/// its own RNG stream derived from (seed, replicate index).
pub fn replicate_counts(alpha: f64, beta: f64, t: f64, n_replicates: u64, seed: u64) -> Vec<u64> {
    (0..n_replicates)
        .map(|r| {
            let mut rng = rng_for_replicate(seed, r);
            first_window_count(alpha, beta, t, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_count::GammaCountDist;
    use crate::special::p_gamma;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn gamma_deviate_moments() {
        let mut rng = rng_for_replicate(42, 0);
        let draws: Vec<f64> = (0..1_000_000).map(|_| gamma_deviate(2.0, 2.0, &mut rng)).collect();
        let (m, v) = mean_var(&draws);
        assert!((m - 1.0).abs() < 0.005, "mean {m}");
        assert!((v - 0.5).abs() < 0.01, "var {v}");
    }

    #[test]
    fn gamma_deviate_exponential_median() {
        let mut rng = rng_for_replicate(7, 0);
        let median = 2f64.ln() / 3.0;
        let below = (0..1_000_000)
            .filter(|_| gamma_deviate(1.0, 3.0, &mut rng) < median)
            .count() as f64
            / 1e6;
        assert!((below - 0.5).abs() < 0.002, "fraction {below}");
    }

    #[test]
    fn gamma_deviate_small_alpha_ks() {
        // KS test against the analytic CDF at α = β = 0.5, 1e5 draws.
        let mut rng = rng_for_replicate(11, 0);
        let n = 100_000usize;
        let mut draws: Vec<f64> = (0..n).map(|_| gamma_deviate(0.5, 0.5, &mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, &x) in draws.iter().enumerate() {
            let f = p_gamma(0.5, 0.5 * x).unwrap();
            let hi = (i + 1) as f64 / n as f64;
            let lo = i as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        // 1% critical value: 1.63 / sqrt(n)
        assert!(ks < 1.63 / (n as f64).sqrt(), "ks {ks}");
    }

    #[test]
    fn poisson_process_window_moments() {
        let cfg = RenewalConfig {
            alpha: 1.0,
            mean_interarrival: 1.0,
            horizon: 1e6,
            window_width: 1.0,
            seed: 3,
        };
        let mut rng = rng_for_replicate(cfg.seed, 0);
        let res = simulate_events(&cfg, &mut rng).unwrap();
        let counts: Vec<f64> = res.window_counts.iter().map(|&c| c as f64).collect();
        let (m, v) = mean_var(&counts);
        assert!((m - 1.0).abs() < 0.01, "mean {m}");
        assert!((v - 1.0).abs() < 0.02, "var {v}");
    }

    #[test]
    fn overdispersed_case_has_variance_above_mean() {
        let cfg = RenewalConfig {
            alpha: 0.5,
            mean_interarrival: 1.0,
            horizon: 1e5,
            window_width: 1.0,
            seed: 5,
        };
        let mut rng = rng_for_replicate(cfg.seed, 0);
        let res = simulate_events(&cfg, &mut rng).unwrap();
        let counts: Vec<f64> = res.window_counts.iter().map(|&c| c as f64).collect();
        let (m, v) = mean_var(&counts);
        assert!(v / m > 1.0, "ratio {}", v / m);
    }

    #[test]
    fn first_window_counts_match_analytic_pmf() {
        // TV distance between 2e5 replicates and the analytic PMF at (α=2, βT=8).
        let counts = replicate_counts(2.0, 8.0, 1.0, 200_000, 99);
        let mut freq = vec![0u64; 64];
        for &c in &counts {
            freq[(c as usize).min(63)] += 1;
        }
        let d = GammaCountDist::new(2.0, 8.0).unwrap();
        let n = counts.len() as f64;
        let tv: f64 = (0..64)
            .map(|k| (freq[k] as f64 / n - d.pmf(k as u64)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let cfg = RenewalConfig {
            alpha: 2.0,
            mean_interarrival: 0.25,
            horizon: 1000.0,
            window_width: 1.0,
            seed: 17,
        };
        let mut a = rng_for_replicate(cfg.seed, 0);
        let mut b = rng_for_replicate(cfg.seed, 0);
        let ra = simulate_events(&cfg, &mut a).unwrap();
        let rb = simulate_events(&cfg, &mut b).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn event_times_are_increasing_and_within_horizon() {
        let cfg = RenewalConfig {
            alpha: 2.0,
            mean_interarrival: 0.5,
            horizon: 100.0,
            window_width: 1.0,
            seed: 1,
        };
        let mut rng = rng_for_replicate(cfg.seed, 0);
        let res = simulate_events(&cfg, &mut rng).unwrap();
        assert!(res.event_times.windows(2).all(|w| w[0] < w[1]));
        assert!(res.event_times.iter().all(|&t| t < cfg.horizon));
        let total: u64 = res.window_counts.iter().sum();
        assert_eq!(total, res.event_times.len() as u64);
    }

    #[test]
    fn degenerate_config_rejected() {
        let cfg = RenewalConfig {
            alpha: 1.0,
            mean_interarrival: 1.0,
            horizon: 1.0,
            window_width: 2.0,
            seed: 0,
        };
        assert!(cfg.validate().is_err());
    }
}
