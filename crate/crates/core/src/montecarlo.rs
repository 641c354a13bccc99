//! Monte Carlo ground truth for the signal model.
//!
//! Every squared fading magnitude is drawn as a unit-mean exponential, Bob
//! and Eve see independent fading on every link, and
//!
//! ```text
//! gamma_X = (E_s / (1 + d_X^a)) w / (N0 + sum_i (E_si / (1 + d_Xi^a)) w_i)
//! ```
//!
//! Trials are cut into blocks of [`BLOCK_TRIALS`]. Block `k` draws from the
//! ChaCha8 keystream selected by `(seed, stream = k)`, so the estimate for a
//! given `(scenario, seed, trials)` is bit-identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::analytic::{Method, SopResult};
use crate::exec::Execution;
use crate::scenario::{Scenario, SecrecyTarget, Side};

/// Trials per independent substream.
pub const BLOCK_TRIALS: u64 = 1 << 16;

/// Normal quantile behind the reported 95% interval.
pub const CI_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub gamma_b: f64,
    pub gamma_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub sop_hat: f64,
    pub trials: u64,
    pub ci_half_width: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_counts(outages: u64, trials: u64, seed: u64) -> Self {
        let sop_hat = outages as f64 / trials as f64;
        Self {
            sop_hat,
            trials,
            ci_half_width: ci_half_width(sop_hat, trials),
            seed,
        }
    }

    /// Standard error `sqrt(p (1 - p) / n)` at the estimate.
    pub fn std_error(&self) -> f64 {
        (self.sop_hat * (1.0 - self.sop_hat) / self.trials as f64).sqrt()
    }

    pub fn to_result(&self) -> SopResult {
        SopResult {
            value: self.sop_hat,
            method: Method::MonteCarlo,
            fallback_pairs: Vec::new(),
            uncertainty: Some(self.ci_half_width),
        }
    }
}

/// `1.96 sqrt(p (1 - p) / n)`.
pub fn ci_half_width(p: f64, trials: u64) -> f64 {
    CI_Z * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Seed for the `index`-th independent estimate derived from `seed` (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Received mean energies, precomputed once per scenario.
#[derive(Debug, Clone)]
pub struct SinrSampler {
    n0: f64,
    signal_b: f64,
    signal_e: f64,
    interference_b: Vec<f64>,
    interference_e: Vec<f64>,
}

impl SinrSampler {
    pub fn new(s: &Scenario) -> Self {
        Self {
            n0: s.n0(),
            signal_b: s.es_lin() / s.main_path_loss(Side::Bob),
            signal_e: s.es_lin() / s.main_path_loss(Side::Eve),
            interference_b: s.interference_means(Side::Bob),
            interference_e: s.interference_means(Side::Eve),
        }
    }

    fn one_side<R: Rng + ?Sized>(&self, signal: f64, interference: &[f64], rng: &mut R) -> f64 {
        let w: f64 = rng.sample(Exp1);
        let mut den = self.n0;
        for &b in interference {
            let wi: f64 = rng.sample(Exp1);
            den += b * wi;
        }
        signal * w / den
    }

    /// Draws Bob's side first, then Eve's.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SinrSample {
        let gamma_b = self.one_side(self.signal_b, &self.interference_b, rng);
        let gamma_e = self.one_side(self.signal_e, &self.interference_e, rng);
        SinrSample { gamma_b, gamma_e }
    }

    /// Outage count over `n` trials drawn from `rng`.
    pub fn count_outages<R: Rng + ?Sized>(&self, rate_factor: f64, n: u64, rng: &mut R) -> u64 {
        let mut hits = 0;
        for _ in 0..n {
            let p = self.sample(rng);
            // log2((1 + g_B)/(1 + g_E)) <= r_s
            if 1.0 + p.gamma_b <= rate_factor * (1.0 + p.gamma_e) {
                hits += 1;
            }
        }
        hits
    }
}

pub fn sample_sinr_pair<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> SinrSample {
    SinrSampler::new(s).sample(rng)
}

pub fn estimate_sop(s: &Scenario, t: &SecrecyTarget, trials: u64, seed: u64) -> McEstimate {
    estimate_sop_with(s, t, trials, seed, Execution::default())
}

/// # Panics
///
/// Panics if `trials == 0`.
pub fn estimate_sop_with(
    s: &Scenario,
    t: &SecrecyTarget,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> McEstimate {
    assert!(trials >= 1, "Monte Carlo needs at least one trial");
    let sampler = SinrSampler::new(s);
    let rate = t.rate_factor();
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let counts = exec.map(blocks as usize, |k| {
        let k = k as u64;
        let n = BLOCK_TRIALS.min(trials - k * BLOCK_TRIALS);
        sampler.count_outages(rate, n, &mut substream(seed, k))
    });
    McEstimate::from_counts(counts.iter().sum(), trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_scenario, Interferer};

    #[test]
    fn interference_free_mean() {
        let s = Scenario::new(500.0, 1.0, 3.0, 2.0, 4.0, vec![]).unwrap();
        let sampler = SinrSampler::new(&s);
        let mut rng = substream(7, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| sampler.sample(&mut rng).gamma_b)
            .sum::<f64>()
            / n as f64;
        let expected = s.gamma_tilde(Side::Bob);
        assert!((mean / expected - 1.0).abs() < 0.01, "{mean} vs {expected}");
    }

    #[test]
    fn ratio_invariance() {
        let mk = |k: f64| {
            let ints = vec![
                Interferer::new(20.0 * k, 5.0, 9.0).unwrap(),
                Interferer::new(3.0 * k, 2.0, 6.0).unwrap(),
            ];
            Scenario::new(400.0 * k, k, 3.0, 2.5, 7.0, ints).unwrap()
        };
        let (a, b) = (SinrSampler::new(&mk(1.0)), SinrSampler::new(&mk(10.0)));
        let (mut ra, mut rb) = (substream(3, 1), substream(3, 1));
        for _ in 0..1000 {
            let (x, y) = (a.sample(&mut ra), b.sample(&mut rb));
            assert!((x.gamma_b - y.gamma_b).abs() <= 1e-12 * x.gamma_b);
            assert!((x.gamma_e - y.gamma_e).abs() <= 1e-12 * x.gamma_e);
        }
    }

    #[test]
    fn samples_are_finite_and_nonnegative() {
        let s = default_scenario(3.0, 40.0, 15.0).unwrap();
        let mut rng = substream(1, 0);
        for _ in 0..10_000 {
            let p = sample_sinr_pair(&s, &mut rng);
            assert!(p.gamma_b.is_finite() && p.gamma_b >= 0.0);
            assert!(p.gamma_e.is_finite() && p.gamma_e >= 0.0);
        }
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let s = default_scenario(3.0, 20.0, 15.0).unwrap();
        let t = SecrecyTarget::new(1.0).unwrap();
        let n = 3 * BLOCK_TRIALS + 17;
        let a = estimate_sop_with(&s, &t, n, 99, Execution::Sequential);
        let b = estimate_sop_with(&s, &t, n, 99, Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(a, estimate_sop(&s, &t, n, 99));
        assert_ne!(a.sop_hat, estimate_sop(&s, &t, n, 100).sop_hat);
    }

    #[test]
    fn ci_formula() {
        let e = McEstimate::from_counts(250, 1000, 0);
        assert_eq!(e.ci_half_width, 1.96 * (0.25f64 * 0.75 / 1000.0).sqrt());
        let q = McEstimate::from_counts(1000, 4000, 0);
        assert!((e.ci_half_width / q.ci_half_width - 2.0).abs() < 1e-12);
        assert_eq!(McEstimate::from_counts(0, 10, 0).ci_half_width, 0.0);
    }
}
