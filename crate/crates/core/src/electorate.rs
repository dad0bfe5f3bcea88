//! Monte-Carlo elections: how often does the party offering voters more
//! total utility win?
//!
//! Each trial draws a location `μ`, a population of voters around it, and a
//! policy pair. Voters compare `u_v(z) = z^T v` for the two policies and vote
//! by one of three rules. Records are then binned by the total utility
//! difference to check that the win frequency rises with it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GameError, Result};
use crate::linalg::{dot, norm, scale};
use crate::model::{in_domain, Party};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Vote for the higher utility, fair coin on ties.
    Hardmax,
    /// Vote A with probability `1/2 + (u_A - u_B) / (2ξ)`, clamped to `[0, 1]`.
    Linear,
    /// Vote A with probability `e^{u_A/ξ} / (e^{u_A/ξ} + e^{u_B/ξ})`.
    Softmax,
}

impl std::str::FromStr for Criterion {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardmax" => Ok(Criterion::Hardmax),
            "linear" => Ok(Criterion::Linear),
            "softmax" => Ok(Criterion::Softmax),
            other => Err(GameError::param(
                "criterion",
                format!("unknown criterion `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VoterDistribution {
    /// Each coordinate uniform on `[μ - spread, μ + spread]`.
    Uniform,
    /// Each coordinate normal with mean `μ` and standard deviation `spread`.
    Gaussian,
}

impl std::str::FromStr for VoterDistribution {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(VoterDistribution::Uniform),
            "gaussian" => Ok(VoterDistribution::Gaussian),
            other => Err(GameError::param(
                "distribution",
                format!("unknown distribution `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PolicySampler {
    /// Fresh pair each trial, uniform in the unit ball (which lies inside
    /// the box).
    UnitBall,
    Fixed {
        z_a: Vec<f64>,
        z_b: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub voters: usize,
    pub dim: usize,
    pub trials: usize,
    pub criterion: Criterion,
    pub distribution: VoterDistribution,
    pub xi: f64,
    pub mu_range: (f64, f64),
    /// Half-width (uniform) or standard deviation (Gaussian).
    pub spread: f64,
    pub policies: PolicySampler,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            voters: 100,
            dim: 1,
            trials: 10_000,
            criterion: Criterion::Hardmax,
            distribution: VoterDistribution::Uniform,
            xi: 0.01,
            mu_range: (-0.005, 0.005),
            spread: 0.05,
            policies: PolicySampler::UnitBall,
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(GameError::param("xi", "must be positive and finite"));
        }
        if self.trials == 0 {
            return Err(GameError::param("trials", "must be at least 1"));
        }
        if self.voters == 0 {
            return Err(GameError::param("voters", "must be at least 1"));
        }
        if self.dim == 0 {
            return Err(GameError::param("k", "must be at least 1"));
        }
        let (lo, hi) = self.mu_range;
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(GameError::param(
                "mu_range",
                format!("[{lo}, {hi}] is not an interval"),
            ));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(GameError::param("spread", "must be positive and finite"));
        }
        if let PolicySampler::Fixed { z_a, z_b } = &self.policies {
            for z in [z_a, z_b] {
                if z.len() != self.dim {
                    return Err(GameError::DimensionMismatch {
                        expected: self.dim,
                        found: z.len(),
                    });
                }
                if !in_domain(z) {
                    return Err(GameError::OutsideDomain(format!("{z:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Probability that a voter with utilities `u_a`, `u_b` votes for A.
pub fn vote_prob(u_a: f64, u_b: f64, criterion: Criterion, xi: f64) -> f64 {
    let d = u_a - u_b;
    match criterion {
        Criterion::Hardmax => {
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                0.0
            } else {
                0.5
            }
        }
        Criterion::Linear => (0.5 + d / (2.0 * xi)).clamp(0.0, 1.0),
        Criterion::Softmax => {
            let t = d / xi;
            if t >= 0.0 {
                1.0 / (1.0 + (-t).exp())
            } else {
                let e = t.exp();
                e / (1.0 + e)
            }
        }
    }
}

pub fn cast_vote<R: Rng + ?Sized>(
    u_a: f64,
    u_b: f64,
    criterion: Criterion,
    xi: f64,
    rng: &mut R,
) -> Party {
    if rng.random::<f64>() < vote_prob(u_a, u_b, criterion, xi) {
        Party::A
    } else {
        Party::B
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub mu: f64,
    /// Total utility difference `Σ_v (u_v(z_A) - u_v(z_B))`.
    pub delta: f64,
    pub votes_a: usize,
    pub votes_b: usize,
    pub winner: Party,
}

fn unit_ball<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&dir);
        if n > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / k as f64);
            return scale(&dir, radius / n);
        }
    }
}

fn run_trial(cfg: &SimConfig, trial: usize) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(trial as u64));
    let (lo, hi) = cfg.mu_range;
    let mu = if lo < hi {
        rng.random_range(lo..=hi)
    } else {
        lo
    };
    let normal = Normal::new(mu, cfg.spread).expect("validated spread");
    let mut voter = vec![0.0; cfg.dim];
    let (z_a, z_b) = match &cfg.policies {
        PolicySampler::UnitBall => (unit_ball(cfg.dim, &mut rng), unit_ball(cfg.dim, &mut rng)),
        PolicySampler::Fixed { z_a, z_b } => (z_a.clone(), z_b.clone()),
    };
    let mut delta = 0.0;
    let mut votes_a = 0;
    for _ in 0..cfg.voters {
        for c in voter.iter_mut() {
            *c = match cfg.distribution {
                VoterDistribution::Uniform => rng.random_range(mu - cfg.spread..=mu + cfg.spread),
                VoterDistribution::Gaussian => normal.sample(&mut rng),
            };
        }
        let (u_a, u_b) = (dot(&z_a, &voter), dot(&z_b, &voter));
        delta += u_a - u_b;
        if cast_vote(u_a, u_b, cfg.criterion, cfg.xi, &mut rng) == Party::A {
            votes_a += 1;
        }
    }
    let votes_b = cfg.voters - votes_a;
    let winner = match votes_a.cmp(&votes_b) {
        std::cmp::Ordering::Greater => Party::A,
        std::cmp::Ordering::Less => Party::B,
        std::cmp::Ordering::Equal => {
            if rng.random::<bool>() {
                Party::A
            } else {
                Party::B
            }
        }
    };
    TrialRecord {
        trial,
        mu,
        delta,
        votes_a,
        votes_b,
        winner,
    }
}

/// Runs all trials; trial `i` uses seed `cfg.seed + i`.
pub fn run_trials(cfg: &SimConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub index: usize,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub win_freq: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonicityReport {
    pub bins: Vec<Bin>,
    /// Goodman-Kruskal gamma between bin index and win frequency.
    pub score: f64,
    /// Spearman correlation of the same pairs, for reference.
    pub spearman: f64,
}

pub const MIN_RECORDS: usize = 100;

/// `(concordant - discordant) / (concordant + discordant)` over pairs of
/// bins; tied frequencies count as neither. Zero when every pair is tied.
pub fn gamma_score(values: &[f64]) -> f64 {
    let (mut con, mut dis) = (0u64, 0u64);
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if values[j] > values[i] {
                con += 1;
            } else if values[j] < values[i] {
                dis += 1;
            }
        }
    }
    if con + dis == 0 {
        0.0
    } else {
        (con as f64 - dis as f64) / (con + dis) as f64
    }
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation of `values` against their positions.
pub fn spearman_score(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let ry = average_ranks(values);
    let mean = (n - 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, y) in ry.iter().enumerate() {
        let (dx, dy) = (i as f64 - mean, y - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Sorts by `delta`, splits into `bins` equal-count bins, and scores how
/// monotone the per-bin win frequency of A is.
pub fn isotonicity_report(records: &[TrialRecord], bins: usize) -> Result<IsotonicityReport> {
    if records.len() < MIN_RECORDS {
        return Err(GameError::TooFewRecords {
            min: MIN_RECORDS,
            found: records.len(),
        });
    }
    if bins == 0 || bins > records.len() {
        return Err(GameError::param(
            "bins",
            format!("{bins} bins for {} records", records.len()),
        ));
    }
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.trial.cmp(&b.trial)));
    let n = sorted.len();
    let out: Vec<Bin> = (0..bins)
        .map(|b| {
            let chunk = &sorted[b * n / bins..(b + 1) * n / bins];
            let wins = chunk.iter().filter(|r| r.winner == Party::A).count();
            Bin {
                index: b,
                delta_lo: chunk[0].delta,
                delta_hi: chunk[chunk.len() - 1].delta,
                win_freq: wins as f64 / chunk.len() as f64,
                count: chunk.len(),
            }
        })
        .collect();
    let freqs: Vec<f64> = out.iter().map(|b| b.win_freq).collect();
    Ok(IsotonicityReport {
        score: gamma_score(&freqs),
        spearman: spearman_score(&freqs),
        bins: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trial: usize, delta: f64, winner: Party) -> TrialRecord {
        TrialRecord {
            trial,
            mu: 0.0,
            delta,
            votes_a: 0,
            votes_b: 0,
            winner,
        }
    }

    #[test]
    fn vote_probabilities() {
        for c in [Criterion::Hardmax, Criterion::Linear, Criterion::Softmax] {
            assert_eq!(vote_prob(0.3, 0.3, c, 0.01), 0.5);
        }
        assert_eq!(vote_prob(0.02, 0.01, Criterion::Linear, 0.01), 1.0);
        assert_eq!(vote_prob(0.0, 0.5, Criterion::Linear, 0.01), 0.0);
        let p = vote_prob(0.01 * 3f64.ln(), 0.0, Criterion::Softmax, 0.01);
        assert!((p - 0.75).abs() < 1e-12);
        // No overflow far from zero.
        assert_eq!(vote_prob(-1e3, 1e3, Criterion::Softmax, 1e-3), 0.0);
        assert_eq!(vote_prob(1e3, -1e3, Criterion::Softmax, 1e-3), 1.0);
        for c in [Criterion::Linear, Criterion::Softmax] {
            assert!((vote_prob(0.7, -0.4, c, 1e6) - 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn parsing() {
        assert_eq!("softmax".parse::<Criterion>().unwrap(), Criterion::Softmax);
        assert!("plurality".parse::<Criterion>().is_err());
        assert_eq!(
            "gaussian".parse::<VoterDistribution>().unwrap(),
            VoterDistribution::Gaussian
        );
        assert!("cauchy".parse::<VoterDistribution>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = [
            SimConfig {
                xi: 0.0,
                ..Default::default()
            },
            SimConfig {
                trials: 0,
                ..Default::default()
            },
            SimConfig {
                mu_range: (0.1, -0.1),
                ..Default::default()
            },
            SimConfig {
                policies: PolicySampler::Fixed {
                    z_a: vec![0.1, 0.2],
                    z_b: vec![0.0],
                },
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn votes_are_conserved_and_reproducible() {
        let cfg = SimConfig {
            trials: 200,
            dim: 2,
            distribution: VoterDistribution::Gaussian,
            criterion: Criterion::Softmax,
            ..Default::default()
        };
        let a = run_trials(&cfg).unwrap();
        assert!(a.iter().all(|r| r.votes_a + r.votes_b == cfg.voters));
        assert!(a.iter().all(|r| (-0.005..=0.005).contains(&r.mu)));
        assert_eq!(a, run_trials(&cfg).unwrap());
    }

    #[test]
    fn single_voter_hardmax_follows_sign() {
        let cfg = SimConfig {
            voters: 1,
            trials: 300,
            ..Default::default()
        };
        for r in run_trials(&cfg).unwrap() {
            if r.delta > 0.0 {
                assert_eq!(r.winner, Party::A);
            } else if r.delta < 0.0 {
                assert_eq!(r.winner, Party::B);
            }
        }
    }

    #[test]
    fn scores() {
        assert_eq!(gamma_score(&[0.0, 0.0, 0.0, 0.4, 1.0, 1.0]), 1.0);
        assert_eq!(gamma_score(&[1.0, 0.5, 0.0]), -1.0);
        assert_eq!(gamma_score(&[0.3; 5]), 0.0);
        assert!((spearman_score(&[0.1, 0.2, 0.3, 0.4]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_records_score_one() {
        let recs: Vec<_> = (0..1000)
            .map(|i| {
                let d = i as f64 - 499.5;
                record(i, d, if d > 0.0 { Party::A } else { Party::B })
            })
            .collect();
        let rep = isotonicity_report(&recs, 20).unwrap();
        assert_eq!(rep.score, 1.0);
        assert_eq!(rep.bins.iter().map(|b| b.count).sum::<usize>(), 1000);
        assert!(rep.bins.windows(2).all(|w| w[0].delta_hi <= w[1].delta_lo));
    }

    #[test]
    fn too_few_records() {
        let recs: Vec<_> = (0..99).map(|i| record(i, 0.0, Party::A)).collect();
        assert!(matches!(
            isotonicity_report(&recs, 20),
            Err(GameError::TooFewRecords { .. })
        ));
    }
}
