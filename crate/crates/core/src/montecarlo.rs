//! Simulated two-party experiment under the disk model and under quantum mechanics.
//!
//! Runs are split into fixed-size shards. Shard `i` draws from the ChaCha8
//! stream `i` of the run seed, so results do not depend on how shards are
//! scheduled across threads; shard tables are merged by adding counts.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circle::{Angle, Colour, Mixture};

/// Runs per shard.
pub const SHARD_RUNS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonteCarloError {
    #[error("setting sampler has no settings to draw from")]
    InvalidSampler,
    #[error("number of runs must be at least 1")]
    NoRuns,
}

/// The generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub alpha: Angle,
    pub beta: Angle,
    pub a: Colour,
    pub b: Colour,
}

/// Where outcomes come from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Classical(&'a Mixture),
    Quantum,
}

/// How each run picks its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum SettingSampler {
    Fixed(Angle, Angle),
    /// Uniform over an explicit list of pairs.
    Pairs(Vec<(Angle, Angle)>),
    /// Alice and Bob choose independently and uniformly from their own lists.
    Grid { alphas: Vec<Angle>, betas: Vec<Angle> },
    /// Both uniform on `[0, 2π)`.
    Continuous,
}

impl SettingSampler {
    fn validate(&self) -> Result<(), MonteCarloError> {
        match self {
            SettingSampler::Pairs(p) if p.is_empty() => Err(MonteCarloError::InvalidSampler),
            SettingSampler::Grid { alphas, betas } if alphas.is_empty() || betas.is_empty() => {
                Err(MonteCarloError::InvalidSampler)
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Angle, Angle) {
        match self {
            SettingSampler::Fixed(a, b) => (*a, *b),
            SettingSampler::Pairs(p) => p[rng.random_range(0..p.len())],
            SettingSampler::Grid { alphas, betas } => (
                alphas[rng.random_range(0..alphas.len())],
                betas[rng.random_range(0..betas.len())],
            ),
            SettingSampler::Continuous => (
                Angle::new(rng.random::<f64>() * TAU),
                Angle::new(rng.random::<f64>() * TAU),
            ),
        }
    }
}

/// One run of the disk model: pick a component, spin the disk, read both stations.
pub fn classical_run<R: Rng>(model: &Mixture, alpha: Angle, beta: Angle, rng: &mut R) -> RunRecord {
    let colouring = model.select(rng.random::<f64>());
    let u = rng.random::<f64>() * TAU;
    // Alice reads the colouring at her setting; Bob's path is Alice's shifted by π, i.e. negated
    let a = colouring.colour_at(alpha.radians() - u);
    let b = -colouring.colour_at(beta.radians() - u);
    RunRecord { alpha, beta, a, b }
}

/// One run of the twisted Malus law: `P(a = b) = (1 - cos(α - β))/2`, fair marginals.
pub fn quantum_run<R: Rng>(alpha: Angle, beta: Angle, rng: &mut R) -> RunRecord {
    let p_equal = 0.5 * (1.0 - (alpha.radians() - beta.radians()).cos());
    let a: Colour = if rng.random::<bool>() { 1 } else { -1 };
    let b = if rng.random::<f64>() < p_equal { a } else { -a };
    RunRecord { alpha, beta, a, b }
}

fn one_run<R: Rng>(source: Source<'_>, sampler: &SettingSampler, rng: &mut R) -> RunRecord {
    let (alpha, beta) = sampler.sample(rng);
    match source {
        Source::Classical(m) => classical_run(m, alpha, beta, rng),
        Source::Quantum => quantum_run(alpha, beta, rng),
    }
}

fn shard_ranges(n_runs: u64) -> impl Iterator<Item = (u64, u64)> {
    let shards = n_runs.div_ceil(SHARD_RUNS);
    (0..shards).map(move |s| (s, (n_runs - s * SHARD_RUNS).min(SHARD_RUNS)))
}

/// Outcome counts at one setting pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub npp: u64,
    pub npm: u64,
    pub nmp: u64,
    pub nmm: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.npp + self.npm + self.nmp + self.nmm
    }

    fn record(&mut self, a: Colour, b: Colour) {
        match (a > 0, b > 0) {
            (true, true) => self.npp += 1,
            (true, false) => self.npm += 1,
            (false, true) => self.nmp += 1,
            (false, false) => self.nmm += 1,
        }
    }

    fn add(&mut self, o: &Counts) {
        self.npp += o.npp;
        self.npm += o.npm;
        self.nmp += o.nmp;
        self.nmm += o.nmm;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingPair(pub Angle, pub Angle);

impl Eq for SettingPair {}

impl PartialOrd for SettingPair {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SettingPair {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.total_cmp(&other.1))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountTable {
    cells: BTreeMap<SettingPair, Counts>,
}

impl CountTable {
    pub fn record(&mut self, r: &RunRecord) {
        self.cells
            .entry(SettingPair(r.alpha, r.beta))
            .or_default()
            .record(r.a, r.b);
    }

    pub fn merge(mut self, other: CountTable) -> CountTable {
        for (k, v) in other.cells {
            self.cells.entry(k).or_default().add(&v);
        }
        self
    }

    pub fn get(&self, alpha: Angle, beta: Angle) -> Option<&Counts> {
        self.cells.get(&SettingPair(alpha, beta))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SettingPair, &Counts)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_runs(&self) -> u64 {
        self.cells.values().map(Counts::total).sum()
    }

    /// CSV `alpha,beta,npp,npm,nmp,nmm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,npp,npm,nmp,nmm\n");
        for (SettingPair(a, b), c) in &self.cells {
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{},{},{}\n",
                a.radians(),
                b.radians(),
                c.npp,
                c.npm,
                c.nmp,
                c.nmm
            ));
        }
        out
    }
}

/// `n_runs` independent runs aggregated into a count table; deterministic in `seed`.
pub fn run_experiment(
    source: Source<'_>,
    sampler: &SettingSampler,
    n_runs: u64,
    seed: u64,
) -> Result<CountTable, MonteCarloError> {
    sampler.validate()?;
    if n_runs == 0 {
        return Err(MonteCarloError::NoRuns);
    }
    let shards: Vec<(u64, u64)> = shard_ranges(n_runs).collect();
    let table = shards
        .into_par_iter()
        .map(|(shard, len)| {
            let mut rng = stream_rng(seed, shard);
            let mut t = CountTable::default();
            for _ in 0..len {
                t.record(&one_run(source, sampler, &mut rng));
            }
            t
        })
        .reduce(CountTable::default, CountTable::merge);
    Ok(table)
}

/// The individual runs of `run_experiment` with the same seed, in run order.
pub fn run_log(
    source: Source<'_>,
    sampler: &SettingSampler,
    n_runs: u64,
    seed: u64,
) -> Result<Vec<RunRecord>, MonteCarloError> {
    sampler.validate()?;
    if n_runs == 0 {
        return Err(MonteCarloError::NoRuns);
    }
    let mut out = Vec::with_capacity(n_runs as usize);
    for (shard, len) in shard_ranges(n_runs) {
        let mut rng = stream_rng(seed, shard);
        for _ in 0..len {
            out.push(one_run(source, sampler, &mut rng));
        }
    }
    Ok(out)
}

/// CSV `alpha,beta,a,b`.
pub fn run_log_csv(runs: &[RunRecord]) -> String {
    let mut out = String::from("alpha,beta,a,b\n");
    for r in runs {
        out.push_str(&format!(
            "{:.16e},{:.16e},{},{}\n",
            r.alpha.radians(),
            r.beta.radians(),
            r.a,
            r.b
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub alpha: Angle,
    pub beta: Angle,
    pub n: u64,
    pub estimate: f64,
    pub std_error: f64,
}

pub fn empirical_correlation(table: &CountTable) -> Vec<CorrelationEstimate> {
    table
        .iter()
        .filter(|(_, c)| c.total() > 0)
        .map(|(SettingPair(alpha, beta), c)| {
            let n = c.total();
            let same = (c.npp + c.nmm) as f64;
            let diff = (c.npm + c.nmp) as f64;
            let estimate = (same - diff) / n as f64;
            CorrelationEstimate {
                alpha: *alpha,
                beta: *beta,
                n,
                estimate,
                std_error: ((1.0 - estimate * estimate).max(0.0) / n as f64).sqrt(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::Colouring;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn a(x: f64) -> Angle {
        Angle::new(x)
    }

    #[test]
    fn certainty_relations_are_exact() {
        let m = Mixture::single(Colouring::new(vec![0.4, 1.1, 2.0, 2.2]).unwrap());
        let mut rng = stream_rng(7, 0);
        for i in 0..10_000 {
            let x = a(i as f64 * 0.000_6);
            let r = classical_run(&m, x, x, &mut rng);
            assert_eq!(r.a, -r.b);
            let r = classical_run(&m, x, x + Angle::HALF_TURN, &mut rng);
            assert_eq!(r.a, r.b);
        }
    }

    #[test]
    fn equal_settings_never_agree() {
        let m = Mixture::single(Colouring::triangle());
        let s = SettingSampler::Fixed(a(0.0), a(0.0));
        let c = *run_experiment(Source::Classical(&m), &s, 1000, 3)
            .unwrap()
            .get(a(0.0), a(0.0))
            .unwrap();
        assert_eq!((c.npp, c.nmm), (0, 0));
        let q = *run_experiment(Source::Quantum, &s, 1000, 3)
            .unwrap()
            .get(a(0.0), a(0.0))
            .unwrap();
        assert_eq!((q.npp, q.nmm), (0, 0));
        assert_eq!(q.total(), 1000);
    }

    #[test]
    fn quantum_orthogonal_cells_are_uniform() {
        let mut rng = stream_rng(1, 0);
        let mut c = Counts::default();
        let n = 400_000;
        for _ in 0..n {
            let r = quantum_run(a(FRAC_PI_2), a(0.0), &mut rng);
            c.record(r.a, r.b);
        }
        for cell in [c.npp, c.npm, c.nmp, c.nmm] {
            assert!((cell as f64 / n as f64 - 0.25).abs() < 0.005);
        }
    }

    #[test]
    fn triangle_at_quarter_pi() {
        let m = Mixture::single(Colouring::triangle());
        let s = SettingSampler::Fixed(a(0.0), a(FRAC_PI_4));
        let n = 1_000_000;
        let t = run_experiment(Source::Classical(&m), &s, n, 11).unwrap();
        let e = empirical_correlation(&t)[0];
        assert!((e.estimate + 0.5).abs() < 4.0 / (n as f64).sqrt());
        let s = SettingSampler::Fixed(a(0.0), a(FRAC_PI_2));
        let e = empirical_correlation(&run_experiment(Source::Classical(&m), &s, n, 12).unwrap())[0];
        assert!(e.estimate.abs() < 0.004);
        let s = SettingSampler::Fixed(a(FRAC_PI_4), a(0.0));
        let q = empirical_correlation(&run_experiment(Source::Quantum, &s, n, 13).unwrap())[0];
        assert!((q.estimate + FRAC_PI_4.cos()).abs() < 0.004);
    }

    #[test]
    fn seed_determinism() {
        let m = Mixture::single(Colouring::new(vec![1.0, 2.0]).unwrap());
        let s = SettingSampler::Continuous;
        let t1 = run_experiment(Source::Classical(&m), &s, 200_000, 42).unwrap();
        let t2 = run_experiment(Source::Classical(&m), &s, 200_000, 42).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.total_runs(), 200_000);
        let t3 = run_experiment(Source::Classical(&m), &s, 200_000, 43).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn log_matches_table() {
        let m = Mixture::single(Colouring::new(vec![1.0, 2.0]).unwrap());
        let s = SettingSampler::Grid {
            alphas: vec![a(0.0), a(1.0)],
            betas: vec![a(0.5), a(PI)],
        };
        let n = 3 * SHARD_RUNS / 2;
        let log = run_log(Source::Classical(&m), &s, n, 5).unwrap();
        let mut from_log = CountTable::default();
        for r in &log {
            from_log.record(r);
        }
        assert_eq!(from_log, run_experiment(Source::Classical(&m), &s, n, 5).unwrap());
        assert_eq!(from_log.len(), 4);
        assert!(run_log_csv(&log[..2]).starts_with("alpha,beta,a,b\n"));
    }

    #[test]
    fn estimate_edge_cases() {
        let mut t = CountTable::default();
        let rec = |a, b| RunRecord {
            alpha: Angle::ZERO,
            beta: Angle::ZERO,
            a,
            b,
        };
        for _ in 0..500 {
            t.record(&rec(1, -1));
            t.record(&rec(-1, 1));
        }
        let e = empirical_correlation(&t)[0];
        assert_eq!(e.estimate, -1.0);
        assert_eq!(e.std_error, 0.0);

        let mut t = CountTable::default();
        for (x, y) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            for _ in 0..250 {
                t.record(&rec(x, y));
            }
        }
        let e = empirical_correlation(&t)[0];
        assert_eq!(e.estimate, 0.0);
        assert!((e.std_error - (1.0f64 / 1000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_samplers() {
        assert_eq!(
            run_experiment(Source::Quantum, &SettingSampler::Pairs(vec![]), 10, 0),
            Err(MonteCarloError::InvalidSampler)
        );
        assert_eq!(
            run_experiment(
                Source::Quantum,
                &SettingSampler::Grid {
                    alphas: vec![],
                    betas: vec![Angle::ZERO]
                },
                10,
                0
            ),
            Err(MonteCarloError::InvalidSampler)
        );
        assert_eq!(
            run_experiment(Source::Quantum, &SettingSampler::Continuous, 0, 0),
            Err(MonteCarloError::NoRuns)
        );
    }
}
