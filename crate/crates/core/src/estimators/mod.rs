//! Monte Carlo and exact estimation of efficiency, CHSH and steering statistics.

mod exact;
mod stats;
mod sweep;

pub use exact::{enumerate_exact, pair_legendre_moments, shared_axis_expectations, MAX_EXACT_TOMOGRAPHY_COPIES};
pub use stats::{Estimate, PairSummary, RunStatistics, StatsError, Table};
pub use sweep::{
    default_q_grid, lr_bound, min_copies, sweep_curve, Curve, CurveKind, CurvePoint, Estimation, Frontier,
    SweepSettings,
};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::RngStream;
use crate::models::{Copies, Model, ModelConfig, ModelError};
use crate::quantum::preselection_weight;

/// Fewest samples a Monte Carlo run accepts.
pub const MIN_SAMPLES: u64 = 1000;
/// Samples per independent RNG stream.
pub const CHUNK: u64 = 1 << 15;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("--samples must be at least {MIN_SAMPLES}, got {0}")]
    TooFewSamples(u64),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("{0}")]
    Unsupported(String),
}

/// How the experimenters pick their settings each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    /// Independent uniform choices.
    Bell,
    /// One uniform choice shared by both parties.
    Steering,
}

/// Efficiency and CHSH value of a 2×2 model.
#[derive(Clone, Debug)]
pub struct BellReport {
    pub stats: RunStatistics,
    pub efficiency: Option<f64>,
    pub chsh: Result<Estimate, StatsError>,
}

/// Efficiency, Bob's registration rate and `T` of a square model.
#[derive(Clone, Debug)]
pub struct SteeringReport {
    pub stats: RunStatistics,
    pub efficiency: Option<f64>,
    pub registration_rate: Option<f64>,
    pub steering_t: Result<Estimate, StatsError>,
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool, EstimateError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EstimateError::ThreadPool(e.to_string()))
}

/// Runs `samples` rounds split into fixed chunks, one RNG stream per chunk.
/// Counts are merged by exact addition, so the result does not depend on
/// `workers`.
pub fn run_protocol(
    model: &Model,
    protocol: Protocol,
    samples: u64,
    seed: u64,
    stream_base: u64,
    pool: &rayon::ThreadPool,
) -> RunStatistics {
    let ma = model.alice_directions().len();
    let mb = model.bob_directions().len();
    let chunks = samples.div_ceil(CHUNK);
    pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let n = CHUNK.min(samples - c * CHUNK);
                let mut rng = RngStream::new(seed, stream_base + c);
                let mut stats = RunStatistics::new(ma, mb);
                for _ in 0..n {
                    let (i, j) = match protocol {
                        Protocol::Bell => (rng.random_range(0..ma), rng.random_range(0..mb)),
                        Protocol::Steering => {
                            let j = rng.random_range(0..ma);
                            (j, j)
                        }
                    };
                    let r = model.sample(&mut rng);
                    stats.record(i, j, r.alice[i], r.bob[j]);
                }
                stats
            })
            .reduce(
                || RunStatistics::new(ma, mb),
                |mut acc, s| {
                    acc.merge(&s).expect("same shape");
                    acc
                },
            )
    })
}

pub(crate) fn sample_stats(
    config: &ModelConfig,
    protocol: Protocol,
    samples: u64,
    stream_base: u64,
    pool: &rayon::ThreadPool,
) -> Result<RunStatistics, EstimateError> {
    if samples < MIN_SAMPLES {
        return Err(EstimateError::TooFewSamples(samples));
    }
    let model = Model::from_config(config)?;
    if protocol == Protocol::Steering && model.alice_directions().len() != model.bob_directions().len() {
        return Err(StatsError::Settings {
            expected: "square",
            alice: model.alice_directions().len(),
            bob: model.bob_directions().len(),
        }
        .into());
    }
    let stats = run_protocol(&model, protocol, samples, config.seed, stream_base, pool);
    let weight = match model {
        Model::Tomography { n_copies: Copies::Finite(n), .. } => Some(preselection_weight(n)),
        _ => None,
    };
    Ok(stats.with_preselection(weight))
}

fn check_bell_shape(config: &ModelConfig) -> Result<(), EstimateError> {
    let (na, nb) = (config.angles.alice.len(), config.angles.bob.len());
    if na != 2 || nb != 2 {
        return Err(StatsError::Settings { expected: "2x2", alice: na, bob: nb }.into());
    }
    Ok(())
}

fn bell_report(stats: RunStatistics) -> BellReport {
    BellReport { efficiency: stats.efficiency(), chsh: stats.chsh(), stats }
}

fn steering_report(stats: RunStatistics) -> SteeringReport {
    SteeringReport {
        efficiency: stats.matched_efficiency(),
        registration_rate: stats.bob_registration_rate(),
        steering_t: stats.steering_t(),
        stats,
    }
}

/// Monte Carlo CHSH run with independent uniform choices.
pub fn estimate_bell(config: &ModelConfig, samples: u64, workers: usize) -> Result<BellReport, EstimateError> {
    check_bell_shape(config)?;
    let pool = build_pool(workers)?;
    Ok(bell_report(sample_stats(config, Protocol::Bell, samples, 0, &pool)?))
}

/// Monte Carlo steering run with a shared uniform choice.
pub fn estimate_steering(config: &ModelConfig, samples: u64, workers: usize) -> Result<SteeringReport, EstimateError> {
    let pool = build_pool(workers)?;
    Ok(steering_report(sample_stats(config, Protocol::Steering, samples, 0, &pool)?))
}

pub fn exact_bell(config: &ModelConfig) -> Result<BellReport, EstimateError> {
    check_bell_shape(config)?;
    Ok(bell_report(enumerate_exact(config)?))
}

pub fn exact_steering(config: &ModelConfig) -> Result<SteeringReport, EstimateError> {
    let (na, nb) = (config.angles.alice.len(), config.angles.bob.len());
    if na != nb {
        return Err(StatsError::Settings { expected: "square", alice: na, bob: nb }.into());
    }
    Ok(steering_report(enumerate_exact(config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_counts() {
        let cfg = ModelConfig::tomography_bell(Copies::Finite(3), 0.3);
        let one = estimate_bell(&cfg, 100_000, 1).unwrap();
        let four = estimate_bell(&cfg, 100_000, 4).unwrap();
        assert_eq!(one.stats, four.stats);
        assert_eq!(one.stats.samples(), 100_000);
    }

    #[test]
    fn too_few_samples() {
        let err = estimate_bell(&ModelConfig::simple_bell(), 999, 1).unwrap_err();
        assert!(matches!(err, EstimateError::TooFewSamples(999)));
    }

    #[test]
    fn steering_needs_square() {
        let mut cfg = ModelConfig::tomography_steering(Copies::Finite(2), 0.0);
        cfg.angles.alice.pop();
        assert!(estimate_steering(&cfg, 1000, 1).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let configs = [
            (ModelConfig::simple_bell(), Protocol::Bell),
            (ModelConfig::tomography_bell(Copies::Finite(2), 0.5), Protocol::Bell),
            (ModelConfig::tomography_bell(Copies::Infinite, 0.6), Protocol::Bell),
            (ModelConfig::tomography_steering(Copies::Finite(4), 0.4), Protocol::Steering),
            (ModelConfig::ncopy_steering(3, 3), Protocol::Steering),
        ];
        let pool = build_pool(2).unwrap();
        for (cfg, protocol) in configs {
            let mc = sample_stats(&cfg, protocol, 400_000, 0, &pool).unwrap();
            let ex = enumerate_exact(&cfg).unwrap();
            let (est, target) = match protocol {
                Protocol::Bell => (mc.chsh().unwrap(), ex.chsh().unwrap().value),
                Protocol::Steering => (mc.steering_t().unwrap(), ex.steering_t().unwrap().value),
            };
            assert!(est.within(target, 4.0, 1e-9), "{:?}: {est:?} vs {target}", cfg.kind);
            let (e_mc, e_ex) = (mc.matched_efficiency().unwrap(), ex.matched_efficiency().unwrap());
            assert!((e_mc - e_ex).abs() < 0.01, "{:?}: {e_mc} vs {e_ex}", cfg.kind);
        }
    }
}
