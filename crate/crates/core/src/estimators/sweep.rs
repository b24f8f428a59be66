//! Efficiency-versus-violation curves of the tomography model and the
//! copy-count search over them.

use std::fmt;
use std::str::FromStr;

use crate::models::{Copies, ModelConfig, DEFAULT_SEED};

use super::{build_pool, enumerate_exact, sample_stats, EstimateError, Protocol, RunStatistics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CurveKind {
    /// `|S|` at the CHSH angles.
    Bell,
    /// `T` at the steering triple.
    Steering,
}

impl CurveKind {
    pub fn config(self, n_copies: Copies, q: f64) -> ModelConfig {
        match self {
            CurveKind::Bell => ModelConfig::tomography_bell(n_copies, q),
            CurveKind::Steering => ModelConfig::tomography_steering(n_copies, q),
        }
    }

    fn protocol(self) -> Protocol {
        match self {
            CurveKind::Bell => Protocol::Bell,
            CurveKind::Steering => Protocol::Steering,
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Bell => "bell",
            CurveKind::Steering => "steering",
        })
    }
}

impl FromStr for CurveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bell" => Ok(CurveKind::Bell),
            "steering" | "steer" => Ok(CurveKind::Steering),
            other => Err(format!("unknown curve kind `{other}` (expected bell or steering)")),
        }
    }
}

/// Local-realistic bound of the statistic: 2 for `|S|`, 1/3 for `T`.
pub fn lr_bound(kind: CurveKind) -> f64 {
    match kind {
        CurveKind::Bell => 2.0,
        CurveKind::Steering => 1.0 / 3.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub n_copies: Copies,
    pub q: f64,
    pub eta: f64,
    pub value: f64,
    pub stderr: f64,
    /// Monte Carlo rounds behind the point; 0 for exact points.
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub kind: CurveKind,
    pub n_copies: Copies,
    pub points: Vec<CurvePoint>,
    /// Grid values left out because a setting pair had no coincidences.
    pub degenerate_q: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimation {
    MonteCarlo { samples: u64 },
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub q_grid: Vec<f64>,
    pub estimation: Estimation,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            q_grid: default_q_grid(),
            estimation: Estimation::MonteCarlo { samples: 1_000_000 },
            seed: DEFAULT_SEED,
            workers: 1,
        }
    }
}

/// `0, 0.03, …, 0.96`.
pub fn default_q_grid() -> Vec<f64> {
    (0..33).map(|i| f64::from(i) * 3.0 / 100.0).collect()
}

fn point_statistic(kind: CurveKind, stats: &RunStatistics) -> Option<(f64, f64, f64)> {
    match kind {
        CurveKind::Bell => {
            let s = stats.chsh().ok()?;
            Some((stats.efficiency()?, s.value.abs(), s.stderr))
        }
        CurveKind::Steering => {
            let t = stats.steering_t().ok()?;
            Some((stats.matched_efficiency()?, t.value, t.stderr))
        }
    }
}

/// One point per grid value of `q`. Point `i` draws from RNG streams starting
/// at `(i + 1) << 40`, so points are independent and reproducible on their own.
pub fn sweep_curve(kind: CurveKind, n_copies: Copies, settings: &SweepSettings) -> Result<Curve, EstimateError> {
    if let Some(q) = settings.q_grid.iter().find(|q| !(0.0..1.0).contains(*q)) {
        return Err(crate::models::ModelError::InvalidThreshold(*q).into());
    }
    let pool = build_pool(settings.workers)?;
    let mut points = Vec::with_capacity(settings.q_grid.len());
    let mut degenerate_q = Vec::new();
    for (idx, &q) in settings.q_grid.iter().enumerate() {
        let config = kind.config(n_copies, q).with_seed(settings.seed);
        let (stats, samples) = match settings.estimation {
            Estimation::MonteCarlo { samples } => {
                let stream_base = (idx as u64 + 1) << 40;
                (sample_stats(&config, kind.protocol(), samples, stream_base, &pool)?, samples)
            }
            Estimation::Exact => (enumerate_exact(&config)?, 0),
        };
        match point_statistic(kind, &stats) {
            Some((eta, value, stderr)) => points.push(CurvePoint { n_copies, q, eta, value, stderr, samples }),
            None => degenerate_q.push(q),
        }
    }
    Ok(Curve { kind, n_copies, points, degenerate_q })
}

impl Curve {
    /// Largest value the curve reaches at efficiency `≥ eta`, interpolating
    /// linearly in η between neighbouring points. `None` if the curve never
    /// reaches `eta`.
    pub fn best_value_at(&self, eta: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut keep = |v: f64| best = Some(best.map_or(v, |b: f64| b.max(v)));
        for p in &self.points {
            if p.eta >= eta {
                keep(p.value);
            }
        }
        for w in self.points.windows(2) {
            let (hi, lo) = if w[0].eta >= w[1].eta { (w[0], w[1]) } else { (w[1], w[0]) };
            if lo.eta < eta && eta <= hi.eta && hi.eta > lo.eta {
                let s = (eta - lo.eta) / (hi.eta - lo.eta);
                keep(lo.value + s * (hi.value - lo.value));
            }
        }
        best
    }
}

/// Swept curves for `N = 1..=n_max` of one kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Frontier {
    pub kind: CurveKind,
    pub curves: Vec<Curve>,
}

impl Frontier {
    pub fn sweep(kind: CurveKind, n_max: u32, settings: &SweepSettings) -> Result<Self, EstimateError> {
        let curves = (1..=n_max).map(|n| sweep_curve(kind, Copies::Finite(n), settings)).collect::<Result<_, _>>()?;
        Ok(Frontier { kind, curves })
    }
}

/// Smallest copy count whose curve reaches `value` at efficiency `≥ eta`.
/// Points at or below the local-realistic bound need a single copy.
pub fn min_copies(value: f64, eta: f64, frontier: &Frontier) -> Option<u32> {
    if value <= lr_bound(frontier.kind) {
        return Some(1);
    }
    frontier.curves.iter().find_map(|c| match c.n_copies {
        Copies::Finite(n) if c.best_value_at(eta).is_some_and(|v| v >= value) => Some(n),
        _ => None,
    })
}
