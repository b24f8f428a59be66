use thiserror::Error;

use crate::models::Trit;

/// Joint weights indexed `[alice trit][bob trit]`, trit index = value + 1.
pub type Table = [[f64; 3]; 3];

#[derive(Clone, Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("setting pair (alice {alice}, bob {bob}) has no coincidences; correlation undefined")]
    Degenerate { alice: usize, bob: usize },
    #[error("steering choice {0} has no registered Bob readouts")]
    EmptyChoice(usize),
    #[error("statistic needs {expected} settings, have {alice}x{bob}")]
    Settings { expected: &'static str, alice: usize, bob: usize },
    #[error("cannot merge statistics of different shape")]
    ShapeMismatch,
}

/// A value with its one-sigma standard error (zero for exact statistics).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// `|value − target| ≤ k·stderr + slack`.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + slack
    }
}

/// Per-setting-pair summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSummary {
    pub total: f64,
    pub alice_detected: f64,
    pub bob_detected: f64,
    pub coincidences: f64,
}

/// Accumulated readout tables for every (Alice choice, Bob choice) pair.
///
/// Monte Carlo runs store integer counts; exact enumeration stores the
/// conditional probability table of each pair. Merging adds tables, which is
/// exact (integers below 2⁵³) and therefore order-independent.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStatistics {
    alice_settings: usize,
    bob_settings: usize,
    tables: Vec<Table>,
    samples: u64,
    exact: bool,
    preselection_weight: Option<f64>,
}

impl RunStatistics {
    pub fn new(alice_settings: usize, bob_settings: usize) -> Self {
        RunStatistics {
            alice_settings,
            bob_settings,
            tables: vec![[[0.0; 3]; 3]; alice_settings * bob_settings],
            samples: 0,
            exact: false,
            preselection_weight: None,
        }
    }

    /// Exact statistics from per-pair probability tables (row-major over pairs).
    pub fn from_exact(alice_settings: usize, bob_settings: usize, tables: Vec<Table>) -> Self {
        assert_eq!(tables.len(), alice_settings * bob_settings);
        RunStatistics { alice_settings, bob_settings, tables, samples: 0, exact: true, preselection_weight: None }
    }

    pub fn with_preselection(mut self, weight: Option<f64>) -> Self {
        self.preselection_weight = weight;
        self
    }

    pub fn alice_settings(&self) -> usize {
        self.alice_settings
    }

    pub fn bob_settings(&self) -> usize {
        self.bob_settings
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Tomography preselection probability `(N+1)/2^N`, reported separately
    /// from the efficiency.
    pub fn preselection_weight(&self) -> Option<f64> {
        self.preselection_weight
    }

    pub fn record(&mut self, alice_choice: usize, bob_choice: usize, a: Trit, b: Trit) {
        let idx = alice_choice * self.bob_settings + bob_choice;
        self.tables[idx][a.index()][b.index()] += 1.0;
        self.samples += 1;
    }

    pub fn merge(&mut self, other: &RunStatistics) -> Result<(), StatsError> {
        if self.alice_settings != other.alice_settings
            || self.bob_settings != other.bob_settings
            || self.exact != other.exact
        {
            return Err(StatsError::ShapeMismatch);
        }
        for (mine, theirs) in self.tables.iter_mut().zip(&other.tables) {
            for (row, other_row) in mine.iter_mut().zip(theirs) {
                for (cell, v) in row.iter_mut().zip(other_row) {
                    *cell += v;
                }
            }
        }
        self.samples += other.samples;
        Ok(())
    }

    pub fn table(&self, alice_choice: usize, bob_choice: usize) -> &Table {
        &self.tables[alice_choice * self.bob_settings + bob_choice]
    }

    /// Pair table normalized to a probability distribution (zeros if empty).
    pub fn pair_probabilities(&self, alice_choice: usize, bob_choice: usize) -> Table {
        let t = self.table(alice_choice, bob_choice);
        let total: f64 = t.iter().flatten().sum();
        if total == 0.0 {
            return [[0.0; 3]; 3];
        }
        t.map(|row| row.map(|v| v / total))
    }

    pub fn pair(&self, alice_choice: usize, bob_choice: usize) -> PairSummary {
        let t = self.table(alice_choice, bob_choice);
        let total = t.iter().flatten().sum();
        let alice_detected = t[0].iter().chain(&t[2]).sum();
        let bob_detected = t.iter().map(|row| row[0] + row[2]).sum();
        let coincidences = t[0][0] + t[0][2] + t[2][0] + t[2][2];
        PairSummary { total, alice_detected, bob_detected, coincidences }
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.alice_settings).flat_map(move |i| (0..self.bob_settings).map(move |j| (i, j)))
    }

    /// `η = p(a²=b²=1) / p(a²=1)`, pooled over the recorded setting pairs.
    pub fn efficiency(&self) -> Option<f64> {
        self.efficiency_over(self.pairs())
    }

    /// Efficiency over the matched pairs `(j, j)` of a steering run.
    pub fn matched_efficiency(&self) -> Option<f64> {
        self.efficiency_over((0..self.alice_settings.min(self.bob_settings)).map(|j| (j, j)))
    }

    fn efficiency_over(&self, pairs: impl Iterator<Item = (usize, usize)>) -> Option<f64> {
        let (mut coinc, mut alice) = (0.0, 0.0);
        for (i, j) in pairs {
            let p = self.pair(i, j);
            coinc += p.coincidences;
            alice += p.alice_detected;
        }
        (alice > 0.0).then(|| coinc / alice)
    }

    /// `p(a²=b²=1) / p(b²=1)`.
    pub fn efficiency_bob(&self) -> Option<f64> {
        let (mut coinc, mut bob) = (0.0, 0.0);
        for (i, j) in self.pairs() {
            let p = self.pair(i, j);
            coinc += p.coincidences;
            bob += p.bob_detected;
        }
        (bob > 0.0).then(|| coinc / bob)
    }

    /// Fraction of recorded events in which Bob's chosen readout was nonzero.
    pub fn bob_registration_rate(&self) -> Option<f64> {
        let (mut bob, mut total) = (0.0, 0.0);
        for (i, j) in self.pairs() {
            let p = self.pair(i, j);
            bob += p.bob_detected;
            total += p.total;
        }
        (total > 0.0).then(|| bob / total)
    }

    /// Coincidence-conditioned correlation `⟨ab⟩_{a²=b²=1}`.
    pub fn correlation(&self, alice_choice: usize, bob_choice: usize) -> Result<Estimate, StatsError> {
        let t = self.table(alice_choice, bob_choice);
        let coinc = t[0][0] + t[0][2] + t[2][0] + t[2][2];
        if coinc <= 0.0 {
            return Err(StatsError::Degenerate { alice: alice_choice, bob: bob_choice });
        }
        let value = (t[2][2] + t[0][0] - t[2][0] - t[0][2]) / coinc;
        let stderr = if self.exact { 0.0 } else { ((1.0 - value * value).max(0.0) / coinc).sqrt() };
        Ok(Estimate { value, stderr })
    }

    /// Unconditioned correlation `⟨ab⟩` with zeros counted as 0.
    pub fn full_correlation(&self, alice_choice: usize, bob_choice: usize) -> Option<f64> {
        let p = self.pair_probabilities(alice_choice, bob_choice);
        let total: f64 = p.iter().flatten().sum();
        (total > 0.0).then(|| p[2][2] + p[0][0] - p[2][0] - p[0][2])
    }

    /// `S = E₁₁ + E₁₂ + E₂₁ − E₂₂` on coincidences; errors propagated from
    /// per-pair binomial variances.
    pub fn chsh(&self) -> Result<Estimate, StatsError> {
        if self.alice_settings != 2 || self.bob_settings != 2 {
            return Err(StatsError::Settings { expected: "2x2", alice: self.alice_settings, bob: self.bob_settings });
        }
        let mut value = 0.0;
        let mut var = 0.0;
        for (i, j) in self.pairs() {
            let e = self.correlation(i, j)?;
            let sign = if i == 1 && j == 1 { -1.0 } else { 1.0 };
            value += sign * e.value;
            var += e.stderr * e.stderr;
        }
        Ok(Estimate { value, stderr: var.sqrt() })
    }

    /// Steering parameter `T = Σ_j Σ_{a_j} p(a_j) ⟨b_j⟩²_{a_j}` over matched
    /// pairs `(j, j)`, restricted to events where Bob registered. `p(a_j)`
    /// carries the uniform choice weight `1/M`; Alice's 0 outcomes form their
    /// own bin.
    pub fn steering_t(&self) -> Result<Estimate, StatsError> {
        if self.alice_settings != self.bob_settings {
            return Err(StatsError::Settings {
                expected: "square",
                alice: self.alice_settings,
                bob: self.bob_settings,
            });
        }
        let m = self.alice_settings as f64;
        let mut value = 0.0;
        let mut var = 0.0;
        for j in 0..self.alice_settings {
            let t = self.table(j, j);
            let registered: f64 = t.iter().map(|row| row[0] + row[2]).sum();
            if registered <= 0.0 {
                return Err(StatsError::EmptyChoice(j));
            }
            // cells (a, b=+1) and (a, b=−1) as fractions of registered events,
            // with the delta-method gradient of T_j for each cell
            let mut tj = 0.0;
            let mut first = 0.0;
            let mut second = 0.0;
            for row in t {
                let plus = row[2] / registered;
                let minus = row[0] / registered;
                let bin = plus + minus;
                if bin <= 0.0 {
                    continue;
                }
                let mean = (plus - minus) / bin;
                tj += bin * mean * mean;
                let g_plus = 2.0 * mean - mean * mean;
                let g_minus = -2.0 * mean - mean * mean;
                first += plus * g_plus + minus * g_minus;
                second += plus * g_plus * g_plus + minus * g_minus * g_minus;
            }
            value += tj / m;
            if !self.exact {
                var += ((second - first * first).max(0.0) / registered) / (m * m);
            }
        }
        Ok(Estimate { value, stderr: var.sqrt() })
    }

    /// Alice outcomes of matched pairs that occurred but never together with a
    /// registered Bob readout, so their conditional mean is undefined.
    pub fn empty_steering_bins(&self) -> Vec<(usize, Trit)> {
        let mut out = Vec::new();
        for j in 0..self.alice_settings.min(self.bob_settings) {
            let t = self.table(j, j);
            for a in Trit::ALL {
                let row = t[a.index()];
                if row[1] > 0.0 && row[0] + row[2] <= 0.0 {
                    out.push((j, a));
                }
            }
        }
        out
    }
}
