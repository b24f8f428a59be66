//! Local-realistic POVM models. Every model emits a trit for every choice of
//! both parties at once; the experimenter's actual choice only selects which
//! of those readouts is looked at.

use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;
use rand::Rng;
use thiserror::Error;

use crate::geometry::{sample_pair_exponent, sample_uniform_direction, Direction};
use crate::quantum::{
    apply_single_qubit, basis_plus, dichotomic_projector, quantum_correlation, qubit_evolution, OperatorMatrix,
    QubitAngles, QubitJoint, StateVector, MAX_QUBITS,
};

/// Most choices per party a model may carry.
pub const MAX_CHOICES: usize = 8;
/// Largest copy count of the unanimity model (one random bit per copy).
pub const MAX_UNANIMITY_COPIES: u32 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("deadzone threshold q = {0} must lie in [0, 1)")]
    InvalidThreshold(f64),
    #[error("copy count must be at least 1")]
    InvalidCopies,
    #[error("{model} needs {expected}, got {got}")]
    ChoiceCount { model: ModelKind, expected: String, got: usize },
    #[error("{0} has no sampling model")]
    NotSampleable(ModelKind),
    #[error("{0} needs a finite copy count")]
    NeedsFiniteCopies(ModelKind),
    #[error("copy count {got} exceeds the cap of {cap}")]
    TooManyCopies { got: u32, cap: u32 },
    #[error("{copies} copies cannot host {readouts} independent readouts")]
    InsufficientCopies { copies: u32, readouts: u32 },
    #[error("invalid copy count `{0}` (expected a positive integer or `inf`)")]
    ParseCopies(String),
    #[error("unknown model `{0}`")]
    ParseKind(String),
}

/// Readout value; `Zero` means no detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Trit {
    Minus,
    Zero,
    Plus,
}

impl Trit {
    pub fn value(self) -> i8 {
        match self {
            Trit::Minus => -1,
            Trit::Zero => 0,
            Trit::Plus => 1,
        }
    }

    /// Table index `value + 1`.
    pub fn index(self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn from_sign(positive: bool) -> Trit {
        if positive {
            Trit::Plus
        } else {
            Trit::Minus
        }
    }

    pub fn is_detected(self) -> bool {
        self != Trit::Zero
    }

    pub const ALL: [Trit; 3] = [Trit::Minus, Trit::Zero, Trit::Plus];
}

/// `+1` above `q`, `−1` below `−q`, `0` on the closed interval `[−q, q]`.
pub fn threshold_readout(projection: f64, q: f64) -> Trit {
    if projection > q {
        Trit::Plus
    } else if projection < -q {
        Trit::Minus
    } else {
        Trit::Zero
    }
}

/// Readouts of both parties for every choice index.
#[derive(Clone, Debug, PartialEq)]
pub struct JointReadout {
    pub alice: ArrayVec<Trit, MAX_CHOICES>,
    pub bob: ArrayVec<Trit, MAX_CHOICES>,
    /// Bob reported nothing for any choice; the event carries no trusted-side data.
    pub discarded: bool,
}

/// Number of copies of the entangled state, possibly unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Copies {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Copies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Copies::Finite(n) => write!(f, "{n}"),
            Copies::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Copies {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Copies::Infinite);
        }
        match s.parse::<u32>() {
            Ok(n) if n >= 1 => Ok(Copies::Finite(n)),
            _ => Err(ModelError::ParseCopies(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    SimpleBell,
    TrustedSteeringM,
    NCopySteering,
    NCopyTomography,
    ChaoticBall,
    QubitCopies,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SimpleBell => "simple-bell",
            ModelKind::TrustedSteeringM => "trusted-steering-m",
            ModelKind::NCopySteering => "ncopy-steering",
            ModelKind::NCopyTomography => "ncopy-tomography",
            ModelKind::ChaoticBall => "chaotic-ball",
            ModelKind::QubitCopies => "qubit-copies",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            ModelKind::SimpleBell,
            ModelKind::TrustedSteeringM,
            ModelKind::NCopySteering,
            ModelKind::NCopyTomography,
            ModelKind::ChaoticBall,
            ModelKind::QubitCopies,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| ModelError::ParseKind(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n_copies: Copies,
    /// Deadzone of the tomography readout.
    pub q: f64,
    /// Alice's deadzone when it differs from `q`.
    pub alice_q: Option<f64>,
    pub m_choices: usize,
    pub angles: QubitAngles,
    pub seed: u64,
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED_1234;

impl ModelConfig {
    /// Both parties pick one of the two CHSH directions at random; the other reads 0.
    pub fn simple_bell() -> Self {
        ModelConfig {
            kind: ModelKind::SimpleBell,
            n_copies: Copies::Finite(1),
            q: 0.0,
            alice_q: None,
            m_choices: 2,
            angles: QubitAngles::chsh(),
            seed: DEFAULT_SEED,
        }
    }

    pub fn trusted_steering(m_choices: usize) -> Self {
        ModelConfig {
            kind: ModelKind::TrustedSteeringM,
            m_choices,
            angles: QubitAngles::steering(m_choices),
            ..Self::simple_bell()
        }
    }

    pub fn ncopy_steering(n_copies: u32, m_choices: usize) -> Self {
        ModelConfig {
            kind: ModelKind::NCopySteering,
            n_copies: Copies::Finite(n_copies),
            m_choices,
            angles: QubitAngles::steering(m_choices),
            ..Self::simple_bell()
        }
    }

    /// Threshold model at the CHSH angles, deadzone `q` on both sides.
    pub fn tomography_bell(n_copies: Copies, q: f64) -> Self {
        ModelConfig {
            kind: match n_copies {
                Copies::Infinite => ModelKind::ChaoticBall,
                Copies::Finite(_) => ModelKind::NCopyTomography,
            },
            n_copies,
            q,
            ..Self::simple_bell()
        }
    }

    /// Threshold model at the steering triple. Only Bob (trusted, allowed to
    /// discard) has a deadzone; Alice always reports a sign.
    pub fn tomography_steering(n_copies: Copies, q: f64) -> Self {
        ModelConfig {
            alice_q: Some(0.0),
            m_choices: 3,
            angles: QubitAngles::steering_triple(),
            ..Self::tomography_bell(n_copies, q)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn alice_threshold(&self) -> f64 {
        self.alice_q.unwrap_or(self.q)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for q in [self.q, self.alice_threshold()] {
            if !(0.0..1.0).contains(&q) {
                return Err(ModelError::InvalidThreshold(q));
            }
        }
        if self.n_copies == Copies::Finite(0) {
            return Err(ModelError::InvalidCopies);
        }
        let na = self.angles.alice.len();
        let nb = self.angles.bob.len();
        let count_err =
            |expected: &str, got| ModelError::ChoiceCount { model: self.kind, expected: expected.to_string(), got };
        for n in [na, nb] {
            if n == 0 || n > MAX_CHOICES {
                return Err(count_err("between 1 and 8 directions per party", n));
            }
        }
        match self.kind {
            ModelKind::SimpleBell => {
                if na != 2 || nb != 2 {
                    return Err(count_err("two directions per party", na.max(nb)));
                }
            }
            ModelKind::TrustedSteeringM | ModelKind::NCopySteering => {
                if self.m_choices < 2 || na != self.m_choices || nb != self.m_choices {
                    return Err(count_err("m_choices >= 2 directions per party", self.m_choices));
                }
                if self.kind == ModelKind::NCopySteering {
                    match self.n_copies {
                        Copies::Infinite => return Err(ModelError::NeedsFiniteCopies(self.kind)),
                        Copies::Finite(n) if n > MAX_UNANIMITY_COPIES => {
                            return Err(ModelError::TooManyCopies { got: n, cap: MAX_UNANIMITY_COPIES })
                        }
                        _ => {}
                    }
                }
            }
            ModelKind::NCopyTomography | ModelKind::ChaoticBall => {}
            ModelKind::QubitCopies => return Err(ModelError::NotSampleable(self.kind)),
        }
        Ok(())
    }
}

/// A validated, ready-to-sample model.
#[derive(Clone, Debug)]
pub enum Model {
    /// Each party draws one of its choices at random and measures only that
    /// one on a single singlet; all other choices read 0.
    RandomPick { alice: Vec<Direction>, bob: Vec<Direction> },
    /// `N` singlets; Bob reports only unanimous outcomes along one randomly
    /// picked direction, Alice measures copy `j mod N` for her choice `j`.
    Unanimity { n_copies: u32, alice: Vec<Direction>, bob: Vec<Direction> },
    /// Shared tomography pair `(A, B)` thresholded by both parties.
    Tomography { n_copies: Copies, q_alice: f64, q_bob: f64, alice: Vec<Direction>, bob: Vec<Direction> },
}

impl Model {
    pub fn from_config(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let alice = config.angles.alice.clone();
        let bob = config.angles.bob.clone();
        Ok(match config.kind {
            ModelKind::SimpleBell | ModelKind::TrustedSteeringM => Model::RandomPick { alice, bob },
            ModelKind::NCopySteering => match config.n_copies {
                Copies::Finite(n) => Model::Unanimity { n_copies: n, alice, bob },
                Copies::Infinite => unreachable!("validated"),
            },
            ModelKind::NCopyTomography | ModelKind::ChaoticBall => Model::Tomography {
                n_copies: if config.kind == ModelKind::ChaoticBall { Copies::Infinite } else { config.n_copies },
                q_alice: config.alice_threshold(),
                q_bob: config.q,
                alice,
                bob,
            },
            ModelKind::QubitCopies => unreachable!("validated"),
        })
    }

    pub fn alice_directions(&self) -> &[Direction] {
        match self {
            Model::RandomPick { alice, .. } | Model::Unanimity { alice, .. } | Model::Tomography { alice, .. } => alice,
        }
    }

    pub fn bob_directions(&self) -> &[Direction] {
        match self {
            Model::RandomPick { bob, .. } | Model::Unanimity { bob, .. } | Model::Tomography { bob, .. } => bob,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JointReadout {
        match self {
            Model::RandomPick { alice, bob } => random_pick_sample(alice, bob, rng),
            Model::Unanimity { n_copies, alice, bob } => ncopy_steering_sample(*n_copies, alice, bob, rng),
            Model::Tomography { n_copies, q_alice, q_bob, alice, bob } => {
                ncopy_tomography_sample(*n_copies, *q_alice, *q_bob, alice, bob, rng)
            }
        }
    }
}

fn finish(alice: ArrayVec<Trit, MAX_CHOICES>, bob: ArrayVec<Trit, MAX_CHOICES>) -> JointReadout {
    let discarded = bob.iter().all(|t| !t.is_detected());
    JointReadout { alice, bob, discarded }
}

/// Singlet outcome pair for one pair of directions: `p(a,b) = (1 + ab·E)/4`.
fn singlet_outcomes<R: Rng + ?Sized>(a: &Direction, b: &Direction, rng: &mut R) -> (Trit, Trit) {
    let corr = quantum_correlation(a, b);
    let alice_plus = rng.random::<bool>();
    let same = rng.random::<f64>() < 0.5 * (1.0 + corr);
    (Trit::from_sign(alice_plus), Trit::from_sign(alice_plus == same))
}

fn random_pick_sample<R: Rng + ?Sized>(alice: &[Direction], bob: &[Direction], rng: &mut R) -> JointReadout {
    let s = rng.random_range(0..alice.len());
    let r = rng.random_range(0..bob.len());
    let (a, b) = singlet_outcomes(&alice[s], &bob[r], rng);
    let alice_trits = (0..alice.len()).map(|j| if j == s { a } else { Trit::Zero }).collect();
    let bob_trits = (0..bob.len()).map(|j| if j == r { b } else { Trit::Zero }).collect();
    finish(alice_trits, bob_trits)
}

/// The η = 1/2 CHSH model: each party reads its randomly picked direction
/// with singlet statistics and reports 0 for the other.
pub fn simple_bell_sample<R: Rng + ?Sized>(angles: &QubitAngles, rng: &mut R) -> JointReadout {
    random_pick_sample(&angles.alice, &angles.bob, rng)
}

/// Trusted-Bob steering with `M` choices: Bob registers only when his random
/// pick matches, Alice reports 0 on a mismatch.
pub fn trusted_steering_sample<R: Rng + ?Sized>(angles: &QubitAngles, rng: &mut R) -> JointReadout {
    random_pick_sample(&angles.alice, &angles.bob, rng)
}

/// `N`-copy steering with Bob's unanimity rule.
pub fn ncopy_steering_sample<R: Rng + ?Sized>(
    n_copies: u32,
    alice: &[Direction],
    bob: &[Direction],
    rng: &mut R,
) -> JointReadout {
    debug_assert!((1..=MAX_UNANIMITY_COPIES).contains(&n_copies));
    let r = rng.random_range(0..bob.len());
    let mask = if n_copies == 64 { u64::MAX } else { (1u64 << n_copies) - 1 };
    // bit k set ↔ Bob's copy k read +1 along bob[r]
    let bits = rng.random::<u64>() & mask;
    let unanimous = if bits == mask {
        Trit::Plus
    } else if bits == 0 {
        Trit::Minus
    } else {
        Trit::Zero
    };
    let bob_trits = (0..bob.len()).map(|j| if j == r { unanimous } else { Trit::Zero }).collect();
    let alice_trits = alice
        .iter()
        .enumerate()
        .map(|(j, dir)| {
            let copy = j as u32 % n_copies;
            let bob_value = if bits >> copy & 1 == 1 { 1.0 } else { -1.0 };
            // Alice's copy is steered to Bloch vector −b^k·bob[r].
            let p_plus = 0.5 * (1.0 - bob_value * dir.dot(&bob[r]));
            Trit::from_sign(rng.random::<f64>() < p_plus)
        })
        .collect();
    finish(alice_trits, bob_trits)
}

/// Coherent-state tomography model: draw `(A, B)` from the pair density (or
/// `B = A` for infinitely many copies) and threshold every projection.
pub fn ncopy_tomography_sample<R: Rng + ?Sized>(
    n_copies: Copies,
    q_alice: f64,
    q_bob: f64,
    alice: &[Direction],
    bob: &[Direction],
    rng: &mut R,
) -> JointReadout {
    let (big_a, big_b) = match n_copies {
        Copies::Finite(n) => sample_pair_exponent(n, rng),
        Copies::Infinite => {
            let axis = sample_uniform_direction(rng);
            (axis, axis)
        }
    };
    let alice_trits = alice.iter().map(|d| threshold_readout(d.dot(&big_a), q_alice)).collect();
    let bob_trits = bob.iter().map(|d| threshold_readout(d.dot(&big_b), q_bob)).collect();
    finish(alice_trits, bob_trits)
}

/// Two readouts taken on distinct copies of `|+⟩^{⊗N}`: `β` at `t_a` on one
/// copy, `γ` at `t_b` on another. The joint law factorizes.
pub fn qubit_copies_joint(t_a: f64, t_b: f64, omega: f64, n_copies: u32) -> Result<QubitJoint, ModelError> {
    if n_copies < 2 {
        return Err(ModelError::InsufficientCopies { copies: n_copies, readouts: 2 });
    }
    // copies beyond the two that are read do not affect any probability
    let qubits = (n_copies as usize).min(MAX_QUBITS);
    let mut state = basis_plus();
    for _ in 1..qubits {
        state = state.tensor(&basis_plus());
    }
    let project = |value: usize| if value == 1 { basis_plus().outer() } else { crate::quantum::basis_minus().outer() };
    let at_a = qubit_evolution(omega * t_a);
    let at_b = qubit_evolution(omega * t_b);
    let mut p = [[0.0; 2]; 2];
    for (beta, row) in p.iter_mut().enumerate() {
        let k_a = &project(beta) * &at_a;
        let after_a = apply_single_qubit(&state, &k_a, 1, qubits).expect("dimension");
        for (gamma, cell) in row.iter_mut().enumerate() {
            let k_b = &project(gamma) * &at_b;
            let after_b: StateVector = apply_single_qubit(&after_a, &k_b, 0, qubits).expect("dimension");
            *cell = after_b.0.norm_squared();
        }
    }
    Ok(QubitJoint(p))
}

/// Joint outcome of the trusted steering POVM: hidden picks and the two
/// measured signs, plus the readout every choice reports.
#[derive(Clone, Debug)]
pub struct SteeringOutcome {
    pub alice_pick: usize,
    pub bob_pick: usize,
    pub alice: ArrayVec<Trit, MAX_CHOICES>,
    pub bob: ArrayVec<Trit, MAX_CHOICES>,
}

/// The trusted `M`-choice steering model as one joint POVM on Alice ⊗ Bob.
///
/// Outcome `(s, r, a, b)` has effect `(1/M²) K_A(a; a_s) ⊗ K_B(b; b_r)`. Bob's
/// readout for an unpicked choice is 0 (discarded), Alice's is 0 (kept).
#[derive(Clone, Debug)]
pub struct TrustedSteeringPovm {
    angles: QubitAngles,
}

impl TrustedSteeringPovm {
    pub fn new(angles: QubitAngles) -> Self {
        TrustedSteeringPovm { angles }
    }

    pub fn choices(&self) -> usize {
        self.angles.bob.len()
    }

    pub fn effects(&self) -> Vec<(SteeringOutcome, OperatorMatrix)> {
        let m = self.choices();
        let weight = 1.0 / (m * m) as f64;
        let mut out = Vec::with_capacity(4 * m * m);
        for s in 0..m {
            for r in 0..m {
                for a in [Trit::Plus, Trit::Minus] {
                    for b in [Trit::Plus, Trit::Minus] {
                        let effect = dichotomic_projector(&self.angles.alice[s], a.value())
                            .kron(&dichotomic_projector(&self.angles.bob[r], b.value()))
                            .scale(weight);
                        let outcome = SteeringOutcome {
                            alice_pick: s,
                            bob_pick: r,
                            alice: (0..m).map(|j| if j == s { a } else { Trit::Zero }).collect(),
                            bob: (0..m).map(|j| if j == r { b } else { Trit::Zero }).collect(),
                        };
                        out.push((outcome, effect));
                    }
                }
            }
        }
        out
    }

    /// Sum of effects over all unchosen readout variables with Alice's
    /// choice `ja` reading `a` and Bob's choice `jb` reading `b ≠ 0`,
    /// renormalized by Bob's registration probability `1/M`.
    pub fn registered_marginal(&self, ja: usize, a: Trit, jb: usize, b: Trit) -> OperatorMatrix {
        let m = self.choices() as f64;
        let mut acc = OperatorMatrix::zeros(4);
        for (outcome, effect) in self.effects() {
            if outcome.alice[ja] == a && outcome.bob[jb] == b {
                acc = &acc + &effect;
            }
        }
        acc.scale(m)
    }

    /// Alice's effective POVM for choice `j`: `(1/M)(1 ± a·σ)/2` and `((M−1)/M)·1`.
    pub fn alice_effect(&self, j: usize, a: Trit) -> OperatorMatrix {
        let m = self.choices() as f64;
        match a {
            Trit::Zero => OperatorMatrix::identity(2).scale((m - 1.0) / m),
            _ => dichotomic_projector(&self.angles.alice[j], a.value()).scale(1.0 / m),
        }
    }

    /// Bob's trusted POVM `(1 ± b·σ)/2`.
    pub fn bob_effect(&self, j: usize, b: Trit) -> OperatorMatrix {
        dichotomic_projector(&self.angles.bob[j], b.value())
    }

    /// Largest entrywise gap between the registered marginal and the product
    /// `(K†K)_A ⊗ (K†K)_B`, over every choice pair and readout value.
    pub fn max_reduction_deviation(&self) -> f64 {
        let m = self.choices();
        let mut worst: f64 = 0.0;
        for ja in 0..m {
            for jb in 0..m {
                for a in Trit::ALL {
                    for b in [Trit::Plus, Trit::Minus] {
                        let lhs = self.registered_marginal(ja, a, jb, b);
                        let rhs = self.alice_effect(ja, a).kron(&self.bob_effect(jb, b));
                        worst = worst.max(lhs.max_abs_diff(&rhs));
                    }
                }
            }
        }
        worst
    }
}
